from __future__ import annotations

import logging
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import TrainingError
from ..core.types import Prediction
from .base import check_labels, to_predictions
from .vocabulary import Vocabulary

logger = logging.getLogger(__name__)


class MultinomialNB:
    """Multinomial Naive Bayes over token-count vectors with add-alpha smoothing.

    Column 0 of every count matrix is the unknown-token slot and never
    contributes evidence.
    """

    def __init__(self, class_count: int, alpha: float = 1.0):
        self.class_count = class_count
        self.alpha = alpha
        self.class_log_prior: Optional[np.ndarray] = None
        self.feature_log_prob: Optional[np.ndarray] = None

    def fit(self, counts: np.ndarray, y: Sequence[int]) -> "MultinomialNB":
        y = check_labels(np.asarray(y), self.class_count)
        if len(y) == 0:
            raise TrainingError("naive Bayes needs at least one training bag")
        counts = np.asarray(counts, dtype=np.float64)[:, 1:]
        per_class = np.zeros((self.class_count, counts.shape[1]))
        np.add.at(per_class, y, counts)
        class_n = np.bincount(y, minlength=self.class_count).astype(np.float64)
        with np.errstate(divide="ignore"):
            self.class_log_prior = np.log(class_n / class_n.sum())
        smoothed = per_class + self.alpha
        denom = smoothed.sum(axis=1, keepdims=True)
        if counts.shape[1] == 0:
            self.feature_log_prob = np.zeros((self.class_count, 0))
        else:
            self.feature_log_prob = np.log(smoothed) - np.log(denom)
        return self

    def joint_log_likelihood(self, counts: np.ndarray) -> np.ndarray:
        if self.class_log_prior is None or self.feature_log_prob is None:
            raise TrainingError("naive Bayes model is not trained")
        counts = np.asarray(counts, dtype=np.float64)[:, 1:]
        return counts @ self.feature_log_prob.T + self.class_log_prior

    def predict_proba(self, counts: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(counts)
        jll = jll - jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, counts: np.ndarray) -> List[Prediction]:
        return to_predictions(self.predict_proba(counts))

    def get_state(self) -> Dict[str, Any]:
        return {
            "class_count": self.class_count,
            "alpha": self.alpha,
            "class_log_prior": self.class_log_prior,
            "feature_log_prob": self.feature_log_prob,
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "MultinomialNB":
        model = cls(int(state["class_count"]), float(state["alpha"]))
        model.class_log_prior = np.asarray(state["class_log_prior"])
        model.feature_log_prob = np.asarray(state["feature_log_prob"])
        return model


def nbm_train(bags: Sequence[Iterable[str]], labels: Sequence[int], class_count: int,
              alpha: float = 1.0) -> Tuple[MultinomialNB, Vocabulary]:
    """Fit a vocabulary and a naive Bayes model on one bag type."""
    bags = [list(b) for b in bags]
    if not bags:
        raise TrainingError("naive Bayes needs at least one training bag")
    vocab = Vocabulary.build(bags)
    model = MultinomialNB(class_count, alpha).fit(vocab.count_matrix(bags), labels)
    logger.debug("naive Bayes trained on %d bags, vocabulary %d", len(bags), len(vocab) - 1)
    return model, vocab


def nbm_predict(model: MultinomialNB, vocab: Vocabulary, bag: Iterable[str]) -> Prediction:
    return model.predict(vocab.count_vector(bag)[None, :])[0]


class BagNaiveBayes:
    """Naive Bayes bundled with the vocabulary of the bag type it was trained on."""

    def __init__(self, class_count: int, alpha: float = 1.0):
        self.class_count = class_count
        self.alpha = alpha
        self.vocabulary = Vocabulary()
        self.model = MultinomialNB(class_count, alpha)

    def fit(self, bags: Sequence[Iterable[str]], labels: Sequence[int]) -> "BagNaiveBayes":
        self.model, self.vocabulary = nbm_train(bags, labels, self.class_count, self.alpha)
        return self

    def predict_proba(self, bags: Sequence[Iterable[str]]) -> np.ndarray:
        return self.model.predict_proba(self.vocabulary.count_matrix([list(b) for b in bags]))

    def predict(self, bags: Sequence[Iterable[str]]) -> List[Prediction]:
        return to_predictions(self.predict_proba(bags))

    def get_state(self) -> Dict[str, Any]:
        return {"vocabulary": self.vocabulary.get_state(), "model": self.model.get_state()}

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "BagNaiveBayes":
        model = MultinomialNB.from_state(state["model"])
        bag_model = cls(model.class_count, model.alpha)
        bag_model.model = model
        bag_model.vocabulary = Vocabulary.from_state(state["vocabulary"])
        return bag_model
