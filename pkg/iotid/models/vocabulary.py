from __future__ import annotations

from typing import Dict, Iterable, List, Sequence

import numpy as np

UNKNOWN = 0


class Vocabulary:
    """Token → index map for one bag type; index 0 is reserved for unknown tokens."""

    def __init__(self, tokens: Sequence[str] = ()):
        self._tokens: List[str] = ["<unk>"]
        self._index: Dict[str, int] = {}
        for token in tokens:
            if token not in self._index:
                self._index[token] = len(self._tokens)
                self._tokens.append(token)

    @classmethod
    def build(cls, bags: Iterable[Iterable[str]]) -> "Vocabulary":
        """Vocabulary over every non-empty token in the training bags, sorted for stability."""
        seen = {str(t) for bag in bags for t in bag if str(t)}
        return cls(sorted(seen))

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index_of(self, token: str) -> int:
        return self._index.get(token, UNKNOWN)

    def token_at(self, index: int) -> str:
        return self._tokens[index]

    def count_vector(self, bag: Iterable[str]) -> np.ndarray:
        """Token counts for one bag; unknown tokens land in slot 0."""
        counts = np.zeros(len(self._tokens), dtype=np.float64)
        for token in bag:
            counts[self.index_of(str(token))] += 1.0
        return counts

    def count_matrix(self, bags: Sequence[Iterable[str]]) -> np.ndarray:
        if not bags:
            return np.zeros((0, len(self._tokens)), dtype=np.float64)
        return np.vstack([self.count_vector(b) for b in bags])

    def get_state(self) -> List[str]:
        return list(self._tokens[1:])

    @classmethod
    def from_state(cls, state: Sequence[str]) -> "Vocabulary":
        return cls(list(state))
