from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

from .core.errors import IotIdError, UsageError
from .core.types import RunConfig, Settings
from .evaluation.periods import format_periods, parse_periods
from .features.store import SCHEMAS
from .models.registry import MODEL_KINDS
from .pipeline import run_pipeline
from .stages.config_stage import load_and_validate_config
from .stages.evaluate_stage import evaluate
from .stages.extract_stage import extract
from .stages.ingest_stage import ingest
from .stages.report_stage import report
from .stages.synth_stage import synth
from .stages.train_stage import train
from .utils.log import add_run_log, configure_logging

logger = logging.getLogger(__name__)

SCHEMA_CHOICES = sorted(SCHEMAS)


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so bad flags map to exit code 1."""

    def error(self, message: str) -> None:
        raise UsageError(message)


def _settings(args: argparse.Namespace) -> Settings:
    settings = load_and_validate_config(args.config)
    if args.seed is not None:
        settings = replace(settings, seed=args.seed)
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        settings = replace(settings, workers=args.workers, tree=replace(settings.tree, workers=args.workers))
    if args.week_origin is not None:
        settings = replace(settings, evaluation=replace(settings.evaluation, week_origin=args.week_origin))
    return settings


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="Path to config.yaml (default: ./config.yaml if present)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--week-origin", type=float, default=None, help="Epoch seconds of week 1's start")
    p.add_argument("--force", action="store_true", help="Overwrite existing outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iotid", description="IoT device identification and model-aging toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ingest", help="Decode pcaps into packet/DNS/TLS stores")
    p.add_argument("pcaps", nargs="+")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="Store directory")
    _common(p)

    p = sub.add_parser("extract", help="Build feature files from an ingest store")
    p.add_argument("--store", required=True)
    p.add_argument("--schema", default="all", help=f"One of {', '.join(SCHEMA_CHOICES)} or 'all'")
    p.add_argument("--out", default=None, help="Feature directory (default: the store)")
    _common(p)

    p = sub.add_parser("train", help="Train one model on one training period")
    p.add_argument("--store", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--model", required=True, help=f"One of {', '.join(MODEL_KINDS)}")
    p.add_argument("--periods", default=None)
    p.add_argument("--period", default=None, help="Label of the training period (default: the first)")
    p.add_argument("--out", required=True, help="Model file")
    _common(p)

    p = sub.add_parser("evaluate", help="Weekly F1 of models trained per period")
    p.add_argument("--store", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--model-path", default=None, help="Score a saved model instead of training")
    p.add_argument("--periods", default=None)
    p.add_argument("--out", required=True, help="Report directory")
    _common(p)

    p = sub.add_parser("report", help="Merge evaluation reports into the degradation table")
    p.add_argument("reports", nargs="+", help="Report JSON files or directories")
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("synth", help="Generate a synthetic capture from a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("pipeline", help="synth, ingest, extract, evaluate and report in one run")
    p.add_argument("--scenario", required=True)
    p.add_argument("--periods", default=None)
    p.add_argument("--out", required=True)
    _common(p)
    return parser


def _schemas(value: str) -> Optional[List[str]]:
    if value == "all":
        return None
    if value not in SCHEMAS:
        raise UsageError(f"unknown schema '{value}' (valid schemas: {', '.join(SCHEMA_CHOICES)})")
    return [value]


def _run_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    """Flags of one invocation over the loaded settings; flags win."""
    if args.command == "ingest":
        inputs = list(args.pcaps)
    elif args.command == "report":
        inputs = list(args.reports)
    elif args.command in ("synth", "pipeline"):
        inputs = [args.scenario]
    else:
        inputs = [args.store]
    schema = getattr(args, "schema", None)
    periods = getattr(args, "periods", None)
    return RunConfig(
        input_paths=inputs,
        output_dir=getattr(args, "out", None) or args.store,
        manifest_path=getattr(args, "manifest", None),
        schema=None if schema == "all" else schema,
        model_kind=getattr(args, "model", None),
        periods=parse_periods(periods) if periods else None,
        seed=settings.seed,
        workers=settings.workers,
        force=args.force,
    )


def _dispatch(args: argparse.Namespace) -> None:
    settings = _settings(args)
    run = _run_config(args, settings)
    periods = format_periods(run.periods) if run.periods else None
    if args.command == "ingest":
        ingest(run.input_paths, run.manifest_path, run.output_dir, force=run.force)
    elif args.command == "extract":
        extract(run.input_paths[0], _schemas(args.schema), settings=settings, force=run.force,
                out_dir=run.output_dir)
    elif args.command == "train":
        train(run.input_paths[0], run.schema, run.model_kind, run.output_dir, settings=settings, periods=periods,
              period_label=args.period, seed=run.seed, force=run.force)
    elif args.command == "evaluate":
        evaluate(run.input_paths[0], run.output_dir, schema=run.schema, kind=run.model_kind, settings=settings,
                 periods=periods, seed=run.seed, model_path=args.model_path,
                 week_origin=args.week_origin, force=run.force)
    elif args.command == "report":
        report(run.input_paths, run.output_dir, manifest_path=run.manifest_path, force=run.force)
    elif args.command == "synth":
        synth(run.input_paths[0], run.output_dir, seed=args.seed, force=run.force)
    elif args.command == "pipeline":
        run_pipeline(scenario_path=run.input_paths[0], outputs_dir=run.output_dir, config_path=args.config,
                     periods=periods, seed=args.seed, force=run.force)


def _log_dir(args: argparse.Namespace) -> Optional[str]:
    out = getattr(args, "out", None)
    if out is None:
        return getattr(args, "store", None)
    return os.path.dirname(os.path.abspath(out)) if args.command == "train" else out


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging()
    handler = None
    try:
        args = build_parser().parse_args(argv)
        log_dir = _log_dir(args)
        if log_dir:
            handler = add_run_log(log_dir)
        _dispatch(args)
        return 0
    except IotIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        logger.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    finally:
        if handler is not None:
            logging.getLogger().removeHandler(handler)
            handler.close()


if __name__ == "__main__":
    raise SystemExit(main())
