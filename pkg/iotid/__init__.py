__all__ = ["run_pipeline"]

from .pipeline import run_pipeline
