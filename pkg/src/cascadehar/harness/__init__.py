"""Configuration, data, evaluation protocol and CLI around the cascade engine."""

from .config import RunConfig, load_config
from .data import ActivityProfile, SynthParams, ingest, synth, write_dataset
from .evaluate import report_savings, run_train_eval

__all__ = [
    "ActivityProfile",
    "RunConfig",
    "SynthParams",
    "ingest",
    "load_config",
    "report_savings",
    "run_train_eval",
    "synth",
    "write_dataset",
]
