"""Scenarios, batch experiments, record files and the command line."""

from .experiment import (
    CSV_HEADER,
    ExperimentSpec,
    FitError,
    RunRecord,
    cells,
    emit,
    execute_run,
    load_records,
    load_spec,
    run_batch,
    scaling_fit,
    summarize,
)
from .scenarios import (
    all_in_one,
    from_file,
    scenario,
    two_bin_perturbation,
    two_choice_placement,
    uniform_random,
)

__all__ = [
    "CSV_HEADER",
    "ExperimentSpec",
    "FitError",
    "RunRecord",
    "cells",
    "emit",
    "execute_run",
    "load_records",
    "load_spec",
    "run_batch",
    "scaling_fit",
    "summarize",
    "all_in_one",
    "from_file",
    "scenario",
    "two_bin_perturbation",
    "two_choice_placement",
    "uniform_random",
]
