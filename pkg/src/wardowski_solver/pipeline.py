"""
Experiment pipeline: verify -> derive-phi -> solve -> classify, as configured.

Experiments are independent and run concurrently in worker threads; their
results come back to a single collector that writes every report file.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import anyio

from .comparison import ComparisonFunction, derive_phi_certified
from .config import Experiment
from .exceptions import RankNotFound, WardowskiError
from .models import ConditionKind, ContractionReport, ExperimentSummary, TailBoundCertificate
from .report import write_metadata, write_phi_csv, write_run_csv, write_summary
from .solver import (
    PicardRun,
    classify_operator,
    hyers_ulam_certificate,
    hyers_ulam_profile,
    picard_iterate,
    tail_bound_regular,
    telescopic_certificate,
    verdict_from_runs,
)
from .verifier import check_aF_contractive, check_phi_contractive, check_strict_and_nonexpansive

logger = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    """Summary plus the in-memory runs the CSV writers need."""

    experiment: Experiment
    summary: ExperimentSummary
    runs: List[PicardRun] = field(default_factory=list)
    hyers_ulam: Dict[int, List[Optional[float]]] = field(default_factory=dict)
    tails: Dict[int, TailBoundCertificate] = field(default_factory=dict)


def banach_phi(experiment: Experiment) -> Optional[ComparisonFunction]:
    """phi(t) = e^-a t when F is ln; no closed form otherwise."""
    if experiment.F.name == "log":
        return ComparisonFunction.linear(math.exp(-experiment.config.a))
    return None


def _verify(experiment: Experiment) -> List[ContractionReport]:
    config = experiment.config
    mode = config.check_mode()
    condition = config.verify.condition
    if condition is ConditionKind.AF:
        return [check_aF_contractive(experiment.T, experiment.F, config.a, mode)]
    if condition is ConditionKind.PHI:
        phi = ComparisonFunction.derived(experiment.F, config.a)
        return [check_phi_contractive(experiment.T, phi, mode)]
    return list(check_strict_and_nonexpansive(experiment.T, mode))


def _solve(experiment: Experiment, result: ExperimentResult) -> None:
    config = experiment.config
    phi = banach_phi(experiment)
    for i, x0 in enumerate(experiment.starts):
        run = picard_iterate(experiment.T, x0, config.eps, config.max_iter)
        if len(run.trace) >= 2:
            run.certificates.append(telescopic_certificate(run))
        if config.k is not None:
            try:
                tail = tail_bound_regular(run, experiment.F, config.a, config.k, config.beta)
                run.certificates.append(tail)
                result.tails[i] = tail
            except RankNotFound as e:
                logger.warning("%s run %d: tail bound withheld: %s", config.name, i, e)
        if phi is not None:
            try:
                run.certificates.append(hyers_ulam_certificate(run, phi))
                result.hyers_ulam[i] = hyers_ulam_profile(run, phi)
            except WardowskiError as e:
                logger.warning("%s run %d: Hyers-Ulam bound withheld: %s", config.name, i, e)
        result.runs.append(run)


def run_experiment(experiment: Experiment) -> ExperimentResult:
    """Run the configured stages in order; a failing stage ends the experiment."""
    config = experiment.config
    summary = ExperimentSummary(name=config.name)
    result = ExperimentResult(experiment=experiment, summary=summary)
    try:
        for stage in config.pipeline:
            logger.info("%s: %s", config.name, stage)
            if stage == "verify":
                summary.verify = _verify(experiment)
            elif stage == "derive-phi":
                summary.phi = [derive_phi_certified(experiment.F, config.a, t) for t in config.phi_grid]
            elif stage == "solve":
                _solve(experiment, result)
                summary.runs = [run.to_summary() for run in result.runs]
            elif stage == "classify":
                if result.runs:
                    verdict = verdict_from_runs(experiment.T, result.runs, config.eps)
                else:
                    verdict = classify_operator(
                        experiment.T, experiment.starts, config.eps, config.max_iter
                    )
                summary.classification = verdict
                summary.classification_label = verdict.label
    except WardowskiError as e:
        logger.error("experiment %s failed", config.name, exc_info=True)
        summary.error = f"{type(e).__name__}: {e}"
    return result


async def run_experiments(experiments: Sequence[Experiment]) -> List[ExperimentResult]:
    """All experiments concurrently; results in config order."""
    results: List[Optional[ExperimentResult]] = [None] * len(experiments)

    async def _one(i: int, experiment: Experiment) -> None:
        results[i] = await anyio.to_thread.run_sync(run_experiment, experiment)

    async with anyio.create_task_group() as tg:
        for i, experiment in enumerate(experiments):
            tg.start_soon(_one, i, experiment)
    return [r for r in results if r is not None]


def collect(
    results: Sequence[ExperimentResult],
    out_dir: Path,
    csv: bool = False,
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
) -> List[Path]:
    """Write the summary, the metadata file and, when asked, CSV files."""
    out_dir = Path(out_dir)
    paths = [write_summary(out_dir, [r.summary for r in results])]
    paths.append(write_metadata(out_dir, config_path, seed))
    for result in results:
        name = result.summary.name
        if not (csv or result.experiment.config.csv):
            continue
        for i, run in enumerate(result.runs):
            paths.append(
                write_run_csv(
                    out_dir / f"{name}_run{i}.csv",
                    run,
                    result.experiment.F,
                    result.hyers_ulam.get(i),
                    result.tails.get(i),
                )
            )
        if result.summary.phi:
            paths.append(write_phi_csv(out_dir / f"{name}_phi.csv", result.summary.phi))
    return paths


def run_config(
    experiments: Sequence[Experiment],
    out_dir: Path,
    csv: bool = False,
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
) -> List[Path]:
    """Run every experiment and write the reports; returns the written paths."""
    results = anyio.run(run_experiments, experiments)
    failed = [r.summary.name for r in results if r.summary.error]
    if failed:
        logger.warning("%d experiment(s) failed: %s", len(failed), ", ".join(failed))
    return collect(results, out_dir, csv, config_path, seed)
