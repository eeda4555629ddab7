"""
Report writers: the JSON summary, the metadata file and per-iterate CSVs.

The summary is byte-identical for identical inputs: keys are sorted and the
only wall-clock value lives in `metadata.json`.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, List, Optional, Sequence

from pydantic import TypeAdapter, ValidationError

from .exceptions import ReportIOError
from .models import ExperimentSummary, PhiDerivation, TailBoundCertificate
from .solver import PicardRun, plain
from .version import __version__
from .wardowski import WardowskiFunction

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
METADATA_FILE = "metadata.json"
RUN_COLUMNS = ["n", "x_n", "rho_n", "F_rho_n", "tele_sum", "hyers_ulam_bound", "tail_bound"]
PHI_COLUMNS = ["t", "phi", "self_inequality", "residual"]

_summaries = TypeAdapter(List[ExperimentSummary])


def _cell(value: Optional[float]) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return repr(float(value))


def _finite_json(value: Any) -> Any:
    """Non-finite floats as the strings "inf", "-inf" and "nan"."""
    if isinstance(value, float) and not math.isfinite(value):
        return _cell(value) if not math.isnan(value) else "nan"
    if isinstance(value, dict):
        return {k: _finite_json(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_finite_json(v) for v in value]
    return value


def summary_json(summaries: Sequence[ExperimentSummary]) -> str:
    payload = [_finite_json(s.model_dump(mode="python")) for s in summaries]
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_summary(out_dir: Path, summaries: Sequence[ExperimentSummary]) -> Path:
    path = Path(out_dir) / SUMMARY_FILE
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(summary_json(summaries), encoding="utf-8")
    except OSError as e:
        raise ReportIOError(f"cannot write {path}: {e}") from e
    logger.info("wrote %s", path)
    return path


def write_metadata(out_dir: Path, config_path: Optional[Path], seed: Optional[int]) -> Path:
    path = Path(out_dir) / METADATA_FILE
    meta = {
        "created": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
        "config": None if config_path is None else str(config_path),
        "seed_override": seed,
    }
    try:
        path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise ReportIOError(f"cannot write {path}: {e}") from e
    return path


def read_summary(path: Path) -> List[ExperimentSummary]:
    """
    Raises:
        ReportIOError: Unreadable file or not a summary written by this tool.
    """
    try:
        return _summaries.validate_json(Path(path).read_bytes())
    except OSError as e:
        raise ReportIOError(f"cannot read {path}: {e}") from e
    except ValidationError as e:
        raise ReportIOError(f"{path} is not a summary file: {e.error_count()} error(s)") from e


def write_run_csv(
    path: Path,
    run: PicardRun,
    F: WardowskiFunction,
    hyers_ulam: Optional[Sequence[Optional[float]]] = None,
    tail: Optional[TailBoundCertificate] = None,
) -> Path:
    """
    One row per recorded rho_n: the iterate, rho_n, F(rho_n), the running tele
    sum, the Hyers-Ulam bound Phi(rho_n) and the tail bound (beta/(a n))^(1/k)
    for n at or beyond the certified rank. Blank cells mean no certificate.
    """
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(RUN_COLUMNS)
            running = 0.0
            for n, r in enumerate(run.trace.rho):
                running += r
                bound = None
                if tail is not None and n >= max(tail.from_rank, 1) and n <= tail.checked_until:
                    bound = (tail.beta / (tail.a * n)) ** (1.0 / tail.k)
                writer.writerow(
                    [
                        n,
                        json.dumps(plain(run.trace.points[n])),
                        _cell(r),
                        _cell(F(r).to_float()),
                        _cell(running),
                        _cell(hyers_ulam[n] if hyers_ulam else None),
                        _cell(bound),
                    ]
                )
    except OSError as e:
        raise ReportIOError(f"cannot write {path}: {e}") from e
    return Path(path)


def write_phi_csv(path: Path, rows: Sequence[PhiDerivation]) -> Path:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(PHI_COLUMNS)
            for row in rows:
                writer.writerow(
                    [_cell(row.t), _cell(row.phi), str(row.self_inequality).lower(), _cell(row.residual)]
                )
    except OSError as e:
        raise ReportIOError(f"cannot write {path}: {e}") from e
    return Path(path)


def format_table(summaries: Sequence[ExperimentSummary]) -> str:
    """Compact verdict table for the `report` subcommand."""
    header = ("experiment", "verify", "runs", "classification")
    rows = [header]
    for s in summaries:
        verify = ", ".join(
            f"{r.condition.value}:{'holds' if r.holds else 'fails'}" for r in s.verify
        ) or "-"
        runs = ", ".join(r.status.value for r in s.runs) or "-"
        label = s.error and f"error: {s.error}" or s.classification_label or "-"
        rows.append((s.name, verify, runs, label))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines)
