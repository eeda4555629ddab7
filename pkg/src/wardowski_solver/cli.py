"""
Wardowski Solver command line

Batch driver: every subcommand builds one or more experiments (from a YAML
config or from flags), runs them and prints the paths of the written reports.
"""

import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import click
import yaml

from .config import Experiment, build_experiment, load_config, parse_experiment, parse_spec
from .exceptions import ConfigError, ConfigSemanticError, ReportIOError, WardowskiError
from .models import CheckMode
from .metric_space import load_trace_csv
from .pipeline import run_config
from .report import SUMMARY_FILE, format_table, read_summary
from .verifier import extract_witness, propose_eta
from .version import __version__

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_IO = 3


def setup_logger(debug: bool = False) -> logging.Logger:
    """Log to stderr at --debug or WARDOWSKI_LOG level; WARDOWSKI_LOG_FILE adds a file."""
    logger = logging.getLogger("")

    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    if debug:
        level = logging.DEBUG
    else:
        level = logging.getLevelName(os.getenv("WARDOWSKI_LOG", "WARNING").upper())
        if not isinstance(level, int):
            level = logging.WARNING

    handler = logging.StreamHandler(sys.stderr)
    formatter = logging.Formatter(
        "%(asctime)s - %(levelname)s - %(threadName)s - %(name)s:%(lineno)d - %(message)s"
    )
    handler.setFormatter(formatter)
    logger.addHandler(handler)

    log_file_path = os.getenv("WARDOWSKI_LOG_FILE")
    if log_file_path:
        file_handler = logging.FileHandler(log_file_path, mode="w", encoding="utf-8")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    logger.setLevel(level)
    logger.debug("debug: %s, log_file_path: %s", debug, log_file_path)
    return logging.getLogger(__name__)


@dataclass
class Options:
    config: Optional[Path]
    out: Path
    seed: Optional[int]
    fmt: str


@contextmanager
def exit_codes(ctx: click.Context) -> Iterator[None]:
    """Map config errors to exit code 2 and I/O errors to exit code 3."""
    try:
        yield
    except ConfigError as e:
        field = getattr(e, "field", None)
        logger.error("config error%s: %s", f" in {field}" if field else "", e)
        click.echo(f"config error: {e}", err=True)
        ctx.exit(EXIT_CONFIG)
    except (ReportIOError, OSError) as e:
        logger.error("I/O error: %s", e)
        click.echo(f"I/O error: {e}", err=True)
        ctx.exit(EXIT_IO)


def _spec_section(text: str, key: str) -> Dict[str, Any]:
    name, params = parse_spec(text)
    return {key: name, "params": params}


def _flag_experiment(
    opts: Options, stage: List[str], overrides: Dict[str, Any]
) -> List[Experiment]:
    """Experiments from --config (restricted to `stage`) or from flags."""
    if opts.config is not None:
        experiments = load_config(opts.config, opts.seed)
        return [
            build_experiment(
                e.config.model_copy(update={"pipeline": stage}), opts.config.parent
            )
            for e in experiments
        ]
    raw: Dict[str, Any] = {"name": stage[-1], "pipeline": stage}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if opts.seed is not None:
        raw["seed"] = opts.seed
    return [build_experiment(parse_experiment(raw))]


def _run(opts: Options, experiments: Sequence[Experiment]) -> None:
    paths = run_config(
        experiments, opts.out, csv=opts.fmt == "csv", config_path=opts.config, seed=opts.seed
    )
    for path in paths:
        click.echo(str(path))


space_option = click.option("--space", default=None, help="Space spec, e.g. real or euclidean:dim=2.")
map_option = click.option("--map", "map_", default=None, help="Map spec, e.g. scale:factor=0.5.")
F_option = click.option("--F", "F", default=None, help="Wardowski family spec, e.g. neg_power:delta=0.5.")
a_option = click.option("--a", type=float, default=None, help="Contraction constant a > 0.")
start_option = click.option("--start", "starts", multiple=True, help="Start point; repeatable.")
eps_option = click.option("--eps", type=float, default=None, help="Convergence scale.")
max_iter_option = click.option("--max-iter", type=int, default=None, help="Iteration budget.")


def _sections(space: Optional[str], map_: Optional[str], F: Optional[str]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    if space:
        out["space"] = _spec_section(space, "name")
    if map_:
        out["map"] = _spec_section(map_, "name")
    if F:
        out["F"] = _spec_section(F, "family")
    return out


def _starts(starts: Sequence[str]) -> Optional[List[Any]]:
    if not starts:
        return None
    try:
        return [yaml.safe_load(s) for s in starts]
    except yaml.YAMLError as e:
        raise ConfigSemanticError(f"bad --start value: {e}", field="starts") from e


@click.group()
@click.version_option(__version__)
@click.option("--config", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="YAML experiment config.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("reports"), show_default=True, help="Report directory.")
@click.option("--seed", type=int, default=None, help="Replaces every experiment seed.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True, help="csv also writes per-iterate CSV files.")
@click.option("--debug", is_flag=True, help="Enable debug logging.")
@click.pass_context
def main(ctx: click.Context, config: Optional[Path], out: Path, seed: Optional[int], fmt: str, debug: bool):
    """Wardowski (a,F)-contraction solver and verification toolkit."""
    setup_logger(debug)
    ctx.obj = Options(config=config, out=out, seed=seed, fmt=fmt)


@main.command()
@click.pass_context
def run(ctx: click.Context):
    """Run every experiment of --config with its own pipeline."""
    opts: Options = ctx.obj
    with exit_codes(ctx):
        if opts.config is None:
            raise ConfigSemanticError("run needs --config", field="config")
        _run(opts, load_config(opts.config, opts.seed))


@main.command()
@space_option
@map_option
@F_option
@a_option
@start_option
@eps_option
@max_iter_option
@click.option("--k", type=float, default=None, help="Regularity exponent; enables tail-bound certificates.")
@click.option("--beta", type=float, default=None, help="Tail-bound beta.")
@click.pass_context
def solve(ctx, space, map_, F, a, starts, eps, max_iter, k, beta):
    """Picard iteration with certificates."""
    with exit_codes(ctx):
        overrides = dict(_sections(space, map_, F), a=a, starts=_starts(starts), eps=eps, max_iter=max_iter, k=k, beta=beta)
        _run(ctx.obj, _flag_experiment(ctx.obj, ["solve"], overrides))


@main.command()
@space_option
@map_option
@F_option
@a_option
@click.option("--condition", type=click.Choice(["aF", "phi", "strict", "nonexpansive"]), default="aF", show_default=True)
@click.option("--mode", default="sampled:1000:0", show_default=True, help="exhaustive or sampled:N:seed.")
@click.pass_context
def verify(ctx, space, map_, F, a, condition, mode):
    """Check a contraction condition on all or sampled pairs."""
    with exit_codes(ctx):
        try:
            check = CheckMode.parse(mode)
        except ValueError as e:
            raise ConfigSemanticError(str(e), field="mode") from e
        section: Dict[str, Any] = {"condition": condition, "mode": check.kind}
        if check.kind == "sampled":
            section.update(count=check.count, seed=check.seed)
        overrides = dict(_sections(space, map_, F), a=a, verify=section)
        _run(ctx.obj, _flag_experiment(ctx.obj, ["verify"], overrides))


@main.command("derive-phi")
@F_option
@a_option
@click.option("--t", "ts", type=float, multiple=True, help="Evaluation point; repeatable.")
@click.pass_context
def derive_phi_cmd(ctx, F, a, ts):
    """Evaluate phi(t) = sup{s : a + F(s) <= F(t)} on a grid."""
    with exit_codes(ctx):
        overrides = dict(_sections(None, None, F), a=a, phi_grid=list(ts) or None)
        _run(ctx.obj, _flag_experiment(ctx.obj, ["derive-phi"], overrides))


@main.command()
@space_option
@map_option
@start_option
@eps_option
@max_iter_option
@click.pass_context
def classify(ctx, space, map_, starts, eps, max_iter):
    """Picard-operator evidence from several starts."""
    with exit_codes(ctx):
        overrides = dict(_sections(space, map_, None), starts=_starts(starts), eps=eps, max_iter=max_iter)
        _run(ctx.obj, _flag_experiment(ctx.obj, ["solve", "classify"], overrides))


@main.command()
@click.option("--trace-file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="CSV, one point per row.")
@click.option("--eta", type=float, default=None, help="Witness scale; proposed from --delta when absent.")
@click.option("--delta", default="", help="Comma-separated excluded scales.")
@click.option("--j-max", type=int, default=None, help="Last rank to extract.")
@click.pass_context
def witness(ctx, trace_file, eta, delta, j_max):
    """Extract m(j), n(j) rank sequences from a recorded trace."""
    opts: Options = ctx.obj
    with exit_codes(ctx):
        try:
            excluded = [float(v) for v in delta.split(",") if v.strip()]
        except ValueError as e:
            raise ConfigSemanticError(f"bad --delta: {e}", field="delta") from e
        trace = load_trace_csv(trace_file)
        if eta is None:
            positive = [r for r in trace.rho if r > 0]
            if not positive:
                raise ConfigSemanticError("trace has no positive steps", field="trace_file")
            spread = max(trace.space.dists_from(trace.points[0], trace.points))
            eta = propose_eta(excluded, min(positive), max(spread, max(positive)))
            logger.info("proposed eta=%g", eta)
        try:
            result = extract_witness(trace, eta, excluded, j_max)
        except WardowskiError as e:
            raise ConfigSemanticError(str(e), field="eta") from e
        opts.out.mkdir(parents=True, exist_ok=True)
        path = opts.out / "witness.json"
        path.write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")
        click.echo(str(path))


@main.command()
@click.option("--summary", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Summary file; defaults to OUT/summary.json.")
@click.pass_context
def report(ctx, summary):
    """Print a verdict table from a summary file."""
    opts: Options = ctx.obj
    with exit_codes(ctx):
        summaries = read_summary(summary or opts.out / SUMMARY_FILE)
        click.echo(format_table(summaries))
