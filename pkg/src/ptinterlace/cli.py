"""Command-line entry point: ``ptinterlace <subcommand> [--config PATH] ...``.

Exit codes: 0 success, 2 an interlacing check failed, 1 computational or
configuration error.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .report import (
    ConfigError,
    PipelineError,
    RunConfig,
    emit_outputs,
    eigenvalues_csv,
    load_config,
    run_pipeline,
)

EXIT_OK, EXIT_ERROR, EXIT_INTERLACE = 0, 1, 2

DEFAULT_MONOMIAL = {"kind": "monomial", "N": 3}
DEFAULT_QES = {"kind": "qes", "a": 10.0, "b": 2.0, "J": 21}


def _common(f):
    f = click.option("--threads", type=int, default=None, help="Worker threads for per-k work.")(f)
    f = click.option("--k-max", "k_max", type=int, default=None, help="Number of eigenpairs (monomial families).")(f)
    f = click.option("--out", "out", type=click.Path(file_okay=False), default=None, help="Output directory.")(f)
    f = click.option("--config", "config", type=click.Path(exists=True, dir_okay=False), default=None, help="YAML run configuration.")(f)
    return f


def _resolve(config, out, k_max, threads, default) -> RunConfig:
    cfg = load_config(config) if config else RunConfig(**default)
    changes = {}
    if out is not None:
        changes["output"] = out
    if k_max is not None:
        changes["k_max"] = k_max
    if threads is not None:
        changes["threads"] = threads
    return replace(cfg, **changes) if changes else cfg


def _fail(exc) -> None:
    if isinstance(exc, PipelineError):
        payload = exc.as_dict()
    else:
        payload = {"status": "error", "error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    sys.exit(EXIT_ERROR)


def _run(stages, config, out, k_max, threads, default=DEFAULT_MONOMIAL, require_interlace=False):
    try:
        cfg = _resolve(config, out, k_max, threads, default)
        report = run_pipeline(cfg, stages)
        written = emit_outputs(report, cfg.output)
    except (ConfigError, PipelineError, OSError) as exc:
        _fail(exc)
    for p in written:
        click.echo(f"wrote {p}")
    if report.interlace:
        bad = [r["pair"] for r in report.interlace if not r["pass"]]
        click.echo(f"interlacing: {len(report.interlace) - len(bad)}/{len(report.interlace)} pairs pass")
        if bad:
            click.echo(f"failing pairs: {bad}")
            sys.exit(EXIT_INTERLACE)
    return report


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Spectra, eigenfunction zeros and complex interlacing for PT-symmetric potentials."""


@main.command()
@_common
def spectrum(config, out, k_max, threads):
    """Eigenvalues by two-sided shooting (or the QES algebraic sector)."""
    report = _run(("spectrum",), config, out, k_max, threads)
    click.echo(eigenvalues_csv(report), nl=False)


@main.command()
@_common
def zeros(config, out, k_max, threads):
    """Eigenvalues and the zeros of their eigenfunctions."""
    _run(("spectrum", "zeros"), config, out, k_max, threads)


@main.command()
@_common
def qes(config, out, k_max, threads):
    """QES sector: energies, polynomial zeros and branch-cut classification."""
    report = _run(("spectrum", "zeros", "interlace"), config, out, k_max, threads, DEFAULT_QES)
    counts = report.fits.get("branch_cut_counts", {}).get("value", {})
    if counts:
        click.echo("irrelevant zeros per k: " + " ".join(f"{k}:{v}" for k, v in counts.items()))


@main.command()
@_common
def wkb(config, out, k_max, threads):
    """WKB growth and turning-point drift fits."""
    report = _run(("wkb",), config, out, k_max, threads)
    for name in ("growth", "drift"):
        if name in report.fits:
            click.echo(f"{name}: {json.dumps(report.fits[name], sort_keys=True, default=str)}")


@main.command()
@_common
def interlace(config, out, k_max, threads):
    """Zeros plus the complex interlacing check (exit code 2 on failure)."""
    _run(("spectrum", "zeros", "interlace"), config, out, k_max, threads)


@main.command()
@_common
def report(config, out, k_max, threads):
    """Full pipeline: tables, fits, interlacing and SVG figures."""
    _run(("spectrum", "zeros", "interlace", "wkb"), config, out, k_max, threads)


if __name__ == "__main__":
    main()
