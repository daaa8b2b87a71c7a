"""Pipeline orchestration and output emission (CSV, JSON, SVG).

A run is described by a YAML file:

    problem:
      kind: monomial        # monomial | qes | large-n-surrogate
      N: 3                  # monomial / large-n-surrogate
      # a: 10.0             # qes
      # b: 2.0              # qes
      # J: 21               # qes
    example: ix3            # label written into every table row
    k_max: 6                # monomial families: number of eigenpairs (k = 0..k_max-1)
    tolerances:
      rel: 1.0e-11          # relative integration tolerance
      abs: 1.0e-300
    grid:
      nx: 201
      ny: 101
      pad: 0.2              # box margin in units of |x_+ - x_-|
    scaling: auto           # auto | cubic | turning-magnitude | large-n
    wkb:
      k_min: 10             # window of the WKB growth and drift fits
      k_max: 40
    output: out
    threads: 1

Every key is optional except ``problem.kind``; unknown keys are rejected.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .complex_ode import Tolerances
from .errors import PTInterlaceError
from .interlace import (
    CubicScale,
    LargeN,
    TurningMagnitude,
    apply_scaling,
    arch_intercept,
    band_metric,
    check_interlacing,
    divergence_check,
    shift_metric,
)
from .potentials import Monomial, QESQuartic, turning_points
from .qes import classify_zeros, qes_spectrum, qes_zeros, refine_qes_state
from .shooting import WedgePair, find_eigenvalues, wkb_energy_of
from .wkb import (
    fit_power_law,
    local_exponents,
    richardson_extrapolate,
    turning_point_drift,
    wkb_eigenvalue,
)
from .zeros import default_region, find_zeros

SCHEMA_VERSION = "1.0"
ZEROS_HEADER = ["example", "k", "zero_index", "re_x", "im_x", "re_z", "im_z", "relevant"]
EIGEN_HEADER = ["example", "k", "energy", "energy_wkb", "residual"]
KINDS = ("monomial", "qes", "large-n-surrogate")
SCALINGS = ("auto", "cubic", "turning-magnitude", "large-n")
STAGES = ("spectrum", "zeros", "interlace", "wkb")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSettings:
    nx: int = 201
    ny: int = 101
    pad: float = 0.2


@dataclass(frozen=True)
class WKBSettings:
    k_min: int = 10
    k_max: int = 40


@dataclass(frozen=True)
class RunConfig:
    kind: str
    N: int | None = None
    a: float | None = None
    b: float | None = None
    J: int | None = None
    example: str = ""
    k_max: int | None = None
    tolerances: Tolerances = Tolerances()
    grid: GridSettings = GridSettings()
    scaling: str = "auto"
    wkb: WKBSettings = WKBSettings()
    output: str = "out"
    threads: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"problem.kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "qes":
            if None in (self.a, self.b, self.J):
                raise ConfigError("qes needs a, b and J")
            QESQuartic(self.a, self.b, self.J)
        else:
            if self.N is None:
                raise ConfigError(f"{self.kind} needs N")
            Monomial(self.N)
        if self.scaling not in SCALINGS:
            raise ConfigError(f"scaling must be one of {SCALINGS}, got {self.scaling!r}")
        if self.k_max is not None and self.k_max < 1:
            raise ConfigError("k_max must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.grid.nx < 8 or self.grid.ny < 8 or not self.grid.pad >= 0:
            raise ConfigError("grid needs nx, ny >= 8 and pad >= 0")
        if not 1 <= self.wkb.k_min < self.wkb.k_max or self.wkb.k_max - self.wkb.k_min < 4:
            raise ConfigError("wkb window needs 1 <= k_min and at least 5 levels")

    @property
    def spec(self):
        if self.kind == "qes":
            return QESQuartic(self.a, self.b, self.J)
        return Monomial(self.N)

    @property
    def label(self) -> str:
        return self.example or self.spec.label

    @property
    def n_states(self) -> int:
        if self.kind == "qes":
            return self.J
        if self.k_max is not None:
            return self.k_max
        return 16 if self.kind == "large-n-surrogate" else 6


_PROBLEM_KEYS = {"kind", "N", "a", "b", "J"}
_TOP_KEYS = {"problem", "example", "k_max", "tolerances", "grid", "scaling", "wkb", "output", "threads"}


def _check_keys(section: str, got: dict, allowed):
    if not isinstance(got, dict):
        raise ConfigError(f"{section or 'config'} must be a mapping")
    extra = set(got) - set(allowed)
    if extra:
        where = f" in {section}" if section else ""
        raise ConfigError(f"unknown key(s){where}: {sorted(extra)}")


def config_from_dict(data: dict) -> RunConfig:
    _check_keys("", data, _TOP_KEYS)
    if "problem" not in data:
        raise ConfigError("missing 'problem' section")
    prob = data["problem"]
    _check_keys("problem", prob, _PROBLEM_KEYS)
    tol = data.get("tolerances", {}) or {}
    _check_keys("tolerances", tol, {f.name for f in fields(Tolerances)})
    grid = data.get("grid", {}) or {}
    _check_keys("grid", grid, {f.name for f in fields(GridSettings)})
    wkb = data.get("wkb", {}) or {}
    _check_keys("wkb", wkb, {f.name for f in fields(WKBSettings)})
    try:
        return RunConfig(
            kind=prob.get("kind"),
            N=prob.get("N"),
            a=None if prob.get("a") is None else float(prob["a"]),
            b=None if prob.get("b") is None else float(prob["b"]),
            J=prob.get("J"),
            example=str(data.get("example", "")),
            k_max=data.get("k_max"),
            tolerances=Tolerances(**{k: float(v) for k, v in tol.items()}),
            grid=GridSettings(**grid),
            scaling=data.get("scaling", "auto"),
            wkb=WKBSettings(**wkb),
            output=str(data.get("output", "out")),
            threads=int(data.get("threads", 1)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return config_from_dict(data)


@dataclass
class EigenRow:
    k: int
    energy: float
    energy_wkb: float
    residual: float


@dataclass
class ZeroRow:
    k: int
    zero_index: int
    x: complex
    z: complex
    relevant: bool


@dataclass
class RunReport:
    example: str
    config: RunConfig
    eigenvalues: list[EigenRow] = field(default_factory=list)
    zeros: list[ZeroRow] = field(default_factory=list)
    interlace: list[dict] = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    bands: dict = field(default_factory=dict)
    shift: dict = field(default_factory=dict)
    conventions: dict = field(default_factory=dict)

    @property
    def interlace_passed(self) -> bool:
        return all(r["pass"] for r in self.interlace)


class PipelineError(RuntimeError):
    """Failure inside the pipeline, tagged with the module and operation."""

    def __init__(self, module: str, operation: str, cause: BaseException):
        super().__init__(f"{module}.{operation}: {type(cause).__name__}: {cause}")
        self.module = module
        self.operation = operation
        self.cause = cause

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "status": "error",
            "module": self.module,
            "operation": self.operation,
            "error": type(self.cause).__name__,
            "message": str(self.cause),
        }


def _stage(module: str, operation: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (PTInterlaceError, ArithmeticError, ValueError, RuntimeError) as exc:
        raise PipelineError(module, operation, exc) from exc


def _claim(value, expected=None, tolerance=None, provenance="computed", note=None) -> dict:
    out = {"value": value, "provenance": provenance}
    if expected is not None:
        out["expected"] = expected
    if tolerance is not None:
        out["tolerance"] = tolerance
    if note:
        out["note"] = note
    return out


def _scaling_choice(config: RunConfig) -> str:
    choice = config.scaling
    if choice == "auto":
        choice = {"qes": "turning-magnitude", "large-n-surrogate": "large-n"}.get(config.kind)
        if choice is None:
            choice = "cubic" if config.N == 3 else "turning-magnitude"
    if choice == "large-n" and config.kind == "qes":
        raise ConfigError("large-n scaling applies to monomial potentials only")
    return choice


def _scaling_for(config: RunConfig, E: float, spec):
    choice = _scaling_choice(config)
    if choice == "cubic":
        return CubicScale(E)
    if choice == "large-n":
        return LargeN(config.N, E)
    return TurningMagnitude(turning_points(spec, E).magnitude)


_SCALING_NAMES = {
    "cubic": "cubic: z = x E^(-1/3)",
    "large-n": "large-n: z = (x E^(-1/N) + i) N / pi",
    "turning-magnitude": "turning-magnitude: z = x / |x_TP|",
}


def _scaling_name(config: RunConfig) -> str:
    return _SCALING_NAMES[_scaling_choice(config)]


def run_pipeline(config: RunConfig, stages=STAGES) -> RunReport:
    """Run the requested stages; results depend on the config only."""
    stages = set(stages)
    if "interlace" in stages:
        stages.add("zeros")
    if "zeros" in stages:
        stages.add("spectrum")
    report = RunReport(config.label, config)
    report.conventions = _conventions(config)
    if config.kind == "qes":
        _run_qes(config, report, stages)
    else:
        _run_monomial(config, report, stages)
    return report


def _conventions(config: RunConfig) -> dict:
    tol = config.tolerances
    conv = {
        "problem": {"kind": config.kind, **({"a": config.a, "b": config.b, "J": config.J} if config.kind == "qes" else {"N": config.N})},
        "tolerances": {"rel": tol.rel, "abs": tol.abs, "provenance": "configured"},
        "grid": {"nx": config.grid.nx, "ny": config.grid.ny, "pad": config.grid.pad, "provenance": "configured"},
        "scaling": _scaling_name(config),
        "ordering": "zeros ordered by Re(z), ties by Im(z); only interior gaps are judged",
        "band_metric": "artifact-defined: vertical scatter about a least-squares quadratic arch",
    }
    if config.kind == "qes":
        conv["index_origin"] = "k = 1..J in order of increasing energy"
        conv["relevant"] = "zeros off the positive imaginary axis; those on it lie on the branch cut"
        conv["normalization"] = "polynomial factor scaled so its leading coefficient is 1"
        conv["residual"] = "row-0 recursion residual relative to the largest coefficient, extended precision"
    else:
        conv["index_origin"] = "k = 0.. in order of increasing energy; psi_k has k zeros in the arch region"
        conv["relevant"] = "zeros strictly between the turning points in Re (arch strip)"
        conv["normalization"] = "unit amplitude hypot(|psi|, |psi'|/kappa) of the right-wedge solution at the matching point"
        conv["residual"] = "|W| for the amplitude-normalized Wronskian of the two wedge solutions"
        conv["im_axis_intercept"] = (
            "alpha of Im x = alpha + gamma (Re x)^2 fitted through the zeros of psi_k and its two turning points"
        )
    return conv


def _map(config: RunConfig, fn, items):
    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _run_monomial(config: RunConfig, report: RunReport, stages):
    spec = config.spec
    tol = config.tolerances
    n = config.n_states
    if "spectrum" in stages:
        E_max = 0.5 * (wkb_energy_of(spec, n - 1) + wkb_energy_of(spec, n))
        pairs = _stage("shooting", "find_eigenvalues", find_eigenvalues, spec, E_max, WedgePair(spec.N), tol)
        if len(pairs) < n:
            raise PipelineError(
                "shooting", "find_eigenvalues", RuntimeError(f"found {len(pairs)} of {n} levels below {E_max}")
            )
        pairs = pairs[:n]
        for ep in pairs:
            E_wkb = _stage("wkb", "wkb_eigenvalue", wkb_eigenvalue, spec, ep.k)
            report.eigenvalues.append(EigenRow(ep.k, ep.E, E_wkb, ep.residual))

    if "zeros" in stages:
        grid = config.grid

        def zeros_of(ep):
            region = default_region(spec, ep.E, grid.pad, grid.nx, grid.ny)
            return _stage("zeros", "find_zeros", find_zeros, spec, ep, region, tol)

        sets = _map(config, zeros_of, pairs)
        arch = {}
        scaled = {}
        for ep, zs in zip(pairs, sets):
            smap = _scaling_for(config, ep.E, spec)
            zz = apply_scaling(smap, zs.zeros)
            for i, (x, z, rel) in enumerate(zip(zs.zeros, zz, zs.in_arch)):
                report.zeros.append(ZeroRow(ep.k, i, x, z, bool(rel)))
            arch[ep.k] = zs.arch_zeros
            scaled[ep.k] = apply_scaling(smap, zs.arch_zeros)
        report.fits["zero_count"] = _claim(
            {str(k): len(arch[k]) for k in arch},
            expected="k zeros in the arch region for psi_k",
            tolerance=0,
        )
        if "interlace" in stages:
            _interlace_section(report, arch, scaled)
        if len(arch) >= 2:
            sm = shift_metric(list(arch.items()))
            report.shift = {"ks": sm.ks, "mean_im": sm.means, "shifts": sm.shifts, "strictly_decreasing": sm.strictly_decreasing}
        _band_section(report, arch, scaled)
        _gap_section(report, spec, {ep.k: ep.E for ep in pairs}, arch)

    if "wkb" in stages:
        _wkb_section(config, report, spec)


def _interlace_section(report: RunReport, unscaled: dict, scaled: dict):
    ks = sorted(scaled)
    for k0, k1 in zip(ks, ks[1:]):
        r = check_interlacing(scaled[k0], scaled[k1], (k0, k1))
        u = check_interlacing(unscaled[k0], unscaled[k1], (k0, k1))
        report.interlace.append(
            {
                "pair": [k0, k1],
                "gap_counts": r.gap_counts,
                "pass": r.passed,
                "pass_unscaled": u.passed,
                "shift": r.shift,
                "outside": r.outside,
                "count_mismatch": r.count_mismatch,
            }
        )


def _band_section(report: RunReport, unscaled: dict, scaled: dict):
    pu = [z for k in sorted(unscaled) for z in unscaled[k]]
    ps = [z for k in sorted(scaled) for z in scaled[k]]
    if len(pu) < 10:
        report.bands = {"note": f"only {len(pu)} zeros; band metric needs at least 10"}
        return
    bu = _stage("interlace", "band_metric", band_metric, pu)
    bs = _stage("interlace", "band_metric", band_metric, ps)
    as_dict = lambda b: {
        "alpha": b.alpha, "beta": b.beta, "gamma": b.gamma, "rms_deviation": b.rms_deviation,
        "max_deviation": b.max_deviation, "band_width": b.band_width, "n_points": b.n_points,
    }
    report.bands = {
        "unscaled": as_dict(bu),
        "scaled": as_dict(bs),
        "ratio": _claim(bs.band_width / bu.band_width, expected="< 0.5", note="artifact-defined metric"),
    }


def _gap_section(report: RunReport, spec: Monomial, energies: dict, arch: dict):
    ks = [k for k in sorted(arch) if arch[k]]
    icpt = {}
    for k in ks:
        tp = turning_points(spec, energies[k])
        icpt[k] = arch_intercept(arch[k], (tp.x_minus, tp.x_plus))
    gaps = [icpt[k] - icpt[k + 1] for k in ks[:-1] if k + 1 in icpt]
    gk = [k for k in ks[:-1] if k + 1 in icpt]
    sec = {"intercepts": {str(k): icpt[k] for k in ks}, "gaps": gaps, "gap_ks": gk}
    N = spec.N
    expected = 2 / (N + 2) - 1
    if len(gaps) >= 4 and all(g > 0 for g in gaps):
        le = local_exponents(gk, gaps)
        rr = richardson_extrapolate(le, gk[:-1])
        within = abs(rr.value - expected) <= 0.05
        sec["local_exponents"] = le
        sec["richardson"] = _claim(
            rr.value,
            expected=expected,
            tolerance=0.05,
            note=("within tolerance" if within else "out of asymptopia at this k range")
            + f"; stability {rr.stability:.3g}" + ("; unstable" if rr.unstable else ""),
        )
    if len(gaps) >= 5 and all(g > 0 for g in gaps):
        dc = divergence_check(gaps, gk)
        sec["divergence"] = {
            "gap_exponent": dc.fit.p,
            "cumulative_exponent": dc.cumulative_exponent,
            "verdict": dc.verdict,
        }
    report.fits["im_axis_gaps"] = sec


def _wkb_section(config: RunConfig, report: RunReport, spec: Monomial):
    w = config.wkb
    N = spec.N
    ks = list(range(w.k_min, w.k_max + 1))
    levels = [(k, _stage("wkb", "wkb_eigenvalue", wkb_eigenvalue, spec, k)) for k in ks]
    growth = fit_power_law(levels)
    report.fits["growth"] = {
        "p": _claim(growth.p, expected=2 * N / (N + 2), tolerance=0.01),
        "C": _claim(growth.C, note="amplitude of E_k ~ C k^p; recorded, not asserted"),
        "rms_residual": growth.rms_residual,
        "window": [w.k_min, w.k_max],
    }
    if w.k_max >= 12:
        drift = _stage("wkb", "turning_point_drift", turning_point_drift, spec, w.k_max, w.k_min)
        report.fits["drift"] = {
            "exponent": _claim(drift.drift.p, expected=2 / (N + 2) - 1, tolerance=0.03),
            "magnitude_exponent": _claim(drift.magnitude.p, expected=2 / (N + 2), tolerance=0.02),
            "amplitude": drift.drift.C,
        }


def _run_qes(config: RunConfig, report: RunReport, stages):
    spec = config.spec
    states = _stage("qes", "qes_spectrum", qes_spectrum, config.a, config.b, config.J)
    rel, scaled = {}, {}
    for s in states:
        _, _, r0 = refine_qes_state(s.a, s.b, s.J, s.E + 1j * s.E_imag)
        report.eigenvalues.append(EigenRow(s.k, s.E, math.nan, float(abs(r0))))
    if "zeros" not in stages:
        return

    def zeros_of(s):
        return _stage("qes", "qes_zeros", qes_zeros, s)

    all_zeros = _map(config, zeros_of, states)
    counts = {}
    for s, zs in zip(states, all_zeros):
        cl = classify_zeros(zs)
        tp = _stage("potentials", "turning_points", turning_points, spec, s.E)
        smap = _scaling_for(config, s.E, spec)
        irrelevant = set(cl.irrelevant)
        for i, x in enumerate(zs):
            report.zeros.append(ZeroRow(s.k, i, x, complex(smap(x)), x not in irrelevant))
        rel[s.k] = cl.relevant
        scaled[s.k] = apply_scaling(smap, cl.relevant)
        counts[str(s.k)] = len(cl.irrelevant)
    report.fits["branch_cut_counts"] = _claim(counts, expected="J - k", tolerance=0)
    if "interlace" in stages:
        _interlace_section(report, rel, scaled)
    sm = shift_metric(list(rel.items()))
    report.shift = {"ks": sm.ks, "mean_im": sm.means, "shifts": sm.shifts, "strictly_decreasing": sm.strictly_decreasing}
    _band_section(report, rel, scaled)


# ---------------------------------------------------------------- emission

def fmt(x) -> str:
    """17 significant digits; round-trips every double."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.17g}"


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # 17 significant digits, kept as a JSON number
        return None if not math.isfinite(v) else float(f"{v:.17g}")
    if isinstance(obj, complex):
        return [_json_ready(obj.real), _json_ready(obj.imag)]
    return obj


def _write_json(path: Path, payload: dict):
    text = json.dumps(_json_ready(payload), indent=2, sort_keys=True)
    path.write_text(text + "\n")


def zeros_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ZEROS_HEADER)
    for r in sorted(report.zeros, key=lambda r: (r.k, r.zero_index)):
        w.writerow([report.example, r.k, r.zero_index, fmt(r.x.real), fmt(r.x.imag), fmt(r.z.real), fmt(r.z.imag), fmt(r.relevant)])
    return buf.getvalue()


def eigenvalues_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EIGEN_HEADER)
    for r in sorted(report.eigenvalues, key=lambda r: r.k):
        w.writerow([report.example, r.k, fmt(r.energy), fmt(r.energy_wkb), fmt(r.residual)])
    return buf.getvalue()


def emit_outputs(report: RunReport, out_dir) -> list[Path]:
    """Write the tables, the JSON reports and the SVG scatters (the latter
    drawn from zeros.csv)."""
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        p = out / "eigenvalues.csv"
        p.write_text(eigenvalues_csv(report))
        written.append(p)
        if report.zeros:
            p = out / "zeros.csv"
            p.write_text(zeros_csv(report))
            written.append(p)
        if report.interlace:
            p = out / "interlace.json"
            _write_json(
                p,
                {
                    "schema_version": SCHEMA_VERSION,
                    "example": report.example,
                    "all_pass": report.interlace_passed,
                    "pairs": report.interlace,
                    "note": "interlacing is a conjecture check; failures are findings, not errors",
                },
            )
            written.append(p)
        p = out / "fits.json"
        _write_json(
            p,
            {
                "schema_version": SCHEMA_VERSION,
                "package_version": __version__,
                "example": report.example,
                "fits": report.fits,
                "bands": report.bands,
                "shift": report.shift,
                "conventions": report.conventions,
            },
        )
        written.append(p)
        if report.zeros:
            from .svg import scatter_from_csv

            for plane in ("x", "z"):
                p = out / f"zeros_{report.example}_{'unscaled' if plane == 'x' else 'scaled'}.svg"
                p.write_text(scatter_from_csv(out / "zeros.csv", plane, title=f"{report.example} ({plane}-plane)"))
                written.append(p)
    except OSError as exc:
        raise OSError(f"writing outputs under {out}: {exc}") from exc
    return written
