import csv
import json

import pytest
from click.testing import CliRunner

from ptinterlace import report as report_mod
from ptinterlace.cli import main
from ptinterlace.errors import IntegrationOverflow
from ptinterlace.report import (
    EIGEN_HEADER,
    SCHEMA_VERSION,
    ZEROS_HEADER,
    ConfigError,
    RunConfig,
    config_from_dict,
    emit_outputs,
    fmt,
    load_config,
    run_pipeline,
)


def write_cfg(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


IX3_SMALL = """
problem: {kind: monomial, N: 3}
example: ix3
k_max: 4
grid: {nx: 121, ny: 61}
"""

QES_SMALL = """
problem: {kind: qes, a: 10, b: 2, J: 8}
example: qes8
"""


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(1 / 3)) == 1 / 3
    assert fmt(True) == "true" and fmt(False) == "false"
    assert fmt(float("nan")) == ""
    assert fmt(7) == "7"


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"problem": {"kind": "monomial", "N": 3}, "colour": "red"})
    with pytest.raises(ConfigError, match="problem"):
        config_from_dict({"problem": {"kind": "monomial", "N": 3, "M": 1}})
    with pytest.raises(ConfigError, match="grid"):
        config_from_dict({"problem": {"kind": "monomial", "N": 3}, "grid": {"nz": 3}})
    with pytest.raises(ConfigError, match="tolerances"):
        config_from_dict({"problem": {"kind": "monomial", "N": 3}, "tolerances": {"relative": 1e-9}})


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"problem": {"kind": "cubic"}},
        {"problem": {"kind": "qes", "a": 10, "b": 2}},
        {"problem": {"kind": "monomial"}},
        {"problem": {"kind": "monomial", "N": 1}},
        {"problem": {"kind": "monomial", "N": 3}, "scaling": "log"},
        {"problem": {"kind": "monomial", "N": 3}, "grid": {"nx": 4}},
        {"problem": {"kind": "monomial", "N": 3}, "threads": 0},
        {"problem": {"kind": "monomial", "N": 3}, "tolerances": {"rel": -1}},
        {"problem": {"kind": "monomial", "N": 3}, "wkb": {"k_min": 10, "k_max": 12}},
    ],
)
def test_config_invalid(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_config_defaults(tmp_path):
    cfg = load_config(write_cfg(tmp_path, "problem: {kind: large-n-surrogate, N: 20}\n"))
    assert cfg.n_states == 16 and cfg.scaling == "auto"
    assert RunConfig("monomial", N=3).n_states == 6
    assert RunConfig("qes", a=10, b=2, J=21).n_states == 21


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "configs"
    paths = sorted(root.glob("*.yaml"))
    assert paths
    for p in paths:
        load_config(p)


@pytest.fixture(scope="module")
def ix3_report():
    cfg = config_from_dict({"problem": {"kind": "monomial", "N": 3}, "example": "ix3", "k_max": 4,
                            "grid": {"nx": 121, "ny": 61}})
    return run_pipeline(cfg)


def test_pipeline_monomial_contents(ix3_report):
    r = ix3_report
    assert [e.k for e in r.eigenvalues] == [0, 1, 2, 3]
    assert len(r.zeros) == 0 + 1 + 2 + 3
    assert len(r.interlace) == 3 and r.interlace_passed
    assert all(p["pass_unscaled"] == p["pass"] for p in r.interlace)
    assert r.shift["strictly_decreasing"]
    assert r.conventions["index_origin"].startswith("k = 0")
    for claim in (r.fits["growth"]["p"], r.fits["drift"]["exponent"]):
        assert {"value", "expected", "tolerance", "provenance"} <= set(claim)


def test_emit_outputs_schema(ix3_report, tmp_path):
    written = emit_outputs(ix3_report, tmp_path / "o")
    names = {p.name for p in written}
    assert {"eigenvalues.csv", "zeros.csv", "interlace.json", "fits.json",
            "zeros_ix3_unscaled.svg", "zeros_ix3_scaled.svg"} <= names
    with open(tmp_path / "o" / "zeros.csv") as fh:
        assert fh.readline().strip() == ",".join(ZEROS_HEADER)
    with open(tmp_path / "o" / "eigenvalues.csv") as fh:
        assert fh.readline().strip() == "example,k,energy,energy_wkb,residual"
        rows = list(csv.reader(fh))
    assert len(rows) == 4 and rows[0][0] == "ix3"
    assert ",".join(EIGEN_HEADER) == "example,k,energy,energy_wkb,residual"
    for name in ("interlace.json", "fits.json"):
        assert json.loads((tmp_path / "o" / name).read_text())["schema_version"] == SCHEMA_VERSION


def test_svg_has_one_marker_per_zero(ix3_report, tmp_path):
    emit_outputs(ix3_report, tmp_path)
    svg = (tmp_path / "zeros_ix3_scaled.svg").read_text()
    assert svg.startswith("<svg")
    body = svg.split('<g id="k')[1:]
    n_markers = sum(part.split("</g>")[0].count("<") for part in body)
    assert n_markers == len(ix3_report.zeros)


def test_svg_from_csv_is_deterministic(ix3_report, tmp_path):
    from ptinterlace.svg import scatter_from_csv

    emit_outputs(ix3_report, tmp_path)
    a = scatter_from_csv(tmp_path / "zeros.csv", "z")
    b = scatter_from_csv(tmp_path / "zeros.csv", "z")
    assert a == b
    with pytest.raises(ValueError):
        scatter_from_csv(tmp_path / "zeros.csv", "w")


def test_cli_rerun_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, QES_SMALL)
    runner = CliRunner()
    outs = []
    for name in ("a", "b"):
        res = runner.invoke(main, ["qes", "--config", str(cfg), "--out", str(tmp_path / name)])
        assert res.exit_code == 0, res.output
        outs.append(tmp_path / name)
    for f in ("zeros.csv", "eigenvalues.csv", "interlace.json", "fits.json"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()


def test_cli_threads_do_not_change_results(tmp_path):
    cfg = write_cfg(tmp_path, QES_SMALL)
    runner = CliRunner()
    r1 = runner.invoke(main, ["qes", "--config", str(cfg), "--out", str(tmp_path / "t1")])
    r4 = runner.invoke(main, ["qes", "--config", str(cfg), "--out", str(tmp_path / "t4"), "--threads", "4"])
    assert r1.exit_code == r4.exit_code == 0
    assert (tmp_path / "t1" / "zeros.csv").read_bytes() == (tmp_path / "t4" / "zeros.csv").read_bytes()


def test_cli_spectrum_prints_table(tmp_path):
    res = CliRunner().invoke(main, ["spectrum", "--k-max", "3", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "example,k,energy,energy_wkb,residual" in res.output
    assert "1.156267071988" in res.output


def test_cli_wkb(tmp_path):
    res = CliRunner().invoke(main, ["wkb", "--out", str(tmp_path)])
    assert res.exit_code == 0
    fits = json.loads((tmp_path / "fits.json").read_text())["fits"]
    assert abs(fits["drift"]["exponent"]["value"] + 0.6) < 0.03


def test_cli_config_error_exit_1(tmp_path):
    cfg = write_cfg(tmp_path, "problem: {kind: monomial, N: 3}\nbogus: 1\n")
    res = CliRunner().invoke(main, ["zeros", "--config", str(cfg), "--out", str(tmp_path)])
    assert res.exit_code == 1
    payload = json.loads(res.output.strip().splitlines()[-1])
    assert payload["error"] == "ConfigError"


def test_cli_computational_error_exit_1(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise IntegrationOverflow("synthetic overflow")

    monkeypatch.setattr(report_mod, "find_eigenvalues", boom)
    res = CliRunner().invoke(main, ["spectrum", "--out", str(tmp_path)])
    assert res.exit_code == 1
    payload = json.loads(res.output.strip().splitlines()[-1])
    assert payload["module"] == "shooting" and payload["operation"] == "find_eigenvalues"
    assert payload["error"] == "IntegrationOverflow"


def test_cli_interlace_failure_exit_2(tmp_path, monkeypatch):
    from ptinterlace.interlace import InterlaceReport

    def always_fail(a, b, pair=(0, 1)):
        return InterlaceReport(tuple(pair), [2, 0], False, 0.0)

    monkeypatch.setattr(report_mod, "check_interlacing", always_fail)
    cfg = write_cfg(tmp_path, QES_SMALL)
    res = CliRunner().invoke(main, ["interlace", "--config", str(cfg), "--out", str(tmp_path / "f")])
    assert res.exit_code == 2
    data = json.loads((tmp_path / "f" / "interlace.json").read_text())
    assert data["all_pass"] is False


def test_cli_version():
    res = CliRunner().invoke(main, ["--version"])
    assert res.exit_code == 0 and "0.1.0" in res.output
