from __future__ import annotations

import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from psmooth.cli import RunConfig, _int, main
from psmooth.errors import DomainError

SCHEMA = json.loads(resources.files("psmooth").joinpath("schema.json").read_text())


def run(capsys, *argv):
    code = main(["--quiet", *argv])
    out, err = capsys.readouterr()
    return code, out.strip(), err


def run_json(capsys, *argv):
    code, out, err = run(capsys, "--format", "json", *argv)
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return doc


def test_spec_examples(capsys):
    assert run(capsys, "rho", "--u", "2.0")[1].startswith("0.306852819")
    assert run(capsys, "sigma", "--poly", "t^2+1", "--n", "25")[1] == "2"
    assert run(capsys, "count", "poly-smooth", "--poly", "t^2+1", "--x", "10", "--y", "5")[1] == "4"


@pytest.mark.parametrize(
    "argv,expected",
    [
        (["sigma-star", "--poly", "t^2+1", "--n", "5"], "8/5"),
        (["gvalue", "--poly", "t^2+1", "--n", "5"], "5/3"),
        (["count", "smooth", "--x", "100", "--y", "10"], "46"),
        (["count", "smooth-ap", "--x", "100", "--y", "10", "--q", "2", "--a", "1"], "15"),
        (["count", "shifted-prime", "--a", "1", "--x", "20", "--y", "3"], "7"),
        (["count", "prime-values", "--poly", "[t;t+2]", "--x", "10"], "2"),
        (["count", "prime-ap", "--x", "100", "--q", "4", "--a", "1"], "11"),
        (["count", "m-count", "--poly", "[t;t+2]", "--x", "10", "--y", "2"], "5"),
        (["q-of", "--poly", "[t;t+2]"], "32"),
    ],
)
def test_plain_outputs(capsys, argv, expected):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and out == expected


def test_json_outputs_validate(capsys):
    cases = [
        ["rho", "--u", "3"],
        ["rho-table", "--u-max", "2", "--step", "0.25"],
        ["li", "--x", "100"],
        ["li-poly", "--poly", "t^2+2t+2", "--x", "1000", "--h", "5"],
        ["roots", "--poly", "t^2+1", "--p", "5"],
        ["roots", "--poly", "t^2+1", "--h", "15"],
        ["constant", "--poly", "[t;t+2]", "--P", "10^5"],
        ["transform", "fhb", "--poly", "t^2+1", "--h", "5", "--b", "2"],
        ["transform", "restrict", "--poly", "t^2+1", "--q", "5", "--a", "2"],
        ["transform", "salvage", "--poly", "[t;t+2]", "--a", "1"],
        ["transform", "effectivize", "--poly", "t^2+1"],
        ["structure", "--poly", "[t;t+2]"],
        ["meanvalue", "mg", "--g", "one", "--x", "100"],
        ["meanvalue", "mg-coprime", "--g", "one", "--x", "100", "--q", "2"],
        ["meanvalue", "multisum", "--g", "one", "--g", "one", "--x", "10", "10"],
        ["meanvalue", "c", "--g", "sigma:t^2+1", "--P", "10^4"],
        ["meanvalue", "cq", "--g", "one", "--q", "6", "--P", "10^4"],
        ["meanvalue", "kappa", "--g", "one", "--w", "10^4"],
        ["meanvalue", "weighted", "--poly", "t^2+2t+2", "--x", "1000", "--u", "0.9", "--P", "10^4"],
        ["verify", "identity", "--poly", "[t;t+2]", "--x", "1000", "--y", "10"],
        ["verify", "theorem1", "--poly", "t", "--x", "10^4", "--u", "2"],
        ["verify", "theorem2", "--a", "1", "--x", "10^4", "--u", "2"],
        ["verify", "ap", "--x", "10^4", "--y", "10^3", "--q", "4", "--a", "1"],
        ["verify", "uh", "--poly", "t", "--x", "10^4", "--P", "10^4"],
        ["verify", "cflb", "--poly", "t^2+2t+2", "--h", "5", "--x", "1000", "--P", "10^4"],
    ]
    for argv in cases:
        doc = run_json(capsys, *argv)
        assert doc["command"].split()[0] == argv[0]


def test_json_values(capsys):
    assert run_json(capsys, "rho", "--u", "2")["result"] == pytest.approx(0.30685281944005205)
    doc = run_json(capsys, "structure", "--poly", "[t;t+2]")
    assert doc["result"]["admissible"] is True and doc["result"]["exclusive"] is False
    doc = run_json(capsys, "verify", "identity", "--poly", "[t;t+2]", "--x", "1000", "--y", "10")
    assert doc["result"]["passed"] is True
    assert "elapsed_seconds" not in doc["result"]["runtime"]
    doc = run_json(capsys, "meanvalue", "multisum", "--g", "one", "--g", "one", "--x", "10", "10")
    assert doc["result"] == pytest.approx(6.829365079365079)


def test_csv_output(capsys):
    code, out, _ = run(capsys, "--format", "csv", "verify", "theorem1", "--poly", "t", "--x", "1000", "2000", "--u", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("experiment,x,u,exact")
    assert len(lines) == 3
    code, out, _ = run(capsys, "--format", "csv", "sigma", "--poly", "t^2+1", "--n", "25")
    assert out.splitlines() == ["value", "2"]


def _strip_times(doc: dict) -> dict:
    doc = dict(doc)
    doc.pop("timestamp")
    if isinstance(doc["result"], dict) and "runtime" in doc["result"]:
        doc["result"] = {**doc["result"], "runtime": {}}
    return doc


def test_identical_invocations_are_identical(capsys):
    argv = ["--format", "json", "verify", "theorem1", "--poly", "[t;t+2]", "--x", "5000", "--u", "1", "1.5"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert _strip_times(json.loads(a)) == _strip_times(json.loads(b))
    argv = ["--format", "json", "constant", "--poly", "t^2+1", "--P", "10^4"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert _strip_times(json.loads(a)) == _strip_times(json.loads(b))


@pytest.mark.parametrize(
    "argv",
    [
        ["constant", "--poly", "t^2+2t"],
        ["sigma", "--poly", "t^^2", "--n", "5"],
        ["sigma", "--poly", "t", "--n", "0"],
        ["rho", "--u", "500"],
        ["rho"],
        ["count", "smooth", "--x", "100"],
        ["verify", "ap", "--x", "100", "--y", "10", "--q", "4", "--a", "2"],
        ["nonsense"],
        ["--P", "0", "rho", "--u", "1"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2


def test_resource_errors_exit_1(capsys):
    code, _, err = run(capsys, "--prime-table-cap", "1000", "--cache-dir", "/tmp/psmooth-test-cap", "cache", "build-primes", "--limit", "10^5")
    assert code == 1 and "computation failed" in err


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0


def test_config_file_and_env(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nP = 10^5\nchunk=4096\nformat=json\n")
    monkeypatch.setenv("PSMOOTH_CACHE", str(tmp_path / "envcache"))
    c = RunConfig.from_sources(str(cfg), {"chunk": 2048})
    assert (c.P, c.chunk, c.format, c.cache_dir) == (10**5, 2048, "json", str(tmp_path / "envcache"))
    c = RunConfig.from_sources(str(cfg), {"cache_dir": "/elsewhere"})
    assert c.cache_dir == "/elsewhere"
    cfg.write_text("bogus=1\n")
    with pytest.raises(DomainError):
        RunConfig.from_sources(str(cfg), {})
    with pytest.raises(DomainError):
        RunConfig(chunk=0)


def test_cache_commands(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PSMOOTH_CACHE", str(tmp_path))
    doc = run_json(capsys, "cache", "build-primes", "--limit", "10^5")
    assert doc["result"]["primes"] == 9592
    assert (tmp_path / "primes-100000.pspt").exists()
    doc = run_json(capsys, "cache", "clear")
    assert doc["result"]["removed"] == ["primes-100000.pspt"]
    assert not list(tmp_path.glob("*.pspt"))


def test_config_flag_from_command_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("format=csv\n")
    code, out, _ = run(capsys, "--config", str(cfg), "rho", "--u", "2")
    assert code == 0 and out.splitlines()[0] == "value"


def test_int_parser():
    assert _int("10^6") == _int("1e6") == _int("10**6") == 10**6
    with pytest.raises(Exception):
        _int("1.5")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "psmooth.cli", "--quiet", "rho", "--u", "2"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("0.3068528194")
    r = subprocess.run([sys.executable, "-m", "psmooth.cli", "--quiet", "constant", "--poly", "t^2+2t"], capture_output=True, text=True)
    assert r.returncode == 2 and "factored form" in r.stderr
