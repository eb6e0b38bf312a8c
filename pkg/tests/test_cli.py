import json
import subprocess
import sys

import pytest

from superakns import errata, hierarchy
from superakns.cli import CACHE_ENV, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(autouse=True)
def no_cache(monkeypatch):
    monkeypatch.delenv(CACHE_ENV, raising=False)


def test_verify_lie_json(capsys):
    code, out, _ = run(capsys, "verify-lie", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert doc["schema"] == 1 and doc["command"] == "verify-lie"
    assert [r["summary"]["relations_checked"] for r in doc["reports"]] == [13, 30]


def test_json_is_deterministic(capsys):
    argv = ("derive", "--levels", "2", "--format", "json")
    first = run(capsys, *argv)[1]
    hierarchy.clear_cache()
    assert run(capsys, *argv)[1] == first


def test_derive_classes(capsys, tmp_path):
    code, out, _ = run(capsys, "derive", "--levels", "3", "--output-dir", str(tmp_path))
    assert code == 0
    assert "'mismatch': 0" in out
    diff = json.loads((tmp_path / "diff.json").read_text())
    assert diff["classes"]["mismatch"] == 0 and diff["classes"]["erratum"] > 0
    text = (tmp_path / "levels.txt").read_text()
    assert "f1 = p + 2*r" in text


def test_derive_mismatch_exits_one(capsys, monkeypatch):
    values = dict(errata.printed_values())
    levels = {k: dict(v) for k, v in values["levels"].items()}
    levels["1"]["b"] = "q"
    values["levels"] = levels
    monkeypatch.setattr(errata, "printed_values", lambda: values)
    code, out, _ = run(capsys, "derive", "--levels", "2")
    assert code == 1
    assert "'mismatch': 1" in out


@pytest.mark.parametrize("argv", [
    ("derive", "--mu", "abc"),
    ("derive", "--mu", "1/0"),
    ("verify", "--what", "hamiltonian", "--n", "0"),
    ("verify", "--what", "bi-hamiltonian", "--n", "1"),
    ("numcheck", "--grid", "30"),
    ("export", "--n", "99"),
    ("no-such-command",),
])
def test_usage_errors_exit_two(capsys, argv):
    assert run(capsys, *argv)[0] == 2


@pytest.mark.parametrize("what", ["zero-curvature", "hamiltonian", "bi-hamiltonian", "trace-identity"])
def test_verify_commands(capsys, what):
    code, out, _ = run(capsys, "verify", "--what", what, "--n", "2", "--mu", "0")
    assert code == 0 and out.rstrip().endswith("verify: PASS")


def test_verify_detects_a_wrong_flow(capsys, monkeypatch):
    real = hierarchy.build_flow

    def tampered(n, levels=None, mu="symbolic"):
        f = real(n, levels, mu)
        return hierarchy.FlowSystem(n, f.rhs[:-1] + (f.rhs[-1] + 1,))
    monkeypatch.setattr(hierarchy, "build_flow", tampered)
    assert run(capsys, "verify", "--what", "zero-curvature", "--n", "1")[0] == 1


def test_numcheck_small(capsys):
    code, out, _ = run(capsys, "numcheck", "--mu", "0", "--n", "1", "--samples", "1",
                       "--skew-trials", "3", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert doc["config"]["numcheck"]["samples"] == 1
    assert doc["reports"][1]["summary"]["passed"] == 3


def test_numcheck_ledgers_the_skew_failure(capsys):
    code, out, _ = run(capsys, "numcheck", "--n", "1", "--samples", "1", "--skew-trials", "2",
                       "--format", "json")
    skew = json.loads(out)["reports"][1]
    assert code == 0
    assert {e["status"] for e in skew["entries"] if e["check"].startswith("trial")} == {"erratum"}
    assert "resolution" in skew["summary"]


def test_cache_round_trip(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path))
    hierarchy.clear_cache()
    first = run(capsys, "export", "--what", "levels", "--n", "2", "--mu", "1/10")[1]
    path = tmp_path / "levels-mu_1_over_10.json"
    assert path.exists()
    assert json.loads(path.read_text())["mu"] == "1/10"
    hierarchy.clear_cache()
    assert run(capsys, "export", "--what", "levels", "--n", "2", "--mu", "1/10")[1] == first


def test_corrupt_cache_is_ignored(capsys, monkeypatch, tmp_path, caplog):
    (tmp_path / "levels-symbolic.json").write_text('{"schema": 1, "levels": [{"m": 0}]}')
    hierarchy.clear_cache()
    code, out, _ = run(capsys, "--cache-dir", str(tmp_path), "export", "--what", "levels", "--n", "1")
    assert code == 0 and "f1 = p + 2*r" in out
    assert "ignoring level cache" in caplog.text
    assert json.loads((tmp_path / "levels-symbolic.json").read_text())["levels"][1]["m"] == 1


@pytest.mark.parametrize("what,fmt", [("levels", "latex"), ("flow", "json"), ("operators", "text"),
                                      ("operators", "json"), ("errata", "json")])
def test_export(capsys, what, fmt):
    code, out, _ = run(capsys, "export", "--what", what, "--n", "1", "--format", fmt)
    assert code == 0 and out.strip()
    if fmt == "json":
        json.loads(out)


def test_export_to_file(capsys, tmp_path):
    target = tmp_path / "flow.tex"
    assert run(capsys, "export", "--what", "flow", "--n", "0", "--format", "latex",
               "--output", str(target))[0] == 0
    assert target.read_text().startswith(r"\begin{align*}")


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "superakns.cli", "verify-lie", "--algebra", "sl21"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "verify-lie: PASS" in proc.stdout


def test_decimal_mu_is_read_exactly(capsys):
    argv = ("export", "--what", "flow", "--n", "1", "--format", "json", "--mu")
    code, decimal, _ = run(capsys, *argv, "0.5")
    assert code == 0
    assert decimal == run(capsys, *argv, "1/2")[1]
