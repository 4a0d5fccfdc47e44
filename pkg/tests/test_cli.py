"""CLI contract: exit codes, RESULT lines, artifacts on disk."""

import json

import pytest

from safeteleop import acceptance
from safeteleop.cli import _parse_bind, main
from safeteleop.scenario import default_scenario, dump_scenario
from safeteleop.sim import read_trace


def _write_default(tmp_path, **overrides):
    path = tmp_path / "scenario.txt"
    dump_scenario(default_scenario(**overrides), str(path))
    return str(path)


def test_run_ok(tmp_path, capsys):
    sc = _write_default(tmp_path, mode="none", T=0.5)
    out = tmp_path / "trace.csv"
    assert main(["run", "--scenario", sc, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert printed.startswith("RESULT command=run")
    assert "status=ok" in printed
    assert out.exists()
    assert len(read_trace(str(out))) == 501


def test_run_malformed_scenario_names_key(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("sigma = 1.0\nbanana = 3\n")
    out = tmp_path / "trace.csv"
    assert main(["run", "--scenario", str(bad), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "banana" in err
    assert not out.exists()


def test_run_missing_file(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "nope.txt"),
                 "--out", str(tmp_path / "t.csv")]) == 1
    assert "error" in capsys.readouterr().err


def test_run_infeasible_exits_2(tmp_path, capsys):
    bad = tmp_path / "infeasible.txt"
    bad.write_text(
        "mode = passivity\npolicy = halt\nT = 1.0\n"
        "x0 = 1.5, 0, 0, 0\nu0 = 1.0, 0\nu_h = constant 1.0, 0\n")
    out = tmp_path / "trace.csv"
    assert main(["run", "--scenario", str(bad), "--out", str(out)]) == 2
    captured = capsys.readouterr()
    assert "status=infeasible" in captured.out
    assert "infeasible" in captured.err
    assert out.exists()  # partial trace still written


def test_usage_errors_exit_1(capsys):
    assert main(["run", "--scenario", "x"]) == 1          # missing --out
    assert main(["reproduce", "--figure", "fig9", "--out-dir", "d"]) == 1
    assert main(["frobnicate"]) == 1
    assert main([]) == 1


def test_parse_bind():
    assert _parse_bind("127.0.0.1:8765") == ("127.0.0.1", 8765)
    assert _parse_bind("[::1]:9000") == ("[::1]", 9000)
    from safeteleop.cli import UsageError
    with pytest.raises(UsageError):
        _parse_bind("8765")
    with pytest.raises(UsageError):
        _parse_bind("host:port")


def test_reproduce_writes_trace_and_summary(tmp_path, capsys):
    assert main(["reproduce", "--figure", "fig4", "--out-dir", str(tmp_path)]) == 0
    printed = capsys.readouterr().out
    assert printed.startswith("RESULT command=reproduce")
    assert "figure=fig4" in printed and "mode=passivity" in printed
    assert (tmp_path / "fig4_trace.csv").exists()
    summary = (tmp_path / "fig4_summary.txt").read_text()
    assert summary.startswith("RESULT ")
    # the passivity-only run keeps h_u nonnegative but violates safety
    fields = dict(tok.split("=", 1) for tok in summary.split()[1:])
    assert float(fields["min_h_u"]) >= -1e-6
    assert float(fields["min_h_x"]) < 0


def test_reproduce_deterministic(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    assert main(["reproduce", "--figure", "fig3", "--out-dir", str(d1)]) == 0
    assert main(["reproduce", "--figure", "fig3", "--out-dir", str(d2)]) == 0
    assert (d1 / "fig3_trace.csv").read_bytes() == (d2 / "fig3_trace.csv").read_bytes()


def _stub_results(statuses):
    return [acceptance.CriterionResult(name=f"a{i+1}", title=f"criterion {i+1}",
                                       status=s, details={"measured": 0.0})
            for i, s in enumerate(statuses)]


def test_check_all_green(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(acceptance, "run_all",
                        lambda: _stub_results(["pass"] * 8 + ["xfail"]))
    report = tmp_path / "report.json"
    assert main(["check", "--report", str(report)]) == 0
    printed = capsys.readouterr().out
    assert printed.count("RESULT command=check/") == 9
    assert "RESULT command=check status=ok" in printed
    data = json.loads(report.read_text())
    assert data["ok"] is True
    assert len(data["criteria"]) >= 8
    assert {c["name"] for c in data["criteria"]} == {f"a{i}" for i in range(1, 10)}


def test_check_failure_exits_1(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(acceptance, "run_all",
                        lambda: _stub_results(["pass"] * 7 + ["fail", "xfail"]))
    report = tmp_path / "report.json"
    assert main(["check", "--report", str(report)]) == 1
    assert json.loads(report.read_text())["ok"] is False
    assert "status=fail" in capsys.readouterr().out


def test_tampered_tolerance_fails_a1(monkeypatch):
    # negative control: an impossible threshold must flip the criterion red
    monkeypatch.setattr(acceptance, "A1_FINAL_TOL", 0.0)
    res = acceptance.run_a1(None)
    assert res.status == "fail"
