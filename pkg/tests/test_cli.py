import io
import json
import subprocess
import sys

import pytest

from phifam.cli import fmt, run

POWER = '{"deformer": {"kind": "power", "q": 0.5}, "measure": {"kind": "lebesgue", "a": 0, "b": "inf"}, "statistics": [{"kind": "monomial"}]}'
CONSTANT = '{"deformer": {"kind": "constant"}, "measure": {"kind": "lebesgue", "a": 0, "b": "inf"}, "statistics": [{"kind": "monomial", "scale": 2}]}'


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, err = call(*argv)
    return code, json.loads(out)


def test_lnphi_prints_value():
    code, out, _ = call("lnphi", "--deformer", '{"kind": "power", "q": 0.5}', "--u", "4")
    assert code == 0
    assert out.strip() == "2.0"


def test_expphi_outside_range():
    code, out, _ = call("expphi", "--deformer", '{"kind": "constant"}', "--u", "-3")
    assert code == 0 and float(out) == 0.0


def test_lnphi_non_positive_is_domain_error():
    code, rec = report("lnphi", "--deformer", '{"kind": "power", "q": 0.5}', "--u", "0")
    assert code == 2
    assert rec["status"] == "domain_error"


def test_normalize_and_escort():
    code, rec = report("normalize", "--family", CONSTANT, "--theta", "1")
    assert code == 0
    assert rec["result"]["G"] == pytest.approx(1.0)
    code, rec = report("escort", "--family", CONSTANT, "--theta", "1", "--x", "[0.5, 2]")
    assert code == 0
    assert rec["result"]["P"] == pytest.approx([1.0, 0.0])
    assert rec["result"]["p"] == pytest.approx([1.0, 0.0])


def test_outside_domain_exit_code():
    code, rec = report("normalize", "--family", POWER, "--theta", "-1")
    assert code == 2
    assert rec["finding"]["error"] == "OutsideDomain"


def test_bound_for_example_pair():
    code, rec = report("bound", "--pair", "example1", "--theta", "2")
    assert code == 0
    res = rec["result"]
    assert res["crb"]["lhs"] == pytest.approx(36.0, rel=1e-4)
    assert res["classical_crb"] == "divergent"
    assert res["advisory"] is False


def test_mismatched_pair_reports_support_mismatch():
    code, rec = report("bound", "--pair", "mismatched", "--theta", "1")
    assert code == 2
    assert rec["finding"]["error"] == "SupportMismatch"


def test_metric_fisher_project():
    code, rec = report("metric", "--family", POWER, "--theta", "1")
    assert code == 0
    assert max(rec["result"]["from_divergence"]["relative_errors"].values()) < 1e-3
    code, rec = report("fisher", "--pair", "example1", "--theta", "1")
    assert code == 0
    code, rec = report("project", "--family", POWER, "--theta", "1", "--variable", '{"kind": "constant", "value": 1}')
    assert code == 0
    assert rec["result"]["projection"]["norm"] < 1e-6


def test_duality_entropy_divergence_maxent():
    code, rec = report("duality", "--family", POWER, "--theta", "1.5")
    assert code == 0 and max(rec["result"]["residual_norms"].values()) < 1e-4
    code, rec = report("entropy", "--family", POWER, "--theta", "1.5")
    assert code == 0
    assert rec["result"]["I_phi"] == pytest.approx(rec["result"]["I_phi_direct"], abs=1e-7)
    code, rec = report("divergence", "--family", POWER, "--theta", "1", "--theta2", "2")
    assert code == 0 and rec["result"]["divergence"]["value"] > 0
    code, rec = report("maxent", "--family", POWER, "--theta", "1", "--trials", "4")
    assert code == 0 and rec["result"]["passed"]


def test_fixture_command():
    code, out, _ = call("fixture", "example3")
    assert code == 0
    assert "PASS" in out and "FAIL" not in out


def test_report_csv(tmp_path):
    target = tmp_path / "grid.csv"
    code, out, err = call("report", "--family", CONSTANT, "--theta-grid", "[0.25, 1, 4, -1]", "--output", str(target))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("# columns:")
    assert lines[1].startswith("theta_1,status,G,Z,eta_1")
    assert len(lines) == 6
    assert lines[-1].startswith("-1.0,OutsideDomain")
    assert target.read_text() == out
    assert json.loads(err)["result"]["in_domain"] == 3


def test_report_empty_grid_is_usage_error():
    code, _, _ = call("report", "--family", CONSTANT, "--theta-grid", "[]")
    assert code == 1


def test_usage_errors(tmp_path):
    assert call("bound", "--config", str(tmp_path / "missing.json"))[0] == 1
    assert call("lnphi", "--deformer", "{not json", "--u", "1")[0] == 1
    assert call("lnphi", "--deformer", '{"kind": "weird"}', "--u", "1")[0] == 1
    assert call("normalize", "--theta", "1")[0] == 1
    assert call("nonsense")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"version": 2}))
    assert call("lnphi", "--config", str(bad))[0] == 1


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"version": 1, "deformer": {"kind": "power", "q": 0.5}, "u": 9.0}))
    assert call("lnphi", "--config", str(cfg))[1].strip() == "4.0"
    assert call("lnphi", "--config", str(cfg), "--u", "4")[1].strip() == "2.0"


def test_output_is_deterministic():
    args = ("bound", "--family", POWER, "--theta", "0.8")
    assert call(*args)[1] == call(*args)[1]


def test_fmt_rounds_and_encodes():
    assert fmt(0.1 + 0.2) == 0.3
    assert fmt(float("inf")) == "inf"
    assert fmt(float("nan")) == "nan"


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "phifam.cli", "lnphi", "--deformer", '{"kind": "constant"}', "--u", "3"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "2.0"
