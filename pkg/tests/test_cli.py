import json
import subprocess
import sys

import pytest

from kron.cli import SchemaError, load_config, main
from kron.global_ext import ValidationFailed

MINIMAL = {"command": "limit-check", "Y": {"rank": 1, "basis": [["1"]]}, "nu": "standard"}


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_minimal_job_runs(capsys):
    code, report = run(capsys, "limit-check", "first", json.dumps(MINIMAL))
    assert code == 0
    assert report["checks"][0] == {"name": "KLF-1", "lhs": "-2·L", "rhs": "-2·L", "equal": True}
    assert set(report) >= {"inputs_hash", "command", "exact", "numeric", "checks", "version", "seed"}
    assert "timings" not in report


def test_job_file_and_hash_stability(tmp_path, capsys):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(MINIMAL))
    _, a = run(capsys, "limit-check", "first", str(path))
    _, b = run(capsys, "limit-check", "first", json.dumps(MINIMAL))
    assert a["inputs_hash"] == b["inputs_hash"]
    _, c = run(capsys, "limit-check", "first", json.dumps(dict(MINIMAL, q=3)))
    assert c["inputs_hash"] != a["inputs_hash"]


def test_unknown_schema():
    with pytest.raises(SchemaError):
        load_config(json.dumps(dict(MINIMAL, schema="job-v2")))


def test_inconsistent_genus_fixture():
    with pytest.raises(ValidationFailed) as info:
        load_config('{"fixture": "bad_genus"}', "zeta")
    assert info.value.check == "iv"


def test_structured_error_and_exit_code(capsys):
    code, report = run(capsys, "zeta", "bad_genus")
    assert code != 0
    assert report["error"]["type"] == "ValidationFailed" and report["error"]["check"] == "iv"


def test_zeta_constant_extension(capsys):
    code, report = run(capsys, "zeta", "constant_f4")
    assert code == 0
    assert report["exact"]["value_at_0"] == "-1/3"
    assert report["exact"]["derivative_at_0"] == "-8/9·L"


def test_precision_doubling_keeps_exact_values(capsys):
    _, low = run(capsys, "zeta", "constant_f4", "--precision", "32")
    _, high = run(capsys, "zeta", "constant_f4", "--precision", "64")
    assert low["exact"] == high["exact"]


def test_norm_eval_value(capsys):
    # W = U^{-1} = u^{-40} and |u| = q^{-1}
    job = json.dumps({"q": 2, "nu": {"rank": 1, "basis": [["u^40"]]}, "x": ["1"]})
    code, report = run(capsys, "norm", "eval", job)
    assert code == 0 and report["exact"]["value"] == "40"


def test_failed_precision_is_structured(capsys):
    # singular, but only up to truncated series, so no pivot is ever certified
    job = json.dumps({"q": 2, "nu": {"rank": 2, "basis": [["1/(1+u)", "1"], ["1", "1+u"]]}, "x": ["1", "0"]})
    code, report = run(capsys, "norm", "eval", job)
    assert code == 3
    assert report["error"]["type"] == "PrecisionExhausted"
    assert report["ok"] is False


@pytest.mark.parametrize("argv,check", [
    (["norm", "orth", '{"q":2,"nu":{"rank":2,"weights":["0","1/2"]},"lattice":[["1","z^-1"],["0","z"]]}'],
     "discriminant from orthogonal basis"),
    (["eisenstein", "germ", '{"Y":{"q":3,"basis":[["T","1"],["0","1"]]}}'], "value at 0"),
    (["eisenstein", "numeric", '{"Y":{"q":2,"basis":[["1"]]},"w":["1/T"],"s":2}'], "direct sum vs continuation"),
    (["limit-check", "second", '{"Y":{"q":2,"basis":[["1","0"],["0","1"]]},"w":["1/T","0"]}'], "KLF-2"),
    (["multi", "limit", "real_quadratic"], "torus volume"),
    (["multi", "key-check", '{"fixture":"real_quadratic","s":[2.0]}'], "integral representation at s=2.0"),
    (["lfunc", "ring", "two_class_order"], "value at 0"),
    (["lfunc", "ray", '{"fixture":"rational_q3","ray":1}'], "value at 0"),
])
def test_commands(capsys, argv, check):
    code, report = run(capsys, *argv)
    assert code == 0, report
    assert check in [c["name"] for c in report["checks"]]


def test_oracle_ideals(capsys):
    code, report = run(capsys, "oracle", "ideals", '{"fixture":"rational_q3","bound":2}')
    assert code == 0
    assert report["exact"]["counts"] == [["0", 1], ["1", 3], ["2", 9]]


def test_atomic_out(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["zeta", "rational_q3", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["exact"]["value_at_0"] == "-1/2"
    assert [p.name for p in tmp_path.iterdir()] == ["report.json"]


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kron.cli", "zeta", "rational_q3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ok"] is True
