import json
from pathlib import Path

import jsonschema
import pytest

from telescopes.cli import main

ROOT = Path(__file__).resolve().parent.parent
SPECS = ROOT / "specs"
SCHEMA = json.loads((ROOT / "schemas" / "report.v1.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--spec", str(SPECS / "alt_5_2.tspec"), "--levels", "3")
    assert code == 0
    assert "generation-axiom" in out and ": fail" not in out


def test_verify_skips_by_cap(capsys):
    code, out, _ = run(capsys, "verify", "--spec", str(SPECS / "alt_5_2.tspec"), "--levels", "3",
                       "--degree-cap", "30")
    assert code == 0 and "skipped-by-cap" in out


def test_corrupted_spec_fails(capsys):
    code, _, _ = run(capsys, "verify", "--spec", str(SPECS / "alt_5_2_corrupted.tspec"), "--levels", "3")
    assert code == 1


def test_missing_and_malformed_specs(capsys, tmp_path):
    assert run(capsys, "verify", "--spec", str(tmp_path / "nope.tspec"))[0] == 2
    bad = tmp_path / "bad.tspec"
    bad.write_text("kind = alt\nd = 5\n")
    assert run(capsys, "verify", "--spec", str(bad))[0] == 2


def test_eval(capsys):
    code, out, _ = run(capsys, "eval", "T(1,b0)", "3")
    assert code == 0 and "value = (x1x1x1 x1x2x1 x1x3x1)" in out
    code, out, _ = run(capsys, "eval", "D(1,id)", "5")
    assert code == 0 and "value = id" in out
    code, _, err = run(capsys, "eval", "T(1,b0", "3")
    assert code == 2 and "position 6" in err


def test_nf_and_head(capsys):
    code, out, _ = run(capsys, "nf", "D(1,g0)*T(1,b0)*D(1,g1)*T(1,b1)")
    assert code == 0 and "m-bound: pass" in out
    code, out, _ = run(capsys, "head", "eq", "T(1,b0)", "1")
    assert code == 0 and "equal = False" in out
    code, out, _ = run(capsys, "head", "eq", "T(1,b0)*T(1,b0)^-1", "1")
    assert "equal = True" in out


def test_act(capsys):
    code, out, _ = run(capsys, "act", "T(1,b0)", "x1x1@2")
    assert code == 0 and "image = x1x2@2" in out
    code, out, _ = run(capsys, "act", "T(1,b0)", "px1", "--length", "3")
    assert code == 1 and "insufficient prefix" in out


def test_gen2_json_is_deterministic_and_valid(capsys):
    args = ["gen2", "--spec", str(SPECS / "alt_5_2.tspec"), "--check-levels", "2..2", "--format", "json"]
    code, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert code == 0 and first == second
    doc = json.loads(first)
    jsonschema.validate(doc, SCHEMA)
    assert [r["check"] for r in doc["reports"]] == ["two-generator-construction", "two-generation"]


def test_bad_level_range(capsys):
    assert run(capsys, "gen2", "--check-levels", "3..2")[0] == 2


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2
