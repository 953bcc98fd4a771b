import csv
import json
import math
import subprocess
import sys

import pytest

from biparam.cli import SUITES, junit_xml, main, run_suite


def test_counterexample1_outputs(tmp_path):
    code = main(["counterexample1", "--theta", str(math.pi / 4), "--out", str(tmp_path)])
    assert code == 0
    verdict = json.loads((tmp_path / "counterexample1.json").read_text())
    assert verdict["passed"] and verdict["witnesses"][0]["value"] >= 1 / 16
    with (tmp_path / "counterexample1.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["version"] == "1"


def test_axis_angle_is_configuration_error(tmp_path, capsys):
    assert main(["counterexample1", "--theta", str(math.pi / 2), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_counterexample2_rows(tmp_path):
    assert main(["counterexample2", "--p", "4", "16", "--out", str(tmp_path)]) == 0
    verdict = json.loads((tmp_path / "counterexample2.json").read_text())
    assert [r["p"] for r in verdict["rows"]] == [4.0, 16.0]
    assert all(r["lemma_A"] and r["lemma_C"] for r in verdict["rows"])


def test_counterexample2_rejects_small_p(tmp_path):
    assert main(["counterexample2", "--p", "2", "--out", str(tmp_path)]) == 2


def test_sweep_rejects_bad_epsilon(tmp_path):
    assert main(["interpolation-sweep", "--epsilon", "2", "--out", str(tmp_path)]) == 2


def test_unknown_suite(tmp_path):
    assert main(["verify", "--suite", "nope", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("name", ["prop1", "journe"])
def test_suite_passes(name):
    cases = run_suite(name, seed=1)
    assert cases and all(ok for _, ok, _ in cases)


def test_verify_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["verify", "--suite", "counting", "--seed", "5", "--out", str(d)]) == 0
    assert (a / "verify-counting.xml").read_bytes() == (b / "verify-counting.xml").read_bytes()


def test_junit_failure_element():
    xml = junit_xml("demo", [("ok", True, "fine"), ("bad", False, "broken")])
    assert 'failures="1"' in xml and "<failure" in xml


def test_suites_listed():
    assert set(SUITES) == {"geometry", "prop1", "counting", "journe", "gamma", "regularity"}


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "biparam", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "biparam" in out.stdout
