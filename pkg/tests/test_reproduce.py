import json

import pytest

from tensorbodies.reproduce import CHECKS, reproduce_suite, run_check, write_report

TIMING = {"seconds", "wall_clock_seconds", "seconds_1000x6"}


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in TIMING}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def test_every_check_has_an_anchor():
    assert list(CHECKS) == [f"AC{i}" for i in range(1, 12)]
    assert all(anchor for anchor, _ in CHECKS.values())


def test_unknown_check():
    with pytest.raises(KeyError):
        run_check("AC99")


def test_report_is_deterministic_modulo_timing(tmp_path):
    only = ["AC3", "AC5", "AC10"]
    a = reproduce_suite(seed=3, only=only)
    b = reproduce_suite(seed=3, only=only)
    pa, pb = tmp_path / "a.json", tmp_path / "b.json"
    write_report(a, pa)
    write_report(b, pb)
    assert _strip_timing(json.loads(pa.read_text())) == _strip_timing(json.loads(pb.read_text()))


def test_jobs_do_not_change_the_verdicts():
    only = ["AC3", "AC5", "AC8"]
    one = reproduce_suite(jobs=1, only=only)
    two = reproduce_suite(jobs=2, only=only)
    assert [c["passed"] for c in one["checks"]] == [c["passed"] for c in two["checks"]]
    assert [c["id"] for c in two["checks"]] == only
