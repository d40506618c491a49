"""Acceptance criteria 1-9, one test each.

Every test prints a ``[PASS]``/``[FAIL]`` line with the measured value and
its limit. Run directly (``python tests/test_acceptance.py``) for just the
nine lines, or through pytest (``pytest tests/test_acceptance.py -v``).
"""

import sys

import pytest

from kernel_pe.verify import (
    DEFAULT_TOLERANCES,
    check_batch_equivalence,
    check_common_limit,
    check_cost_recursion,
    check_determinism,
    check_exact_q,
    check_policy_improvement,
    check_real_time,
    check_selection_economy,
    check_sr_identity,
)


def _report(capsys, res):
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()


def test_criterion_1_batch_equivalence(capsys):
    _report(capsys, check_batch_equivalence(DEFAULT_TOLERANCES[1]))


def test_criterion_1_runtime(capsys):
    import time

    from kernel_pe import verify

    verify._batch_runs.cache_clear()
    t0 = time.perf_counter()
    check_batch_equivalence(DEFAULT_TOLERANCES[1])
    secs = time.perf_counter() - t0
    with capsys.disabled():
        print(f"\n[{'PASS' if secs < 30 else 'FAIL'}] criterion 1 runtime: {secs:.1f}s limit=30s")
    assert secs < 30.0


def test_criterion_2_cost_recursion(capsys):
    _report(capsys, check_cost_recursion(DEFAULT_TOLERANCES[2]))


@pytest.mark.slow
def test_criterion_3_exact_q(capsys):
    _report(capsys, check_exact_q(DEFAULT_TOLERANCES[3]))


@pytest.mark.slow
def test_criterion_4_common_limit(capsys):
    _report(capsys, check_common_limit(DEFAULT_TOLERANCES[4]))


@pytest.mark.slow
def test_criterion_5_selection_economy(capsys):
    _report(capsys, check_selection_economy())


@pytest.mark.slow
def test_criterion_6_policy_improvement(capsys):
    _report(capsys, check_policy_improvement())


def test_criterion_7_real_time(capsys):
    _report(capsys, check_real_time(DEFAULT_TOLERANCES[7]))


def test_criterion_8_sr_identity(capsys):
    _report(capsys, check_sr_identity(DEFAULT_TOLERANCES[8]))


def test_criterion_9_determinism(capsys):
    _report(capsys, check_determinism())


if __name__ == "__main__":
    from kernel_pe.verify import format_table, run_checks

    results = run_checks(progress=lambda r: print(r.line(), flush=True))
    print(format_table(results))
    sys.exit(0 if all(r.passed for r in results) else 1)
