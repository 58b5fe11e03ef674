import math

import pytest

from wick_limits.experiment import (
    ConvergenceRecord,
    SequenceSchedule,
    Tolerances,
    ceil_power,
    guarded_row,
    run_rows,
)


def test_ceil_power_snaps_float_noise():
    assert 1024 ** 0.8 > 256
    assert ceil_power(1024, 0.8) == 256
    assert [ceil_power(n, 0.8) for n in (4, 16, 64, 256, 1024)] == [4, 10, 28, 85, 256]
    assert ceil_power(10, 0.5) == math.ceil(math.sqrt(10))


def test_schedule_trends():
    ns = [4, 16, 64, 256, 1024]
    assert SequenceSchedule.power(0.8).trend_warnings(ns, 2 / 3) == []
    assert SequenceSchedule.power(0.6).trend_warnings(ns, 0.5) == []
    assert len(SequenceSchedule.power(0.6).trend_warnings(ns, 2 / 3)) == 1
    assert len(SequenceSchedule.constant(0).trend_warnings(ns, 2 / 3)) == 1
    assert SequenceSchedule.linear(1).trend_warnings(ns, 0.5) == ["b_n/n does not decrease towards 0"]
    with pytest.raises(ValueError):
        SequenceSchedule(lambda n: -1.0, "bad")(3)


def test_tolerances():
    tol = Tolerances()
    assert tol.within_bound(1.0, 1.0)
    assert tol.within_bound(1.0 + 5e-7, 1.0)
    assert not tol.within_bound(1.0 + 2e-6, 1.0)


def test_run_rows_threads_and_sorting():
    def row(n):
        return ConvergenceRecord(n=n, b_n=0.0)

    assert [r.n for r in run_rows([5, 1, 3, 3], row, max_workers=4)] == [1, 3, 5]


def test_guarded_row_records_errors():
    def compute(rec):
        rec.measured_l1 = 1.0
        raise ArithmeticError("boom")

    rec = guarded_row(3, 2.0, ("w",), compute)
    assert rec.error == "ArithmeticError: boom" and not rec.bound_satisfied and rec.warnings == ("w",)
