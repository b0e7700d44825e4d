import numpy as np

from didan import autodiff as ad
from didan.gradcheck import finite_difference_check


def test_quadratic_loss():
    def build(nodes):
        x = nodes["x"]
        return ad.sum_all(ad.mul(x, x))

    report = finite_difference_check(build, {"x": np.array([3.0])}, tol=1e-6)
    assert report.ok
    assert report.max_rel_error["x"] < 1e-8


def test_unused_parameter_reports_zero_error():
    def build(nodes):
        return ad.sum_all(ad.mul(nodes["x"], nodes["x"]))

    report = finite_difference_check(
        build, {"x": np.array([1.0]), "unused": np.array([4.0, 5.0])}, tol=1e-6
    )
    assert report.max_rel_error["unused"] == 0.0


def test_flags_wrong_gradient():
    # relu backward is wrong for a shifted graph baked in on purpose: use a
    # non-differentiable-free graph but corrupt the analytic side by
    # comparing against a different loss.
    def build(nodes):
        calls = getattr(build, "calls", 0)
        build.calls = calls + 1
        factor = 1.0 if calls == 0 else 1.5  # analytic pass sees a different loss
        return ad.sum_all(ad.scale(ad.mul(nodes["x"], nodes["x"]), factor))

    report = finite_difference_check(build, {"x": np.array([2.0])}, tol=1e-4)
    assert not report.ok
    assert "x" in report.failures
