import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conicheat.asymptotic_lab import (
    expected_heat_order,
    fit_leading_order,
    render_report,
    verify_all_heat_orders,
    verify_heat_orders,
    verify_resolvent_orders,
)
from conicheat.errors import FitError

RHO = np.geomspace(1e-4, 1e-1, 24)


def test_pure_power():
    fit = fit_leading_order(RHO, RHO ** 3)
    assert fit.exponent == pytest.approx(3.0, abs=1e-9)
    assert fit.log_power == 0
    assert fit.coefficient == pytest.approx(1.0, rel=1e-8)


def test_power_with_log():
    fit = fit_leading_order(RHO, RHO ** 2 * np.log(1 / RHO))
    assert fit.exponent == pytest.approx(2.0, abs=1e-6)
    assert fit.log_power == 1


def test_contaminated_power():
    fit = fit_leading_order(RHO, 5 * RHO ** 1.5 * (1 + RHO))
    assert fit.exponent == pytest.approx(1.5, abs=0.02)
    assert fit.coefficient == pytest.approx(5.0, rel=0.02)


def test_negative_values():
    fit = fit_leading_order(RHO, -2 * RHO ** 0.5)
    assert fit.coefficient == pytest.approx(-2.0, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 4), st.floats(0.01, 100), st.floats(0.1, 10))
def test_scale_equivariance(alpha, c, lam):
    base = fit_leading_order(RHO, RHO ** alpha * (1 + RHO), allow_log=False)
    scaled = fit_leading_order(RHO, c * RHO ** alpha * (1 + RHO), allow_log=False)
    assert scaled.exponent == pytest.approx(base.exponent, abs=1e-9)
    assert scaled.coefficient == pytest.approx(c * base.coefficient, rel=1e-8)
    # rescaling rho multiplies the coefficient by lam^alpha
    rho2 = RHO * min(lam, 1.0)
    pure = fit_leading_order(rho2, (rho2 / lam) ** alpha, allow_log=False)
    assert pure.exponent == pytest.approx(alpha, abs=1e-9)
    assert pure.coefficient == pytest.approx(lam ** -alpha, rel=1e-8)


def test_sign_change_raises():
    with pytest.raises(FitError) as info:
        fit_leading_order(RHO, np.sin(1 / RHO))
    assert "rho" in info.value.diagnostics


def test_poor_fit_raises():
    rng = np.random.default_rng(0)
    with pytest.raises(FitError):
        fit_leading_order(RHO, np.exp(rng.normal(size=RHO.size)))


def test_preconditions():
    with pytest.raises(ValueError):
        fit_leading_order(RHO[:5], RHO[:5])
    with pytest.raises(ValueError):
        fit_leading_order(np.geomspace(1e-2, 1e-1, 10), np.geomspace(1e-2, 1e-1, 10))


def test_expected_orders():
    assert expected_heat_order(3, "zf") == 3
    assert expected_heat_order(3, "short_time_diag") == -3
    with pytest.raises(ValueError):
        expected_heat_order(3, "sc")


@pytest.mark.parametrize("regime", ["zf", "lb0", "bf0"])
def test_flat_cone_heat_orders(flat_cone, regime):
    check = verify_heat_orders(flat_cone, regime)
    assert abs(check.fit.exponent - 2.0) < 0.05
    assert check.status == "pass"


def test_space_short_time_diagonal(space3):
    check = verify_heat_orders(space3, "short_time_diag")
    assert check.fit.exponent == pytest.approx(-3.0, abs=1e-6)


def test_all_regimes_on_curved_cone(curved3):
    checks = verify_all_heat_orders(curved3)
    assert all(c.passed for c in checks)
    text = render_report(checks)
    assert "short_time_diag" in text and "fail" not in text


def test_plane_resolvent_log_coefficient(plane):
    rep = verify_resolvent_orders(plane)
    assert rep.log_coefficient == pytest.approx(-1 / (2 * math.pi), abs=1e-4)
    assert rep.log_ok() and rep.limit_ok()


def test_flat_cone_resolvent_log_coefficient(flat_cone):
    rep = verify_resolvent_orders(flat_cone)
    assert rep.log_coefficient == pytest.approx(-1 / flat_cone.volume, abs=1e-4)


def test_space_resolvent_finite_limit(space3):
    rep = verify_resolvent_orders(space3)
    assert rep.limit_ok()
    # limit is the Newtonian kernel 1 / (4 pi d) at the default points
    d = math.sqrt(1 + 1.5 ** 2 - 3 * math.cos(1.0))
    assert rep.limit == pytest.approx(1 / (4 * math.pi * d), rel=1e-5)
