import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conicheat.cone_model import (
    ConePoint,
    ContourSpec,
    ModeSumConfig,
    cancellation_exponent,
    euclidean_heat,
    euclidean_resolvent_2d,
    euclidean_resolvent_3d,
    gaussian_bound_fit,
    heat_from_resolvent_contour,
    heat_kernel_cone,
    heat_kernel_grid,
    resolvent_cone,
    resolvent_grid,
    verify_bf0_zf_matching,
)
from conicheat.cross_section import ConeGeometry, sphere_point
from conicheat.errors import DiagonalSingularityError, TruncationError
from conicheat.special_functions import EULER_GAMMA, bessel_k, composite_gauss

LENGTHS = [math.pi, 1.5 * math.pi, 2 * math.pi, 3 * math.pi]


def _planar_distance(r, y, r2, y2):
    return np.sqrt(r * r + r2 * r2 - 2 * r * r2 * np.cos(y - y2))


# ---------------------------------------------------------------- oracles

def test_euclidean_closed_forms():
    assert euclidean_heat(2, 0.7, 0.0) == pytest.approx(1 / (4 * math.pi * 0.7))
    assert euclidean_heat(3, 1.0, 2.0) == pytest.approx((4 * math.pi) ** -1.5 * math.exp(-1))
    assert euclidean_resolvent_3d(0.5, 2.0) == pytest.approx(math.exp(-1) / (8 * math.pi))


def test_euclidean_resolvent_small_argument():
    k, d = 1e-5, 1e-4
    val = euclidean_resolvent_2d(k, d) + math.log(k * d) / (2 * math.pi)
    assert val == pytest.approx((math.log(2) - EULER_GAMMA) / (2 * math.pi), abs=1e-10)


def test_plane_heat_matches_gaussian(plane):
    # grid kept where exp(r r' (1 - cos gap) / 2t) * eps stays far below 1e-8
    t = np.array([0.3, 0.7, 1.5, 4.0, 10.0])[:, None, None]
    r = np.array([0.2, 0.7, 1.0, 2.0, 3.0])[None, :, None]
    gap = np.array([0.0, 0.4, 1.3, 2.5, math.pi])[None, None, :]
    r2 = 1.3
    got = heat_kernel_grid(plane, t, r, 0.0, r2, gap)
    want = euclidean_heat(2, t, _planar_distance(r, 0.0, r2, gap))
    assert np.max(np.abs(got / want - 1)) < 1e-8


def test_unresolved_kernel_detected(plane):
    p, q = ConePoint(4.0, 0.0), ConePoint(1.3, math.pi)
    amp = cancellation_exponent(plane, 0.05, p, q)
    assert amp > 100
    got = heat_kernel_cone(plane, 0.05, p, q)
    # absolute accuracy only: the true value is about 1e-80
    assert abs(got) < 1e-14


def test_space_heat_matches_gaussian(space3):
    y = sphere_point(0.0, 0.0)
    for ang in (0.3, 1.0, 2.5):
        y2 = sphere_point(ang, 0.0)
        for t in (0.1, 1.0, 5.0):
            d = math.sqrt(1 + 1.5 ** 2 - 3 * math.cos(ang))
            got = heat_kernel_cone(space3, t, ConePoint(1.0, y), ConePoint(1.5, y2))
            assert got == pytest.approx(euclidean_heat(3, t, d), rel=1e-8)


@pytest.mark.parametrize("length", LENGTHS)
def test_diagonal_scaling(length):
    cone = ConeGeometry.circle(length)
    for t in (0.1, 1.0, 7.0):
        for r in (0.3, 1.7, 5.0):
            lhs = heat_kernel_cone(cone, t, ConePoint(r, 0.4), ConePoint(r, 0.4))
            rhs = r ** -2 * heat_kernel_cone(cone, t / r ** 2, ConePoint(1.0, 0.4), ConePoint(1.0, 0.4))
            assert lhs == pytest.approx(rhs, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 10.0), st.floats(0.1, 5.0), st.floats(0.0, 6.0),
       st.floats(0.1, 5.0), st.floats(0.0, 6.0))
def test_heat_symmetric_and_positive(t, r, y, r2, y2):
    cone = _FLAT
    a = heat_kernel_cone(cone, t, ConePoint(r, y), ConePoint(r2, y2))
    b = heat_kernel_cone(cone, t, ConePoint(r2, y2), ConePoint(r, y))
    assert a > 0
    assert a == pytest.approx(b, rel=1e-12)


_FLAT = ConeGeometry.circle(1.5 * math.pi)


def test_long_time_diagonal_limit(flat_cone):
    p = ConePoint(1.0, 0.2)
    vals = [t * heat_kernel_cone(flat_cone, t, p, p) for t in (1e2, 1e4, 1e6)]
    assert vals[-1] == pytest.approx(1 / (2 * flat_cone.volume), rel=1e-5)
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])


def test_short_time_gaussian_model(flat_cone):
    p, q = ConePoint(1.0, 0.0), ConePoint(1.2, 0.5)
    d = flat_cone.cone_distance(1.0, 0.0, 1.2, 0.5)
    ratios = [heat_kernel_cone(flat_cone, t, p, q) / euclidean_heat(2, t, d)
              for t in (0.1, 0.03, 0.01)]
    assert abs(ratios[-1] - 1) < 1e-8


def test_truncation_error_reports_limit():
    cone = ConeGeometry.circle(2 * math.pi, cutoff=4)
    cfg = ModeSumConfig(max_modes=3)
    with pytest.raises(TruncationError):
        heat_kernel_cone(cone, 1e-3, ConePoint(1.0, 0.0), ConePoint(1.0, 0.01), cfg)


def test_semigroup_on_plane(plane):
    p, q = ConePoint(0.8, 0.0), ConePoint(1.1, 1.0)
    t1, t2 = 0.2, 0.3
    r, wr = composite_gauss(np.linspace(0, 6.0, 13), 12)
    th, wt = composite_gauss(np.linspace(0, 2 * math.pi, 9), 16)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    a = heat_kernel_grid(plane, t1, p.r, p.y, rr, tt)
    b = heat_kernel_grid(plane, t2, rr, tt, q.r, q.y)
    total = np.sum(wr[:, None] * wt[None, :] * rr * a * b)
    assert total == pytest.approx(heat_kernel_cone(plane, t1 + t2, p, q), rel=1e-5)


# -------------------------------------------------------------- resolvent

@pytest.mark.parametrize("k", [0.1, 1.0, 4.0])
def test_plane_resolvent_is_k0(plane, k):
    for r2, gap in ((1.5, 0.0), (0.4, 2.0), (2.5, math.pi)):
        d = _planar_distance(1.0, 0.0, r2, gap)
        got = resolvent_cone(plane, k, ConePoint(1.0, 0.0), ConePoint(r2, gap))
        assert got == pytest.approx(bessel_k(0.0, k * d) / (2 * math.pi), rel=1e-8)


def test_space_resolvent_closed_form(space3):
    y, y2 = sphere_point(0.0, 0.0), sphere_point(1.0, 0.0)
    d = math.sqrt(1 + 4 - 4 * math.cos(1.0))
    got = resolvent_cone(space3, 0.7, ConePoint(1.0, y), ConePoint(2.0, y2))
    assert got == pytest.approx(euclidean_resolvent_3d(0.7, d), rel=1e-8)


def test_resolvent_symmetric(flat_cone):
    a = resolvent_cone(flat_cone, 0.9, ConePoint(0.5, 0.3), ConePoint(2.0, 4.0))
    b = resolvent_cone(flat_cone, 0.9, ConePoint(2.0, 4.0), ConePoint(0.5, 0.3))
    assert a == pytest.approx(b, rel=1e-13)


def test_resolvent_real_for_real_k(flat_cone):
    val = resolvent_cone(flat_cone, 0.9, ConePoint(0.5, 0.3), ConePoint(2.0, 4.0))
    assert np.isrealobj(val)


def test_resolvent_diagonal_raises(flat_cone):
    p = ConePoint(1.0, 0.5)
    with pytest.raises(DiagonalSingularityError):
        resolvent_cone(flat_cone, 1.0, p, p)


def test_resolvent_solves_helmholtz(flat_cone):
    k, h = 0.8, 1e-3
    r0, y0 = 1.3, 1.0
    src = (0.7, 3.0)
    dr = np.array([-h, 0.0, h])
    rr, yy = np.meshgrid(r0 + dr, y0 + dr, indexing="ij")
    u = resolvent_grid(flat_cone, k, rr, yy, src[0], src[1])
    u_rr = (u[2, 1] - 2 * u[1, 1] + u[0, 1]) / h ** 2
    u_r = (u[2, 1] - u[0, 1]) / (2 * h)
    u_yy = (u[1, 2] - 2 * u[1, 1] + u[1, 0]) / h ** 2
    residual = -(u_rr + u_r / r0 + u_yy / r0 ** 2) + k * k * u[1, 1]
    assert abs(residual) / abs(u[1, 1]) < 1e-4


# ---------------------------------------------------------------- contour

def test_contour_on_plane(plane):
    got = heat_from_resolvent_contour(plane, 1.0, ConePoint(1.0, 0.0), ConePoint(2.0, 0.0))
    assert got.real == pytest.approx(math.exp(-0.25) / (4 * math.pi), rel=1e-6)
    assert abs(got.imag) < 1e-9


def test_contour_equal_radii_unsupported(flat_cone):
    with pytest.raises(TruncationError):
        heat_from_resolvent_contour(flat_cone, 1.0, ConePoint(1.0, 0.0), ConePoint(1.0, 1.0))


def test_contour_on_flat_cone(flat_cone):
    p, q = ConePoint(0.9, 0.3), ConePoint(1.4, 2.2)
    got = heat_from_resolvent_contour(flat_cone, 0.7, p, q)
    assert got.real == pytest.approx(heat_kernel_cone(flat_cone, 0.7, p, q), rel=1e-6)
    assert abs(got.imag) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.3, 3.0), st.floats(0.0, 4.7),
       st.floats(0.3, 3.0), st.floats(0.0, 4.7))
def test_contour_property(t, r, y, r2, y2):
    # equal radii leave the resolvent mode sum without a tail bound
    if abs(r - r2) < 0.05:
        return
    p, q = ConePoint(r, y), ConePoint(r2, y2)
    got = heat_from_resolvent_contour(_FLAT, t, p, q)
    want = heat_kernel_cone(_FLAT, t, p, q)
    assert abs(got.real - want) <= 1e-6 * want + 1e-12
    assert abs(got.imag) < 1e-9


@pytest.mark.parametrize("phi", [0.4 * math.pi, math.pi, 1.2 * math.pi])
def test_contour_rejects_bad_angle(phi):
    with pytest.raises(ValueError):
        ContourSpec(phi=phi)


# ------------------------------------------------------------------ bound

def _bound_samples(rng, count, t_range=(0.1, 10.0)):
    out = []
    for _ in range(count):
        t = math.exp(rng.uniform(*np.log(t_range)))
        out.append((t, ConePoint(rng.uniform(0.2, 4), rng.uniform(0, 6)),
                    ConePoint(rng.uniform(0.2, 4), rng.uniform(0, 6))))
    return out


def test_gaussian_bound_plane_is_sharp(plane):
    fit = gaussian_bound_fit(plane, _bound_samples(np.random.default_rng(3), 30))
    assert not fit.violations
    assert len(fit.skipped) < 10
    # at C2 = 4 the Gaussian is its own bound
    assert dict(fit.sweep)[4.0] == pytest.approx(1 / (4 * math.pi), rel=1e-9)
    assert fit.c1 <= 1 / (4 * math.pi) * (1 + 1e-9)


@pytest.mark.parametrize("length", [math.pi, 1.5 * math.pi, 3 * math.pi])
def test_gaussian_bound_exists(length):
    cone = ConeGeometry.circle(length)
    fit = gaussian_bound_fit(cone, _bound_samples(np.random.default_rng(4), 30))
    assert not fit.violations
    assert len(fit.skipped) < 10
    assert math.isfinite(fit.c1) and math.isfinite(fit.c2)


def test_gaussian_bound_skips_unresolved(plane):
    samples = [(0.05, ConePoint(4.0, 0.0), ConePoint(4.0, math.pi)),
               (1.0, ConePoint(1.0, 0.0), ConePoint(1.0, 1.0)),
               (2.0, ConePoint(1.0, 0.0), ConePoint(2.0, 0.0))]
    fit = gaussian_bound_fit(plane, samples)
    assert fit.skipped == [0]
    assert not fit.violations


# --------------------------------------------------------------- matching

def test_matching_near_zero_frequency(plane):
    rep = verify_bf0_zf_matching(plane, [1e-2, 1e-3, 1e-4], [0.25, 0.5, 0.75])
    assert rep.max_deviation < 1e-2
    assert np.all(rep.relative_residual[-1] <= rep.relative_residual[0])
    assert rep.log_coefficient == pytest.approx(-1 / (2 * math.pi), abs=1e-4)
    assert np.allclose(rep.higher_mode_sum, rep.higher_mode_limit, rtol=1e-3)


def test_matching_on_flat_cone(flat_cone):
    rep = verify_bf0_zf_matching(flat_cone, [1e-3, 1e-5], [0.5])
    assert rep.log_coefficient == pytest.approx(-1 / flat_cone.volume, abs=1e-4)
    assert rep.max_deviation < 1e-2


def test_matching_requires_plane_dimension(space3):
    with pytest.raises(ValueError):
        verify_bf0_zf_matching(space3, [1e-3, 1e-4], [0.5])
