import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conicheat.errors import (ModelRejectionError, PoleError, PoleProximityError,
                              UndefinedDeterminantError)
from conicheat.zeta_det import (
    PhgExpansion,
    TraceModel,
    build_trace_model_from_cone,
    constant_trace_model,
    log_renormalized_det,
    mellin_term,
    mock_trace_model,
    power_trace_model,
    renormalized_zeta,
    zeta_laurent_at_zero,
    zeta_poles,
    zeta_result,
)

S_GRID = [-1.0, -0.3, 0.5, 1.0, 2.0, 0.4 + 1.3j]


def half_power_model():
    """F(t) = t^{-1/2} exp(-t), whose zeta function is Gamma(s - 1/2) / Gamma(s)."""
    t_lo, order = 0.05, 20
    short = [(k - 0.5, 0, (-1) ** k / math.factorial(k)) for k in range(order)]
    return TraceModel.from_function(lambda t: np.asarray(t, float) ** -0.5 * np.exp(-np.asarray(t, float)),
                                    short, [], t_lo, 60.0, short_order=order - 0.5)


def log_model():
    """F(t) = log(1 + t); its log t growth at infinity gives zeta a simple pole at 0."""
    t_lo, t_hi, order = 0.05, 50.0, 16
    short = [(k, 0, (-1) ** (k + 1) / k) for k in range(1, order)]
    long_ = [(0.0, 1, -1.0)] + [(k, 0, (-1) ** (k + 1) / k) for k in range(1, order)]
    return TraceModel.from_function(lambda t: np.log1p(np.asarray(t, float)), short, long_,
                                    t_lo, t_hi)


# ---------------------------------------------------------- mellin terms

def test_mellin_term_examples():
    s = 0.3 + 0.2j
    assert mellin_term(0, 0, s) == pytest.approx(1 / s)
    assert mellin_term(0, 1, s) == pytest.approx(-1 / s ** 2)
    assert mellin_term(1, 0, 1) == pytest.approx(0.5)


def test_mellin_term_with_upper_limit():
    val = mellin_term(0.5, 1, 1.2, upper=2.0)
    ref = mpmath.quad(lambda t: t ** (0.5 + 1.2 - 1) * mpmath.log(t), [0, 2])
    assert val == pytest.approx(complex(ref), rel=1e-12)


def test_mellin_term_pole():
    with pytest.raises(PoleError) as info:
        mellin_term(0.5, 2, -0.5)
    assert info.value.order == 3


# --------------------------------------------------------- exact models

@pytest.mark.parametrize("s", S_GRID)
def test_constant_trace_gives_zero(s):
    assert abs(renormalized_zeta(constant_trace_model(2.5), s)) < 1e-10


def test_constant_trace_laurent():
    assert np.allclose(zeta_laurent_at_zero(constant_trace_model(-1.7)), 0.0, atol=1e-12)
    assert log_renormalized_det(constant_trace_model(3.0)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("z", [-1.0, -0.5, 0.5, 2.0])
@pytest.mark.parametrize("s", [0.25, 1.5, 3.0 - 1.0j])
def test_power_trace_gives_zero(z, s):
    assert abs(renormalized_zeta(power_trace_model(z, 1.3), s)) < 1e-10


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, -0.7, 1.0 + 2.0j])
def test_two_point_spectrum(s):
    got = renormalized_zeta(mock_trace_model([1.0, 2.0]), s)
    assert got == pytest.approx(1 + 2 ** -complex(s), abs=1e-8)


def test_two_point_spectrum_laurent():
    res, val, der = zeta_laurent_at_zero(mock_trace_model([1.0, 2.0]))
    assert abs(res) < 1e-12
    assert val == pytest.approx(2.0, abs=1e-10)
    assert der == pytest.approx(-math.log(2), abs=1e-10)
    assert log_renormalized_det(mock_trace_model([1.0, 2.0])) == pytest.approx(math.log(2), abs=1e-7)


def test_single_eigenvalue_one():
    assert log_renormalized_det(mock_trace_model([1.0])) == pytest.approx(0.0, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.5, 10.0), min_size=1, max_size=5, unique=True))
def test_mock_log_det_is_sum_of_logs(lams):
    lams = sorted(lams)
    if min(np.diff(lams), default=1.0) < 1e-6:
        return
    model = mock_trace_model(lams)
    assert log_renormalized_det(model) == pytest.approx(sum(math.log(x) for x in lams), abs=1e-7)


def test_multiplicities():
    model = mock_trace_model([0.5, 3.0], multiplicities=[2, 3])
    assert log_renormalized_det(model) == pytest.approx(2 * math.log(0.5) + 3 * math.log(3.0), abs=1e-8)


def test_half_power_model_and_poles():
    model = half_power_model()
    for s in (2.0, 0.8 + 0.5j, -0.2):
        want = complex(mpmath.gamma(s - 0.5) / mpmath.gamma(s))
        assert renormalized_zeta(model, s) == pytest.approx(want, rel=1e-9)
    poles = zeta_poles(model)
    assert (0.5, 1) in poles and (-0.5, 1) in poles
    with pytest.raises(PoleProximityError):
        renormalized_zeta(model, 0.5 + 1e-9)


# ------------------------------------------------------------ structure

def test_conjugate_symmetry():
    model = mock_trace_model([0.7, 1.9, 4.0])
    s = 0.3 + 1.1j
    assert renormalized_zeta(model, s.conjugate()) == pytest.approx(renormalized_zeta(model, s).conjugate(), rel=1e-12)


@pytest.mark.parametrize("split", [0.3, 0.6, 2.0])
def test_split_point_independence(split):
    model = mock_trace_model([0.7, 1.9, 4.0])
    for s in (0.5, 2.0 + 1.0j):
        assert renormalized_zeta(model, s, split=split) == pytest.approx(renormalized_zeta(model, s), rel=1e-10)
    assert np.allclose(zeta_laurent_at_zero(model, split=split), zeta_laurent_at_zero(model), atol=1e-10)


def test_split_outside_model_rejected():
    with pytest.raises(ValueError):
        renormalized_zeta(mock_trace_model([1.0]), 1.0, split=100.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(-5, 5))
def test_adding_constant_leaves_zeta_unchanged(c):
    model = mock_trace_model([0.8, 2.5])
    shifted = model.plus_constant(c)
    assert renormalized_zeta(shifted, 1.5) == pytest.approx(renormalized_zeta(model, 1.5), abs=1e-10)
    assert np.allclose(zeta_laurent_at_zero(shifted), zeta_laurent_at_zero(model), atol=1e-10)


def test_laurent_matches_finite_differences():
    model = mock_trace_model([0.6, 1.7, 5.0])
    res, val, der = zeta_laurent_at_zero(model)
    assert abs(res) < 1e-12

    def central(h):
        return (renormalized_zeta(model, h) - renormalized_zeta(model, -h)).real / (2 * h)

    h = 0.02
    richardson = (4 * central(h / 2) - central(h)) / 3
    assert der == pytest.approx(richardson, abs=1e-7)
    assert val == pytest.approx(renormalized_zeta(model, 0.0).real, abs=1e-10)


def test_result_bundle(tmp_path):
    result = zeta_result(mock_trace_model([1.0, 2.0]))
    assert result.evaluation(0.0) == pytest.approx(result.value_at_0, abs=1e-10)
    assert result.pole_list == []
    result.to_json(tmp_path / "z.json", [0.5, 1.0])
    result.to_csv(tmp_path / "z.csv", [0.5, 1.0])
    assert (tmp_path / "z.csv").read_text().startswith("s_re,s_im,zeta_re,zeta_im")


def test_pole_at_zero_blocks_determinant():
    res, _, _ = zeta_laurent_at_zero(log_model())
    assert res == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(UndefinedDeterminantError) as info:
        log_renormalized_det(log_model())
    assert info.value.residue == pytest.approx(1.0, abs=1e-10)


def test_log_model_values():
    # zeta(s) = pi / (s sin(pi s) Gamma(s)) = Gamma(1 - s) / s for 0 < Re s < 1
    for s in (0.3, 0.7 + 0.4j):
        want = complex(mpmath.gamma(1 - s) / s)
        assert renormalized_zeta(log_model(), s) == pytest.approx(want, rel=1e-9)


def test_expansion_validation():
    with pytest.raises(ValueError):
        PhgExpansion([(1.0, 0, 1.0)], remainder_order=0.5)
    with pytest.raises(ValueError):
        PhgExpansion([(1.0, -1, 1.0)], remainder_order=2.0)


def test_discontinuous_model_rejected():
    with pytest.raises(ModelRejectionError):
        TraceModel.from_function(lambda t: np.asarray(t, float) * 0 + 1.0,
                                 [(0.0, 0, 1.0)], [(0.0, 0, 1.1)], 0.5, 2.0)


# ------------------------------------------------------------ cone models

def test_plane_model_is_zero(plane):
    model = build_trace_model_from_cone(plane)
    assert max(model.splice_gaps()) < 1e-8
    assert np.allclose([a for _, _, a in model.short_expansion.terms], 0.0, atol=1e-8)
    assert abs(log_renormalized_det(model)) < 1e-8


def test_flat_cone_determinant(flat_cone):
    model = build_trace_model_from_cone(flat_cone)
    assert max(model.splice_gaps()) < 1e-8
    const = dict(((z, p), a) for z, p, a in model.short_expansion.terms)[(0.0, 0)]
    assert const == pytest.approx(7 / 144, abs=1e-7)
    res, val, der = zeta_laurent_at_zero(model)
    assert abs(res) < 1e-8 and abs(val) < 1e-6
    assert abs(log_renormalized_det(model)) < 1e-6


def test_cone_model_rejects_bad_trace(flat_cone):
    with pytest.raises(ModelRejectionError) as info:
        build_trace_model_from_cone(flat_cone, trace_fn=lambda t: math.sin(5 * math.log(t)))
    assert "short_misfit" in info.value.diagnostics
