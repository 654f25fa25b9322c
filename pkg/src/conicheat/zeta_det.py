"""Meromorphic continuation of Mellin transforms of renormalized heat traces.

    zeta(s) = (1 / Gamma(s)) int_0^inf F(t) t^{s-1} dt,

with F described by a :class:`TraceModel`: a polyhomogeneous expansion at
t = 0, one in powers of 1/t at t = inf, and sampled values in between. The
integral is split at t = T (default 1). Expansion terms integrate in closed
form and the differences between F and its expansions are integrated
numerically over compact intervals, so they are entire in s.
"""

import csv
import json
import math
import cmath
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (ModelRejectionError, PoleError, PoleProximityError,
                     UndefinedDeterminantError)
from .special_functions.gamma import rgamma, rgamma_series_at_zero
from .special_functions.quadrature import integrate_adaptive

POLE_PROXIMITY = 1e-8
_REMOVABLE_RADIUS = 1e-3
_CAUCHY_POINTS = 32
_COEF_TOL = 1e-12


# ---------------------------------------------------------------- types

@dataclass
class PhgExpansion:
    """Polyhomogeneous expansion sum_i a_i x^{z_i} (log x)^{p_i} + O(x^N).

    At t = 0 the variable is x = t. At t = inf it is x = 1/t, so a term
    (z, p, a) stands for a t^{-z} (-log t)^p.

    Attributes
    ----------
    terms : list of (z, p, a)
    remainder_order : float
    at_infinity : bool
    """

    terms: list
    remainder_order: float
    at_infinity: bool = False

    def __post_init__(self):
        clean = []
        for z, p, a in self.terms:
            if int(p) != p or p < 0:
                raise ValueError("log powers must be nonnegative integers")
            clean.append((float(z), int(p), float(a)))
        clean.sort(key=lambda term: (term[0], -term[1]))
        self.terms = clean
        if clean and not self.remainder_order > clean[-1][0]:
            raise ValueError("remainder order must exceed every retained exponent")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        x = 1.0 / t if self.at_infinity else t
        out = np.zeros_like(x)
        lx = np.log(x)
        for z, p, a in self.terms:
            out = out + a * x ** z * lx ** p
        return out

    def plus_constant(self, c):
        return PhgExpansion(self.terms + [(0.0, 0, c)], self.remainder_order, self.at_infinity)

    def combined(self):
        """Terms with equal (z, p) merged."""
        acc = {}
        for z, p, a in self.terms:
            acc[(z, p)] = acc.get((z, p), 0.0) + a
        return [(z, p, a) for (z, p), a in sorted(acc.items())]


@dataclass
class TraceModel:
    """A renormalized heat trace on (0, inf).

    F(t) is the short expansion for t < t_lo, ``numeric_remainder(t)`` on
    [t_lo, t_hi] and the long expansion for t > t_hi. The expansion
    remainders beyond the splice points are taken to be negligible.
    ``samples`` optionally records the (times, values) the model was built
    from.
    """

    short_expansion: PhgExpansion
    long_expansion: PhgExpansion
    numeric_remainder: Callable
    t_lo: float
    t_hi: float
    splice_tol: float = 1e-8
    label: str = ""
    samples: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not 0 < self.t_lo <= self.t_hi:
            raise ValueError("need 0 < t_lo <= t_hi")
        if not self.long_expansion.at_infinity or self.short_expansion.at_infinity:
            raise ValueError("short expansion must be at t = 0 and long expansion at infinity")
        gaps = self.splice_gaps()
        if max(gaps) > self.splice_tol:
            raise ModelRejectionError(
                f"trace model is discontinuous at a splice point (gaps {gaps[0]:.3g}, "
                f"{gaps[1]:.3g})", {"splice_gaps": gaps})

    def splice_gaps(self):
        f = self.numeric_remainder
        return (abs(float(self.short_expansion(self.t_lo)) - float(f(self.t_lo))),
                abs(float(self.long_expansion(self.t_hi)) - float(f(self.t_hi))))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        mid = np.clip(t, self.t_lo, self.t_hi)
        numeric = np.asarray(self.numeric_remainder(mid), dtype=float)
        return np.where(t < self.t_lo, self.short_expansion(np.minimum(t, self.t_lo)),
                        np.where(t > self.t_hi, self.long_expansion(np.maximum(t, self.t_hi)),
                                 numeric))

    def plus_constant(self, c):
        f = self.numeric_remainder
        return TraceModel(self.short_expansion.plus_constant(c),
                          self.long_expansion.plus_constant(c),
                          lambda t: np.asarray(f(t)) + c, self.t_lo, self.t_hi,
                          self.splice_tol, self.label)

    @classmethod
    def from_function(cls, fn, short_terms, long_terms, t_lo, t_hi, short_order=None,
                      long_order=None, **kw):
        """Model with exact values ``fn`` on [t_lo, t_hi]."""
        s_ord = short_order if short_order is not None else _default_order(short_terms)
        l_ord = long_order if long_order is not None else _default_order(long_terms)
        return cls(PhgExpansion(list(short_terms), s_ord),
                   PhgExpansion(list(long_terms), l_ord, at_infinity=True),
                   fn, t_lo, t_hi, **kw)


def _default_order(terms):
    # an empty expansion asserts decay faster than any power
    return (max(z for z, _, _ in terms) + 1.0) if terms else math.inf


@dataclass
class ZetaResult:
    """Laurent data at s = 0, pole list and an evaluator."""

    residue: float
    value_at_0: float
    derivative_at_0: float
    poles: list
    evaluation: Callable = field(repr=False)

    @property
    def laurent_at_0(self):
        return (self.residue, self.value_at_0, self.derivative_at_0)

    @property
    def pole_list(self):
        return sorted({loc for loc, _ in self.poles})

    def sample(self, s_values):
        return np.array([self.evaluation(complex(s)) for s in s_values], dtype=complex)

    def report(self, s_values=()):
        samples = self.sample(s_values) if len(s_values) else np.zeros(0, complex)
        return {
            "laurent_at_0": {"residue": self.residue, "value": self.value_at_0,
                             "derivative": self.derivative_at_0},
            "poles": [{"location": loc, "order": order} for loc, order in self.poles],
            "samples": [{"s": [complex(s).real, complex(s).imag], "zeta": [v.real, v.imag]}
                        for s, v in zip(s_values, samples)],
        }

    def to_json(self, path, s_values=()):
        with open(path, "w") as fh:
            json.dump(self.report(s_values), fh, indent=2)

    def to_csv(self, path, s_values):
        vals = self.sample(s_values)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s_re", "s_im", "zeta_re", "zeta_im"])
            for s, v in zip(s_values, vals):
                s = complex(s)
                w.writerow([repr(s.real), repr(s.imag), repr(v.real), repr(v.imag)])


# -------------------------------------------------------- closed forms

def mellin_term(z, p, s, upper=1.0):
    """int_0^upper t^{z+s-1} (log t)^p dt, continued meromorphically in s.

    For ``upper == 1`` this is (-1)^p p! / (s + z)^{p+1}.

    Raises
    ------
    PoleError
        At s = -z (order p + 1).
    """
    w = complex(s) + z
    if w == 0:
        raise PoleError(f"Mellin term has a pole at s = {-z}", location=-z, order=p + 1)
    if upper == 1.0:
        return (-1) ** p * math.factorial(p) / w ** (p + 1)
    lu = math.log(upper)
    total = 0j
    for q in range(p + 1):
        total += (math.comb(p, q) * lu ** (p - q) * (-1) ** q * math.factorial(q)
                  / w ** (q + 1))
    return cmath.exp(w * lu) * total


def _mellin_series(z, p, s0, upper, sign, order):
    """Laurent coefficients in e of the closed form at s = s0 + sign * e.

    Returns a dict power -> coefficient for powers up to ``order``.
    """
    w0 = complex(s0) + z
    lu = math.log(upper)
    exp_series = [cmath.exp(w0 * lu) * (sign * lu) ** m / math.factorial(m)
                  for m in range(order + p + 3)]
    out = {}
    for q in range(p + 1):
        pref = math.comb(p, q) * lu ** (p - q) * (-1) ** q * math.factorial(q)
        if pref == 0:
            continue
        if abs(w0) < 1e-14:
            # sign^{-(q+1)} e^{-(q+1)}
            base = {-(q + 1): sign ** (-(q + 1))}
        else:
            base = {}
            for m in range(order + 1):
                base[m] = _binom_neg(q + 1, m) * w0 ** (-(q + 1) - m) * sign ** m
        for bp, bc in base.items():
            for m, ec in enumerate(exp_series):
                k = bp + m
                if k > order:
                    break
                out[k] = out.get(k, 0j) + pref * bc * ec
    return out


def _binom_neg(r, m):
    """Binomial coefficient C(-r, m)."""
    val = 1.0
    for i in range(m):
        val *= (-r - i) / (i + 1)
    return val


# ------------------------------------------------------------ assembly

def _split_check(model, split):
    if not model.t_lo <= split <= model.t_hi:
        raise ValueError(f"split point {split} must lie in [t_lo, t_hi] = "
                         f"[{model.t_lo}, {model.t_hi}]")


def _remainder_integrals(model, s, split, tol=1e-13):
    """int (F - expansion) t^{s-1} dt over [t_lo, split] and [split, t_hi]."""
    s = complex(s)
    f = model.numeric_remainder
    short = model.short_expansion
    long_ = model.long_expansion

    def g_short(t):
        return (np.asarray(f(t)) - short(t)) * t ** (s - 1.0)

    def g_long(t):
        return (np.asarray(f(t)) - long_(t)) * t ** (s - 1.0)

    total = 0j
    if split > model.t_lo:
        total += integrate_adaptive(g_short, model.t_lo, split, tol=tol, abs_floor=1e-14).value
    if model.t_hi > split:
        total += integrate_adaptive(g_long, split, model.t_hi, tol=tol, abs_floor=1e-14).value
    return total


def _term_candidates(model):
    """Points where some expansion term has a singular closed form."""
    pts = {-z for z, _, _ in model.short_expansion.combined()}
    pts |= {z for z, _, _ in model.long_expansion.combined()}
    return sorted(pts)


def _principal_part(model, s0, split):
    """Coefficients {-j: c} of the expansion-term sum A(s) at s = s0."""
    acc = {}
    for z, p, a in model.short_expansion.combined():
        if abs(s0 + z) < 1e-14:
            for k, c in _mellin_series(z, p, s0, split, 1, -1).items():
                acc[k] = acc.get(k, 0j) + a * c
    for z, p, a in model.long_expansion.combined():
        if abs(z - s0) < 1e-14:
            for k, c in _mellin_series(z, p, -s0, 1.0 / split, -1, -1).items():
                acc[k] = acc.get(k, 0j) + a * c
    return acc


def _scale(model):
    coefs = [abs(a) for _, _, a in model.short_expansion.terms + model.long_expansion.terms]
    return max([1.0] + coefs)


def zeta_poles(model, split=1.0):
    """(location, order) of every pole of the continued zeta function."""
    out = []
    tol = _COEF_TOL * _scale(model)
    for s0 in _term_candidates(model):
        pp = _principal_part(model, s0, split)
        orders = [-k for k, c in pp.items() if k < 0 and abs(c) > tol]
        if not orders:
            continue
        order = max(orders)
        if s0 <= 0 and abs(s0 - round(s0)) < 1e-14:
            order -= 1  # simple zero of 1/Gamma
        if order > 0:
            out.append((float(s0), int(order)))
    return out


def _direct(model, s, split):
    total = _remainder_integrals(model, s, split)
    for z, p, a in model.short_expansion.combined():
        total += a * mellin_term(z, p, s, split)
    for z, p, a in model.long_expansion.combined():
        total += a * mellin_term(z, p, -s, 1.0 / split)
    return rgamma(s) * total


def renormalized_zeta(model, s, split=1.0):
    """Continued zeta function of a trace model at a complex point.

    Parameters
    ----------
    model : TraceModel
    s : complex
    split : float
        Point where the t integral is divided; must lie in [t_lo, t_hi].
        The result does not depend on it, but splits where the expansions
        are evaluated far outside their useful range lose digits to
        cancellation.

    Raises
    ------
    PoleProximityError
        If s is within 1e-8 of a pole; use :func:`zeta_laurent_at_zero`
        for the Laurent data at s = 0.
    """
    _split_check(model, split)
    s = complex(s)
    for loc, order in zeta_poles(model, split):
        if abs(s - loc) < POLE_PROXIMITY:
            raise PoleProximityError(
                f"s = {s} is within {POLE_PROXIMITY:g} of a pole of order {order} at {loc}; "
                "use zeta_laurent_at_zero for Laurent coefficients at s = 0")
    cands = _term_candidates(model)
    near = [c for c in cands if abs(s - c) < _REMOVABLE_RADIUS / 2]
    if not near:
        return _direct(model, s, split)
    # Removable singularity of the individual terms: Cauchy integral on a circle.
    c0 = near[0]
    others = [abs(c - c0) for c in cands if c != c0]
    radius = min([_REMOVABLE_RADIUS] + [0.5 * d for d in others])
    theta = 2 * np.pi * (np.arange(_CAUCHY_POINTS) + 0.5) / _CAUCHY_POINTS
    ring = c0 + radius * np.exp(1j * theta)
    vals = np.array([_direct(model, w, split) for w in ring])
    return complex(np.mean(vals * (ring - c0) / (ring - s)))


def zeta_laurent_at_zero(model, split=1.0):
    """Residue, constant term and s-coefficient of the Laurent series at s = 0.

    The expansion terms are expanded exactly against
    1/Gamma(s) = s + gamma s^2 + ... . The numeric remainder R(s) is entire
    and only R(0) = int (F - expansion) dt / t enters these three
    coefficients.

    Returns
    -------
    tuple of float
        (residue, value, derivative).
    """
    _split_check(model, split)
    terms_s = model.short_expansion.combined()
    terms_l = model.long_expansion.combined()
    pmax = max([p for _, p, _ in terms_s + terms_l] + [0])
    order = 1
    acc = {}
    for z, p, a in terms_s:
        for k, c in _mellin_series(z, p, 0.0, split, 1, order).items():
            acc[k] = acc.get(k, 0j) + a * c
    for z, p, a in terms_l:
        for k, c in _mellin_series(z, p, 0.0, 1.0 / split, -1, order).items():
            acc[k] = acc.get(k, 0j) + a * c
    acc[0] = acc.get(0, 0j) + _remainder_integrals(model, 0.0, split)
    rg = rgamma_series_at_zero(pmax + 4)

    def coeff(j):
        return sum(rg[k] * acc.get(j - k, 0j) for k in range(1, len(rg)))

    res, val, der = coeff(-1), coeff(0), coeff(1)
    return (float(res.real), float(val.real), float(der.real))


def zeta_result(model, split=1.0):
    """Laurent data, poles and an evaluator bundled in a :class:`ZetaResult`."""
    res, val, der = zeta_laurent_at_zero(model, split)
    return ZetaResult(res, val, der, zeta_poles(model, split),
                      lambda s: renormalized_zeta(model, s, split))


def log_renormalized_det(model, residue_tol=1e-9, split=1.0):
    """log det = -zeta'(0).

    Raises
    ------
    UndefinedDeterminantError
        If the residue at 0 exceeds ``residue_tol`` in magnitude.
    """
    res, _, der = zeta_laurent_at_zero(model, split)
    if abs(res) > residue_tol:
        raise UndefinedDeterminantError(
            "zeta has a pole at s = 0, so the determinant is not defined", res)
    return -der


# ------------------------------------------------------------- models

def constant_trace_model(c, t_lo=0.5, t_hi=2.0):
    """F(t) = c."""
    return TraceModel.from_function(lambda t: np.full_like(np.asarray(t, float), c),
                                    [(0.0, 0, c)], [(0.0, 0, c)], t_lo, t_hi,
                                    label=f"constant {c}")


def power_trace_model(z, a=1.0, t_lo=0.5, t_hi=2.0):
    """F(t) = a t^z, exact at both ends."""
    return TraceModel.from_function(lambda t: a * np.asarray(t, float) ** z,
                                    [(z, 0, a)], [(-z, 0, a)], t_lo, t_hi,
                                    label=f"power {z}")


def mock_trace_model(eigenvalues, multiplicities=None, taylor_order=None, t_lo=0.05,
                     t_hi=None):
    """Trace sum_j m_j exp(-lambda_j t) of a finite mock spectrum.

    The short expansion is its Taylor polynomial; the long expansion is
    empty and t_hi is chosen so that exp(-lambda_min t_hi) < 1e-16.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    mult = np.ones_like(lam) if multiplicities is None else np.asarray(multiplicities, float)
    if np.any(lam <= 0):
        raise ValueError("mock eigenvalues must be positive")
    lam_max = float(lam.max())
    if taylor_order is None:
        taylor_order = 4
        while (lam_max * t_lo) ** (taylor_order + 1) / math.factorial(taylor_order + 1) \
                * mult.sum() > 1e-16:
            taylor_order += 1
    if t_hi is None:
        t_hi = max(60.0, 37.0 / float(lam.min()) + math.log(mult.sum()))
    short = [(float(k), 0, float(np.sum(mult * (-lam) ** k)) / math.factorial(k))
             for k in range(taylor_order + 1)]

    def fn(t):
        t = np.asarray(t, dtype=float)
        return np.sum(mult[:, None] * np.exp(-np.outer(lam, np.atleast_1d(t))), axis=0) \
            .reshape(t.shape)

    return TraceModel.from_function(fn, short, [], t_lo, t_hi, short_order=taylor_order + 1,
                                    label="mock spectrum")


def _poly_fit(log_t, values, design_fn):
    a = design_fn(log_t)
    coef, *_ = np.linalg.lstsq(a, values, rcond=None)
    return coef, float(np.max(np.abs(a @ coef - values)))


def default_lattices(n):
    """Exponent lattices (short, long) for a cone of dimension n.

    Half-integer powers at t = 0 and integer powers of 1/t at infinity; the
    log t slot is included only in even dimension, where the finite part
    picks up -a_n/2 log t.
    """
    log_slot = ((0.0, 1),) if n % 2 == 0 else ()
    return (log_slot + ((0.0, 0), (0.5, 0), (1.0, 0)), log_slot + ((0.0, 0), (1.0, 0)))


def build_trace_model_from_cone(cone, cfg=None, t_lo=0.25, t_hi=4.0, samples=9,
                                short_lattice=None, long_lattice=None, fit_tol=1e-6,
                                trace_fn=None):
    """Fit a :class:`TraceModel` to the renormalized trace of a cone.

    The trace is sampled at ``samples`` log-spaced times on [t_lo, t_hi].
    The lower half is fitted to the short lattice, the upper half to the
    long lattice (exponents in 1/t), and all samples are interpolated by a
    polynomial in log t for the middle range.

    Parameters
    ----------
    cone : ConeGeometry
    cfg : ModeSumConfig, optional
    short_lattice, long_lattice : sequence of (exponent, log_power)
        Exponent lattices; see :func:`default_lattices`.
    fit_tol : float
        Largest accepted misfit of either expansion.
    trace_fn : callable, optional
        Replaces the renormalized trace (used for tests and perturbations).

    Raises
    ------
    ModelRejectionError
        If either expansion misfits the samples, or differs from the
        interpolant at its splice point, by more than ``fit_tol``.
    """
    from .renormalization import renormalized_trace

    default_short, default_long = default_lattices(cone.n)
    short_lattice = default_short if short_lattice is None else tuple(short_lattice)
    long_lattice = default_long if long_lattice is None else tuple(long_lattice)
    if trace_fn is None:
        def trace_fn(t):
            return renormalized_trace(cone, t, cfg)
    ts = np.geomspace(t_lo, t_hi, samples)
    vals = np.array([trace_fn(t) for t in ts])
    lt = np.log(ts)
    mid = samples // 2

    def design(lattice, x, at_inf):
        cols = []
        for z, p in lattice:
            e = -z if at_inf else z
            cols.append(np.exp(e * x) * (-x if at_inf else x) ** p)
        return np.column_stack(cols)

    cs, err_s = _poly_fit(lt[: mid + 1], vals[: mid + 1], lambda x: design(short_lattice, x, False))
    cl, err_l = _poly_fit(lt[mid:], vals[mid:], lambda x: design(long_lattice, x, True))
    deg = samples - 1
    center, half = 0.5 * (lt[0] + lt[-1]), 0.5 * (lt[-1] - lt[0])
    cheb = np.polynomial.chebyshev.Chebyshev.fit((lt - center) / half, vals, deg, domain=[-1, 1])
    diagnostics = {"short_misfit": err_s, "long_misfit": err_l, "times": ts.tolist(),
                   "values": vals.tolist()}
    if max(err_s, err_l) > fit_tol:
        raise ModelRejectionError(
            f"trace expansion fit misfit {max(err_s, err_l):.3g} exceeds {fit_tol:g}",
            diagnostics)

    short = PhgExpansion([(z, p, a) for (z, p), a in zip(short_lattice, cs)],
                         max(z for z, _ in short_lattice) + 0.5)
    long_ = PhgExpansion([(z, p, a) for (z, p), a in zip(long_lattice, cl)],
                         max(z for z, _ in long_lattice) + 1.0, at_infinity=True)
    # end gaps (below fit_tol) are blended linearly in log t so the splices are exact
    gap_lo = float(short(t_lo)) - float(cheb(-1.0))
    gap_hi = float(long_(t_hi)) - float(cheb(1.0))
    diagnostics["splice_correction"] = [gap_lo, gap_hi]
    if max(abs(gap_lo), abs(gap_hi)) > fit_tol:
        raise ModelRejectionError(
            f"expansions and interpolant differ by {max(abs(gap_lo), abs(gap_hi)):.3g} "
            f"at the splice points (limit {fit_tol:g})", diagnostics)

    def numeric(t):
        x = (np.log(np.asarray(t, dtype=float)) - center) / half
        return cheb(x) + gap_lo + 0.5 * (x + 1.0) * (gap_hi - gap_lo)

    try:
        return TraceModel(short, long_, numeric, t_lo, t_hi,
                          label=f"cone {cone.label()}", samples=(ts, vals))
    except ModelRejectionError as exc:
        exc.diagnostics.update(diagnostics)
        raise
