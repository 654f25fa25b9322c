"""Cutoff heat traces on cones and their Hadamard finite parts.

For an exact cone, conformal homogeneity H(t, r, y, r, y) = r^{-n} H(t/r^2, 1, y, 1, y)
turns the cutoff trace into a one-dimensional integral of

    G(s) = integral over N of H(s, 1, y, 1, y) dy.

With the radial cutoff chi(delta r) (chi = 1 on r <= 1) and u = log s,

    T(delta) = 1/2 int chi(delta sqrt(t) exp(-u/2)) G(exp(u)) du,

the part with u >= log t being the (delta-independent) trace over r <= 1.
G has the small-s expansion sum_k a_k s^{(k-n)/2}, so T(delta) expands in
delta^{k-n} (k < n), log(delta) and a constant: the renormalized trace.
"""

import csv
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cone_model import DEFAULT_MODE_CONFIG, diagonal_trace_density
from .errors import ConditioningError, RegimeError
from .special_functions.quadrature import composite_gauss, gauss_legendre, integrate_adaptive

LOG2 = math.log(2.0)
# Panel lattice in u = log s. Half a log 2 so that dyadic delta and t align.
_PANEL_WIDTH = 0.5 * LOG2
_PANEL_ORDER = 12
# Upper end of the u integration: G decays at least like 1/s beyond s = 1.
_U_TAIL = 46.0
# Small-s limit below which G is in its expansion regime to double precision
# for cones without short closed geodesics.
_REGIME_S = 0.02
_TINY = np.finfo(float).tiny


# ---------------------------------------------------------------- cutoffs

def _step(u):
    """Smooth step: 0 for u <= 0, 1 for u >= 1, built from exp(-1/x)."""
    u = np.asarray(u, dtype=float)
    inside = (u > 0) & (u < 1)
    uc = np.where(inside, u, 0.5)
    g = 1.0 / uc - 1.0 / (1.0 - uc)
    val = 0.5 * (1.0 + np.tanh(-0.5 * g))
    return np.where(u <= 0, 0.0, np.where(u >= 1, 1.0, val))


def _step_derivative(u):
    u = np.asarray(u, dtype=float)
    inside = (u > 0) & (u < 1)
    uc = np.where(inside, u, 0.5)
    g = 1.0 / uc - 1.0 / (1.0 - uc)
    s = 0.5 * (1.0 + np.tanh(-0.5 * g))
    d = s * (1.0 - s) * (1.0 / uc ** 2 + 1.0 / (1.0 - uc) ** 2)
    return np.where(inside, d, 0.0)


@dataclass(frozen=True)
class Cutoff:
    """Radial cutoff profile chi on [0, inf).

    ``kind == "sharp"`` is the characteristic function of [0, 1]. A smooth
    profile equals 1 for r <= exp(-inner) and 0 for r >= exp(outer) and
    falls monotonically in between; inner, outer <= log 2 keeps the
    transition inside [1/2, 2]. Equal widths give chi(r) + chi(1/r) = 1.
    """

    kind: str = "sharp"
    inner: float = LOG2
    outer: float = LOG2

    def __post_init__(self):
        if self.kind not in ("sharp", "smooth"):
            raise ValueError("cutoff kind must be 'sharp' or 'smooth'")
        if self.kind == "smooth":
            if not (0 < self.inner <= LOG2 + 1e-15 and 0 < self.outer <= LOG2 + 1e-15):
                raise ValueError("transition widths must lie in (0, log 2]")

    @property
    def is_sharp(self):
        return self.kind == "sharp"

    def profile(self, r):
        """chi(r)."""
        r = np.asarray(r, dtype=float)
        if self.is_sharp:
            return np.where(r <= 1.0, 1.0, 0.0)
        u = (np.log(r) + self.inner) / (self.inner + self.outer)
        return 1.0 - _step(u)

    def derivative(self, r):
        """chi'(r); zero outside the transition (not defined for sharp)."""
        if self.is_sharp:
            raise ValueError("the sharp cutoff has no derivative")
        r = np.asarray(r, dtype=float)
        width = self.inner + self.outer
        u = (np.log(r) + self.inner) / width
        return -_step_derivative(u) / (r * width)

    def log_support(self):
        """Interval of log r on which chi is not locally constant."""
        if self.is_sharp:
            return (0.0, 0.0)
        return (-self.inner, self.outer)


def sharp_cutoff():
    return Cutoff("sharp")


def smooth_cutoff(inner=LOG2, outer=None):
    """Smooth profile; ``outer`` defaults to ``inner`` (log-symmetric)."""
    return Cutoff("smooth", inner, inner if outer is None else outer)


# ------------------------------------------------------------ data types

@dataclass
class TraceSweep:
    """Cutoff-trace samples over a decreasing delta grid at fixed t."""

    t: float
    deltas: np.ndarray
    values: np.ndarray
    cutoff: Cutoff

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.deltas <= 0) or np.any(self.deltas >= 0.5):
            raise ValueError("delta grid must lie in (0, 1/2)")
        if np.any(np.diff(self.deltas) >= 0):
            raise ValueError("delta grid must be decreasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sweep values must be finite")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta", "value"])
            for d, v in zip(self.deltas, self.values):
                w.writerow([repr(float(d)), repr(float(v))])


@dataclass
class DivergentExpansion:
    """Fit T(delta) = sum_k f_k delta^{k-n} + f_log log(delta) + finite_part.

    Attributes
    ----------
    n : int
    f : ndarray
        f[k] is the coefficient of delta^{k-n}, k = 0..n-1.
    f_log : float
    finite_part : float
    residual_norm : float
        Largest absolute misfit on the grid.
    relative_residual : float
        Largest misfit relative to the sampled value.
    remainder : dict
        Coefficients of extra positive powers of delta, if any were fitted.
    condition_number : float
    """

    n: int
    f: np.ndarray
    f_log: float
    finite_part: float
    residual_norm: float
    remainder: dict = field(default_factory=dict)
    condition_number: float = float("nan")
    relative_residual: float = float("nan")

    def evaluate(self, deltas):
        d = np.asarray(deltas, dtype=float)
        out = self.finite_part + self.f_log * np.log(d)
        for k, c in enumerate(self.f):
            out = out + c * d ** (k - self.n)
        for p, c in self.remainder.items():
            out = out + c * d ** p
        return out

    def rows(self):
        """(term, exponent, logpower, coefficient) rows for CSV output."""
        out = [(f"delta^{k - self.n}", k - self.n, 0, float(c)) for k, c in enumerate(self.f)]
        out.append(("log(delta)", 0, 1, float(self.f_log)))
        out.append(("finite_part", 0, 0, float(self.finite_part)))
        out.extend((f"delta^{p}", p, 0, float(c)) for p, c in self.remainder.items())
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["term", "exponent", "logpower", "coefficient"])
            for row in self.rows():
                w.writerow([row[0], row[1], row[2], repr(row[3])])


@dataclass
class HeatCoefficients:
    """Integrated small-time coefficients a_k, k = 0..n, of G(s)."""

    n: int
    a: np.ndarray
    residual: float = 0.0

    def __getitem__(self, k):
        return float(self.a[k])


# ------------------------------------------------------ trace integration

class TraceIntegrator:
    """Integrals of G(exp(u)) over u with panel results cached per cone.

    Panels sit on the lattice u in [i h, (i + 1) h]; integrals whose ends
    fall on the lattice reuse cached panels, which makes sweeps at dyadic
    delta and t cheap to repeat.
    """

    def __init__(self, cone, cfg=None, order=_PANEL_ORDER, width=_PANEL_WIDTH):
        self.cone = cone
        self.cfg = cfg or DEFAULT_MODE_CONFIG
        self.order = order
        self.width = width
        self._panels = {}
        self._lock = threading.Lock()

    @classmethod
    def for_cone(cls, cone, cfg=None):
        key = ("trace_integrator", cfg or DEFAULT_MODE_CONFIG)
        with cone._lock:
            obj = cone._cache.get(key)
            if obj is None:
                obj = cls(cone, cfg)
                cone._cache[key] = obj
        return obj

    def density(self, u):
        return diagonal_trace_density(self.cone, np.exp(np.asarray(u, dtype=float)), self.cfg)

    def _fixed(self, u0, u1, weight=None, order=None):
        x, w = gauss_legendre(order or self.order)
        half = 0.5 * (u1 - u0)
        u = u0 + half * (x + 1.0)
        vals = self.density(u)
        if weight is not None:
            vals = vals * weight(u)
        return float(half * np.dot(w, vals))

    def _panel(self, i):
        with self._lock:
            val = self._panels.get(i)
        if val is None:
            val = self._fixed(i * self.width, (i + 1) * self.width)
            with self._lock:
                self._panels[i] = val
        return val

    def integral(self, u0, u1):
        """int_{u0}^{u1} G(exp(u)) du for u0 <= u1."""
        if u1 < u0:
            return -self.integral(u1, u0)
        h = self.width
        i0 = math.ceil(u0 / h - 1e-9)
        i1 = math.floor(u1 / h + 1e-9)
        if i1 <= i0:
            return self._fixed(u0, u1)
        total = 0.0
        if i0 * h - u0 > 1e-12:
            total += self._fixed(u0, i0 * h)
        for i in range(i0, i1):
            total += self._panel(i)
        if u1 - i1 * h > 1e-12:
            total += self._fixed(i1 * h, u1)
        return total

    def weighted(self, u0, u1, weight, panels=6, order=16):
        """int_{u0}^{u1} weight(u) G(exp(u)) du with a smooth weight."""
        edges = np.linspace(u0, u1, panels + 1)
        nodes, w = composite_gauss(edges, order)
        return float(np.dot(w, weight(nodes) * self.density(nodes)))

    def tail_start(self, t):
        return max(math.log(t), 0.0) + _U_TAIL


# --------------------------------------------------------- truncated trace

def core_trace(cone, t, cfg=None, core_correction=None):
    """Trace of the heat kernel over r <= 1, plus an optional user perturbation.

    Parameters
    ----------
    core_correction : callable, optional
        ``core_correction(t)`` added to the exact-cone core, modelling a
        manifold that differs from the cone only on a compact set.
    """
    integ = TraceIntegrator.for_cone(cone, cfg)
    u_t = math.log(t)
    val = 0.5 * integ.integral(u_t, integ.tail_start(t))
    if core_correction is not None:
        val += float(core_correction(t))
    return val


def truncated_trace_cone(cone, t, delta, cutoff=None, cfg=None, core_correction=None):
    """Cutoff heat trace int chi(delta r) H(t, z, z) dz on an exact cone.

    Parameters
    ----------
    cone : ConeGeometry
        Any cone; only multiplicities are used, so file spectra work.
    t : float
        Time, t > 0.
    delta : float
        Cutoff scale in (0, 1/2).
    cutoff : Cutoff, optional
        Sharp by default.
    cfg : ModeSumConfig, optional
    core_correction : callable, optional
        Added to the r <= 1 part; see :func:`core_trace`.

    Returns
    -------
    float
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    cutoff = cutoff or sharp_cutoff()
    integ = TraceIntegrator.for_cone(cone, cfg)
    u_t = math.log(t)
    core = core_trace(cone, t, cfg, core_correction)
    u_delta = math.log(delta * delta * t)
    if cutoff.is_sharp:
        return core + 0.5 * integ.integral(u_delta, u_t)
    lo_r, hi_r = cutoff.log_support()
    # chi(delta sqrt(t) e^{-u/2}) changes for u in [u_delta - 2 hi_r, u_delta - 2 lo_r]
    u_lo = u_delta - 2.0 * hi_r
    u_hi = u_delta - 2.0 * lo_r
    sqrt_t = math.sqrt(t)

    def weight(u):
        return cutoff.profile(delta * sqrt_t * np.exp(-0.5 * u))

    return core + 0.5 * (integ.integral(u_hi, u_t) + integ.weighted(u_lo, u_hi, weight))


def default_delta_grid(t, count=21, ratio=2.0 ** -0.5, regime_s=_REGIME_S):
    """Decreasing geometric delta grid whose largest point keeps delta^2 t small.

    The largest delta is the biggest power of ``ratio`` below
    min(1/8, sqrt(regime_s / t)); 21 points with ratio 2^{-1/2} span three
    decades.
    """
    top = min(0.125, math.sqrt(regime_s / t))
    k = math.ceil(math.log(top) / math.log(ratio) - 1e-12)
    return ratio ** (k + np.arange(count))


def trace_sweep(cone, t, deltas=None, cutoff=None, cfg=None, core_correction=None):
    """Sample the cutoff trace over a delta grid.

    Returns
    -------
    TraceSweep
    """
    cutoff = cutoff or sharp_cutoff()
    deltas = default_delta_grid(t) if deltas is None else np.asarray(deltas, dtype=float)
    vals = [truncated_trace_cone(cone, t, d, cutoff, cfg, core_correction) for d in deltas]
    return TraceSweep(t, deltas, np.array(vals), cutoff)


# ------------------------------------------------------------- fitting

def _weighted_lstsq(design, values, scale):
    a = design * scale[:, None]
    b = values * scale
    col = np.linalg.norm(a, axis=0)
    col[col == 0] = 1.0
    a_n = a / col
    sol, *_ = np.linalg.lstsq(a_n, b, rcond=None)
    cond = np.linalg.cond(a_n)
    return sol / col, cond


def fit_divergent_expansion(sweep, n, remainder_powers=(), max_condition=1e12):
    """Least-squares fit of a sweep to {delta^{k-n}}_{k<n}, log(delta), 1.

    Rows are scaled by delta^n so every sample carries comparable relative
    weight.

    Parameters
    ----------
    sweep : TraceSweep
    n : int
        Dimension of the cone.
    remainder_powers : sequence of float, optional
        Extra positive powers of delta to absorb remainder terms.
    max_condition : float
        Largest accepted condition number of the column-normalized design.

    Returns
    -------
    DivergentExpansion

    Raises
    ------
    ValueError
        If the grid has fewer than n + 3 points or spans under 3 decades.
    ConditioningError
        If the design matrix is too ill-conditioned.
    """
    d = np.asarray(sweep.deltas, dtype=float)
    v = np.asarray(sweep.values, dtype=float)
    if d.size < n + 3:
        raise ValueError(f"need at least {n + 3} delta values, got {d.size}")
    decades = math.log10(d.max() / d.min())
    if decades < 3.0 - 1e-9:
        raise ValueError(f"delta grid spans {decades:.2f} decades; at least 3 are required")
    cols = [d ** (k - n) for k in range(n)] + [np.log(d), np.ones_like(d)]
    cols += [d ** p for p in remainder_powers]
    design = np.column_stack(cols)
    coef, cond = _weighted_lstsq(design, v, d ** n)
    if not cond < max_condition:
        raise ConditioningError(
            "divergent-expansion design matrix is ill-conditioned", cond,
            "Use more delta points or widen the grid toward smaller delta "
            f"(currently {d.min():.3g} to {d.max():.3g}).")
    fit = design @ coef
    remainder = {float(p): float(c) for p, c in zip(remainder_powers, coef[n + 2:])}
    return DivergentExpansion(n, coef[:n].copy(), float(coef[n]), float(coef[n + 1]),
                              float(np.max(np.abs(fit - v))), remainder, float(cond),
                              float(np.max(np.abs(fit - v) / np.maximum(np.abs(v), _TINY))))


def default_remainder_powers(cone):
    """Positive delta powers absorbed in fits: none for flat cones.

    Circles and the unit sphere (whose cone is Euclidean space) give flat
    cones. Other cross-sections add a series in delta sqrt(t) to the cutoff
    trace; at the default grid four terms bring the finite part to about 1e-6.
    """
    if cone.kind == "circle":
        return ()
    if cone.kind == "sphere" and cone.spectrum.param_dict["radius"] == 1.0:
        return ()
    return (1.0, 2.0, 3.0, 4.0)


def renormalized_trace(cone, t, cfg=None, deltas=None, core_correction=None,
                       remainder_powers=None, return_expansion=False):
    """Finite part at delta = 0 of the sharp-cutoff heat trace.

    Parameters
    ----------
    cone : ConeGeometry
    t : float
    deltas : array_like, optional
        Delta grid; see :func:`default_delta_grid`.
    core_correction : callable, optional
    remainder_powers : sequence, optional
        Extra delta powers in the fit; defaults to none for flat cones
        (see :func:`default_remainder_powers`) and (1, 2, 3, 4) otherwise.
    return_expansion : bool
        Also return the fitted :class:`DivergentExpansion`.
    """
    sweep = trace_sweep(cone, t, deltas, sharp_cutoff(), cfg, core_correction)
    if remainder_powers is None:
        remainder_powers = default_remainder_powers(cone)
    exp = fit_divergent_expansion(sweep, cone.n, remainder_powers)
    return (exp.finite_part, exp) if return_expansion else exp.finite_part


def default_s_grid(count=16, s_min=1e-5, s_max=1e-2):
    return np.geomspace(s_min, s_max, count)


def fit_heat_coefficients(cone, s_grid=None, cfg=None, extra_orders=4, residual_tol=1e-8):
    """Fit G(s) to sum_{k<=n} a_k s^{(k-n)/2} on small s.

    ``extra_orders`` further half-integer powers are fitted and discarded to
    reduce the bias from the truncated expansion.

    Raises
    ------
    RegimeError
        If the relative misfit exceeds ``residual_tol`` (grid not small
        enough for the expansion).
    """
    s = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    n = cone.n
    g = diagonal_trace_density(cone, s, cfg)
    kmax = n + extra_orders
    if s.size < kmax + 2:
        raise ValueError(f"need at least {kmax + 2} s values")
    design = np.column_stack([s ** ((k - n) / 2.0) for k in range(kmax + 1)])
    coef, _ = _weighted_lstsq(design, g, s ** (n / 2.0))
    rel = float(np.max(np.abs(design @ coef - g) / np.abs(g)))
    if rel > residual_tol:
        raise RegimeError(
            f"heat-coefficient fit misfit {rel:.3g} exceeds {residual_tol:.1g}; "
            f"decrease s_max (currently {s.max():.3g})")
    return HeatCoefficients(n, coef[: n + 1].copy(), rel)


@dataclass
class PredictedCoefficients:
    """Divergent coefficients predicted from heat coefficients.

    ``f_stated`` uses a_k t^{(k-n)/2} / (k - n); ``f_corrected`` has the
    opposite sign, which is what direct integration of the cone trace gives.
    """

    f_stated: np.ndarray
    f_corrected: np.ndarray
    f_log: float


def predicted_divergent_coefficients(coeffs, n, t):
    """Coefficients of delta^{k-n} (k < n) and log(delta) implied by a_k."""
    k = np.arange(n)
    stated = np.array([coeffs[i] * t ** ((i - n) / 2.0) / (i - n) for i in k])
    return PredictedCoefficients(stated, -stated, -coeffs[n])


# -------------------------------------------------------------- cutoffs

@dataclass
class CutoffMoments:
    """Moments of -chi' entering the smooth-cutoff expansion.

    ``l`` uses r^{n-k} (which direct substitution produces) and
    ``l_stated`` uses r^{k-n}; both coincide for profiles with
    chi(r) + chi(1/r) = 1.
    """

    l: np.ndarray
    l_stated: np.ndarray
    l_log: float


def cutoff_moments(cutoff, n, tol=1e-13):
    """l_k = -int chi'(r) r^{n-k} dr (k < n), stated variant with r^{k-n}, and l_log."""
    if cutoff.is_sharp:
        return CutoffMoments(np.ones(n), np.ones(n), 0.0)
    lo, hi = cutoff.log_support()
    a, b = math.exp(lo), math.exp(hi)

    def moment(fn):
        return integrate_adaptive(lambda r: -cutoff.derivative(r) * fn(r), a, b, tol=tol,
                                  abs_floor=1e-15).value

    l = np.array([moment(lambda r, k=k: r ** (n - k)) for k in range(n)])
    ls = np.array([moment(lambda r, k=k: r ** (k - n)) for k in range(n)])
    return CutoffMoments(l, ls, moment(np.log))


@dataclass
class CutoffComparison:
    """Sharp versus smooth cutoff expansions at one time."""

    sharp: DivergentExpansion
    smooth: DivergentExpansion
    moments: CutoffMoments
    ratio: np.ndarray
    finite_part_shift: float
    predicted_shift: float
    predicted_shift_stated: float
    max_relative_deviation: float
    max_relative_deviation_stated: float


def compare_cutoffs(cone, t, smooth, cfg=None, deltas=None, remainder_powers=None,
                    sharp_expansion=None):
    """Compare smooth- and sharp-cutoff expansions of the cone trace.

    Checks that the smooth coefficients are l_k times the sharp ones, that
    the log coefficients agree, and that the finite parts differ by
    -l_log f_log (``predicted_shift``; ``predicted_shift_stated`` is
    +l_log f_log).

    Returns
    -------
    CutoffComparison
        ``max_relative_deviation`` uses the moments with r^{n-k} and the
        shift -l_log f_log; the ``_stated`` variant uses r^{k-n} and
        +l_log f_log.
    """
    n = cone.n
    if remainder_powers is None:
        remainder_powers = default_remainder_powers(cone)
    if sharp_expansion is None:
        sharp_sweep = trace_sweep(cone, t, deltas, sharp_cutoff(), cfg)
        sharp_expansion = fit_divergent_expansion(sharp_sweep, n, remainder_powers)
    smooth_sweep = trace_sweep(cone, t, deltas, smooth, cfg)
    e_sm = fit_divergent_expansion(smooth_sweep, n, remainder_powers)
    e_sh = sharp_expansion
    mom = cutoff_moments(smooth, n)
    scale = max(np.max(np.abs(e_sh.f)), 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.abs(e_sh.f) > 1e-12 * scale, e_sm.f / e_sh.f, np.nan)
    shift = e_sm.finite_part - e_sh.finite_part
    pred = -mom.l_log * e_sh.f_log
    pred_stated = mom.l_log * e_sh.f_log

    def deviation(l, p):
        d = [np.max(np.abs(e_sm.f - l * e_sh.f)) / scale,
             abs(e_sm.f_log - e_sh.f_log) / max(1.0, abs(e_sh.f_log)),
             abs(shift - p) / max(1.0, abs(e_sh.finite_part))]
        return float(max(d))

    return CutoffComparison(e_sh, e_sm, mom, ratio, shift, pred, pred_stated,
                            deviation(mom.l, pred), deviation(mom.l_stated, pred_stated))
