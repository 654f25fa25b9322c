"""Heat kernels and resolvents on exact cones by Bessel mode sums.

On the cone dr^2 + r^2 h over a cross-section N of dimension n - 1,
separation of variables gives

    H(t, r, y, r', y') = (r r')^{-(n-2)/2} sum_j Pi_j(y, y')
                         (1/2t) exp(-(r^2 + r'^2)/4t) I_{nu_j}(r r'/2t),

    R(k, r, y, r', y') = (r r')^{-(n-2)/2} sum_j Pi_j(y, y')
                         I_{nu_j}(k r_<) K_{nu_j}(k r_>),

where Pi_j is the projection onto the j-th eigenspace of the cross-section
Laplacian and R is the kernel of (Laplacian + k^2)^{-1}. Both sums are
evaluated with exponentially scaled Bessel functions, so that no
intermediate quantity overflows.

Mode sums are truncated adaptively: modes are added until a geometric
tail bound, built from the envelope (m_j / V) |radial factor_j| of the
last retained terms, falls below ``tail_tol`` times the sum of absolute
values of the terms. Off-diagonal heat kernels at distances with
r r' (1 - cos angle) / 2t large suffer cancellation between terms of
size exp(r r' (1 - cos angle)/2t) larger than the result; relative
accuracy degrades by that factor.
"""

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .cross_section import ConeGeometry
from .errors import ContourError, DiagonalSingularityError, TruncationError
from .special_functions.bessel import BesselEvalConfig, bessel_k, log_bessel_ik_scaled
from .special_functions.quadrature import composite_gauss, graded_edges

# Points processed per block so that (points x modes) arrays stay moderate.
_BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class ConePoint:
    """Point (r, y) of a cone; y is an angle (circle) or a unit vector (sphere)."""

    r: float
    y: Any = 0.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"radial coordinate must be positive, got {self.r!r}")

    def reduced(self, cone):
        """Copy with the angle reduced modulo the circle length."""
        if cone.kind == "circle":
            return ConePoint(self.r, float(np.mod(self.y, cone.length)))
        return self


@dataclass(frozen=True)
class ModeSumConfig:
    """Truncation controls for mode sums.

    Parameters
    ----------
    max_modes : int
        Largest number of distinct eigenvalues a sum may use.
    tail_tol : float
        Bound on the omitted tail relative to the sum of absolute values
        of the retained terms.
    bessel : BesselEvalConfig
    """

    max_modes: int = 200000
    tail_tol: float = 1e-15
    bessel: BesselEvalConfig = field(default_factory=BesselEvalConfig)

    def __post_init__(self):
        if self.max_modes < 1:
            raise ValueError("max_modes must be at least 1")
        if not 0.0 < self.tail_tol < 1.0:
            raise ValueError("tail_tol must lie in (0, 1)")


DEFAULT_MODE_CONFIG = ModeSumConfig()


@dataclass(frozen=True)
class ContourSpec:
    """Contour for recovering the heat kernel from the resolvent.

    The contour runs in along the ray arg = -phi, around the circle of
    radius ``a`` counterclockwise, and out along arg = +phi.

    Parameters
    ----------
    phi : float
        Ray angle in (pi/2, pi).
    a : float or None
        Arc radius; ``None`` means 1/t.
    ray_truncation : float or None
        Outer radius R_max of the rays; ``None`` chooses it so that
        exp(t R_max cos phi) < 1e-16.
    arc_panels, ray_panels : int
        Gauss panels on the arc and on each ray.
    order : int
        Gauss-Legendre points per panel.
    grading : float
        Width ratio of consecutive ray panels, growing away from the arc.
    """

    phi: float = 0.75 * math.pi
    a: float | None = None
    ray_truncation: float | None = None
    arc_panels: int = 4
    ray_panels: int = 8
    order: int = 16
    grading: float = 1.25

    def __post_init__(self):
        if not math.pi / 2 < self.phi < math.pi:
            raise ValueError("phi must lie in (pi/2, pi)")
        if self.a is not None and not self.a > 0:
            raise ValueError("arc radius must be positive")
        if self.ray_truncation is not None and self.a is not None and not self.ray_truncation > self.a:
            raise ValueError("ray truncation must exceed the arc radius")
        if min(self.arc_panels, self.ray_panels, self.order) < 1:
            raise ValueError("panel counts and order must be positive")

    def resolved(self, t):
        """(a, R_max) for time t."""
        a = 1.0 / t if self.a is None else self.a
        if self.ray_truncation is None:
            r_max = -math.log(1e-16) / (t * abs(math.cos(self.phi)))
            r_max = max(r_max, 2.0 * a)
        else:
            r_max = self.ray_truncation
        if not r_max > a:
            raise ValueError("ray truncation must exceed the arc radius")
        return a, r_max


# ---------------------------------------------------------------- oracles

def euclidean_heat(n, t, d):
    """Heat kernel of R^n: (4 pi t)^{-n/2} exp(-d^2 / 4t)."""
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    return ((4.0 * math.pi * t) ** (-n / 2.0) * np.exp(-d * d / (4.0 * t)))[()]


def euclidean_resolvent_2d(k, d):
    """Kernel of (Laplacian + k^2)^{-1} on R^2: K_0(k d) / (2 pi)."""
    return bessel_k(0.0, np.asarray(k) * np.asarray(d, dtype=float)) / (2.0 * math.pi)


def euclidean_resolvent_3d(k, d):
    """Kernel of (Laplacian + k^2)^{-1} on R^3: exp(-k d) / (4 pi d)."""
    d = np.asarray(d, dtype=float)
    return (np.exp(-np.asarray(k) * d) / (4.0 * math.pi * d))[()]


# ------------------------------------------------------------ mode sums

def _as_points(cone, p):
    if isinstance(p, ConePoint):
        return p.r, p.y
    return p


def _y_shape(cone, y):
    y = np.asarray(y, dtype=float)
    return y.shape[:-1] if cone.kind == "sphere" else y.shape


def _tail_bound(env):
    """Geometric tail bound from the last two envelope values per row."""
    if env.shape[-1] < 2:
        return np.where(env[..., -1] == 0, 0.0, np.inf)
    last = env[..., -1]
    prev = env[..., -2]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(prev > 0, last / prev, 0.0)
        bound = np.where(q < 1.0, last * q / (1.0 - q), np.inf)
    return np.where(last == 0, 0.0, bound)


def _adaptive_sum(cone, nu_estimate, evaluate, cfg, label):
    """Run ``evaluate(table)`` on growing mode tables until the tail is small.

    ``evaluate`` returns (total, envelope, abs_scale) per point.
    """
    nu_max = max(float(nu_estimate), 4.0)
    while True:
        table = cone.modes(nu_max)
        if table.nu.size > cfg.max_modes:
            raise TruncationError(f"{label}: more than {cfg.max_modes} modes required",
                                  last_term=float("nan"), bound=float("nan"))
        total, env, scale = evaluate(table)
        tail = _tail_bound(env)
        ok = tail <= cfg.tail_tol * np.maximum(scale, np.finfo(float).tiny)
        if np.all(ok):
            return total, tail
        if table.complete_to < nu_max or not math.isfinite(table.complete_to):
            if not math.isfinite(table.complete_to):
                nu_max *= 1.5
                continue
        worst = int(np.argmax(np.where(ok, -np.inf, tail / np.maximum(scale, 1e-300))))
        raise TruncationError(
            f"{label}: spectrum exhausted before the tail converged "
            f"(modes up to order {table.nu[-1] if table.nu.size else 0:.6g})",
            last_term=float(env.reshape(-1, env.shape[-1])[worst, -1]),
            bound=float(tail.reshape(-1)[worst]))


def _heat_blocks(cone, t, r, y, r2, y2, cfg):
    """Flattened mode-sum heat kernel; inputs already broadcast and flat."""
    z = r * r2 / (2.0 * t)
    c = -math.log(cfg.tail_tol)
    zmax = float(np.max(z)) if z.size else 0.0
    nu_est = c + math.sqrt(c * c + 2.0 * c * zmax) + 8.0
    pref = (r * r2) ** (-(cone.n - 2) / 2.0) * np.exp(-(r - r2) ** 2 / (4.0 * t)) / (2.0 * t)

    def evaluate(table):
        total = np.empty(z.shape)
        env_out = np.empty(z.shape + (min(2, table.nu.size),))
        scale = np.empty(z.shape)
        step = max(1, _BLOCK_ELEMENTS // max(table.nu.size, 1))
        for s in range(0, z.size, step):
            sl = slice(s, s + step)
            log_is, _ = log_bessel_ik_scaled(table.nu[None, :], z[sl, None], cfg.bessel)
            radial = np.exp(log_is)
            weights = cone.projection_weights(y[sl], y2[sl], table)
            terms = weights * radial
            total[sl] = terms.sum(axis=1)
            scale[sl] = np.abs(terms).sum(axis=1)
            env_out[sl] = (table.mult / cone.volume * radial)[:, -env_out.shape[1]:]
        return pref * total, env_out, scale * pref

    out, _ = _adaptive_sum(cone, nu_est, evaluate, cfg, "heat mode sum")
    return out


def _flatten_inputs(cone, r, y, r2, y2, extra=None):
    r = np.asarray(r, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if cone.kind == "sphere":
        y = np.asarray(y, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        dim = y.shape[-1]
        shape = np.broadcast_shapes(r.shape, r2.shape, y.shape[:-1], y2.shape[:-1],
                                    () if extra is None else np.shape(extra))
        yb = np.broadcast_to(y, shape + (dim,)).reshape(-1, dim)
        y2b = np.broadcast_to(y2, shape + (dim,)).reshape(-1, dim)
    else:
        y = np.asarray(y, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        shape = np.broadcast_shapes(r.shape, r2.shape, y.shape, y2.shape,
                                    () if extra is None else np.shape(extra))
        yb = np.broadcast_to(y, shape).ravel()
        y2b = np.broadcast_to(y2, shape).ravel()
    rb = np.broadcast_to(r, shape).ravel()
    r2b = np.broadcast_to(r2, shape).ravel()
    eb = None if extra is None else np.broadcast_to(extra, shape).ravel()
    if np.any(rb <= 0) or np.any(r2b <= 0):
        raise ValueError("radial coordinates must be positive")
    return shape, rb, yb, r2b, y2b, eb


def heat_kernel_grid(cone, t, r, y, r2, y2, cfg=None):
    """Vectorized heat kernel on a cone.

    Parameters
    ----------
    cone : ConeGeometry
        Circle or sphere cross-section.
    t : float or array_like
        Positive times, broadcast with the points.
    r, y, r2, y2 : array_like
        Coordinates of the two points. For sphere cross-sections ``y`` and
        ``y2`` are unit vectors along the last axis.
    cfg : ModeSumConfig, optional

    Returns
    -------
    ndarray or float
    """
    cfg = cfg or DEFAULT_MODE_CONFIG
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("time must be positive")
    shape, rb, yb, r2b, y2b, tb = _flatten_inputs(cone, r, y, r2, y2, t_arr)
    out = np.empty(rb.shape)
    # group by time so each group shares one truncation
    for tv in np.unique(tb):
        sel = tb == tv
        out[sel] = _heat_blocks(cone, float(tv), rb[sel], yb[sel], r2b[sel], y2b[sel], cfg)
    return out.reshape(shape)[()]


def heat_kernel_cone(cone, t, p, p2, cfg=None):
    """Heat kernel H(t, p, p2) of an exact cone by the Bessel mode sum.

    Parameters
    ----------
    cone : ConeGeometry
    t : float
        Time, t > 0.
    p, p2 : ConePoint
    cfg : ModeSumConfig, optional

    Returns
    -------
    float

    Raises
    ------
    TruncationError
        If the spectrum runs out before the tail bound reaches ``tail_tol``.
    """
    r, y = _as_points(cone, p)
    r2, y2 = _as_points(cone, p2)
    return float(heat_kernel_grid(cone, t, r, y, r2, y2, cfg))


def diagonal_trace_density(cone, s, cfg=None):
    """G(s) = integral over N of H(s, 1, y, 1, y) dy.

    Needs only multiplicities, so file spectra are supported:
    G(s) = sum_j m_j (1/2s) exp(-1/2s) I_{nu_j}(1/2s).

    Parameters
    ----------
    cone : ConeGeometry
    s : array_like
        Positive times.

    Returns
    -------
    ndarray
    """
    cfg = cfg or DEFAULT_MODE_CONFIG
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    out = np.empty(flat.shape)
    c = -math.log(cfg.tail_tol)
    for i, sv in enumerate(flat):
        z = 1.0 / (2.0 * sv)

        def evaluate(table, _z=z):
            log_is, _ = log_bessel_ik_scaled(table.nu, np.full(table.nu.shape, _z), cfg.bessel)
            terms = table.mult * np.exp(log_is)
            tot = np.sum(terms)
            return (np.array([tot]), terms[None, -min(2, terms.size):],
                    np.array([tot]))

        nu_est = c + math.sqrt(c * c + 2.0 * c * z) + 8.0
        total, _ = _adaptive_sum(cone, nu_est, evaluate, cfg, "trace density")
        out[i] = total[0] / (2.0 * sv)
    return out.reshape(s.shape)[()]


def resolvent_grid(cone, k, r, y, r2, y2, cfg=None):
    """Vectorized resolvent kernel of (Laplacian + k^2)^{-1} on a cone.

    Parameters
    ----------
    cone : ConeGeometry
    k : complex or array_like
        Spectral parameter with Re k > 0, broadcast with the points.
    r, y, r2, y2 : array_like
    cfg : ModeSumConfig, optional

    Returns
    -------
    ndarray or scalar
        Real for real k.

    Raises
    ------
    DiagonalSingularityError
        If the two points coincide.
    TruncationError
        If r = r2 (the mode sum then converges only conditionally) or the
        modes run out.
    """
    cfg = cfg or DEFAULT_MODE_CONFIG
    k_arr = np.asarray(k)
    if np.any(np.real(k_arr) <= 0):
        raise ValueError("resolvent needs Re k > 0")
    shape, rb, yb, r2b, y2b, kb = _flatten_inputs(cone, r, y, r2, y2, k_arr)
    same_r = rb == r2b
    if cone.kind == "sphere":
        same_y = np.all(yb == y2b, axis=-1) if yb.ndim > 1 else (yb == y2b)
        same_y = same_y | (np.sum(yb * y2b, axis=-1) >= 1.0)
    else:
        same_y = np.isclose(cone.cross_distance(yb, y2b), 0.0, rtol=0, atol=0)
    if np.any(same_r & same_y):
        raise DiagonalSingularityError("the resolvent kernel is singular on the diagonal")
    if np.any(same_r):
        raise TruncationError(
            "resolvent mode sum at r = r' decays only like 1/nu; no bound available",
            last_term=1.0 / (2.0 * max(cone.shift, 1.0) ** 0.5), bound=float("inf"))
    r_lo = np.minimum(rb, r2b)
    r_hi = np.maximum(rb, r2b)
    ratio = float(np.max(r_lo / r_hi))
    a = kb * r_lo
    b = kb * r_hi
    is_complex = np.iscomplexobj(kb)
    pref = (rb * r2b) ** (-(cone.n - 2) / 2.0)
    c = -math.log(cfg.tail_tol)
    nu_est = float(np.max(np.abs(b))) + (c + 5.0) / (-math.log(ratio)) + 10.0

    def evaluate(table):
        dtype = complex if is_complex else float
        total = np.empty(a.shape, dtype=dtype)
        env_out = np.empty(a.shape + (min(2, table.nu.size),))
        scale = np.empty(a.shape)
        step = max(1, _BLOCK_ELEMENTS // max(table.nu.size, 1))
        for s in range(0, a.size, step):
            sl = slice(s, s + step)
            log_i, _ = log_bessel_ik_scaled(table.nu[None, :], a[sl, None], cfg.bessel)
            _, log_k = log_bessel_ik_scaled(table.nu[None, :], b[sl, None], cfg.bessel)
            radial = np.exp(log_i + log_k + (a[sl] - b[sl])[:, None])
            weights = cone.projection_weights(yb[sl], y2b[sl], table)
            terms = weights * radial
            total[sl] = terms.sum(axis=1)
            scale[sl] = np.abs(terms).sum(axis=1)
            env_out[sl] = (table.mult / cone.volume * np.abs(radial))[:, -env_out.shape[1]:]
        return pref * total, env_out, np.abs(pref) * scale

    out, _ = _adaptive_sum(cone, nu_est, evaluate, cfg, "resolvent mode sum")
    return out.reshape(shape)[()]


def resolvent_cone(cone, k, p, p2, cfg=None):
    """Resolvent kernel R(k, p, p2) of (Laplacian + k^2)^{-1}; real for real k > 0."""
    r, y = _as_points(cone, p)
    r2, y2 = _as_points(cone, p2)
    val = resolvent_grid(cone, k, r, y, r2, y2, cfg)
    return complex(val) if np.iscomplexobj(val) else float(val)


# ------------------------------------------------------------- contour

@dataclass(frozen=True)
class ContourRule:
    """Quadrature nodes lambda_i and weights w_i with sum w_i f(lambda_i) ~ contour integral."""

    lam: np.ndarray
    weights: np.ndarray


def contour_rule(contour, t):
    """Nodes and complex weights (including d lambda) for the contour at time t."""
    phi = contour.phi
    if math.cos(phi) >= 0:
        raise ContourError("rays do not decay: cos(phi) must be negative")
    a, r_max = contour.resolved(t)
    if math.exp(t * r_max * math.cos(phi)) > 1e-12:
        raise ContourError(
            f"ray truncation {r_max:.4g} leaves exp(t R cos phi) = "
            f"{math.exp(t * r_max * math.cos(phi)):.3g}; rays not decayed")
    rho, w_rho = composite_gauss(graded_edges(a, r_max, contour.ray_panels, contour.grading),
                                 contour.order)
    theta, w_theta = composite_gauss(np.linspace(-phi, phi, contour.arc_panels + 1), contour.order)
    up = np.exp(1j * phi)
    down = np.exp(-1j * phi)
    lam = np.concatenate([rho * down, a * np.exp(1j * theta), rho * up])
    weights = np.concatenate([-w_rho * down,
                              w_theta * 1j * a * np.exp(1j * theta),
                              w_rho * up])
    return ContourRule(lam, weights)


def heat_from_resolvent_contour(cone, t, p, p2, contour=None, cfg=None):
    """Heat kernel from the resolvent by the contour integral.

    Evaluates (1/2 pi i) int_Gamma exp(lambda t) R(sqrt(lambda), p, p2) d lambda
    with Gamma the contour of ``contour`` (counterclockwise around the
    negative real axis) and R the kernel of (Laplacian + lambda)^{-1}.

    Returns
    -------
    complex
        Its imaginary part measures quadrature asymmetry and should be tiny.

    Raises
    ------
    ContourError
        If the rays are not in the decaying sector.
    """
    contour = contour or ContourSpec()
    rule = contour_rule(contour, t)
    r, y = _as_points(cone, p)
    r2, y2 = _as_points(cone, p2)
    k = np.sqrt(rule.lam)
    vals = resolvent_grid(cone, k, r, y, r2, y2, cfg)
    integrand = np.exp(rule.lam * t) * vals
    return complex(np.sum(rule.weights * integrand) / (2j * math.pi))


# --------------------------------------------------------- bound fitting

@dataclass
class GaussianBoundFit:
    """Result of :func:`gaussian_bound_fit`.

    Attributes
    ----------
    c1, c2 : float
        Certified constants (C1 minimal over the C2 sweep, C2 the smallest
        value attaining it).
    violations : list of dict
        Samples where the bound fails or the kernel is not positive/finite.
    sweep : list of (float, float)
        (C2, C1(C2)) for every candidate C2.
    skipped : list of int
        Indices of input samples left out as numerically unresolved.
    """

    c1: float
    c2: float
    violations: list
    sweep: list
    skipped: list = field(default_factory=list)


def cancellation_exponent(cone, t, p, p2):
    """Log of the factor by which mode-sum rounding is amplified.

    Each mode term is of size exp(-(r - r')^2 / 4t) while the kernel is of
    size exp(-d^2 / 4t), so the relative rounding error of the sum is about
    eps * exp((d^2 - (r - r')^2) / 4t).
    """
    d = float(cone.cone_distance(p.r, p.y, p2.r, p2.y))
    return (d * d - (p.r - p2.r) ** 2) / (4.0 * t)


def gaussian_bound_fit(cone, samples, c2_grid=None, cfg=None, max_cancellation=30.0):
    """Fit the Gaussian upper bound H <= C1 t^{-n/2} exp(-d^2 / (C2 t)).

    Parameters
    ----------
    cone : ConeGeometry
    samples : sequence of (t, ConePoint, ConePoint)
    c2_grid : array_like, optional
        Candidate C2 values; default geometric grid on [1, 64] containing 4.
    cfg : ModeSumConfig, optional
    max_cancellation : float
        Samples whose :func:`cancellation_exponent` exceeds this are not
        resolved by the mode sum in double precision; they are listed in
        ``skipped`` instead of being fitted.

    Returns
    -------
    GaussianBoundFit
    """
    if c2_grid is None:
        c2_grid = 4.0 * 2.0 ** np.linspace(-2.0, 4.0, 49)
    c2_grid = np.sort(np.asarray(c2_grid, dtype=float))
    skipped = [i for i, s in enumerate(samples)
               if cancellation_exponent(cone, s[0], s[1], s[2]) > max_cancellation]
    kept = [i for i in range(len(samples)) if i not in set(skipped)]
    samples = [samples[i] for i in kept]
    ts = np.array([s[0] for s in samples], dtype=float)
    heat = np.array([heat_kernel_cone(cone, s[0], s[1], s[2], cfg) for s in samples])
    dist = np.array([cone.cone_distance(s[1].r, s[1].y, s[2].r, s[2].y) for s in samples])
    violations = [
        {"index": kept[i], "t": float(ts[i]), "value": float(heat[i]),
         "reason": "kernel not positive"}
        for i in range(len(samples)) if not (np.isfinite(heat[i]) and heat[i] > 0)
    ]
    good = np.isfinite(heat) & (heat > 0)
    sweep = []
    for c2 in c2_grid:
        ratio = heat[good] * ts[good] ** (cone.n / 2.0) * np.exp(dist[good] ** 2 / (c2 * ts[good]))
        sweep.append((float(c2), float(np.max(ratio)) if ratio.size else math.inf))
    c1_values = np.array([s[1] for s in sweep])
    best = float(np.min(c1_values))
    idx = int(np.argmax(c1_values <= best * (1.0 + 1e-9)))
    c1, c2 = sweep[idx][1], sweep[idx][0]
    bound = c1 * ts ** (-cone.n / 2.0) * np.exp(-dist ** 2 / (c2 * ts))
    for i in np.nonzero(good & (heat > bound * (1.0 + 1e-12)))[0]:
        violations.append({"index": kept[i], "t": float(ts[i]), "value": float(heat[i]),
                           "bound": float(bound[i]), "reason": "bound exceeded"})
    if not math.isfinite(c1):
        violations.append({"index": -1, "reason": "no finite constant"})
    return GaussianBoundFit(c1, c2, violations, sweep, skipped)


# ------------------------------------------------------- bf0/zf matching

@dataclass
class MatchingReport:
    """Comparison of the resolvent near zero frequency with its leading term.

    Attributes
    ----------
    kappas, sigmas : ndarray
    relative_residual : ndarray
        |Q - leading| / |leading| on the (kappa, sigma) grid.
    max_deviation : float
        Maximum relative residual at the smallest kappa.
    log_coefficient : float
        Two-point estimate of the coefficient of log(kappa).
    expected_log_coefficient : float
        -1/V.
    higher_mode_sum : ndarray
        sum_{j>=1} Pi_j I(kappa sigma) K(kappa) at the smallest kappa, per sigma.
    higher_mode_limit : ndarray
        sum_{j>=1} Pi_j sigma^{nu_j} / (2 nu_j), per sigma.
    """

    kappas: np.ndarray
    sigmas: np.ndarray
    relative_residual: np.ndarray
    max_deviation: float
    log_coefficient: float
    expected_log_coefficient: float
    higher_mode_sum: np.ndarray
    higher_mode_limit: np.ndarray


def _higher_mode_limit(cone, sigma, y, y2, tol):
    """sum_{j>=1} Pi_j(y, y2) sigma^{nu_j} / (2 nu_j), geometric in sigma < 1."""
    nu_max = (-math.log(tol) + 5.0) / (-math.log(sigma)) + 4.0
    table = cone.modes(nu_max)
    w = cone.projection_weights(np.asarray(y, float), np.asarray(y2, float), table)
    nu = table.nu[1:]
    return float(np.sum(w[1:] * sigma ** nu / (2.0 * nu)))


def verify_bf0_zf_matching(cone, kappas, sigmas, y=0.0, y2=0.0, cfg=None):
    """Check the small-kappa limit of the bf0 model against its predicted leading term.

    In coordinates kappa = k r and sigma = r'/r < 1 the two-dimensional cone
    resolvent is sum_j Pi_j I_{nu_j}(kappa sigma) K_{nu_j}(kappa), whose
    leading behaviour as kappa -> 0 is

        V^{-1} (-log kappa + log 2 - gamma) + sum_{j>=1} Pi_j sigma^{nu_j} / (2 nu_j).

    Parameters
    ----------
    cone : ConeGeometry
        Two-dimensional cone with a pointwise mode kernel.
    kappas : array_like
        Small positive values, at least two.
    sigmas : array_like
        Values in (0, 1).

    Returns
    -------
    MatchingReport
    """
    if cone.n != 2:
        raise ValueError("the matching check is for two-dimensional cones")
    cfg = cfg or DEFAULT_MODE_CONFIG
    kappas = np.sort(np.asarray(kappas, dtype=float))[::-1]
    sigmas = np.asarray(sigmas, dtype=float)
    if kappas.size < 2 or np.any(kappas <= 0):
        raise ValueError("need at least two positive kappa values")
    if np.any((sigmas <= 0) | (sigmas >= 1)):
        raise ValueError("sigma must lie in (0, 1)")
    euler = 0.57721566490153286061
    inv_v = 1.0 / cone.volume
    limits = np.array([_higher_mode_limit(cone, s, y, y2, cfg.tail_tol) for s in sigmas])
    resid = np.empty((kappas.size, sigmas.size))
    values = np.empty_like(resid)
    for i, kap in enumerate(kappas):
        # r = 1 is the outer point, r' = sigma the inner one, k = kappa
        q = resolvent_grid(cone, kap, 1.0, y, sigmas, y2, cfg)
        lead = inv_v * (-math.log(kap) + math.log(2.0) - euler) + limits
        values[i] = q
        resid[i] = np.abs(q - lead) / np.abs(lead)
    k1, k2 = kappas[-2], kappas[-1]
    log_coef = float(np.mean((values[-2] - values[-1]) / (math.log(k1) - math.log(k2))))
    zero_mode = inv_v * _i0k0(kappas[-1], sigmas)
    return MatchingReport(kappas, sigmas, resid, float(np.max(resid[-1])), log_coef, -inv_v,
                          values[-1] - zero_mode, limits)


def _i0k0(kappa, sigmas):
    log_i, _ = log_bessel_ik_scaled(0.0, kappa * sigmas)
    _, log_k = log_bessel_ik_scaled(0.0, np.full(sigmas.shape, kappa))
    return np.exp(log_i + log_k + kappa * sigmas - kappa)
