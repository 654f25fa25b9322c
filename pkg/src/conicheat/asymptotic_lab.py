"""Numerical extraction of leading orders from sampled kernel limits.

Samples f(rho) with rho -> 0 are fitted to C rho^alpha (log 1/rho)^beta by
linear regression of log|f| on log(rho) and log|log(rho)|. The approach
paths through the heat and resolvent kernels of exact cones are fixed
here so that fitted exponents can be compared with the expected tables.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .cone_model import ConePoint, heat_kernel_cone, resolvent_cone
from .errors import FitError

ORDER_TOL = 0.05
QUALITY_MIN = 0.999
REGIMES = ("zf", "lb0", "bf0", "short_time_diag")


@dataclass
class OrderFit:
    """Leading behaviour coefficient * rho^exponent * log(1/rho)^log_power.

    Attributes
    ----------
    exponent : float
    log_power : int
        0 or 1.
    coefficient : float
        Signed.
    quality : float
        Larger of the coefficient of determination and one minus the RMS
        residual of log|f|, on the fitted half of the grid.
    rho, values : ndarray
        Samples used.
    log_weight : float
        Fitted coefficient of log|log rho| (before rounding to log_power).
    full_grid_exponent : float
        Exponent from the same model on the whole grid, as a consistency check.
    """

    exponent: float
    log_power: int
    coefficient: float
    quality: float
    rho: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    log_weight: float = 0.0
    full_grid_exponent: float = float("nan")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "value"])
            for r, v in zip(self.rho, self.values):
                w.writerow([repr(float(r)), repr(float(v))])


def _regress(x_cols, y):
    a = np.column_stack(x_cols)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    rss = float(np.sum((a @ coef - y) ** 2))
    return coef, rss


def _aic(rss, m, k):
    # floor keeps exact fits comparable
    return m * math.log(max(rss / m, 1e-300)) + 2 * k


def fit_leading_order(rho, values, allow_log=True, quality_min=QUALITY_MIN):
    """Fit the leading power (and optionally one log) of samples as rho -> 0.

    Parameters
    ----------
    rho : array_like
        Positive sample points; at least 8, spanning at least 2 decades.
    values : array_like
        Nonzero samples of one sign on the fitted half.
    allow_log : bool
        Allow a log(1/rho) factor, chosen by an Akaike comparison.
    quality_min : float
        Smallest accepted coefficient of determination.

    Returns
    -------
    OrderFit

    Raises
    ------
    FitError
        On sign changes, zeros or a fit quality below ``quality_min``.
    """
    rho = np.asarray(rho, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(rho)
    rho, values = rho[order], values[order]
    if rho.size < 8:
        raise ValueError("need at least 8 samples")
    if np.any(rho <= 0):
        raise ValueError("rho must be positive")
    if math.log10(rho[-1] / rho[0]) < 2.0 - 1e-9:
        raise ValueError("rho must span at least two decades")
    if allow_log and rho[-1] >= 1.0:
        raise ValueError("log detection needs rho < 1")
    diag = {"rho": rho.tolist(), "values": values.tolist()}
    if np.any(values == 0) or not np.all(np.isfinite(values)):
        raise FitError("samples contain zeros or non-finite values", diag)
    half = max(4, rho.size // 2)
    r, v = rho[:half], values[:half]
    if np.any(np.sign(v) != np.sign(v[0])):
        raise FitError("samples change sign near rho = 0; no clean order", diag)
    y = np.log(np.abs(v))
    lr = np.log(r)
    ones = np.ones_like(lr)
    c0, rss0 = _regress([ones, lr], y)
    best = (c0, rss0, 0, 0.0)
    if allow_log:
        c1, rss1 = _regress([ones, lr, np.log(-lr)], y)
        beta = float(c1[2])
        if abs(beta - 1.0) < 0.25 and _aic(rss1, y.size, 3) < _aic(rss0, y.size, 2):
            best = (c1, rss1, 1, beta)
    coef, rss, logp, beta = best
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    # nearly constant samples make r2 meaningless; the log residual stays scale free
    quality = max(r2, 1.0 - math.sqrt(rss / y.size))
    diag.update({"quality": quality, "exponent": float(coef[1]), "log_weight": beta})
    if quality < quality_min:
        raise FitError(f"fit quality {quality:.6f} below {quality_min}", diag)
    # same model on the whole grid
    full_cols = [np.ones_like(rho), np.log(rho)] + ([np.log(-np.log(rho))] if logp else [])
    full, _ = _regress(full_cols, np.log(np.abs(values)))
    sign = float(np.sign(v[0]))
    return OrderFit(float(coef[1]), logp, sign * math.exp(coef[0]), float(quality), rho, values,
                    beta, float(full[1]))


# ------------------------------------------------------------- paths

@dataclass
class OrderCheck:
    """Fitted order along one approach path compared with the expected one."""

    regime: str
    expected: float
    fit: OrderFit
    tolerance: float = ORDER_TOL
    at_least: bool = True

    @property
    def deviation(self):
        return self.fit.exponent - self.expected

    @property
    def status(self):
        if abs(self.deviation) <= self.tolerance:
            return "pass"
        if self.at_least and self.deviation > 0:
            return "pass (order at least)"
        return "fail"

    @property
    def passed(self):
        return self.status != "fail"

    def row(self):
        return (self.regime, self.expected, self.fit.exponent, self.fit.log_power, self.status)


def _default_points(cone):
    if cone.kind == "sphere":
        d = cone.n - 1
        y = np.zeros(d + 1)
        y[0] = 1.0
        y2 = np.zeros(d + 1)
        y2[0], y2[1] = math.cos(1.0), math.sin(1.0)
        return ConePoint(1.0, y), ConePoint(1.5, y2)
    return ConePoint(1.0, 0.0), ConePoint(1.5, 1.0)


def heat_path_samples(cone, regime, rho, p=None, p2=None, cfg=None):
    """Heat kernel values along an approach path.

    zf: t = rho^{-2} at fixed points. lb0: t = a^2, r = a with a = 1/rho and
    fixed (y, r', y'). bf0: t = a^2, r = r' = a with fixed (y, y').
    short_time_diag: t = rho^2 at p = p'.
    """
    dp, dp2 = _default_points(cone)
    p = p or dp
    p2 = p2 or dp2
    out = []
    for x in np.asarray(rho, dtype=float):
        if regime == "zf":
            val = heat_kernel_cone(cone, x ** -2, p, p2, cfg)
        elif regime == "lb0":
            a = 1.0 / x
            val = heat_kernel_cone(cone, a * a, ConePoint(a, p.y), p2, cfg)
        elif regime == "bf0":
            a = 1.0 / x
            val = heat_kernel_cone(cone, a * a, ConePoint(a, p.y), ConePoint(a, p2.y), cfg)
        elif regime == "short_time_diag":
            val = heat_kernel_cone(cone, x * x, p, p, cfg)
        else:
            raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
        out.append(val)
    return np.array(out)


def expected_heat_order(n, regime):
    """n at zf, lb0 and bf0 (as lower bounds); -n on the short-time diagonal."""
    if regime == "short_time_diag":
        return float(-n)
    if regime in ("zf", "lb0", "bf0"):
        return float(n)
    raise ValueError(f"unknown regime {regime!r}")


def verify_heat_orders(cone, regime, rho=None, p=None, p2=None, cfg=None, tolerance=ORDER_TOL):
    """Fit the leading order of the heat kernel along a regime's path.

    Parameters
    ----------
    cone : ConeGeometry
    regime : {"zf", "lb0", "bf0", "short_time_diag"}
    rho : array_like, optional
        Path parameter; defaults to 16 points from 1e-1 down to 1e-3.

    Returns
    -------
    OrderCheck
    """
    rho = np.geomspace(1e-3, 1e-1, 16) if rho is None else np.asarray(rho, dtype=float)
    vals = heat_path_samples(cone, regime, rho, p, p2, cfg)
    fit = fit_leading_order(rho, vals, allow_log=False)
    return OrderCheck(regime, expected_heat_order(cone.n, regime), fit, tolerance,
                      at_least=regime != "short_time_diag")


def verify_all_heat_orders(cone, cfg=None, **kw):
    return [verify_heat_orders(cone, reg, cfg=cfg, **kw) for reg in REGIMES]


@dataclass
class ResolventOrderReport:
    """Behaviour of the resolvent kernel at fixed points as k -> 0.

    For n = 2, ``log_coefficient`` is the coefficient of log k (expected
    -1/V) and ``limit`` the finite part after removing it. For n >= 3 the
    kernel itself has the finite ``limit`` and ``log_coefficient`` should
    vanish.
    """

    n: int
    ks: np.ndarray
    values: np.ndarray
    log_coefficient: float
    expected_log_coefficient: float
    limit: float
    limit_change: float

    def log_ok(self, tol=1e-4):
        return abs(self.log_coefficient - self.expected_log_coefficient) <= tol

    def limit_ok(self, rel_tol=1e-3):
        return math.isfinite(self.limit) and self.limit_change <= rel_tol * max(1.0, abs(self.limit))


def verify_resolvent_orders(cone, ks=None, p=None, p2=None, cfg=None):
    """Estimate the small-k structure of the resolvent at fixed points.

    The log coefficient is the slope of R against log k between the two
    smallest k; the limit is R minus that log term at the smallest k, with
    ``limit_change`` its change from the third smallest k (the two smallest
    define the slope, so their difference carries no information).
    """
    ks = np.geomspace(1e-2, 1e-6, 9) if ks is None else np.sort(np.asarray(ks, float))[::-1]
    dp, dp2 = _default_points(cone)
    p = p or dp
    p2 = p2 or dp2
    vals = np.array([float(np.real(resolvent_cone(cone, k, p, p2, cfg))) for k in ks])
    lk = np.log(ks)
    slope = float((vals[-2] - vals[-1]) / (lk[-2] - lk[-1]))
    expected = -1.0 / cone.volume if cone.n == 2 else 0.0
    log_coef = slope if cone.n == 2 else 0.0
    rem = vals - log_coef * lk
    if ks.size < 3:
        raise ValueError("need at least three k values")
    return ResolventOrderReport(cone.n, ks, vals, slope, expected, float(rem[-1]),
                                float(abs(rem[-1] - rem[-3])))


def render_report(checks):
    """Text table: regime, expected, fitted, log, status."""
    lines = [f"{'regime':<16}{'expected':>10}{'fitted':>12}{'log':>5}  status"]
    for c in checks:
        reg, exp, fit, logp, status = c.row()
        lines.append(f"{reg:<16}{exp:>10.3f}{fit:>12.5f}{logp:>5d}  {status}")
    return "\n".join(lines)
