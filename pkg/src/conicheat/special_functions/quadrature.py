"""Adaptive Gauss-Kronrod quadrature and fixed composite Gauss-Legendre rules."""

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import QuadratureError

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
for _i, _w in zip((1, 3, 5), _WG[:3]):
    _GAUSS_W[_i] = _w
    _GAUSS_W[14 - _i] = _w
_GAUSS_W[7] = _WG[3]


@dataclass
class QuadResult:
    """Outcome of :func:`integrate_adaptive`.

    Attributes
    ----------
    value : float or complex
    error : float
        Estimated absolute error.
    n_evals : int
        Number of integrand evaluations.
    n_intervals : int
    """

    value: complex
    error: float
    n_evals: int
    n_intervals: int


def _rule(f, a, b):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = center + half * _NODES
    fx = np.asarray(f(x))
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError("integrand is not finite", worst_interval=(a, b), worst_error=math.inf)
    k = half * np.dot(_KRONROD_W, fx)
    g = half * np.dot(_GAUSS_W, fx)
    return k, float(abs(k - g))


def integrate_adaptive(f, a, b, tol=1e-10, abs_floor=1e-14, max_intervals=2000,
                       vectorized=True, points=None):
    """Adaptive G7/K15 integration of a real- or complex-valued function.

    Parameters
    ----------
    f : callable
        Integrand. With ``vectorized=True`` it receives a 1-d array of nodes
        and must return an array of the same length; otherwise it is called
        once per node.
    a, b : float
        Limits; ``b`` may be ``np.inf`` (mapped by x = a + u/(1-u)), in which
        case the integrand must decay so that the mapped integrand is finite.
        Endpoint-integrable singularities are allowed since nodes never hit
        the endpoints.
    tol : float
        Relative tolerance.
    abs_floor : float
        Absolute tolerance floor.
    max_intervals : int
        Maximum number of subintervals.
    points : sequence of float, optional
        Interior break points where the integrand is not smooth.

    Returns
    -------
    QuadResult

    Raises
    ------
    QuadratureError
        If the tolerance is not met within ``max_intervals``; the exception
        carries the worst interval.
    """
    if not vectorized:
        g0 = f
        f = lambda x: np.array([g0(v) for v in x])  # noqa: E731
    if a == b:
        return QuadResult(0.0, 0.0, 0, 0)
    if b < a:
        res = integrate_adaptive(f, b, a, tol, abs_floor, max_intervals, True, points)
        return QuadResult(-res.value, res.error, res.n_evals, res.n_intervals)
    if math.isinf(a):
        raise ValueError("lower limit must be finite")
    if math.isinf(b):
        base = f

        def f(u, _base=base, _a=a):
            x = _a + u / (1.0 - u)
            return _base(x) / (1.0 - u) ** 2

        lo, hi = 0.0, 1.0
        brk = [] if points is None else [(p - a) / (1.0 + p - a) for p in points]
    else:
        lo, hi = a, b
        brk = [] if points is None else list(points)
    edges = [lo] + sorted(p for p in brk if lo < p < hi) + [hi]
    heap = []
    total = 0.0
    err_total = 0.0
    evals = 0
    for k, (x0, x1) in enumerate(zip(edges[:-1], edges[1:])):
        val, err = _rule(f, x0, x1)
        evals += 15
        total += val
        err_total += err
        heapq.heappush(heap, (-err, k, x0, x1, val))
    counter = len(heap)
    while err_total > max(tol * abs(total), abs_floor):
        if len(heap) >= max_intervals:
            worst = heap[0]
            raise QuadratureError(
                f"no convergence after {len(heap)} intervals (error {err_total:.3g})",
                value=total, error=err_total, worst_interval=(worst[2], worst[3]),
                worst_error=-worst[0])
        neg_err, _, x0, x1, val = heapq.heappop(heap)
        mid = 0.5 * (x0 + x1)
        if not (x0 < mid < x1):
            raise QuadratureError("interval collapsed below floating-point resolution",
                                  value=total, error=err_total, worst_interval=(x0, x1),
                                  worst_error=-neg_err)
        v0, e0 = _rule(f, x0, mid)
        v1, e1 = _rule(f, mid, x1)
        evals += 30
        total += v0 + v1 - val
        err_total += e0 + e1 + neg_err
        heapq.heappush(heap, (-e0, counter, x0, mid, v0))
        heapq.heappush(heap, (-e1, counter + 1, mid, x1, v1))
        counter += 2
    # re-sum to avoid drift from incremental updates
    total = sum(item[4] for item in sorted(heap, key=lambda it: it[2]))
    err_total = sum(-item[0] for item in heap)
    total = complex(total) if np.iscomplexobj(total) else float(total)
    return QuadResult(total, err_total, evals, len(heap))


@lru_cache(maxsize=64)
def gauss_legendre(order):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss(edges, order):
    """Nodes and weights of a composite Gauss-Legendre rule.

    Parameters
    ----------
    edges : array_like
        Increasing real panel boundaries.
    order : int
        Points per panel.

    Returns
    -------
    nodes, weights : ndarray
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    left = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    nodes = left + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_edges(a, b, n_panels, ratio):
    """Panel boundaries on [a, b] whose widths grow geometrically by ``ratio``."""
    if n_panels < 1:
        raise ValueError("need at least one panel")
    if ratio == 1.0:
        return np.linspace(a, b, n_panels + 1)
    widths = ratio ** np.arange(n_panels)
    cum = np.concatenate([[0.0], np.cumsum(widths)])
    return a + (b - a) * cum / cum[-1]
