"""Modified Bessel functions I_nu and K_nu of real order and complex argument.

All evaluations go through one vectorized core that works with logarithms of
the exponentially scaled functions

    Is = exp(-z) I_nu(z),    Ks = exp(z) K_nu(z),

so that products such as I_nu(a) K_nu(b) in resolvent mode sums can be
formed without overflow even for huge orders or arguments.

Algorithm, for Re z > 0:

* |z| <= 2: Temme's series for K_mu, K_{mu+1} with mu = nu - round(nu).
* |z| > 2: Steed's continued fraction for the scaled K_mu, K_{mu+1}.
* Either way, K_nu follows by upward recurrence on the ratio K_{m+1}/K_m
  (stable for K), and I_nu from the continued fraction for I_{nu+1}/I_nu
  combined with the Wronskian I_nu K_{nu+1} + I_{nu+1} K_nu = 1/z.
* sqrt(nu^2 + z^2) large: the uniform (Debye) expansion for both functions.

The left half-plane is reached by analytic continuation across the
imaginary axis.
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import BesselOverflowError, SingularityError
from .gamma import RGAMMA_TAYLOR

VALIDATED_MAX_ORDER = 50.0
VALIDATED_MAX_ABS_ARG = 200.0

_TEMME_RADIUS = 2.0
_DEBYE_TERMS = 14
_DEBYE_MAX_P = 1.4
_DEBYE_MAX_ARG = 0.4 * math.pi
_EPS = np.finfo(float).eps


class OutOfRegionWarning(UserWarning):
    """Evaluation outside the validated (order, argument) region; best effort."""


@dataclass(frozen=True)
class BesselEvalConfig:
    """Accuracy controls for Bessel evaluation.

    Parameters
    ----------
    target_rel_tol : float or None
        Relative accuracy target. ``None`` selects 1e-12 for real arguments
        and 1e-10 for complex ones. Iterative stages stop three orders of
        magnitude below this target (never below machine precision).
    series_asymptotic_switch_radius : float
        Threshold on |sqrt(nu^2 + z^2)| above which the uniform asymptotic
        expansion replaces series and continued fractions.
    max_terms : int
        Iteration cap for series and continued fractions.
    """

    target_rel_tol: float | None = None
    series_asymptotic_switch_radius: float = 50.0
    max_terms: int = 20000

    def __post_init__(self):
        if self.target_rel_tol is not None and not 0.0 < self.target_rel_tol < 1.0:
            raise ValueError("target_rel_tol must lie in (0, 1)")
        if not self.series_asymptotic_switch_radius > 0:
            raise ValueError("series_asymptotic_switch_radius must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")

    def loop_tol(self, is_complex):
        target = self.target_rel_tol
        if target is None:
            target = 1e-10 if is_complex else 1e-12
        return max(target * 1e-3, _EPS)


DEFAULT_CONFIG = BesselEvalConfig()


def _debye_coefficients(count):
    """Coefficients of V_k(q) = U_k(p)/p^k as polynomials in q = p^2.

    U_0 = 1 and U_{k+1}(p) = p^2 (1 - p^2) U_k'(p) / 2
    + (1/8) int_0^p (1 - 5 t^2) U_k(t) dt, computed exactly in rationals.
    """
    polys = [{0: Fraction(1)}]
    for _ in range(count - 1):
        u = polys[-1]
        nxt = {}
        for deg, c in u.items():
            if deg > 0:
                d = c * deg
                for shift, sign in ((deg + 1, 1), (deg + 3, -1)):
                    nxt[shift] = nxt.get(shift, 0) + sign * d / 2
            for shift, w in ((deg + 1, Fraction(1, 8) / (deg + 1)),
                             (deg + 3, Fraction(-5, 8) / (deg + 3))):
                nxt[shift] = nxt.get(shift, 0) + c * w
        polys.append({k: v for k, v in nxt.items() if v != 0})
    out = []
    for k, u in enumerate(polys):
        coef = np.zeros(k + 1)
        for deg, c in u.items():
            coef[(deg - k) // 2] = float(c)
        out.append(coef)
    return out


_DEBYE_V = _debye_coefficients(_DEBYE_TERMS)

# Series for gamma1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu) and
# gamma2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2 as polynomials in mu^2.
_GAM1 = np.array([-RGAMMA_TAYLOR[k] for k in range(1, len(RGAMMA_TAYLOR), 2)])
_GAM2 = np.array([RGAMMA_TAYLOR[k] for k in range(0, len(RGAMMA_TAYLOR), 2)])


def _poly_even(coef, mu):
    m2 = mu * mu
    acc = np.zeros_like(mu)
    for c in coef[::-1]:
        acc = acc * m2 + c
    return acc


def _temme(mu, z, tol, max_terms):
    """K_mu(z) and K_{mu+1}(z) for |z| <= 2, |mu| <= 1/2 (unscaled)."""
    half = 0.5 * z
    pimu = np.pi * mu
    with np.errstate(invalid="ignore", divide="ignore"):
        fact = np.where(mu == 0, 1.0, pimu / np.sin(np.where(mu == 0, 1.0, pimu)))
    d = -np.log(half)
    e = mu * d
    small_e = np.abs(e) < 1e-4
    e_safe = np.where(small_e, 1.0, e)
    fact2 = np.where(small_e, 1.0 + e * e / 6.0 + e ** 4 / 120.0, np.sinh(e_safe) / e_safe)
    gam1 = _poly_even(_GAM1, mu)
    gam2 = _poly_even(_GAM2, mu)
    rg_plus = gam2 - mu * gam1  # 1/Gamma(1+mu)
    rg_minus = gam2 + mu * gam1  # 1/Gamma(1-mu)
    ff = fact * (gam1 * np.cosh(e) + gam2 * fact2 * d)
    total = ff.copy()
    ee = np.exp(e)
    p = 0.5 * ee / rg_plus
    q = 0.5 / (ee * rg_minus)
    c = np.ones_like(total)
    dd = half * half
    total1 = p.copy()
    done = np.zeros(total.shape, dtype=bool)
    mu2 = mu * mu
    for i in range(1, max_terms + 1):
        ff = (i * ff + p + q) / (i * i - mu2)
        c = c * dd / i
        p = p / (i - mu)
        q = q / (i + mu)
        term = c * ff
        term1 = c * (p - i * ff)
        total = total + np.where(done, 0, term)
        total1 = total1 + np.where(done, 0, term1)
        done |= np.abs(term) < tol * np.abs(total)
        if done.all():
            break
    return total, total1 * 2.0 / z


def _steed(mu, z, tol, max_terms):
    """exp(z) K_mu(z) and exp(z) K_{mu+1}(z) for |z| > 2, Re z > 0."""
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(z)
    q2 = np.ones_like(z)
    a1 = 0.25 - mu * mu
    q = a1 * np.ones_like(z)
    c = q.copy()
    a = -a1 * np.ones_like(z)
    s = 1.0 + q * delh
    done = np.zeros(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for i in range(1, max_terms + 1):
            a = a - 2 * i
            c = -a * c / (i + 1.0)
            qnew = (q1 - b * q2) / a
            q1 = q2
            q2 = qnew
            q = q + c * qnew
            b = b + 2.0
            d = 1.0 / (b + a * d)
            delh = (b * d - 1.0) * delh
            h = h + np.where(done, 0, delh)
            dels = q * delh
            s = s + np.where(done, 0, dels)
            done |= np.abs(dels) < tol * np.abs(s)
            if done.all():
                break
    kmu = np.sqrt(np.pi / (2.0 * z)) / s
    k1 = kmu * (mu + z + 0.5 - a1 * h) / z
    return kmu, k1


def _cf1_ratio(nu, z, tol, max_terms):
    """I_{nu+1}(z) / I_nu(z) by the modified Lentz algorithm."""
    tiny = 1e-300
    f = np.full(z.shape, tiny, dtype=z.dtype)
    cc = f.copy()
    dd = np.zeros_like(f)
    done = np.zeros(z.shape, dtype=bool)
    inv_z = 1.0 / z
    for k in range(1, max_terms + 1):
        bk = 2.0 * (nu + k) * inv_z
        dd = bk + dd
        dd = np.where(dd == 0, tiny, dd)
        cc = bk + 1.0 / cc
        cc = np.where(cc == 0, tiny, cc)
        dd = 1.0 / dd
        delta = cc * dd
        f = np.where(done, f, f * delta)
        done |= np.abs(delta - 1.0) < tol
        if done.all():
            break
    return f


def _log_recurrence_part(nu, z, tol, max_terms):
    """Scaled logs via Temme/Steed, upward recurrence, CF1 and the Wronskian."""
    nl = np.floor(nu + 0.5)
    mu = nu - nl
    log_ks = np.empty(z.shape, dtype=z.dtype)
    ratio = np.empty(z.shape, dtype=z.dtype)
    near = np.abs(z) <= _TEMME_RADIUS
    if near.any():
        k0, k1 = _temme(mu[near], z[near], tol, max_terms)
        log_ks[near] = np.log(k0) + z[near]
        ratio[near] = k1 / k0
    far = ~near
    if far.any():
        k0, k1 = _steed(mu[far], z[far], tol, max_terms)
        log_ks[far] = np.log(k0)
        ratio[far] = k1 / k0
    steps = nl.astype(np.int64)
    if steps.size:
        for i in range(1, int(steps.max()) + 1):
            act = steps >= i
            log_ks = np.where(act, log_ks + np.log(ratio), log_ks)
            ratio = np.where(act, 1.0 / ratio + 2.0 * (mu + i) / z, ratio)
    f = _cf1_ratio(nu, z, tol, max_terms)
    log_is = -np.log(z) - log_ks - np.log(f + ratio)
    return log_is, log_ks


def _log_debye(nu, z):
    """Scaled logs from the uniform expansion in 1/sqrt(nu^2 + z^2)."""
    s = np.sqrt(nu * nu + z * z)
    p = nu / s
    q = p * p
    inv_s = 1.0 / s
    sum_i = np.zeros_like(s)
    sum_k = np.zeros_like(s)
    power = np.ones_like(s)
    for k, coef in enumerate(_DEBYE_V):
        v = np.polyval(coef[::-1], q) * power
        sum_i = sum_i + v
        sum_k = sum_k + (-1) ** k * v
        power = power * inv_s
    excess = nu * nu / (s + z)  # s - z without cancellation
    phase = nu * np.log(z / (nu + s))
    log_is = excess + phase - 0.5 * np.log(2.0 * np.pi * s) + np.log(sum_i)
    log_ks = -excess - phase + 0.5 * np.log(np.pi / (2.0 * s)) + np.log(sum_k)
    return log_is, log_ks


def _debye_mask(nu, z, switch):
    s = np.sqrt(nu * nu + z * z)
    absz = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_ok = np.abs(nu) <= _DEBYE_MAX_P * np.abs(s)
    return (np.abs(s) >= switch) & p_ok & (np.abs(np.angle(z)) <= _DEBYE_MAX_ARG) & (absz > 0)


def log_bessel_ik_scaled(nu, z, cfg=None):
    """Logarithms of exp(-z) I_nu(z) and exp(z) K_nu(z) for Re z > 0.

    Parameters
    ----------
    nu : array_like
        Real orders, nu >= 0.
    z : array_like
        Arguments with positive real part (real or complex). Broadcast
        against ``nu``.
    cfg : BesselEvalConfig, optional

    Returns
    -------
    log_is, log_ks : ndarray
        Real arrays for real ``z``; complex arrays (logs on some branch)
        otherwise. ``exp(log_is + z)`` is I_nu(z).
    """
    cfg = cfg or DEFAULT_CONFIG
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z))
    shape = z_b.shape
    is_complex = np.iscomplexobj(z_b)
    dtype = complex if is_complex else float
    nu_f = nu_b.astype(float).ravel()
    z_f = z_b.astype(dtype).ravel()
    if np.any(nu_f < 0):
        raise ValueError("order must be nonnegative")
    if np.any(z_f.real <= 0):
        raise ValueError("log_bessel_ik_scaled needs Re z > 0")
    tol = cfg.loop_tol(is_complex)
    log_is = np.empty(z_f.shape, dtype=dtype)
    log_ks = np.empty(z_f.shape, dtype=dtype)
    deb = _debye_mask(nu_f, z_f, cfg.series_asymptotic_switch_radius)
    if deb.any():
        log_is[deb], log_ks[deb] = _log_debye(nu_f[deb], z_f[deb])
    rest = ~deb
    if rest.any():
        log_is[rest], log_ks[rest] = _log_recurrence_part(nu_f[rest], z_f[rest], tol,
                                                          cfg.max_terms)
    return log_is.reshape(shape), log_ks.reshape(shape)


def in_validated_region(nu, z):
    """Boolean mask of points inside the documented validated region."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z)
    return (nu <= VALIDATED_MAX_ORDER) & (np.abs(z) <= VALIDATED_MAX_ABS_ARG)


def _warn_region(nu, z):
    if not np.all(in_validated_region(nu, z)):
        warnings.warn(
            f"Bessel evaluation outside the validated region (nu <= {VALIDATED_MAX_ORDER:g}, "
            f"|z| <= {VALIDATED_MAX_ABS_ARG:g}); result is best effort",
            OutOfRegionWarning, stacklevel=3)


def _prepare(nu, z):
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z))
    if np.any(nu_b < 0):
        raise ValueError("order must be nonnegative")
    if np.iscomplexobj(z_b):
        bad = (z_b.imag == 0) & (z_b.real < 0)
        if np.any(bad):
            raise ValueError("argument on the branch cut (negative real axis)")
    elif np.any(z_b < 0):
        raise ValueError("negative real argument lies on the branch cut; pass a complex value")
    return nu_b, z_b


def _scalar_out(x, was_scalar):
    return x[()] if was_scalar else x


def bessel_ik_scaled(nu, z, cfg=None, warn=True):
    """Return (exp(-z) I_nu(z), exp(z) K_nu(z)) for |arg z| < pi.

    For Re z < 0 the scaling factors are still exp(-z) and exp(z), so the
    scaled values may themselves be large there. K is infinite at z = 0
    and is returned as ``inf``.
    """
    was_scalar = np.ndim(nu) == 0 and np.ndim(z) == 0
    nu_b, z_b = _prepare(nu, z)
    if warn:
        _warn_region(nu_b, z_b)
    is_complex = np.iscomplexobj(z_b)
    dtype = complex if is_complex else float
    zf = z_b.astype(dtype).ravel()
    nf = nu_b.ravel()
    out_i = np.empty(zf.shape, dtype=dtype)
    out_k = np.empty(zf.shape, dtype=dtype)
    zero = zf == 0
    out_i[zero] = np.where(nf[zero] == 0, 1.0, 0.0)
    out_k[zero] = np.inf
    right = (~zero) & (zf.real > 0)
    if right.any():
        li, lk = log_bessel_ik_scaled(nf[right], zf[right], cfg)
        out_i[right] = np.exp(li)
        out_k[right] = np.exp(lk)
    axis = (~zero) & (zf.real == 0)
    left = (~zero) & (zf.real < 0)
    if axis.any():
        # nudge onto the right half-plane boundary: I and K are continuous there
        w = zf[axis] + 0.0j
        li, lk = log_bessel_ik_scaled(nf[axis], w + 1e-300, cfg)
        out_i[axis] = np.exp(li)
        out_k[axis] = np.exp(lk)
    if left.any():
        w = -zf[left]
        sign = np.where(zf[left].imag >= 0, 1.0, -1.0)
        li, lk = log_bessel_ik_scaled(nf[left], w, cfg)
        nl = nf[left]
        # I(z) = e^{+-i pi nu} I(w); K(z) = e^{-+i pi nu} K(w) -+ i pi I(w), z = -w
        i_w = np.exp(li + w)
        k_w = np.exp(lk - w)
        i_z = np.exp(1j * np.pi * nl * sign) * i_w
        k_z = np.exp(-1j * np.pi * nl * sign) * k_w - sign * 1j * np.pi * i_w
        with np.errstate(over="ignore", invalid="ignore"):
            out_i[left] = i_z * np.exp(-zf[left])
            out_k[left] = k_z * np.exp(zf[left])
    shape = z_b.shape
    return (_scalar_out(out_i.reshape(shape), was_scalar),
            _scalar_out(out_k.reshape(shape), was_scalar))


def bessel_ie(nu, z, cfg=None):
    """Exponentially scaled I: exp(-z) I_nu(z)."""
    return bessel_ik_scaled(nu, z, cfg)[0]


def bessel_ke(nu, z, cfg=None):
    """Exponentially scaled K: exp(z) K_nu(z). Raises at z = 0."""
    if np.any(np.asarray(z) == 0):
        raise SingularityError("K_nu is singular at z = 0")
    return bessel_ik_scaled(nu, z, cfg)[1]


def _unscale(scaled, z, sign, name):
    with np.errstate(over="ignore", invalid="ignore"):
        val = scaled * np.exp(sign * np.asarray(z))
    if not np.all(np.isfinite(val)):
        raise BesselOverflowError(f"{name} overflows; use the scaled variant")
    return val


def bessel_i(nu, z, cfg=None):
    """Modified Bessel function of the first kind I_nu(z).

    Parameters
    ----------
    nu : float or array_like
        Real order, nu >= 0.
    z : complex or array_like
        Argument with |arg z| < pi. Real input gives real output.
    cfg : BesselEvalConfig, optional

    Returns
    -------
    float, complex or ndarray

    Raises
    ------
    BesselOverflowError
        If the unscaled value is not representable; use :func:`bessel_ie`.

    Notes
    -----
    Outside nu <= 50, |z| <= 200 an :class:`OutOfRegionWarning` is issued.
    """
    s_i = bessel_ik_scaled(nu, z, cfg)[0]
    zz = np.asarray(z)
    return _unscale(s_i, np.where(zz == 0, 0, zz), 1.0, "I_nu")


def bessel_k(nu, z, cfg=None):
    """Modified Bessel function of the second kind K_nu(z).

    Raises
    ------
    SingularityError
        At z = 0.
    BesselOverflowError
        If the value is not representable; use :func:`bessel_ke`.
    """
    if np.any(np.asarray(z) == 0):
        raise SingularityError("K_nu is singular at z = 0")
    s_k = bessel_ik_scaled(nu, z, cfg)[1]
    return _unscale(s_k, z, -1.0, "K_nu")
