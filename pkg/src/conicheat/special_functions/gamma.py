"""Gamma function and its reciprocal for complex arguments."""

import cmath
import math

import numpy as np

from ..errors import PoleError

EULER_GAMMA = 0.57721566490153286061

# Lanczos approximation, g = 7, nine coefficients.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# Taylor coefficients of 1/Gamma(z) = sum_{k>=1} c_k z^k, index k-1.
RGAMMA_TAYLOR = (
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
    1.1866922547516003326e-18,
    1.4123806553180317816e-18,
    -2.2987456844353702066e-19,
    1.7144063219273374334e-20,
)


def _pole_index(s):
    """Return -k if s is the nonpositive integer -k, else None."""
    if s.imag == 0.0 and s.real <= 0.0 and s.real == math.floor(s.real):
        return int(-s.real)
    return None


def _lanczos(s):
    # valid for Re s >= 1/2
    s = s - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (s + i)
    t = s + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * cmath.exp((s + 0.5) * cmath.log(t) - t) * acc


def _gamma_scalar(s):
    if s.real < 0.5:
        return math.pi / (cmath.sin(math.pi * s) * _lanczos(1.0 - s))
    return _lanczos(s)


def gamma_fn(s):
    """Gamma function of a complex argument.

    Parameters
    ----------
    s : complex or float
        Argument; must not be a nonpositive integer.

    Returns
    -------
    complex or float
        Real when ``s`` is real.

    Raises
    ------
    PoleError
        At s = 0, -1, -2, ...; ``residue_sign`` is (-1)^k at s = -k.
    """
    z = complex(s)
    k = _pole_index(z)
    if k is not None:
        raise PoleError(f"Gamma has a pole at s = {-k}", location=-k, order=1,
                        residue_sign=(-1) ** k)
    if z.imag == 0.0 and z.real > 0 and z.real == math.floor(z.real) and z.real < 30:
        return float(math.factorial(int(z.real) - 1))
    val = _gamma_scalar(z)
    if isinstance(s, (int, float, np.floating, np.integer)):
        return val.real
    return val


def rgamma(s):
    """Reciprocal gamma function 1/Gamma(s), entire, zero at nonpositive integers."""
    z = complex(s)
    if _pole_index(z) is not None:
        val = 0j
    elif abs(z) < 0.5:
        # Taylor series avoids the cancellation of the reflection formula near 0.
        val = 0j
        for c in reversed(RGAMMA_TAYLOR):
            val = (val + c) * z
    else:
        val = 1.0 / _gamma_scalar(z)
    if isinstance(s, (int, float, np.floating, np.integer)):
        return val.real
    return val


def rgamma_series_at_zero(order):
    """Coefficients [c_0, c_1, ..., c_order] of 1/Gamma(s) around s = 0."""
    if order > len(RGAMMA_TAYLOR):
        raise ValueError(f"order at most {len(RGAMMA_TAYLOR)} is tabulated")
    return [0.0] + list(RGAMMA_TAYLOR[:order])
