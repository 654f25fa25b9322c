"""Spectra of the cross-section Laplacian and the cone geometries built on them.

A cone is described by its total dimension n and the spectrum of the
Laplacian on its cross-section N. Each eigenvalue lambda_j gives the Bessel
order

    nu_j = sqrt((n/2 - 1)^2 + lambda_j)

of the corresponding radial mode. Circles and round spheres carry
closed-form eigenspace projection kernels; spectra read from files support
only operations that need multiplicities.
"""

import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import InvalidGeometryError, SpectrumParseError, UnsupportedOperationError
from .special_functions.gamma import gamma_fn

# Relative slack when testing lambda <= cutoff, so cutoffs typed as the exact
# eigenvalue are not lost to rounding.
_CUTOFF_SLACK = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Truncated spectrum: ascending eigenvalues with multiplicities.

    Attributes
    ----------
    eigenvalues : tuple of float
        Strictly increasing, nonnegative.
    multiplicities : tuple of int
        Positive.
    cutoff : float
        All eigenvalues <= cutoff are present.
    source : str
        ``"circle"``, ``"sphere"`` or ``"file"``.
    params : tuple of (str, object)
        Source parameters, e.g. ``(("length", L),)``.
    """

    eigenvalues: tuple
    multiplicities: tuple
    cutoff: float
    source: str
    params: tuple = ()

    def __post_init__(self):
        lam = self.eigenvalues
        mult = self.multiplicities
        if len(lam) != len(mult):
            raise ValueError("eigenvalues and multiplicities differ in length")
        if any(v < 0 for v in lam):
            raise ValueError("eigenvalues must be nonnegative")
        if any(b <= a for a, b in zip(lam, lam[1:])):
            raise ValueError("eigenvalues must be strictly increasing")
        if any(int(m) != m or m < 1 for m in mult):
            raise ValueError("multiplicities must be positive integers")
        if self.source in ("circle", "sphere") and (not lam or lam[0] != 0 or mult[0] != 1):
            raise ValueError("a connected cross-section starts with the entry (0, 1)")

    @property
    def entries(self):
        """List of (eigenvalue, multiplicity) pairs."""
        return list(zip(self.eigenvalues, self.multiplicities))

    @property
    def param_dict(self):
        return dict(self.params)

    def __len__(self):
        return len(self.eigenvalues)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, j):
        return self.entries[j]

    def count(self):
        """Number of eigenvalues counted with multiplicity."""
        return int(sum(self.multiplicities))


def _check_cutoff(cutoff):
    if not cutoff >= 0 or not math.isfinite(cutoff):
        raise InvalidGeometryError(f"cutoff must be a finite nonnegative number, got {cutoff!r}")


def circle_spectrum(length, cutoff):
    """Spectrum of d^2/dy^2 on a circle of the given length.

    Parameters
    ----------
    length : float
        Circumference L > 0.
    cutoff : float
        Include every eigenvalue (2 pi j / L)^2 <= cutoff.

    Returns
    -------
    Spectrum
    """
    if not length > 0 or not math.isfinite(length):
        raise InvalidGeometryError(f"circle length must be positive, got {length!r}")
    _check_cutoff(cutoff)
    scale = length / (2.0 * math.pi)
    lam = [0.0]
    mult = [1]
    j = 1
    limit = cutoff * (1.0 + _CUTOFF_SLACK)
    while True:
        value = (j / scale) ** 2
        if value > limit:
            break
        lam.append(value)
        mult.append(2)
        j += 1
    return Spectrum(tuple(lam), tuple(mult), float(cutoff), "circle", (("length", float(length)),))


def sphere_multiplicity(k, d):
    """Dimension of the degree-k spherical harmonics on S^d."""
    if d == 1:
        return 1 if k == 0 else 2
    return math.comb(k + d, d) - (math.comb(k + d - 2, d) if k >= 2 else 0)


def sphere_spectrum(d, cutoff, radius=1.0):
    """Spectrum of the Laplacian on the round sphere S^d.

    Parameters
    ----------
    d : int
        Sphere dimension, d >= 1.
    cutoff : float
    radius : float, optional
        Sphere radius; eigenvalues are k(k + d - 1) / radius^2.

    Returns
    -------
    Spectrum
    """
    if int(d) != d or d < 1:
        raise InvalidGeometryError(f"sphere dimension must be a positive integer, got {d!r}")
    if not radius > 0:
        raise InvalidGeometryError("sphere radius must be positive")
    _check_cutoff(cutoff)
    d = int(d)
    inv_r2 = 1.0 / radius ** 2
    limit = cutoff * (1.0 + _CUTOFF_SLACK)
    lam, mult = [], []
    k = 0
    while True:
        value = k * (k + d - 1) * inv_r2
        if value > limit:
            break
        lam.append(float(value))
        mult.append(sphere_multiplicity(k, d))
        k += 1
    return Spectrum(tuple(lam), tuple(mult), float(cutoff), "sphere",
                    (("dim", d), ("radius", float(radius))))


def load_spectrum(path):
    """Read a spectrum file.

    Format: one ``eigenvalue multiplicity`` pair per line, ascending
    eigenvalues, ``#`` starts a comment, blank lines ignored. The cutoff is
    the largest listed eigenvalue.

    Raises
    ------
    SpectrumParseError
        On malformed lines, non-increasing eigenvalues, nonpositive
        multiplicities, or an empty file. Carries the line number.
    """
    lam, mult = [], []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SpectrumParseError(f"expected 'eigenvalue multiplicity', got {raw.strip()!r}", lineno)
        try:
            value = float(parts[0])
        except ValueError:
            raise SpectrumParseError(f"bad eigenvalue {parts[0]!r}", lineno) from None
        try:
            m = int(parts[1])
        except ValueError:
            raise SpectrumParseError(f"bad multiplicity {parts[1]!r}", lineno) from None
        if not math.isfinite(value) or value < 0:
            raise SpectrumParseError(f"eigenvalue must be finite and nonnegative, got {value}", lineno)
        if m < 1:
            raise SpectrumParseError(f"multiplicity must be positive, got {m}", lineno)
        if lam and value <= lam[-1]:
            raise SpectrumParseError("eigenvalues must be strictly increasing", lineno)
        lam.append(value)
        mult.append(m)
    if not lam:
        raise SpectrumParseError("spectrum file contains no entries")
    return Spectrum(tuple(lam), tuple(mult), lam[-1], "file", (("path", str(path)),))


@dataclass(frozen=True)
class ModeTable:
    """Modes of a cone sorted by Bessel order.

    Attributes
    ----------
    nu, mult, lam : ndarray
        Orders, multiplicities and cross-section eigenvalues.
    complete_to : float
        Every mode with order <= complete_to is present (inf when the
        spectrum can be extended on demand).
    """

    nu: np.ndarray
    mult: np.ndarray
    lam: np.ndarray
    complete_to: float


@dataclass(frozen=True)
class ConeGeometry:
    """Exact cone over a cross-section with known spectrum.

    Attributes
    ----------
    n : int
        Total dimension (n >= 2).
    spectrum : Spectrum
    volume : float
        Volume of the cross-section.
    mode_kernel : callable or None
        ``mode_kernel(j, y, y2)`` gives the eigenspace projection kernel of
        mode j; ``None`` for file spectra.
    """

    n: int
    spectrum: Spectrum
    volume: float
    mode_kernel: Optional[Callable] = field(default=None, compare=False)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidGeometryError(f"cone dimension must be an integer >= 2, got {self.n!r}")
        if not self.volume > 0:
            raise InvalidGeometryError("cross-section volume must be positive")
        src = self.spectrum.source
        if src == "sphere" and self.spectrum.param_dict["dim"] != self.n - 1:
            raise InvalidGeometryError("sphere dimension must be n - 1")
        if src == "circle" and self.n != 2:
            raise InvalidGeometryError("a cone over a circle has dimension 2")

    # construction helpers
    @classmethod
    def circle(cls, length, cutoff=400.0):
        """Two-dimensional cone over a circle of the given length."""
        spec = circle_spectrum(length, cutoff)
        L = float(length)

        def kernel(j, y, y2, _L=L):
            if j == 0:
                return np.full(np.broadcast(np.asarray(y), np.asarray(y2)).shape, 1.0 / _L)[()]
            return (2.0 / _L) * np.cos(2.0 * math.pi * j * (np.asarray(y) - np.asarray(y2)) / _L)

        return cls(2, spec, L, kernel)

    @classmethod
    def sphere(cls, d, cutoff=400.0, radius=1.0):
        """Cone of dimension d + 1 over a round sphere S^d."""
        spec = sphere_spectrum(d, cutoff, radius)
        vol = sphere_volume(d, radius)
        cone = cls(int(d) + 1, spec, vol, None)
        object.__setattr__(cone, "mode_kernel", cone._sphere_kernel)
        return cone

    @classmethod
    def from_file(cls, path, n, volume):
        """Cone over a cross-section whose spectrum is read from ``path``."""
        return cls(int(n), load_spectrum(path), float(volume), None)

    @classmethod
    def from_spectrum(cls, spectrum, n, volume, mode_kernel=None):
        return cls(int(n), spectrum, float(volume), mode_kernel)

    # properties
    @property
    def kind(self):
        return self.spectrum.source

    @property
    def length(self):
        """Circle length (circle cross-sections only)."""
        if self.kind != "circle":
            raise UnsupportedOperationError("length is defined for circle cross-sections only")
        return self.spectrum.param_dict["length"]

    @property
    def shift(self):
        """(n/2 - 1)^2, the constant added to eigenvalues in the indicial roots."""
        return (self.n / 2.0 - 1.0) ** 2

    def label(self):
        p = self.spectrum.param_dict
        if self.kind == "circle":
            return f"circle(L={p['length']:.12g})"
        if self.kind == "sphere":
            return f"sphere(d={p['dim']}, radius={p['radius']:.12g})"
        return f"file({p['path']})"

    # spectral data
    def _extended_spectrum(self, cutoff):
        p = self.spectrum.param_dict
        if self.kind == "circle":
            return circle_spectrum(p["length"], cutoff)
        return sphere_spectrum(p["dim"], cutoff, p["radius"])

    def modes(self, nu_max):
        """Modes with Bessel order <= nu_max, extending built-in spectra on demand.

        Returns
        -------
        ModeTable
        """
        if self.kind == "file":
            lam = np.asarray(self.spectrum.eigenvalues, dtype=float)
            nu = np.sqrt(self.shift + lam)
            keep = nu <= nu_max
            cover = math.sqrt(self.shift + self.spectrum.cutoff)
            return ModeTable(nu[keep], np.asarray(self.spectrum.multiplicities, float)[keep],
                             lam[keep], cover)
        lam_needed = max(nu_max * nu_max - self.shift, 0.0)
        # round up so repeated requests share cached tables
        cutoff = max(self.spectrum.cutoff, 2.0 ** math.ceil(math.log2(max(lam_needed, 1.0))))
        with self._lock:
            table = self._cache.get(cutoff)
            if table is None:
                spec = self.spectrum if cutoff == self.spectrum.cutoff else self._extended_spectrum(cutoff)
                lam = np.asarray(spec.eigenvalues, dtype=float)
                table = ModeTable(np.sqrt(self.shift + lam),
                                  np.asarray(spec.multiplicities, dtype=float), lam, math.inf)
                self._cache[cutoff] = table
        keep = table.nu <= nu_max
        return ModeTable(table.nu[keep], table.mult[keep], table.lam[keep], math.inf)

    def first_modes(self, count):
        """The lowest ``count`` modes (fewer for a file spectrum that is shorter)."""
        if self.kind == "file":
            t = self.modes(math.inf)
            return ModeTable(t.nu[:count], t.mult[:count], t.lam[:count], t.complete_to)
        nu_max = 2.0 * count + 2.0
        while True:
            table = self.modes(nu_max)
            if table.nu.size >= count:
                return ModeTable(table.nu[:count], table.mult[:count], table.lam[:count], math.inf)
            nu_max *= 2.0

    # pointwise kernels
    def _sphere_kernel(self, j, y, y2):
        x = self._cos_angle(y, y2)
        z = zonal_values(x, j + 1, self.n - 1)[..., j]
        return self.spectrum_mult(j) / self.volume * z

    def spectrum_mult(self, j):
        if j < len(self.spectrum):
            return self.spectrum.multiplicities[j]
        if self.kind == "circle":
            return 2
        if self.kind == "sphere":
            return sphere_multiplicity(j, self.n - 1)
        raise IndexError(j)

    def _cos_angle(self, y, y2):
        y = np.asarray(y, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        return np.clip(np.sum(y * y2, axis=-1), -1.0, 1.0)

    def cross_distance(self, y, y2):
        """Intrinsic distance on the cross-section."""
        if self.kind == "circle":
            L = self.length
            delta = np.mod(np.asarray(y, float) - np.asarray(y2, float), L)
            return np.minimum(delta, L - delta)
        if self.kind == "sphere":
            return self.spectrum.param_dict["radius"] * np.arccos(self._cos_angle(y, y2))
        raise UnsupportedOperationError("file spectra carry no cross-section metric")

    def cone_distance(self, r, y, r2, y2):
        """Distance on the cone between (r, y) and (r2, y2)."""
        ang = np.minimum(self.cross_distance(y, y2), math.pi)
        r = np.asarray(r, float)
        r2 = np.asarray(r2, float)
        d2 = (r - r2) ** 2 + 2.0 * r * r2 * (1.0 - np.cos(ang))
        return np.sqrt(np.maximum(d2, 0.0))

    def projection_weights(self, y, y2, table):
        """Projection kernels Pi_j(y, y2) for every mode in ``table``.

        Returns
        -------
        ndarray of shape broadcast(y, y2) + (len(table.nu),)
        """
        count = table.nu.size
        if self.kind == "circle":
            L = self.length
            delta = np.asarray(y, float) - np.asarray(y2, float)
            j = np.arange(count)
            w = np.where(j == 0, 1.0, 2.0) / L
            return w * np.cos((2.0 * math.pi / L) * delta[..., None] * j)
        if self.kind == "sphere":
            x = self._cos_angle(y, y2)
            return table.mult / self.volume * zonal_values(x, count, self.n - 1)
        raise UnsupportedOperationError(
            "pointwise kernels need a circle or sphere cross-section; file spectra support traces only")


def sphere_volume(d, radius=1.0):
    """Volume of the round sphere S^d of the given radius."""
    return float(2.0 * math.pi ** ((d + 1) / 2.0) / gamma_fn((d + 1) / 2.0)) * radius ** d


def zonal_values(x, count, d):
    """Zonal harmonics of degrees 0..count-1 on S^d, normalized to 1 at x = 1.

    Uses the three-term recurrence
    Z_{k+1} = (2 (k + a) x Z_k - k Z_{k-1}) / (k + 2a), a = (d - 1)/2,
    which reduces to Chebyshev polynomials for d = 1 and Legendre for d = 2.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (count,))
    if count == 0:
        return out
    a = (d - 1) / 2.0
    out[..., 0] = 1.0
    if count > 1:
        out[..., 1] = x
    for k in range(1, count - 1):
        out[..., k + 1] = (2.0 * (k + a) * x * out[..., k] - k * out[..., k - 1]) / (k + 2.0 * a)
    return out


def indicial_roots(cone):
    """Bessel orders nu_j = sqrt((n/2 - 1)^2 + lambda_j) with multiplicities.

    For n = 2 the square root of lambda_j is taken directly so that the
    orders of integer eigenvalue squares are exact.

    Returns
    -------
    list of (float, int)
    """
    out = []
    for lam, m in cone.spectrum:
        nu = math.sqrt(lam) if cone.n == 2 else math.sqrt(cone.shift + lam)
        out.append((nu, m))
    return out


def sphere_point(*angles):
    """Unit vector from hyperspherical angles (theta_1, ..., theta_{d-1}, phi)."""
    d = len(angles)
    if d == 0:
        raise ValueError("need at least one angle")
    out = np.empty(d + 1)
    s = 1.0
    for i, ang in enumerate(angles[:-1]):
        out[i] = s * math.cos(ang)
        s *= math.sin(ang)
    out[d - 1] = s * math.cos(angles[-1])
    out[d] = s * math.sin(angles[-1])
    return out
