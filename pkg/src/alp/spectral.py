"""
Spectral core on the periodic box [0, 2*pi)^3.

Fields are stored as discrete Fourier coefficients normalised so that a
constant field ``c`` has coefficient ``c`` at ``k = 0`` (``norm="forward"``
in numpy/scipy terms).  Wavenumbers are the integers ``[-n/2, n/2)`` on each
axis, laid out in FFT order.

Frequency localisation (isotropic blocks, vertical blocks, low-pass
operators) is done with Fourier multipliers built from a single smooth step
``eta`` with ``eta = 1`` on ``[0, 1]`` and ``eta = 0`` on ``[2, inf)``:

    chi(r) = eta(r)                 (ball)
    phi(r) = eta(r / 2) - eta(r)    (ring, support (1, 4))

so that ``chi(r) + sum_{j >= 0} phi(2^-j r)`` telescopes to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Union

import numpy as np
import scipy.fft as sfft

_AXES = (-3, -2, -1)

# dealiasing rules understood by ``product`` and friends
DEALIAS_RULES = ("3/2-pad", "2/3")


def _readonly(a):
    a = np.asarray(a)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``n1 x n2 x n3`` points on [0, 2*pi)^3."""

    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        for n in (self.n1, self.n2, self.n3):
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(
                    f"grid sizes must be even integers >= 8, got {(self.n1, self.n2, self.n3)}"
                )

    @classmethod
    def cube(cls, n: int) -> "Grid":
        return cls(n, n, n)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def size(self) -> int:
        return self.n1 * self.n2 * self.n3

    @property
    def label(self) -> str:
        return f"{self.n1}x{self.n2}x{self.n3}"

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(2 * np.pi / n for n in self.shape)

    def wavenumbers(self, axis: int) -> np.ndarray:
        """Integer wavenumbers along ``axis`` (0, 1 or 2) in FFT order."""
        n = self.shape[axis]
        return np.fft.fftfreq(n, 1.0 / n).round().astype(np.int64)

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable wavenumber arrays ``(k1, k2, k3)``."""
        k1 = self.wavenumbers(0).astype(float)[:, None, None]
        k2 = self.wavenumbers(1).astype(float)[None, :, None]
        k3 = self.wavenumbers(2).astype(float)[None, None, :]
        return _readonly(k1), _readonly(k2), _readonly(k3)

    @cached_property
    def k_eff(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Wavenumbers used by odd-order operators: Nyquist entries set to 0.

        Keeps derivatives and the Leray projector reality preserving, since
        the Nyquist index is its own conjugate partner.
        """
        out = []
        for axis, kk in enumerate(self.k):
            kk = kk.copy()
            kk[kk == -self.shape[axis] // 2] = 0.0
            out.append(_readonly(kk))
        return tuple(out)

    @cached_property
    def kmag(self) -> np.ndarray:
        k1, k2, k3 = self.k
        return _readonly(np.sqrt(k1**2 + k2**2 + k3**2))

    @cached_property
    def kh2(self) -> np.ndarray:
        k1, k2, _ = self.k
        return _readonly(np.broadcast_to(k1**2 + k2**2, (self.n1, self.n2, 1)).copy())

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on every mode that has a Nyquist index on some axis."""
        k1, k2, k3 = self.k
        m = (k1 == -self.n1 // 2) | (k2 == -self.n2 // 2) | (k3 == -self.n3 // 2)
        return _readonly(m)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable physical coordinates ``(x1, x2, x3)``."""
        x = [2 * np.pi * np.arange(n) / n for n in self.shape]
        return x[0][:, None, None], x[1][None, :, None], x[2][None, None, :]

    def horizontal_coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x1 = 2 * np.pi * np.arange(self.n1) / self.n1
        x2 = 2 * np.pi * np.arange(self.n2) / self.n2
        return x1[:, None], x2[None, :]


# ---------------------------------------------------------------------------
# fields


def _conj_reflect(c: np.ndarray) -> np.ndarray:
    """Return ``conj(c(-k))`` on the last three axes."""
    r = np.flip(c, axis=_AXES)
    r = np.roll(r, 1, axis=_AXES)
    return np.conj(r)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a scalar field on ``grid``."""

    grid: Grid
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, complex))

    def samples(self) -> np.ndarray:
        return inverse_transform(self)

    def is_conjugate_symmetric(self, rtol: float = 1e-13) -> bool:
        scale = max(np.abs(self.coeffs).max(), 1e-300)
        return bool(np.abs(self.coeffs - _conj_reflect(self.coeffs)).max() <= rtol * scale)

    def _new(self, c, real=None):
        return SpectralField(self.grid, c, self.real if real is None else real)

    def _check(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self._new(self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self._new(self.coeffs - other.coeffs, self.real and other.real)

    def __neg__(self):
        return self._new(-self.coeffs)

    def __mul__(self, a):
        if not np.isscalar(a):
            return NotImplemented
        return self._new(self.coeffs * a, self.real and np.isrealobj(a))

    __rmul__ = __mul__

    def norm(self) -> float:
        """Coefficient l2 norm (equals the RMS of the samples)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Three scalar fields on a shared grid, stored as one ``(3, n1, n2, n3)`` array."""

    grid: Grid
    coeffs: np.ndarray
    real: bool = True
    divfree: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (3,) + self.grid.shape:
            raise ValueError(f"vector coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _readonly(c))
        if self.divfree:
            err = divergence_defect(self)
            if err > 1e-10:
                raise ValueError(f"divfree flag set but relative divergence is {err:.3e}")

    @classmethod
    def _trusted(cls, grid, coeffs, real=True, divfree=False) -> "VectorField":
        """Build without re-validating the divergence invariant."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "coeffs", _readonly(np.asarray(coeffs, dtype=complex)))
        object.__setattr__(obj, "real", real)
        object.__setattr__(obj, "divfree", divfree)
        return obj

    @classmethod
    def from_components(cls, u1: SpectralField, u2: SpectralField, u3: SpectralField,
                        divfree: bool = False) -> "VectorField":
        if not (u1.grid == u2.grid == u3.grid):
            raise ValueError("grid mismatch")
        return cls(u1.grid, np.stack([u1.coeffs, u2.coeffs, u3.coeffs]),
                   u1.real and u2.real and u3.real, divfree)

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls._trusted(grid, np.zeros((3,) + grid.shape, complex), True, True)

    def __getitem__(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[i], self.real)

    @property
    def components(self) -> tuple[SpectralField, SpectralField, SpectralField]:
        return self[0], self[1], self[2]

    def samples(self) -> np.ndarray:
        return inverse_transform(self)

    def is_conjugate_symmetric(self, rtol: float = 1e-13) -> bool:
        scale = max(np.abs(self.coeffs).max(), 1e-300)
        return bool(np.abs(self.coeffs - _conj_reflect(self.coeffs)).max() <= rtol * scale)

    def _check(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return VectorField._trusted(self.grid, self.coeffs + other.coeffs,
                                    self.real and other.real, self.divfree and other.divfree)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return VectorField._trusted(self.grid, self.coeffs - other.coeffs,
                                    self.real and other.real, self.divfree and other.divfree)

    def __neg__(self):
        return VectorField._trusted(self.grid, -self.coeffs, self.real, self.divfree)

    def __mul__(self, a):
        if not np.isscalar(a):
            return NotImplemented
        return VectorField._trusted(self.grid, self.coeffs * a,
                                    self.real and np.isrealobj(a), self.divfree)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


Field = Union[SpectralField, VectorField]


def _like(u: Field, coeffs, real=None, divfree=None) -> Field:
    real = u.real if real is None else real
    if isinstance(u, VectorField):
        return VectorField._trusted(u.grid, coeffs, real, u.divfree if divfree is None else divfree)
    return SpectralField(u.grid, coeffs, real)


# ---------------------------------------------------------------------------
# transforms


def forward_transform(samples, grid: Grid | None = None) -> Field:
    """Samples on the grid -> Fourier coefficients.

    A trailing ``(n1, n2, n3)`` array gives a :class:`SpectralField`; a
    ``(3, n1, n2, n3)`` array gives a :class:`VectorField`.
    """
    samples = np.asarray(samples)
    if grid is None:
        if samples.ndim not in (3, 4):
            raise ValueError(f"cannot infer grid from samples of shape {samples.shape}")
        grid = Grid(*samples.shape[-3:])
    if samples.shape[-3:] != grid.shape or samples.ndim not in (3, 4):
        raise ValueError(f"sample shape {samples.shape} does not match grid {grid.shape}")
    real = bool(np.isrealobj(samples))
    c = sfft.fftn(samples, axes=_AXES, norm="forward")
    if samples.ndim == 4:
        if samples.shape[0] != 3:
            raise ValueError("vector samples must have 3 components")
        return VectorField._trusted(grid, c, real, False)
    return SpectralField(grid, c, real)


def inverse_transform(u: Field) -> np.ndarray:
    """Fourier coefficients -> samples on the grid (real if ``u.real``)."""
    v = sfft.ifftn(u.coeffs, axes=_AXES, norm="forward")
    return v.real.copy() if u.real else v


# ---------------------------------------------------------------------------
# smooth cutoffs and filter banks


# smooth_step is 1 on [0, ETA_FLAT] and 0 on [ETA_ZERO, inf)
ETA_FLAT = 1.0
ETA_ZERO = 2.0


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(r):
    """C-infinity step: 1 on [0, 1], 0 on [2, inf), strictly decreasing between."""
    r = np.asarray(r, dtype=float)
    a = _bump(2.0 - r)
    b = _bump(r - 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = a / (a + b)
    return np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, mid))


def chi(r):
    return smooth_step(r)


def phi(r):
    return smooth_step(np.asarray(r, dtype=float) / 2.0) - smooth_step(r)


def chi_tilde(r):
    """Cutoff equal to 1 on the support of ``chi``."""
    return smooth_step(np.asarray(r, dtype=float) / 2.0)


@lru_cache(maxsize=None)
def support_separation() -> int:
    """Smallest N0 with supp phi(2^-j .) and supp phi(2^-k .) disjoint for |j - k| >= N0.

    Measured on the realised ``phi`` rather than assumed.
    """
    r = np.linspace(0.0, 64.0, 2**18 + 1)[1:]
    base = phi(r)
    for d in range(1, 6):
        if np.max(base * phi(r / 2.0**d)) == 0.0:
            return d
    raise RuntimeError("phi supports never separate")


def _radius(grid: Grid, kind: str) -> np.ndarray:
    if kind == "iso":
        return grid.kmag
    if kind == "vert":
        return np.abs(grid.k[2])
    if kind == "x2x3":
        _, k2, k3 = grid.k
        return np.sqrt(k2**2 + k3**2)
    raise ValueError(f"unknown filter kind {kind!r}")


@dataclass(frozen=True)
class FilterBank:
    """Dyadic Littlewood-Paley bank on ``grid``.

    ``kind`` is ``"iso"`` (blocks in ``|k|``) or ``"vert"`` (blocks in ``|k3|``).
    Blocks run from ``jmin = -1`` to ``jmax``; outside that range they vanish.
    """

    grid: Grid
    kind: str
    jmax: int
    n0: int
    jmin: int = -1

    @property
    def indices(self) -> range:
        return range(self.jmin, self.jmax + 1)

    def chi(self, r):
        return chi(r)

    def phi(self, r):
        return phi(r)

    def block(self, j: int) -> np.ndarray:
        return _block_multiplier(self.grid, self.kind, j)

    def low_pass(self, j: int) -> np.ndarray:
        """Multiplier of ``S_j = sum_{j' <= j - 1} Delta_j'``."""
        return _low_pass_multiplier(self.grid, self.kind, j)


@lru_cache(maxsize=None)
def filter_bank(grid: Grid, kind: str = "iso") -> FilterBank:
    """Build (and cache) the bank for ``grid``.

    ``jmax = ceil(log2(max wavenumber magnitude))`` for the relevant radius.
    """
    rmax = float(np.max(_radius(grid, kind)))
    jmax = int(math.ceil(math.log2(rmax)))
    return FilterBank(grid, kind, jmax, support_separation())


@lru_cache(maxsize=256)
def _block_multiplier(grid: Grid, kind: str, j: int) -> np.ndarray:
    r = _radius(grid, kind)
    bank = filter_bank(grid, kind)
    if j < -1 or j > bank.jmax:
        return _readonly(np.zeros_like(r))
    if j == -1:
        return _readonly(chi(r))
    return _readonly(phi(r / 2.0**j))


@lru_cache(maxsize=256)
def _low_pass_multiplier(grid: Grid, kind: str, j: int) -> np.ndarray:
    # chi + sum_{j'=0}^{j-1} phi(2^-j' r) telescopes to eta(2^-j r)
    r = _radius(grid, kind)
    if j <= -1:
        return _readonly(np.zeros_like(r))
    return _readonly(smooth_step(r / 2.0**j))


def apply_multiplier(u: Field, m: np.ndarray) -> Field:
    """Multiply coefficients by a real, even Fourier multiplier."""
    return _like(u, u.coeffs * m)


def dyadic_block_iso(u: Field, j: int) -> Field:
    """``Delta_j u``: multiplier ``phi(2^-j |k|)`` (``chi(|k|)`` for ``j = -1``)."""
    return apply_multiplier(u, _block_multiplier(u.grid, "iso", j))


def dyadic_block_vert(u: Field, q: int) -> Field:
    """``Delta_q^v u``: multiplier ``phi(2^-q |k3|)`` (``chi(|k3|)`` for ``q = -1``)."""
    return apply_multiplier(u, _block_multiplier(u.grid, "vert", q))


def low_pass_S(u: Field, N: int) -> Field:
    """``S_N u`` with multiplier ``chi(2^-N |k|)``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return apply_multiplier(u, _low_pass_multiplier(u.grid, "iso", N))


def low_pass_iso_S(u: Field, q: int) -> Field:
    """Isotropic ``S_q = sum_{q' <= q - 1} Delta_q'`` (zero for ``q <= -1``)."""
    return apply_multiplier(u, _low_pass_multiplier(u.grid, "iso", q))


def low_pass_vert_S(u: Field, q: int) -> Field:
    """``S_q^v u = sum_{q' <= q - 1} Delta_q'^v u`` (zero for ``q <= -1``)."""
    return apply_multiplier(u, _low_pass_multiplier(u.grid, "vert", q))


@lru_cache(maxsize=64)
def _x2x3_multiplier(grid: Grid, N: int) -> np.ndarray:
    return _readonly(chi_tilde(_radius(grid, "x2x3") / 2.0**N))


def low_pass_x2x3(u: Field, N: int) -> Field:
    """``S_N^{x2,x3} u``: multiplier ``chi_tilde(2^-N |(k2, k3)|)``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return apply_multiplier(u, _x2x3_multiplier(u.grid, N))


# ---------------------------------------------------------------------------
# differential operators


def derivative(u: Field, axis: int) -> Field:
    """Partial derivative along ``axis`` in {1, 2, 3}."""
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    k = u.grid.k_eff[axis - 1]
    return _like(u, 1j * k * u.coeffs)


def derivative_power(u: Field, axis: int, order: int) -> Field:
    """``order``-th partial derivative along ``axis``."""
    k = u.grid.k_eff[axis - 1] if order % 2 else u.grid.k[axis - 1]
    return _like(u, (1j * k) ** order * u.coeffs)


def horizontal_gradient(u: Field) -> tuple[Field, Field]:
    return derivative(u, 1), derivative(u, 2)


def gradient(u: SpectralField) -> VectorField:
    k1, k2, k3 = u.grid.k_eff
    c = np.stack([1j * k1 * u.coeffs, 1j * k2 * u.coeffs, 1j * k3 * u.coeffs])
    return VectorField._trusted(u.grid, c, u.real, False)


def horizontal_laplacian(u: Field) -> Field:
    return _like(u, -u.grid.kh2 * u.coeffs)


def laplacian(u: Field) -> Field:
    return _like(u, -(u.grid.kmag**2) * u.coeffs)


def divergence(u: VectorField) -> SpectralField:
    k1, k2, k3 = u.grid.k_eff
    c = 1j * (k1 * u.coeffs[0] + k2 * u.coeffs[1] + k3 * u.coeffs[2])
    return SpectralField(u.grid, c, u.real)


def divergence_defect(u: VectorField) -> float:
    """``max_k |k . u_hat(k)| / max_k |u_hat(k)|`` (0 for the zero field)."""
    k1, k2, k3 = u.grid.k_eff
    kd = np.abs(k1 * u.coeffs[0] + k2 * u.coeffs[1] + k3 * u.coeffs[2]).max()
    scale = np.abs(u.coeffs).max()
    return float(kd / scale) if scale > 0 else 0.0


@lru_cache(maxsize=16)
def _leray_factors(grid: Grid):
    k1, k2, k3 = grid.k_eff
    k2sum = k1**2 + k2**2 + k3**2
    inv = np.where(k2sum > 0, 1.0 / np.where(k2sum > 0, k2sum, 1.0), 0.0)
    return _readonly(np.broadcast_to(inv, grid.shape).copy())


def leray_project(u: VectorField) -> VectorField:
    """Orthogonal projection onto divergence-free fields; ``k = 0`` passes through."""
    k1, k2, k3 = u.grid.k_eff
    inv = _leray_factors(u.grid)
    c = u.coeffs
    kdotu = (k1 * c[0] + k2 * c[1] + k3 * c[2]) * inv
    out = np.stack([c[0] - k1 * kdotu, c[1] - k2 * kdotu, c[2] - k3 * kdotu])
    return VectorField._trusted(u.grid, out, u.real, True)


def truncate_nyquist(u: Field) -> Field:
    return _like(u, np.where(u.grid.nyquist_mask, 0.0, u.coeffs))


# ---------------------------------------------------------------------------
# dealiased products


def padded_size(n: int) -> int:
    """Smallest even size >= 3n/2."""
    m = (3 * n + 1) // 2
    return m + (m % 2)


def _index(ndim, axis, s):
    idx = [slice(None)] * ndim
    idx[axis] = s
    return tuple(idx)


def _pad_axis(c, axis, m):
    n = c.shape[axis]
    h = n // 2
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, complex)
    nd = c.ndim
    out[_index(nd, axis, slice(0, h))] = c[_index(nd, axis, slice(0, h))]
    out[_index(nd, axis, slice(m - h + 1, m))] = c[_index(nd, axis, slice(h + 1, n))]
    # the Nyquist coefficient represents cos(n x / 2): split it over +/- n/2
    nyq = 0.5 * c[_index(nd, axis, slice(h, h + 1))]
    out[_index(nd, axis, slice(m - h, m - h + 1))] = nyq
    out[_index(nd, axis, slice(h, h + 1))] = nyq
    return out


def _truncate_axis(c, axis, n):
    m = c.shape[axis]
    h = n // 2
    shape = list(c.shape)
    shape[axis] = n
    out = np.zeros(shape, complex)
    nd = c.ndim
    out[_index(nd, axis, slice(0, h))] = c[_index(nd, axis, slice(0, h))]
    out[_index(nd, axis, slice(h + 1, n))] = c[_index(nd, axis, slice(m - h + 1, m))]
    return out


def _two_thirds_mask(grid: Grid) -> np.ndarray:
    k1, k2, k3 = grid.k
    return (np.abs(k1) < grid.n1 / 3) & (np.abs(k2) < grid.n2 / 3) & (np.abs(k3) < grid.n3 / 3)


def to_physical(c: np.ndarray, grid: Grid, rule: str = "3/2-pad", real: bool = True) -> np.ndarray:
    """Coefficients -> samples on the dealiasing grid (padded or masked native)."""
    if rule == "3/2-pad":
        nd = c.ndim
        if real:
            return _irfft_padded(c, grid)
        for axis, n in zip(range(nd - 3, nd), grid.shape):
            c = _pad_axis(c, axis, padded_size(n))
    elif rule == "2/3":
        c = np.where(_two_thirds_mask(grid), c, 0.0)
    else:
        raise ValueError(f"unknown dealias rule {rule!r}")
    if real:
        m3 = c.shape[-1]
        return sfft.irfftn(c[..., : m3 // 2 + 1], s=c.shape[-3:], axes=_AXES, norm="forward")
    return sfft.ifftn(c, axes=_AXES, norm="forward")


def _irfft_padded(c: np.ndarray, grid: Grid) -> np.ndarray:
    # pad only the k3 >= 0 half that irfftn reads; the split Nyquist
    # coefficient keeps its +n3/2 half, the -n3/2 half is implied by symmetry
    n1, n2, n3 = grid.shape
    m = tuple(padded_size(n) for n in grid.shape)
    h3 = n3 // 2
    half = np.zeros(c.shape[:-1] + (m[2] // 2 + 1,), complex)
    half[..., :h3] = c[..., :h3]
    half[..., h3] = 0.5 * c[..., h3]
    nd = c.ndim
    half = _pad_axis(half, nd - 3, m[0])
    half = _pad_axis(half, nd - 2, m[1])
    return sfft.irfftn(half, s=m, axes=_AXES, norm="forward")


def from_physical(v: np.ndarray, grid: Grid, rule: str = "3/2-pad") -> np.ndarray:
    """Samples on the dealiasing grid -> truncated coefficients on ``grid``.

    Output has all Nyquist modes zeroed (``3/2-pad``) or only the 2/3-rule
    modes retained (``2/3``).
    """
    if rule == "3/2-pad":
        if np.isrealobj(v):
            c = _rfft_truncated(v, grid)
        else:
            c = sfft.fftn(v, axes=_AXES, norm="forward")
            nd = c.ndim
            for axis, n in zip(range(nd - 3, nd), grid.shape):
                c = _truncate_axis(c, axis, n)
        return c
    if rule == "2/3":
        c = sfft.fftn(v, axes=_AXES, norm="forward")
        return np.where(_two_thirds_mask(grid), c, 0.0)
    raise ValueError(f"unknown dealias rule {rule!r}")


def _rfft_truncated(v: np.ndarray, grid: Grid) -> np.ndarray:
    # real-to-complex transform, truncate the two leading axes, then rebuild
    # negative k3 from conjugate symmetry
    ch = sfft.rfftn(v, axes=_AXES, norm="forward")
    n1, n2, n3 = grid.shape
    h3 = n3 // 2
    a = ch[..., :h3]
    nd = a.ndim
    a = _truncate_axis(a, nd - 3, n1)
    a = _truncate_axis(a, nd - 2, n2)
    out = np.zeros(a.shape[:-1] + (n3,), complex)
    out[..., :h3] = a
    rev1 = (-np.arange(n1)) % n1
    rev2 = (-np.arange(n2)) % n2
    refl = np.conj(a[..., rev1, :, :][..., rev2, :])
    # k3 = -m (m = 1 .. h3-1) sits at index n3 - m
    out[..., n3 - h3 + 1:] = refl[..., h3 - 1:0:-1]
    return out


def product_coeffs(a: np.ndarray, b: np.ndarray, grid: Grid, rule: str = "3/2-pad",
                   real: bool = True) -> np.ndarray:
    """Alias-free pointwise product of two coefficient arrays (broadcasting)."""
    pa = to_physical(a, grid, rule, real)
    pb = to_physical(b, grid, rule, real)
    return from_physical(pa * pb, grid, rule)


def product(u: SpectralField, v: SpectralField, rule: str = "3/2-pad") -> SpectralField:
    """Dealiased product ``u v``."""
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    real = u.real and v.real
    return SpectralField(u.grid, product_coeffs(u.coeffs, v.coeffs, u.grid, rule, real), real)


def advection(u: VectorField, v: VectorField | None = None, rule: str = "3/2-pad") -> VectorField:
    """Dealiased ``(u . grad) v``; ``v`` defaults to ``u``."""
    if v is None:
        v = u
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    grid = u.grid
    real = u.real and v.real
    pu = to_physical(u.coeffs, grid, rule, real)
    out = 0.0
    for j, kj in enumerate(grid.k_eff):
        dv = to_physical(1j * kj * v.coeffs, grid, rule, real)
        out = out + pu[j] * dv
    return VectorField._trusted(grid, from_physical(out, grid, rule), real, False)
