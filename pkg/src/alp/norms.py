"""
Sobolev and anisotropic Lebesgue norms on the torus.

Sobolev-type norms are weighted l2 sums over Fourier coefficients with the
continuum weights evaluated at integer wavenumbers, e.g.

    ||u||_{H^{s,s'}}^2 = sum_k (1 + |k_h|^2)^s (1 + k3^2)^{s'} |u_hat(k)|^2

with the coefficient normalisation of :mod:`alp.spectral` (a constant field
``c`` has norm ``|c|``).  Lebesgue norms act on grid samples with the
equal quadrature weights ``2*pi/n`` per axis, so they carry the volume of
the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import (
    Field,
    Grid,
    SpectralField,
    VectorField,
    _like,
    dyadic_block_iso,
    dyadic_block_vert,
    filter_bank,
    inverse_transform,
)


@dataclass(frozen=True)
class NormSpec:
    """Exponents of ``H^{s, s_v}``: ``s`` horizontal, ``s_v`` vertical."""

    s: float
    s_v: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.s_v)):
            raise ValueError("norm exponents must be finite")


@lru_cache(maxsize=64)
def hss_weight(grid: Grid, s: float, s_v: float) -> np.ndarray:
    k1, k2, k3 = grid.k
    w = (1.0 + k1**2 + k2**2) ** s * (1.0 + k3**2) ** s_v
    w = np.broadcast_to(w, grid.shape).copy()
    w.flags.writeable = False
    return w


@lru_cache(maxsize=64)
def hs_weight(grid: Grid, s: float) -> np.ndarray:
    w = (1.0 + grid.kmag**2) ** s
    w.flags.writeable = False
    return w


def _energy(c: np.ndarray, w) -> float:
    e = np.abs(c) ** 2 * w
    return float(e.sum())


def norm_weighted(u: Field, w: np.ndarray) -> float:
    return math.sqrt(_energy(u.coeffs, w))


def norm_Hss(u: Field, spec: NormSpec) -> float:
    """Anisotropic Sobolev norm ``||u||_{H^{s,s'}}``."""
    return norm_weighted(u, hss_weight(u.grid, float(spec.s), float(spec.s_v)))


def norm_H0s(u: Field, s: float) -> float:
    return norm_Hss(u, NormSpec(0.0, s))


def norm_Hs(u: Field, s: float) -> float:
    """Isotropic ``||u||_{H^s}`` with weight ``(1 + |k|^2)^s``."""
    return norm_weighted(u, hs_weight(u.grid, float(s)))


def norm_L2(u: Field) -> float:
    """Coefficient l2 norm, i.e. ``H^{0,0}``."""
    return u.norm()


def norm_gradh_weighted(u: Field, w: np.ndarray) -> float:
    """``||grad_h u||`` in the weighted norm: multiplier ``|k_h|``."""
    k1, k2, _ = u.grid.k_eff
    return math.sqrt(_energy(u.coeffs, w * (k1**2 + k2**2)))


def norm_gradh_Hss(u: Field, spec: NormSpec) -> float:
    return norm_gradh_weighted(u, hss_weight(u.grid, float(spec.s), float(spec.s_v)))


def norm_gradh_H0s(u: Field, s: float) -> float:
    return norm_gradh_Hss(u, NormSpec(0.0, s))


def norm_gradh_Hs(u: Field, s: float) -> float:
    return norm_gradh_weighted(u, hs_weight(u.grid, float(s)))


def norm_grad_Hs(u: Field, s: float) -> float:
    """Full gradient ``||grad u||_{H^s}``."""
    k1, k2, k3 = u.grid.k_eff
    return math.sqrt(_energy(u.coeffs, hs_weight(u.grid, float(s)) * (k1**2 + k2**2 + k3**2)))


def inner_product_Hs(u: Field, v: Field, spec: NormSpec) -> float:
    """Real inner product in ``H^{s,s'}``: ``Re sum_k w(k) u_hat conj(v_hat)``."""
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    if type(u) is not type(v):
        raise TypeError("inner product needs two scalar or two vector fields")
    w = hss_weight(u.grid, float(spec.s), float(spec.s_v))
    return float(np.sum(w * (u.coeffs * np.conj(v.coeffs)).real))


def inner_product_iso(u: Field, v: Field, s: float) -> float:
    """Real inner product in isotropic ``H^s``."""
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    w = hs_weight(u.grid, float(s))
    return float(np.sum(w * (u.coeffs * np.conj(v.coeffs)).real))


def inner_product_L2(u: Field, v: Field) -> float:
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    return float(np.sum((u.coeffs * np.conj(v.coeffs)).real))


def norm_dyadic_vert(u: Field, s: float) -> float:
    """``(sum_q 2^{2qs} ||Delta_q^v u||_{L2}^2)^{1/2}``."""
    bank = filter_bank(u.grid, "vert")
    total = 0.0
    for q in bank.indices:
        total += 2.0 ** (2 * q * s) * dyadic_block_vert(u, q).norm() ** 2
    return math.sqrt(total)


def norm_dyadic_iso(u: Field, s: float) -> float:
    """``(sum_q 2^{2qs} ||Delta_q u||_{L2}^2)^{1/2}``."""
    bank = filter_bank(u.grid, "iso")
    total = 0.0
    for q in bank.indices:
        total += 2.0 ** (2 * q * s) * dyadic_block_iso(u, q).norm() ** 2
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# anisotropic Lebesgue norms


def _lp(values: np.ndarray, p: float, axes, weight: float) -> np.ndarray:
    if p == np.inf:
        return np.max(values, axis=axes)
    if p == 2:
        return np.sqrt(np.sum(values * values, axis=axes) * weight)
    return (np.sum(values**p, axis=axes) * weight) ** (1.0 / p)


def _check_exponent(p):
    if not (p == np.inf or (np.isfinite(p) and p >= 1)):
        raise ValueError(f"Lebesgue exponent must lie in [1, inf], got {p}")


def pointwise_magnitude(u) -> np.ndarray:
    """Grid samples ``|u(x)|`` of a field, or ``|a|`` of a sample array."""
    if isinstance(u, VectorField):
        s = u.samples()
        return np.sqrt(np.sum(np.abs(s) ** 2, axis=0))
    if isinstance(u, SpectralField):
        return np.abs(u.samples())
    a = np.asarray(u)
    if a.ndim == 4:
        return np.sqrt(np.sum(np.abs(a) ** 2, axis=0))
    return np.abs(a)


def mixed_norm(mag: np.ndarray, inner_axes: tuple[int, ...], inner_p: float,
               outer_p: float) -> float:
    """Mixed Lebesgue norm of nonnegative grid samples ``mag`` on [0, 2*pi)^3.

    The inner norm is taken over ``inner_axes`` with exponent ``inner_p``,
    the outer over the remaining axes with ``outer_p``.
    """
    _check_exponent(inner_p)
    _check_exponent(outer_p)
    shape = mag.shape
    inner_axes = tuple(sorted(inner_axes))
    outer_axes = tuple(a for a in range(3) if a not in inner_axes)
    w_in = math.prod(2 * np.pi / shape[a] for a in inner_axes)
    w_out = math.prod(2 * np.pi / shape[a] for a in outer_axes)
    inner = _lp(mag, inner_p, inner_axes, w_in)
    return float(_lp(inner, outer_p, tuple(range(inner.ndim)), w_out))


def norm_aniso_lebesgue(u, p_h: float, r_v: float, order: str = "h-outer") -> float:
    """Anisotropic Lebesgue norm.

    ``order="h-outer"`` gives ``L^{p_h}_h(L^{r_v}_v)`` (vertical norm inside),
    ``order="v-outer"`` gives ``L^{r_v}_v(L^{p_h}_h)``.
    """
    mag = pointwise_magnitude(u)
    if order == "h-outer":
        return mixed_norm(mag, (2,), r_v, p_h)
    if order == "v-outer":
        return mixed_norm(mag, (0, 1), p_h, r_v)
    raise ValueError(f"order must be 'h-outer' or 'v-outer', got {order!r}")


def norm_Lp(u, p: float) -> float:
    mag = pointwise_magnitude(u)
    return mixed_norm(mag, (0, 1, 2), p, p)


def norm_LinfvL2h(u) -> float:
    """``||u||_{L^inf_v(L^2_h)}``."""
    return norm_aniso_lebesgue(u, 2, np.inf, order="v-outer")


def gradh_magnitude(u: Field) -> np.ndarray:
    """Grid samples of ``|grad_h u|`` (Frobenius over components)."""
    k1, k2, _ = u.grid.k_eff
    d1 = inverse_transform(_like(u, 1j * k1 * u.coeffs))
    d2 = inverse_transform(_like(u, 1j * k2 * u.coeffs))
    sq = np.abs(d1) ** 2 + np.abs(d2) ** 2
    if sq.ndim == 4:
        sq = sq.sum(axis=0)
    return np.sqrt(sq)


def norm_gradh_LinfvL2h(u: Field) -> float:
    return mixed_norm(gradh_magnitude(u), (0, 1), 2, np.inf)
