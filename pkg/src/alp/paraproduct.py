"""
Bony paraproduct decomposition and dyadic commutators.

For a bank of blocks ``Delta_q`` with low-pass ``S_q = sum_{q' <= q-1} Delta_q'``

    T_u v  = sum_q S_{q-1} u  Delta_q v
    R(u,v) = sum_q sum_{|i| <= 1} Delta_q u  Delta_{q+i} v

so that ``u v = T_u v + T_v u + R(u, v)``.  All products are formed on the
dealiasing grid and transformed once per term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    SpectralField,
    ETA_FLAT,
    ETA_ZERO,
    filter_bank,
    from_physical,
    product,
    to_physical,
)


@dataclass(frozen=True)
class BonySplit:
    Tuv: SpectralField
    Tvu: SpectralField
    R: SpectralField

    def total(self) -> SpectralField:
        return self.Tuv + self.Tvu + self.R


def _bony(u: SpectralField, v: SpectralField, kind: str, rule: str) -> BonySplit:
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    grid = u.grid
    real = u.real and v.real
    bank = filter_bank(grid, kind)
    qs = list(bank.indices)

    def phys(c, m):
        return to_physical(c * m, grid, rule, real)

    du = {q: phys(u.coeffs, bank.block(q)) for q in qs}
    dv = {q: phys(v.coeffs, bank.block(q)) for q in qs}
    tuv = 0.0
    tvu = 0.0
    rem = 0.0
    for q in qs:
        if q - 1 >= 0:
            tuv = tuv + phys(u.coeffs, bank.low_pass(q - 1)) * dv[q]
            tvu = tvu + phys(v.coeffs, bank.low_pass(q - 1)) * du[q]
        for i in (-1, 0, 1):
            if q + i in dv:
                rem = rem + du[q] * dv[q + i]

    def spec(x):
        if np.isscalar(x):
            return SpectralField(grid, np.zeros(grid.shape, complex), real)
        return SpectralField(grid, from_physical(x, grid, rule), real)

    return BonySplit(spec(tuv), spec(tvu), spec(rem))


def bony_vert(u: SpectralField, v: SpectralField, rule: str = "3/2-pad") -> BonySplit:
    """Vertical Bony split (blocks in ``|k3|``)."""
    return _bony(u, v, "vert", rule)


def bony_iso(u: SpectralField, v: SpectralField, rule: str = "3/2-pad") -> BonySplit:
    """Isotropic Bony split (blocks in ``|k|``)."""
    return _bony(u, v, "iso", rule)


def bony(u: SpectralField, v: SpectralField, kind: str = "iso", rule: str = "3/2-pad") -> BonySplit:
    return _bony(u, v, kind, rule)


def paraproduct_summand(u: SpectralField, v: SpectralField, q: int, kind: str = "vert",
                        rule: str = "3/2-pad") -> SpectralField:
    """The ``q``-th summand ``S_{q-1} u  Delta_q v`` of ``T_u v``."""
    bank = filter_bank(u.grid, kind)
    low = SpectralField(u.grid, u.coeffs * bank.low_pass(q - 1), u.real)
    blk = SpectralField(v.grid, v.coeffs * bank.block(q), v.real)
    return product(low, blk, rule)


def commutator(a: SpectralField, b: SpectralField, j: int, bank: str = "iso",
               rule: str = "3/2-pad") -> SpectralField:
    """``[Delta_j; a] b = Delta_j(a b) - a Delta_j b``."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    fb = filter_bank(a.grid, bank)
    m = fb.block(j)
    ab = product(a, b, rule)
    a_djb = product(a, SpectralField(b.grid, b.coeffs * m, b.real), rule)
    return SpectralField(a.grid, ab.coeffs * m - a_djb.coeffs, a.real and b.real)


def quasi_orthogonality_window() -> tuple[int, int | None]:
    """Offsets at which ``Delta_p (S_{q-1} u Delta_q v)`` vanishes exactly.

    Returns ``(upper, lower)``: the product is killed by ``Delta_p`` for every
    ``p >= q + upper``, and for every ``p <= q - lower`` when ``lower`` is not
    ``None``.  The low-pass factor is supported in ``|k| < ETA_ZERO * 2^(q-1)``
    and the block in ``ETA_FLAT * 2^q < |k| < 2 * ETA_ZERO * 2^q``.
    """
    low = ETA_ZERO / 2.0
    ring_in, ring_out = ETA_FLAT, 2.0 * ETA_ZERO
    upper = math.ceil(math.log2((low + ring_out) / ring_in))
    gap = ring_in - low
    if gap <= 0:
        # S_{q-1} reaches the inner edge of the ring: no lower-side gap
        return upper, None
    lower = math.ceil(math.log2(ring_out / gap))
    return upper, lower


def block_energy(u: SpectralField, kind: str = "iso") -> dict[int, float]:
    """``{q: ||Delta_q u||^2}`` over the bank."""
    bank = filter_bank(u.grid, kind)
    return {q: float(np.sum(np.abs(u.coeffs * bank.block(q)) ** 2)) for q in bank.indices}
