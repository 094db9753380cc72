"""
Empirical certification of the functional inequalities.

Every verifier returns an :class:`InequalityReport` of per-sample rows
``(name, sample_id, lhs, rhs, ratio, j_or_q, grid)``.  Constants are
measured, never asserted; the acceptance check is the stability of the
worst ratio under grid refinement.

Lebesgue norms carry the box volume, Sobolev norms are mean-normalised
(see :mod:`alp.norms`), so measured constants are convention-relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import norms as N
from .paraproduct import commutator
from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    advection,
    derivative,
    derivative_power,
    dyadic_block_iso,
    dyadic_block_vert,
    filter_bank,
    forward_transform,
    gradient,
    leray_project,
    low_pass_iso_S,
    product,
)

DEGENERATE = 1e-14


@dataclass(frozen=True)
class FieldEnsembleSpec:
    """Seeded random fields with ``|u_hat(k)| ~ (1 + |k|)^-spectrum``.

    ``band=(jlo, jhi)`` restricts the spectrum to the isotropic blocks
    ``jlo..jhi`` (smooth taper ``sum_j phi(2^-j |k|)``).
    """

    seed: int = 0
    count: int = 100
    spectrum: float = 3.0
    band: tuple[int, int] | None = None
    divfree: bool = True

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not math.isfinite(self.spectrum):
            raise ValueError("spectrum must be finite")
        if self.band is not None and self.band[0] > self.band[1]:
            raise ValueError("band must satisfy jlo <= jhi")


def _band_multiplier(grid: Grid, band) -> np.ndarray:
    bank = filter_bank(grid, "iso")
    m = np.zeros(grid.shape)
    for j in range(band[0], band[1] + 1):
        m = m + bank.block(j)
    return m


def gen_ensemble(spec: FieldEnsembleSpec, grid: Grid) -> list[VectorField]:
    """Deterministic list of ``spec.count`` real vector fields, unit coefficient norm.

    Phases come from the transform of real white noise, so conjugate symmetry
    is exact.  The mean and every Nyquist plane are zeroed.
    """
    rng = np.random.default_rng(spec.seed)
    amp = (1.0 + grid.kmag) ** (-float(spec.spectrum))
    amp = np.where(grid.nyquist_mask, 0.0, amp)
    amp[0, 0, 0] = 0.0
    if spec.band is not None:
        amp = amp * _band_multiplier(grid, spec.band)
    out = []
    for _ in range(spec.count):
        noise = rng.standard_normal((3,) + grid.shape)
        c = forward_transform(noise, grid).coeffs
        mag = np.abs(c)
        phase = np.where(mag > 0, c / np.where(mag > 0, mag, 1.0), 0.0)
        u = VectorField._trusted(grid, amp * phase, True, False)
        if spec.divfree:
            u = leray_project(u)
        nrm = u.norm()
        if nrm > 0:
            u = u * (1.0 / nrm)
        out.append(u)
    return out


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Row:
    name: str
    sample_id: int
    lhs: float
    rhs: float
    ratio: float
    j_or_q: int | None
    grid: str


@dataclass
class InequalityReport:
    """Rows of measured ratios for one inequality family."""

    name: str
    rows: list[Row] = field(default_factory=list)
    skipped: int = 0
    sequences: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def add(self, name, sample_id, lhs, rhs, j_or_q=None, grid="", scale=1.0) -> bool:
        """Append a row; skip (and count) when ``rhs < DEGENERATE * scale``."""
        lhs, rhs = float(lhs), float(rhs)
        if not rhs >= DEGENERATE * scale:
            self.skipped += 1
            return False
        self.rows.append(Row(name, int(sample_id), lhs, rhs, lhs / rhs, j_or_q, grid))
        return True

    @property
    def samples(self) -> int:
        return len(self.rows)

    @property
    def names(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.name not in seen:
                seen.append(r.name)
        return seen

    @property
    def worst_ratio(self) -> float:
        return max((r.ratio for r in self.rows), default=0.0)

    def worst(self, name: str) -> float:
        return max((r.ratio for r in self.rows if r.name == name), default=0.0)

    def per_scale(self, name: str | None = None) -> dict:
        out: dict = {}
        for r in self.rows:
            if name is not None and r.name != name:
                continue
            out[r.j_or_q] = max(out.get(r.j_or_q, 0.0), r.ratio)
        return out

    def merge(self, other: "InequalityReport") -> "InequalityReport":
        seq = {**self.sequences}
        for k, v in other.sequences.items():
            seq[k] = seq.get(k, []) + list(v)
        return InequalityReport(self.name, self.rows + other.rows, self.skipped + other.skipped,
                                seq, {**self.extra, **other.extra})


def _as_list(x) -> list:
    if isinstance(x, (SpectralField, VectorField)):
        return [x]
    return list(x)


# ---------------------------------------------------------------------------
# Bernstein


def verify_bernstein(ensemble, q: int, k: int = 1, p: float = 2, r: float = np.inf,
                     rprime: float = 2) -> InequalityReport:
    """Bernstein comparisons for fields localised in the vertical ring ``q``.

    Each field is first filtered with ``Delta_q^v``.  Rows:

    * ``bernstein_hv_upper`` / ``_lower``: ``d_3^k`` against ``2^{qk}`` in
      ``L^p_h(L^r_v)``, both directions;
    * ``bernstein_vh_upper`` / ``_lower``: the same in ``L^r_v(L^p_h)``;
    * ``bernstein_hv_embed`` / ``bernstein_vh_embed``: ``r' -> r`` gain
      ``2^{q(1/r' - 1/r)}``.
    """
    if q < 0:
        raise ValueError("Bernstein needs a ring, q >= 0")
    if r < rprime:
        raise ValueError("need r >= r'")
    rep = InequalityReport("bernstein")
    gain = 2.0 ** (q * (1.0 / rprime - (0.0 if r == np.inf else 1.0 / r)))
    for i, u in enumerate(_as_list(ensemble)):
        uq = dyadic_block_vert(u, q)
        label = u.grid.label
        if uq.norm() <= DEGENERATE * max(u.norm(), 1e-300):
            rep.skipped += 1
            continue
        dk = derivative_power(uq, 3, k)
        mag, dmag = N.pointwise_magnitude(uq), N.pointwise_magnitude(dk)
        scale = 2.0 ** (q * k)
        for tag, order in (("hv", "h-outer"), ("vh", "v-outer")):
            nu = N.norm_aniso_lebesgue(mag, p, r, order)
            nd = N.norm_aniso_lebesgue(dmag, p, r, order)
            ref = max(nu, nd, 1e-300)
            rep.add(f"bernstein_{tag}_upper", i, nd, scale * nu, q, label, ref)
            rep.add(f"bernstein_{tag}_lower", i, scale * nu, nd, q, label, ref)
            nlow = N.norm_aniso_lebesgue(mag, p, rprime, order)
            rep.add(f"bernstein_{tag}_embed", i, nu, gain * nlow, q, label, max(nu, 1e-300))
    return rep


# ---------------------------------------------------------------------------
# commutator


def _scalars(ensemble) -> list[SpectralField]:
    return [u[0] if isinstance(u, VectorField) else u for u in _as_list(ensemble)]


def verify_commutator(ensemble_a, ensemble_b, j: int, bank: str = "iso",
                      rule: str = "3/2-pad") -> InequalityReport:
    """``2^j ||[Delta_j; a] b||_{L^2_v L^{4/3}_h}`` against
    ``||grad a||_{L^inf_v L^2_h} ||b||_{L^2_v L^4_h}``.

    Vector inputs contribute their first component.
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    rep = InequalityReport("commutator")
    for i, (a, b) in enumerate(zip(_scalars(ensemble_a), _scalars(ensemble_b))):
        c = commutator(a, b, j, bank, rule)
        lhs = 2.0**j * N.norm_aniso_lebesgue(c.samples(), 4.0 / 3.0, 2, "v-outer")
        ga = N.norm_LinfvL2h(gradient(a))
        nb = N.norm_aniso_lebesgue(b.samples(), 4, 2, "v-outer")
        rep.add("commutator", i, lhs, ga * nb, j, a.grid.label, max(a.norm() * b.norm(), 1e-300))
    return rep


# ---------------------------------------------------------------------------
# product laws


def _pairs(us, vs):
    us = _as_list(us)
    vs = us if vs is None else _as_list(vs)
    if len(us) != len(vs):
        raise ValueError("ensembles differ in length")
    return list(zip(us, vs))


def verify_product_law_H0s(u, v=None, s: float = 0.6, rule: str = "3/2-pad") -> InequalityReport:
    """``|<u.grad v, v>_{H^{0,s}}|`` against the two-term bound; self case when ``v is u``.

    Rows ``product_H0s`` (general bound) and, for pairs with ``v is u``,
    ``product_H0s_self`` against ``||u|| ||grad_h u||^2``.
    """
    rep = InequalityReport("product_H0s")
    spec = N.NormSpec(0.0, s)
    for i, (a, b) in enumerate(_pairs(u, v)):
        lhs = abs(N.inner_product_Hs(advection(a, b, rule), b, spec))
        na, ga = N.norm_Hss(a, spec), N.norm_gradh_Hss(a, spec)
        nb, gb = N.norm_Hss(b, spec), N.norm_gradh_Hss(b, spec)
        rhs = math.sqrt(na * ga * nb) * gb**1.5 + nb * gb * ga
        scale = max(a.norm() * b.norm() ** 2, 1e-300)
        rep.add("product_H0s", i, lhs, rhs, None, a.grid.label, scale)
        if a is b:
            rep.add("product_H0s_self", i, lhs, na * ga**2, None, a.grid.label, scale)
    return rep


def _trilinear_rhs(u: VectorField, s: float) -> float:
    li = N.norm_LinfvL2h(u)
    gli = N.norm_gradh_LinfvL2h(u)
    nu, gu = N.norm_Hs(u, s), N.norm_gradh_Hs(u, s)
    return math.sqrt(li * gli * nu) * gu**1.5 + gli * nu * gu


def verify_trilinear_Hs(u, s: float = 0.6, decompose: bool = False,
                        rule: str = "3/2-pad") -> InequalityReport:
    """``|<u.grad u, u>_{H^s}|`` against the anisotropic trilinear bound.

    With ``decompose=True`` the dyadic pieces of :func:`trilinear_decomposition`
    are accumulated into ``extra["shares"]`` (sums of ``2^{2qs}|term|``).
    """
    if s <= 0.5:
        raise ValueError("trilinear bound needs s > 1/2")
    rep = InequalityReport("trilinear_Hs")
    shares: dict[str, float] = {}
    for i, a in enumerate(_as_list(u)):
        lhs = abs(N.inner_product_iso(advection(a, a, rule), a, s))
        rep.add("trilinear_Hs", i, lhs, _trilinear_rhs(a, s), None, a.grid.label,
                max(a.norm() ** 3, 1e-300))
        if decompose:
            for q in filter_bank(a.grid, "iso").indices:
                w = 2.0 ** (2 * q * s)
                for key, val in trilinear_decomposition(a, q, rule).items():
                    shares[key] = shares.get(key, 0.0) + w * abs(val)
    if decompose:
        rep.extra["shares"] = shares
    return rep


def _dot(f: VectorField, g: VectorField) -> float:
    return N.inner_product_L2(f, g)


def _times(a: SpectralField, b: VectorField, rule) -> VectorField:
    c = np.stack([product(a, b[i], rule).coeffs for i in range(3)])
    return VectorField._trusted(b.grid, c, a.real and b.real, False)


def _d3(u: VectorField) -> VectorField:
    return derivative(u, 3)


def trilinear_decomposition(u: VectorField, q: int, rule: str = "3/2-pad") -> dict[str, float]:
    """Split ``(Delta_q(u.grad u), Delta_q u)_{L^2}`` into horizontal and vertical parts.

    Returns ``Ih``, ``Iv`` and the vertical pieces ``I1v .. I4v``, ``Rv``
    with isotropic blocks.  The sums over ``q'`` run over every block of the
    bank, so ``I1v + I2v + I3v + I4v + Rv == Iv`` up to roundoff.
    """
    grid = u.grid
    idx = list(filter_bank(grid, "iso").indices)
    dq = lambda f: dyadic_block_iso(f, q)  # noqa: E731
    uq = dq(u)
    uh = VectorField._trusted(grid, np.stack([u.coeffs[0], u.coeffs[1], np.zeros(grid.shape)]),
                              u.real, False)
    ih = _dot(dq(advection(uh, u, rule)), uq)
    u3 = u[2]
    iv = _dot(dq(_times(u3, _d3(u), rule)), uq)

    s_q = low_pass_iso_S(u3, q - 1)
    i1 = _dot(_times(s_q, _d3(uq), rule), uq)
    i2 = i3 = i4 = rv = 0.0
    for qp in idx:
        s_qp = low_pass_iso_S(u3, qp - 1)
        d_qp = dyadic_block_iso(u, qp)
        d3_qp = _d3(d_qp)
        # commutator [Delta_q, S_{q'-1} u3] d3 Delta_{q'} u
        comm = dq(_times(s_qp, d3_qp, rule)) - _times(s_qp, dq(d3_qp), rule)
        i2 += _dot(comm, uq)
        i3 += _dot(_times(s_qp - s_q, dq(d3_qp), rule), uq)
        i4 += _dot(dq(_times(dyadic_block_iso(u3, qp), _d3(low_pass_iso_S(u, qp - 1)), rule)), uq)
        for qq in (qp - 1, qp, qp + 1):
            if qq in idx:
                rv += _dot(dq(_times(dyadic_block_iso(u3, qp), _d3(dyadic_block_iso(u, qq)), rule)), uq)
    return {"Ih": ih, "Iv": iv, "I1v": i1, "I2v": i2, "I3v": i3, "I4v": i4, "Rv": rv}


# ---------------------------------------------------------------------------
# divergence-free consequences


def verify_divfree_prop(u, s: float = 0.6, q: int | None = None) -> InequalityReport:
    """``||grad u_3||_{H^s} <= C ||grad_h u||_{H^s}`` and the ``c_q`` sequence.

    Row ``divfree_grad`` measures the first bound (at most ``sqrt 2`` for exact
    divergence-free fields).  Row ``divfree_cq`` has ``lhs = (sum_q c_q^2)^{1/2}
    * rhs`` with realised ``c_q = 2^{qs} ||Delta_q u||_{L^2_v L^4_h} /
    (||u||_{H^s}^{1/2} ||grad_h u||_{H^s}^{1/2})``, so its ratio is the l2 sum.
    ``q`` restricts the ``c_q`` rows to one block.
    """
    rep = InequalityReport("divfree")
    seqs = []
    for i, a in enumerate(_as_list(u)):
        label = a.grid.label
        scale = max(a.norm(), 1e-300)
        g3 = N.norm_grad_Hs(a[2], s)
        gh = N.norm_gradh_Hs(a, s)
        if g3 > 0 and gh <= DEGENERATE * scale:
            raise AssertionError("divergence-free field with grad_h u = 0 but grad u_3 != 0")
        rep.add("divfree_grad", i, g3, gh, None, label, scale)
        denom = math.sqrt(N.norm_Hs(a, s) * gh)
        if denom <= DEGENERATE * scale:
            rep.skipped += 1
            continue
        blocks = filter_bank(a.grid, "iso").indices if q is None else [q]
        cq = []
        for j in blocks:
            nj = N.norm_aniso_lebesgue(dyadic_block_iso(a, j), 4, 2, "v-outer")
            cq.append(2.0 ** (j * s) * nj / denom)
        seqs.append(cq)
        l2 = math.sqrt(sum(c * c for c in cq))
        rep.add("divfree_cq", i, l2 * denom, denom, q, label, scale)
    rep.sequences["c_q"] = seqs
    return rep


def verify_gagliardo_nirenberg(v) -> InequalityReport:
    """``||v||_{L^4_{x1}(L^2_{x2,x3})}`` against ``||v||_{L^2}^{3/4} ||d_1 v||_{L^2}^{1/4}``.

    Fields constant in ``x1`` have ``d_1 v = 0`` and are skipped.
    """
    rep = InequalityReport("gagliardo_nirenberg")
    for i, a in enumerate(_as_list(v)):
        mag = N.pointwise_magnitude(a)
        lhs = N.mixed_norm(mag, (1, 2), 2, 4)
        l2 = N.norm_Lp(mag, 2)
        d1 = N.norm_Lp(derivative(a, 1), 2)
        rep.add("gagliardo_nirenberg", i, lhs, l2**0.75 * d1**0.25, None, a.grid.label,
                max(l2, 1e-300))
    return rep


def verify_interpolation(u, s: float, t: float, s_v: float, t_v: float,
                         alpha: float) -> InequalityReport:
    """Log-convexity of ``H^{s,s'}`` norms in the exponents (sharp: ratio <= 1)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    rep = InequalityReport("interpolation")
    mid = N.NormSpec(alpha * s + (1 - alpha) * t, alpha * s_v + (1 - alpha) * t_v)
    for i, a in enumerate(_as_list(u)):
        lhs = N.norm_Hss(a, mid)
        rhs = N.norm_Hss(a, N.NormSpec(s, s_v)) ** alpha * N.norm_Hss(a, N.NormSpec(t, t_v)) ** (1 - alpha)
        rep.add("interpolation", i, lhs, rhs, None, a.grid.label, max(a.norm(), 1e-300))
    return rep


def verify_uniform_block_bound(u, j: int, p: float = 2, r: float = 2,
                               bank: str = "iso") -> InequalityReport:
    """``||Delta_j u||_{L^p_v L^r_h} / ||u||_{L^p_v L^r_h}``."""
    rep = InequalityReport("uniform_block")
    block = dyadic_block_iso if bank == "iso" else dyadic_block_vert
    for i, a in enumerate(_as_list(u)):
        lhs = N.norm_aniso_lebesgue(block(a, j), r, p, "v-outer")
        rhs = N.norm_aniso_lebesgue(a, r, p, "v-outer")
        rep.add("uniform_block", i, lhs, rhs, j, a.grid.label, max(a.norm(), 1e-300))
    return rep


# ---------------------------------------------------------------------------
# norm equivalence and embedding


def measure_norm_equivalence(u, s: float = 0.6) -> InequalityReport:
    """Dyadic against integral ``H^{0,s}`` norm, both directions."""
    rep = InequalityReport("equivalence")
    for i, a in enumerate(_as_list(u)):
        d, h = N.norm_dyadic_vert(a, s), N.norm_H0s(a, s)
        sc = max(a.norm(), 1e-300)
        rep.add("dyadic_over_H0s", i, d, h, None, a.grid.label, sc)
        rep.add("H0s_over_dyadic", i, h, d, None, a.grid.label, sc)
    return rep


def measure_embedding(u, s: float = 0.6) -> InequalityReport:
    """``||u||_{L^inf_v L^2_h} / ||u||_{H^{0,s}}`` for ``s > 1/2``."""
    rep = InequalityReport("embedding")
    for i, a in enumerate(_as_list(u)):
        rep.add("embedding_H0s_LinfvL2h", i, N.norm_LinfvL2h(a), N.norm_H0s(a, s), None,
                a.grid.label, max(a.norm(), 1e-300))
    return rep


# ---------------------------------------------------------------------------
# default suite


SUITE_NAMES = (
    "trilinear_Hs", "product_H0s", "product_H0s_self", "divfree_grad", "divfree_cq",
    "bernstein_hv_upper", "bernstein_hv_lower", "bernstein_vh_upper", "bernstein_vh_lower",
    "bernstein_hv_embed", "bernstein_vh_embed", "commutator", "interpolation",
)


def default_suite(grid: Grid, spec: FieldEnsembleSpec | None = None, s: float = 0.6,
                  qs: Iterable[int] = (0, 1, 2), js: Iterable[int] = (0, 1, 2),
                  targets: Sequence[str] | None = None) -> dict[str, InequalityReport]:
    """Run every verifier on one seeded ensemble; keyed by report family."""
    spec = spec or FieldEnsembleSpec()
    ens = gen_ensemble(spec, grid)
    partner = ens[1:] + ens[:1]
    runs = {
        "trilinear": lambda: verify_trilinear_Hs(ens, s),
        "product": lambda: verify_product_law_H0s(ens, partner, s).merge(
            verify_product_law_H0s(ens, None, s)),
        "divfree": lambda: verify_divfree_prop(ens, s),
        "bernstein": lambda: _merge(verify_bernstein(ens, q) for q in qs),
        "commutator": lambda: _merge(verify_commutator(ens, partner, j) for j in js),
        "interpolation": lambda: _merge(
            verify_interpolation(ens, 0.0, 1.0, 0.0, 1.0, a) for a in (0.25, 0.5, 0.75)),
        "gagliardo_nirenberg": lambda: verify_gagliardo_nirenberg(ens),
        "equivalence": lambda: measure_norm_equivalence(ens, s),
        "embedding": lambda: measure_embedding(ens, s),
    }
    targets = list(runs) if targets is None else list(targets)
    unknown = [t for t in targets if t not in runs]
    if unknown:
        raise ValueError(f"unknown verify target(s): {', '.join(unknown)}")
    return {t: runs[t]() for t in targets}


def _merge(reports) -> InequalityReport:
    reports = list(reports)
    out = reports[0]
    for r in reports[1:]:
        out = out.merge(r)
    return out


def refinement_table(reports_a: dict, reports_b: dict) -> dict[str, tuple[float, float, float]]:
    """``{row name: (worst_a, worst_b, worst_a / worst_b)}`` across two suites."""
    out = {}
    for fam, ra in reports_a.items():
        rb = reports_b.get(fam)
        if rb is None:
            continue
        for name in ra.names:
            wa, wb = ra.worst(name), rb.worst(name)
            out[name] = (wa, wb, wa / wb if wb > 0 else math.inf)
    return out
