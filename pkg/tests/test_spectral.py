import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from alp.spectral import (
    ETA_FLAT,
    ETA_ZERO,
    Grid,
    SpectralField,
    VectorField,
    chi,
    chi_tilde,
    derivative,
    derivative_power,
    divergence,
    divergence_defect,
    dyadic_block_iso,
    dyadic_block_vert,
    filter_bank,
    forward_transform,
    horizontal_laplacian,
    inverse_transform,
    laplacian,
    leray_project,
    low_pass_iso_S,
    low_pass_S,
    low_pass_vert_S,
    low_pass_x2x3,
    padded_size,
    phi,
    product,
    smooth_step,
    support_separation,
    truncate_nyquist,
)

from conftest import mode, mode_field, random_samples

seeds = st.integers(0, 2**31 - 1)
even_sizes = st.sampled_from([8, 10, 12, 16])


# --- grid --------------------------------------------------------------------


@pytest.mark.parametrize("shape", [(7, 8, 8), (8, 8, 6), (8, 9, 8), (0, 8, 8)])
def test_grid_rejects_odd_or_small(shape):
    with pytest.raises(ValueError):
        Grid(*shape)


def test_grid_wavenumbers_and_nyquist(g8):
    k1, k2, k3 = g8.k
    assert sorted(np.unique(k1)) == list(range(-4, 4))
    assert g8.nyquist_mask.sum() == 8**3 - 7**3
    # odd-order derivatives drop the Nyquist wavenumber
    assert np.all(g8.k_eff[0][g8.nyquist_mask[:, :1, :1]] == 0)


def test_grid_is_hashable_and_equal():
    assert Grid.cube(8) == Grid(8, 8, 8)
    assert len({Grid.cube(8), Grid(8, 8, 8), Grid(8, 8, 10)}) == 2


# --- transforms --------------------------------------------------------------


@given(seed=seeds)
def test_round_trip_random_16(seed):
    g = Grid.cube(16)
    s = random_samples(g.shape, seed)
    assert np.abs(inverse_transform(forward_transform(s, g)) - s).max() < 1e-12


@given(seed=seeds, n1=even_sizes, n3=even_sizes)
def test_round_trip_vector_non_cubic(seed, n1, n3):
    g = Grid(n1, 8, n3)
    s = random_samples(g.shape, seed, comps=3)
    u = forward_transform(s, g)
    assert isinstance(u, VectorField)
    assert np.abs(inverse_transform(u) - s).max() < 1e-12


@given(seed=seeds)
def test_parseval(seed):
    g = Grid(8, 10, 12)
    s = random_samples(g.shape, seed)
    c = forward_transform(s, g).coeffs
    lhs = np.sum(s**2) / g.size
    assert abs(lhs - np.sum(np.abs(c) ** 2)) <= 1e-12 * lhs


def test_constant_has_mean_coefficient(g8):
    u = forward_transform(np.full(g8.shape, 3.5), g8)
    assert u.coeffs[0, 0, 0] == pytest.approx(3.5)
    assert np.abs(u.coeffs).sum() == pytest.approx(3.5)


def test_cos_mode_splits_evenly(g8):
    u = mode_field(g8, (1, 2, 0))
    c = u.coeffs
    assert c[1, 2, 0] == pytest.approx(0.5)
    assert c[-1, -2, 0] == pytest.approx(0.5)
    assert u.is_conjugate_symmetric()


def test_forward_rejects_bad_shape(g8):
    with pytest.raises(ValueError):
        forward_transform(np.zeros((8, 8, 10)), g8)
    with pytest.raises(ValueError):
        forward_transform(np.zeros((2, 8, 8, 8)), g8)


def test_coefficients_are_readonly(g8):
    u = mode_field(g8, (1, 0, 0))
    with pytest.raises(ValueError):
        u.coeffs[0, 0, 0] = 1.0


# --- cutoffs -----------------------------------------------------------------


def test_smooth_step_plateaus():
    r = np.linspace(0, 5, 5001)
    e = smooth_step(r)
    assert np.all(e[r <= ETA_FLAT] == 1.0)
    assert np.all(e[r >= ETA_ZERO] == 0.0)
    assert np.all(np.diff(e) <= 0)
    # strictly inside the transition, away from floating-point saturation
    inside = (r > ETA_FLAT + 0.05) & (r < ETA_ZERO - 0.05)
    assert np.all(np.diff(e[inside]) < 0)
    assert np.all((e[inside] > 0) & (e[inside] < 1))


def test_smooth_step_symmetry_about_midpoint():
    # exp(-1/x) construction is antisymmetric around r = 3/2
    x = np.linspace(0, 0.5, 11)
    assert np.allclose(smooth_step(1.5 - x) + smooth_step(1.5 + x), 1.0, atol=1e-15)


def test_phi_at_two_is_one():
    assert phi(2.0) == 1.0
    assert chi(0.0) == 1.0 and chi(0.5) == 1.0


def test_phi_support():
    r = np.linspace(0, 8, 80001)
    p = phi(r)
    assert np.all(p[r <= 1.0] == 0) and np.all(p[r >= 4.0] == 0)
    assert np.all(p >= 0) and np.all(p <= 1)


def test_chi_tilde_covers_chi():
    r = np.linspace(0, 3, 3001)
    assert np.all(chi_tilde(r)[chi(r) > 0] == 1.0)


@given(r=st.floats(0, 1e4, allow_nan=False))
def test_partition_of_unity_pointwise(r):
    total = chi(r) + sum(phi(r / 2.0**j) for j in range(0, 20))
    assert abs(total - 1.0) < 1e-14


def test_support_separation_measured():
    assert support_separation() == 2


# --- blocks ------------------------------------------------------------------


def test_block_iso_mode_two_is_identity(g16):
    u = mode_field(g16, (2, 0, 0))
    assert np.abs((dyadic_block_iso(u, 0) - u).coeffs).max() < 1e-15
    for j in (-1, 1, 2, 3):
        assert np.abs(dyadic_block_iso(u, j).coeffs).max() < 1e-15


def test_block_vert_horizontal_mode_in_low_block(g16):
    u = mode_field(g16, (5, 7, 0))
    assert np.abs((dyadic_block_vert(u, -1) - u).coeffs).max() < 1e-15
    for q in range(0, 4):
        assert np.abs(dyadic_block_vert(u, q).coeffs).max() < 1e-15


def test_block_vert_mode_four_in_q1(g16):
    u = mode_field(g16, (0, 0, 4))
    assert np.abs((dyadic_block_vert(u, 1) - u).coeffs).max() < 1e-15


def test_low_pass_keeps_unit_mode(g16):
    u = mode_field(g16, (1, 0, 0))
    assert np.abs((low_pass_S(u, 1) - u).coeffs).max() < 1e-15
    v = mode_field(g16, (0, 0, 1))
    assert np.abs((low_pass_vert_S(v, 1) - v).coeffs).max() < 1e-15
    w = mode_field(g16, (0, 0, 5))
    assert np.abs(low_pass_vert_S(w, 0).coeffs).max() < 1e-15
    h = mode_field(g16, (5, 0, 0))
    assert np.abs((low_pass_vert_S(h, 0) - h).coeffs).max() < 1e-15


def test_low_pass_rejects_negative(g8):
    with pytest.raises(ValueError):
        low_pass_S(mode_field(g8, (1, 0, 0)), -1)


@pytest.mark.parametrize("kind", ["iso", "vert"])
def test_partition_of_unity_on_grid(kind):
    g = Grid(16, 16, 32)
    u = forward_transform(random_samples(g.shape, 3), g)
    bank = filter_bank(g, kind)
    total = sum(bank.block(j) for j in bank.indices)
    assert np.abs(total - 1.0).max() < 1e-15
    blk = dyadic_block_iso if kind == "iso" else dyadic_block_vert
    acc = sum((blk(u, j).coeffs for j in bank.indices), np.zeros(g.shape, complex))
    assert np.abs(acc - u.coeffs).max() <= 1e-13 * np.abs(u.coeffs).max()


@pytest.mark.parametrize("kind", ["iso", "vert"])
def test_low_pass_telescopes(kind, g16):
    bank = filter_bank(g16, kind)
    for j in range(0, bank.jmax + 1):
        acc = sum(bank.block(i) for i in range(-1, j))
        assert np.abs(acc - bank.low_pass(j)).max() < 1e-15


def test_low_pass_iso_matches_bank(g16):
    u = forward_transform(random_samples(g16.shape, 1), g16)
    assert np.allclose(low_pass_iso_S(u, 2).coeffs, low_pass_S(u, 2).coeffs)


def test_x2x3_commutes_with_x1_multiplication(g16):
    # B(x1) = 2 + sin(x1) acts along x1 only, so it commutes with S^{x2,x3}
    x1, _, _ = g16.coordinates()
    b = np.broadcast_to(2 + np.sin(x1), g16.shape)
    u = forward_transform(random_samples(g16.shape, 5), g16)
    lhs = low_pass_x2x3(forward_transform(b * inverse_transform(u), g16), 1)
    rhs = forward_transform(b * inverse_transform(low_pass_x2x3(u, 1)), g16)
    assert np.abs((lhs - rhs).coeffs).max() < 1e-14


# --- derivatives and projection ---------------------------------------------


def test_horizontal_laplacian_mode(g16):
    u = mode_field(g16, (1, 2, 7))
    assert np.abs(horizontal_laplacian(u).coeffs + 5 * u.coeffs).max() < 1e-13
    assert np.abs(laplacian(u).coeffs + 54 * u.coeffs).max() < 1e-13


def test_derivative_of_sin(g16):
    u = mode_field(g16, (0, 3, 0), kind="sin")
    du = inverse_transform(derivative(u, 2))
    assert np.abs(du - mode(g16, (0, 3, 0), 3.0)).max() < 1e-13
    d2 = inverse_transform(derivative_power(u, 2, 2))
    assert np.abs(d2 + 9 * mode(g16, (0, 3, 0), kind="sin")).max() < 1e-12


def test_derivative_rejects_axis(g8):
    with pytest.raises(ValueError):
        derivative(mode_field(g8, (1, 0, 0)), 0)


def test_derivative_kills_nyquist(g8):
    s = np.broadcast_to(np.cos(4 * g8.coordinates()[0]), g8.shape)
    u = forward_transform(s, g8)
    assert np.abs(derivative(u, 1).coeffs).max() == 0
    # second derivative keeps the true wavenumber
    assert np.allclose(inverse_transform(derivative_power(u, 1, 2)), -16 * s)


@given(seed=seeds)
def test_leray_divergence_free_and_idempotent(seed):
    g = Grid(8, 12, 10)
    u = forward_transform(random_samples(g.shape, seed, comps=3), g)
    p = leray_project(u)
    assert np.abs(divergence(p).coeffs).max() <= 1e-12 * p.norm()
    assert divergence_defect(p) < 1e-12
    pp = leray_project(p)
    assert np.abs((pp - p).coeffs).max() <= 1e-14 * p.norm()
    # orthogonal: the residual is a gradient, orthogonal to the projection
    r = u - p
    assert abs(np.vdot(r.coeffs, p.coeffs)) <= 1e-12 * u.norm() ** 2
    assert p.is_conjugate_symmetric()


def test_leray_keeps_mean(g8):
    s = np.zeros((3,) + g8.shape)
    s[0] = 1.0
    p = leray_project(forward_transform(s, g8))
    assert np.allclose(inverse_transform(p), s)


def test_divfree_flag_is_validated(g8):
    s = np.zeros((3,) + g8.shape)
    s[0] = np.broadcast_to(np.sin(g8.coordinates()[0]), g8.shape)
    with pytest.raises(ValueError):
        VectorField(g8, forward_transform(s, g8).coeffs, True, True)


def test_truncate_nyquist(g8):
    u = forward_transform(random_samples(g8.shape, 2), g8)
    t = truncate_nyquist(u)
    assert np.all(t.coeffs[g8.nyquist_mask] == 0)
    assert np.array_equal(t.coeffs[~g8.nyquist_mask], u.coeffs[~g8.nyquist_mask])


# --- dealiased products ------------------------------------------------------


def _split(c, n):
    """Embed (n,n,n) FFT-order coefficients in a symmetric (n+1)^3 box, Nyquist halved."""
    h = n // 2
    out = c
    for axis in range(3):
        idx = np.r_[h:n, 0:h]  # -h .. h-1
        out = np.take(out, idx, axis=axis)
        first = np.take(out, [0], axis=axis)  # the -h slice
        out = np.concatenate([0.5 * first, np.take(out, range(1, n), axis=axis), 0.5 * first],
                             axis=axis)
    return out  # indices -h .. h


def _brute_product(a, b, n):
    """Direct convolution of the split spectra, kept on |k_i| < n/2."""
    sa, sb = _split(a, n), _split(b, n)
    m = n + 1
    full = np.zeros((2 * m - 1,) * 3, complex)
    for i, j, k in itertools.product(range(m), repeat=3):
        v = sa[i, j, k]
        if v != 0:
            full[i:i + m, j:j + m, k:k + m] += v * sb
    h = n // 2
    centre = 2 * h  # index of k = 0
    out = np.zeros((n, n, n), complex)
    for k1, k2, k3 in itertools.product(range(-h + 1, h), repeat=3):
        out[k1 % n, k2 % n, k3 % n] = full[centre + k1, centre + k2, centre + k3]
    return out


@pytest.mark.parametrize("seed", [0, 1])
def test_padded_product_matches_brute_force_convolution(seed):
    g = Grid.cube(8)
    a = forward_transform(random_samples(g.shape, seed), g)
    b = forward_transform(random_samples(g.shape, seed + 10), g)
    ref = _brute_product(a.coeffs, b.coeffs, 8)
    got = product(a, b).coeffs
    assert np.abs(got - ref).max() < 1e-14


def test_padded_product_complex_path_matches_real():
    g = Grid.cube(8)
    a = forward_transform(random_samples(g.shape, 4), g)
    b = forward_transform(random_samples(g.shape, 5), g)
    ac = SpectralField(g, a.coeffs, real=False)
    assert np.allclose(product(ac, b).coeffs, product(a, b).coeffs, atol=1e-15)


def test_product_of_modes(g16):
    a = mode_field(g16, (1, 0, 0))
    b = mode_field(g16, (0, 2, 0))
    got = inverse_transform(product(a, b))
    x1, x2, _ = g16.coordinates()
    assert np.abs(got - np.cos(x1) * np.cos(2 * x2)).max() < 1e-14


def test_two_thirds_rule_product(g16):
    a = mode_field(g16, (1, 0, 0))
    b = mode_field(g16, (2, 0, 0))
    got = inverse_transform(product(a, b, rule="2/3"))
    x1 = g16.coordinates()[0]
    want = np.broadcast_to(0.5 * (np.cos(x1) + np.cos(3 * x1)), g16.shape)
    assert np.abs(got - want).max() < 1e-14
    # mode 6 is beyond n/3 and is removed
    c = mode_field(g16, (6, 0, 0))
    assert np.abs(product(c, mode_field(g16, (0, 0, 0))).coeffs).max() == pytest.approx(0.5)
    assert np.abs(product(c, mode_field(g16, (0, 0, 0)), rule="2/3").coeffs).max() < 1e-15


def test_padded_size():
    assert [padded_size(n) for n in (8, 10, 16, 32)] == [12, 16, 24, 48]


@given(seed=seeds)
def test_product_preserves_reality(seed):
    g = Grid(8, 8, 12)
    a = forward_transform(random_samples(g.shape, seed), g)
    b = forward_transform(random_samples(g.shape, seed + 1), g)
    assert product(a, b).is_conjugate_symmetric(1e-12)
