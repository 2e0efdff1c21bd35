from dataclasses import replace

import numpy as np
import pytest

from liepsido.catalog import bessel, cos_modulated, heat_block, identity
from liepsido.errors import ContractError, PrecisionError
from liepsido.groups import SU2, Torus
from liepsido.quantize import (
    adjoint,
    amplitude_apply,
    asymptotic_check,
    boundedness_ratio,
    dense_apply,
    dense_matrix,
    exact_symbol,
    extract_symbol,
    op_apply,
)
from liepsido.spectral import (
    GridField,
    SpectralField,
    forward_transform,
    inverse_transform,
    random_spectral_field,
    spectral_inner_product,
)
from liepsido.symbols import Amplitude, multiplier_symbol
from liepsido.verify import random_symbol


def _swap(group):
    P = np.array([[0, 1], [1, 0]])
    return multiplier_symbol(group, 2, lambda idx: P[:, :, None, None] * np.eye(idx.dim), name="swap")


def test_identity_symbol(group, rng):
    uh = random_spectral_field(group, 2, 3, rng)
    grid = group.build_grid(3)
    out = op_apply(identity(group, 2), uh, grid)
    assert np.abs(out.samples - inverse_transform(uh, grid).samples).max() <= 1e-12


def test_bessel_on_exponential():
    T = Torus(1)
    grid = T.build_grid(2)
    uh = SpectralField(T, 1, 1, {T.irrep(1): np.ones((1, 1, 1))})
    out = op_apply(bessel(T), uh, grid)
    assert np.allclose(out.samples[:, 0], np.sqrt(2) * np.exp(1j * grid.nodes[:, 0]), atol=1e-12)


def test_block_swap(group, rng):
    uh = random_spectral_field(group, 2, 2, rng)
    grid = group.build_grid(2)
    out = op_apply(_swap(group), uh, grid).samples
    u = inverse_transform(uh, grid).samples
    assert np.abs(out - u[:, ::-1]).max() <= 1e-12


def test_multiplier_is_blockwise(su2, rng):
    sigma = random_symbol(su2, 2, rng, x_dependent=False)
    band = 3
    uh = random_spectral_field(su2, 2, band, rng)
    vh = forward_transform(op_apply(sigma, uh, su2.build_grid(band)), band)
    for idx in su2.irreps(band):
        S = sigma.evaluate(su2.identity(), idx)
        expect = np.einsum("irab,ibc->rac", S, uh[idx])
        assert np.abs(vh[idx] - expect).max() <= 1e-10


def test_op_apply_at_points(group, rng):
    sigma = cos_modulated(group)
    uh = random_spectral_field(group, 1, 2, rng)
    grid = group.build_grid(3)
    on_grid = op_apply(sigma, uh, grid).samples
    at = op_apply(sigma, uh, grid, points=grid.nodes[:5])
    assert np.allclose(at, on_grid[:5], atol=1e-12)


# --- amplitudes -------------------------------------------------------------------


def test_y_independent_amplitude_matches_symbol(group, rng):
    band = 2
    sigma = cos_modulated(group, 1)
    a = Amplitude.from_symbol(sigma)
    grid = group.build_grid(band + 1)
    uh = random_spectral_field(group, 1, band, rng)
    u = inverse_transform(uh, grid)
    lhs = amplitude_apply(a, u, band=band).samples
    rhs = op_apply(sigma, uh, grid).samples
    assert np.abs(lhs - rhs).max() <= 1e-10
    ident = amplitude_apply(Amplitude.from_symbol(identity(group)), u, band=band).samples
    assert np.abs(ident - u.samples).max() <= 1e-12


def test_torus_amplitude_double_sum():
    T = Torus(1)
    B = 4
    grid = T.build_grid(B)
    rng = np.random.default_rng(3)
    uh = random_spectral_field(T, 1, 2, rng)
    u = inverse_transform(uh, grid)
    a = Amplitude(T, 1, lambda xs, ys, idx: np.exp(1j * (xs[:, None, 0] - ys[None, :, 0]))[:, :, None, None, None, None],
                  0.0, 1.0, 0.0, 1, 1)
    out = amplitude_apply(a, u, band=1).samples[:, 0]
    # sum_k e^{ikx} (1/N) sum_y e^{i(x-y)} u(y) e^{-iky} over |k| <= 1
    x, y, w = grid.nodes[:, 0], grid.nodes[:, 0], grid.weights
    expect = np.zeros(len(x), dtype=complex)
    for k in (-1, 0, 1):
        inner = np.sum(w[None] * np.exp(1j * (x[:, None] - y[None])) * u.samples[None, :, 0] * np.exp(-1j * k * y)[None], axis=1)
        expect += np.exp(1j * k * x) * inner
    assert np.abs(out - expect).max() <= 1e-12


def test_amplitude_band_overflow(rng):
    T = Torus(1)
    grid = T.build_grid(4)
    a = Amplitude.separable(T, 1, lambda y: np.cos(3 * y[..., 0]), lambda idx: np.ones((1, 1, 1, 1)), y_band=3)
    u = inverse_transform(random_spectral_field(T, 1, 3, rng), grid)
    with pytest.raises(PrecisionError):
        amplitude_apply(a, u)


# --- extraction -------------------------------------------------------------------


def test_extract_identity(group):
    band = 2
    grid = group.build_grid(band)
    s = extract_symbol(lambda u: u, group, 1, band, grid)
    for idx in group.irreps(band):
        assert np.abs(s.evaluate(grid.nodes, idx) - np.eye(idx.dim)).max() <= 1e-12


def test_extract_multiplier(su2, rng):
    sigma = random_symbol(su2, 2, rng, x_dependent=False)
    band = 2
    grid = su2.build_grid(band)
    A = lambda u: op_apply(sigma, forward_transform(u, band), grid)  # noqa: E731
    s = extract_symbol(A, su2, 2, band, grid)
    for idx in su2.irreps(band):
        assert np.abs(s.evaluate(grid.nodes, idx) - sigma.evaluate(grid.nodes, idx)).max() <= 1e-10


def test_extract_multiplication_operator(rng):
    T = Torus(1)
    band = 6
    grid = T.build_grid(band + 1)
    A = lambda u: GridField(grid, np.exp(1j * grid.nodes[:, :1]) * u.samples, None)  # noqa: E731
    s = extract_symbol(A, T, 1, band, grid)
    idx = T.irrep(2)
    assert np.allclose(s.evaluate(grid.nodes, idx)[:, 0, 0, 0, 0], np.exp(1j * grid.nodes[:, 0]), atol=1e-12)
    for _ in range(10):
        uh = random_spectral_field(T, 1, band, rng)
        diff = op_apply(s, uh, grid).samples - A(inverse_transform(uh, grid)).samples
        assert np.abs(diff).max() <= 1e-9


def test_extract_rejects_nonlinear(group):
    band = 1
    grid = group.build_grid(band)
    with pytest.raises(ContractError):
        extract_symbol(lambda u: GridField(grid, np.abs(u.samples) ** 2), group, 1, band, grid)


# --- dense oracle -----------------------------------------------------------------


def test_dense_identity_and_bessel(group):
    band = 2
    D = dense_matrix(identity(group, 2), band)
    assert np.abs(D.matrix - np.eye(D.matrix.shape[0])).max() <= 1e-12
    B = dense_matrix(bessel(group), band)
    expected = np.concatenate([np.full(i.dim**2, i.weight) for i in group.irreps(band)])
    assert np.abs(B.matrix - np.diag(expected)).max() <= 1e-12
    assert B.matrix.shape[0] == sum(i.dim**2 for i in group.irreps(band))


@pytest.mark.parametrize("x_dep", [False, True])
def test_dense_matches_op_apply(group, rng, x_dep):
    band = 3 if group.kind == "su2" else 4
    sigma = random_symbol(group, 2, rng, x_dependent=x_dep)
    D = dense_matrix(sigma, band)
    grid = group.build_grid(band + 1)
    for _ in range(3):
        uh = random_spectral_field(group, 2, band, rng)
        ref = forward_transform(op_apply(sigma, uh, grid), band)
        assert dense_apply(D, uh).max_abs_diff(ref) <= 1e-10


def test_adjoint(group, rng):
    band = 2
    D = dense_matrix(random_symbol(group, 2, rng, x_dependent=True), band)
    Ds = adjoint(D)
    assert np.array_equal(adjoint(Ds).matrix, D.matrix)
    for _ in range(20):
        uh, vh = random_spectral_field(group, 2, band, rng), random_spectral_field(group, 2, band, rng)
        lhs = spectral_inner_product(D.apply(uh), vh)
        rhs = spectral_inner_product(uh, Ds.apply(vh))
        assert abs(lhs - rhs) <= 1e-10


def test_multiplier_dense_is_block_diagonal(su2, rng):
    sigma = random_symbol(su2, 2, rng, x_dependent=False)
    D = dense_matrix(sigma, 3)
    size = {i: 2 * i.dim**2 for i in su2.irreps(3)}
    mask = np.zeros_like(D.matrix, dtype=bool)
    pos = 0
    for s in size.values():
        mask[pos : pos + s, pos : pos + s] = True
        pos += s
    assert np.abs(D.matrix[~mask]).max() <= 1e-12


def test_dense_from_black_box(rng):
    T = Torus(1)
    sigma = bessel(T)
    band = 4
    grid = T.build_grid(band + 1)
    A = lambda u: op_apply(sigma, forward_transform(u, band), grid)  # noqa: E731
    D = dense_matrix(A, band, grid=grid, group=T, n=1)
    assert np.abs(D.matrix - dense_matrix(sigma, band).matrix).max() <= 1e-12
    with pytest.raises(ValueError):
        dense_matrix(A, band)


def test_dense_composition(group, rng):
    band = 2
    s1, s2 = random_symbol(group, 1, rng, x_dependent=False), bessel(group)
    C = dense_matrix(s1, band) @ dense_matrix(s2, band)
    uh = random_spectral_field(group, 1, band, rng)
    ref = dense_matrix(s1, band).apply(dense_matrix(s2, band).apply(uh))
    assert C.apply(uh).max_abs_diff(ref) <= 1e-12


def test_dense_needs_x_band(su2):
    sigma = cos_modulated(su2)
    with pytest.raises(PrecisionError):
        dense_matrix(replace(sigma, x_band=None), 2)


# --- asymptotics and boundedness --------------------------------------------------


def test_exact_symbol_of_y_independent(su2):
    a = Amplitude.from_symbol(cos_modulated(su2))
    pts = su2.random(3, np.random.default_rng(2))
    idx = su2.irrep(2)
    assert np.abs(exact_symbol(a, idx, pts) - cos_modulated(su2).evaluate(pts, idx)).max() <= 1e-10


def test_asymptotics_y_independent_is_exact():
    T = Torus(1)
    a = Amplitude.from_symbol(bessel(T))
    rep = asymptotic_check(a, 1, (4, 12))
    assert rep.exact and rep.exponent == float("-inf")


def test_asymptotics_first_order_amplitude():
    T = Torus(1)
    a = Amplitude.separable(T, 1, lambda y: 2 + np.cos(y[..., 0]), lambda idx: idx.weight * np.ones((1, 1, 1, 1)), 1.0, 1)
    r1 = asymptotic_check(a, 1, (8, 24))
    r2 = asymptotic_check(a, 2, (8, 24))
    assert r1.exponent <= 0.25 and r2.exponent <= -0.75
    assert np.all(r2.errors < r1.errors)
    assert r1.summary()["N"] == 1


def test_asymptotics_needs_four_weights():
    T = Torus(1)
    with pytest.raises(ValueError):
        asymptotic_check(Amplitude.from_symbol(bessel(T)), 1, (4, 4))


def test_boundedness(group, rng):
    band = 3
    assert abs(boundedness_ratio(identity(group), 0.3, 5, band, rng) - 1) <= 1e-10
    assert abs(boundedness_ratio(bessel(group), 1.0, 5, band, rng) - 1) <= 1e-10
    assert boundedness_ratio(heat_block(group), 1.0, 5, band, rng) <= 2 + 1e-8


def test_boundedness_stable_in_band(su2):
    s = cos_modulated(su2)
    r = [boundedness_ratio(s, 0.0, 10, b, np.random.default_rng(0)) for b in (3, 6)]
    assert abs(r[1] / r[0] - 1) <= 0.2
