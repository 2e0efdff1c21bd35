import numpy as np
import pytest

from liepsido.catalog import bessel, cos_modulated, get_symbol, heat_block, identity
from liepsido.errors import GroupMismatchError, PrecisionError
from liepsido.groups import SU2, Torus
from liepsido.spectral import GridField, SpectralField, forward_transform, inverse_transform, random_spectral_field, synthesize
from liepsido.symbols import (
    Amplitude,
    MatrixSymbol,
    ScalarFunction,
    apply_difference,
    apply_difference_to_symbol,
    integral,
    is_central,
    left_derivative,
    left_fd,
    multiplier_symbol,
    parity_decompose,
    seminorm_estimate,
    standard_family,
    tabulated_symbol,
    taylor_expand,
)

from oracles import TORUS_SHIFT_BESSEL


@pytest.fixture(scope="module")
def su2_family():
    return standard_family(SU2())


# --- families --------------------------------------------------------------------


def test_torus_family():
    fam = standard_family(Torus(2))
    e = Torus(2).identity()[None]
    assert all(q(e)[0] == 0 for q in fam.functions)
    x = np.array([[0.4, -1.0]])
    assert fam.functions[1](x)[0] == pytest.approx(np.exp(-1j) - 1)
    assert fam.report["rank_at_identity"] == 2


def test_su2_family(su2_family):
    su2 = SU2()
    e = su2.identity()[None]
    assert all(q(e)[0] == 0 for q in su2_family.functions)
    assert su2_family.report["rank_at_identity"] == 3
    assert su2_family.report["min_common_value"] > 1e-6
    # -I is not a common zero of the shipped family
    minus = np.array([[-1 + 0j, 0j]])
    assert max(abs(q(minus)[0]) for q in su2_family.functions) > 1


@pytest.mark.parametrize("group", [Torus(1), Torus(3), SU2()], ids=repr)
def test_dual_basis(group):
    fam = standard_family(group)
    e = group.identity()[None]
    for j in range(group.dim):
        for k, q in enumerate(fam.functions):
            qinv = lambda p, q=q: q(group.inv(p))  # noqa: E731
            val = sum(fam.dual[j, l] * left_fd(qinv, group, l, e)[0] for l in range(group.dim))
            assert abs(val - (j == k)) <= 1e-8


# --- difference operators ----------------------------------------------------------


def _q(group, j=0):
    return standard_family(group).functions[j]


def test_difference_of_constant():
    T = Torus(1)
    grid = T.build_grid(4)
    one = SpectralField(T, 1, 0, {T.irrep(0): np.ones((1, 1, 1))})
    out = apply_difference(_q(T), one, grid)
    vals = {idx.label[0]: m[0, 0, 0] for idx, m in out.coeffs.items()}
    assert vals[1] == pytest.approx(1, abs=1e-12) and vals[0] == pytest.approx(-1, abs=1e-12)
    assert abs(vals[-1]) <= 1e-12


def test_torus_shift_identity(rng):
    T = Torus(1)
    uh = random_spectral_field(T, 2, 6, rng)
    out = apply_difference(_q(T), uh, T.build_grid(7))
    for idx, m in out.coeffs.items():
        k = idx.label[0]
        prev = uh.coeffs.get(T.irrep(k - 1), 0) if abs(k - 1) <= 6 else 0
        cur = uh.coeffs.get(idx, 0) if abs(k) <= 6 else 0
        assert np.abs(m - (prev - cur)).max() <= 1e-12


def test_difference_linear_in_q(group, rng):
    band = 2
    uh = random_spectral_field(group, 1, band, rng)
    grid = group.build_grid(band + 1)
    fam = standard_family(group)
    q1, q2 = fam.functions[0], fam.functions[-1]
    qs = ScalarFunction(group, lambda p: q1(p) + q2(p), 1, "sum")
    lhs = apply_difference(qs, uh, grid)
    rhs = apply_difference(q1, uh, grid) + apply_difference(q2, uh, grid)
    assert lhs.max_abs_diff(rhs) <= 1e-12
    zero = ScalarFunction(group, lambda p: np.zeros(len(p)), 0, "0")
    assert max(np.abs(m).max() for m in apply_difference(zero, uh, grid).coeffs.values()) <= 1e-14


def test_difference_band_overflow(rng):
    T = Torus(1)
    uh = random_spectral_field(T, 1, 4, rng)
    with pytest.raises(PrecisionError):
        apply_difference(_q(T), uh, T.build_grid(4))
    with pytest.raises(PrecisionError):
        apply_difference(ScalarFunction(T, np.cos, None), uh, T.build_grid(8))


def test_difference_of_identity_symbol(group):
    out = apply_difference_to_symbol(_q(group), identity(group), 3)
    assert out.multiplier
    for idx in group.irreps(3):
        assert np.abs(out.evaluate(group.identity(), idx)).max() <= 1e-12


def test_difference_of_bessel_torus():
    T = Torus(1)
    out = apply_difference_to_symbol(_q(T), bessel(T), 6)
    for idx in T.irreps(6):
        k = idx.label[0]
        val = out.evaluate(T.identity(), idx)[0, 0, 0, 0]
        assert val == pytest.approx(np.sqrt(1 + (k - 1) ** 2) - np.sqrt(1 + k * k), abs=1e-12)
        if k in TORUS_SHIFT_BESSEL:
            assert val == pytest.approx(TORUS_SHIFT_BESSEL[k], abs=1e-12)
        assert abs(val) <= 1


def test_difference_commutes_with_scaling(su2):
    q = _q(su2, 2)
    s = heat_block(su2)
    a = apply_difference_to_symbol(q, s.scaled(2.5 - 1j), 3)
    b = apply_difference_to_symbol(q, s, 3).scaled(2.5 - 1j)
    for idx in su2.irreps(3):
        assert np.abs(a.evaluate(su2.identity(), idx) - b.evaluate(su2.identity(), idx)).max() <= 1e-12


def test_difference_of_x_only_symbol(group):
    pts = group.build_grid(1).nodes
    table = {idx: np.broadcast_to((np.cos(np.arange(len(pts))))[:, None, None, None, None] * np.eye(idx.dim),
                                  (len(pts), 1, 1, idx.dim, idx.dim)) for idx in group.irreps(3)}
    sigma = tabulated_symbol(group, 1, pts, table)
    out = apply_difference_to_symbol(_q(group), sigma, 2, pts)
    for idx in group.irreps(2):
        assert np.abs(out.evaluate(pts, idx)).max() <= 1e-12


def test_difference_needs_band(su2):
    sigma = multiplier_symbol(su2, 1, lambda idx: np.eye(idx.dim)[None, None], max_band=2)
    with pytest.raises(PrecisionError):
        apply_difference_to_symbol(_q(su2), sigma, 2)
    with pytest.raises(PrecisionError):
        sigma.evaluate(su2.identity(), su2.irrep(3))


# --- derivatives ------------------------------------------------------------------


def test_derivative_of_constant(group):
    grid = group.build_grid(2)
    u = GridField(grid, np.full(len(grid), 3.0 + 1j), 0)
    for j in range(group.dim):
        assert np.abs(left_derivative(j, u).samples).max() <= 1e-12


def test_derivative_torus_exponential():
    T = Torus(1)
    grid = T.build_grid(3)
    u = GridField(grid, np.exp(1j * grid.nodes[:, 0]), 1)
    assert np.allclose(left_derivative(0, u).samples[:, 0], 1j * np.exp(1j * grid.nodes[:, 0]), atol=1e-12)


@pytest.mark.parametrize("j", [0, 1, 2])
def test_derivative_su2_finite_difference(su2, rng, j):
    uh = random_spectral_field(su2, 1, 2, rng)
    pts = su2.random(20, rng)
    exact = synthesize(left_derivative(j, uh), pts)[:, 0]
    fd = left_fd(lambda p: synthesize(uh, p)[:, 0], su2, j, pts, 1e-4)
    assert np.abs(exact - fd).max() <= 1e-6


def test_symbol_derivative_spectral_vs_fd(rng):
    T = Torus(2)
    sigma = cos_modulated(T)
    pts = T.random(6, rng)
    d0 = left_derivative(0, sigma)
    idx = T.irrep((1, 2))
    expected = -np.sin(pts[:, 0]) * idx.weight
    assert np.allclose(d0.evaluate(pts, idx)[:, 0, 0, 0, 0], expected, atol=1e-12)
    assert np.abs(left_derivative(1, sigma).evaluate(pts, idx)).max() <= 1e-12
    assert d0.order == sigma.order + sigma.delta


# --- seminorms --------------------------------------------------------------------


@pytest.mark.parametrize("alpha,beta", [((1,), (0,)), ((0,), (1,)), ((2,), (1,))])
def test_seminorm_identity_vanishes(alpha, beta):
    assert seminorm_estimate(identity(Torus(1)), alpha, beta, 6) <= 1e-12


def test_seminorm_bessel(su2):
    assert seminorm_estimate(bessel(Torus(1)), (0,), (0,), 16) == pytest.approx(1.0)
    assert seminorm_estimate(bessel(su2), (0, 0, 0), (0, 0, 0), 6) == pytest.approx(1.0)
    val = seminorm_estimate(bessel(Torus(1)), (1,), (0,), 16)
    assert 0.5 < val <= 1.0


def test_seminorm_su2_first_difference_bounded(su2):
    vals = [seminorm_estimate(bessel(su2), (0, 0, 1), (0, 0, 0), B) for B in (4, 8)]
    assert max(vals) < 5 and vals[1] <= 1.5 * vals[0]


# --- Taylor expansion -------------------------------------------------------------


def _ratios(tx, group, x, N, hs, rng):
    out = []
    for h in hs:
        Z = rng.normal(size=(200, group.dim))
        Z *= h / np.linalg.norm(Z, axis=1, keepdims=True) * rng.uniform(0.5, 1, size=(200, 1))
        y = group.exp(Z)
        r = np.abs(tx.remainder(np.broadcast_to(x, y.shape), y)).max()
        out.append(r / h**N)
    return np.array(out)


def test_taylor_constant(group, rng):
    f = SpectralField(group, 1, 0, {group.irreps(0)[0]: np.full((1, 1, 1), 2.0)})
    tx = taylor_expand(f, 2)
    x, y = group.random(10, rng), group.random(10, rng)
    assert np.abs(tx.remainder(x, y)).max() <= 1e-12


@pytest.mark.parametrize("N", [1, 2])
def test_taylor_torus_scaling(rng, N):
    T = Torus(1)
    f = SpectralField(T, 1, 1, {T.irrep(1): np.ones((1, 1, 1))})
    tx = taylor_expand(f, N)
    r = _ratios(tx, T, np.zeros(1), N, [0.4, 0.2, 0.1], rng)
    assert np.all(r < 2)
    assert abs(r[-1] / r[-2] - 1) <= 0.25


@pytest.mark.parametrize("N", [1, 2])
def test_taylor_su2_scaling(su2, rng, N):
    grid = su2.build_grid(1)
    f = forward_transform(GridField(grid, grid.rep(su2.irrep(1))[:, 0, 0], 1), 1)
    tx = taylor_expand(f, N)
    for x in su2.random(5, rng):
        r = _ratios(tx, su2, x, N, [0.4, 0.2, 0.1], rng)
        assert np.all(r < 5)
        assert abs(r[-1] / r[-2] - 1) <= 0.25


def test_taylor_first_order_coefficient_is_dual_derivative(su2, rng):
    uh = random_spectral_field(su2, 1, 2, rng)
    fam = standard_family(su2)
    tx = taylor_expand(uh, 2, fam)
    assert set(tx.coefficients) == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    assert tx.coefficients[(0, 0, 1)].max_abs_diff(left_derivative(2, uh, fam)) == 0


def test_taylor_needs_scalar(rng):
    with pytest.raises(ValueError):
        taylor_expand(random_spectral_field(Torus(1), 2, 2, rng), 1)


# --- parity -----------------------------------------------------------------------


def test_parity_su2(su2, rng):
    f = lambda p: p[..., 0].real  # noqa: E731  Re xi11 = Re a
    even, odd = parity_decompose(f, su2)
    pts = su2.random(50, rng)
    assert np.abs(odd(pts)).max() <= 1e-10
    g = lambda p: p[..., 0].imag + p[..., 1].real  # noqa: E731
    even, odd = parity_decompose(g, su2)
    assert np.allclose(even(pts) + odd(pts), g(pts))
    e2, o2 = parity_decompose(even, su2)
    assert np.allclose(e2(pts), even(pts)) and np.abs(o2(pts)).max() <= 1e-14
    assert abs(integral(odd, su2.build_grid(4))) <= 1e-10


def test_odd_integral_vanishes(group, rng):
    uh = random_spectral_field(group, 1, 3, rng)
    f = lambda p: synthesize(uh, p)[:, 0]  # noqa: E731
    _, odd = parity_decompose(f, group)
    assert abs(integral(odd, group.build_grid(3))) <= 1e-10


@pytest.mark.parametrize("j", [0, 1, 2])
def test_derivative_of_central_even_is_odd(su2, rng, j):
    grid = su2.build_grid(2)
    chi = lambda p: 2 * p[..., 0].real  # noqa: E731  trace of the spin-1/2 matrix
    assert is_central(chi, su2, rng)
    du = left_derivative(j, GridField(grid, chi(grid.nodes), 1))
    fh = forward_transform(du, 1)
    dfun = lambda p: synthesize(fh, p)[:, 0]  # noqa: E731
    pts = su2.random(30, rng)
    assert np.abs(dfun(su2.inv(pts)) + dfun(pts)).max() <= 1e-10


def test_non_central(su2, rng):
    assert not is_central(lambda p: p[..., 1].real, su2, rng)


# --- symbol objects ---------------------------------------------------------------


def test_block_orientation(su2):
    rng = np.random.default_rng(1)
    M = rng.normal(size=(2, 2))
    sigma = multiplier_symbol(su2, 2, lambda idx: M[:, :, None, None] * np.eye(idx.dim))
    idx = su2.irrep(2)
    blk = sigma.block(su2.identity(), idx)
    # block (r, i) = sigma(i, r)
    assert np.allclose(blk[0:3, 3:6], M[1, 0] * np.eye(3))
    assert np.allclose(sigma(1, 0, su2.identity(), idx), M[1, 0] * np.eye(3))


def test_multiplier_spot_check(su2):
    def depends_on_x(p, idx):
        return p[:, 0].real[:, None, None, None, None] * np.ones((1, 1, idx.dim, idx.dim))

    with pytest.raises(ValueError):
        MatrixSymbol(su2, 1, depends_on_x, multiplier=True)


def test_symbol_group_mismatch():
    with pytest.raises(GroupMismatchError):
        bessel(Torus(1)).evaluate(np.zeros(1), SU2().irrep(1))


def test_conjugated_and_shifted(su2):
    U = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    s = heat_block(su2).conjugated(U)
    idx = su2.irrep(1)
    blk = s.block(su2.identity(), idx)
    w = idx.weight
    assert np.allclose(blk[:2, :2], 2 * w * np.eye(2)) and np.allclose(blk[2:, 2:], 0, atol=1e-14)
    sh = bessel(su2).shifted(-1.0)
    assert sh.evaluate(su2.identity(), idx)[0, 0] == pytest.approx((w - 1) * np.eye(2))


def test_tabulated_off_points(su2):
    pts = su2.build_grid(1).nodes
    table = {idx: np.zeros((len(pts), 1, 1, idx.dim, idx.dim)) for idx in su2.irreps(2)}
    sigma = tabulated_symbol(su2, 1, pts, table)
    assert sigma.max_band == 2
    with pytest.raises(PrecisionError):
        sigma.evaluate(pts[:3], su2.irrep(0))


def test_amplitude_from_symbol(su2, rng):
    a = Amplitude.from_symbol(cos_modulated(su2))
    xs, ys = su2.random(3, rng), su2.random(4, rng)
    v = a.evaluate(xs, ys, su2.irrep(1))
    assert v.shape == (3, 4, 1, 1, 2, 2)
    assert np.allclose(v[:, 0], v[:, 3])


def test_catalog(group):
    for name in ("identity", "bessel", "cos_modulated", "minus_identity"):
        s = get_symbol(name, group)
        assert s.n == 1 and s.name == name
    assert get_symbol("heat_block", group).n == 2
    with pytest.raises(KeyError):
        get_symbol("nope", group)
    with pytest.raises(ValueError):
        heat_block(group, 3)


def test_cos_modulated_is_band_one(su2):
    s = cos_modulated(su2)
    grid = su2.build_grid(2)
    idx = su2.irrep(1)
    vals = s.evaluate(grid.nodes, idx).reshape(len(grid), -1)
    fh = forward_transform(GridField(grid, vals, None), 2)
    high = max(np.abs(m).max() for i, m in fh.coeffs.items() if i.band > 1)
    assert high <= 1e-12
    back = inverse_transform(fh.truncate(1), grid).samples
    assert np.allclose(back, vals, atol=1e-12)
