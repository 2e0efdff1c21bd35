"""Quantization of symbols and amplitudes, symbol extraction and the dense-matrix oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from .errors import ContractError, GroupMismatchError, PrecisionError
from .groups import CompactGroup, GroupGrid, IrrepIndex
from .spectral import (
    GridField,
    SpectralField,
    forward_transform,
    inverse_transform,
    packing,
    random_spectral_field,
    sobolev_norm,
)
from .symbols import (
    Amplitude,
    DifferenceFamily,
    MatrixSymbol,
    _multi_indices,
    apply_difference_to_symbol,
    left_derivative,
    standard_family,
    tabulated_symbol,
)

__all__ = [
    "op_apply",
    "amplitude_apply",
    "extract_symbol",
    "DenseOperator",
    "dense_matrix",
    "dense_apply",
    "adjoint",
    "AsymptoticReport",
    "asymptotic_check",
    "exact_symbol",
    "boundedness_ratio",
]

Operator = Callable[[GridField], GridField]


def op_apply(sigma: MatrixSymbol, uh: SpectralField, grid: GroupGrid, points=None) -> GridField | np.ndarray:
    """``(Op(sigma) u)_r(x) = sum_eta d_eta Tr[eta(x) sum_i sigma(i, r, x, eta) u_i(eta)]``.

    Evaluated at the grid nodes (a :class:`GridField`) or, if ``points`` is
    given, at those points (an array of shape ``(M, n)``).
    """
    if sigma.group != uh.group or grid.group != uh.group:
        raise GroupMismatchError("symbol, field and grid must share a group")
    if sigma.n != uh.n:
        raise ValueError(f"symbol has n={sigma.n}, field has n={uh.n}")
    pts = grid.nodes if points is None else np.asarray(points)
    out = np.zeros((len(pts), uh.n), dtype=complex)
    for idx, c in uh.coeffs.items():
        if not np.any(c):
            continue
        S = sigma.evaluate(pts, idx)
        D = grid.rep(idx) if points is None else uh.group.rep(idx, pts)
        if sigma.multiplier:
            # sum_i sigma(i, r, eta) u_i(eta) is x-independent
            M = np.einsum("irbc,ica->rba", S[0], c)
            out += idx.dim * np.einsum("xab,rba->xr", D, M)
        else:
            out += idx.dim * np.einsum("xab,xirbc,ica->xr", D, S, c)
    if points is not None:
        return out
    band = None if sigma.x_band is None else uh.band + sigma.x_band
    return GridField(grid, out, band)


def amplitude_apply(
    a: Amplitude,
    u: GridField,
    band: int | None = None,
    points=None,
    chunk: int = 64,
) -> GridField | np.ndarray:
    """Amplitude operator: per ``eta`` the y-integral ``int a(x, y, eta) u(y) eta(y)^* dy``, then the eta sum.

    ``band`` bounds the eta sum (default: band of ``u`` plus the y-band of ``a``).
    """
    grid = u.grid
    if a.group != grid.group:
        raise GroupMismatchError("amplitude and field live on different groups")
    if u.band is None and band is None:
        raise PrecisionError("field band unknown; pass band explicitly")
    if band is None:
        if a.y_band is None:
            raise PrecisionError("amplitude y-band unknown; pass band explicitly")
        band = u.band + a.y_band
    if u.band is not None and a.y_band is not None and a.y_band + u.band + band > grid.exact_band:
        raise PrecisionError(
            f"y-quadrature needs exactness {a.y_band + u.band + band}, grid offers {grid.exact_band}"
        )
    pts = grid.nodes if points is None else np.asarray(points)
    ys, w = grid.nodes, grid.weights
    out = np.zeros((len(pts), a.n), dtype=complex)
    for idx in grid.group.irreps(band):
        Dy = grid.rep(idx)
        # V[y, i, b, c] = w_y u_i(y) (eta(y)^*)_{bc}
        V = np.einsum("y,yi,ycb->yibc", w, u.samples, Dy.conj())
        Dx = grid.group.rep(idx, pts)
        for s in range(0, len(pts), chunk):
            A = a.evaluate(pts[s : s + chunk], ys, idx)
            inner = np.einsum("xyirab,yibc->xrac", A, V)
            out[s : s + chunk] += idx.dim * np.einsum("xca,xrac->xr", Dx[s : s + chunk], inner)
    if points is not None:
        return out
    xb = None if a.x_band is None else band + a.x_band
    return GridField(grid, out, xb)


def _check_linear(A: Operator, group: CompactGroup, n: int, band: int, grid: GroupGrid, rng) -> None:
    u = inverse_transform(random_spectral_field(group, n, band, rng), grid)
    v = inverse_transform(random_spectral_field(group, n, band, rng), grid)
    al, be = complex(rng.standard_normal(), rng.standard_normal()), complex(rng.standard_normal(), 0.7)
    lhs = A(GridField(grid, al * u.samples + be * v.samples, band)).samples
    rhs = al * A(u).samples + be * A(v).samples
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if np.max(np.abs(lhs - rhs)) > 1e-8 * scale:
        raise ContractError(f"operator is not linear (defect {np.max(np.abs(lhs - rhs)):.2e})")


def _basis_field(grid: GroupGrid, n: int, idx: IrrepIndex, i: int, a: int, b: int, band: int) -> GridField:
    s = np.zeros((len(grid), n), dtype=complex)
    s[:, i] = grid.rep(idx)[:, a, b]
    return GridField(grid, s, band)


def extract_symbol(
    A: Operator,
    group: CompactGroup,
    n: int,
    band: int,
    grid: GroupGrid | None = None,
    seed: int = 0,
    order: float = 0.0,
) -> MatrixSymbol:
    """``sigma_A(i, r, x, xi) = xi(x)^* [A(xi e_i)]_r(x)`` tabulated at the grid nodes."""
    grid = grid or group.build_grid(band)
    _check_linear(A, group, n, band, grid, np.random.default_rng(seed))
    table = {}
    for idx in group.irreps(band):
        d = idx.dim
        img = np.empty((len(grid), n, n, d, d), dtype=complex)  # [x, i, r, a, b]
        for i in range(n):
            for a in range(d):
                for b in range(d):
                    img[:, i, :, a, b] = A(_basis_field(grid, n, idx, i, a, b, idx.band)).samples
        Dh = grid.rep(idx).conj().swapaxes(-1, -2)
        table[idx] = np.einsum("xab,xirbc->xirac", Dh, img)
    return tabulated_symbol(group, n, grid.nodes, table, order, name="extracted")


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Truncated operator on the packed coefficient vector, in the sqrt(d)-weighted basis.

    In that basis the Plancherel inner product is the Euclidean one, so
    :func:`adjoint` is the conjugate transpose.
    """

    group: CompactGroup
    n: int
    band: int
    matrix: np.ndarray
    manifest: list = field(default_factory=list, repr=False)

    @property
    def weights(self) -> np.ndarray:
        """``sqrt(d_xi)`` per packed slot."""
        return np.concatenate([np.full(self.n * i.dim**2, np.sqrt(i.dim)) for i in self.group.irreps(self.band)])

    @property
    def sobolev_weights(self) -> np.ndarray:
        return np.concatenate([np.full(self.n * i.dim**2, i.weight) for i in self.group.irreps(self.band)])

    def apply(self, uh: SpectralField) -> SpectralField:
        if uh.group != self.group or uh.n != self.n or uh.band != self.band:
            raise GroupMismatchError("field does not match the dense operator's space")
        w = self.weights
        out = self.matrix @ (w * uh.to_vector()) / w
        return SpectralField.from_vector(self.group, self.n, self.band, out)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.group, self.n, self.band, self.matrix @ other.matrix, self.manifest)


def _packed_weights(group: CompactGroup, n: int, band: int) -> np.ndarray:
    return np.concatenate([np.full(n * i.dim**2, np.sqrt(i.dim)) for i in group.irreps(band)])


def _dense_from_symbol(sigma: MatrixSymbol, band: int, grid: GroupGrid) -> np.ndarray:
    group, n = sigma.group, sigma.n
    irreps = group.irreps(band)
    sizes = [n * i.dim**2 for i in irreps]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    M = np.zeros((offs[-1], offs[-1]), dtype=complex)
    N = len(grid)
    # R[x, (xi, e, c)] = w_x conj(xi(x)_{ec})
    R = np.concatenate([(grid.weights[:, None, None] * grid.rep(xi).conj()).reshape(N, -1) for xi in irreps], axis=1)
    roffs = np.concatenate([[0], np.cumsum([xi.dim**2 for xi in irreps])])
    for col, eta in enumerate(irreps):
        S = np.broadcast_to(sigma.evaluate(grid.nodes, eta), (N, n, n, eta.dim, eta.dim))
        # T[x, i, r, b, a] = (eta(x) sigma(i, r, x, eta))_{ba}
        T = np.einsum("xbc,xirca->xirba", grid.rep(eta), S).reshape(N, -1)
        rows = [col] if sigma.multiplier else range(len(irreps))
        for row in rows:
            d = irreps[row].dim
            blk = eta.dim * (R[:, roffs[row] : roffs[row + 1]].T @ T)
            # entry (c, e) of output fiber r packs as (r, e, c); entry (a, b) of input fiber i as (i, b, a)
            blk = blk.reshape(d, d, n, n, eta.dim, eta.dim).transpose(3, 0, 1, 2, 4, 5)
            M[offs[row] : offs[row + 1], offs[col] : offs[col + 1]] = blk.reshape(sizes[row], sizes[col])
    return M


def _dense_from_operator(A: Operator, group: CompactGroup, n: int, band: int, grid: GroupGrid) -> np.ndarray:
    size = sum(n * i.dim**2 for i in group.irreps(band))
    M = np.zeros((size, size), dtype=complex)
    for j in range(size):
        e = np.zeros(size)
        e[j] = 1.0
        uh = SpectralField.from_vector(group, n, band, e)
        M[:, j] = forward_transform(A(inverse_transform(uh, grid)), band).to_vector()
    return M


def dense_matrix(
    obj: MatrixSymbol | Operator,
    band: int,
    grid: GroupGrid | None = None,
    group: CompactGroup | None = None,
    n: int | None = None,
) -> DenseOperator:
    """``P_B Op P_B`` as a matrix; for a black-box operator pass ``group`` and ``n``."""
    if isinstance(obj, MatrixSymbol):
        group, n = obj.group, obj.n
        if grid is None:
            if obj.x_band is None:
                raise PrecisionError("symbol x-band unknown; pass the grid it is tabulated on")
            grid = group.build_grid(band + obj.x_band)
        U = _dense_from_symbol(obj, band, grid)
    else:
        if group is None or n is None:
            raise ValueError("black-box operators need group and n")
        grid = grid or group.build_grid(band + 1)
        U = _dense_from_operator(obj, group, n, band, grid)
    w = _packed_weights(group, n, band)
    return DenseOperator(group, n, band, w[:, None] * U / w[None, :], packing(group, n, band))


def dense_apply(D: DenseOperator, uh: SpectralField) -> SpectralField:
    return D.apply(uh)


def adjoint(D: DenseOperator) -> DenseOperator:
    return DenseOperator(D.group, D.n, D.band, D.matrix.conj().T, D.manifest)


# --- asymptotics ---------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticReport:
    N: int
    weights: np.ndarray
    errors: np.ndarray
    exponent: float
    exact: bool
    bands: tuple

    def summary(self) -> dict:
        return {
            "N": self.N,
            "exponent": self.exponent,
            "exact": self.exact,
            "bands": list(self.bands),
            "max_error": float(self.errors.max()),
        }


def exact_symbol(a: Amplitude, xi: IrrepIndex, points) -> np.ndarray:
    """Symbol of ``Op(a)`` at ``xi`` and the given points, shape ``(M, n, n, d, d)``.

    Computed as ``xi(x)^* Op(a)(xi e_i)(x)`` with a y-grid exact for the data.
    """
    group = a.group
    if a.y_band is None:
        raise PrecisionError("exact symbol needs a certified y-band")
    band = xi.band + a.y_band
    grid = group.build_grid(band)
    pts = np.asarray(points)
    d, n = xi.dim, a.n
    img = np.empty((len(pts), n, n, d, d), dtype=complex)
    for i in range(n):
        for p in range(d):
            for q in range(d):
                u = _basis_field(grid, n, xi, i, p, q, xi.band)
                img[:, i, :, p, q] = amplitude_apply(a, u, band=band, points=pts)
    Dh = group.rep(xi, pts).conj().swapaxes(-1, -2)
    return np.einsum("xab,xirbc->xirac", Dh, img)


def _expansion_terms(a: Amplitude, x: np.ndarray, N: int, band: int, family: DifferenceFamily) -> dict:
    """``sum_{|alpha| < N} (1/alpha!) d_y^alpha Delta^alpha a(x, y, .)|_{y=x}`` at irreps up to ``band``."""
    group = a.group
    frozen = MatrixSymbol(
        group, a.n, lambda ys, idx: a.evaluate(x[None], ys, idx)[0], a.order, a.rho, a.delta,
        False, a.y_band, a.max_band, f"{a.name}|x",
    )
    total = {idx: frozen.evaluate(x[None], idx)[0] for idx in group.irreps(band)}
    for order in range(1, N):
        for alpha in _multi_indices(group.dim, order):
            s = frozen
            for j in reversed(range(group.dim)):
                for _ in range(alpha[j]):
                    s = left_derivative(j, s, family)
            s = apply_difference_to_symbol(family.q_alpha(alpha), s, band, points=x[None])
            c = 1.0 / np.prod([factorial(k) for k in alpha])
            for idx in total:
                total[idx] = total[idx] + c * s.evaluate(x[None], idx)[0]
    return total


def _opnorm(block: np.ndarray) -> float:
    n, d = block.shape[0], block.shape[-1]
    mat = block.transpose(1, 2, 0, 3).reshape(n * d, n * d)
    return float(np.linalg.norm(mat, 2))


def asymptotic_check(
    a: Amplitude,
    N: int,
    bands: tuple = (8, 32),
    family: DifferenceFamily | None = None,
    points=None,
    exact_tol: float = 1e-12,
) -> AsymptoticReport:
    """Compare the symbol of ``Op(a)`` with its ``N``-term expansion over irreps in ``bands``.

    Errors are the sup over ``points`` of the block operator norm. The decay
    exponent is the least-squares slope of log(error) against log<xi>; if every
    error is below ``exact_tol`` the expansion is exact and the exponent is -inf.
    """
    group = a.group
    family = family or standard_family(group)
    lo, hi = bands
    irreps = [i for i in group.irreps(hi) if i.band >= lo]
    ws = np.array([i.weight for i in irreps])
    if len(np.unique(np.round(ws, 12))) < 4:
        raise ValueError("asymptotic fit needs at least 4 distinct <xi> values")
    if points is None:
        points = group.build_grid(2).nodes[:: max(1, len(group.build_grid(2)) // 8)]
    points = np.asarray(points)
    errs = np.zeros(len(irreps))
    for x in points:
        approx = _expansion_terms(a, x, N, hi, family)
        for k, idx in enumerate(irreps):
            exact = exact_symbol(a, idx, x[None])[0]
            errs[k] = max(errs[k], _opnorm(exact - approx[idx]))
    if np.all(errs <= exact_tol):
        return AsymptoticReport(N, ws, errs, float("-inf"), True, bands)
    keep = errs > exact_tol
    slope = np.polyfit(np.log(ws[keep]), np.log(errs[keep]), 1)[0]
    return AsymptoticReport(N, ws, errs, float(slope), False, bands)


def boundedness_ratio(
    sigma: MatrixSymbol,
    s: float,
    trials: int = 20,
    band: int = 8,
    rng: np.random.Generator | None = None,
    grid: GroupGrid | None = None,
) -> float:
    """Empirical sup of ``||Op(sigma) u||_{H^(s-m)} / ||u||_{H^s}`` over random band-limited ``u``.

    The output is projected onto the same band (truncated space).
    """
    rng = rng or np.random.default_rng(0)
    D = dense_matrix(sigma, band, grid)
    worst = 0.0
    for _ in range(trials):
        uh = random_spectral_field(sigma.group, sigma.n, band, rng)
        vh = D.apply(uh)
        worst = max(worst, sobolev_norm(vh, s - sigma.order) / sobolev_norm(uh, s))
    return worst
