"""Matrix-valued symbols and amplitudes, difference operators, Taylor expansion.

A symbol is evaluated in batches: ``sigma.evaluate(points, xi)`` returns an
array of shape ``(N, n, n, d, d)`` indexed ``[node, i, r, :, :]``, where input
fiber ``i`` maps to output fiber ``r``. The operator-oriented block matrix used
for positivity and for evolution has block ``(r, i) = sigma(i, r)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, GroupMismatchError, NumericalError, PrecisionError
from .groups import CompactGroup, GroupGrid, IrrepIndex
from .spectral import GridField, SpectralField, forward_transform, inverse_transform, synthesize

__all__ = [
    "MatrixSymbol",
    "Amplitude",
    "ScalarFunction",
    "DifferenceFamily",
    "multiplier_symbol",
    "tabulated_symbol",
    "standard_family",
    "apply_difference",
    "apply_difference_to_symbol",
    "left_derivative",
    "seminorm_estimate",
    "taylor_expand",
    "parity_decompose",
    "is_central",
    "integral",
]

FD_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class MatrixSymbol:
    """Symbol ``sigma(i, r, x, xi)`` with class metadata ``(m, rho, delta)``.

    ``x_band`` certifies band-limitedness in ``x`` (0 for multipliers, ``None``
    when unknown); ``max_band`` is the largest irrep band the evaluator covers.
    """

    group: CompactGroup
    n: int
    evaluator: Callable[[np.ndarray, IrrepIndex], np.ndarray]
    order: float = 0.0
    rho: float = 1.0
    delta: float = 0.0
    multiplier: bool = False
    x_band: int | None = None
    max_band: int | None = None
    name: str = ""

    def __post_init__(self):
        if self.multiplier:
            object.__setattr__(self, "x_band", 0)
            idx = self.group.irreps(0)[0]
            pts = np.stack([self.group.identity(), self.group.special_points()[-1]])
            if self.max_band is None or self.max_band >= 0:
                vals = self.evaluator(pts, idx)
                if not np.allclose(vals[0], vals[1], rtol=0, atol=1e-12):
                    raise ValueError(f"multiplier symbol {self.name!r} depends on x")

    def evaluate(self, points, idx: IrrepIndex) -> np.ndarray:
        if idx.group != self.group:
            raise GroupMismatchError(f"{idx} is not an irrep of {self.group}")
        if self.max_band is not None and idx.band > self.max_band:
            raise PrecisionError(
                f"symbol {self.name!r} is only evaluable up to band {self.max_band}, requested {idx.band}"
            )
        points = np.asarray(points)
        single = points.ndim == 1
        pts = points[None] if single else points
        out = np.asarray(self.evaluator(pts, idx), dtype=complex)
        expected = (len(pts), self.n, self.n, idx.dim, idx.dim)
        if out.shape != expected:
            out = np.broadcast_to(out, expected)
        return out[0] if single else out

    def __call__(self, i: int, r: int, x, idx: IrrepIndex) -> np.ndarray:
        return self.evaluate(np.asarray(x), idx)[..., i, r, :, :]

    def block(self, points, idx: IrrepIndex) -> np.ndarray:
        """Operator-oriented ``(n d) x (n d)`` block matrices, block ``(r, i) = sigma(i, r)``."""
        vals = self.evaluate(points, idx)
        d = idx.dim
        blk = np.swapaxes(vals, -4, -3)  # [..., r, i, a, b]
        blk = np.swapaxes(blk, -3, -2)  # [..., r, a, i, b]
        return blk.reshape(blk.shape[:-4] + (self.n * d, self.n * d))

    def scaled(self, c: complex) -> "MatrixSymbol":
        return _derived(self, lambda x, idx: c * self.evaluate(x, idx), name=f"{c}*{self.name}")

    def shifted(self, c: float) -> "MatrixSymbol":
        """``sigma + c * Id``."""

        def ev(x, idx):
            out = self.evaluate(x, idx).copy()
            eye = np.eye(self.n)[:, :, None, None] * np.eye(idx.dim)
            return out + c * eye
        return _derived(self, ev, name=f"{self.name}+{c}")

    def conjugated(self, U: np.ndarray) -> "MatrixSymbol":
        """Change of fiber basis: ``sigma -> (U kron Id) sigma (U kron Id)^*`` (operator orientation)."""
        U = np.asarray(U, dtype=complex)

        def ev(x, idx):
            vals = self.evaluate(x, idx)
            # operator matrix O[r, i] = vals[i, r]; O' = U O U^*  =>  vals'[i, r] = O'[r, i]
            O = np.swapaxes(vals, -4, -3)
            O2 = np.einsum("rs,...stab,it->...riab", U, O, U.conj())
            return np.swapaxes(O2, -4, -3)
        return _derived(self, ev, name=f"U.{self.name}")


def _derived(base: MatrixSymbol, evaluator, name: str) -> MatrixSymbol:
    return MatrixSymbol(
        base.group, base.n, evaluator, base.order, base.rho, base.delta,
        base.multiplier, base.x_band, base.max_band, name,
    )


def multiplier_symbol(
    group: CompactGroup,
    n: int,
    fn: Callable[[IrrepIndex], np.ndarray],
    order: float = 0.0,
    rho: float = 1.0,
    delta: float = 0.0,
    name: str = "",
    max_band: int | None = None,
) -> MatrixSymbol:
    """x-independent symbol from ``fn(xi) -> (n, n, d, d)``."""

    def ev(points, idx):
        val = np.asarray(fn(idx), dtype=complex)
        return np.broadcast_to(val, (len(points),) + val.shape)

    return MatrixSymbol(group, n, ev, order, rho, delta, True, 0, max_band, name)


def tabulated_symbol(
    group: CompactGroup,
    n: int,
    points: np.ndarray,
    table: dict,
    order: float = 0.0,
    rho: float = 1.0,
    delta: float = 0.0,
    name: str = "table",
    x_band: int | None = None,
) -> MatrixSymbol:
    """Symbol sampled at fixed points; evaluating elsewhere raises."""
    points = np.asarray(points)
    max_band = max(idx.band for idx in table)
    missing = [i for i in group.irreps(max_band) if i not in table]
    if missing:
        max_band = min(i.band for i in missing) - 1

    def ev(pts, idx):
        if pts.shape != points.shape or not np.allclose(pts, points, rtol=0, atol=1e-13):
            raise PrecisionError(f"tabulated symbol {name!r} evaluated off its sample points")
        return table[idx]

    return MatrixSymbol(group, n, ev, order, rho, delta, False, x_band, max_band, name)


@dataclass(frozen=True, eq=False)
class Amplitude:
    """Amplitude ``a(i, r, x, y, xi)``; ``evaluate(xs, ys, xi)`` has shape ``(N, M, n, n, d, d)``."""

    group: CompactGroup
    n: int
    evaluator: Callable[[np.ndarray, np.ndarray, IrrepIndex], np.ndarray]
    order: float = 0.0
    rho: float = 1.0
    delta: float = 0.0
    x_band: int | None = None
    y_band: int | None = None
    name: str = ""
    max_band: int | None = None

    def evaluate(self, xs, ys, idx: IrrepIndex) -> np.ndarray:
        if self.max_band is not None and idx.band > self.max_band:
            raise PrecisionError(f"amplitude {self.name!r} only evaluable up to band {self.max_band}")
        xs, ys = np.asarray(xs), np.asarray(ys)
        out = np.asarray(self.evaluator(xs, ys, idx), dtype=complex)
        shape = (len(xs), len(ys), self.n, self.n, idx.dim, idx.dim)
        return np.broadcast_to(out, shape)

    @classmethod
    def from_symbol(cls, sigma: MatrixSymbol) -> "Amplitude":
        def ev(xs, ys, idx):
            vals = sigma.evaluate(xs, idx)
            return np.broadcast_to(vals[:, None], (len(xs), len(ys)) + vals.shape[1:])

        return cls(sigma.group, sigma.n, ev, sigma.order, sigma.rho, sigma.delta,
                   sigma.x_band, 0, f"amp({sigma.name})", sigma.max_band)

    @classmethod
    def separable(
        cls,
        group: CompactGroup,
        n: int,
        y_factor: Callable[[np.ndarray], np.ndarray],
        xi_factor: Callable[[IrrepIndex], np.ndarray],
        order: float = 0.0,
        y_band: int | None = None,
        name: str = "",
    ) -> "Amplitude":
        """``a(i, r, x, y, xi) = g(y) * s(xi)`` with ``s(xi)`` of shape ``(n, n, d, d)``."""

        def ev(xs, ys, idx):
            g = np.asarray(y_factor(ys), dtype=complex)
            s = np.asarray(xi_factor(idx), dtype=complex)
            return np.broadcast_to(g[None, :, None, None, None, None] * s, (len(xs), len(ys)) + s.shape)

        return cls(group, n, ev, order, 1.0, 0.0, 0, y_band, name)


@dataclass(frozen=True, eq=False)
class ScalarFunction:
    """Vectorised scalar function on the group, optionally band-limited."""

    group: CompactGroup
    fn: Callable[[np.ndarray], np.ndarray]
    band: int | None = None
    name: str = ""

    def __call__(self, points) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(points)), dtype=complex)

    def __mul__(self, other: "ScalarFunction") -> "ScalarFunction":
        band = None if self.band is None or other.band is None else self.band + other.band
        return ScalarFunction(self.group, lambda p: self(p) * other(p), band, f"{self.name}*{other.name}")

    def on(self, grid: GroupGrid) -> GridField:
        return GridField(grid, self(grid.nodes)[:, None], self.band)


def _one(group: CompactGroup) -> ScalarFunction:
    return ScalarFunction(group, lambda p: np.ones(len(p)), 0, "1")


def left_fd(f: Callable, group: CompactGroup, j: int, points, h: float = FD_STEP) -> np.ndarray:
    """Central difference of ``f`` along ``x exp(t X_j)`` at ``t = 0``."""
    e = np.zeros(group.dim)
    e[j] = h
    plus = f(group.mul(points, group.exp(e)))
    minus = f(group.mul(points, group.exp(-e)))
    return (plus - minus) / (2 * h)


@dataclass(frozen=True, eq=False)
class DifferenceFamily:
    """First-order difference functions ``q_1..q_d`` with admissibility report.

    ``dual[j, k]`` defines the dualised basis ``Y_j = sum_k dual[j, k] X_k``
    satisfying ``Y_j q_k(x^{-1})|_e = delta_jk``.
    """

    group: CompactGroup
    functions: tuple
    report: dict = field(default_factory=dict)
    dual: np.ndarray | None = None

    def q_alpha(self, alpha) -> ScalarFunction:
        out = _one(self.group)
        for q, a in zip(self.functions, alpha):
            for _ in range(a):
                out = out * q
        return out

    def derived_rep(self, idx: IrrepIndex, j: int) -> np.ndarray:
        """``d xi(Y_j)`` for the dualised basis."""
        return sum(self.dual[j, k] * self.group.derived_rep(idx, k) for k in range(self.group.dim))


def _check_admissible(group: CompactGroup, functions, check_band: int = 6) -> dict:
    e = group.identity()[None]
    at_e = np.array([abs(q(e)[0]) for q in functions])
    if np.any(at_e != 0):
        raise AdmissibilityError(f"difference functions do not vanish at e: {at_e}")
    grad = np.array([[left_fd(q, group, k, e)[0] for k in range(group.dim)] for q in functions])
    sv = np.linalg.svd(grad, compute_uv=False)
    rank = int(np.sum(sv > 1e-8 * max(sv.max(), 1e-300)))
    if rank != group.dim:
        raise AdmissibilityError(f"gradient rank {rank} != dim {group.dim}")
    pts = np.concatenate([group.build_grid(check_band).nodes, group.special_points()])
    far = group.distance(pts) > 1e-3
    vals = np.max(np.abs(np.stack([q(pts[far]) for q in functions])), axis=0)
    min_common = float(vals.min())
    if min_common <= 1e-6:
        raise AdmissibilityError(f"common zero away from e (max |q| = {min_common:.2e})")
    return {"rank_at_identity": rank, "singular_values": sv.tolist(), "min_common_value": min_common}


def _dualize(group: CompactGroup, functions) -> np.ndarray:
    e = group.identity()[None]
    M = np.empty((group.dim, len(functions)), dtype=complex)
    for k, q in enumerate(functions):
        qinv = lambda p, q=q: q(group.inv(p))  # noqa: E731
        for j in range(group.dim):
            M[j, k] = left_fd(qinv, group, j, e)[0]
    try:
        return np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("dualization matrix is singular") from exc


def standard_family(group: CompactGroup) -> DifferenceFamily:
    """Shipped strongly admissible family.

    Torus: ``q_j = e^{i x_j} - 1``. SU(2): ``q_+ = xi12``, ``q_- = xi21`` and
    ``q_0 = xi11 - 1`` from the spin-1/2 matrix; ``xi11 - xi22`` would share the
    common zero ``-I`` with the other two.
    """
    if group.kind == "torus":
        fns = tuple(
            ScalarFunction(group, lambda p, j=j: np.exp(1j * p[..., j]) - 1, 1, f"q{j}")
            for j in range(group.dim)
        )
    else:
        fns = (
            ScalarFunction(group, lambda p: -np.conj(p[..., 1]), 1, "q+"),
            ScalarFunction(group, lambda p: p[..., 1], 1, "q-"),
            ScalarFunction(group, lambda p: p[..., 0] - 1, 1, "q0"),
        )
    report = _check_admissible(group, fns)
    dual = _dualize(group, fns)
    return DifferenceFamily(group, fns, report, dual)


def apply_difference(q: ScalarFunction, uh: SpectralField, grid: GroupGrid, out_band: int | None = None) -> SpectralField:
    """``Delta_q u_hat = (q u)^``, computed by the physical-space round trip."""
    if q.band is None:
        raise PrecisionError(f"difference function {q.name!r} is not band-limited")
    if out_band is None:
        out_band = uh.band + q.band
        grid.require(out_band, "difference operator")
    else:
        # exactness of (q u)^ at out_band: (B_u + B_q) + out_band <= 2 * grid band
        if uh.band + q.band + out_band > grid.exact_band:
            raise PrecisionError(f"grid band {grid.band} too small for difference at band {out_band}")
        grid.require(out_band, "difference operator")
    u = inverse_transform(uh, grid)
    prod = GridField(grid, q(grid.nodes)[:, None] * u.samples, uh.band + q.band)
    return forward_transform(prod, out_band)


def _symbol_table(sigma: MatrixSymbol, points, band: int) -> SpectralField:
    """Pack ``sigma(., ., x, xi)`` for all x as one spectral field with fiber (x, i, r)."""
    pts = np.asarray(points)
    coeffs = {}
    for idx in sigma.group.irreps(band):
        vals = sigma.evaluate(pts, idx)  # (N, n, n, d, d)
        coeffs[idx] = vals.reshape(-1, idx.dim, idx.dim)
    return SpectralField(sigma.group, len(pts) * sigma.n * sigma.n, band, coeffs)


def apply_difference_to_symbol(
    q: ScalarFunction,
    sigma: MatrixSymbol,
    band: int,
    points=None,
    grid: GroupGrid | None = None,
) -> MatrixSymbol:
    """``Delta_q sigma(x, .)``: multiply the right-convolution kernel of each ``sigma(x, .)`` by ``q``.

    Multipliers stay multipliers. General symbols are tabulated at ``points``.
    """
    group = sigma.group
    if q.band is None:
        raise PrecisionError(f"difference function {q.name!r} is not band-limited")
    need = band + q.band
    if sigma.max_band is not None and sigma.max_band < need:
        raise PrecisionError(f"symbol evaluable to band {sigma.max_band} but difference needs {need}")
    if grid is None:
        grid = group.build_grid(need)
    if sigma.multiplier:
        pts = group.identity()[None]
    else:
        if points is None:
            raise ValueError("points are required for x-dependent symbols")
        pts = np.asarray(points)
    table = _symbol_table(sigma, pts, need)
    diff = apply_difference(q, table, grid, out_band=band)
    n = sigma.n
    out = {idx: c.reshape(len(pts), n, n, idx.dim, idx.dim) for idx, c in diff.coeffs.items()}
    order = sigma.order - sigma.rho
    name = f"D[{q.name}]{sigma.name}"
    if sigma.multiplier:
        return multiplier_symbol(group, n, lambda idx: out[idx][0], order, sigma.rho, sigma.delta, name, band)
    return tabulated_symbol(group, n, pts, out, order, sigma.rho, sigma.delta, name)


def _spectral_symbol_derivative(sigma: MatrixSymbol, j_coeffs: np.ndarray) -> MatrixSymbol:
    """x-derivative of a certified band-limited symbol along ``sum_k c_k X_k``, exactly."""
    group = sigma.group
    xb = sigma.x_band
    grid = group.build_grid(xb)
    cache = {}

    def ev(points, idx):
        if idx not in cache:
            vals = sigma.evaluate(grid.nodes, idx)
            field = GridField(grid, vals.reshape(len(grid), -1), xb)
            fh = forward_transform(field, xb)
            deriv = fh.map(
                lambda eta, c: np.einsum(
                    "ab,ibc->iac",
                    sum(j_coeffs[k] * group.derived_rep(eta, k) for k in range(group.dim)),
                    c,
                )
            )
            cache[idx] = deriv
        flat = synthesize(cache[idx], points)
        return flat.reshape((len(points),) + (sigma.n, sigma.n, idx.dim, idx.dim))

    return MatrixSymbol(group, sigma.n, ev, sigma.order + sigma.delta, sigma.rho, sigma.delta,
                        False, xb, sigma.max_band, f"d{sigma.name}")


def left_derivative(j: int, obj, family: DifferenceFamily | None = None, h: float = FD_STEP):
    """Left-invariant derivative along ``X_j`` (or the dualised ``Y_j`` if a family is given).

    Accepts a :class:`SpectralField` (exact, ``u_hat -> d xi(X) u_hat``), a
    band-certified :class:`GridField`, or a :class:`MatrixSymbol` (spectral in x
    when ``x_band`` is certified, central differences otherwise).
    """
    if isinstance(obj, GridField):
        if obj.band is None:
            raise PrecisionError("grid field must be band-certified for spectral differentiation")
        fh = forward_transform(obj, obj.band)
        return inverse_transform(left_derivative(j, fh, family), obj.grid)
    group = obj.group
    coeffs = np.zeros(group.dim, dtype=complex)
    if family is None:
        coeffs[j] = 1.0
    else:
        coeffs[:] = family.dual[j]
    if isinstance(obj, SpectralField):
        def act(idx, c):
            D = sum(coeffs[k] * group.derived_rep(idx, k) for k in range(group.dim) if coeffs[k] != 0)
            return np.einsum("ab,ibc->iac", D, c)
        return obj.map(act)
    if isinstance(obj, MatrixSymbol):
        if obj.multiplier:
            return multiplier_symbol(group, obj.n, lambda idx: np.zeros((obj.n, obj.n, idx.dim, idx.dim)),
                                     obj.order + obj.delta, obj.rho, obj.delta, f"d{obj.name}", obj.max_band)
        if obj.x_band is not None:
            return _spectral_symbol_derivative(obj, coeffs)

        def ev(points, idx):
            total = 0
            for k in range(group.dim):
                if coeffs[k] != 0:
                    total = total + coeffs[k] * left_fd(lambda p: obj.evaluate(p, idx), group, k, points, h)
            return total
        return MatrixSymbol(group, obj.n, ev, obj.order + obj.delta, obj.rho, obj.delta,
                            False, None, obj.max_band, f"d{obj.name}")
    raise TypeError(f"cannot differentiate {type(obj).__name__}")


def seminorm_estimate(
    sigma: MatrixSymbol,
    alpha,
    beta,
    band: int,
    family: DifferenceFamily | None = None,
    points=None,
) -> float:
    """Empirical ``sup ||Delta^alpha d^beta sigma||_op / <xi>^(m - rho|alpha| + delta|beta|)``.

    The sup runs over ``points`` (default: a band-2 grid), all irreps up to
    ``band`` and all fiber pairs. No extrapolation in the band is attempted.
    """
    group = sigma.group
    family = family or standard_family(group)
    alpha, beta = tuple(alpha), tuple(beta)
    if points is None:
        points = group.build_grid(2).nodes
    points = np.asarray(points)
    s = sigma
    for j, b in enumerate(beta):
        for _ in range(b):
            s = left_derivative(j, s, family)
    if sum(alpha) > 0:
        q = family.q_alpha(alpha)
        s = apply_difference_to_symbol(q, s, band, points)
    exponent = sigma.order - sigma.rho * sum(alpha) + sigma.delta * sum(beta)
    pts = group.identity()[None] if s.multiplier else points
    worst = 0.0
    for idx in group.irreps(band):
        vals = s.evaluate(pts, idx)
        norms = np.linalg.norm(vals, ord=2, axis=(-2, -1)) if idx.dim > 1 else np.abs(vals[..., 0, 0])
        worst = max(worst, float(norms.max()) / idx.weight**exponent)
    return worst


def _multi_indices(dim: int, order: int):
    return [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) == order]


@dataclass(frozen=True, eq=False)
class TaylorExpansion:
    """Coefficients ``(1/alpha!) d^alpha f`` and the remainder ``R_{x,N}(y)``."""

    f: SpectralField
    N: int
    family: DifferenceFamily
    coefficients: dict

    def value(self, points) -> np.ndarray:
        return synthesize(self.f, points)[:, 0]

    def partial_sum(self, x, y) -> np.ndarray:
        group = self.f.group
        x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
        total = self.value(x)
        yinv = group.inv(y)
        for alpha, c in self.coefficients.items():
            total = total + synthesize(c, x)[:, 0] * self.family.q_alpha(alpha)(yinv)
        return total

    def remainder(self, x, y) -> np.ndarray:
        group = self.f.group
        x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
        return self.value(group.mul(x, y)) - self.partial_sum(x, y)


def taylor_expand(f: SpectralField, N: int, family: DifferenceFamily | None = None) -> TaylorExpansion:
    """Group Taylor expansion in the dualised basis, ``d^alpha = Y_1^a1 ... Y_d^ad`` (rightmost first)."""
    if f.n != 1:
        raise ValueError("taylor_expand takes a scalar field")
    family = family or standard_family(f.group)
    coeffs = {}
    for order in range(1, N):
        for alpha in _multi_indices(f.group.dim, order):
            g = f
            for j in reversed(range(f.group.dim)):
                for _ in range(alpha[j]):
                    g = left_derivative(j, g, family)
            denom = np.prod([factorial(a) for a in alpha])
            coeffs[alpha] = g * (1.0 / denom)
    return TaylorExpansion(f, N, family, coeffs)


# --- parity ------------------------------------------------------------------


def parity_decompose(f: Callable, group: CompactGroup):
    """Even and odd parts under inversion, as vectorised callables."""
    even = lambda p: 0.5 * (f(p) + f(group.inv(p)))  # noqa: E731
    odd = lambda p: 0.5 * (f(p) - f(group.inv(p)))  # noqa: E731
    return even, odd


def is_central(f: Callable, group: CompactGroup, rng: np.random.Generator, trials: int = 50, tol: float = 1e-10) -> bool:
    x, y = group.random(trials, rng), group.random(trials, rng)
    return bool(np.max(np.abs(f(group.mul(x, y)) - f(group.mul(y, x)))) <= tol)


def integral(f: Callable, grid: GroupGrid) -> complex:
    return complex(grid.integrate(f(grid.nodes)))
