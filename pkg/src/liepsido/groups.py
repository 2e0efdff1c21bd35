"""Concrete compact Lie groups: the torus T^d and SU(2).

Group elements are plain numpy arrays. A torus point is a length-``d`` vector
of angles; an SU(2) point is a complex pair ``(a, b)`` standing for the matrix
``[[a, -conj(b)], [b, conj(a)]]``. Every method accepts a single point or a
batch (leading axes) and returns batched arrays.

Lie-algebra basis indices are 0-based. For SU(2) the basis is
``X_j = (i/2) sigma_j`` (Pauli matrices); with it the Casimir equals
``-l(l+1)`` on the spin-``l`` representation and ``exp(t X_j)`` has geodesic
distance ``|t|`` from the identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import comb, factorial, sqrt

import numpy as np

from .errors import DomainError, GroupMismatchError, PrecisionError

__all__ = [
    "CompactGroup",
    "Torus",
    "SU2",
    "IrrepIndex",
    "GroupGrid",
    "irrep_matrix",
    "derived_rep",
    "laplace_eigenvalue",
    "build_grid",
    "group_mul",
    "group_inv",
    "distance_to_identity",
    "exp_map",
    "log_map",
    "exp_jacobian_density",
]

_JAC_STEP = 1e-5


@dataclass(frozen=True)
class IrrepIndex:
    """One element of the unitary dual, with its Laplace data."""

    group: "CompactGroup"
    label: tuple[int, ...] | int
    dim: int = field(compare=False)
    eigenvalue: float = field(compare=False)

    @property
    def weight(self) -> float:
        return sqrt(1.0 + self.eigenvalue)

    @property
    def band(self) -> int:
        return self.group.band_of(self)

    def __repr__(self) -> str:
        return f"IrrepIndex({self.group!r}, {self.label!r})"


class CompactGroup:
    """Interface shared by the two backends."""

    dim: int
    kind: str
    injectivity_radius: float

    # --- representation theory -------------------------------------------
    def irrep(self, label) -> IrrepIndex:
        raise NotImplementedError

    def irreps(self, band: int) -> list[IrrepIndex]:
        raise NotImplementedError

    def band_of(self, idx: IrrepIndex) -> int:
        raise NotImplementedError

    def rep(self, idx: IrrepIndex, x) -> np.ndarray:
        raise NotImplementedError

    def derived_rep(self, idx: IrrepIndex, j: int) -> np.ndarray:
        raise NotImplementedError

    # --- group structure -------------------------------------------------
    def identity(self) -> np.ndarray:
        raise NotImplementedError

    def mul(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def inv(self, x) -> np.ndarray:
        raise NotImplementedError

    def distance(self, x) -> np.ndarray:
        raise NotImplementedError

    def exp(self, Z) -> np.ndarray:
        raise NotImplementedError

    def log(self, x, *, check: bool = True) -> np.ndarray:
        raise NotImplementedError

    def random(self, size: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def special_points(self) -> np.ndarray:
        """Candidate common zeros for admissibility checks."""
        raise NotImplementedError

    def build_grid(self, band: int) -> "GroupGrid":
        raise NotImplementedError

    def volume(self) -> float:
        """Riemannian volume for the metric making the Lie basis orthonormal."""
        raise NotImplementedError

    # --- shared numerics -------------------------------------------------
    def irreps_upto(self, band: int) -> list[IrrepIndex]:
        if band < 0:
            raise ValueError(f"band must be nonnegative, got {band}")
        return self.irreps(band)

    def exp_jacobian_density(self, Z, step: float = _JAC_STEP) -> np.ndarray:
        """|det| of the left-trivialised differential of exp, by central differences."""
        Z = np.asarray(Z, dtype=float)
        batch = Z.reshape(-1, self.dim)
        base_inv = self.inv(self.exp(batch))
        cols = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = step
            plus = self.log(self.mul(base_inv, self.exp(batch + e)), check=False)
            minus = self.log(self.mul(base_inv, self.exp(batch - e)), check=False)
            cols.append((plus - minus) / (2 * step))
        jac = np.stack(cols, axis=-1)
        return np.abs(np.linalg.det(jac)).reshape(Z.shape[:-1])

    def haar_density(self, Z) -> np.ndarray:
        """Density of the Haar probability measure in exponential coordinates."""
        return self.exp_jacobian_density(Z) / self.volume()

    def check_point(self, x) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Torus(CompactGroup):
    d: int = 1

    kind = "torus"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"torus dimension must be >= 1, got {self.d}")

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.d

    @property
    def injectivity_radius(self) -> float:  # type: ignore[override]
        return np.pi

    def __repr__(self) -> str:
        return f"Torus({self.d})"

    def irrep(self, label) -> IrrepIndex:
        k = tuple(int(v) for v in np.atleast_1d(label))
        if len(k) != self.d:
            raise ValueError(f"torus irrep label needs {self.d} entries, got {k}")
        return IrrepIndex(self, k, 1, float(sum(v * v for v in k)))

    def irreps(self, band: int) -> list[IrrepIndex]:
        rng = range(-band, band + 1)
        return [self.irrep(k) for k in itertools.product(rng, repeat=self.d)]

    def band_of(self, idx: IrrepIndex) -> int:
        return max(abs(v) for v in idx.label)

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 0 or x.shape[-1] != self.d or np.iscomplexobj(x):
            raise GroupMismatchError(f"expected Torus({self.d}) angles, got shape {x.shape}")
        return x.astype(float, copy=False)

    def rep(self, idx: IrrepIndex, x) -> np.ndarray:
        if idx.group != self:
            raise GroupMismatchError(f"{idx} does not belong to {self}")
        x = self.check_point(x)
        phase = np.exp(1j * (x @ np.asarray(idx.label, dtype=float)))
        return phase[..., None, None]

    def derived_rep(self, idx: IrrepIndex, j: int) -> np.ndarray:
        if not 0 <= j < self.d:
            raise IndexError(f"Lie basis index {j} out of range for {self}")
        return np.array([[1j * idx.label[j]]])

    def identity(self) -> np.ndarray:
        return np.zeros(self.d)

    def mul(self, x, y) -> np.ndarray:
        return np.mod(self.check_point(x) + self.check_point(y), 2 * np.pi)

    def inv(self, x) -> np.ndarray:
        return np.mod(-self.check_point(x), 2 * np.pi)

    def _reduce(self, x) -> np.ndarray:
        return np.mod(self.check_point(x) + np.pi, 2 * np.pi) - np.pi

    def distance(self, x) -> np.ndarray:
        return np.linalg.norm(self._reduce(x), axis=-1)

    def exp(self, Z) -> np.ndarray:
        return np.mod(np.asarray(Z, dtype=float), 2 * np.pi)

    def log(self, x, *, check: bool = True) -> np.ndarray:
        z = self._reduce(x)
        if check and np.any(np.isclose(np.abs(z), np.pi, rtol=0, atol=1e-14)):
            raise DomainError("log map undefined at the antipodal set of the torus")
        return z

    def random(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2 * np.pi, size=(size, self.d))

    def special_points(self) -> np.ndarray:
        return np.array(list(itertools.product([0.0, np.pi], repeat=self.d)))

    def build_grid(self, band: int) -> "GroupGrid":
        if band < 0:
            raise ValueError(f"band must be nonnegative, got {band}")
        m = 2 * band + 1
        axis = 2 * np.pi * np.arange(m) / m
        nodes = np.array(list(itertools.product(axis, repeat=self.d)))
        weights = np.full(len(nodes), 1.0 / len(nodes))
        return GroupGrid(self, band, nodes, weights)

    def volume(self) -> float:
        return (2 * np.pi) ** self.d


@dataclass(frozen=True)
class SU2(CompactGroup):
    kind = "su2"

    @property
    def dim(self) -> int:  # type: ignore[override]
        return 3

    @property
    def injectivity_radius(self) -> float:  # type: ignore[override]
        return np.pi

    def __repr__(self) -> str:
        return "SU2()"

    def irrep(self, label) -> IrrepIndex:
        two_l = int(label)
        if two_l < 0:
            raise ValueError(f"doubled spin must be nonnegative, got {two_l}")
        return IrrepIndex(self, two_l, two_l + 1, two_l * (two_l + 2) / 4.0)

    def irreps(self, band: int) -> list[IrrepIndex]:
        return [self.irrep(t) for t in range(band + 1)]

    def band_of(self, idx: IrrepIndex) -> int:
        return idx.label

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[-1] != 2:
            raise GroupMismatchError(f"expected SU2 pair (a, b), got shape {x.shape}")
        return x.astype(complex)

    @staticmethod
    def matrix(x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        a, b = x[..., 0], x[..., 1]
        return np.stack(
            [np.stack([a, -np.conj(b)], -1), np.stack([b, np.conj(a)], -1)], -2
        )

    def rep(self, idx: IrrepIndex, x) -> np.ndarray:
        if idx.group != self:
            raise GroupMismatchError(f"{idx} does not belong to {self}")
        x = self.check_point(x)
        return _spin_rep(idx.label, x[..., 0], x[..., 1])

    def derived_rep(self, idx: IrrepIndex, j: int) -> np.ndarray:
        if not 0 <= j < 3:
            raise IndexError(f"Lie basis index {j} out of range for SU2")
        return _spin_derived(idx.label, _SU2_BASIS[j])

    def identity(self) -> np.ndarray:
        return np.array([1.0 + 0j, 0.0 + 0j])

    def mul(self, x, y) -> np.ndarray:
        x, y = self.check_point(x), self.check_point(y)
        a, b = x[..., 0], x[..., 1]
        c, d = y[..., 0], y[..., 1]
        return np.stack([a * c - np.conj(b) * d, b * c + np.conj(a) * d], -1)

    def inv(self, x) -> np.ndarray:
        x = self.check_point(x)
        return np.stack([np.conj(x[..., 0]), -x[..., 1]], -1)

    def distance(self, x) -> np.ndarray:
        x = self.check_point(x)
        return 2 * self._half_angle(x)

    @staticmethod
    def _half_angle(x) -> np.ndarray:
        # atan2 instead of arccos(Re a): arccos loses half the digits near the identity
        a, b = x[..., 0], x[..., 1]
        return np.arctan2(np.sqrt(a.imag**2 + np.abs(b) ** 2), a.real)

    def exp(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        norm = np.linalg.norm(Z, axis=-1)
        s = 0.5 * np.sinc(norm / (2 * np.pi))  # sin(|Z|/2)/|Z|
        a = np.cos(norm / 2) + 1j * s * Z[..., 2]
        b = s * (-Z[..., 1] + 1j * Z[..., 0])
        return np.stack([a, b], -1)

    def log(self, x, *, check: bool = True) -> np.ndarray:
        x = self.check_point(x)
        a, b = x[..., 0], x[..., 1]
        half = self._half_angle(x)
        if check and np.any(2 * half >= self.injectivity_radius):
            raise DomainError("log map is only used on distance < pi from the identity")
        # |Z| / sin(|Z|/2) with |Z| = 2 * half
        scale = 2.0 / np.sinc(half / np.pi)
        return np.stack([scale * b.imag, -scale * b.real, scale * a.imag], -1)

    def random(self, size: int, rng: np.random.Generator) -> np.ndarray:
        v = rng.standard_normal((size, 2)) + 1j * rng.standard_normal((size, 2))
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def special_points(self) -> np.ndarray:
        return np.array([[1.0 + 0j, 0j], [-1.0 + 0j, 0j]])

    def build_grid(self, band: int) -> "GroupGrid":
        """Product rule in Euler-type coordinates.

        With ``cos(beta) = 1 - 2 t`` the point is ``a = sqrt(1-t) e^{i p}``,
        ``b = sqrt(t) e^{i q}``; Haar measure is ``dt dp dq / (4 pi^2)``.
        Uniform rules in ``p, q`` and Gauss-Legendre in ``t`` integrate every
        polynomial of degree ``2 * band`` in ``(a, b, conj a, conj b)``.
        """
        if band < 0:
            raise ValueError(f"band must be nonnegative, got {band}")
        m = 2 * band + 2
        k = band + 1
        t, wt = np.polynomial.legendre.leggauss(k)
        t = (t + 1) / 2
        wt = wt / 2
        ang = 2 * np.pi * np.arange(m) / m
        T, P, Q = np.meshgrid(t, ang, ang, indexing="ij")
        W = np.broadcast_to(wt[:, None, None] / m**2, T.shape)
        nodes = np.stack(
            [np.sqrt(1 - T) * np.exp(1j * P), np.sqrt(T) * np.exp(1j * Q)], -1
        ).reshape(-1, 2)
        return GroupGrid(self, band, nodes, W.reshape(-1).copy())

    @cached_property
    def _volume(self) -> float:
        # radial integral of the numerical exp-Jacobian over the ball |Z| < 2 pi,
        # on which exp is a diffeomorphism onto SU(2) minus {-I}
        x, w = np.polynomial.legendre.leggauss(96)
        r = np.pi * (x + 1)
        Z = np.zeros((len(r), 3))
        Z[:, 2] = r
        jac = self.exp_jacobian_density(Z)
        return float(4 * np.pi * np.pi * np.sum(w * jac * r**2))

    def volume(self) -> float:
        return self._volume


# Pauli basis scaled by i/2
_SU2_BASIS = (
    0.5j * np.array([[0, 1], [1, 0]], dtype=complex),
    0.5j * np.array([[0, -1j], [1j, 0]], dtype=complex),
    0.5j * np.array([[1, 0], [0, -1]], dtype=complex),
)


def _norms(two_l: int) -> np.ndarray:
    return np.array([sqrt(factorial(two_l - p) * factorial(p)) for p in range(two_l + 1)])


def _spin_rep(two_l: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Spin-(two_l/2) matrices from the action on homogeneous polynomials.

    Basis vector ``p`` is ``z1^(2l-p) z2^p / sqrt((2l-p)! p!)`` and the group
    acts by ``p(z) -> p(U^T z)``, which makes the spin-1/2 matrix equal to U.
    """
    shape = np.shape(a)
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    n = two_l + 1
    # the two linear forms in s = z2/z1: (a + b s) and (-conj(b) + conj(a) s)
    u0, u1 = a, b
    v0, v1 = -np.conj(b), np.conj(a)
    pw = lambda z: np.stack([z**k for k in range(n)], 0)  # noqa: E731
    U0, U1, V0, V1 = pw(u0), pw(u1), pw(v0), pw(v1)
    out = np.zeros((a.size, n, n), dtype=complex)
    c = _norms(two_l)
    for q in range(n):
        n1, n2 = two_l - q, q
        for s in range(n1 + 1):
            left = comb(n1, s) * U0[n1 - s] * U1[s]
            for t in range(n2 + 1):
                out[:, s + t, q] += left * comb(n2, t) * V0[n2 - t] * V1[t]
    out *= c[None, :, None] / c[None, None, :]
    return out.reshape(shape + (n, n))


def _spin_derived(two_l: int, X: np.ndarray) -> np.ndarray:
    """Differential of :func:`_spin_rep` at the identity in direction X."""
    n = two_l + 1
    A = X.T
    D = np.zeros((n, n), dtype=complex)
    for q in range(n):
        n1, n2 = two_l - q, q
        D[q, q] = n1 * A[0, 0] + n2 * A[1, 1]
        if n1 > 0:
            D[q + 1, q] = A[0, 1] * sqrt(n1 * (n2 + 1))
        if n2 > 0:
            D[q - 1, q] = A[1, 0] * sqrt(n2 * (n1 + 1))
    return D


@dataclass(frozen=True, eq=False)
class GroupGrid:
    """Quadrature nodes with Haar weights.

    ``band`` is the largest band ``B`` such that products of two matrix
    coefficients of band ``<= B`` (i.e. any function of band ``<= 2B``) are
    integrated exactly.
    """

    group: CompactGroup
    band: int
    nodes: np.ndarray
    weights: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def exact_band(self) -> int:
        return 2 * self.band

    def rep(self, idx: IrrepIndex) -> np.ndarray:
        """Cached ``xi(x)`` at every node, shape ``(N, d, d)``."""
        key = ("rep", idx)
        if key not in self._cache:
            self._cache[key] = self.group.rep(idx, self.nodes)
        return self._cache[key]

    def integrate(self, values) -> np.ndarray:
        """Quadrature over the node axis (axis 0)."""
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))

    def require(self, band: int, what: str = "request") -> None:
        if band > self.band:
            raise PrecisionError(f"{what} needs grid band >= {band}, grid has {self.band}")

    def inverse_nodes(self) -> np.ndarray:
        return self.group.inv(self.nodes)


# --- module-level operations -------------------------------------------------


def irrep_matrix(idx: IrrepIndex, x) -> np.ndarray:
    return idx.group.rep(idx, x)


def derived_rep(idx: IrrepIndex, j: int) -> np.ndarray:
    return idx.group.derived_rep(idx, j)


def laplace_eigenvalue(idx: IrrepIndex) -> float:
    return idx.eigenvalue


def build_grid(group: CompactGroup, band: int) -> GroupGrid:
    return group.build_grid(band)


def group_mul(group: CompactGroup, x, y) -> np.ndarray:
    return group.mul(x, y)


def group_inv(group: CompactGroup, x) -> np.ndarray:
    return group.inv(x)


def distance_to_identity(group: CompactGroup, x) -> np.ndarray:
    return group.distance(x)


def exp_map(group: CompactGroup, Z) -> np.ndarray:
    return group.exp(Z)


def log_map(group: CompactGroup, x) -> np.ndarray:
    return group.log(x)


def exp_jacobian_density(group: CompactGroup, Z) -> np.ndarray:
    return group.exp_jacobian_density(Z)
