"""Vector-valued group Fourier transform, Plancherel and Sobolev norms.

Conventions: ``u_hat(xi) = int u(x) xi(x)^* dx`` over the Haar probability
measure and ``u(x) = sum_xi d_xi Tr(xi(x) u_hat(xi))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GroupMismatchError, PrecisionError
from .groups import CompactGroup, GroupGrid, IrrepIndex

__all__ = [
    "GridField",
    "SpectralField",
    "forward_transform",
    "inverse_transform",
    "synthesize",
    "plancherel_norm",
    "l2_norm",
    "sobolev_norm",
    "inner_product",
    "spectral_inner_product",
    "random_spectral_field",
    "packing",
]


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples of ``u: G -> C^n`` at the nodes of a grid.

    ``band`` certifies that the field is band-limited (``None``: unknown).
    """

    grid: GroupGrid
    samples: np.ndarray
    band: int | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] != len(self.grid):
            raise ValueError(
                f"samples must have shape (nodes={len(self.grid)}, n), got {s.shape}"
            )
        object.__setattr__(self, "samples", s)

    @property
    def group(self) -> CompactGroup:
        return self.grid.group

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    def _combine(self, other: "GridField", op) -> "GridField":
        if other.grid is not self.grid:
            raise GroupMismatchError("fields live on different grids")
        band = None if self.band is None or other.band is None else max(self.band, other.band)
        return GridField(self.grid, op(self.samples, other.samples), band)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return GridField(self.grid, self.samples * c, self.band)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier data ``{u_hat_i(xi)}``: per irrep an array of shape ``(n, d, d)``."""

    group: CompactGroup
    n: int
    band: int
    coeffs: dict
    warnings: tuple = field(default=())

    def __post_init__(self):
        full = {}
        for idx in self.group.irreps(self.band):
            c = self.coeffs.get(idx)
            if c is None:
                c = np.zeros((self.n, idx.dim, idx.dim), dtype=complex)
            c = np.asarray(c, dtype=complex)
            if c.shape != (self.n, idx.dim, idx.dim):
                raise ValueError(f"coefficient at {idx} has shape {c.shape}")
            full[idx] = c
        extra = set(self.coeffs) - set(full)
        if extra:
            raise ValueError(f"irreps outside band {self.band}: {sorted(map(repr, extra))}")
        object.__setattr__(self, "coeffs", full)

    @classmethod
    def zeros(cls, group: CompactGroup, n: int, band: int) -> "SpectralField":
        return cls(group, n, band, {})

    def __getitem__(self, idx: IrrepIndex) -> np.ndarray:
        return self.coeffs[idx]

    def irreps(self) -> list[IrrepIndex]:
        return list(self.coeffs)

    def map(self, fn) -> "SpectralField":
        return SpectralField(self.group, self.n, self.band, {k: fn(k, v) for k, v in self.coeffs.items()})

    def _check(self, other: "SpectralField") -> None:
        if other.group != self.group or other.n != self.n or other.band != self.band:
            raise GroupMismatchError("spectral fields have different group/n/band")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.group, self.n, self.band, {k: v + other.coeffs[k] for k, v in self.coeffs.items()})

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.group, self.n, self.band, {k: v - other.coeffs[k] for k, v in self.coeffs.items()})

    def __mul__(self, c):
        return SpectralField(self.group, self.n, self.band, {k: v * c for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.group, 1, self.band, {k: v[i : i + 1] for k, v in self.coeffs.items()})

    def truncate(self, band: int) -> "SpectralField":
        keep = {k: v for k, v in self.coeffs.items() if k.band <= band}
        return SpectralField(self.group, self.n, min(band, self.band), keep, self.warnings)

    def extend(self, band: int) -> "SpectralField":
        """Zero-pad to a larger band."""
        return SpectralField(self.group, self.n, max(band, self.band), dict(self.coeffs), self.warnings)

    def max_abs_diff(self, other: "SpectralField") -> float:
        self._check(other)
        return max(float(np.max(np.abs(v - other.coeffs[k]))) for k, v in self.coeffs.items())

    def to_vector(self) -> np.ndarray:
        """Pack irrep-major, then fiber index, then column-major matrix entries."""
        return np.concatenate([v.transpose(0, 2, 1).reshape(-1) for v in self.coeffs.values()])

    @classmethod
    def from_vector(cls, group: CompactGroup, n: int, band: int, vec) -> "SpectralField":
        vec = np.asarray(vec, dtype=complex)
        coeffs, pos = {}, 0
        for idx in group.irreps(band):
            d = idx.dim
            size = n * d * d
            coeffs[idx] = vec[pos : pos + size].reshape(n, d, d).transpose(0, 2, 1)
            pos += size
        if pos != vec.size:
            raise ValueError(f"vector length {vec.size} does not match packing size {pos}")
        return cls(group, n, band, coeffs)


def packing(group: CompactGroup, n: int, band: int) -> list[dict]:
    """Packing manifest: one entry per coefficient slot, in vector order."""
    out, pos = [], 0
    for idx in group.irreps(band):
        d = idx.dim
        for i in range(n):
            for col in range(d):
                for row in range(d):
                    out.append({"offset": pos, "irrep": idx, "fiber": i, "row": row, "col": col})
                    pos += 1
    return out


def forward_transform(u: GridField, band: int) -> SpectralField:
    """Quadrature of ``u_i(x) xi(x)^*`` for every irrep up to ``band``."""
    grid = u.grid
    if band < 0:
        raise ValueError(f"band must be nonnegative, got {band}")
    grid.require(band, "forward transform")
    notes = []
    if u.band is None:
        notes.append("input not certified band-limited; coefficients may alias")
    elif u.band + band > grid.exact_band:
        notes.append(
            f"input band {u.band} + output band {band} exceeds grid exactness {grid.exact_band}; coefficients alias"
        )
    wu = grid.weights[:, None] * u.samples
    coeffs = {}
    for idx in grid.group.irreps(band):
        D = grid.rep(idx)
        coeffs[idx] = np.einsum("xi,xba->iab", wu, D.conj())
    return SpectralField(grid.group, u.n, band, coeffs, tuple(notes))


def synthesize(uh: SpectralField, points) -> np.ndarray:
    """Evaluate the Fourier series at arbitrary points, shape ``(M, n)``."""
    points = np.asarray(points)
    out = None
    for idx, c in uh.coeffs.items():
        D = uh.group.rep(idx, points)
        term = idx.dim * np.einsum("...ab,iba->...i", D, c)
        out = term if out is None else out + term
    return out


def inverse_transform(uh: SpectralField, grid: GroupGrid) -> GridField:
    if grid.group != uh.group:
        raise GroupMismatchError(f"grid on {grid.group}, field on {uh.group}")
    samples = np.zeros((len(grid), uh.n), dtype=complex)
    for idx, c in uh.coeffs.items():
        samples += idx.dim * np.einsum("xab,iba->xi", grid.rep(idx), c)
    return GridField(grid, samples, uh.band)


def sobolev_norm(uh: SpectralField, s: float) -> float:
    total = 0.0
    for idx, c in uh.coeffs.items():
        total += idx.dim * idx.weight ** (2 * s) * float(np.sum(np.abs(c) ** 2))
    return float(np.sqrt(total))


def plancherel_norm(uh: SpectralField) -> float:
    return sobolev_norm(uh, 0.0)


def l2_norm(u: GridField) -> float:
    return float(np.sqrt(np.real(u.grid.integrate(np.sum(np.abs(u.samples) ** 2, axis=1)))))


def inner_product(u: GridField, v: GridField) -> complex:
    """``(u, v) = int <u(x), v(x)>_{C^n} dx``, linear in ``u``."""
    if u.grid is not v.grid:
        raise GroupMismatchError("fields live on different grids")
    return complex(u.grid.integrate(np.sum(u.samples * v.samples.conj(), axis=1)))


def spectral_inner_product(uh: SpectralField, vh: SpectralField) -> complex:
    uh._check(vh)
    total = 0j
    for idx, c in uh.coeffs.items():
        total += idx.dim * np.vdot(vh.coeffs[idx], c)
    return complex(total)


def random_spectral_field(
    group: CompactGroup,
    n: int,
    band: int,
    rng: np.random.Generator,
    decay: float = 0.0,
) -> SpectralField:
    """Complex Gaussian coefficients scaled by ``<xi>^(-decay)``."""
    coeffs = {}
    for idx in group.irreps(band):
        d = idx.dim
        c = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
        coeffs[idx] = c * idx.weight ** (-decay) / np.sqrt(2 * d)
    return SpectralField(group, n, band, coeffs)


def require_band(uh: SpectralField, grid: GroupGrid, extra: int = 0) -> None:
    if uh.band + extra > grid.band:
        raise PrecisionError(f"field band {uh.band} + {extra} exceeds grid band {grid.band}")
