"""Positivity of matrix symbols, the mollifier, the symmetrised amplitude and the lower-bound constant."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np
import scipy.linalg
from scipy.integrate import quad

from .errors import NumericalError
from .groups import CompactGroup, GroupGrid, IrrepIndex
from .quantize import dense_matrix, op_apply
from .spectral import inner_product, inverse_transform, random_spectral_field, sobolev_norm
from .symbols import Amplitude, MatrixSymbol

__all__ = [
    "PSDResult",
    "is_psd_block",
    "psd_audit",
    "cutoff",
    "Mollifier",
    "build_mollifier",
    "friedrichs_amplitude",
    "GardingReport",
    "garding_constant",
]


@dataclass(frozen=True)
class PSDResult:
    psd: bool
    min_eigenvalue: float
    hermitian_defect: float

    def __bool__(self) -> bool:
        return self.psd


def is_psd_block(sigma: MatrixSymbol, x, xi: IrrepIndex, tol: float = 1e-10) -> PSDResult:
    """Smallest eigenvalue of the Hermitian part of the ``n d x n d`` block matrix at ``(x, xi)``."""
    B = sigma.block(np.asarray(x), xi)
    H = 0.5 * (B + B.conj().T)
    lam = float(np.linalg.eigvalsh(H)[0])
    return PSDResult(lam >= -tol, lam, float(np.max(np.abs(B - H))))


def psd_audit(sigma: MatrixSymbol, band: int, points=None) -> float:
    """Worst Hermitian-part eigenvalue over ``points`` (default: a grid) and irreps up to ``band``."""
    group = sigma.group
    if sigma.multiplier:
        pts = group.identity()[None]
    elif points is None:
        pts = group.build_grid(max(band, sigma.x_band or 0, 2)).nodes
    else:
        pts = np.asarray(points)
    worst = np.inf
    for idx in group.irreps(band):
        B = sigma.block(pts, idx)
        H = 0.5 * (B + np.swapaxes(B, -1, -2).conj())
        worst = min(worst, float(np.linalg.eigvalsh(H)[..., 0].min()))
    return worst


# --- mollifier -----------------------------------------------------------------


def _smooth_step(u):
    """0 for u <= 0, 1 for u >= 1, C-infinity in between."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        e0 = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        e1 = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return e0 / (e0 + e1)


def cutoff(s, radius: float) -> np.ndarray:
    """Smooth bump: 1 on ``[0, 0.4 radius]``, 0 beyond ``radius``."""
    return _smooth_step((radius - np.asarray(s, dtype=float)) / (0.6 * radius))


def _sphere_area(d: int) -> float:
    return 2 * pi ** (d / 2) / gamma(d / 2)


@dataclass(frozen=True, eq=False)
class Mollifier:
    """``w(x) = phi(t |log x|) psi(log x) t^(dim/2)`` with ``t = <xi>^((rho+delta)/2)``.

    ``psi = C0 J^(-1/2)`` where ``J`` is the exp-Jacobian density, so that
    ``||w||_{L^2} = 1`` and ``w(e) = C0 t^(dim/2)``.
    """

    group: CompactGroup
    xi: IrrepIndex
    rho: float
    delta: float
    radius: float
    C0: float
    scale: float

    @property
    def support_radius(self) -> float:
        """Bound on ``dist(x, e)`` over the support: ``radius / scale``."""
        return self.radius / self.scale

    def profile(self, s) -> np.ndarray:
        """w as a function of ``|log x|`` along a ray, without the Jacobian factor."""
        return cutoff(self.scale * np.asarray(s), self.radius) * self.C0 * self.scale ** (self.group.dim / 2)

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points)
        g = self.group
        single = points.ndim == 1
        pts = points[None] if single else points
        rad = g.distance(pts)
        out = np.zeros(len(pts))
        inside = rad < self.support_radius
        if np.any(inside):
            Z = g.log(pts[inside], check=False)
            J = 0.5 * (g.exp_jacobian_density(Z) + g.exp_jacobian_density(-Z))
            out[inside] = self.profile(np.linalg.norm(Z, axis=-1)) / np.sqrt(J)
        return out[0] if single else out

    def on(self, grid: GroupGrid) -> np.ndarray:
        return self(grid.nodes)

    def l2_norm(self) -> float:
        """Independent norm by 1-D quadrature (radial for tori, Weyl integration formula for SU(2))."""
        g = self.group
        R = self.support_radius
        if g.kind == "su2":
            # class angle theta = |Z| / 2, Haar density (2/pi) sin^2(theta)
            def integrand(theta):
                Z = np.array([[2 * theta, 0.0, 0.0]])
                return float(self(g.exp(Z))[0] ** 2) * np.sin(theta) ** 2
            val, _ = quad(integrand, 0, R / 2, limit=200, epsabs=1e-14, epsrel=1e-12)
            return float(np.sqrt(2 / pi * val))

        def radial(s):
            return float(self.profile(s)) ** 2 * s ** (g.dim - 1)
        val, _ = quad(radial, 0, R, limit=200, epsabs=1e-14, epsrel=1e-12)
        return float(np.sqrt(_sphere_area(g.dim) * val / g.volume()))

    def measured_support(self, direction=None, samples: int = 4001) -> float:
        """Largest ``s`` on a ray ``exp(s u)`` where ``w`` is nonzero."""
        g = self.group
        u = np.zeros(g.dim) if direction is None else np.asarray(direction, dtype=float)
        if direction is None:
            u[0] = 1.0
        u = u / np.linalg.norm(u)
        s = np.linspace(0, g.injectivity_radius * 0.999, samples)
        vals = self(g.exp(s[:, None] * u))
        nz = np.nonzero(vals > 0)[0]
        return float(s[nz[-1]]) if len(nz) else 0.0


def build_mollifier(group: CompactGroup, xi: IrrepIndex, rho: float = 1.0, delta: float = 0.0) -> Mollifier:
    radius = group.injectivity_radius / 2
    scale = xi.weight ** ((rho + delta) / 2)
    d = group.dim
    phi2, _ = quad(lambda s: float(cutoff(s, radius)) ** 2 * s ** (d - 1), 0, radius, epsabs=1e-14, epsrel=1e-13)
    h0 = 1.0 / group.volume()
    C0 = 1.0 / np.sqrt(h0 * _sphere_area(d) * phi2)
    return Mollifier(group, xi, rho, delta, radius, float(C0), float(scale))


# --- symmetrised amplitude -------------------------------------------------------


def friedrichs_amplitude(
    sigma: MatrixSymbol,
    band: int,
    grid: GroupGrid | None = None,
    rho: float | None = None,
    delta: float | None = None,
) -> Amplitude:
    """``p(i, r, x, y, xi) = int w_xi(x z^-1) w_xi(y z^-1) sigma(i, r, z, xi) dz`` on a z-grid."""
    group = sigma.group
    grid = grid or group.build_grid(band + 2)
    rho = sigma.rho if rho is None else rho
    delta = sigma.delta if delta is None else delta
    moll = {idx: build_mollifier(group, idx, rho, delta) for idx in group.irreps(band)}
    zinv = grid.inverse_nodes()
    ws = grid.weights
    sym_cache = {}

    kernel_cache = {}

    def kernel(pts, idx):
        # W[p, z] = w(p z^-1), cached because amplitude_apply revisits the same node chunks
        key = (idx, pts.shape, hash(np.ascontiguousarray(pts).tobytes()))
        if key not in kernel_cache:
            if len(kernel_cache) > 256:
                kernel_cache.clear()
            P = np.repeat(pts, len(grid), axis=0)
            Zi = np.tile(zinv, (len(pts),) + (1,) * (zinv.ndim - 1))
            kernel_cache[key] = moll[idx](group.mul(P, Zi)).reshape(len(pts), len(grid))
        return kernel_cache[key]

    def ev(xs, ys, idx):
        Wx, Wy = kernel(xs, idx), kernel(ys, idx)
        if sigma.multiplier:
            K = (Wx * ws) @ Wy.T
            return K[:, :, None, None, None, None] * sigma.evaluate(group.identity()[None], idx)[0]
        if idx not in sym_cache:
            sym_cache[idx] = sigma.evaluate(grid.nodes, idx)
        S = sym_cache[idx]
        return np.einsum("xz,yz,zirab->xyirab", Wx * ws, Wy, S)

    return Amplitude(group, sigma.n, ev, sigma.order, rho, delta, None, None, f"P[{sigma.name}]", band)


# --- lower-bound constant --------------------------------------------------------


@dataclass
class GardingReport:
    symbol: str
    group: str
    band: int
    s: float
    mu_min: float
    c_est: float
    psd_min_eigenvalue: float
    psd_ok: bool
    trials: int
    violations: int
    worst_trial_margin: float
    tol: float
    seed: int
    condition: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def summary(self) -> str:
        return (
            f"{self.symbol} on {self.group} band {self.band}: C_est={self.c_est:.6g} "
            f"(mu_min={self.mu_min:.6g}, s={self.s:g}), PSD audit {'ok' if self.psd_ok else 'FAILED'} "
            f"(min eig {self.psd_min_eigenvalue:.3g}), violations {self.violations}/{self.trials}"
        )


def garding_constant(
    sigma: MatrixSymbol,
    band: int,
    s: float | None = None,
    trials: int = 100,
    seed: int = 0,
    tol: float = 1e-8,
    grid: GroupGrid | None = None,
) -> GardingReport:
    """Optimal truncated-space ``C`` in ``Re(Au, u) >= -C ||u||_{H^s}^2``.

    Solves ``S v = mu W v`` with ``S`` the Hermitian part of the dense operator
    and ``W = diag <xi>^(2s)``; ``C_est = max(0, -mu_min)``. Trials evaluate
    ``Re(Au, u)`` by quadrature on the grid, independently of the dense matrix.
    """
    if band < 2:
        raise ValueError("garding_constant needs band >= 2")
    group = sigma.group
    if s is None:
        s = (sigma.order - (sigma.rho - sigma.delta)) / 2
    if grid is None and sigma.x_band is not None:
        grid = group.build_grid(band + sigma.x_band)
    D = dense_matrix(sigma, band, grid)
    S = 0.5 * (D.matrix + D.matrix.conj().T)
    W = D.sobolev_weights ** (2 * s)
    cond = float(W.max() / W.min())
    try:
        mu = scipy.linalg.eigh(S, np.diag(W), eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"generalised eigenproblem failed (weight condition {cond:.3g})") from exc
    mu_min = float(mu[0])
    c_est = max(0.0, -mu_min)
    audit = psd_audit(sigma, band)

    rng = np.random.default_rng(seed)
    g = grid or group.build_grid(band)
    violations, worst = 0, np.inf
    for _ in range(trials):
        uh = random_spectral_field(group, sigma.n, band, rng, decay=rng.uniform(0, 2))
        u = inverse_transform(uh, g)
        lhs = inner_product(op_apply(sigma, uh, g), u).real
        rhs = -(c_est + tol) * sobolev_norm(uh, s) ** 2
        margin = (lhs - rhs) / max(sobolev_norm(uh, s) ** 2, 1e-300)
        worst = min(worst, margin)
        violations += lhs < rhs
    notes = []
    if audit >= -1e-10 and sigma.multiplier and c_est > 1e-8:
        notes.append("PSD multiplier with positive C_est: check the eigen-solver")
    return GardingReport(
        sigma.name, repr(group), band, float(s), mu_min, c_est, audit, audit >= -1e-10,
        trials, int(violations), float(worst), tol, seed, cond, notes,
    )
