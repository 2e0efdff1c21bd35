"""Verification suites: each returns a list of :class:`Check` results.

The same suites back ``liepsido verify`` and the acceptance tests. Every suite
takes optional ``group``/``band`` overrides; the defaults are the acceptance
settings.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .catalog import bessel, cos_modulated, heat_block, identity, minus_identity
from .evolution import heat_energy_audit, heat_example
from .garding import build_mollifier, friedrichs_amplitude, garding_constant
from .groups import SU2, CompactGroup, Torus
from .quantize import amplitude_apply, asymptotic_check, boundedness_ratio, dense_matrix, extract_symbol, op_apply
from .spectral import (
    GridField,
    forward_transform,
    inner_product,
    inverse_transform,
    l2_norm,
    plancherel_norm,
    random_spectral_field,
    spectral_inner_product,
    synthesize,
)
from .symbols import Amplitude, MatrixSymbol, multiplier_symbol

__all__ = ["Check", "SUITES", "run_suite", "random_symbol"]


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (threshold {self.threshold:.3e})"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": self.value,
                "threshold": self.threshold, "detail": self.detail}


def _le(name, value, threshold, **detail) -> Check:
    return Check(name, bool(value <= threshold), float(value), float(threshold), detail)


def _ge(name, value, threshold, **detail) -> Check:
    return Check(name, bool(value >= threshold), float(value), float(threshold), detail)


def _groups(group: CompactGroup | None, band: int | None, defaults):
    if group is None:
        return defaults
    return [(group, band if band is not None else dict((repr(g), b) for g, b in defaults).get(repr(group), 4))]


def random_symbol(group: CompactGroup, n: int, rng: np.random.Generator, x_dependent: bool) -> MatrixSymbol:
    """Random symbol ``A(xi) + c(x) B(xi)`` with ``c`` of band 1; entries are seeded per irrep."""
    base = int(rng.integers(2**31))

    def coeffs(idx, salt):
        key = idx.label if isinstance(idx.label, tuple) else (idx.label,)
        r = np.random.default_rng([base, salt, *[k + 1000 for k in key]])
        shape = (n, n, idx.dim, idx.dim)
        return r.standard_normal(shape) + 1j * r.standard_normal(shape)

    if not x_dependent:
        return multiplier_symbol(group, n, lambda idx: coeffs(idx, 0), name="random-multiplier")
    ch = random_spectral_field(group, 1, 1, rng)

    def ev(points, idx):
        c = synthesize(ch, points)[:, 0]
        return coeffs(idx, 0)[None] + c[:, None, None, None, None] * coeffs(idx, 1)[None]

    return MatrixSymbol(group, n, ev, 0.0, 1.0, 0.0, False, 1, None, "random-symbol")


# --- criteria ------------------------------------------------------------------------


def fourier_suite(group=None, band=None, n=2, seed=0, tol=1e-10, fields=5) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    t0 = time.perf_counter()
    for G, B in _groups(group, band, [(Torus(1), 16), (Torus(2), 8), (SU2(), 8)]):
        grid = G.build_grid(B)
        rt, pl, pv = 0.0, 0.0, 0.0
        for _ in range(fields):
            uh = random_spectral_field(G, n, B, rng)
            vh = random_spectral_field(G, n, B, rng)
            u, v = inverse_transform(uh, grid), inverse_transform(vh, grid)
            rt = max(rt, forward_transform(u, B).max_abs_diff(uh))
            pl = max(pl, abs(l2_norm(u) - plancherel_norm(uh)))
            pv = max(pv, abs(inner_product(u, v) - spectral_inner_product(uh, vh)))
        out += [
            _le(f"round trip {G} band {B}", rt, tol),
            _le(f"Plancherel {G} band {B}", pl, tol),
            _le(f"Parseval {G} band {B}", pv, tol),
        ]
    out.append(_le("fourier runtime [s]", time.perf_counter() - t0, 10.0))
    return out


def schur_suite(group=None, band=None, seed=0, tol=1e-10) -> list[Check]:
    out = []
    for G, B in _groups(group, band, [(SU2(), 4)]):
        grid = G.build_grid(B)
        worst = 0.0
        for idx in G.irreps(B):
            d = idx.dim
            for m in range(d):
                for k in range(d):
                    u = GridField(grid, np.sqrt(d) * grid.rep(idx)[:, m, k], B)
                    uh = forward_transform(u, B)
                    for jdx, c in uh.coeffs.items():
                        target = np.zeros_like(c)
                        if jdx == idx:
                            # weighted coefficient sqrt(d) * u_hat(xi)_{k m} is 1
                            target[0, k, m] = 1 / np.sqrt(d)
                        worst = max(worst, np.sqrt(jdx.dim) * float(np.max(np.abs(c - target))))
        out.append(_le(f"Schur orthogonality {G} band {B}", worst, tol))
    return out


def _multiplication(G: CompactGroup):
    if G.kind == "torus":
        fn = lambda nodes: np.exp(1j * nodes[:, 0])  # noqa: E731
    else:
        fn = lambda nodes: nodes[:, 1]  # noqa: E731

    def A(f: GridField) -> GridField:
        return GridField(f.grid, f.samples * fn(f.grid.nodes)[:, None], None if f.band is None else f.band + 1)
    return A


def quantize_suite(group=None, band=None, seed=0, tol=1e-9, fields=10) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for G, B in _groups(group, band, [(Torus(1), 8), (SU2(), 4)]):
        n = 2
        grid = G.build_grid(B + 1)
        sig = random_symbol(G, n, rng, x_dependent=False)
        mult = _multiplication(G)

        def multiplier_op(f, sig=sig, grid=grid, B=B):
            return op_apply(sig, forward_transform(f, B), grid)

        ops = {
            "multiplier": multiplier_op,
            "multiplication": mult,
            "composition": lambda f, m=multiplier_op: mult(m(f)),
        }
        for name, A in ops.items():
            s = extract_symbol(A, G, n, B, grid, seed=seed)
            err = 0.0
            for _ in range(fields):
                uh = random_spectral_field(G, n, B, rng)
                err = max(err, float(np.max(np.abs(op_apply(s, uh, grid).samples - A(inverse_transform(uh, grid)).samples))))
            out.append(_le(f"Op(extract(A)) = A, {name}, {G} band {B}", err, tol))
    return out


def oracle_suite(group=None, band=None, seed=0, tol=1e-10, pairs=20) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for G, B in _groups(group, band, [(Torus(1), 6), (Torus(2), 6), (SU2(), 6)]):
        grid = G.build_grid(B + 1)
        err = 0.0
        for j in range(pairs):
            sig = random_symbol(G, 2, rng, x_dependent=bool(j % 2))
            uh = random_spectral_field(G, 2, B, rng)
            D = dense_matrix(sig, B, grid)
            ref = forward_transform(op_apply(sig, uh, grid), B)
            err = max(err, D.apply(uh).max_abs_diff(ref))
        out.append(_le(f"op_apply vs dense_apply {G} band {B}", err, tol))
    return out


def _cos_amplitude(G: CompactGroup, order: float) -> Amplitude:
    return Amplitude.separable(
        G, 1, lambda y: 2 + np.cos(y[..., 0]),
        lambda idx: idx.weight**order * np.ones((1, 1, 1, 1)),
        order, 1, f"(2+cos y)<k>^{order:g}",
    )


def asymptotics_suite(group=None, band=None, seed=0, tol=0.25) -> list[Check]:
    T = Torus(1)
    hi = band or 32
    out = []
    t0 = time.perf_counter()
    for order, label in [(0.0, ""), (1.0, " [supplementary, order 1]")]:
        a = _cos_amplitude(T, order)
        for N in (1, 2):
            rep = asymptotic_check(a, N, (8, hi))
            out.append(_le(
                f"asymptotic exponent {a.name}, N={N}{label}", rep.exponent, order - N + tol,
                exact=rep.exact, max_error=float(rep.errors.max()),
            ))
    out.append(_le("asymptotics runtime [s]", time.perf_counter() - t0, 30.0))
    return out


def garding_suite(group=None, band=None, seed=0, tol=1e-8) -> list[Check]:
    out = []
    for G, B in _groups(group, band, [(Torus(1), 16), (SU2(), 4)]):
        r = garding_constant(heat_block(G), B, seed=seed)
        out.append(_le(f"heat block C_est {G} band {B}", r.c_est, tol))
        r = garding_constant(minus_identity(G), B, seed=seed)
        out.append(_le(f"minus identity |C_est - 1| {G} band {B}", abs(r.c_est - 1), 1e-10))
    T = Torus(1)
    reps = [garding_constant(cos_modulated(T), b, trials=100, seed=seed, tol=tol) for b in (16, 32)]
    for r in reps:
        out.append(_le(f"(2+cos x)<k> violations, band {r.band}", r.violations, 0, c_est=r.c_est))
    c16, c32 = reps[0].c_est, reps[1].c_est
    drift = 0.0 if max(c16, c32) <= tol else abs(c32 - c16) / max(c16, c32)
    out.append(_le("(2+cos x)<k> C_est drift band 16 -> 32", drift, 0.2, c16=c16, c32=c32))
    return out


def mollifier_suite(group=None, band=None, seed=0, tol=1e-6) -> list[Check]:
    G = SU2()
    rng = np.random.default_rng(seed)
    pts = np.concatenate([G.random(200, rng), G.build_grid(6).nodes])
    out, radii = [], {}
    for tl in (2, 4, 8):
        xi = G.irrep(tl)
        m = build_mollifier(G, xi, 1.0, 0.0)
        out.append(_le(f"||w|| - 1, l={tl / 2:g}", abs(m.l2_norm() - 1), tol))
        out.append(_le(f"inversion symmetry, l={tl / 2:g}", float(np.max(np.abs(m(pts) - m(G.inv(pts))))), 1e-10))
        ratio = m(G.identity()) / (m.C0 * xi.weight ** (G.dim * (m.rho + m.delta) / 4))
        out.append(_le(f"w(e) / (C0 <xi>^(3/2 (rho+delta)/2)) - 1, l={tl / 2:g}", abs(ratio - 1), tol))
        radii[tl] = (m.measured_support(), xi.weight)
    (r1, w1), (r4, w4) = radii[2], radii[8]
    predicted = (w4 / w1) ** -0.5
    out.append(_le(
        "support ratio l=4 vs l=1, relative to <xi>^(-1/2) law", abs((r4 / r1) / predicted - 1), 0.25,
        measured=r4 / r1, predicted=predicted,
    ))
    return out


def friedrichs_suite(group=None, band=None, seed=0, tol=1e-8, fields=20) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    t0 = time.perf_counter()
    for G, B in _groups(group, band, [(SU2(), 3)]):
        p = friedrichs_amplitude(heat_block(G), B)
        grid = G.build_grid(B)
        worst = np.inf
        for _ in range(fields):
            uh = random_spectral_field(G, 2, B, rng)
            u = inverse_transform(uh, grid)
            val = inner_product(amplitude_apply(p, u, band=B), u).real
            worst = min(worst, val / plancherel_norm(uh) ** 2)
        out.append(_ge(f"(Op(p)u, u)/||u||^2 {G} band {B}", worst, -tol))
    out.append(_le("friedrichs runtime [s]", time.perf_counter() - t0, 60.0))
    return out


def _heat_cases(group, band):
    return _groups(group, band, [(SU2(), 6), (Torus(1), 16)])


def heat_suite(group=None, band=None, seed=0, tol=1e-8) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for G, B in _heat_cases(group, band):
        u1, u2 = random_spectral_field(G, 1, B, rng), random_spectral_field(G, 1, B, rng)
        _, _, dev = heat_example(u1, u2, 1.0, 100, "exact")
        out.append(_le(f"exact vs closed form {G} band {B}", dev, tol))
        steps = [25, 50, 100, 200]
        devs = [heat_example(u1, u2, 1.0, s, "rk4")[2] for s in steps]
        out.append(_le(f"rk4 200 steps vs closed form {G} band {B}", devs[-1], 1e-4))
        order = -np.polyfit(np.log(steps), np.log(devs), 1)[0]
        out.append(Check(f"rk4 convergence order {G} band {B}", bool(3.5 <= order <= 4.5), float(order), 4.5,
                         {"lower": 3.5, "deviations": devs}))
    return out


def energy_suite(group=None, band=None, seed=0, tol=1e-10) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for G, B in _heat_cases(group, band):
        u1, u2 = random_spectral_field(G, 1, B, rng), random_spectral_field(G, 1, B, rng)
        trace, _, _ = heat_example(u1, u2, 1.0, 100, "exact")
        a = heat_energy_audit(trace, u1, u2, slack=tol)
        scale = max(a["rhs"], 1.0)
        out.append(_le(f"energy excess over 1/2(|a0|^2+|b0|^2) {G} band {B}", a["max_excess"] / scale, tol))
        out.append(_le(f"equality at t=0 {G} band {B}", a["equality_gap_at_zero"] / scale, tol))
        incr = float(np.max(np.diff(trace.norms)))
        out.append(_le(f"norm increments {G} band {B}", incr, 1e-10))
    return out


def boundedness_suite(group=None, band=None, seed=0, tol=1e-10) -> list[Check]:
    out = []
    for G, B in _groups(group, band, [(Torus(1), 16), (SU2(), 6)]):
        rng = np.random.default_rng(seed)
        r = boundedness_ratio(bessel(G), 1.0, 20, B, rng)
        out.append(_le(f"Bessel H^1 -> H^0 ratio |r - 1| {G} band {B}", abs(r - 1), tol))
        r = boundedness_ratio(heat_block(G), 1.0, 20, B, rng)
        out.append(_le(f"heat block ratio {G} band {B}", r, 2 + 1e-8))
        r = boundedness_ratio(identity(G), 0.5, 5, B, rng)
        out.append(_le(f"identity ratio |r - 1| {G} band {B}", abs(r - 1), tol))
    return out


SUITES = {
    "fourier": fourier_suite,
    "schur": schur_suite,
    "quantize": quantize_suite,
    "oracle": oracle_suite,
    "asymptotics": asymptotics_suite,
    "garding": garding_suite,
    "mollifier": mollifier_suite,
    "friedrichs": friedrichs_suite,
    "heat": heat_suite,
    "energy": energy_suite,
    "boundedness": boundedness_suite,
}

# acceptance criterion number -> suite
CRITERIA = {
    1: "fourier", 2: "schur", 3: "quantize", 4: "oracle", 5: "asymptotics", 6: "garding",
    7: "mollifier", 8: "friedrichs", 9: "heat", 10: "energy", 11: "boundedness",
}


def run_suite(name: str, **kwargs) -> list[Check]:
    try:
        suite = SUITES[name]
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; available: {sorted(SUITES)}") from None
    return suite(**{k: v for k, v in kwargs.items() if v is not None})
