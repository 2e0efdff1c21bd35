"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .catalog import BUILTIN_SYMBOLS, get_symbol
from .errors import ContractError, DomainError, GroupMismatchError, NumericalError, PrecisionError
from .evolution import INTEGRATORS, CauchyProblem, energy_audit, heat_energy_audit, heat_example, solve
from .garding import garding_constant
from .groups import SU2, CompactGroup, Torus
from .quantize import dense_matrix, op_apply
from .spectral import forward_transform, inverse_transform, random_spectral_field, synthesize
from .verify import SUITES, run_suite

USAGE_ERRORS = (io.FormatError, PrecisionError, GroupMismatchError, DomainError, ContractError, KeyError, ValueError, OSError)


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--band", type=int, default=None, help="band limit")
    p.add_argument("--seed", type=int, default=0, help="seed for randomised data and trials")
    p.add_argument("--tol", type=float, default=None, help="pass/fail tolerance")
    p.add_argument("--threads", type=int, default=0, help="BLAS threads (0 = library default)")


def _group_args(p: argparse.ArgumentParser, required: bool = False) -> None:
    p.add_argument("--group", choices=["torus", "su2"], required=required, default=None)
    p.add_argument("--d", type=int, default=1, help="torus dimension")


def _group(args) -> CompactGroup | None:
    if args.group is None:
        return None
    return Torus(args.d) if args.group == "torus" else SU2()


def _emit(obj, output: str | None) -> None:
    text = io.dumps(obj)
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _meta(args) -> dict:
    return {"seed": args.seed, "band": args.band}


def _load_symbol(name: str, group: CompactGroup, n: int | None = None):
    if name in BUILTIN_SYMBOLS:
        return get_symbol(name, group, n)
    path = Path(name)
    if not path.exists():
        raise UsageError(f"symbol {name!r} is neither a built-in ({sorted(BUILTIN_SYMBOLS)}) nor a file")
    sigma = io.symbol_from_json(io.read_json(path))
    if sigma.group != group:
        raise GroupMismatchError(f"symbol file is on {sigma.group}, requested {group}")
    return sigma


# --- commands ------------------------------------------------------------------------


def cmd_transform(args) -> int:
    if args.direction == "forward":
        group = _group(args)
        if group is None or args.grid_band is None:
            raise UsageError("forward transform needs --group and --grid-band")
        u = io.read_gridfield_csv(args.input, group, args.grid_band)
        band = args.band if args.band is not None else args.grid_band
        uh = forward_transform(u, band)
        out = io.spectral_to_json(uh)
        out.update(seed=args.seed, grid_band=args.grid_band)
        _emit(out, args.output)
    else:
        uh = io.spectral_from_json(io.read_json(args.input))
        grid_band = args.grid_band if args.grid_band is not None else uh.band
        u = inverse_transform(uh, uh.group.build_grid(grid_band))
        if args.output is None:
            raise UsageError("inverse transform writes CSV; pass --output")
        io.write_gridfield_csv(u, args.output)
    return 0


def cmd_synthesize(args) -> int:
    uh = io.spectral_from_json(io.read_json(args.input))
    raw = io.read_json(args.points)
    pts = []
    for obj in raw if isinstance(raw, list) else raw["points"]:
        g, x = io.point_from_json(obj)
        if g != uh.group:
            raise GroupMismatchError(f"point on {g}, field on {uh.group}")
        pts.append(x)
    vals = synthesize(uh, np.stack(pts))
    _emit({"seed": args.seed, "band": uh.band, "values": [[[v.real, v.imag] for v in row] for row in vals]}, args.output)
    return 0


def cmd_quantize(args) -> int:
    uh = io.spectral_from_json(io.read_json(args.input))
    sigma = _load_symbol(args.symbol, uh.group, uh.n)
    band = args.band if args.band is not None else uh.band
    if args.action == "apply":
        xb = sigma.x_band
        if xb is None:
            raise PrecisionError("tabulated x-dependent symbols can only be applied on their own grid")
        grid = uh.group.build_grid(max(band, uh.band) + xb)
        vh = forward_transform(op_apply(sigma, uh, grid), band)
        out = io.spectral_to_json(vh)
        out.update(seed=args.seed, symbol=sigma.name)
        _emit(out, args.output)
    else:
        if args.output is None:
            raise UsageError("quantize dense needs --output PREFIX")
        D = dense_matrix(sigma, band)
        io.save_dense(D, args.output)
    return 0


def cmd_garding(args) -> int:
    group = _group(args) or SU2()
    band = args.band if args.band is not None else 6
    sigma = _load_symbol(args.symbol, group)
    overrides = {k: getattr(args, k) for k in ("rho", "delta") if getattr(args, k) is not None}
    if overrides:
        sigma = replace(sigma, **overrides)
    tol = args.tol if args.tol is not None else 1e-8
    rep = garding_constant(sigma, band, s=args.s, trials=args.trials, seed=args.seed, tol=tol)
    report = rep.to_dict()
    report["rho"], report["delta"], report["order"] = sigma.rho, sigma.delta, sigma.order
    if args.output:
        io.write_json(args.output, report)
        print(rep.summary())
    else:
        _emit(report, None)
        print(rep.summary(), file=sys.stderr)
    return 0


def cmd_evolve(args) -> int:
    if args.action == "heat-example":
        group = _group(args) or SU2()
        band = args.band if args.band is not None else 6
        rng = np.random.default_rng(args.seed)
        u1, u2 = random_spectral_field(group, 1, band, rng), random_spectral_field(group, 1, band, rng)
        trace, _, dev = heat_example(u1, u2, args.T, args.steps, args.integrator)
        audit = heat_energy_audit(trace, u1, u2)
        tol = args.tol if args.tol is not None else (1e-8 if args.integrator != "rk4" else 1e-4)
        out = {
            "seed": args.seed, "band": band, "group": repr(group), "T": args.T, "steps": args.steps,
            "integrator": args.integrator, "max_deviation": dev, "tol": tol, "energy": audit,
        }
        if args.output:
            io.write_json(args.output, out)
        print(f"max deviation {dev:.3e} (tol {tol:.1e}) integrator {args.integrator} band {band} seed {args.seed}")
        return 0 if dev <= tol else 1

    if args.config is None:
        raise UsageError("evolve run needs --config")
    cfg = io.read_json(args.config)
    base = Path(args.config).parent
    u0 = io.spectral_from_json(io.read_json(base / cfg["u0"]))
    sigma = _load_symbol(cfg["symbol"], u0.group, u0.n)
    K = sigma.scaled(float(cfg.get("scale", 1.0)))
    f = None
    if cfg.get("f"):
        fh = io.spectral_from_json(io.read_json(base / cfg["f"]))
        f = lambda t: fh  # noqa: E731  (constant-in-time source)
    prob = CauchyProblem(u0, K, float(cfg["T"]), int(cfg["steps"]), cfg.get("integrator", "exact"), f)
    trace = solve(prob)
    audit = energy_audit(trace, f, float(cfg.get("c_prime", 1.0)), float(cfg.get("c_double_prime", 2.0)))
    trace.audit = {k: v for k, v in audit.items() if k != "ratios"}
    out = io.trace_to_json(trace, include_states=bool(cfg.get("states", False)))
    out.update(seed=args.seed, band=u0.band)
    _emit(out, args.output)
    if args.csv:
        io.write_trace_csv(trace, args.csv, audit["ratios"])
    return 0


def cmd_verify(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    group = _group(args)
    rows, ok = [], True
    for name in names:
        kwargs = {"group": group, "band": args.band, "seed": args.seed}
        if args.tol is not None:
            kwargs["tol"] = args.tol
        for c in run_suite(name, **kwargs):
            print(f"[{name}] {c.line()}")
            rows.append({"suite": name, **c.to_dict()})
            ok &= c.passed
    print(f"{sum(r['passed'] for r in rows)}/{len(rows)} checks passed (seed {args.seed}, band {args.band})")
    if args.output:
        io.write_json(args.output, {"seed": args.seed, "band": args.band, "checks": rows})
    return 0 if ok else 1


# --- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liepsido", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="forward (CSV -> JSON) or inverse (JSON -> CSV) transform")
    p.add_argument("direction", choices=["forward", "inverse"])
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--grid-band", type=int, default=None, help="band of the canonical grid of the CSV")
    _group_args(p)
    _common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("synthesize", help="evaluate a spectral field at points")
    p.add_argument("--input", required=True)
    p.add_argument("--points", required=True, help="JSON list of points")
    p.add_argument("--output")
    _common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("quantize", help="apply a symbol to a field or write its dense matrix")
    p.add_argument("action", choices=["apply", "dense"])
    p.add_argument("--symbol", required=True, help="built-in name or symbol-table JSON")
    p.add_argument("--input", required=True, help="spectral field JSON")
    p.add_argument("--output")
    _common(p)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("garding", help="lower-bound constant report")
    p.add_argument("action", choices=["check"])
    p.add_argument("--symbol", required=True)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--s", type=float, default=None, help="Sobolev exponent (default (m - (rho - delta))/2)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--output")
    _group_args(p)
    _common(p)
    p.set_defaults(func=cmd_garding)

    p = sub.add_parser("evolve", help="run a Cauchy problem or the heat example")
    p.add_argument("action", choices=["run", "heat-example"])
    p.add_argument("--config")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--integrator", choices=INTEGRATORS, default="exact")
    p.add_argument("--output")
    p.add_argument("--csv")
    _group_args(p)
    _common(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", choices=sorted(SUITES) + ["all"], default="all")
    p.add_argument("--output")
    _group_args(p)
    _common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def _thread_limit(n: int):
    if n <= 0:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.band is not None and args.band < 0:
        parser.error("--band must be nonnegative")
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 1
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
