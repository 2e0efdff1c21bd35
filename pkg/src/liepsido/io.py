"""JSON/CSV encodings of groups, points, irreps, fields, symbol tables, dense operators and traces.

All JSON is written with sorted keys and no timestamps, so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .groups import SU2, CompactGroup, GroupGrid, IrrepIndex, Torus
from .quantize import DenseOperator
from .spectral import GridField, SpectralField, packing
from .symbols import MatrixSymbol, multiplier_symbol, tabulated_symbol

__all__ = [
    "FormatError",
    "dumps",
    "write_json",
    "read_json",
    "group_to_json",
    "group_from_json",
    "point_to_json",
    "point_from_json",
    "irrep_to_json",
    "irrep_from_json",
    "spectral_to_json",
    "spectral_from_json",
    "write_gridfield_csv",
    "read_gridfield_csv",
    "symbol_to_json",
    "symbol_from_json",
    "save_dense",
    "load_dense",
]


class FormatError(ValueError):
    """Malformed input file."""


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _c(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def _z(pair) -> complex:
    return complex(pair[0], pair[1])


def group_to_json(group: CompactGroup) -> dict:
    return {"group": "torus", "d": group.d} if group.kind == "torus" else {"group": "su2"}


def group_from_json(obj: dict) -> CompactGroup:
    kind = obj.get("group")
    if kind == "torus":
        return Torus(int(obj.get("d", 1)))
    if kind == "su2":
        return SU2()
    raise FormatError(f"unknown group {kind!r}")


def point_to_json(group: CompactGroup, x) -> dict:
    x = np.asarray(x)
    if group.kind == "torus":
        return {"group": "torus", "d": group.d, "angles": [float(v) for v in x]}
    return {"group": "su2", "a": _c(x[0]), "b": _c(x[1])}


def point_from_json(obj: dict):
    group = group_from_json(obj)
    if group.kind == "torus":
        x = np.asarray(obj["angles"], dtype=float)
        return group, group.check_point(np.mod(x, 2 * np.pi))
    return group, group.check_point(np.array([_z(obj["a"]), _z(obj["b"])]))


def irrep_to_json(idx: IrrepIndex) -> dict:
    if idx.group.kind == "torus":
        return {"k": list(idx.label)}
    return {"two_l": int(idx.label)}


def irrep_from_json(group: CompactGroup, obj: dict) -> IrrepIndex:
    if group.kind == "torus":
        return group.irrep(obj["k"])
    return group.irrep(int(obj["two_l"]))


def _mats_to_json(m: np.ndarray):
    return [[_c(v) for v in row] for row in m]


def _mats_from_json(rows) -> np.ndarray:
    return np.array([[_z(v) for v in row] for row in rows], dtype=complex)


def spectral_to_json(uh: SpectralField) -> dict:
    out = dict(group_to_json(uh.group))
    out.update({
        "n": uh.n,
        "band": uh.band,
        "coeffs": [{"irrep": irrep_to_json(i), "mats": [_mats_to_json(m) for m in c]} for i, c in uh.coeffs.items()],
    })
    if uh.warnings:
        out["warnings"] = list(uh.warnings)
    return out


def spectral_from_json(obj: dict) -> SpectralField:
    try:
        group = group_from_json(obj)
        n, band = int(obj["n"]), int(obj["band"])
        coeffs = {}
        for entry in obj["coeffs"]:
            idx = irrep_from_json(group, entry["irrep"])
            coeffs[idx] = np.stack([_mats_from_json(m) for m in entry["mats"]])
        return SpectralField(group, n, band, coeffs)
    except (KeyError, TypeError, IndexError) as exc:
        raise FormatError(f"malformed spectral field: {exc!r}") from None


def _coord_columns(group: CompactGroup) -> list[str]:
    if group.kind == "torus":
        return [f"x{j + 1}" for j in range(group.d)]
    return ["a_re", "a_im", "b_re", "b_im"]


def _coords(group: CompactGroup, nodes: np.ndarray) -> np.ndarray:
    if group.kind == "torus":
        return nodes
    return np.stack([nodes[:, 0].real, nodes[:, 0].imag, nodes[:, 1].real, nodes[:, 1].imag], axis=1)


def write_gridfield_csv(u: GridField, path) -> None:
    cols = _coord_columns(u.group)
    for i in range(u.n):
        cols += [f"re{i}", f"im{i}"]
    coords = _coords(u.group, u.grid.nodes)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for c, s in zip(coords, u.samples):
            vals = np.stack([s.real, s.imag], axis=1).reshape(-1)
            w.writerow([repr(float(v)) for v in np.concatenate([c, vals])])


def read_gridfield_csv(path, group: CompactGroup, band: int, atol: float = 1e-12) -> GridField:
    """Read samples and check the node columns against the canonical grid of ``band``."""
    grid = group.build_grid(band)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    ncoord = len(_coord_columns(group))
    if header[:ncoord] != _coord_columns(group) or (len(header) - ncoord) % 2:
        raise FormatError(f"{path}: header {header} does not match {group}")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if data.shape[0] != len(grid):
        raise FormatError(f"{path}: {data.shape[0]} rows, grid of band {band} has {len(grid)} nodes")
    if np.max(np.abs(data[:, :ncoord] - _coords(group, grid.nodes))) > atol:
        raise FormatError(f"{path}: node coordinates differ from the canonical grid of band {band}")
    vals = data[:, ncoord:]
    return GridField(grid, vals[:, 0::2] + 1j * vals[:, 1::2], None)


def symbol_to_json(sigma: MatrixSymbol, band: int, grid: GroupGrid | None = None) -> dict:
    """Sampled table: per irrep, per node, an ``n x n`` array of ``d x d`` matrices."""
    group = sigma.group
    if sigma.multiplier:
        nodes, grid_band = group.identity()[None], None
    else:
        if grid is None:
            raise ValueError("x-dependent symbols are tabulated on a grid")
        nodes, grid_band = grid.nodes, grid.band
    coeffs = []
    for idx in group.irreps(band):
        vals = sigma.evaluate(nodes, idx)
        coeffs.append({
            "irrep": irrep_to_json(idx),
            "mats": [[[_mats_to_json(vals[x, i, r]) for r in range(sigma.n)] for i in range(sigma.n)] for x in range(len(nodes))],
        })
    out = dict(group_to_json(group))
    out.update({
        "n": sigma.n, "band": band, "order": sigma.order, "rho": sigma.rho, "delta": sigma.delta,
        "multiplier": sigma.multiplier, "grid_band": grid_band, "name": sigma.name, "coeffs": coeffs,
    })
    return out


def symbol_from_json(obj: dict) -> MatrixSymbol:
    try:
        group = group_from_json(obj)
        n, band = int(obj["n"]), int(obj["band"])
        table = {}
        for entry in obj["coeffs"]:
            idx = irrep_from_json(group, entry["irrep"])
            table[idx] = np.array(
                [[[_mats_from_json(m) for m in row] for row in node] for node in entry["mats"]], dtype=complex
            ).reshape(-1, n, n, idx.dim, idx.dim)
        meta = dict(order=float(obj.get("order", 0.0)), rho=float(obj.get("rho", 1.0)), delta=float(obj.get("delta", 0.0)))
        name = obj.get("name", "table")
        if obj.get("multiplier", False):
            return multiplier_symbol(group, n, lambda idx: table[idx][0], name=name, max_band=band, **meta)
        grid = group.build_grid(int(obj["grid_band"]))
        return tabulated_symbol(group, n, grid.nodes, table, name=name, **meta)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed symbol table: {exc!r}") from None


def save_dense(D: DenseOperator, prefix) -> tuple[Path, Path]:
    """Write ``<prefix>.npy`` (matrix in the weighted basis) and ``<prefix>.json`` (manifest)."""
    prefix = Path(prefix)
    npy, man = prefix.with_suffix(".npy"), prefix.with_suffix(".json")
    np.save(npy, D.matrix)
    manifest = dict(group_to_json(D.group))
    manifest.update({
        "n": D.n,
        "band": D.band,
        "dimension": int(D.matrix.shape[0]),
        "basis": "sqrt(d)-weighted; slot value = sqrt(d_xi) * coefficient",
        "packing": [
            {**{k: v for k, v in e.items() if k != "irrep"}, "irrep": irrep_to_json(e["irrep"])}
            for e in D.manifest
        ],
        "matrix_file": npy.name,
    })
    write_json(man, manifest)
    return npy, man


def load_dense(prefix) -> DenseOperator:
    prefix = Path(prefix)
    manifest = read_json(prefix.with_suffix(".json"))
    group = group_from_json(manifest)
    M = np.load(prefix.with_name(manifest["matrix_file"]))
    n, band = int(manifest["n"]), int(manifest["band"])
    if M.shape != (manifest["dimension"],) * 2:
        raise FormatError("matrix file does not match the manifest dimension")
    return DenseOperator(group, n, band, M, packing(group, n, band))


def trace_to_json(trace, include_states: bool = False) -> dict:
    out = {
        "integrator": trace.integrator,
        "times": [float(t) for t in trace.times],
        "norms": [float(v) for v in trace.norms],
        "audit": trace.audit,
    }
    if include_states:
        out["states"] = [spectral_to_json(s) for s in trace.states]
    return out


def write_trace_csv(trace, path, ratios=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "l2_norm", "audit_ratio"])
        for j, (t, v) in enumerate(zip(trace.times, trace.norms)):
            r = "" if ratios is None else repr(float(ratios[j]))
            w.writerow([repr(float(t)), repr(float(v)), r])
