"""Built-in symbols addressable by name from the CLI and the test-suite."""

from __future__ import annotations

import numpy as np

from .groups import CompactGroup, IrrepIndex
from .symbols import MatrixSymbol, multiplier_symbol

__all__ = ["BUILTIN_SYMBOLS", "get_symbol", "identity", "bessel", "heat_block", "cos_modulated", "minus_identity"]


def _eye(n: int, d: int) -> np.ndarray:
    return np.eye(n)[:, :, None, None] * np.eye(d)


def identity(group: CompactGroup, n: int = 1) -> MatrixSymbol:
    return multiplier_symbol(group, n, lambda idx: _eye(n, idx.dim), 0.0, name="identity")


def bessel(group: CompactGroup, n: int = 1) -> MatrixSymbol:
    """Symbol ``<xi> Id`` of the first-order Bessel potential."""
    return multiplier_symbol(group, n, lambda idx: idx.weight * _eye(n, idx.dim), 1.0, name="bessel")


def heat_block(group: CompactGroup, n: int = 2) -> MatrixSymbol:
    """``<xi> [[Id, Id], [Id, Id]]``, the PSD symbol of minus the heat-example generator."""
    if n != 2:
        raise ValueError("heat_block is a 2x2 block symbol")

    def fn(idx: IrrepIndex):
        return idx.weight * np.ones((2, 2))[:, :, None, None] * np.eye(idx.dim)

    return multiplier_symbol(group, 2, fn, 1.0, name="heat_block")


def minus_identity(group: CompactGroup, n: int = 1) -> MatrixSymbol:
    # registered with m = rho - delta so the Sobolev exponent of the lower bound is 0
    return multiplier_symbol(group, n, lambda idx: -_eye(n, idx.dim), 1.0, name="minus_identity")


def _modulation(group: CompactGroup, points: np.ndarray) -> np.ndarray:
    if group.kind == "torus":
        return 2 + np.cos(points[..., 0])
    return 2 + points[..., 0].real


def cos_modulated(group: CompactGroup, n: int = 1) -> MatrixSymbol:
    """``(2 + cos x_1) <xi> Id`` (torus) or ``(2 + Re a) <xi> Id`` (SU(2)); PSD and x-dependent."""

    def ev(points, idx):
        c = _modulation(group, points)
        return c[:, None, None, None, None] * (idx.weight * _eye(n, idx.dim))[None]

    return MatrixSymbol(group, n, ev, 1.0, 1.0, 0.0, False, 1, None, "cos_modulated")


BUILTIN_SYMBOLS = {
    "identity": identity,
    "bessel": bessel,
    "heat_block": heat_block,
    "cos_modulated": cos_modulated,
    "minus_identity": minus_identity,
}


def get_symbol(name: str, group: CompactGroup, n: int | None = None) -> MatrixSymbol:
    try:
        factory = BUILTIN_SYMBOLS[name]
    except KeyError:
        raise KeyError(f"unknown symbol {name!r}; built-ins: {sorted(BUILTIN_SYMBOLS)}") from None
    return factory(group) if n is None else factory(group, n)
