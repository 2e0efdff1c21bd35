"""Matrix-valued pseudo-differential calculus on the torus and SU(2).

Fourier analysis, quantization, symbol calculus, lower-bound (Garding-type)
constants and a spectral evolution solver, all at desk scale.
"""

from .errors import (
    AdmissibilityError,
    ContractError,
    DomainError,
    GroupMismatchError,
    NumericalError,
    PrecisionError,
)
from .groups import SU2, GroupGrid, IrrepIndex, Torus, build_grid
from .spectral import GridField, SpectralField, forward_transform, inverse_transform

__all__ = [
    "AdmissibilityError",
    "ContractError",
    "DomainError",
    "GroupMismatchError",
    "NumericalError",
    "PrecisionError",
    "SU2",
    "Torus",
    "GroupGrid",
    "IrrepIndex",
    "build_grid",
    "GridField",
    "SpectralField",
    "forward_transform",
    "inverse_transform",
]

__version__ = "0.1.0"
