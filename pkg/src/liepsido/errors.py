"""Exception types raised across the package."""


class GroupMismatchError(ValueError):
    """Objects living on different groups were combined."""


class DomainError(ValueError):
    """A point lies outside the domain of a chart (e.g. the log map)."""


class PrecisionError(ValueError):
    """A grid or symbol table cannot resolve the requested band exactly."""


class ContractError(ValueError):
    """A black-box operator violated its contract (e.g. is not linear)."""


class AdmissibilityError(ValueError):
    """A difference family failed the strong admissibility checks."""


class NumericalError(RuntimeError):
    """A numerical routine (eigen-solver, dualization) failed."""
