"""Exception types shared across the package."""


class DynSindyError(Exception):
    """Base class for all package errors."""


class DivergenceError(DynSindyError, RuntimeError):
    """Integration produced a state beyond the divergence bound."""


class DegenerateDimensionError(DynSindyError, ValueError):
    """A state dimension is identically zero and cannot be normalized."""


class RankDeficiencyError(DynSindyError, ArithmeticError):
    """Least-squares system on the active set is numerically singular."""


class WindowTooSmallError(DynSindyError, ValueError):
    pass


class ShapeError(DynSindyError, ValueError):
    pass


class NonScalarLossError(DynSindyError, ValueError):
    pass


class TrainingError(DynSindyError, RuntimeError):
    """Training aborted, e.g. because the loss became NaN."""


class EmptyModelError(TrainingError):
    """Every library term was pruned from the active mask."""


class ConfigError(DynSindyError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class FileFormatError(DynSindyError, ValueError):
    def __init__(self, filename, line, message):
        self.filename = filename
        self.line = line
        super().__init__(f"{filename}:{line}: {message}")
