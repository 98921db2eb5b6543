"""Exception hierarchy for carclust."""


class CarClustError(Exception):
    """Base class for every error raised by the package."""


class InvalidPanelError(CarClustError, ValueError):
    pass


class DimensionMismatchError(CarClustError, ValueError):
    pass


class EmptyClusterError(CarClustError):
    def __init__(self, cluster: int, time: int):
        self.cluster = cluster
        self.time = time
        super().__init__(f"cluster {cluster} has no members at time index {time}")


class SingularDesignError(CarClustError):
    pass


class DegenerateDesignError(CarClustError):
    pass


class InvalidConfigError(CarClustError, ValueError):
    pass


class AllRestartsFailedError(CarClustError):
    def __init__(self, errors):
        self.errors = list(errors)
        detail = "; ".join(f"restart {i}: {e}" for i, e in self.errors)
        super().__init__(f"every restart failed ({detail})")


class UndefinedForSingleClusterError(CarClustError, ValueError):
    pass


class ZeroWithinScatterError(CarClustError, ValueError):
    pass


class SingleTimePointError(CarClustError, ValueError):
    pass


class UnknownUnitError(CarClustError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown unit"


class PanelParseError(CarClustError, ValueError):
    def __init__(self, line: int, message: str, path=None):
        self.line = line
        self.path = path
        where = f"{path}:{line}" if path is not None else f"line {line}"
        super().__init__(f"{where}: {message}")


class IncompletePanelError(CarClustError, ValueError):
    def __init__(self, missing, path=None):
        self.missing = list(missing)
        self.path = path
        shown = ", ".join(f"(unit={u!s}, time={t!s})" for u, t in self.missing[:10])
        more = f" and {len(self.missing) - 10} more" if len(self.missing) > 10 else ""
        prefix = f"{path}: " if path is not None else ""
        super().__init__(f"{prefix}panel is incomplete, missing {shown}{more}")


class DuplicateRowError(CarClustError, ValueError):
    def __init__(self, unit, time, line: int, path=None):
        self.unit = unit
        self.time = time
        self.line = line
        where = f"{path}:{line}" if path is not None else f"line {line}"
        super().__init__(f"{where}: duplicate row for (unit={unit}, time={time})")


class ConstantVariableError(CarClustError, ValueError):
    def __init__(self, variable: int, name=None):
        self.variable = variable
        label = f"{name!r} " if name is not None else ""
        super().__init__(f"variable {label}(index {variable}) is constant; min-max scaling undefined")


class InvalidSpecError(CarClustError, ValueError):
    pass


class ReportWriteError(CarClustError, OSError):
    pass
