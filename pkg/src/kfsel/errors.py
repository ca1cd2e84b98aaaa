class KfselError(Exception):
    """Base class for errors reported by the command line with a fixed prefix."""

    kind = "error"


class ConfigError(KfselError, ValueError):
    kind = "config"


class DataError(KfselError, ValueError):
    """Malformed input file. ``path`` and ``line`` locate the problem."""

    kind = "data"

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class SolverError(KfselError, ValueError):
    kind = "solver"
