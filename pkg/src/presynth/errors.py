"""Exception types shared across the package."""


class ResourceError(RuntimeError):
    """A configured budget (DNF size, QE nodes, oracle points, ...) was exceeded."""


class PreconditionError(ValueError):
    """An operation was called on an input outside its contract."""


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col
