"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class SelertionError(Exception):
    """Base class for all tool errors (never raised for MiniJ runtime faults)."""


class MiniJSyntaxError(SelertionError):
    def __init__(self, message: str, path: str = "", line: int = 0, col: int = 0):
        self.message = message
        self.path = path
        self.line = line
        self.col = col
        where = f"{path}:{line}:{col}" if path else f"{line}:{col}"
        super().__init__(f"{where}: {message}")


class ModelError(SelertionError):
    """Structural problem found while building class models (duplicates etc.)."""


class LinkError(SelertionError):
    """A class reference (superclass, constructor target) cannot be resolved."""


class StoreError(SelertionError):
    """The .selertion store is missing, corrupt or of an incompatible version."""


class StoreLockedError(StoreError):
    pass


class InstrumentationError(SelertionError):
    """Trace stream is inconsistent with the instrumentation that produced it."""


class SelectionError(SelertionError):
    pass


class MutationError(SelertionError):
    pass
