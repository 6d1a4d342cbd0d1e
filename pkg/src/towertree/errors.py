"""Exception types shared across the package."""


class TowerTreeError(Exception):
    """Base class for every error raised by this package."""


class HyperDepthError(TowerTreeError):
    """Raised when constructing a tower integer whose nesting depth
    would exceed the configured limit."""

    def __init__(self, depth: int, limit: int):
        self.depth = depth
        self.limit = limit
        super().__init__(f"tower depth {depth} exceeds limit {limit}")


class HyperValueError(TowerTreeError):
    """Raised for structurally invalid tower-integer input (bad term
    order, negative values, malformed text)."""


class ProfileError(TowerTreeError):
    """Raised for invalid growth-profile parameters or for queries past
    a profile's declared bound."""


class TreeIndexError(TowerTreeError):
    """Raised for paths or indices that fall outside the indexed tree,
    or past the configured enumeration caps."""


class ConditionError(TowerTreeError):
    """Raised when a subtree description violates a structural
    requirement (prefix closure, tail placement, coverage)."""


class EnumerationLimitError(ConditionError):
    """Raised when materializing a node set would exceed the configured
    enumeration guard."""

    def __init__(self, requested, guard: int):
        self.requested = requested
        self.guard = guard
        super().__init__(
            f"enumeration of {requested} nodes exceeds guard {guard}"
        )


class NameError_(TowerTreeError):
    """Raised for malformed decision tables on tree names."""


class FusionError(TowerTreeError):
    """Raised when a fusion-chain step violates one of the named step
    clauses.  ``clause`` carries the machine-readable clause name."""

    def __init__(self, clause: str, message: str):
        self.clause = clause
        super().__init__(f"[{clause}] {message}")


class DecodeError(TowerTreeError):
    """Raised when branch decoding fails; ``level`` is the first tree
    level at which no consistent choice exists."""

    def __init__(self, level: int, reason: str):
        self.level = level
        self.reason = reason
        super().__init__(f"decode failed at level {level}: {reason}")


class ConstructionError(TowerTreeError):
    """Raised when a guided construction (splitting or bounding run)
    cannot proceed; ``check`` names the failed requirement."""

    def __init__(self, check: str, message: str):
        self.check = check
        super().__init__(f"[{check}] {message}")
