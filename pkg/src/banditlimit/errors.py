"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractViolation(ValueError):
    """An allocation or configuration breaks a documented invariant."""


class RuleUndefinedError(ValueError):
    """An allocation rule cannot be evaluated for the given posterior or environment."""


class ShapeError(ValueError):
    """A trajectory or array does not have the layout an operation requires."""


class OmittedBlockError(LookupError):
    """A block of the fixed-information experiment with zero mass was requested."""
