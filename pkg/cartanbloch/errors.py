"""Exception hierarchy.

Every error carries a stable ``code`` that the CLI writes into its
structured error record.
"""

from __future__ import annotations


class CartanError(ValueError):
    """Base class for all package errors."""

    code = "error"

    def as_record(self) -> dict[str, str]:
        return {"error": self.code, "message": str(self)}


class OutsideDomainError(CartanError):
    """Point is not interior, or is closer to the boundary than allowed."""

    code = "outside-domain"


class ConditioningError(CartanError):
    """A metric matrix or factor is numerically singular."""

    code = "conditioning"


class DescriptorError(CartanError):
    """Invalid domain or map descriptor."""

    code = "bad-descriptor"


class MapTypeError(CartanError, TypeError):
    """Maps composed or applied across incompatible domains."""

    code = "type-mismatch"


class DegenerateDirectionError(CartanError):
    """A nonzero tangent direction was required."""

    code = "zero-direction"


__all__ = [
    "CartanError",
    "OutsideDomainError",
    "ConditioningError",
    "DescriptorError",
    "MapTypeError",
    "DegenerateDirectionError",
]
