"""grouplaw exceptions.

Every error raised on purpose derives from GroupLawError, and also from the
built-in exception a caller would naturally catch.
"""


class GroupLawError(Exception):
    """Base class of all grouplaw errors."""


class LawSyntaxError(GroupLawError, ValueError):
    """A law or group descriptor text does not match the grammar.

    Args:
        message: What went wrong.
        position: Zero-based offset into the text.
    """

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (at position {position})")
        self.position = position


class LawNormalizationError(GroupLawError, ValueError):
    """A law has non-contiguous variables or flattens to the trivial word."""


class ArityError(GroupLawError, ValueError):
    """Too few values (or walks) were supplied for the variables of a law."""


class ConstructionError(GroupLawError, ValueError):
    """A group descriptor or generating set cannot be built."""


class ElementTypeError(GroupLawError, TypeError):
    """An element does not belong to the group it is used with."""


class BudgetExceededError(GroupLawError, RuntimeError):
    """An enumeration would exceed its configured budget."""


class ConfigError(GroupLawError, ValueError):
    """An experiment configuration is invalid."""
