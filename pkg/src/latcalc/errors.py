"""Exception types raised across the package."""


class LatticeMismatchError(ValueError):
    """Two elements living on different grid lattices were combined."""


class NonDifferentiableError(ValueError):
    """A gradient was requested at a point where the function has none."""


class HypothesisError(ValueError):
    """A precondition of an evaluator or a check is not satisfied."""


class ExpressionTooLargeError(ValueError):
    """Rewriting an expression exceeded the node budget."""


class ParseError(ValueError):
    """Malformed mean name or expression text.

    Attributes:
        position: zero-based offset into the parsed string.
    """

    def __init__(self, message, position=0):
        self.position = position
        super().__init__(f"syntax error at offset {position}: {message}")
