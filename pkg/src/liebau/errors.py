"""Exception hierarchy shared by all modules."""


class LiebauError(Exception):
    """Base class for every error raised by this package."""


class ResonantOrBeyond(LiebauError):
    """The shift m violates m^2 < (pi/T)^2 + (a/2)^2."""


class DomainError(LiebauError):
    """An argument lies outside the admissible domain."""


class NegativeState(LiebauError):
    """A state value is negative where fractional powers are required."""


class NonPositiveSample(LiebauError):
    pass


class NotAutonomous(LiebauError):
    pass


class H0Violated(LiebauError):
    """Exponents or coefficients break 0 < alpha < beta < 1 / a >= 0."""


class H3Violated(LiebauError):
    pass


class ConeMismatch(LiebauError):
    pass


class SlabError(LiebauError):
    """Radii do not satisfy 0 < cm*R1 < R1 < R2."""


class NoRealRoots(LiebauError):
    """The reduced quadratic has negative discriminant (constant sign)."""

    def __init__(self, message, sign):
        super().__init__(message)
        self.sign = sign


class NonConvergence(LiebauError):
    """Fixed-point iteration did not settle; carries the last iterate."""

    def __init__(self, message, last_iterate=None, steps=()):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.steps = list(steps)


class NewtonDiverged(LiebauError):
    def __init__(self, message, trail=()):
        super().__init__(message)
        self.trail = list(trail)


class StateEscapedPositivity(LiebauError):
    pass


class ConfigError(LiebauError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
