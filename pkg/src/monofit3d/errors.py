"""Exception types raised across the package."""


class Mono3DError(Exception):
    """Base class for all package errors."""


class DegenerateProjection(Mono3DError):
    pass


class BehindCamera(Mono3DError):
    pass


class InsufficientData(Mono3DError):
    pass


class NonPositiveDimension(Mono3DError):
    pass


class DegenerateFit(Mono3DError):
    pass


class NoValidConfiguration(Mono3DError):
    pass


class AllSamplesDiscarded(Mono3DError):
    pass


class EmptyCandidateSet(Mono3DError):
    pass


class OutOfRange(Mono3DError):
    pass


class MalformedLine(Mono3DError):
    def __init__(self, message, field_index=None):
        super().__init__(message)
        self.field_index = field_index


class MissingP2(Mono3DError):
    pass


class MissingScore(Mono3DError):
    pass


class EmptyInput(Mono3DError):
    pass


class MissingImage(Mono3DError):
    pass
