"""Exception types raised across the toolkit."""


class SkelforgeError(Exception):
    """Base class for all toolkit errors."""


class EmptyMask(SkelforgeError):
    pass


class EmptyShape(SkelforgeError):
    pass


class EmptySkeleton(SkelforgeError):
    pass


class MultipleComponents(SkelforgeError):
    pass


class ContourTooShort(SkelforgeError):
    pass


class MissingRadii(SkelforgeError):
    pass


class NotALeafBranch(SkelforgeError):
    pass


class UnknownBranchId(SkelforgeError):
    pass


class TooFewPreservedEndpoints(SkelforgeError):
    pass


class Disconnected(SkelforgeError):
    pass


class NotSkeletonPoint(SkelforgeError):
    pass


class DimensionMismatch(SkelforgeError):
    pass


class NoSubmissions(SkelforgeError):
    pass


class IncompatibleLadders(SkelforgeError):
    pass


class MissingRoot(SkelforgeError):
    pass


class DecodeError(SkelforgeError):
    pass


class InvariantViolation(SkelforgeError):
    pass


class VersionMismatch(SkelforgeError):
    pass


class MissingLadder(SkelforgeError):
    pass
