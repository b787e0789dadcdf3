"""
Exception hierarchy shared by every chipletrank module
"""


class ChipletRankError(Exception):
    """Base class for all chipletrank errors"""
    exit_code = 3


class UsageError(ChipletRankError):
    """Unknown subcommand, unknown flag or bad flag value"""
    exit_code = 1


class DataError(ChipletRankError, ValueError):
    """Input data violates a contract"""
    exit_code = 2


class MalformedFile(DataError):
    pass


class InvalidSystem(DataError):
    pass


class InvalidOrder(DataError):
    pass


class Unplaceable(DataError):
    pass


class TooManyOrders(DataError):
    pass


class EmptyScatter(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class NoComparablePairs(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class EmptyGraph(DataError):
    pass


class EmptyDataset(DataError):
    pass


class MalformedCheckpoint(DataError):
    pass


class VersionMismatch(DataError):
    pass


class MissingSweep(DataError):
    pass


class IoError(ChipletRankError, OSError):
    exit_code = 2


class DegenerateSpread(UserWarning):
    """Temperature or wirelength spread is zero; every point gets slack 0"""
