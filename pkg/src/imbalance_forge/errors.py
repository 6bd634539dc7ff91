"""Exception types raised across the package.

Every error derives from :class:`ForgeError` (itself a ``ValueError``) so
callers can catch the whole family or a single condition.
"""


class ForgeError(ValueError):
    """Base class for all package errors."""


# ingestion / core data
class MissingColumn(ForgeError):
    pass


class NonNumericCell(ForgeError):
    pass


class EmptyFile(ForgeError):
    pass


class LabelNotBinary(ForgeError):
    pass


class ClassTooSmall(ForgeError):
    pass


# feature scoring
class TooFewDistinctValues(ForgeError):
    pass


class SingleClassInput(ForgeError):
    pass


# resampling
class KTooLarge(ForgeError):
    pass


class MinorityTooSmall(ForgeError):
    pass


class DatasetTooSmall(ForgeError):
    pass


# pca / models
class TooFewRows(ForgeError):
    pass


class DegenerateCovariance(ForgeError):
    pass


class DimensionMismatch(ForgeError):
    pass


class NonFiniteLoss(ForgeError):
    pass


class EmptyData(ForgeError):
    pass


class InvalidRates(ForgeError):
    pass


# metrics
class LengthMismatch(ForgeError):
    pass
