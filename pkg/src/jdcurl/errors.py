"""Exception types raised across the package."""


class JDCurlError(Exception):
    """Base class for all package errors."""


class SpecMismatch(JDCurlError):
    """Two fields or diffeomorphisms live on different grids."""


class DimMismatch(JDCurlError):
    """An operation was called on a grid of the wrong dimension."""


class BumpTouchesBoundary(JDCurlError):
    """A localized deformation's support reaches the domain boundary."""


class ZeroInitialLoss(JDCurlError):
    """The starting loss is already exactly zero, so no ratio can be formed."""


class FoldedInput(JDCurlError):
    """The input map has a non-positive Jacobian determinant somewhere."""


class InadmissiblePrescription(JDCurlError):
    """A (f0, g0) prescription fails the mean / divergence-free checks."""


class ZeroField(JDCurlError):
    """A normalizing quantity vanished (e.g. the gradient of u is zero)."""


class SliceOutOfRange(JDCurlError):
    """A 3D render slice index lies outside the grid."""


class FieldFormatError(JDCurlError):
    """Base class for field-file decoding failures."""


class MalformedHeader(FieldFormatError):
    pass


class Truncation(FieldFormatError):
    pass


class DimensionMismatch(FieldFormatError):
    pass
