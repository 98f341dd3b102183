"""Exception hierarchy shared by every module of the package."""


class NMBGError(Exception):
    """Base class for all errors raised by nmbg."""


class DegenerateSplit(NMBGError, ValueError):
    pass


class DegenerateLookAt(NMBGError, ValueError):
    pass


class DimensionMismatch(NMBGError, ValueError):
    pass


class ShapeMismatch(NMBGError, ValueError):
    pass


class IndexOutOfRange(NMBGError, IndexError):
    pass


class ImageTooSmall(NMBGError, ValueError):
    pass


class NonFiniteLoss(NMBGError, FloatingPointError):
    pass


class ParseError(NMBGError, ValueError):
    pass


class UnsupportedFormat(ParseError):
    pass


class NonTriangleFace(ParseError):
    pass


class UnsupportedCameraModel(ParseError):
    pass


class VersionMismatch(ParseError):
    pass


class IoError(NMBGError, OSError):
    pass
