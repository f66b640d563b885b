"""Exception hierarchy shared by all geopack modules."""


class GeopackError(Exception):
    pass


# -- codec -----------------------------------------------------------------

class CodecError(GeopackError, ValueError):
    pass


class FieldMismatchError(CodecError, ArithmeticError):
    """Two exact surds live in different quadratic fields."""


class NotInFieldError(CodecError, ArithmeticError):
    """An exact square root leaves the current quadratic field."""


class PerpendicularError(CodecError):
    pass


class ParallelError(CodecError):
    pass


class DegeneratePencilError(CodecError):
    pass


class NoCommonSlopeError(CodecError):
    pass


class DegenerateFamilyError(CodecError):
    pass


class ApexAtInfinityError(CodecError):
    pass


class CoincidentApexError(CodecError):
    pass


class DegenerateAngleError(CodecError):
    pass


class DegenerateFigureError(CodecError):
    pass


# -- packing ---------------------------------------------------------------

class CorruptPackError(GeopackError, ValueError):
    pass


class PackError(GeopackError, ValueError):
    def __init__(self, message, group=None, cause=None):
        super().__init__(message)
        self.group = group
        self.cause = cause


class DegenerateGroupError(PackError):
    def __init__(self, message, level=None, group=None, cause=None):
        super().__init__(message, group=group, cause=cause)
        self.level = level


# -- point location --------------------------------------------------------

class IngestError(GeopackError, ValueError):
    def __init__(self, message, locus=None):
        super().__init__(message if locus is None else f"{message} (at {locus})")
        self.locus = locus


class TriangulationError(GeopackError, ValueError):
    pass
