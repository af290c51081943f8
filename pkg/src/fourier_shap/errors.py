"""Exception hierarchy shared by all modules."""


class FourierShapError(Exception):
    """Base class for every error raised by this package."""


class MeasureSupportError(FourierShapError, ValueError):
    pass


class BasisConstructionError(FourierShapError, ValueError):
    pass


class DimensionError(FourierShapError, ValueError):
    pass


class DenseLimitError(FourierShapError, ValueError):
    pass


class CoalitionLimitError(FourierShapError, ValueError):
    pass


class KernelShapDegenerateError(FourierShapError, ArithmeticError):
    pass


class SpectrumError(FourierShapError, ValueError):
    pass


class ParameterError(FourierShapError, ValueError):
    pass


class KernelRecursionError(FourierShapError, ArithmeticError):
    pass


class SchemaError(FourierShapError, ValueError):
    pass


class DataError(FourierShapError, ValueError):
    pass


class FitError(FourierShapError, ArithmeticError):
    pass


class NumericError(FourierShapError, ArithmeticError):
    pass
