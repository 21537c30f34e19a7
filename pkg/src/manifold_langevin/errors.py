"""Exception hierarchy shared across the package."""


class ManifoldLangevinError(Exception):
    pass


class DomainError(ManifoldLangevinError, ValueError):
    """Input outside the chart domain or outside a bound's regime."""


class ParameterError(ManifoldLangevinError, ValueError):
    pass


class MeshError(ManifoldLangevinError):
    pass


class ResolutionError(ManifoldLangevinError):
    pass


class EvaluationError(ManifoldLangevinError, FloatingPointError):
    pass


class SingularityError(ManifoldLangevinError, ArithmeticError):
    pass


class NumericalError(ManifoldLangevinError, ArithmeticError):
    pass


class SamplerError(ManifoldLangevinError, RuntimeError):
    pass


class ConfigError(ManifoldLangevinError, ValueError):
    pass
