"""Exception hierarchy shared across the package."""


class ProdSphereError(Exception):
    pass


class DomainError(ProdSphereError, ValueError):
    """Argument outside [-1, 1] beyond the clamping tolerance."""


class UnsupportedDimension(ProdSphereError, ValueError):
    """Sphere dimension not covered (the circle cases m = 1 or M = 1)."""


class SchemeError(ProdSphereError, ValueError):
    """Invalid or unusable coefficient scheme."""


class DimensionMismatch(ProdSphereError, ValueError):
    pass


class PreconditionError(ProdSphereError, ValueError):
    pass


class QuadratureError(ProdSphereError, RuntimeError):
    pass


class WitnessSearchExhausted(ProdSphereError, RuntimeError):
    pass
