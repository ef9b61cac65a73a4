"""Exception types shared across the package."""


class UwdgError(Exception):
    """Base class for all package errors."""


class ConfigurationError(UwdgError):
    """Invalid user-supplied configuration (mesh parameters, CLI flags, ...)."""


class ProjectionUndefinedError(UwdgError):
    """The flux-matching projection does not exist for this flux/mesh/degree."""


class SingularSymbolError(UwdgError):
    """A frequency block of the block-circulant system is (near) singular."""

    def __init__(self, frequency: int, cond: float):
        self.frequency = frequency
        self.cond = cond
        super().__init__(
            f"block-circulant symbol A + omega^l B is singular at frequency "
            f"l={frequency} (cond ~ {cond:.3e}); the global projection "
            f"solvability assumption is violated"
        )


class ResidualUndefinedError(UwdgError):
    """Leading residual polynomial has a vanishing denominator."""


class InstabilityError(UwdgError):
    """Time integration blew up."""

    def __init__(self, dt: float, norm_ratio: float):
        self.dt = dt
        self.norm_ratio = norm_ratio
        import math
        growth = (f"grew by {norm_ratio:.3e}x" if math.isfinite(norm_ratio)
                  else "became non-finite")
        super().__init__(
            f"time integration unstable: L2 norm {growth} with dt={dt:.6e}"
        )


class UnsupportedOperationError(UwdgError):
    """Operation not available for this configuration (e.g. SIAC on nonuniform mesh)."""
