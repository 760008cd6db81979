"""Exception types shared across the toolkit.

Validation problems (bad inputs, bad configs) raise ValueError subclasses;
numerical failures (grids too coarse, propagation not converged) get their
own classes so callers can distinguish "fix your input" from "increase the
resolution".
"""


class WavelengthRangeError(ValueError):
    """Frequency outside the validity range of a material's dispersion data."""


class MaterialLoadError(ValueError):
    """Material database entry is malformed or uses an unknown dispersion form."""


class PatternError(ValueError):
    """Poling pattern violates its structural invariants."""


class ResolutionError(ValueError):
    """Grid too coarse (or too narrow) to resolve the requested kernels."""


class DegenerateFilterError(ValueError):
    """Spectral filter removes (almost) all probability from a state."""


class PreconditionError(ValueError):
    """Operation called outside its physical domain of validity."""


class ConvergenceError(RuntimeError):
    """Iterative solver did not reach its accuracy target."""


class IncompleteTomographyError(ValueError):
    """Measurement record set is not informationally complete."""


class UnsupportedDimensionError(ValueError):
    """Qudit dimension without a supported mutually-unbiased-basis construction."""
