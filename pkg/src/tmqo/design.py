"""Closed-form design helpers for Gaussian-model sources and converters.

Any centred two-dimensional Gaussian kernel ``exp(-A x^2 - B y^2 - C x y)``
has Hermite-Gauss Schmidt modes with a geometric weight spectrum; this is
Mehler's expansion.  These helpers map between the kernel coefficients, the
geometric ratio ``t``, the Schmidt number ``K = (1 + t^2)/(1 - t^2)``, and
the pump bandwidth needed to realise a requested K for a given
group-velocity geometry.  They are exact for the Gaussian phasematching
stand-in and are used to pin the shipped example configurations.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import PreconditionError
from .grids import FrequencyGrid
from .pdc import GAUSSIAN_PM_GAMMA, JointAmplitude

__all__ = [
    "mehler_weights", "schmidt_number_for_t", "t_for_schmidt_number",
    "gaussian_kernel_coefficients", "t_from_coefficients",
    "mode_sigmas_from_coefficients", "pump_sigma_for_schmidt_number",
    "matched_pump_sigma", "mehler_jsa",
]


def mehler_weights(t: float, n: int) -> np.ndarray:
    """First n geometric Schmidt weights (1 - t^2) t^(2k)."""
    if not 0.0 <= abs(t) < 1.0:
        raise PreconditionError("|t| must lie in [0, 1)")
    k = np.arange(n)
    return (1.0 - t * t) * (t * t) ** k


def schmidt_number_for_t(t: float) -> float:
    return (1.0 + t * t) / (1.0 - t * t)


def t_for_schmidt_number(k: float) -> float:
    if k < 1.0:
        raise PreconditionError("Schmidt number is >= 1")
    return math.sqrt((k - 1.0) / (k + 1.0))


def gaussian_kernel_coefficients(geometry, pump_sigma: float,
                                 gamma: float = GAUSSIAN_PM_GAMMA):
    """(A, B, C) of the joint Gaussian exponent for a first-order geometry.

    The pump contributes ``exp(-(x +/- y)^2 / (4 sigma^2))`` (PDC plus sign,
    SFG minus sign) and the Gaussian phasematching stand-in contributes
    ``exp(-gamma L^2 dk^2 / 4)`` with the linearised mismatch.
    """
    k1, k2 = geometry.group_slownesses()
    gl = gamma * geometry.length ** 2
    p = 1.0 / (4.0 * pump_sigma ** 2)
    a = p + gl * k1 ** 2 / 4.0
    b = p + gl * k2 ** 2 / 4.0
    if geometry.kind == "pdc":
        cc = 2.0 * p + gl * k1 * k2 / 2.0
    else:
        cc = -(2.0 * p + gl * k1 * k2 / 2.0)
    return a, b, cc


def t_from_coefficients(a: float, b: float, cc: float) -> float:
    """Geometric ratio t of the Schmidt spectrum of exp(-Ax^2 - By^2 - Cxy).

    Solves 4|t|/(1 + t^2) = |C|/sqrt(AB); the sign of t is -sign(C)
    (anticorrelated kernels have C > 0 and alternate mode phases).
    """
    if a <= 0 or b <= 0:
        raise PreconditionError("kernel must be normalisable (A, B > 0)")
    big_t = abs(cc) / math.sqrt(a * b)
    if big_t >= 2.0:
        raise PreconditionError("kernel is not normalisable (|C| >= 2 sqrt(AB))")
    if big_t == 0.0:
        return 0.0
    t = (2.0 - math.sqrt(4.0 - big_t * big_t)) / big_t
    return -t if cc > 0 else t


def mode_sigmas_from_coefficients(a: float, b: float, cc: float):
    """Intensity-std of the order-0 Schmidt mode on each axis."""
    t = t_from_coefficients(a, b, cc)
    p_t = (1.0 + t * t) / (2.0 * (1.0 - t * t))
    # kernel maps to the standard Mehler form under x -> x/sa, y -> y/sb
    sa = math.sqrt(p_t / a)
    sb = math.sqrt(p_t / b)
    return sa / math.sqrt(2.0), sb / math.sqrt(2.0)


def pump_sigma_for_schmidt_number(geometry, target_k: float,
                                  gamma: float = GAUSSIAN_PM_GAMMA,
                                  branch: str = "narrow") -> float:
    """Pump bandwidth that realises a requested Schmidt number.

    For a fixed first-order geometry the achievable K has a minimum
    ``(1 + xi)/(1 - xi)`` at the optimal pump width; away from it two pump
    widths give the same K.  ``branch`` picks "narrow" (pump-limited) or
    "broad" (phasematching-limited).
    """
    k1, k2 = geometry.group_slownesses()
    gl = gamma * geometry.length ** 2
    g1 = gl * k1 ** 2 / 4.0
    g2 = gl * k2 ** 2 / 4.0
    g12 = gl * k1 * k2 / 4.0
    t = t_for_schmidt_number(target_k)
    big_t2 = (4.0 * t / (1.0 + t * t)) ** 2
    # |C|^2 = 4 (P + G12)^2 and AB = (P + G1)(P + G2) with P = 1/(4 sigma^2)
    qa = 4.0 - big_t2
    qb = 8.0 * g12 - big_t2 * (g1 + g2)
    qc = 4.0 * g12 ** 2 - big_t2 * g1 * g2
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0:
        raise PreconditionError(
            f"K = {target_k:g} is below the geometry's minimum "
            f"(1+xi)/(1-xi); no pump width reaches it")
    roots = [(-qb + s * math.sqrt(disc)) / (2.0 * qa) for s in (+1.0, -1.0)]
    roots = sorted(r for r in roots if r > 0)
    if not roots:
        raise PreconditionError("no positive pump-sharpness root; geometry "
                                "cannot reach the requested K")
    p = roots[-1] if branch == "narrow" else roots[0]
    return 1.0 / (2.0 * math.sqrt(p))


def matched_pump_sigma(geometry, gamma: float = GAUSSIAN_PM_GAMMA) -> float:
    """Pump bandwidth of the separable (K = 1) point of a symmetric geometry.

    The cross coefficient of the joint Gaussian vanishes when
    ``1/(4 sigma^2) = -gamma L^2 k1 k2 / 4`` (PDC) which requires an
    anticorrelated mismatch, i.e. symmetric matching.
    """
    k1, k2 = geometry.group_slownesses()
    prod = k1 * k2 if geometry.kind == "pdc" else -k1 * k2
    if prod >= 0:
        raise PreconditionError("separable point needs opposing group-velocity "
                                "offsets (symmetric matching)")
    return 1.0 / (geometry.length * math.sqrt(gamma * (-prod)))


def mehler_jsa(grid: FrequencyGrid, t: float, sigma_a: float,
               sigma_b: float) -> JointAmplitude:
    """Correlated Gaussian kernel with exactly geometric Schmidt weights.

    The Schmidt modes are Hermite-Gauss functions of intensity-std
    ``sigma_a`` / ``sigma_b`` on the two axes and the weights are
    ``(1 - t^2) t^(2k)``; serves as the independent oracle for the numeric
    Schmidt decomposition.
    """
    if not abs(t) < 1.0:
        raise PreconditionError("|t| must be < 1")
    u = grid.axis_a.detunings / (math.sqrt(2.0) * sigma_a)
    v = grid.axis_b.detunings / (math.sqrt(2.0) * sigma_b)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    q = 1.0 - t * t
    expo = -(uu ** 2 + vv ** 2) * (1.0 + t * t) / (2.0 * q) + 2.0 * uu * vv * t / q
    return JointAmplitude.normalized(grid, np.exp(expo))
