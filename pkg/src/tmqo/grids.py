"""Uniform angular-frequency grids for two-field kernels.

Axes are sampled FFT-style: ``omega_j = center + (j - N//2) * (span/N)``,
which keeps the centre frequency exactly on a sample and makes the time
domain directly reachable through the DFT (used by the conversion solver).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError


@dataclass(frozen=True)
class FrequencyAxis:
    center: float  # rad/s
    span: float  # rad/s, full covered extent
    points: int

    def __post_init__(self):
        if self.points < 16:
            raise ResolutionError(f"need at least 16 points per axis, got {self.points}")
        if self.span <= 0:
            raise ResolutionError("axis span must be positive")

    @property
    def spacing(self) -> float:
        return self.span / self.points

    @property
    def detunings(self) -> np.ndarray:
        n = self.points
        return (np.arange(n) - n // 2) * self.spacing

    @property
    def omegas(self) -> np.ndarray:
        return self.center + self.detunings

    @property
    def times(self) -> np.ndarray:
        """Conjugate time samples (s), in DFT (wrap-around) order."""
        return 2.0 * math.pi * np.fft.fftfreq(self.points, d=self.spacing)

    def refined(self, factor: int = 2) -> "FrequencyAxis":
        return FrequencyAxis(self.center, self.span, self.points * factor)


@dataclass(frozen=True)
class FrequencyGrid:
    """Product grid for a joint amplitude f(w_a, w_b).

    Axis a is the signal (PDC) or input (SFG) frequency, axis b the idler or
    output; values are indexed ``[a, b]``.
    """

    axis_a: FrequencyAxis
    axis_b: FrequencyAxis

    @property
    def shape(self):
        return (self.axis_a.points, self.axis_b.points)

    @property
    def measure(self) -> float:
        return self.axis_a.spacing * self.axis_b.spacing

    def meshes(self):
        wa, wb = self.axis_a.omegas, self.axis_b.omegas
        return np.meshgrid(wa, wb, indexing="ij")

    def refined(self, factor: int = 2) -> "FrequencyGrid":
        return FrequencyGrid(self.axis_a.refined(factor), self.axis_b.refined(factor))


def square_grid(center_a, center_b, span, points) -> FrequencyGrid:
    """Grid with equal span and point count on both axes."""
    return FrequencyGrid(FrequencyAxis(center_a, span, points),
                         FrequencyAxis(center_b, span, points))
