"""Mode-selective sum-frequency conversion: transfer functions, Green's
functions at arbitrary pump strength, and two-stage interferometry.

Low-gain behaviour is captured by the normalised transfer function
``F(w_in, w_out) = alpha(w_out - w_in) * phi(dk)`` whose Schmidt
decomposition yields the conversion modes; at finite pump strength the full
input/output field mapping is obtained by split-step integration of the
linear Heisenberg equations in the pump's co-moving frame.  The coupling
parameter ``theta`` is normalised so that a perfectly separable process
converts its single mode with efficiency ``sin^2(theta)``; equivalently, the
first-order conversion kernel has L2 norm theta.  Pump pulse energy is
proportional to theta^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, PreconditionError, ResolutionError
from .grids import FrequencyGrid
from .pdc import (GAUSSIAN_PM_GAMMA, JointAmplitude, PumpSpec, SchmidtData,
                  _check_resolution, schmidt)

TWO_PI = 2.0 * math.pi

# Gaussian nonlinearity profile std (fraction of L) matching the Gaussian
# phasematching stand-in exp(-gamma (dk L/2)^2)
_GAUSS_PROFILE_STD = math.sqrt(GAUSSIAN_PM_GAMMA / 2.0)


def _profile_samples(profile, length, n):
    """Nonlinearity envelope w(z) at n midpoints of [0, length]."""
    z = (np.arange(n) + 0.5) * (length / n)
    if profile == "uniform":
        return z, np.ones(n)
    if profile == "gaussian":
        s = _GAUSS_PROFILE_STD * length
        return z, np.exp(-0.5 * ((z - 0.5 * length) / s) ** 2)
    if callable(profile):
        return z, np.asarray(profile(z), dtype=float)
    raise PreconditionError(f"unknown nonlinearity profile {profile!r}")


def build_transfer(geometry, pump: PumpSpec, grid: FrequencyGrid, *,
                   profile="uniform", gamma: float = GAUSSIAN_PM_GAMMA,
                   z_samples: int | None = None,
                   check_resolution: bool = True) -> JointAmplitude:
    """Normalised transfer function of the conversion process.

    ``profile`` matches :func:`solve_heisenberg`: "uniform" gives the closed
    sinc form, "gaussian" (or a callable w(z)) integrates the envelope over
    the device midpoints, reproducing the solver's effective phasematching
    exactly when ``z_samples`` equals the solver's step count.
    """
    if geometry.kind != "sfg":
        raise PreconditionError("build_transfer expects an SFG geometry")
    if check_resolution:
        _check_resolution(geometry, "sinc" if profile == "uniform" else "gaussian",
                          pump, grid, gamma)
    w_in, w_out = grid.meshes()
    alpha = pump.amplitude(w_out - w_in)
    dk = geometry.delta_k(w_in, w_out)
    length = geometry.length
    if profile == "uniform" and z_samples is None:
        x = dk * length / 2.0
        phi = np.sinc(x / math.pi) * np.exp(1j * x)
    else:
        n = z_samples or 1024
        z, w = _profile_samples(profile, length, n)
        dz = length / n
        phi = np.zeros(dk.shape, dtype=complex)
        for zj, wj in zip(z, w):
            phi += wj * np.exp(1j * dk * zj)
        phi *= dz / length
    return JointAmplitude.normalized(grid, alpha * phi)


operation_schmidt = schmidt


# ---------------------------------------------------------------------------
# low-gain metrics
# ---------------------------------------------------------------------------


def low_gain_efficiencies(weights, theta: float) -> np.ndarray:
    """Beam-splitter efficiencies sin^2(sqrt(lambda_k) theta)."""
    if theta < 0:
        raise PreconditionError("theta must be >= 0")
    lam = np.asarray(weights, dtype=float)
    return np.sin(np.sqrt(lam) * theta) ** 2


def selectivity(etas) -> float:
    """S = eta_0^2 / sum(eta_k); index 0 is the targeted mode."""
    e = np.asarray(etas, dtype=float)
    total = e.sum()
    if total == 0.0:
        return 0.0
    return float(e[0] ** 2 / total)


def separability(etas, j: int, d: int) -> float:
    """sigma_j = eta_j / sum_{k=0}^{d} eta_k within a (d+1)-mode alphabet."""
    e = np.asarray(etas, dtype=float)
    if not 0 <= j < d <= e.size:
        raise PreconditionError(f"need 0 <= j < d <= len(etas), got j={j}, d={d}")
    denom = e[:d + 1].sum()
    if denom == 0.0:
        return 0.0
    return float(e[j] / denom)


def extinction_ratio(etas, j: int) -> float:
    """10 log10(eta_j / max_{k != j} eta_k); +inf when all others vanish."""
    e = np.asarray(etas, dtype=float)
    others = np.delete(e, j)
    if others.size == 0 or np.max(others) == 0.0:
        return math.inf
    return float(10.0 * math.log10(e[j] / np.max(others)))


# ---------------------------------------------------------------------------
# Heisenberg propagation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GreensFunctions:
    """Frequency-domain Bogoliubov blocks of a lossless conversion.

    The stacked operator ``[[g_aa, g_ac], [g_ca, g_cc]]`` maps initial
    (input-band, output-band) amplitude vectors to final ones and is unitary.
    """

    grid: FrequencyGrid
    g_aa: np.ndarray
    g_ac: np.ndarray
    g_ca: np.ndarray
    g_cc: np.ndarray
    theta: float
    # spectral phases that retime the converted band to the device input
    # frame (undo its group-velocity walk-off); used when composing stages
    dewalk_c: np.ndarray | None = None

    def as_matrix(self) -> np.ndarray:
        top = np.hstack([self.g_aa, self.g_ac])
        bot = np.hstack([self.g_ca, self.g_cc])
        return np.vstack([top, bot])

    def unitarity_defect(self) -> float:
        m = self.as_matrix()
        eye = np.eye(m.shape[0])
        return float(np.linalg.norm(m.conj().T @ m - eye))

    def apply(self, a_in, c_in):
        a = np.asarray(a_in, dtype=complex)
        c = np.asarray(c_in, dtype=complex)
        return self.g_aa @ a + self.g_ac @ c, self.g_ca @ a + self.g_cc @ c

    def conversion_efficiencies(self, k: int | None = None):
        """Descending mode efficiencies (squared singular values of g_ca)."""
        s = np.linalg.svd(self.g_ca, compute_uv=False)
        e = np.sort(s ** 2)[::-1]
        return e[:k] if k is not None else e

    def dominant_input_mode(self) -> np.ndarray:
        """Bin-space unit vector of the most strongly converted input mode."""
        _, _, vh = np.linalg.svd(self.g_ca)
        return vh[0].conj()

    def mode_efficiency(self, vector) -> float:
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return float(np.linalg.norm(self.g_ca @ v) ** 2)

    def time_kernel(self, block: str = "ca") -> np.ndarray:
        """Selected block transformed to the time domain (for mapping plots)."""
        m = getattr(self, f"g_{block}")
        n = m.shape[0]
        sgn = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        out = np.fft.fft(m, axis=0) * sgn[:, None]
        out = np.fft.ifft(out * sgn[None, :], axis=1)
        return out


def _prep_propagation(geometry, pump, grid, z_steps, profile, pad):
    if geometry.kind != "sfg":
        raise PreconditionError("solve_heisenberg expects an SFG geometry")
    if z_steps < 100:
        raise PreconditionError("z_steps must be at least 100")
    ax_a, ax_c = grid.axis_a, grid.axis_b
    if ax_a.points != ax_c.points:
        raise ResolutionError("input and output axes need equal point counts")
    if ax_a.points % 2 or pad % 2:
        raise ResolutionError("propagation grid and pad need even point counts")
    if abs(ax_a.spacing - ax_c.spacing) > 1e-9 * ax_a.spacing:
        raise ResolutionError("input and output axes need equal spacing")
    # the DFT product in time is a circular convolution; pad bins on both
    # band edges keep pump-induced wrap-around coupling off the reported grid
    n = ax_a.points + 2 * pad
    nu = (np.arange(n) - n // 2) * ax_a.spacing
    nu_a, nu_c = geometry.group_slownesses()
    length = geometry.length
    dz = length / z_steps
    _, w = _profile_samples(profile, length, z_steps)
    # pump temporal profile on the DFT time grid (twiddle accounts for the
    # centred detuning layout)
    sgn = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    p_hat = pump.envelope(nu)
    p_time = sgn * np.fft.fft(p_hat)
    half_a = np.exp(0.5j * nu_a * nu * dz)
    half_c = np.exp(0.5j * nu_c * nu * dz)
    return n, sgn, p_time, w, dz, half_a, half_c


def _propagate(blocks, sgn, p_time, w, dz, half_a, half_c, g, linearized=False):
    """Strang split-step evolution of stacked column vectors.

    ``blocks`` is (A, C), each (N, M) in the frequency domain.  The rotation
    step acts pointwise in time with angle g * w_j * |p(tau)| * dz; in
    ``linearized`` mode only the first-order A -> C transfer accumulates,
    which gives the exact first-order kernel of this discretisation.
    """
    a, c = blocks
    absp = np.abs(p_time)
    phase = np.ones_like(p_time)
    nz = absp > 0
    phase[nz] = p_time[nz] / absp[nz]
    for wj in w:
        a *= half_a[:, None]
        c *= half_c[:, None]
        at = sgn[:, None] * np.fft.fft(a, axis=0)
        ct = sgn[:, None] * np.fft.fft(c, axis=0)
        ang = (g * wj * dz) * absp
        if linearized:
            ct = ct + (1j * ang * phase)[:, None] * at
        else:
            cos = np.cos(ang)[:, None]
            sin = np.sin(ang)
            at, ct = (cos * at + (1j * np.conj(phase) * sin)[:, None] * ct,
                      (1j * phase * sin)[:, None] * at + cos * ct)
        a = np.fft.ifft(sgn[:, None] * at, axis=0)
        c = np.fft.ifft(sgn[:, None] * ct, axis=0)
        a *= half_a[:, None]
        c *= half_c[:, None]
    return a, c


def calibrate_coupling(geometry, pump: PumpSpec, grid: FrequencyGrid,
                       z_steps: int = 400, profile="uniform",
                       pad: int = 0) -> float:
    """L2 norm of the first-order conversion kernel at unit coupling.

    Dividing theta by this number gives the raw coupling g for
    :func:`solve_heisenberg`; the result depends only on the geometry, pump,
    grid, and discretisation, so sweeps can reuse it.
    """
    n, sgn, p_time, w, dz, half_a, half_c = _prep_propagation(
        geometry, pump, grid, z_steps, profile, pad)
    m = grid.axis_a.points
    a = np.zeros((n, m), dtype=complex)
    a[pad:pad + m] = np.eye(m)
    c = np.zeros((n, m), dtype=complex)
    _, c = _propagate((a, c), sgn, p_time, w, dz, half_a, half_c, 1.0,
                      linearized=True)
    return float(np.linalg.norm(c[pad:pad + m]))


def solve_heisenberg(geometry, pump: PumpSpec, theta: float, grid: FrequencyGrid,
                     z_steps: int = 400, *, profile="uniform",
                     calibration: float | None = None,
                     pad: int = 0) -> GreensFunctions:
    """Green's functions of the conversion at coupling strength theta.

    Split-step integration of the undepleted-pump Heisenberg equations in the
    pump frame: each step applies the group-velocity walk-off as spectral
    phases and a pointwise two-level rotation between the input and output
    time-domain amplitudes with angle proportional to the local pump
    amplitude.  Columns of the returned blocks are the propagated grid basis
    vectors.

    ``pad`` adds guard bins on both edges of each band during propagation
    (dropped from the returned matrices); use it for geometries whose
    phasematching ridge runs along the anti-diagonal, where the circular
    pump convolution would otherwise fold corner couplings into the band.
    """
    if theta < 0:
        raise PreconditionError("theta must be >= 0")
    n, sgn, p_time, w, dz, half_a, half_c = _prep_propagation(
        geometry, pump, grid, z_steps, profile, pad)
    if calibration is None:
        calibration = calibrate_coupling(geometry, pump, grid, z_steps, profile, pad)
    g = theta / calibration if theta > 0 else 0.0
    m = grid.axis_a.points
    a = np.zeros((n, 2 * m), dtype=complex)
    a[pad:pad + m, :m] = np.eye(m)
    c = np.zeros((n, 2 * m), dtype=complex)
    c[pad:pad + m, m:] = np.eye(m)
    a, c = _propagate((a, c), sgn, p_time, w, dz, half_a, half_c, g)
    sl = slice(pad, pad + m)
    _, nu_c = geometry.group_slownesses()
    dewalk = np.exp(-1j * nu_c * grid.axis_b.detunings * geometry.length)
    gf = GreensFunctions(grid, g_aa=a[sl, :m], g_ac=a[sl, m:],
                         g_ca=c[sl, :m], g_cc=c[sl, m:], theta=theta,
                         dewalk_c=dewalk)
    defect = gf.unitarity_defect()
    if defect > 1e-4:
        raise ConvergenceError(
            f"unitarity defect {defect:.2e} exceeds 1e-4; increase z_steps "
            f"or the guard-band pad")
    return gf


# ---------------------------------------------------------------------------
# saturation sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    theta: float
    pump_energy_rel: float  # proportional to theta^2
    eta0: float
    selectivity: float
    separability0: float


def saturation_sweep(geometry, pump: PumpSpec, thetas, grid: FrequencyGrid,
                     z_steps: int = 400, *, profile="uniform",
                     alphabet: int = 8):
    """Efficiency, selectivity, and separability against coupling strength."""
    cal = calibrate_coupling(geometry, pump, grid, z_steps, profile)
    points = []
    solutions = []
    for th in np.atleast_1d(np.asarray(thetas, dtype=float)):
        gf = solve_heisenberg(geometry, pump, float(th), grid, z_steps,
                              profile=profile, calibration=cal)
        e = gf.conversion_efficiencies()
        d = min(alphabet, e.size - 1)
        points.append(SweepPoint(float(th), float(th) ** 2, float(e[0]),
                                 selectivity(e), separability(e, 0, d)))
        solutions.append(gf)
    return points, solutions


def find_theta_for_efficiency(geometry, pump: PumpSpec, grid: FrequencyGrid,
                              target: float = 0.5, z_steps: int = 400, *,
                              profile="uniform", tol: float = 5e-4,
                              max_iter: int = 40):
    """Coupling strength whose dominant-mode efficiency hits ``target``.

    Bisection on the monotone rise below first saturation, seeded by the
    low-gain estimate theta = asin(sqrt(target)).
    """
    cal = calibrate_coupling(geometry, pump, grid, z_steps, profile)

    def eta0(th):
        gf = solve_heisenberg(geometry, pump, th, grid, z_steps,
                              profile=profile, calibration=cal)
        return float(gf.conversion_efficiencies(1)[0]), gf

    lo, hi = 0.0, math.asin(math.sqrt(min(target, 1.0 - 1e-12)))
    val, gf = eta0(hi)
    while val < target and hi < 0.5 * math.pi:
        lo, hi = hi, min(hi * 1.5, 0.5 * math.pi)
        val, gf = eta0(hi)
    if val < target:
        raise ConvergenceError(f"efficiency {val:.3f} below target before saturation")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val, gf = eta0(mid)
        if abs(val - target) <= tol:
            return mid, gf
        if val < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), gf


# ---------------------------------------------------------------------------
# temporal-mode interferometry
# ---------------------------------------------------------------------------


def tmi_compose(stage: GreensFunctions, phase: float, *,
                resync: bool = True) -> GreensFunctions:
    """Two identical stages with a tunable phase on the converted band.

    The composite is ``stage . R . stage`` with ``R = diag(1, e^{i phase} D)``
    acting between the stages.  With ``resync`` (the operating condition of
    two-stage interferometers) ``D`` retimes the converted pulse to the
    second stage's pump by undoing its accumulated group-velocity walk-off;
    the tunable interstage control remains the single uniform phase.  Each
    stage must sit near 50% conversion for its dominant mode.
    """
    eta0 = float(stage.conversion_efficiencies(1)[0])
    if not 0.45 <= eta0 <= 0.55:
        raise PreconditionError(
            f"stage efficiency {eta0:.3f} outside the [0.45, 0.55] window")
    c_phase = complex(math.cos(phase), math.sin(phase))
    if resync:
        if stage.dewalk_c is None:
            raise PreconditionError("stage carries no walk-off record; "
                                    "re-synchronisation unavailable")
        c_phase = c_phase * stage.dewalk_c
    return _compose_with_phase(stage, stage, c_phase)


def _compose_with_phase(s2: GreensFunctions, s1: GreensFunctions,
                        ph) -> GreensFunctions:
    """Block product s2 . diag(1, ph) . s1; ph is a scalar or a diagonal."""
    if np.ndim(ph) == 1:
        mid_ca = ph[:, None] * s1.g_ca
        mid_cc = ph[:, None] * s1.g_cc
    else:
        mid_ca = ph * s1.g_ca
        mid_cc = ph * s1.g_cc
    return GreensFunctions(
        s1.grid,
        g_aa=s2.g_aa @ s1.g_aa + s2.g_ac @ mid_ca,
        g_ac=s2.g_aa @ s1.g_ac + s2.g_ac @ mid_cc,
        g_ca=s2.g_ca @ s1.g_aa + s2.g_cc @ mid_ca,
        g_cc=s2.g_ca @ s1.g_ac + s2.g_cc @ mid_cc,
        theta=s1.theta + s2.theta,
        dewalk_c=None if s1.dewalk_c is None else s1.dewalk_c ** 2)


@dataclass(frozen=True)
class TmiResult:
    phase: float
    composite: GreensFunctions
    selectivity: float
    target_efficiency: float


def tmi_optimize(stage: GreensFunctions, *, resync: bool = True) -> TmiResult:
    """Interstage phase maximising conversion of the stage's dominant mode.

    The target-mode conversion amplitude is ``m1 + e^{i phase} m2`` with
    ``m1 = G_ca G_aa a0`` and ``m2 = G_cc D G_ca a0``, so the optimum phase
    is available in closed form; the composite selectivity is evaluated
    there.
    """
    a0 = stage.dominant_input_mode()
    m1 = stage.g_ca @ (stage.g_aa @ a0)
    mid = stage.g_ca @ a0
    if resync:
        if stage.dewalk_c is None:
            raise PreconditionError("stage carries no walk-off record; "
                                    "re-synchronisation unavailable")
        mid = stage.dewalk_c * mid
    m2 = stage.g_cc @ mid
    phase = float(-np.angle(np.vdot(m1, m2)))
    comp = tmi_compose(stage, phase, resync=resync)
    e = comp.conversion_efficiencies()
    return TmiResult(phase, comp, selectivity(e), comp.mode_efficiency(a0))
