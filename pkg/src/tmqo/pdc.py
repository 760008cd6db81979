"""Joint spectral amplitudes of photon-pair sources and their mode structure.

The two-photon amplitude of a pair source is modelled as the product of the
pump envelope at the sum frequency and the phasematching amplitude at the
local phase mismatch,

    f(w_s, w_i) = alpha(w_s + w_i) * phi(dk(w_s, w_i)),

normalised so the squared modulus integrates to one on its grid.  Schmidt
analysis, heralded purities under per-arm spectral filters, and pump-shaped
state engineering all operate on this object.

Bandwidth convention: ``sigma`` parameters are the standard deviation of the
*intensity* spectrum of the underlying Gaussian, i.e. ``|alpha|^2 ~
exp(-nu^2 / (2 sigma^2))``.  Hermite-Gauss orders share the same Gaussian
envelope, so order n has intensity std ``sigma * sqrt(2n + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermval

from . import poling as poling_mod
from .dispersion import FirstOrderProcess, gvm_contrast
from .errors import DegenerateFilterError, PreconditionError, ResolutionError
from .grids import FrequencyAxis, FrequencyGrid, square_grid

TWO_PI = 2.0 * math.pi

# Gaussian phasematching stand-in exp(-gamma (dk L / 2)^2); gamma matches the
# amplitude FWHM of sinc(dk L / 2).
GAUSSIAN_PM_GAMMA = 0.193

_SINC_AMP_HALF = 1.8954942670339809  # sinc(x) = 1/2


# ---------------------------------------------------------------------------
# pump envelopes
# ---------------------------------------------------------------------------


def _hg_normalized(nu, sigma, n):
    """Hermite-Gauss function of intensity-std sigma, unit L2 norm."""
    x = nu / (math.sqrt(2.0) * sigma)
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    norm = math.sqrt(math.sqrt(2.0 * math.pi) * sigma * (2.0 ** n) * math.factorial(n))
    return hermval(x, coeffs) * np.exp(-nu ** 2 / (4.0 * sigma ** 2)) / norm


@dataclass(frozen=True)
class PumpSpec:
    """Spectral envelope of the pump pulse, as a function of detuning.

    kinds:
      * ``gaussian`` — Gaussian of intensity-std ``sigma``
      * ``hermite_gauss`` — order ``order`` on the same Gaussian envelope
      * ``time_bins`` — coherent superposition of ``len(delays)`` copies of
        the Gaussian pulse displaced in time; ``amplitudes`` are normalised
        to unit total probability
      * ``table`` — tabulated complex amplitude over detuning
    An optional spectral phase polynomial (coefficients of nu^0, nu^1, ...)
    multiplies the envelope by ``exp(i * poly(nu))``.
    """

    kind: str
    center: float  # rad/s
    sigma: float = 0.0  # rad/s, intensity std
    order: int = 0
    delays: tuple = ()
    amplitudes: tuple = ()
    phase_poly: tuple = ()
    table: tuple | None = None  # (detuning array, complex amplitude array)

    def __post_init__(self):
        if self.kind not in ("gaussian", "hermite_gauss", "time_bins", "table"):
            raise PreconditionError(f"unknown pump kind {self.kind!r}")
        if self.kind != "table" and self.sigma <= 0:
            raise PreconditionError("pump bandwidth sigma must be positive")
        if self.kind == "hermite_gauss" and self.order < 0:
            raise PreconditionError("hermite_gauss order must be >= 0")
        if self.kind == "time_bins":
            if len(self.delays) == 0 or len(self.delays) != len(self.amplitudes):
                raise PreconditionError("time_bins needs matching delays/amplitudes")
            a = np.asarray(self.amplitudes, dtype=complex)
            a = a / math.sqrt(float(np.sum(np.abs(a) ** 2)))
            object.__setattr__(self, "amplitudes", tuple(a))
            object.__setattr__(self, "delays", tuple(float(t) for t in self.delays))
        if self.kind == "table" and self.table is None:
            raise PreconditionError("table pump needs samples")

    # -- evaluation -----------------------------------------------------------

    def envelope(self, detuning):
        """Unit-norm complex envelope alpha(nu); norm analytic except for tables."""
        nu = np.asarray(detuning, dtype=float)
        if self.kind == "gaussian":
            out = _hg_normalized(nu, self.sigma, 0).astype(complex)
        elif self.kind == "hermite_gauss":
            out = _hg_normalized(nu, self.sigma, self.order).astype(complex)
        elif self.kind == "time_bins":
            a = np.asarray(self.amplitudes, dtype=complex)
            tau = np.asarray(self.delays, dtype=float)
            comb = np.zeros(nu.shape, dtype=complex)
            for am, tm in zip(a, tau):
                comb += am * np.exp(1j * nu * tm)
            # Gram normalisation: overlaps of delayed copies are Gaussian in
            # the delay difference
            gram = np.exp(-0.5 * (self.sigma * (tau[:, None] - tau[None, :])) ** 2)
            nrm = math.sqrt(float(np.real(np.conj(a) @ gram @ a)))
            out = comb * _hg_normalized(nu, self.sigma, 0) / nrm
        else:
            nu_t, amp_t = self.table
            nu_t = np.asarray(nu_t, dtype=float)
            amp_t = np.asarray(amp_t, dtype=complex)
            nrm = math.sqrt(float(np.trapezoid(np.abs(amp_t) ** 2, nu_t)))
            out = (np.interp(nu, nu_t, amp_t.real) + 1j * np.interp(nu, nu_t, amp_t.imag)) / nrm
        if self.phase_poly:
            phase = np.polynomial.polynomial.polyval(nu, np.asarray(self.phase_poly))
            out = out * np.exp(1j * phase)
        return out

    def amplitude(self, omega_sum):
        return self.envelope(np.asarray(omega_sum, dtype=float) - self.center)

    # -- effective widths (used for resolution checks) ------------------------

    def intensity_std(self) -> float:
        if self.kind == "hermite_gauss":
            return self.sigma * math.sqrt(2 * self.order + 1)
        if self.kind == "table":
            nu, amp = np.asarray(self.table[0]), np.asarray(self.table[1])
            p = np.abs(amp) ** 2
            p = p / np.trapezoid(p, nu)
            mu = np.trapezoid(nu * p, nu)
            return math.sqrt(max(float(np.trapezoid((nu - mu) ** 2 * p, nu)), 0.0))
        return self.sigma

    def max_delay(self) -> float:
        return max((abs(t) for t in self.delays), default=0.0)


def gaussian_pump(center, sigma) -> PumpSpec:
    return PumpSpec("gaussian", center, sigma)


def hermite_gauss_pump(center, sigma, order) -> PumpSpec:
    return PumpSpec("hermite_gauss", center, sigma, order=order)


def time_bin_pump(center, sigma, delays, amplitudes=None) -> PumpSpec:
    if amplitudes is None:
        amplitudes = tuple(1.0 for _ in delays)
    return PumpSpec("time_bins", center, sigma, delays=tuple(delays),
                    amplitudes=tuple(amplitudes))


def pump_envelope(spec: PumpSpec, omega_sum):
    """Pump amplitude at absolute sum frequency omega_sum (rad/s)."""
    return spec.amplitude(omega_sum)


# ---------------------------------------------------------------------------
# joint amplitudes
# ---------------------------------------------------------------------------


def _fsum_sq(values) -> float:
    return math.fsum(np.abs(np.asarray(values).ravel()) ** 2)


@dataclass(frozen=True)
class JointAmplitude:
    """Complex kernel on a grid with unit quadrature norm."""

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ResolutionError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v.view(float))):
            raise PreconditionError("joint amplitude contains non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def normalized(cls, grid, raw):
        raw = np.asarray(raw, dtype=complex)
        if not np.all(np.isfinite(raw.view(float))):
            raise PreconditionError("joint amplitude contains non-finite entries")
        total = _fsum_sq(raw) * grid.measure
        if total <= 0:
            raise PreconditionError("cannot normalise an identically zero amplitude")
        return cls(grid, raw / math.sqrt(total))

    def norm_residual(self) -> float:
        return abs(_fsum_sq(self.values) * self.grid.measure - 1.0)

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def _pm_dk_fwhm(pm, length, gamma):
    """Amplitude FWHM of |phi| in dk, for resolution checks."""
    if isinstance(pm, poling_mod.PolingPattern):
        if pm.base_period is None:
            span = 40.0 * TWO_PI / length
            center = 0.0
        else:
            span = 20.0 * TWO_PI / length
            center = TWO_PI / pm.base_period
        dk = np.linspace(center - span, center + span, 4001)
        a = np.abs(poling_mod.phasematching_amplitude(pm, dk))
        half = np.max(a) / 2.0
        above = dk[a >= half]
        return float(above.max() - above.min())
    if pm == "sinc":
        return 4.0 * _SINC_AMP_HALF / length
    if pm == "gaussian":
        return (4.0 / length) * math.sqrt(math.log(2.0) / gamma)
    return math.inf  # custom callables: caller's responsibility


def _resolve_phi(geometry, pm, wa_mesh, wb_mesh, gamma):
    length = geometry.length
    if isinstance(pm, poling_mod.PolingPattern):
        if isinstance(geometry, FirstOrderProcess):
            if pm.base_period is None:
                raise PreconditionError(
                    "pattern lacks a base period; cannot attach it to a "
                    "first-order geometry")
            lattice = _lattice_mismatch(geometry, wa_mesh, wb_mesh)
            if lattice is not None:
                dk_1d, idx = lattice
                phi_1d = poling_mod.phasematching_amplitude(
                    pm, dk_1d + TWO_PI / pm.base_period)
                return phi_1d[idx]
            dk = geometry.delta_k(wa_mesh, wb_mesh) + TWO_PI / pm.base_period
        else:
            dk = geometry.bare_mismatch(wa_mesh, wb_mesh)
        return poling_mod.phasematching_amplitude(pm, dk)
    dk = geometry.delta_k(wa_mesh, wb_mesh)
    if pm == "sinc":
        x = dk * length / 2.0
        return np.sinc(x / math.pi) * np.exp(1j * x)
    if pm == "gaussian":
        return np.exp(-gamma * (dk * length / 2.0) ** 2).astype(complex)
    if callable(pm):
        return np.asarray(pm(dk), dtype=complex)
    raise PreconditionError(f"unknown phasematching model {pm!r}")


def _lattice_mismatch(geometry, wa_mesh, wb_mesh):
    """For symmetric first-order grids the mismatch lives on a 1-D lattice.

    When the two axes share their spacing and the slownesses are opposite,
    dk = s * dnu * (i - j); evaluating phi on the 2N-1 lattice values instead
    of the full N x N mesh makes poling-pattern kernels cheap.  Returns
    (dk values, index matrix) or None when the shortcut does not apply.
    """
    s1, s2 = geometry.group_slownesses()
    if geometry.kind != "pdc" or abs(s1 + s2) > 1e-12 * abs(s1):
        return None
    na, nb = wa_mesh.shape
    da = wa_mesh[1, 0] - wa_mesh[0, 0] if na > 1 else 0.0
    db = wb_mesh[0, 1] - wb_mesh[0, 0] if nb > 1 else 0.0
    if abs(da - db) > 1e-12 * abs(da):
        return None
    # dk at (i, j) = dk00 + s1 * da * (i - j); lattice index i - j + (nb - 1)
    dk00 = float(geometry.delta_k(wa_mesh[0, 0], wb_mesh[0, 0]))
    m = np.arange(na + nb - 1) - (nb - 1)
    dk_1d = dk00 + s1 * da * m
    idx = np.arange(na)[:, None] - np.arange(nb)[None, :] + (nb - 1)
    return dk_1d, idx


def _check_resolution(geometry, pm, pump, grid, gamma):
    da, db = grid.axis_a.spacing, grid.axis_b.spacing
    step = min(da, db)
    # pump
    p_std = pump.intensity_std()
    p_fwhm = 2.0 * math.sqrt(2.0 * math.log(2.0)) * p_std
    if p_fwhm < 4.0 * step:
        raise ResolutionError(
            f"pump FWHM {p_fwhm:.3e} rad/s spans fewer than 4 grid steps "
            f"({step:.3e} rad/s)")
    tau = pump.max_delay()
    if tau > 0 and tau * max(da, db) > math.pi / 2:
        raise ResolutionError("grid too coarse to resolve the pump's time-bin "
                              "interference fringes")
    # phasematching, projected onto the frequency plane
    nu_a, nu_b = geometry.group_slownesses()
    grad = math.hypot(nu_a, nu_b)
    pm_fwhm_nu = math.inf
    if grad > 0:
        pm_fwhm_nu = _pm_dk_fwhm(pm, geometry.length, gamma) / grad
        if pm_fwhm_nu < 4.0 * step:
            raise ResolutionError(
                f"phasematching FWHM {pm_fwhm_nu:.3e} rad/s spans fewer than 4 "
                f"grid steps ({step:.3e} rad/s)")
    # spans must cover the kernels
    width = max(p_std, pm_fwhm_nu / (2.0 * math.sqrt(2.0 * math.log(2.0)))
                if math.isfinite(pm_fwhm_nu) else 0.0)
    for ax, name in ((grid.axis_a, "a"), (grid.axis_b, "b")):
        if ax.span < 6.0 * width * (1.0 - 1e-9):
            raise ResolutionError(
                f"axis {name} span {ax.span:.3e} rad/s is below 6x the widest "
                f"kernel width {width:.3e} rad/s")


def build_jsa(geometry, pm, pump: PumpSpec, grid: FrequencyGrid, *,
              gamma: float = GAUSSIAN_PM_GAMMA,
              check_resolution: bool = True) -> JointAmplitude:
    """Pump envelope times phasematching, normalised on the grid.

    ``pm`` selects the phasematching amplitude: ``"sinc"`` for uniform
    poling, ``"gaussian"`` for the Gaussian stand-in
    ``exp(-gamma (dk L/2)^2)``, a :class:`~tmqo.poling.PolingPattern` for an
    explicit grating (evaluated through its exact Fourier integral), or any
    callable ``phi(dk)``.
    """
    if geometry.kind != "pdc":
        raise PreconditionError("build_jsa expects a PDC geometry")
    if check_resolution:
        _check_resolution(geometry, pm, pump, grid, gamma)
    wa, wb = grid.meshes()
    alpha = pump.amplitude(wa + wb)
    phi = _resolve_phi(geometry, pm, wa, wb, gamma)
    return JointAmplitude.normalized(grid, alpha * phi)


def auto_grid(geometry, pump: PumpSpec, points: int = 256,
              span_factor: float = 12.0, *, pm="sinc",
              gamma: float = GAUSSIAN_PM_GAMMA) -> FrequencyGrid:
    """Square grid centred on the photon frequencies, sized from the kernels."""
    nu_a, nu_b = geometry.group_slownesses()
    grad = math.hypot(nu_a, nu_b)
    pm_std = 0.0
    if grad > 0:
        fw = _pm_dk_fwhm(pm, geometry.length, gamma)
        if math.isfinite(fw):
            pm_std = fw / grad / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    width = max(pump.intensity_std(), pm_std)
    span = span_factor * width
    _, ca, cb = geometry.centers
    return square_grid(ca, cb, span, points)


# ---------------------------------------------------------------------------
# Schmidt analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchmidtData:
    """Schmidt weights and paired orthonormal mode functions.

    ``modes_a[k]`` / ``modes_b[k]`` are the k-th mode of the first / second
    axis (signal/idler for PDC, input/output for frequency conversion),
    orthonormal under the grid measure.
    """

    weights: np.ndarray
    modes_a: np.ndarray  # (k, Na)
    modes_b: np.ndarray  # (k, Nb)
    spacing_a: float
    spacing_b: float

    @property
    def schmidt_number(self) -> float:
        return schmidt_number(self)


def schmidt(jsa: JointAmplitude) -> SchmidtData:
    """Schmidt decomposition via SVD with grid-measure weighting."""
    v = jsa.values
    if not np.all(np.isfinite(v.view(float))):
        raise PreconditionError("joint amplitude contains non-finite entries")
    da, db = jsa.grid.axis_a.spacing, jsa.grid.axis_b.spacing
    m = v * math.sqrt(da * db)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SchmidtData(weights=s ** 2,
                       modes_a=(u / math.sqrt(da)).T,
                       modes_b=vh / math.sqrt(db),
                       spacing_a=da, spacing_b=db)


def _weights_of(data):
    if isinstance(data, SchmidtData):
        return np.asarray(data.weights, dtype=float)
    return np.asarray(data, dtype=float)


def schmidt_number(data) -> float:
    """K = 1 / sum(lambda_k^2) for weights normalised to unit sum."""
    lam = _weights_of(data)
    total = lam.sum()
    return float(total ** 2 / np.sum(lam ** 2))


def purity(data) -> float:
    """Spectral purity of either reduced single photon, P = 1/K."""
    return 1.0 / schmidt_number(data)


def marginal_g2(data) -> float:
    """Zero-delay marginal autocorrelation g2 = 1 + P of one arm."""
    return 1.0 + purity(data)


def reconstruct_jsa(data: SchmidtData, grid: FrequencyGrid, k=None) -> np.ndarray:
    """Sum sqrt(lambda_k) g_k h_k over the first k modes."""
    k = data.weights.size if k is None else k
    amp = np.sqrt(data.weights[:k])
    return (data.modes_a[:k].T * amp) @ data.modes_b[:k]


# ---------------------------------------------------------------------------
# spectral filters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Passband:
    """Per-arm intensity transmission: rectangular, gaussian, or open."""

    kind: str = "none"
    lo: float = -math.inf
    hi: float = math.inf
    center: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "rectangular", "gaussian"):
            raise PreconditionError(f"unknown passband kind {self.kind!r}")
        if self.kind == "rectangular" and not self.lo < self.hi:
            raise PreconditionError("rectangular passband needs lo < hi")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise PreconditionError("gaussian passband needs sigma > 0")

    def amplitude(self, omega):
        w = np.asarray(omega, dtype=float)
        if self.kind == "none":
            return np.ones_like(w)
        if self.kind == "rectangular":
            return ((w >= self.lo) & (w <= self.hi)).astype(float)
        return np.exp(-((w - self.center) ** 2) / (4.0 * self.sigma ** 2))


def rectangular_filter(lo, hi) -> Passband:
    return Passband("rectangular", lo=float(lo), hi=float(hi))


def gaussian_filter(center, sigma) -> Passband:
    return Passband("gaussian", center=float(center), sigma=float(sigma))


OPEN = Passband("none")


@dataclass(frozen=True)
class FilterSpec:
    signal: Passband = OPEN
    idler: Passband = OPEN


def apply_filter(jsa: JointAmplitude, filters: FilterSpec):
    """Apply per-arm passbands; returns (filtered JSA, retained fraction)."""
    ta = filters.signal.amplitude(jsa.grid.axis_a.omegas)
    tb = filters.idler.amplitude(jsa.grid.axis_b.omegas)
    vals = jsa.values * ta[:, None] * tb[None, :]
    retained = _fsum_sq(vals) * jsa.grid.measure
    if retained < 1e-12:
        raise DegenerateFilterError(
            f"filters retain {retained:.3e} of the probability; arm fully blocked")
    return JointAmplitude(jsa.grid, vals / math.sqrt(retained)), float(retained)


# ---------------------------------------------------------------------------
# composed reports and state engineering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PurityReport:
    weights: np.ndarray
    schmidt_number: float
    purity: float
    g2: float
    heralded_signal_purity: float
    heralded_idler_purity: float
    signal_filter_transmission: float
    idler_filter_transmission: float


def purity_report(geometry, pump: PumpSpec, filters: FilterSpec | None = None, *,
                  pm="sinc", grid: FrequencyGrid | None = None, points: int = 256,
                  span_factor: float = 12.0,
                  gamma: float = GAUSSIAN_PM_GAMMA) -> PurityReport:
    """Schmidt metrics of a source plus heralded purities under filtering.

    Heralding convention: the filter sits on the heralding arm only, the
    analysed arm stays open.  The heralded *signal* purity is therefore the
    purity of the joint amplitude with only the idler passband applied, and
    vice versa.
    """
    if grid is None:
        grid = auto_grid(geometry, pump, points, span_factor, pm=pm, gamma=gamma)
    jsa = build_jsa(geometry, pm, pump, grid, gamma=gamma)
    data = schmidt(jsa)
    k = schmidt_number(data)
    p = 1.0 / k
    h_sig, h_idl, t_sig, t_idl = p, p, 1.0, 1.0
    if filters is not None:
        if filters.idler.kind != "none":
            f_idl, t_idl = apply_filter(jsa, FilterSpec(idler=filters.idler))
            h_sig = purity(schmidt(f_idl))
        if filters.signal.kind != "none":
            f_sig, t_sig = apply_filter(jsa, FilterSpec(signal=filters.signal))
            h_idl = purity(schmidt(f_sig))
    return PurityReport(weights=data.weights, schmidt_number=k, purity=p,
                        g2=1.0 + p, heralded_signal_purity=h_sig,
                        heralded_idler_purity=h_idl,
                        signal_filter_transmission=t_sig,
                        idler_filter_transmission=t_idl)


def engineer_state(pump: PumpSpec, geometry, *, grid: FrequencyGrid | None = None,
                   points: int = 256, span_factor: float = 12.0) -> SchmidtData:
    """Schmidt structure of a pump-shaped source at symmetric matching.

    Requires a symmetric group-velocity-matched geometry (contrast within
    0.05 of -1) and uses the Gaussian phasematching stand-in, the regime in
    which pump shaping maps directly onto the Schmidt spectrum.
    """
    xi, _ = gvm_contrast(geometry)
    if not abs(xi + 1.0) <= 0.05:
        raise PreconditionError(
            f"state engineering needs symmetric matching (xi within 0.05 of -1), "
            f"got xi = {xi:.4g}")
    if grid is None:
        grid = auto_grid(geometry, pump, points, span_factor, pm="gaussian")
    jsa = build_jsa(geometry, "gaussian", pump, grid)
    return schmidt(jsa)


def intensity_correlation(jsa: JointAmplitude) -> float:
    """Pearson correlation of the joint spectral intensity."""
    p = jsa.intensity()
    p = p / p.sum()
    na = jsa.grid.axis_a.detunings
    nb = jsa.grid.axis_b.detunings
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)
    mu_a = float(na @ pa)
    mu_b = float(nb @ pb)
    var_a = float(((na - mu_a) ** 2) @ pa)
    var_b = float(((nb - mu_b) ** 2) @ pb)
    cov = float((na - mu_a) @ p @ (nb - mu_b))
    return cov / math.sqrt(var_a * var_b)
