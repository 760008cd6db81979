"""Material dispersion and group-velocity engineering for three-wave mixing.

Frequencies are angular frequencies in rad/s throughout.  Refractive indices
come from published Sellmeier-type fits, stored as JSON documents (one per
material) with a named functional form and a coefficient list; wavelengths in
those forms are vacuum wavelengths in micrometres.  Group velocities are
obtained by closed-form differentiation of the fit, never by finite
differences, so there is no step-size knob in the API.

Two geometry models coexist:

* :class:`ProcessGeometry` — backed by a real material; the phase mismatch is
  evaluated from the Sellmeier data, including an optional quasi-phasematching
  term ``2*pi/poling_period``.
* :class:`FirstOrderProcess` — an idealised process specified directly by the
  inverse-group-velocity offsets of the two quantum fields from the pump.
  This is the linearised model in which most engineered-source results are
  stated, and it is exactly phasematched at the field centres by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.constants import c as c0

from .errors import MaterialLoadError, PreconditionError, WavelengthRangeError

TWO_PI = 2.0 * math.pi

# ---------------------------------------------------------------------------
# dispersion forms: form id -> (n^2(lam), d(n^2)/dlam(lam)), lam in um
# ---------------------------------------------------------------------------


def _nsq_two_pole(lam, c):
    l2 = lam**2
    return c[0] + c[1] / (l2 - c[2]) + c[3] / (l2 - c[4])


def _dnsq_two_pole(lam, c):
    l2 = lam**2
    return -2.0 * lam * (c[1] / (l2 - c[2]) ** 2 + c[3] / (l2 - c[4]) ** 2)


def _nsq_rational3(lam, c):
    l2 = lam**2
    return 1.0 + c[0] * l2 / (l2 - c[1]) + c[2] * l2 / (l2 - c[3]) + c[4] * l2 / (l2 - c[5])


def _dnsq_rational3(lam, c):
    l2 = lam**2
    return -2.0 * lam * (
        c[0] * c[1] / (l2 - c[1]) ** 2
        + c[2] * c[3] / (l2 - c[3]) ** 2
        + c[4] * c[5] / (l2 - c[5]) ** 2
    )


def _nsq_pole_rational(lam, c):
    l2 = lam**2
    return c[0] + c[1] / (l2 - c[2]) + c[3] * l2 / (l2 - c[4])


def _dnsq_pole_rational(lam, c):
    l2 = lam**2
    return -2.0 * lam * (c[1] / (l2 - c[2]) ** 2 + c[3] * c[4] / (l2 - c[4]) ** 2)


def _nsq_pole_quadratic(lam, c):
    l2 = lam**2
    return c[0] + c[1] / (l2 - c[2]) - c[3] * l2


def _dnsq_pole_quadratic(lam, c):
    l2 = lam**2
    return -2.0 * lam * (c[1] / (l2 - c[2]) ** 2 + c[3])


def _nsq_constant(lam, c):
    return np.broadcast_to(np.asarray(c[0] ** 2, dtype=float), np.shape(lam)).copy() \
        if np.ndim(lam) else c[0] ** 2


def _dnsq_constant(lam, c):
    return np.zeros(np.shape(lam)) if np.ndim(lam) else 0.0


_FORMS = {
    "nsq_two_pole": (_nsq_two_pole, _dnsq_two_pole, 5),
    "nsq_rational3": (_nsq_rational3, _dnsq_rational3, 6),
    "nsq_pole_rational": (_nsq_pole_rational, _dnsq_pole_rational, 5),
    "nsq_pole_quadratic": (_nsq_pole_quadratic, _dnsq_pole_quadratic, 4),
    "constant": (_nsq_constant, _dnsq_constant, 1),
}


# ---------------------------------------------------------------------------
# materials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AxisDispersion:
    form: str
    coefficients: tuple


@dataclass(frozen=True)
class Material:
    """Dispersion data for one medium, per polarization axis."""

    name: str
    axes: dict
    valid_range_um: tuple
    source: str = ""

    @property
    def is_vacuum(self):
        return all(ax.form == "constant" for ax in self.axes.values())

    def axis(self, axis: str) -> AxisDispersion:
        try:
            return self.axes[axis]
        except KeyError:
            if self.is_vacuum and len(self.axes) == 1:
                # vacuum is isotropic; accept any axis label
                return next(iter(self.axes.values()))
            raise MaterialLoadError(
                f"material {self.name!r} has no axis {axis!r}; available: {sorted(self.axes)}"
            ) from None

    def check_range(self, omega, *, interior=False):
        lam_um = wavelength_um(omega)
        lo, hi = self.valid_range_um
        lam = np.atleast_1d(lam_um)
        bad = (lam < lo) | (lam > hi) if not interior else (lam <= lo) | (lam >= hi)
        if np.any(bad):
            word = "strictly inside" if interior else "within"
            raise WavelengthRangeError(
                f"wavelength {float(lam[np.argmax(bad)]):.6g} um not {word} the valid range "
                f"[{lo:g}, {hi:g}] um of material {self.name!r}"
            )


def wavelength_um(omega):
    """Vacuum wavelength (um) for angular frequency omega (rad/s)."""
    return TWO_PI * c0 / np.asarray(omega, dtype=float) * 1e6


def omega_from_wavelength(lam_m):
    """Angular frequency (rad/s) for vacuum wavelength (m)."""
    return TWO_PI * c0 / np.asarray(lam_m, dtype=float)


def _material_from_dict(doc, origin=""):
    for key in ("name", "axes", "valid_range_um"):
        if key not in doc:
            raise MaterialLoadError(f"material document {origin} lacks field {key!r}")
    axes = {}
    for label, spec in doc["axes"].items():
        form = spec.get("form")
        if form not in _FORMS:
            raise MaterialLoadError(
                f"unknown dispersion form {form!r} in {origin or doc['name']}; "
                f"known forms: {sorted(_FORMS)}"
            )
        coeffs = tuple(float(x) for x in spec["coefficients"])
        want = _FORMS[form][2]
        if len(coeffs) != want:
            raise MaterialLoadError(
                f"form {form!r} expects {want} coefficients, got {len(coeffs)} "
                f"in {origin or doc['name']}"
            )
        axes[label] = AxisDispersion(form, coeffs)
    lo, hi = (float(x) for x in doc["valid_range_um"])
    if not lo < hi:
        raise MaterialLoadError(f"empty valid range in {origin or doc['name']}")
    mat = Material(doc["name"], axes, (lo, hi), doc.get("source", ""))
    _validate_indices(mat)
    return mat


def _validate_indices(mat):
    lam = np.linspace(mat.valid_range_um[0], mat.valid_range_um[1], 33)
    for label, ax in mat.axes.items():
        n2 = _FORMS[ax.form][0](lam, ax.coefficients)
        if not np.all(np.isfinite(n2)):
            raise MaterialLoadError(f"non-finite index for {mat.name}/{label}")
        if ax.form == "constant":
            if ax.coefficients[0] < 1.0:
                raise MaterialLoadError(f"constant index < 1 for {mat.name}/{label}")
        elif np.any(n2 <= 1.0):
            raise MaterialLoadError(
                f"index not > 1 over the valid range for {mat.name}/{label}"
            )


def load_material(name) -> Material:
    """Load a material by built-in name or by path to a JSON document."""
    p = Path(str(name))
    if p.suffix == ".json" and p.exists():
        doc = json.loads(p.read_text())
        return _material_from_dict(doc, origin=str(p))
    pkg = resources.files(__package__) / "materials" / f"{str(name).lower()}.json"
    try:
        text = pkg.read_text()
    except FileNotFoundError:
        raise MaterialLoadError(f"no built-in material {name!r}") from None
    return _material_from_dict(json.loads(text), origin=f"builtin:{name}")


def load_materials_dir(path) -> dict:
    """Load every ``*.json`` material document found in a directory."""
    out = {}
    for p in sorted(Path(path).glob("*.json")):
        mat = _material_from_dict(json.loads(p.read_text()), origin=str(p))
        out[mat.name] = mat
    return out


def builtin_materials() -> dict:
    out = {}
    for item in sorted(resources.files(__package__).joinpath("materials").iterdir(),
                       key=lambda q: q.name):
        if item.name.endswith(".json"):
            mat = _material_from_dict(json.loads(item.read_text()), origin=item.name)
            out[mat.name] = mat
    return out


# ---------------------------------------------------------------------------
# index, wavenumber, group velocity
# ---------------------------------------------------------------------------


def refractive_index(material: Material, axis: str, omega):
    """n(omega) from the stored fit; raises WavelengthRangeError out of range."""
    material.check_range(omega)
    ax = material.axis(axis)
    lam = wavelength_um(omega)
    return np.sqrt(_FORMS[ax.form][0](lam, ax.coefficients))


def wavenumber(material: Material, axis: str, omega):
    """k = n(omega) * omega / c in rad/m."""
    return refractive_index(material, axis, omega) * np.asarray(omega, dtype=float) / c0


def group_index(material: Material, axis: str, omega):
    """n_g = n - lam * dn/dlam, evaluated in closed form."""
    material.check_range(omega, interior=True)
    ax = material.axis(axis)
    lam = wavelength_um(omega)
    n2f, dn2f, _ = _FORMS[ax.form]
    n = np.sqrt(n2f(lam, ax.coefficients))
    dn_dlam = dn2f(lam, ax.coefficients) / (2.0 * n)
    return n - lam * dn_dlam


def group_velocity(material: Material, axis: str, omega):
    """Group velocity u = c / n_g in m/s; requires omega interior to the range."""
    return c0 / group_index(material, axis, omega)


# ---------------------------------------------------------------------------
# process geometries
# ---------------------------------------------------------------------------

_PDC_ROLES = ("pump", "signal", "idler")
_SFG_ROLES = ("pump", "input", "output")


@dataclass(frozen=True)
class FieldSpec:
    """One field of a three-wave process."""

    role: str
    center_frequency: float  # rad/s
    polarization_axis: str = "any"


def _check_energy_conservation(kind, w_p, w_a, w_b, tol_rel=1e-6):
    if kind == "pdc":
        err = abs(w_p - w_a - w_b)
    else:
        err = abs(w_b - w_a - w_p)  # out = in + pump
    if err > tol_rel * w_p:
        raise PreconditionError(
            f"centre frequencies violate energy conservation for {kind} "
            f"(residual {err:.3e} rad/s)"
        )


@dataclass(frozen=True)
class ProcessGeometry:
    """Material-backed collinear three-wave process.

    ``kind`` is "pdc" (pump -> signal + idler) or "sfg"
    (input + pump -> output).  ``fields`` is the (pump, signal, idler) or
    (pump, input, output) triple.  ``poling_period`` adds the
    quasi-phasematching term ``qpm_sign * 2*pi/poling_period`` to the
    mismatch; the default sign convention is +1 for PDC and -1 for SFG.
    """

    material: Material
    fields: tuple
    length: float  # m
    kind: str = "pdc"
    poling_period: float | None = None
    qpm_sign: int | None = None

    def __post_init__(self):
        roles = tuple(f.role for f in self.fields)
        want = _PDC_ROLES if self.kind == "pdc" else _SFG_ROLES
        if self.kind not in ("pdc", "sfg"):
            raise PreconditionError(f"unknown process kind {self.kind!r}")
        if roles != want:
            raise PreconditionError(f"fields must be ordered {want}, got {roles}")
        w_p, w_a, w_b = (f.center_frequency for f in self.fields)
        _check_energy_conservation(self.kind, w_p, w_a, w_b)
        for f in self.fields:
            self.material.check_range(f.center_frequency)

    # -- convenience accessors ------------------------------------------------

    @property
    def pump(self):
        return self.fields[0]

    @property
    def centers(self):
        """(pump, a, b) centre frequencies, a/b = signal/idler or input/output."""
        return tuple(f.center_frequency for f in self.fields)

    def _qpm_term(self):
        if self.poling_period is None:
            return 0.0
        sign = self.qpm_sign
        if sign is None:
            sign = 1 if self.kind == "pdc" else -1
        return sign * TWO_PI / self.poling_period

    def bare_mismatch(self, w_a, w_b):
        """Phase mismatch without the quasi-phasematching term (rad/m)."""
        p, a, b = self.fields
        if self.kind == "pdc":
            k_p = wavenumber(self.material, p.polarization_axis, np.asarray(w_a) + np.asarray(w_b))
            k_s = wavenumber(self.material, a.polarization_axis, w_a)
            k_i = wavenumber(self.material, b.polarization_axis, w_b)
            return k_p - k_s - k_i
        k_out = wavenumber(self.material, b.polarization_axis, w_b)
        k_in = wavenumber(self.material, a.polarization_axis, w_a)
        k_p = wavenumber(self.material, p.polarization_axis, np.asarray(w_b) - np.asarray(w_a))
        return k_out - k_in - k_p

    def delta_k(self, w_a, w_b):
        return self.bare_mismatch(w_a, w_b) + self._qpm_term()

    def group_slownesses(self):
        """(nu_a, nu_b): inverse-group-velocity offsets of the two quantum
        fields from the pump, at the centre frequencies (s/m)."""
        p, a, b = self.fields
        up = group_velocity(self.material, p.polarization_axis, p.center_frequency)
        ua = group_velocity(self.material, a.polarization_axis, a.center_frequency)
        ub = group_velocity(self.material, b.polarization_axis, b.center_frequency)
        return 1.0 / ua - 1.0 / up, 1.0 / ub - 1.0 / up


@dataclass(frozen=True)
class FirstOrderProcess:
    """Engineered process defined by its linearised phase mismatch.

    ``slowness_a`` / ``slowness_b`` are the inverse-group-velocity offsets
    (s/m) of the two quantum fields from the pump: signal/idler for PDC,
    input/output for SFG.  The process is exactly phasematched at the centre
    frequencies, so the mismatch is purely the first-order detuning term

        pdc:  dk = slowness_a * (w_a - c_a) + slowness_b * (w_b - c_b)
        sfg:  dk = slowness_a * (w_a - c_a) - slowness_b * (w_b - c_b)
    """

    kind: str
    centers: tuple  # (pump, a, b) in rad/s
    length: float  # m
    slowness_a: float  # s/m
    slowness_b: float  # s/m

    def __post_init__(self):
        if self.kind not in ("pdc", "sfg"):
            raise PreconditionError(f"unknown process kind {self.kind!r}")
        w_p, w_a, w_b = self.centers
        _check_energy_conservation(self.kind, w_p, w_a, w_b)

    def delta_k(self, w_a, w_b):
        _, c_a, c_b = self.centers
        da = np.asarray(w_a, dtype=float) - c_a
        db = np.asarray(w_b, dtype=float) - c_b
        if self.kind == "pdc":
            return self.slowness_a * da + self.slowness_b * db
        return self.slowness_a * da - self.slowness_b * db

    bare_mismatch = delta_k

    def group_slownesses(self):
        return self.slowness_a, self.slowness_b


def first_order_pdc(*, pump_wavelength, length, slowness_signal, slowness_idler,
                    degenerate=True, signal_wavelength=None):
    """Convenience constructor for an engineered PDC process.

    Centre frequencies are set from the pump wavelength (m); by default the
    photons are frequency degenerate at twice the pump wavelength.
    """
    w_p = float(omega_from_wavelength(pump_wavelength))
    if degenerate:
        w_s = w_i = 0.5 * w_p
    else:
        w_s = float(omega_from_wavelength(signal_wavelength))
        w_i = w_p - w_s
    return FirstOrderProcess("pdc", (w_p, w_s, w_i), length, slowness_signal, slowness_idler)


def first_order_sfg(*, input_wavelength, pump_wavelength, length,
                    slowness_input, slowness_output):
    """Convenience constructor for an engineered SFG process."""
    w_in = float(omega_from_wavelength(input_wavelength))
    w_p = float(omega_from_wavelength(pump_wavelength))
    return FirstOrderProcess("sfg", (w_p, w_in, w_in + w_p), length,
                             slowness_input, slowness_output)


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def phase_mismatch(geometry, w_a, w_b):
    """Phase mismatch dk(w_a, w_b) in rad/m, QPM term included if configured."""
    return geometry.delta_k(w_a, w_b)


def solve_poling_period(geometry):
    """Poling period that phasematches the process at its centre frequencies.

    Returns the period in metres, or None when the bare process is already
    phasematched ("no poling needed").  Use :func:`poled` to obtain a
    geometry with the period and sign convention installed.
    """
    _, w_a, w_b = geometry.centers
    dk0 = float(geometry.bare_mismatch(w_a, w_b))
    k_scale = abs(dk0) + abs(float(omega_from_wavelength(1.0)) / 1.0)  # fallback scale
    if isinstance(geometry, ProcessGeometry):
        p = geometry.fields[0]
        k_scale = float(wavenumber(geometry.material, p.polarization_axis,
                                   p.center_frequency))
    if abs(dk0) <= 1e-12 * k_scale:
        return None
    return TWO_PI / abs(dk0)


def poled(geometry: ProcessGeometry) -> ProcessGeometry:
    """Copy of the geometry with the solved period and matching QPM sign."""
    period = solve_poling_period(geometry)
    if period is None:
        return geometry
    _, w_a, w_b = geometry.centers
    dk0 = float(geometry.bare_mismatch(w_a, w_b))
    return replace(geometry, poling_period=period, qpm_sign=-1 if dk0 > 0 else 1)


def gvm_contrast(geometry):
    """Group-velocity-mismatch contrast and phasematching angle.

    Returns ``(xi, theta_pm_deg)`` with ``xi`` the ratio of the
    inverse-group-velocity offsets of the two quantum fields from the pump,
    and ``theta_pm_deg = -atan(xi)`` in degrees.  A degenerate denominator is
    reported as signed infinity with theta = -/+90 deg rather than an error.
    """
    nu_a, nu_b = geometry.group_slownesses()
    if abs(nu_b) < 1e-18:
        xi = math.inf if nu_a >= 0 else -math.inf
        return xi, -math.copysign(90.0, xi)
    xi = nu_a / nu_b
    return xi, -math.degrees(math.atan(xi))


@dataclass(frozen=True)
class GvmScanPoint:
    detuning: float  # rad/s offset applied to the scanned field
    xi: float
    theta_pm_deg: float
    note: str = ""


def gvm_scan(geometry, detunings):
    """Contrast xi along a detuned signal/input centre frequency.

    The pump centre stays fixed; the partner field follows from energy
    conservation.  Range violations annotate individual samples and the scan
    continues.
    """
    points = []
    w_p, w_a, _ = geometry.centers
    for d in np.atleast_1d(np.asarray(detunings, dtype=float)):
        w_a_new = w_a + float(d)
        w_b_new = w_p - w_a_new if geometry.kind == "pdc" else w_a_new + w_p
        try:
            g = _retuned(geometry, w_a_new, w_b_new)
            xi, th = gvm_contrast(g)
            points.append(GvmScanPoint(float(d), xi, th))
        except (WavelengthRangeError, PreconditionError) as err:
            points.append(GvmScanPoint(float(d), math.nan, math.nan, str(err)))
    return points


def _retuned(geometry, w_a, w_b):
    if isinstance(geometry, FirstOrderProcess):
        return replace(geometry, centers=(geometry.centers[0], w_a, w_b))
    p, a, b = geometry.fields
    return replace(geometry, fields=(p,
                                     replace(a, center_frequency=w_a),
                                     replace(b, center_frequency=w_b)))
