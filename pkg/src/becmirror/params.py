"""Parameter derivation for the driven cavity with a vibrating end mirror and
an intracavity atomic condensate.

All frequencies, rates and couplings are angular (rad/s) unless noted.  The
raw experimental knobs live in :class:`PhysicalInput`; :func:`derive_parameters`
turns them into the reduced set entering the linearized dynamics, and
:func:`steady_state_field` evaluates the classical mean fields for a chosen
effective detuning.  :func:`self_consistent_detuning` solves the cavity
backaction relation when only the bare detuning is known.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields

import numpy as np

from .constants import BOLTZMANN_K, HBAR, SPEED_OF_LIGHT
from .errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)

# OR-pairs: exactly one side of each must be supplied.
_CHOICE_GROUPS = (
    (("finesse",), ("cavity_decay",)),
    (("bec_coupling",), ("lattice_depth", "atom_number")),
    (("effective_detuning",), ("bare_detuning",)),
    (("recoil_frequency",), ("bec_frequency",)),
)

_STRICTLY_POSITIVE = (
    "cavity_length",
    "laser_wavelength",
    "laser_power",
    "mirror_mass",
    "mirror_frequency",
)


@dataclass(frozen=True)
class PhysicalInput:
    """Raw experimental parameters.

    Attributes:
        cavity_length: Cavity length L (m).
        laser_wavelength: Drive laser wavelength (m).
        laser_power: Drive laser power (W).
        mirror_mass: Effective mass of the mechanical mode (kg).
        mirror_frequency: Mechanical resonance frequency (rad/s).
        mirror_damping: Mechanical amplitude decay rate gamma (rad/s).
        temperature: Mirror bath temperature (K), >= 0.
        finesse: Cavity finesse; alternative to ``cavity_decay``.
        cavity_decay: Cavity amplitude decay rate kappa (rad/s); alternative
            to ``finesse``.
        bec_coupling: Condensate-field coupling g_ac (rad/s); alternative to
            the (``lattice_depth``, ``atom_number``) pair.
        lattice_depth: Optical-lattice depth per photon U_o (rad/s).
        atom_number: Number of condensate atoms N.
        effective_detuning: Effective cavity detuning (rad/s), used directly
            by the default pipeline; alternative to ``bare_detuning``.
        bare_detuning: Bare cavity detuning (rad/s) before backaction shifts;
            resolved through :func:`self_consistent_detuning`.
        recoil_frequency: Atomic recoil frequency (rad/s); the condensate mode
            frequency is four times this value.  Alternative to
            ``bec_frequency``.
        bec_frequency: Condensate mode frequency (rad/s), given directly.
    """

    cavity_length: float
    laser_wavelength: float
    laser_power: float
    mirror_mass: float
    mirror_frequency: float
    mirror_damping: float
    temperature: float
    finesse: float | None = None
    cavity_decay: float | None = None
    bec_coupling: float | None = None
    lattice_depth: float | None = None
    atom_number: float | None = None
    effective_detuning: float | None = None
    bare_detuning: float | None = None
    recoil_frequency: float | None = None
    bec_frequency: float | None = None

    def __post_init__(self) -> None:
        for name in _STRICTLY_POSITIVE:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be a finite positive number, got {value!r}")
        if not (math.isfinite(self.mirror_damping) and self.mirror_damping >= 0):
            raise ValidationError(f"mirror_damping must be >= 0, got {self.mirror_damping!r}")
        if not (math.isfinite(self.temperature) and self.temperature >= 0):
            raise ValidationError(f"temperature must be >= 0, got {self.temperature!r}")
        for left, right in _CHOICE_GROUPS:
            message = "exactly one of %s or %s must be supplied" % (
                "/".join(left),
                "/".join(right),
            )
            if any(getattr(self, n) is not None for n in left) and any(
                getattr(self, n) is not None for n in right
            ):
                raise ValidationError(message)
            if not all(getattr(self, n) is not None for n in left) and not all(
                getattr(self, n) is not None for n in right
            ):
                raise ValidationError(message)
        for name in ("finesse", "cavity_decay", "atom_number",
                     "recoil_frequency", "bec_frequency"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be finite and > 0, got {value!r}")
        for name in ("bec_coupling", "lattice_depth"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
        for name in ("effective_detuning", "bare_detuning"):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from :class:`PhysicalInput`.

    Attributes:
        om_p: Laser angular frequency (rad/s).
        kappa: Cavity amplitude decay rate (rad/s).
        drive: Cavity drive amplitude E (rad/s).
        x_zpf: Mirror zero-point motion (m).
        g_mc: Bare mirror-field coupling (rad/s).
        g_ac: Bare condensate-field coupling (rad/s).
        om_m: Mirror frequency (rad/s).
        om_a: Condensate mode frequency (rad/s).
        gamma: Mirror damping rate (rad/s).
        n_th: Mean thermal phonon occupation of the mirror bath.
        detuning: Effective detuning if supplied on the input, else None.
        bare_detuning: Bare detuning if supplied on the input, else None.
    """

    om_p: float
    kappa: float
    drive: float
    x_zpf: float
    g_mc: float
    g_ac: float
    om_m: float
    om_a: float
    gamma: float
    n_th: float
    detuning: float | None = None
    bare_detuning: float | None = None


@dataclass(frozen=True)
class CavitySteadyState:
    """Classical mean fields of the driven system.

    ``field_amplitude`` is the complex intracavity amplitude; the effective
    couplings use its modulus (the drive phase is absorbed by convention, so
    ``G_mc`` and ``G_ac`` are non-negative).
    """

    photon_number: float
    field_amplitude: complex
    bec_amplitude: complex
    mirror_amplitude: complex
    G_mc: float
    G_ac: float


@dataclass(frozen=True)
class ModelParams:
    """Reduced parameter set of the linearized three-mode dynamics."""

    om_m: float
    om_a: float
    gamma: float
    kappa: float
    detuning: float
    G_mc: float
    G_ac: float
    n_th: float
    n_c: float = 0.0

    def __post_init__(self) -> None:
        for name in ("om_m", "om_a", "kappa"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be finite and > 0, got {value!r}")
        for name in ("gamma", "G_mc", "G_ac", "n_th", "n_c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
        if not math.isfinite(self.detuning):
            raise ValidationError(f"detuning must be finite, got {self.detuning!r}")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def thermal_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation of a mode at ``omega`` (rad/s) and T (K).

    Returns 0 at T = 0 (continuity limit); rejects negative temperatures.
    """
    if temperature < 0:
        raise ValidationError(f"temperature must be >= 0, got {temperature!r}")
    if omega <= 0:
        raise ValidationError(f"omega must be > 0, got {omega!r}")
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * omega / (BOLTZMANN_K * temperature))


def derive_parameters(inp: PhysicalInput) -> DerivedParams:
    """Reduce raw experimental inputs to the model parameter set.

    Deterministic and pure: identical inputs give bit-identical outputs.
    """
    om_p = 2.0 * math.pi * SPEED_OF_LIGHT / inp.laser_wavelength
    if inp.cavity_decay is not None:
        kappa = inp.cavity_decay
    else:
        # Fabry-Perot amplitude decay (half width): kappa = pi c / (2 F L).
        kappa = math.pi * SPEED_OF_LIGHT / (2.0 * inp.finesse * inp.cavity_length)
    x_zpf = math.sqrt(HBAR / (2.0 * inp.mirror_mass * inp.mirror_frequency))
    drive = math.sqrt(2.0 * inp.laser_power * kappa / (HBAR * om_p))
    g_mc = math.sqrt(2.0) * (om_p / inp.cavity_length) * x_zpf
    if inp.bec_coupling is not None:
        g_ac = inp.bec_coupling
    else:
        g_ac = inp.lattice_depth * math.sqrt(inp.atom_number) / 2.0
    om_a = inp.bec_frequency if inp.bec_frequency is not None else 4.0 * inp.recoil_frequency
    n_th = thermal_occupation(inp.mirror_frequency, inp.temperature)
    return DerivedParams(
        om_p=om_p,
        kappa=kappa,
        drive=drive,
        x_zpf=x_zpf,
        g_mc=g_mc,
        g_ac=g_ac,
        om_m=inp.mirror_frequency,
        om_a=om_a,
        gamma=inp.mirror_damping,
        n_th=n_th,
        detuning=inp.effective_detuning,
        bare_detuning=inp.bare_detuning,
    )


def steady_state_field(derived: DerivedParams, detuning: float) -> CavitySteadyState:
    """Classical mean fields for a given effective detuning.

    The intracavity amplitude is E / (kappa + i detuning); the mirror and
    condensate means follow from their closed forms, and the effective
    couplings are sqrt(2) g |field|.
    """
    if derived.kappa <= 0:
        raise ValidationError(f"kappa must be > 0, got {derived.kappa!r}")
    denom = derived.kappa + 1j * detuning
    field = derived.drive / denom
    n = derived.drive**2 / (derived.kappa**2 + detuning**2)
    bec_amp = -(derived.g_ac / (math.sqrt(2.0) * derived.om_a)) * n
    mirror_amp = (1j * derived.g_mc / (math.sqrt(2.0) * (derived.gamma + 1j * derived.om_m))) * n
    root_n = math.sqrt(n)
    return CavitySteadyState(
        photon_number=n,
        field_amplitude=field,
        bec_amplitude=bec_amp,
        mirror_amplitude=mirror_amp,
        G_mc=math.sqrt(2.0) * derived.g_mc * root_n,
        G_ac=math.sqrt(2.0) * derived.g_ac * root_n,
    )


def model_params(derived: DerivedParams, detuning: float | None = None) -> ModelParams:
    """Assemble :class:`ModelParams` from derived quantities at a detuning.

    ``detuning`` defaults to the effective detuning carried on ``derived``.
    """
    if detuning is None:
        detuning = derived.detuning
    if detuning is None:
        raise ValidationError(
            "no effective detuning available; supply one or use self_consistent_detuning"
        )
    ss = steady_state_field(derived, detuning)
    return ModelParams(
        om_m=derived.om_m,
        om_a=derived.om_a,
        gamma=derived.gamma,
        kappa=derived.kappa,
        detuning=detuning,
        G_mc=ss.G_mc,
        G_ac=ss.G_ac,
        n_th=derived.n_th,
    )


def _backaction_coefficient(derived: DerivedParams) -> float:
    # Detuning shift per intracavity photon from the two static displacements.
    return (
        derived.om_m * derived.g_mc**2 / (derived.gamma**2 + derived.om_m**2)
        + derived.g_ac**2 / derived.om_a
    )


_ROOT_RESIDUAL_TOL = 1e-10


def self_consistent_detuning(
    derived: DerivedParams, bare_detuning: float
) -> list[tuple[float, float]]:
    """Solve the backaction relation between detuning and photon number.

    The effective detuning is the bare detuning shifted by the static mirror
    and condensate displacements, both proportional to the photon number,
    which itself depends on the effective detuning.  Eliminating the detuning
    gives a real cubic in the photon number; all real non-negative roots are
    returned as ``(detuning, photon_number)`` pairs sorted by photon number.
    Up to three roots exist (optical bistability).  Negative-photon-number
    roots are discarded and logged.
    """
    kappa = derived.kappa
    if kappa <= 0:
        raise ValidationError(f"kappa must be > 0, got {kappa!r}")
    beta = _backaction_coefficient(derived)
    if derived.drive == 0.0 or beta == 0.0:
        n = derived.drive**2 / (kappa**2 + bare_detuning**2)
        return [(bare_detuning - beta * n, n)]

    # Dimensionless form: u = n / (E/kappa)^2, x_o = bare_detuning / kappa,
    # b = beta (E/kappa)^2 / kappa.  Roots of
    #   b^2 u^3 - 2 x_o b u^2 + (1 + x_o^2) u - 1 = 0.
    n_ref = (derived.drive / kappa) ** 2
    x_o = bare_detuning / kappa
    b = beta * n_ref / kappa
    coeffs = np.array([b * b, -2.0 * x_o * b, 1.0 + x_o * x_o, -1.0])
    roots = np.roots(coeffs)

    def f(u: float) -> float:
        return ((b * b * u - 2.0 * x_o * b) * u + 1.0 + x_o * x_o) * u - 1.0

    def fprime(u: float) -> float:
        return (3.0 * b * b * u - 4.0 * x_o * b) * u + 1.0 + x_o * x_o

    polished: list[float] = []
    for r in roots:
        if abs(r.imag) > 1e-6 * (1.0 + abs(r.real)):
            continue
        u = float(r.real)
        for _ in range(50):
            fu = f(u)
            dfu = fprime(u)
            if dfu == 0.0:
                break
            step = fu / dfu
            u -= step
            if abs(step) <= 1e-16 * (1.0 + abs(u)):
                break
        polished.append(u)

    results: list[tuple[float, float]] = []
    seen: list[float] = []
    for u in sorted(polished):
        if u < 0.0:
            logger.info("discarding non-physical root with photon number %g", u * n_ref)
            continue
        if any(abs(u - s) <= 1e-9 * (1.0 + abs(s)) for s in seen):
            continue
        seen.append(u)
        n = u * n_ref
        detuning = bare_detuning - beta * n
        # Residual of n (kappa^2 + detuning^2) = E^2, relative to the term sizes.
        x = x_o - b * u
        scale = 1.0 + u * (1.0 + x * x)
        rel = abs(f(u)) / scale
        if rel > _ROOT_RESIDUAL_TOL:
            raise NumericalError(
                f"self-consistent root failed its residual gate: {rel:.3e} > {_ROOT_RESIDUAL_TOL:.0e}"
            )
        results.append((detuning, n))
    results.sort(key=lambda pair: pair[1])
    return results
