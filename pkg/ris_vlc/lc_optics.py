"""Liquid-crystal receiver optics."""
from __future__ import annotations

from dataclasses import dataclass, replace
import logging
import math
from typing import Optional

from .errors import (
    ConfigurationError,
    GeometryError,
    SingularIncidenceError,
    TotalInternalReflectionError,
)
from .system_model import SystemParams

_LOGGER: logging.Logger = logging.getLogger(__package__)

_MAX_TILT = math.nextafter(math.pi / 2, 0.0)


def tilt_from_voltage(v_e: float, v_th: float, v_0: float) -> float:
    """Molecular tilt angle produced by the applied voltage."""
    if not v_0 > 0:
        raise ConfigurationError(f"v_0 must be positive, got {v_0}")
    if v_e <= v_th:
        return 0.0
    return math.pi / 2 - 2 * math.atan(math.exp(-(v_e - v_th) / v_0))


def refractive_index_from_tilt(phi: float, eta_e: float, eta_o: float) -> float:
    if not (eta_e > 0 and eta_o > 0):
        raise ConfigurationError("Refractive indices must be positive")
    if not -1e-12 <= phi <= math.pi / 2 + 1e-12:
        raise GeometryError(f"Tilt must lie in [0, pi/2], got {phi}")
    inverse_sq = math.cos(phi) ** 2 / eta_e**2 + math.sin(phi) ** 2 / eta_o**2
    return 1 / math.sqrt(inverse_sq)


def tilt_from_index(eta_c: float, eta_e: float, eta_o: float) -> float:
    """Invert the tilt/index relation; the result is clamped below pi/2."""
    low, high = min(eta_e, eta_o), max(eta_e, eta_o)
    if not low - 1e-12 <= eta_c <= high + 1e-12:
        raise ConfigurationError(f"eta_c {eta_c} lies outside [{low}, {high}]")
    if eta_e == eta_o:
        return 0.0
    sin_sq = (1 / eta_c**2 - 1 / eta_e**2) / (1 / eta_o**2 - 1 / eta_e**2)
    sin_sq = min(max(sin_sq, 0.0), 1.0)
    return min(math.asin(math.sqrt(sin_sq)), _MAX_TILT)


def refraction_angle(xi: float, eta_a: float, eta_c: float) -> float:
    """Snell refraction angle inside the cell for light entering from air."""
    if eta_c <= eta_a:
        raise ConfigurationError(
            f"eta_c ({eta_c}) must exceed eta_a ({eta_a}) for air-to-cell entry"
        )
    if not -1e-12 <= xi <= math.pi / 2 + 1e-12:
        raise GeometryError(f"Incidence angle must lie in [0, pi/2], got {xi}")
    xi = min(max(xi, 0.0), math.pi / 2)
    return math.asin(eta_a / eta_c * math.sin(xi))


def _fresnel(angle: float, eta: float) -> float:
    # Unpolarised reflectance, average of the two polarisation terms.
    cos_a = math.cos(angle)
    radicand = eta**2 - math.sin(angle) ** 2
    if radicand < 0:
        if radicand < -1e-12:
            raise TotalInternalReflectionError(
                f"sin({angle}) exceeds relative index {eta}"
            )
        radicand = 0.0
    root = math.sqrt(radicand)
    first_den = eta**2 * cos_a + root
    second_den = cos_a + root
    if first_den == 0 or second_den == 0:
        return 1.0
    first = (eta**2 * cos_a - root) / first_den
    second = (cos_a - root) / second_den
    return 0.5 * first**2 + 0.5 * second**2


def reflectance_air_to_cell(xi: float, eta: float) -> float:
    """Fraction reflected entering the cell; ``eta`` is eta_c / eta_a."""
    if eta < 1:
        raise ConfigurationError(f"Relative index must be at least 1, got {eta}")
    if eta == 1:
        return 0.0
    return _fresnel(xi, eta)


def reflectance_cell_to_air(theta: float, eta_1: float) -> float:
    """Fraction reflected leaving the cell; ``eta_1`` is eta_a / eta_c."""
    if not 0 < eta_1 <= 1:
        raise ConfigurationError(f"Relative index must lie in (0, 1], got {eta_1}")
    if eta_1 == 1:
        return 0.0
    return min(_fresnel(theta, eta_1), 1.0)


def transition_coefficient(xi_in: float, lc: "LcState", params: SystemParams) -> float:
    """Fraction of light transmitted through both cell interfaces."""
    if lc.eta_c == params.eta_air:
        return 1.0
    theta = refraction_angle(xi_in, params.eta_air, lc.eta_c)
    r_ac = reflectance_air_to_cell(xi_in, lc.eta_c / params.eta_air)
    r_ca = reflectance_cell_to_air(theta, params.eta_air / lc.eta_c)
    return (1 - r_ac) * (1 - r_ca)


def amplification_gain(
    eta_c: float,
    wavelength: float,
    xi_in: float,
    r_eff: float,
    field: float,
    thickness: float,
) -> tuple[float, float]:
    """Gain coefficient (1/m) and the intensity factor exp(gain * thickness)."""
    if min(eta_c, wavelength, r_eff, thickness) <= 0 or field < 0:
        raise ConfigurationError("Amplification parameters must be positive")
    cos_xi = math.cos(xi_in)
    if cos_xi <= 1e-12:
        raise SingularIncidenceError(f"Grazing incidence {xi_in} has no finite gain")
    gamma = 2 * math.pi * eta_c**3 * r_eff * field / (wavelength * cos_xi)
    return gamma, math.exp(gamma * thickness)


@dataclass(frozen=True)
class LcState:
    """State of the LC cell in front of the photodetector.

    Angle-dependent fields stay ``None`` until :meth:`settled` is called with
    the incidence angles of the current channel geometry.
    """

    eta_c: float
    v_applied: Optional[float] = None
    tilt: Optional[float] = None
    refraction_angle: Optional[float] = None
    gamma_coeff: Optional[float] = None
    amplification: float = 1.0
    transition_nlos: Optional[float] = None
    transition_los: Optional[float] = None

    def __post_init__(self):
        if not self.eta_c > 0:
            raise ConfigurationError(f"eta_c must be positive, got {self.eta_c}")

    @classmethod
    def from_voltage(cls, v_applied: float, params: SystemParams) -> LcState:
        tilt = tilt_from_voltage(v_applied, params.v_threshold, params.v_zero)
        eta_c = refractive_index_from_tilt(
            tilt, params.eta_extraordinary, params.eta_ordinary
        )
        return cls(eta_c=eta_c, v_applied=v_applied, tilt=tilt)

    @classmethod
    def from_index(cls, eta_c: float, params: SystemParams) -> LcState:
        tilt = tilt_from_index(eta_c, params.eta_extraordinary, params.eta_ordinary)
        return cls(eta_c=eta_c, tilt=tilt)

    def settled(
        self,
        params: SystemParams,
        xi_los: Optional[float] = None,
        xi_nlos: Optional[float] = None,
        xi_gain: Optional[float] = None,
    ) -> LcState:
        """Fill transitions and gain for the given incidence angles."""
        changes = {}
        if xi_los is not None:
            changes["transition_los"] = transition_coefficient(xi_los, self, params)
        if xi_nlos is not None:
            changes["transition_nlos"] = transition_coefficient(xi_nlos, self, params)
        if xi_gain is not None:
            gamma, factor = amplification_gain(
                self.eta_c,
                params.wavelength,
                xi_gain,
                params.electro_optic_coeff,
                params.field_strength,
                params.lc_thickness,
            )
            changes.update(gamma_coeff=gamma, amplification=factor)
            if self.eta_c > params.eta_air:
                changes["refraction_angle"] = refraction_angle(
                    xi_gain, params.eta_air, self.eta_c
                )
        return replace(self, **changes)
