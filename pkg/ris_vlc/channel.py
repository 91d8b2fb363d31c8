"""Optical channel gains of the direct, mirror-array and wall paths."""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from typing import Optional, Sequence

import numpy as np

from .const import LOS_ALWAYS, LOS_AUTO, LOS_MODES, LOS_NEVER, PATH_RIS, PATH_WALL
from .errors import ConfigurationError, ContractViolation, GeometryError
from .lc_optics import LcState
from .system_model import (
    Scene,
    SystemParams,
    UserState,
    cos_incidence_at_device,
    los_indicator,
)

_LOGGER: logging.Logger = logging.getLogger(__package__)

# Downward-facing access point.
AP_NORMAL = np.array([0.0, 0.0, -1.0])


def lambertian_index(half_power_semiangle: float) -> float:
    cos_half = math.cos(half_power_semiangle)
    if not 0 < cos_half < 1:
        raise GeometryError(
            f"Half-power semi-angle {half_power_semiangle} gives no finite order"
        )
    return -1 / math.log2(cos_half)


def concentrator_gain(f: float, fov: float, xi: float) -> float:
    if not 0 < fov <= math.pi / 2:
        raise ConfigurationError(f"fov must lie in (0, pi/2], got {fov}")
    if 0 <= xi <= fov:
        return f**2 / math.sin(fov) ** 2
    return 0.0


def _receiver_gain(params: SystemParams, cos_xi: np.ndarray) -> np.ndarray:
    """Concentrator times filter gain, zero outside the field of view."""
    inside = (cos_xi > 0) & (cos_xi >= math.cos(params.fov))
    gain = params.concentrator_ref_index**2 / math.sin(params.fov) ** 2
    return np.where(inside, gain * params.optical_filter_gain, 0.0)


def los_gain(scene: Scene, user: UserState, params: SystemParams) -> float:
    """Lambertian gain of the direct AP to device path, ignoring blockage."""
    ap = np.asarray(scene.ap_pos)
    vec = ap - np.asarray(user.device_pos)
    dist = float(np.linalg.norm(vec))
    if dist <= 1e-12:
        raise GeometryError("Access point and device coincide")
    cos_phi = float(vec @ -AP_NORMAL) / dist
    cos_xi = cos_incidence_at_device(scene.ap_pos, user)
    receiver = float(_receiver_gain(params, np.array([cos_xi]))[0])
    if cos_phi <= 0 or receiver == 0:
        return 0.0
    m = lambertian_index(params.half_power_semiangle)
    return (
        (m + 1)
        * params.pd_area
        / (2 * math.pi * dist**2)
        * cos_phi**m
        * cos_xi
        * receiver
    )


def reflected_gains(
    ap_pos: Sequence[float],
    user: UserState,
    centers: np.ndarray,
    facing: np.ndarray,
    area: float,
    reflectivity: float,
    params: SystemParams,
) -> tuple[np.ndarray, np.ndarray]:
    """First-order gains through each reflecting cell.

    ``facing`` is the unit normal of the cells pointing into the room. Returns
    the per-cell gains and the cosine of the incidence angle at the device for
    each cell.
    """
    if len(centers) == 0:
        return np.zeros(0), np.zeros(0)
    ap = np.asarray(ap_pos, dtype=float)
    device = np.asarray(user.device_pos, dtype=float)

    to_ap = ap - centers
    d_ap = np.linalg.norm(to_ap, axis=1)
    to_user = device - centers
    d_user = np.linalg.norm(to_user, axis=1)
    if d_ap.min() <= 1e-12 or d_user.min() <= 1e-12:
        raise GeometryError("A reflecting cell coincides with the AP or the device")

    cos_phi_ap = (to_ap @ -AP_NORMAL) / d_ap
    cos_xi_cell = (to_ap @ facing) / d_ap
    cos_phi_user = (to_user @ facing) / d_user
    cos_xi_user = np.clip((-to_user @ user.normal) / d_user, -1.0, 1.0)

    m = lambertian_index(params.half_power_semiangle)
    receiver = _receiver_gain(params, cos_xi_user)
    lit = (cos_phi_ap > 0) & (cos_xi_cell > 0) & (cos_phi_user > 0) & (receiver > 0)
    with np.errstate(invalid="ignore"):
        gains = (
            reflectivity
            * (m + 1)
            * params.pd_area
            / (2 * math.pi**2 * d_ap**2 * d_user**2)
            * area
            * np.abs(cos_phi_ap) ** m
            * cos_xi_cell
            * cos_phi_user
            * cos_xi_user
            * receiver
        )
    return np.where(lit, gains, 0.0), cos_xi_user


def mirror_nlos_gains(
    scene: Scene, user: UserState, params: SystemParams
) -> tuple[np.ndarray, np.ndarray]:
    array = scene.mirror_array
    return reflected_gains(
        scene.ap_pos,
        user,
        array.centers,
        -array.normal,
        array.element_area,
        params.reflectivity_ris,
        params,
    )


def mirror_nlos_gain(
    scene: Scene, user: UserState, k: int, params: SystemParams
) -> float:
    """Gain through mirror element ``k`` (0-based, row-major)."""
    count = scene.mirror_array.num_elements
    if not 0 <= k < count:
        raise ContractViolation(f"Element index {k} outside [0, {count})")
    gains, _ = mirror_nlos_gains(scene, user, params)
    return float(gains[k])


def wall_nlos_gains(
    scene: Scene, user: UserState, params: SystemParams
) -> tuple[np.ndarray, np.ndarray]:
    wall = scene.wall_panel
    return reflected_gains(
        scene.ap_pos,
        user,
        wall.centers,
        np.asarray(wall.normal),
        wall.patch_area,
        params.reflectivity_wall,
        params,
    )


def wall_nlos_gain(
    scene: Scene, user: UserState, patch: int, params: SystemParams
) -> float:
    """Gain through wall patch ``patch`` (0-based, row-major)."""
    count = len(scene.wall_panel.centers)
    if not 0 <= patch < count:
        raise ContractViolation(f"Patch index {patch} outside [0, {count})")
    gains, _ = wall_nlos_gains(scene, user, params)
    return float(gains[patch])


@dataclass(frozen=True)
class ChannelGain:
    """Per-path decomposition of the composite channel of one user."""

    h_los: float
    h_nlos_per_mirror: np.ndarray = field(default_factory=lambda: np.zeros(0))
    h_wall: float = 0.0
    psi_los: float = 1.0
    psi_nlos: float = 1.0
    indicator: int = 0
    h_total: float = 0.0
    path_set: str = PATH_RIS
    lc: Optional[LcState] = None

    @property
    def h_nlos(self) -> float:
        """Total reflected gain before the LC transition."""
        return float(np.sum(self.h_nlos_per_mirror)) + self.h_wall

    @property
    def amplification(self) -> float:
        return 1.0 if self.lc is None else self.lc.amplification


def _angle(cos_value: float) -> float:
    return math.acos(min(max(cos_value, 0.0), 1.0))


def total_gain(
    scene: Scene,
    user: UserState,
    params: SystemParams,
    path_set: str = PATH_RIS,
    lc: Optional[LcState] = None,
    los_mode: str = LOS_AUTO,
) -> ChannelGain:
    """Composite channel gain of ``user`` through the chosen reflecting path.

    ``lc=None`` models a receiver without an LC cell: both transitions are 1
    and there is no amplification.
    """
    if los_mode not in LOS_MODES:
        raise ConfigurationError(f"Unknown LoS mode {los_mode!r}")
    h_los = los_gain(scene, user, params)
    if los_mode == LOS_ALWAYS:
        indicator = 1
    elif los_mode == LOS_NEVER:
        indicator = 0
    else:
        indicator = los_indicator(
            scene, user, params, params.optical_power * h_los
        )

    if path_set == PATH_RIS:
        per_cell, cos_xi_cells = mirror_nlos_gains(scene, user, params)
    elif path_set == PATH_WALL:
        per_cell, cos_xi_cells = wall_nlos_gains(scene, user, params)
    else:
        raise ConfigurationError(f"Unknown path set {path_set!r}")
    h_reflected = float(np.sum(per_cell))

    psi_los = psi_nlos = 1.0
    settled = None
    if lc is not None:
        xi_los = xi_nlos = None
        # The LoS transition is reported even when the path is blocked;
        # blockage is carried by the indicator alone.
        if h_los > 0:
            xi_los = _angle(cos_incidence_at_device(scene.ap_pos, user))
        if h_reflected > 0:
            xi_nlos = _angle(float(cos_xi_cells[int(np.argmax(per_cell))]))
        if indicator and xi_los is not None and (
            xi_nlos is None or h_los >= h_reflected
        ):
            xi_gain = xi_los
        else:
            xi_gain = xi_nlos
        settled = lc.settled(params, xi_los=xi_los, xi_nlos=xi_nlos, xi_gain=xi_gain)
        psi_los = settled.transition_los if xi_los is not None else 0.0
        psi_nlos = settled.transition_nlos if xi_nlos is not None else 0.0

    h_total = indicator * h_los * psi_los + h_reflected * psi_nlos
    if path_set == PATH_RIS:
        return ChannelGain(
            h_los=h_los,
            h_nlos_per_mirror=per_cell,
            psi_los=psi_los,
            psi_nlos=psi_nlos,
            indicator=indicator,
            h_total=h_total,
            path_set=path_set,
            lc=settled,
        )
    return ChannelGain(
        h_los=h_los,
        h_wall=h_reflected,
        psi_los=psi_los,
        psi_nlos=psi_nlos,
        indicator=indicator,
        h_total=h_total,
        path_set=path_set,
        lc=settled,
    )
