"""Scene geometry, device orientation and LoS availability."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
import logging
import math
from typing import TYPE_CHECKING, Optional, Sequence

from cachetools import LRUCache, cached, keys
import numpy as np
from scipy import stats

from .const import (
    DEFAULT_AP,
    DEFAULT_AZIMUTH_DEG,
    DEFAULT_BANDWIDTH,
    DEFAULT_BLOCKER_HEIGHT,
    DEFAULT_BLOCKER_RADIUS,
    DEFAULT_BODY_OFFSET,
    DEFAULT_CONCENTRATOR_REF_INDEX,
    DEFAULT_DEVICE,
    DEFAULT_ELEC_TO_OPT_RATIO,
    DEFAULT_ELECTRO_OPTIC_COEFF,
    DEFAULT_ELEMENT_SIDE,
    DEFAULT_ETA_AIR,
    DEFAULT_ETA_EXTRAORDINARY,
    DEFAULT_ETA_ORDINARY,
    DEFAULT_FOV_DEG,
    DEFAULT_HALF_POWER_SEMIANGLE_DEG,
    DEFAULT_LC_THICKNESS,
    DEFAULT_MIRROR_COLS,
    DEFAULT_MIRROR_ORIGIN,
    DEFAULT_MIRROR_ROWS,
    DEFAULT_NOISE_PSD,
    DEFAULT_OPTICAL_FILTER_GAIN,
    DEFAULT_OPTICAL_POWER,
    DEFAULT_P_ADC,
    DEFAULT_P_DAC,
    DEFAULT_PD_AREA,
    DEFAULT_P_DRIVER,
    DEFAULT_P_FILTER,
    DEFAULT_P_LC,
    DEFAULT_P_MIRROR_UNIT,
    DEFAULT_P_PA,
    DEFAULT_P_R_CIRCUIT,
    DEFAULT_P_T_CIRCUIT,
    DEFAULT_P_TIA,
    DEFAULT_POLAR_DEG,
    DEFAULT_REFLECTIVITY_RIS,
    DEFAULT_REFLECTIVITY_WALL,
    DEFAULT_RESPONSIVITY,
    DEFAULT_ROOM,
    DEFAULT_SENSITIVITY_DBM,
    DEFAULT_V_APPLIED,
    DEFAULT_V_THRESHOLD,
    DEFAULT_V_ZERO,
    DEFAULT_WALL_ORIGIN,
    DEFAULT_WAVELENGTH,
    GROW_COLS,
    GROW_ROWS,
    PLANE_XZ,
    PLANE_YZ,
    POLAR_MEAN_DEG,
    POLAR_STD_DEG,
)
from .errors import ConfigurationError, GeometryError

if TYPE_CHECKING:
    from .lc_optics import LcState

_LOGGER: logging.Logger = logging.getLogger(__package__)

# Relative slack for points that sit exactly on a boundary.
_EPS = 1e-9

_POWER_FIELDS = (
    "p_dac",
    "p_filter",
    "p_pa",
    "p_driver",
    "p_t_circuit",
    "p_mirror_unit",
    "p_adc",
    "p_tia",
    "p_lc",
    "p_r_circuit",
)


def _vector(value: Sequence[float], name: str) -> tuple[float, float, float]:
    vec = tuple(float(v) for v in value)
    if len(vec) != 3 or not all(math.isfinite(v) for v in vec):
        raise GeometryError(f"{name} must be three finite coordinates, got {value!r}")
    return vec


@dataclass(frozen=True)
class SystemParams:
    """Physical and electrical constants of the link.

    Angles are radians, everything else SI. ``electric_field`` left unset means
    a uniform field ``v_applied / lc_thickness`` across the cell.
    """

    half_power_semiangle: float = math.radians(DEFAULT_HALF_POWER_SEMIANGLE_DEG)
    pd_area: float = DEFAULT_PD_AREA
    optical_filter_gain: float = DEFAULT_OPTICAL_FILTER_GAIN
    concentrator_ref_index: float = DEFAULT_CONCENTRATOR_REF_INDEX
    fov: float = math.radians(DEFAULT_FOV_DEG)
    reflectivity_wall: float = DEFAULT_REFLECTIVITY_WALL
    reflectivity_ris: float = DEFAULT_REFLECTIVITY_RIS
    eta_air: float = DEFAULT_ETA_AIR
    eta_extraordinary: float = DEFAULT_ETA_EXTRAORDINARY
    eta_ordinary: float = DEFAULT_ETA_ORDINARY
    v_threshold: float = DEFAULT_V_THRESHOLD
    v_zero: float = DEFAULT_V_ZERO
    v_applied: float = DEFAULT_V_APPLIED
    lc_thickness: float = DEFAULT_LC_THICKNESS
    wavelength: float = DEFAULT_WAVELENGTH
    electro_optic_coeff: float = DEFAULT_ELECTRO_OPTIC_COEFF
    electric_field: Optional[float] = None
    bandwidth: float = DEFAULT_BANDWIDTH
    optical_power: float = DEFAULT_OPTICAL_POWER
    elec_to_opt_ratio: float = DEFAULT_ELEC_TO_OPT_RATIO
    responsivity: float = DEFAULT_RESPONSIVITY
    noise_psd: float = DEFAULT_NOISE_PSD
    sensitivity_dbm: float = DEFAULT_SENSITIVITY_DBM
    p_dac: float = DEFAULT_P_DAC
    p_filter: float = DEFAULT_P_FILTER
    p_pa: float = DEFAULT_P_PA
    p_driver: float = DEFAULT_P_DRIVER
    p_t_circuit: float = DEFAULT_P_T_CIRCUIT
    p_mirror_unit: float = DEFAULT_P_MIRROR_UNIT
    p_adc: float = DEFAULT_P_ADC
    p_tia: float = DEFAULT_P_TIA
    p_lc: float = DEFAULT_P_LC
    p_r_circuit: float = DEFAULT_P_R_CIRCUIT

    def __post_init__(self):
        positive = (
            "half_power_semiangle",
            "pd_area",
            "optical_filter_gain",
            "concentrator_ref_index",
            "fov",
            "eta_air",
            "eta_extraordinary",
            "eta_ordinary",
            "v_threshold",
            "v_zero",
            "v_applied",
            "lc_thickness",
            "wavelength",
            "electro_optic_coeff",
            "bandwidth",
            "optical_power",
            "elec_to_opt_ratio",
            "responsivity",
            "noise_psd",
        )
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive, got {value}")
        for name in ("reflectivity_wall", "reflectivity_ris"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        for name in _POWER_FIELDS:
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must not be negative")
        if self.electric_field is not None and not self.electric_field > 0:
            raise ConfigurationError("electric_field must be positive when set")
        if self.fov > math.pi / 2:
            raise ConfigurationError("fov must not exceed pi/2")
        if self.half_power_semiangle >= math.pi / 2:
            raise ConfigurationError("half_power_semiangle must be below pi/2")
        if self.eta_ordinary > self.eta_extraordinary:
            raise ConfigurationError("eta_ordinary must not exceed eta_extraordinary")
        if self.elec_to_opt_ratio < 1:
            raise ConfigurationError("elec_to_opt_ratio must be at least 1")
        if self.optical_filter_gain > 1:
            raise ConfigurationError("optical_filter_gain must lie in (0, 1]")

    @property
    def field_strength(self) -> float:
        """Electric field across the LC cell in V/m."""
        if self.electric_field is not None:
            return self.electric_field
        return self.v_applied / self.lc_thickness

    @property
    def signal_power(self) -> float:
        """Electrical signal power (p/q)^2."""
        return (self.optical_power / self.elec_to_opt_ratio) ** 2

    @property
    def sensitivity_w(self) -> float:
        return 1e-3 * 10 ** (self.sensitivity_dbm / 10)

    def with_overrides(self, **overrides) -> SystemParams:
        """Return a copy with some fields replaced, validated again."""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigurationError(f"Unknown parameters: {sorted(unknown)}")
        return replace(self, **overrides)


@dataclass(frozen=True)
class CylinderBlocker:
    """A human body or obstacle standing on the floor."""

    base_center: tuple[float, float, float]
    radius: float = DEFAULT_BLOCKER_RADIUS
    height: float = DEFAULT_BLOCKER_HEIGHT

    def __post_init__(self):
        object.__setattr__(
            self, "base_center", _vector(self.base_center, "base_center")
        )
        if not self.radius > 0 or not self.height > 0:
            raise GeometryError("Blocker radius and height must be positive")


@dataclass(frozen=True)
class UserState:
    """Device position and orientation of one user.

    The user's own body is a cylinder placed at ``device_pos + body_offset``
    in the horizontal plane, standing on the floor.
    """

    device_pos: tuple[float, float, float] = DEFAULT_DEVICE
    azimuth: float = math.radians(DEFAULT_AZIMUTH_DEG)
    polar: float = math.radians(DEFAULT_POLAR_DEG)
    lc_state: Optional["LcState"] = None
    body_offset: Optional[tuple[float, float]] = DEFAULT_BODY_OFFSET
    body_radius: float = DEFAULT_BLOCKER_RADIUS
    body_height: float = DEFAULT_BLOCKER_HEIGHT

    def __post_init__(self):
        object.__setattr__(self, "device_pos", _vector(self.device_pos, "device_pos"))
        if not -math.pi - _EPS <= self.azimuth <= math.pi + _EPS:
            raise GeometryError(f"azimuth must lie in [-pi, pi], got {self.azimuth}")
        if not -_EPS <= self.polar <= math.pi / 2 + _EPS:
            raise GeometryError(f"polar must lie in [0, pi/2], got {self.polar}")
        if self.body_offset is not None:
            offset = tuple(float(v) for v in self.body_offset)
            if len(offset) != 2:
                raise GeometryError("body_offset must have two components")
            object.__setattr__(self, "body_offset", offset)

    @property
    def normal(self) -> np.ndarray:
        """Unit normal of the receiving surface."""
        return np.array(
            [
                math.cos(self.azimuth) * math.sin(self.polar),
                math.sin(self.azimuth) * math.sin(self.polar),
                math.cos(self.polar),
            ]
        )

    @property
    def body(self) -> Optional[CylinderBlocker]:
        if self.body_offset is None:
            return None
        x, y, _ = self.device_pos
        dx, dy = self.body_offset
        return CylinderBlocker((x + dx, y + dy, 0.0), self.body_radius, self.body_height)

    def with_orientation(self, azimuth: float, polar: float) -> UserState:
        return replace(self, azimuth=azimuth, polar=polar)

    def with_lc(self, lc_state: Optional["LcState"]) -> UserState:
        return replace(self, lc_state=lc_state)


@cached(
    LRUCache(maxsize=128),
    key=lambda rows, cols, side, origin, plane: keys.hashkey(
        rows, cols, side, origin, plane
    ),
)
def grid_centers(
    rows: int, cols: int, side: float, origin: tuple, plane: str
) -> np.ndarray:
    """Centres of a rows x cols grid of square cells on an axis-aligned wall.

    Rows run along +z, columns along the horizontal axis of ``plane``. The
    result has shape (rows*cols, 3), row-major, and is read-only.
    """
    _LOGGER.debug("Building %sx%s grid on plane %s at %s", rows, cols, plane, origin)
    jj, ii = np.meshgrid(np.arange(cols), np.arange(rows))
    along = (jj.ravel() + 0.5) * side
    up = (ii.ravel() + 0.5) * side
    centers = np.empty((rows * cols, 3))
    centers[:, 2] = origin[2] + up
    if plane == PLANE_YZ:
        centers[:, 0] = origin[0]
        centers[:, 1] = origin[1] + along
    elif plane == PLANE_XZ:
        centers[:, 0] = origin[0] + along
        centers[:, 1] = origin[1]
    else:
        raise GeometryError(f"Unsupported plane {plane!r}")
    centers.setflags(write=False)
    return centers


def mirror_normal(yaw: float, roll: float) -> np.ndarray:
    """Normal n(yaw, roll) shared by every mirror element."""
    return np.array(
        [
            math.sin(yaw) * math.cos(roll),
            math.cos(yaw) * math.cos(roll),
            math.sin(roll),
        ]
    )


@dataclass(frozen=True)
class MirrorArray:
    """Mirror-array reflecting surface mounted on a wall.

    All elements share one (roll, yaw) orientation. ``rows`` or ``cols`` may be
    zero to describe a scene without a reflecting surface.
    """

    rows: int = DEFAULT_MIRROR_ROWS
    cols: int = DEFAULT_MIRROR_COLS
    element_side: float = DEFAULT_ELEMENT_SIDE
    origin: tuple[float, float, float] = DEFAULT_MIRROR_ORIGIN
    plane: str = PLANE_YZ
    roll: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "origin", _vector(self.origin, "origin"))
        if self.rows < 0 or self.cols < 0:
            raise GeometryError("rows and cols must not be negative")
        if not self.element_side > 0:
            raise GeometryError("element_side must be positive")
        if self.plane not in (PLANE_YZ, PLANE_XZ):
            raise GeometryError(f"Unsupported plane {self.plane!r}")

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols

    @property
    def element_area(self) -> float:
        return self.element_side**2

    @property
    def centers(self) -> np.ndarray:
        return grid_centers(
            self.rows, self.cols, self.element_side, self.origin, self.plane
        )

    @property
    def normal(self) -> np.ndarray:
        return mirror_normal(self.yaw, self.roll)

    @property
    def extent(self) -> tuple[float, float]:
        """(height, width) of the panel in metres."""
        return self.rows * self.element_side, self.cols * self.element_side

    def with_orientation(self, roll: float, yaw: float) -> MirrorArray:
        return replace(self, roll=roll, yaw=yaw)

    def with_elements(self, count: int, grow: str = GROW_COLS) -> MirrorArray:
        """Resize to ``count`` elements keeping the origin and one axis fixed.

        Arrays of increasing size are nested: every element of a smaller array
        is also an element of a larger one.
        """
        if count < 0:
            raise GeometryError("Element count must not be negative")
        if grow == GROW_COLS:
            if self.rows == 0 or count % self.rows:
                raise GeometryError(f"{count} elements do not fill {self.rows} rows")
            return replace(self, cols=count // self.rows)
        if grow == GROW_ROWS:
            if self.cols == 0 or count % self.cols:
                raise GeometryError(f"{count} elements do not fill {self.cols} cols")
            return replace(self, rows=count // self.cols)
        raise GeometryError(f"Unknown grow axis {grow!r}")


@dataclass(frozen=True)
class WallPanel:
    """Plain wall region used for first-order diffuse reflection.

    ``normal`` is the fixed normal pointing into the room.
    """

    rows: int = DEFAULT_MIRROR_ROWS
    cols: int = DEFAULT_MIRROR_COLS
    patch_side: float = DEFAULT_ELEMENT_SIDE
    origin: tuple[float, float, float] = DEFAULT_WALL_ORIGIN
    plane: str = PLANE_XZ
    normal: tuple[float, float, float] = (0.0, 1.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "origin", _vector(self.origin, "origin"))
        normal = np.asarray(_vector(self.normal, "normal"))
        length = np.linalg.norm(normal)
        if length == 0:
            raise GeometryError("Wall normal must not be zero")
        object.__setattr__(self, "normal", tuple(float(v) for v in normal / length))
        if self.rows < 1 or self.cols < 1 or not self.patch_side > 0:
            raise GeometryError("Wall panel needs at least one positive-size patch")

    @property
    def patch_area(self) -> float:
        return self.patch_side**2

    @property
    def centers(self) -> np.ndarray:
        return grid_centers(self.rows, self.cols, self.patch_side, self.origin, self.plane)


@dataclass(frozen=True)
class Scene:
    """Room contents: access point, users, obstacles and reflecting surfaces."""

    ap_pos: tuple[float, float, float] = DEFAULT_AP
    users: tuple[UserState, ...] = field(default_factory=lambda: (UserState(),))
    blockers: tuple[CylinderBlocker, ...] = ()
    mirror_array: MirrorArray = field(default_factory=MirrorArray)
    wall_panel: WallPanel = field(default_factory=WallPanel)
    room: tuple[float, float, float] = DEFAULT_ROOM

    def __post_init__(self):
        object.__setattr__(self, "ap_pos", _vector(self.ap_pos, "ap_pos"))
        object.__setattr__(self, "room", _vector(self.room, "room"))
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "blockers", tuple(self.blockers))
        if not self.users:
            raise ConfigurationError("A scene needs at least one user")
        if abs(self.ap_pos[2] - self.room[2]) > _EPS:
            raise ConfigurationError("The access point must sit on the ceiling plane")
        self._check_inside(self.ap_pos, "ap_pos")
        for index, user in enumerate(self.users):
            self._check_inside(user.device_pos, f"users[{index}].device_pos")
        for name, surface in (
            ("mirror_array", self.mirror_array),
            ("wall_panel", self.wall_panel),
        ):
            centers = surface.centers
            if len(centers):
                self._check_inside(centers.min(axis=0), name)
                self._check_inside(centers.max(axis=0), name)

    def _check_inside(self, point: Sequence[float], name: str):
        for value, size in zip(point, self.room):
            if not -_EPS <= value <= size + _EPS:
                raise ConfigurationError(f"{name} {tuple(point)} lies outside the room")

    @property
    def user(self) -> UserState:
        return self.users[0]

    def obstacles(self) -> list[CylinderBlocker]:
        """Scene blockers followed by every user's body."""
        bodies = [user.body for user in self.users if user.body is not None]
        return list(self.blockers) + bodies

    def with_mirror_array(self, mirror_array: MirrorArray) -> Scene:
        return replace(self, mirror_array=mirror_array)

    def with_users(self, users: Sequence[UserState]) -> Scene:
        return replace(self, users=tuple(users))

    def with_blockers(self, blockers: Sequence[CylinderBlocker]) -> Scene:
        return replace(self, blockers=tuple(blockers))


def _direction(src: Sequence[float], dst: Sequence[float]) -> tuple[np.ndarray, float]:
    vec = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    dist = float(np.linalg.norm(vec))
    if dist <= 1e-12:
        raise GeometryError(f"Zero distance between {tuple(src)} and {tuple(dst)}")
    return vec / dist, dist


def cos_incidence_at_device(src_pos: Sequence[float], user: UserState) -> float:
    """Cosine of the incidence angle at the device for light from ``src_pos``."""
    unit, _ = _direction(user.device_pos, src_pos)
    return float(np.clip(unit @ user.normal, -1.0, 1.0))


def cos_irradiance_from_mirror(
    mirror_center: Sequence[float],
    user_pos: Sequence[float],
    yaw: float,
    roll: float,
) -> float:
    """Cosine of the irradiance angle from a mirror element toward the user."""
    unit, _ = _direction(user_pos, mirror_center)
    return float(np.clip(unit @ mirror_normal(yaw, roll), -1.0, 1.0))


def segment_intersects_cylinder(
    a: Sequence[float], b: Sequence[float], blocker: CylinderBlocker
) -> bool:
    """Whether the open segment (a, b) passes strictly inside ``blocker``.

    Tangent contact and endpoints on the surface do not count.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    seg = b - a
    if not np.any(np.abs(seg) > 1e-12):
        raise GeometryError("Degenerate segment")

    r2 = blocker.radius**2
    w0 = a[:2] - np.asarray(blocker.base_center[:2])
    horizontal = seg[:2]
    h2 = float(horizontal @ horizontal)

    lo, hi = 0.0, 1.0
    if h2 <= 1e-24:
        if float(w0 @ w0) >= r2 * (1 - 1e-12):
            return False
    else:
        t_star = -float(w0 @ horizontal) / h2
        closest = w0 + t_star * horizontal
        d2 = float(closest @ closest)
        if d2 >= r2 * (1 - 1e-12):
            return False
        half = math.sqrt((r2 - d2) / h2)
        lo, hi = max(lo, t_star - half), min(hi, t_star + half)

    z_low = blocker.base_center[2]
    z_high = z_low + blocker.height
    if abs(seg[2]) <= 1e-15:
        if not z_low <= a[2] <= z_high:
            return False
    else:
        t1 = (z_low - a[2]) / seg[2]
        t2 = (z_high - a[2]) / seg[2]
        lo, hi = max(lo, min(t1, t2)), min(hi, max(t1, t2))
    return hi - lo > 1e-12


def los_indicator(
    scene: Scene,
    user: UserState,
    params: SystemParams,
    received_power_los: float,
) -> int:
    """LoS availability: unobstructed, inside the field of view and detectable."""
    for blocker in scene.obstacles():
        if segment_intersects_cylinder(scene.ap_pos, user.device_pos, blocker):
            _LOGGER.debug("LoS of user at %s blocked by %s", user.device_pos, blocker)
            return 0
    cos_xi = cos_incidence_at_device(scene.ap_pos, user)
    if cos_xi <= 0 or math.acos(min(cos_xi, 1.0)) > params.fov:
        return 0
    if received_power_los <= 0:
        return 0
    if 10 * math.log10(received_power_los / 1e-3) < params.sensitivity_dbm:
        return 0
    return 1


def _polar_distribution():
    # Laplace with standard deviation s has scale s / sqrt(2).
    return stats.laplace(
        loc=math.radians(POLAR_MEAN_DEG),
        scale=math.radians(POLAR_STD_DEG) / math.sqrt(2),
    )


def sample_orientations(
    rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` (azimuth, polar) pairs.

    Azimuth is uniform on [-pi, pi]; polar follows a Laplace law truncated to
    [0, pi/2] by rejection.
    """
    azimuth = rng.uniform(-math.pi, math.pi, size)
    polar = np.empty(size)
    dist = _polar_distribution()
    filled = 0
    while filled < size:
        draws = np.atleast_1d(dist.rvs(size=size - filled, random_state=rng))
        draws = draws[(draws >= 0) & (draws <= math.pi / 2)]
        polar[filled : filled + len(draws)] = draws
        filled += len(draws)
    return azimuth, polar


def sample_orientation(rng: np.random.Generator) -> tuple[float, float]:
    azimuth, polar = sample_orientations(rng, 1)
    return float(azimuth[0]), float(polar[0])


def sample_blockers(
    rng: np.random.Generator,
    count: int,
    room: Sequence[float],
    radius: float = DEFAULT_BLOCKER_RADIUS,
    height: float = DEFAULT_BLOCKER_HEIGHT,
) -> list[CylinderBlocker]:
    """Place ``count`` cylinders uniformly over the floor, fully inside the room."""
    xs = rng.uniform(radius, room[0] - radius, count)
    ys = rng.uniform(radius, room[1] - radius, count)
    return [CylinderBlocker((x, y, 0.0), radius, height) for x, y in zip(xs, ys)]
