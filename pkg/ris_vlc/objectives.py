"""Rate, sum-rate and energy-efficiency objectives over the channel."""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import logging
import math
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelGain, total_gain
from .const import (
    DEFAULT_DC_BIAS,
    DEFAULT_NUM_USERS,
    DEFAULT_ZETA,
    DIM_ETA_C,
    DIM_ROLL,
    DIM_YAW,
    ETA_C_BOUNDS,
    LOS_AUTO,
    PATH_RIS,
    PATH_WALL,
)
from .errors import ConfigurationError, ContractViolation
from .lc_optics import LcState
from .optimizer import Dimension, SearchSpace
from .system_model import Scene, SystemParams

_LOGGER: logging.Logger = logging.getLogger(__package__)

_SNR_SCALE = math.e / (2 * math.pi)


@dataclass(frozen=True)
class PowerModel:
    """Power drawn by transmitter, reflecting surface and receiver, in watts."""

    p_signal: float
    p_dac: float
    p_filter: float
    p_pa: float
    p_driver: float
    p_t_circuit: float
    p_mirror_unit: float
    p_adc: float
    p_tia: float
    p_lc: float
    p_r_circuit: float
    k_elements: int = 0

    def __post_init__(self):
        for name, value in vars(self).items():
            if value < 0:
                raise ConfigurationError(f"{name} must not be negative")

    @classmethod
    def from_params(
        cls, params: SystemParams, k_elements: int, with_lc: bool = True
    ) -> PowerModel:
        """Build the model from link parameters; ``with_lc=False`` drops P_LC."""
        return cls(
            p_signal=params.signal_power,
            p_dac=params.p_dac,
            p_filter=params.p_filter,
            p_pa=params.p_pa,
            p_driver=params.p_driver,
            p_t_circuit=params.p_t_circuit,
            p_mirror_unit=params.p_mirror_unit,
            p_adc=params.p_adc,
            p_tia=params.p_tia,
            p_lc=params.p_lc if with_lc else 0.0,
            p_r_circuit=params.p_r_circuit,
            k_elements=k_elements,
        )

    @property
    def transmitter(self) -> float:
        return (
            self.p_signal
            + self.p_dac
            + self.p_filter
            + self.p_pa
            + self.p_driver
            + self.p_t_circuit
        )

    @property
    def surface(self) -> float:
        return self.p_mirror_unit * self.k_elements

    @property
    def receiver(self) -> float:
        return self.p_adc + self.p_tia + self.p_filter + self.p_lc + self.p_r_circuit


def total_power(pm: PowerModel) -> float:
    return pm.transmitter + pm.surface + pm.receiver


def energy_efficiency(rate: float, pm: PowerModel) -> float:
    """Bits per joule."""
    power = total_power(pm)
    if power <= 0:
        raise ConfigurationError("Total power must be positive")
    return rate / power


def _check_link(params: SystemParams):
    if not params.bandwidth > 0 or not params.noise_psd > 0:
        raise ConfigurationError("Bandwidth and noise PSD must be positive")


def achievable_rate(
    gain: ChannelGain, lc: Optional[LcState], params: SystemParams
) -> float:
    """Lower bound on the rate in bits/s; ``lc=None`` means no amplification."""
    _check_link(params)
    if gain.h_total < 0:
        raise ContractViolation("Channel gain must not be negative")
    amplification = 1.0 if lc is None else lc.amplification
    current = (
        params.optical_power
        / params.elec_to_opt_ratio
        * params.responsivity
        * amplification
        * gain.h_total
    )
    snr = _SNR_SCALE * current**2 / (params.noise_psd * params.bandwidth)
    return params.bandwidth * math.log2(1 + snr)


def wall_rate(gain: ChannelGain, lc: Optional[LcState], params: SystemParams) -> float:
    """Rate over the direct path plus first-order wall reflection."""
    if gain.path_set != PATH_WALL:
        raise ContractViolation("wall_rate needs a channel built over the wall path")
    return achievable_rate(gain, lc, params)


def noma_power_ratios(zeta: float, num_users: int) -> list[float]:
    """Geometric power split; the last user takes the remainder."""
    if not 0.5 < zeta <= 1:
        raise ConfigurationError(f"zeta must lie in (0.5, 1], got {zeta}")
    if num_users < 1:
        raise ContractViolation("At least one user is required")
    ratios = [zeta * (1 - zeta) ** (u - 1) for u in range(1, num_users)]
    ratios.append((1 - zeta) ** (num_users - 1))
    return ratios


@dataclass(frozen=True)
class NomaConfig:
    """Power-domain NOMA settings.

    ``power_ratios`` defaults to the geometric split; an explicit list must be
    non-negative and sum to one.
    """

    zeta: float = DEFAULT_ZETA
    num_users: int = DEFAULT_NUM_USERS
    dc_bias: float = DEFAULT_DC_BIAS
    power_ratios: Optional[tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        if self.power_ratios is None:
            ratios = tuple(noma_power_ratios(self.zeta, self.num_users))
        else:
            ratios = tuple(float(c) for c in self.power_ratios)
            if len(ratios) != self.num_users:
                raise ContractViolation("One power ratio per user is required")
            if min(ratios) < 0 or not math.isclose(sum(ratios), 1.0, abs_tol=1e-12):
                raise ConfigurationError("Power ratios must be non-negative and sum to 1")
        object.__setattr__(self, "power_ratios", ratios)


def noma_sum_rate(
    gains: Sequence[ChannelGain],
    lcs: Sequence[Optional[LcState]],
    cfg: NomaConfig,
    params: SystemParams,
) -> float:
    """Sum rate with perfect SIC for users sorted by ascending channel gain."""
    _check_link(params)
    if not len(gains) == len(lcs) == cfg.num_users:
        raise ContractViolation(
            f"Expected {cfg.num_users} users, got {len(gains)} gains and {len(lcs)} states"
        )
    totals = [g.h_total for g in gains]
    if any(b < a for a, b in zip(totals, totals[1:])):
        raise ContractViolation("Channel gains must be sorted in ascending order")

    ratios = cfg.power_ratios
    noise = params.noise_psd * params.bandwidth
    p_s = params.signal_power
    rate = 0.0
    for u, (gain, lc) in enumerate(zip(gains, lcs)):
        amplification = 1.0 if lc is None else lc.amplification
        strength = (params.responsivity * amplification * gain.h_total) ** 2
        interference = strength * p_s * sum(ratios[u + 1 :])
        sinr = _SNR_SCALE * strength * ratios[u] * p_s / (interference + noise)
        rate += params.bandwidth * math.log2(1 + sinr)
    return rate


class Objective(ABC):
    """Scalar fitness of a decision vector, larger is better."""

    space: SearchSpace

    @abstractmethod
    def __init__(self, scene: Scene, params: SystemParams):
        self.scene = scene
        self.params = params

    @abstractmethod
    def evaluate(self, position: np.ndarray) -> float:
        pass

    def describe(self, position: Sequence[float]) -> dict[str, float]:
        """Map dimension names to the coordinates of ``position``."""
        return dict(zip(self.space.names, (float(v) for v in position)))

    def __call__(self, position: Sequence[float]) -> float:
        return self.evaluate(np.asarray(position, dtype=float))


def _orientation_dims() -> list[Dimension]:
    return [
        Dimension(DIM_ROLL, -math.pi / 2, math.pi / 2),
        Dimension(DIM_YAW, -math.pi / 2, math.pi / 2),
    ]


class RateObjective(Objective):
    """Single-user rate through the mirror array or the wall.

    The decision vector holds the shared mirror roll and yaw (only when a
    mirror array is optimised) followed by the LC refractive index (only when
    the receiver has an LC cell).
    """

    def __init__(
        self,
        scene: Scene,
        params: SystemParams,
        path_set: str = PATH_RIS,
        los_mode: str = LOS_AUTO,
        use_lc: bool = True,
        optimize_orientation: bool = True,
    ):
        super().__init__(scene, params)
        self.path_set = path_set
        self.los_mode = los_mode
        self.use_lc = use_lc
        self.optimize_orientation = (
            optimize_orientation
            and path_set == PATH_RIS
            and scene.mirror_array.num_elements > 0
        )
        dims = _orientation_dims() if self.optimize_orientation else []
        if use_lc:
            dims.append(Dimension(DIM_ETA_C, *ETA_C_BOUNDS))
        if not dims:
            raise ConfigurationError("The objective has no decision variables")
        self.space = SearchSpace(tuple(dims))

    def scene_at(self, position: np.ndarray) -> Scene:
        if not self.optimize_orientation:
            return self.scene
        array = self.scene.mirror_array.with_orientation(
            roll=float(position[0]), yaw=float(position[1])
        )
        return self.scene.with_mirror_array(array)

    def lc_at(self, position: np.ndarray) -> Optional[LcState]:
        if not self.use_lc:
            return None
        return LcState.from_index(float(position[-1]), self.params)

    def channel(self, position: Sequence[float]) -> ChannelGain:
        position = np.asarray(position, dtype=float)
        return total_gain(
            self.scene_at(position),
            self.scene.user,
            self.params,
            path_set=self.path_set,
            lc=self.lc_at(position),
            los_mode=self.los_mode,
        )

    def evaluate(self, position: np.ndarray) -> float:
        gain = self.channel(position)
        return achievable_rate(gain, gain.lc, self.params)


class WallRateObjective(RateObjective):
    """Rate with wall reflection in place of the mirror array."""

    def __init__(
        self,
        scene: Scene,
        params: SystemParams,
        los_mode: str = LOS_AUTO,
        use_lc: bool = True,
    ):
        super().__init__(
            scene, params, path_set=PATH_WALL, los_mode=los_mode, use_lc=use_lc
        )

    def evaluate(self, position: np.ndarray) -> float:
        gain = self.channel(position)
        return wall_rate(gain, gain.lc, self.params)


class SumRateObjective(Objective):
    """NOMA sum rate of every user in the scene.

    Each user has its own LC cell, so the vector is (roll, yaw, eta_c_1, ...,
    eta_c_U). Users are ordered by their composite gain at every evaluation.
    """

    def __init__(
        self,
        scene: Scene,
        params: SystemParams,
        noma: Optional[NomaConfig] = None,
        los_mode: str = LOS_AUTO,
    ):
        super().__init__(scene, params)
        self.noma = noma or NomaConfig(num_users=len(scene.users))
        if self.noma.num_users != len(scene.users):
            raise ConfigurationError(
                f"NOMA expects {self.noma.num_users} users, scene has {len(scene.users)}"
            )
        self.los_mode = los_mode
        dims = _orientation_dims()
        dims += [
            Dimension(f"{DIM_ETA_C}_{u + 1}", *ETA_C_BOUNDS)
            for u in range(len(scene.users))
        ]
        self.space = SearchSpace(tuple(dims))

    def channels(self, position: Sequence[float]) -> list[ChannelGain]:
        """Per-user gains in scene order."""
        position = np.asarray(position, dtype=float)
        array = self.scene.mirror_array.with_orientation(
            roll=float(position[0]), yaw=float(position[1])
        )
        scene = self.scene.with_mirror_array(array)
        return [
            total_gain(
                scene,
                user,
                self.params,
                path_set=PATH_RIS,
                lc=LcState.from_index(float(eta), self.params),
                los_mode=self.los_mode,
            )
            for user, eta in zip(scene.users, position[2:])
        ]

    def evaluate(self, position: np.ndarray) -> float:
        gains = sorted(self.channels(position), key=lambda g: g.h_total)
        return noma_sum_rate(gains, [g.lc for g in gains], self.noma, self.params)


class EnergyEfficiencyObjective(Objective):
    """Rate of a wrapped objective divided by the total consumed power."""

    def __init__(self, rate: RateObjective):
        super().__init__(rate.scene, rate.params)
        self.rate = rate
        self.space = rate.space
        self.power_model = PowerModel.from_params(
            rate.params,
            rate.scene.mirror_array.num_elements if rate.path_set == PATH_RIS else 0,
            with_lc=rate.use_lc,
        )

    def evaluate(self, position: np.ndarray) -> float:
        return energy_efficiency(self.rate.evaluate(position), self.power_model)
