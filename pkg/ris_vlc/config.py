"""Scenario file loading and validation."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import logging
import math
import os
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import voluptuous as vol
import yaml

from .const import (
    CONF_A,
    CONF_AGENTS,
    CONF_ANGLE_POINTS,
    CONF_AP,
    CONF_AZIMUTH,
    CONF_BASE,
    CONF_BLOCKERS,
    CONF_BODY_OFFSET,
    CONF_COLS,
    CONF_DC_BIAS,
    CONF_ELEMENT_SIDE,
    CONF_ELEMENTS,
    CONF_GROW,
    CONF_HEIGHT,
    CONF_INDEX_POINTS,
    CONF_ITERATIONS,
    CONF_KIND,
    CONF_LINK,
    CONF_LOS_MODE,
    CONF_MIRROR_ARRAY,
    CONF_MONTE_CARLO,
    CONF_NORMAL,
    CONF_NUM_USERS,
    CONF_OPTIMIZER,
    CONF_ORACLE,
    CONF_ORIGIN,
    CONF_OUTPUT,
    CONF_PARAMS,
    CONF_PLANE,
    CONF_POLAR,
    CONF_POSITION,
    CONF_RADIUS,
    CONF_RANDOM_BLOCKERS,
    CONF_ROLL,
    CONF_ROOM,
    CONF_ROWS,
    CONF_SAMPLE_ORIENTATION,
    CONF_SCENE,
    CONF_SEED,
    CONF_START,
    CONF_STEPS,
    CONF_STOP,
    CONF_SWEEP,
    CONF_TRIALS,
    CONF_USERS,
    CONF_VALUES,
    CONF_VARIABLE,
    CONF_WALL,
    CONF_YAW,
    CONF_ZETA,
    DEFAULT_A,
    DEFAULT_AGENTS,
    DEFAULT_ANGLE_POINTS,
    DEFAULT_AP,
    DEFAULT_AZIMUTH_DEG,
    DEFAULT_BLOCKER_HEIGHT,
    DEFAULT_BLOCKER_RADIUS,
    DEFAULT_BODY_OFFSET,
    DEFAULT_DC_BIAS,
    DEFAULT_DEVICE,
    DEFAULT_ELEMENT_SIDE,
    DEFAULT_INDEX_POINTS,
    DEFAULT_ITERATIONS,
    DEFAULT_MIRROR_COLS,
    DEFAULT_MIRROR_ORIGIN,
    DEFAULT_MIRROR_ROWS,
    DEFAULT_NUM_USERS,
    DEFAULT_OUTPUT,
    DEFAULT_POLAR_DEG,
    DEFAULT_RANDOM_BLOCKERS,
    DEFAULT_ROOM,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    DEFAULT_WALL_ORIGIN,
    DEFAULT_ZETA,
    DIM_ETA_C,
    ENV_OUTPUT_DIR,
    GROW_COLS,
    GROW_ROWS,
    KIND_CONVERGENCE_TRACE,
    KIND_NOMA_MULTIUSER,
    KIND_RATE_P0,
    LOS_AUTO,
    LOS_MODES,
    PLANE_XZ,
    PLANE_YZ,
    SCENARIO_KINDS,
)
from .errors import ConfigValidationError, RisVlcError
from .objectives import NomaConfig
from .system_model import (
    CylinderBlocker,
    MirrorArray,
    Scene,
    SystemParams,
    UserState,
    WallPanel,
)

_LOGGER: logging.Logger = logging.getLogger(__package__)

# File keys given in degrees, mapped to the radian fields they set.
ANGLE_PARAMS = {
    "half_power_semiangle_deg": "half_power_semiangle",
    "fov_deg": "fov",
}

SI_PARAMS = (
    "pd_area",
    "optical_filter_gain",
    "concentrator_ref_index",
    "reflectivity_wall",
    "reflectivity_ris",
    "eta_air",
    "eta_extraordinary",
    "eta_ordinary",
    "v_threshold",
    "v_zero",
    "v_applied",
    "lc_thickness",
    "wavelength",
    "electro_optic_coeff",
    "electric_field",
    "bandwidth",
    "optical_power",
    "elec_to_opt_ratio",
    "responsivity",
    "noise_psd",
    "sensitivity_dbm",
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

SWEEP_VARIABLES = tuple(ANGLE_PARAMS) + SI_PARAMS + (CONF_ELEMENTS, CONF_ZETA)

_number = vol.Coerce(float)
_count = vol.All(vol.Coerce(int), vol.Range(min=1))
_vec2 = vol.All(vol.ExactSequence([_number, _number]), vol.Coerce(tuple))
_vec3 = vol.All(vol.ExactSequence([_number, _number, _number]), vol.Coerce(tuple))
_positive = vol.All(_number, vol.Range(min=0, min_included=False))

PARAMS_SCHEMA = vol.Schema(
    {
        vol.Optional("half_power_semiangle_deg"): vol.All(
            _number, vol.Range(min=0, max=90, min_included=False, max_included=False)
        ),
        vol.Optional("fov_deg"): vol.All(
            _number, vol.Range(min=0, max=90, min_included=False)
        ),
        **{
            vol.Optional(key): _number
            for key in SI_PARAMS
            if key not in ("optical_filter_gain", "reflectivity_wall", "reflectivity_ris")
        },
        vol.Optional("optical_filter_gain"): vol.All(
            _number, vol.Range(min=0, max=1, min_included=False)
        ),
        vol.Optional("reflectivity_wall"): vol.All(_number, vol.Range(min=0, max=1)),
        vol.Optional("reflectivity_ris"): vol.All(_number, vol.Range(min=0, max=1)),
    },
    extra=vol.PREVENT_EXTRA,
)

USER_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_POSITION, default=list(DEFAULT_DEVICE)): _vec3,
        vol.Optional(CONF_AZIMUTH, default=DEFAULT_AZIMUTH_DEG): vol.All(
            _number, vol.Range(min=-180, max=180)
        ),
        vol.Optional(CONF_POLAR, default=DEFAULT_POLAR_DEG): vol.All(
            _number, vol.Range(min=0, max=90)
        ),
        vol.Optional(CONF_BODY_OFFSET, default=list(DEFAULT_BODY_OFFSET)): vol.Any(
            None, _vec2
        ),
    },
    extra=vol.PREVENT_EXTRA,
)

BLOCKER_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_BASE): _vec3,
        vol.Optional(CONF_RADIUS, default=DEFAULT_BLOCKER_RADIUS): _positive,
        vol.Optional(CONF_HEIGHT, default=DEFAULT_BLOCKER_HEIGHT): _positive,
    },
    extra=vol.PREVENT_EXTRA,
)


def _resolve_elements(conf: dict) -> dict:
    """Derive rows or cols from an element count."""
    elements = conf.pop(CONF_ELEMENTS, None)
    rows, cols = conf.get(CONF_ROWS), conf.get(CONF_COLS)
    if elements is None:
        conf.setdefault(CONF_ROWS, DEFAULT_MIRROR_ROWS)
        conf.setdefault(CONF_COLS, DEFAULT_MIRROR_COLS)
        return conf
    if rows is not None and cols is not None:
        if rows * cols != elements:
            raise vol.Invalid(
                f"rows x cols = {rows * cols} does not match elements = {elements}",
                path=[CONF_ELEMENTS],
            )
        return conf
    if cols is not None:
        fixed, derived = cols, CONF_ROWS
    elif rows is not None or conf[CONF_GROW] == GROW_COLS:
        fixed, derived = rows or DEFAULT_MIRROR_ROWS, CONF_COLS
        conf[CONF_ROWS] = fixed
    else:
        fixed, derived = DEFAULT_MIRROR_COLS, CONF_ROWS
        conf[CONF_COLS] = fixed
    if elements % fixed:
        raise vol.Invalid(
            f"{elements} elements cannot be laid out with {fixed} fixed",
            path=[CONF_ELEMENTS],
        )
    conf[derived] = elements // fixed
    return conf


MIRROR_SCHEMA = vol.All(
    vol.Schema(
        {
            vol.Optional(CONF_ROWS): _count,
            vol.Optional(CONF_COLS): _count,
            vol.Optional(CONF_ELEMENTS): _count,
            vol.Optional(CONF_ELEMENT_SIDE, default=DEFAULT_ELEMENT_SIDE): _positive,
            vol.Optional(CONF_ORIGIN, default=list(DEFAULT_MIRROR_ORIGIN)): _vec3,
            vol.Optional(CONF_PLANE, default=PLANE_YZ): vol.In((PLANE_YZ, PLANE_XZ)),
            vol.Optional(CONF_ROLL, default=0.0): vol.All(
                _number, vol.Range(min=-90, max=90)
            ),
            vol.Optional(CONF_YAW, default=0.0): vol.All(
                _number, vol.Range(min=-90, max=90)
            ),
            vol.Optional(CONF_GROW, default=GROW_COLS): vol.In((GROW_COLS, GROW_ROWS)),
        },
        extra=vol.PREVENT_EXTRA,
    ),
    _resolve_elements,
)

WALL_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_ROWS, default=DEFAULT_MIRROR_ROWS): _count,
        vol.Optional(CONF_COLS, default=DEFAULT_MIRROR_COLS): _count,
        vol.Optional(CONF_ELEMENT_SIDE, default=DEFAULT_ELEMENT_SIDE): _positive,
        vol.Optional(CONF_ORIGIN, default=list(DEFAULT_WALL_ORIGIN)): _vec3,
        vol.Optional(CONF_PLANE, default=PLANE_XZ): vol.In((PLANE_YZ, PLANE_XZ)),
        vol.Optional(CONF_NORMAL, default=[0.0, 1.0, 0.0]): _vec3,
    },
    extra=vol.PREVENT_EXTRA,
)

SCENE_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_ROOM, default=list(DEFAULT_ROOM)): _vec3,
        vol.Optional(CONF_AP, default=list(DEFAULT_AP)): _vec3,
        vol.Optional(CONF_USERS, default=[{}]): vol.All(
            [USER_SCHEMA], vol.Length(min=1)
        ),
        vol.Optional(CONF_BLOCKERS, default=[]): [BLOCKER_SCHEMA],
        vol.Optional(CONF_MIRROR_ARRAY, default={}): MIRROR_SCHEMA,
        vol.Optional(CONF_WALL, default={}): WALL_SCHEMA,
    },
    extra=vol.PREVENT_EXTRA,
)

LINK_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_LOS_MODE, default=LOS_AUTO): vol.In(LOS_MODES),
        vol.Optional(CONF_ZETA, default=DEFAULT_ZETA): vol.All(
            _number, vol.Range(min=0.5, max=1, min_included=False)
        ),
        vol.Optional(CONF_NUM_USERS): _count,
        vol.Optional(CONF_DC_BIAS, default=DEFAULT_DC_BIAS): vol.All(
            _number, vol.Range(min=0)
        ),
    },
    extra=vol.PREVENT_EXTRA,
)


def _check_sweep(conf: dict) -> dict:
    if CONF_VALUES in conf:
        if any(key in conf for key in (CONF_START, CONF_STOP, CONF_STEPS)):
            raise vol.Invalid("give either values or start/stop/steps", path=[CONF_VALUES])
        return conf
    missing = [key for key in (CONF_START, CONF_STOP, CONF_STEPS) if key not in conf]
    if missing:
        raise vol.Invalid(f"missing {', '.join(missing)}", path=[missing[0]])
    if conf[CONF_STOP] < conf[CONF_START]:
        raise vol.Invalid("stop must not be below start", path=[CONF_STOP])
    return conf


SWEEP_SCHEMA = vol.All(
    vol.Schema(
        {
            vol.Required(CONF_VARIABLE): vol.In(SWEEP_VARIABLES),
            vol.Optional(CONF_START): _number,
            vol.Optional(CONF_STOP): _number,
            vol.Optional(CONF_STEPS): _count,
            vol.Optional(CONF_VALUES): vol.All([_number], vol.Length(min=1)),
        },
        extra=vol.PREVENT_EXTRA,
    ),
    _check_sweep,
)

MONTE_CARLO_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_TRIALS, default=DEFAULT_TRIALS): _count,
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(
            vol.Coerce(int), vol.Range(min=0)
        ),
        vol.Optional(CONF_SAMPLE_ORIENTATION, default=True): bool,
        vol.Optional(CONF_RANDOM_BLOCKERS, default=DEFAULT_RANDOM_BLOCKERS): vol.All(
            vol.Coerce(int), vol.Range(min=0)
        ),
    },
    extra=vol.PREVENT_EXTRA,
)

OPTIMIZER_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_AGENTS, default=DEFAULT_AGENTS): _count,
        vol.Optional(CONF_ITERATIONS, default=DEFAULT_ITERATIONS): _count,
        vol.Optional(CONF_A, default=DEFAULT_A): _positive,
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(
            vol.Coerce(int), vol.Range(min=0)
        ),
    },
    extra=vol.PREVENT_EXTRA,
)

ORACLE_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_ANGLE_POINTS, default=DEFAULT_ANGLE_POINTS): _count,
        vol.Optional(CONF_INDEX_POINTS, default=DEFAULT_INDEX_POINTS): _count,
    },
    extra=vol.PREVENT_EXTRA,
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_KIND, default=KIND_RATE_P0): vol.In(SCENARIO_KINDS),
        vol.Optional(CONF_PARAMS, default={}): PARAMS_SCHEMA,
        vol.Optional(CONF_SCENE, default={}): SCENE_SCHEMA,
        vol.Optional(CONF_LINK, default={}): LINK_SCHEMA,
        vol.Optional(CONF_SWEEP): vol.Any(None, SWEEP_SCHEMA),
        vol.Optional(CONF_MONTE_CARLO, default={}): MONTE_CARLO_SCHEMA,
        vol.Optional(CONF_OPTIMIZER, default={}): OPTIMIZER_SCHEMA,
        vol.Optional(CONF_ORACLE, default={}): ORACLE_SCHEMA,
        vol.Optional(CONF_OUTPUT, default=DEFAULT_OUTPUT): str,
    },
    extra=vol.PREVENT_EXTRA,
)


@dataclass(frozen=True)
class SweepConfig:
    variable: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class MonteCarloConfig:
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    sample_orientation: bool = True
    random_blockers: int = DEFAULT_RANDOM_BLOCKERS


@dataclass(frozen=True)
class OptimizerConfig:
    agents: int = DEFAULT_AGENTS
    iterations: int = DEFAULT_ITERATIONS
    a: float = DEFAULT_A
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario: physics, scene, sweep and run settings.

    ``param_overrides`` keeps the params section in file units so sweep points
    can be rebuilt from it.
    """

    kind: str = KIND_RATE_P0
    params: SystemParams = field(default_factory=SystemParams)
    param_overrides: dict[str, float] = field(default_factory=dict)
    scene: Scene = field(default_factory=Scene)
    grow: str = GROW_COLS
    los_mode: str = LOS_AUTO
    noma: NomaConfig = field(default_factory=lambda: NomaConfig(num_users=1))
    sweep: Optional[SweepConfig] = None
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    angle_points: int = DEFAULT_ANGLE_POINTS
    index_points: int = DEFAULT_INDEX_POINTS
    output: Path = Path(DEFAULT_OUTPUT)
    source: Optional[Path] = None

    def sweep_points(self) -> list[Optional[float]]:
        if self.sweep is None:
            return [None]
        return list(self.sweep.values)

    def at(self, value: Optional[float]) -> ScenarioConfig:
        """The configuration of one sweep point."""
        if self.sweep is None or value is None:
            return self
        variable = self.sweep.variable
        if variable == CONF_ELEMENTS:
            array = self.scene.mirror_array.with_elements(int(round(value)), self.grow)
            return replace(self, scene=self.scene.with_mirror_array(array))
        if variable == CONF_ZETA:
            noma = replace(self.noma, zeta=value, power_ratios=None)
            return replace(self, noma=noma)
        overrides = {**self.param_overrides, variable: value}
        return replace(self, params=build_params(overrides), param_overrides=overrides)

    def resolution(self, names: list[str]) -> list[int]:
        """Grid counts for the named search dimensions."""
        return [
            self.index_points if name.startswith(DIM_ETA_C) else self.angle_points
            for name in names
        ]

    def with_overrides(
        self,
        seed: Optional[int] = None,
        trials: Optional[int] = None,
        output: Optional[Union[str, Path]] = None,
    ) -> ScenarioConfig:
        """Apply command-line overrides; ``seed`` sets both random streams."""
        cfg = self
        if seed is not None:
            cfg = replace(
                cfg,
                monte_carlo=replace(cfg.monte_carlo, seed=seed),
                optimizer=replace(cfg.optimizer, seed=seed),
            )
        if trials is not None:
            if trials < 1:
                raise ConfigValidationError("trials must be at least 1", (CONF_TRIALS,))
            cfg = replace(cfg, monte_carlo=replace(cfg.monte_carlo, trials=trials))
        if output is not None:
            cfg = replace(cfg, output=_output_path(str(output)))
        return cfg


def build_params(overrides: dict[str, Any]) -> SystemParams:
    values = {}
    for key, value in overrides.items():
        if key in ANGLE_PARAMS:
            values[ANGLE_PARAMS[key]] = math.radians(value)
        else:
            values[key] = value
    return SystemParams(**values)


def _output_path(output: str) -> Path:
    directory = os.environ.get(ENV_OUTPUT_DIR)
    if directory:
        return Path(directory) / Path(output).name
    return Path(output)


def _build_scene(conf: dict) -> Scene:
    users = [
        UserState(
            device_pos=user[CONF_POSITION],
            azimuth=math.radians(user[CONF_AZIMUTH]),
            polar=math.radians(user[CONF_POLAR]),
            body_offset=user[CONF_BODY_OFFSET],
        )
        for user in conf[CONF_USERS]
    ]
    blockers = [
        CylinderBlocker(b[CONF_BASE], b[CONF_RADIUS], b[CONF_HEIGHT])
        for b in conf[CONF_BLOCKERS]
    ]
    mirror = conf[CONF_MIRROR_ARRAY]
    wall = conf[CONF_WALL]
    return Scene(
        ap_pos=conf[CONF_AP],
        users=tuple(users),
        blockers=tuple(blockers),
        mirror_array=MirrorArray(
            rows=mirror[CONF_ROWS],
            cols=mirror[CONF_COLS],
            element_side=mirror[CONF_ELEMENT_SIDE],
            origin=mirror[CONF_ORIGIN],
            plane=mirror[CONF_PLANE],
            roll=math.radians(mirror[CONF_ROLL]),
            yaw=math.radians(mirror[CONF_YAW]),
        ),
        wall_panel=WallPanel(
            rows=wall[CONF_ROWS],
            cols=wall[CONF_COLS],
            patch_side=wall[CONF_ELEMENT_SIDE],
            origin=wall[CONF_ORIGIN],
            plane=wall[CONF_PLANE],
            normal=wall[CONF_NORMAL],
        ),
        room=conf[CONF_ROOM],
    )


def _sweep_values(conf: dict) -> tuple[float, ...]:
    if CONF_VALUES in conf:
        return tuple(conf[CONF_VALUES])
    return tuple(
        float(v) for v in np.linspace(conf[CONF_START], conf[CONF_STOP], conf[CONF_STEPS])
    )


def validate_config(raw: Optional[dict], source: Optional[Path] = None) -> ScenarioConfig:
    """Validate a parsed scenario mapping and build the domain objects."""
    try:
        conf = CONFIG_SCHEMA(raw or {})
    except vol.MultipleInvalid as ex:
        raise ConfigValidationError(str(ex), tuple(ex.path)) from ex

    section = CONF_PARAMS
    try:
        params = build_params(conf[CONF_PARAMS])
        section = CONF_SCENE
        scene = _build_scene(conf[CONF_SCENE])
        section = CONF_LINK
        link = conf[CONF_LINK]
        num_users = link.get(CONF_NUM_USERS, len(scene.users))
        if conf[CONF_KIND] == KIND_NOMA_MULTIUSER and num_users != len(scene.users):
            raise ConfigValidationError(
                f"link.num_users is {num_users} but the scene has "
                f"{len(scene.users)} users",
                (CONF_LINK, CONF_NUM_USERS),
            )
        noma = NomaConfig(
            zeta=link[CONF_ZETA], num_users=num_users, dc_bias=link[CONF_DC_BIAS]
        )
        sweep = None
        section = CONF_SWEEP
        if conf.get(CONF_SWEEP):
            if conf[CONF_KIND] == KIND_CONVERGENCE_TRACE:
                raise ConfigValidationError(
                    "convergence_trace does not take a sweep", (CONF_SWEEP,)
                )
            sweep = SweepConfig(
                conf[CONF_SWEEP][CONF_VARIABLE], _sweep_values(conf[CONF_SWEEP])
            )
        mc = conf[CONF_MONTE_CARLO]
        opt = conf[CONF_OPTIMIZER]
        cfg = ScenarioConfig(
            kind=conf[CONF_KIND],
            params=params,
            param_overrides=dict(conf[CONF_PARAMS]),
            scene=scene,
            grow=conf[CONF_SCENE][CONF_MIRROR_ARRAY][CONF_GROW],
            los_mode=link[CONF_LOS_MODE],
            noma=noma,
            sweep=sweep,
            monte_carlo=MonteCarloConfig(
                trials=mc[CONF_TRIALS],
                seed=mc[CONF_SEED],
                sample_orientation=mc[CONF_SAMPLE_ORIENTATION],
                random_blockers=mc[CONF_RANDOM_BLOCKERS],
            ),
            optimizer=OptimizerConfig(
                agents=opt[CONF_AGENTS],
                iterations=opt[CONF_ITERATIONS],
                a=opt[CONF_A],
                seed=opt[CONF_SEED],
            ),
            angle_points=conf[CONF_ORACLE][CONF_ANGLE_POINTS],
            index_points=conf[CONF_ORACLE][CONF_INDEX_POINTS],
            output=_output_path(conf[CONF_OUTPUT]),
            source=source,
        )
        # Every sweep point must describe a valid system too.
        for value in cfg.sweep_points():
            cfg.at(value)
    except ConfigValidationError:
        raise
    except RisVlcError as ex:
        raise ConfigValidationError(f"{section}: {ex}", (section,)) from ex
    return cfg


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    """Read and validate a YAML scenario file; an empty file means all defaults."""
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        try:
            raw = yaml.safe_load(handle)
        except yaml.YAMLError as ex:
            raise ConfigValidationError(f"{path}: not valid YAML: {ex}") from ex
    if raw is not None and not isinstance(raw, dict):
        raise ConfigValidationError(f"{path}: top level must be a mapping")
    _LOGGER.debug("Loaded scenario file %s", path)
    return validate_config(raw, source=path)
