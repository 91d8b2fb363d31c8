"""Test the direct, mirror-array and wall channel gains."""
import math

import numpy as np
import pytest

from ris_vlc.channel import (
    concentrator_gain,
    lambertian_index,
    los_gain,
    mirror_nlos_gain,
    mirror_nlos_gains,
    total_gain,
    wall_nlos_gain,
)
from ris_vlc.const import LOS_ALWAYS, LOS_NEVER, PATH_WALL
from ris_vlc.errors import ConfigurationError, ContractViolation, GeometryError
from ris_vlc.lc_optics import LcState
from ris_vlc.system_model import (
    CylinderBlocker,
    MirrorArray,
    Scene,
    SystemParams,
    UserState,
    WallPanel,
)

AP = (2.5, 2.5, 3.0)


def _order(params):
    return -1 / math.log2(math.cos(params.half_power_semiangle))


def _concentrator(params):
    return params.concentrator_ref_index**2 / math.sin(params.fov) ** 2


def _cos_at_device(src, user):
    x, y, z = user.device_pos
    beta, alpha = user.azimuth, user.polar
    return (
        (src[0] - x) * math.cos(beta) * math.sin(alpha)
        + (src[1] - y) * math.sin(beta) * math.sin(alpha)
        + (src[2] - z) * math.cos(alpha)
    ) / math.dist(src, user.device_pos)


def _reflected(params, cell, facing, user, area, rho):
    """One reflecting cell, written out with plain floats."""
    m = _order(params)
    d_ka = math.dist(AP, cell)
    d_uk = math.dist(cell, user.device_pos)
    cos_phi_ka = (AP[2] - cell[2]) / d_ka
    cos_xi_ka = sum(f * (a - c) for f, a, c in zip(facing, AP, cell)) / d_ka
    cos_phi_uk = sum(f * (u - c) for f, u, c in zip(facing, user.device_pos, cell)) / d_uk
    cos_xi_uk = _cos_at_device(cell, user)
    if min(cos_phi_ka, cos_xi_ka, cos_phi_uk, cos_xi_uk) <= 0:
        return 0.0, cos_xi_uk
    if math.acos(cos_xi_uk) > params.fov:
        return 0.0, cos_xi_uk
    gain = (
        rho
        * (m + 1)
        * params.pd_area
        / (2 * math.pi**2 * d_ka**2 * d_uk**2)
        * area
        * cos_phi_ka**m
        * cos_xi_ka
        * cos_phi_uk
        * cos_xi_uk
        * _concentrator(params)
        * params.optical_filter_gain
    )
    return gain, cos_xi_uk


def _mirror_facing(yaw, roll):
    """The side of the element that faces the room is -n(yaw, roll)."""
    return (
        -math.sin(yaw) * math.cos(roll),
        -math.cos(yaw) * math.cos(roll),
        -math.sin(roll),
    )


def _unpolarised(angle, eta):
    cos_a = math.cos(angle)
    root = math.sqrt(eta**2 - math.sin(angle) ** 2)
    r_p = (eta**2 * cos_a - root) / (eta**2 * cos_a + root)
    r_s = (cos_a - root) / (cos_a + root)
    return (r_p**2 + r_s**2) / 2


def _psi(xi, eta_c):
    theta = math.asin(math.sin(xi) / eta_c)
    return (1 - _unpolarised(xi, eta_c)) * (1 - _unpolarised(theta, 1 / eta_c))


def _single_mirror_scene(center, yaw, roll, user, room=(5.0, 5.0, 3.0), ap=AP):
    array = MirrorArray(
        rows=1,
        cols=1,
        element_side=0.1,
        origin=(center[0], center[1] - 0.05, center[2] - 0.05),
    ).with_orientation(roll=roll, yaw=yaw)
    return Scene(ap_pos=ap, users=(user,), mirror_array=array, room=room)


def test_lambertian_index():
    """60 degrees gives the classic order 1."""
    assert lambertian_index(math.radians(60)) == pytest.approx(1.0)
    assert lambertian_index(math.radians(70)) == pytest.approx(
        -1 / math.log2(math.cos(math.radians(70)))
    )
    with pytest.raises(GeometryError):
        lambertian_index(0.0)


def test_concentrator_gain():
    """Gain is f^2 / sin^2(FoV) inside the field of view and zero outside."""
    assert concentrator_gain(1.0, math.pi / 2, 0.3) == pytest.approx(1.0)
    fov = math.radians(85)
    assert concentrator_gain(1.5, fov, math.radians(30)) == pytest.approx(
        2.25 / math.sin(fov) ** 2
    )
    assert concentrator_gain(1.5, fov, math.radians(86)) == 0.0


def test_los_gain_straight_below(params):
    """A flat device right below the AP."""
    user = UserState(device_pos=(2.5, 2.5, 0.85), polar=0.0, body_offset=None)
    scene = Scene(users=(user,))
    dist = 3.0 - 0.85
    expected = (
        (_order(params) + 1) * params.pd_area / (2 * math.pi * dist**2)
        * _concentrator(params)
    )
    assert los_gain(scene, user, params) == pytest.approx(expected, rel=1e-12)


def test_los_gain_direct_evaluation(params):
    """Tilted device off-centre against the written-out formula."""
    user = UserState(
        device_pos=(1.0, 2.0, 0.85),
        azimuth=math.radians(30),
        polar=math.radians(41),
        body_offset=None,
    )
    scene = Scene(users=(user,))
    m = _order(params)
    dist = math.dist(AP, user.device_pos)
    cos_phi = (AP[2] - 0.85) / dist
    expected = (
        (m + 1)
        * params.pd_area
        / (2 * math.pi * dist**2)
        * cos_phi**m
        * _cos_at_device(AP, user)
        * _concentrator(params)
    )
    assert los_gain(scene, user, params) == pytest.approx(expected, rel=1e-12)


def test_los_gain_outside_field_of_view(params):
    """A device turned away from the AP receives nothing directly."""
    user = UserState(azimuth=math.pi, polar=math.pi / 2, body_offset=None)
    assert los_gain(Scene(users=(user,)), user, params) == 0.0


def test_mirror_gain_direct_evaluation(params):
    """One element at (0, 2.5, 1.5) against the written-out reflected gain."""
    user = UserState(device_pos=(2.0, 2.5, 0.85), polar=0.0, body_offset=None)
    scene = _single_mirror_scene((0.0, 2.5, 1.5), yaw=-1.2, roll=0.2, user=user)
    center = tuple(scene.mirror_array.centers[0])
    expected, _ = _reflected(
        params, center, _mirror_facing(-1.2, 0.2), user, 0.01, 0.95
    )
    assert expected > 0
    assert mirror_nlos_gain(scene, user, 0, params) == pytest.approx(
        expected, rel=1e-10
    )


def test_mirror_facing_away_gives_nothing(params):
    """An element turned towards the wall reflects nothing into the room."""
    user = UserState(device_pos=(2.0, 2.5, 0.85), polar=0.0, body_offset=None)
    scene = _single_mirror_scene((0.0, 2.5, 1.5), yaw=0.5, roll=0.2, user=user)
    assert mirror_nlos_gain(scene, user, 0, params) == 0.0


def test_mirror_gain_index_contract(scene, params):
    """Element indices are 0-based and bounded by the element count."""
    with pytest.raises(ContractViolation):
        mirror_nlos_gain(scene, scene.user, 300, params)
    with pytest.raises(ContractViolation):
        mirror_nlos_gain(scene, scene.user, -1, params)


def test_mirror_gain_per_element_matches_array(scene, params):
    """Single-element queries agree with the vectorised array gains."""
    oriented = scene.with_mirror_array(
        scene.mirror_array.with_orientation(roll=0.1, yaw=-1.3)
    )
    gains, _ = mirror_nlos_gains(oriented, oriented.user, params)
    for k in (0, 17, 150, 299):
        assert mirror_nlos_gain(oriented, oriented.user, k, params) == gains[k]


def test_wall_gain_direct_evaluation(params):
    """One wall patch against the written-out reflected gain."""
    user = UserState(device_pos=(2.0, 2.0, 0.85), polar=0.0, body_offset=None)
    wall = WallPanel(rows=1, cols=1, patch_side=0.1, origin=(2.45, 0.0, 1.45))
    scene = Scene(users=(user,), wall_panel=wall)
    center = tuple(wall.centers[0])
    expected, _ = _reflected(params, center, (0.0, 1.0, 0.0), user, 0.01, 0.8)
    assert expected > 0
    assert wall_nlos_gain(scene, user, 0, params) == pytest.approx(expected, rel=1e-10)
    with pytest.raises(ContractViolation):
        wall_nlos_gain(scene, user, 1, params)


def test_wall_gain_without_reflectivity():
    """A perfectly absorbing wall reflects nothing."""
    params = SystemParams(reflectivity_wall=0.0)
    scene = Scene()
    assert wall_nlos_gain(scene, scene.user, 0, params) == 0.0


def test_total_gain_direct_evaluation(scene, params):
    """Default room with an LC receiver, evaluated element by element."""
    yaw, roll, eta_c = -1.3, 0.1, 1.6
    oriented = scene.with_mirror_array(
        scene.mirror_array.with_orientation(roll=roll, yaw=yaw)
    )
    user = oriented.user
    gain = total_gain(oriented, user, params, lc=LcState.from_index(eta_c, params))

    m = _order(params)
    dist = math.dist(AP, user.device_pos)
    cos_xi_los = _cos_at_device(AP, user)
    h_los = (
        (m + 1)
        * params.pd_area
        / (2 * math.pi * dist**2)
        * ((AP[2] - user.device_pos[2]) / dist) ** m
        * cos_xi_los
        * _concentrator(params)
    )
    cells = [
        _reflected(params, tuple(c), _mirror_facing(yaw, roll), user, 0.01, 0.95)
        for c in oriented.mirror_array.centers
    ]
    h_mirrors = sum(g for g, _ in cells)
    strongest = max(range(len(cells)), key=lambda k: cells[k][0])
    xi_los = math.acos(cos_xi_los)
    xi_nlos = math.acos(cells[strongest][1])
    expected = h_los * _psi(xi_los, eta_c) + h_mirrors * _psi(xi_nlos, eta_c)

    assert gain.indicator == 1
    assert gain.h_los == pytest.approx(h_los, rel=1e-10)
    assert gain.h_nlos == pytest.approx(h_mirrors, rel=1e-10)
    assert gain.h_total == pytest.approx(expected, rel=1e-9)

    xi_gain = xi_los if h_los >= h_mirrors else xi_nlos
    factor = math.exp(
        2 * math.pi * eta_c**3 * 12e-12 * params.field_strength
        / (params.wavelength * math.cos(xi_gain))
        * params.lc_thickness
    )
    assert gain.amplification == pytest.approx(factor, rel=1e-12)


def test_total_gain_recomposes_from_paths(scene, params, rng):
    """The composite gain is the sum of the weighted direct and reflected parts."""
    for _ in range(50):
        user = scene.user.with_orientation(
            rng.uniform(-math.pi, math.pi), rng.uniform(0, math.pi / 2)
        )
        array = scene.mirror_array.with_orientation(
            roll=rng.uniform(-math.pi / 2, math.pi / 2),
            yaw=rng.uniform(-math.pi / 2, math.pi / 2),
        )
        current = scene.with_mirror_array(array).with_users([user])
        gain = total_gain(
            current, user, params, lc=LcState.from_index(rng.uniform(1.5, 1.7), params)
        )
        assert gain.h_total >= 0
        assert gain.h_total == pytest.approx(
            gain.indicator * gain.h_los * gain.psi_los
            + float(np.sum(gain.h_nlos_per_mirror)) * gain.psi_nlos,
            rel=1e-12,
            abs=1e-30,
        )


def test_total_gain_blocked_and_unlit(scene, params):
    """No LoS and every element facing the wall leaves no signal."""
    away = scene.with_mirror_array(
        scene.mirror_array.with_orientation(roll=0.0, yaw=math.pi / 2)
    )
    gain = total_gain(
        away, away.user, params, lc=LcState.from_index(1.6, params), los_mode=LOS_NEVER
    )
    assert gain.h_total == 0.0
    assert gain.h_nlos == 0.0


def test_blocked_los_keeps_its_transition(scene, params):
    """A blocked direct path still reports the transition at its real angle."""
    blocked = scene.with_blockers([CylinderBlocker((1.3, 2.5, 0.0), 0.1, 1.8)])
    gain = total_gain(blocked, blocked.user, params, lc=LcState.from_index(1.6, params))
    xi = math.acos(_cos_at_device(AP, blocked.user))
    assert gain.indicator == 0
    assert gain.h_los > 0
    assert gain.psi_los > 0
    assert gain.psi_los == pytest.approx(_psi(xi, 1.6), rel=1e-10)
    assert gain.h_total == pytest.approx(gain.h_nlos * gain.psi_nlos, rel=1e-12)


def test_total_gain_without_mirrors(params):
    """K = 0 with LoS leaves only the direct path through the LC cell."""
    scene = Scene(users=(UserState(body_offset=None),), mirror_array=MirrorArray(cols=0))
    lc = LcState.from_index(1.6, params)
    gain = total_gain(scene, scene.user, params, lc=lc)
    xi = math.acos(_cos_at_device(AP, scene.user))
    assert gain.indicator == 1
    assert gain.h_nlos_per_mirror.size == 0
    assert gain.h_total == pytest.approx(gain.h_los * _psi(xi, 1.6), rel=1e-10)


def test_total_gain_without_lc(scene, params):
    """Without an LC cell both transitions are one and nothing is amplified."""
    gain = total_gain(scene, scene.user, params, los_mode=LOS_ALWAYS)
    assert gain.psi_los == gain.psi_nlos == 1.0
    assert gain.amplification == 1.0
    assert gain.h_total == pytest.approx(gain.h_los + gain.h_nlos)


def test_reflected_gain_is_linear_in_reflectivity(scene, params):
    """Halving the mirror reflectivity halves the reflected gain."""
    half = params.with_overrides(reflectivity_ris=0.475)
    full_gain = total_gain(scene, scene.user, params, los_mode=LOS_NEVER)
    half_gain = total_gain(scene, scene.user, half, los_mode=LOS_NEVER)
    assert full_gain.h_total > 0
    assert half_gain.h_total == pytest.approx(full_gain.h_total / 2, rel=1e-12)


def test_gains_scale_with_distance(params):
    """Doubling every distance at fixed angles: LoS / 4, one reflection / 16."""
    user = UserState(device_pos=(2.0, 2.5, 0.85), polar=0.0, body_offset=None)
    near = _single_mirror_scene((0.0, 2.5, 1.5), yaw=-1.2, roll=0.2, user=user)
    far_user = UserState(device_pos=(4.0, 5.0, 1.7), polar=0.0, body_offset=None)
    far = _single_mirror_scene(
        (0.0, 5.0, 3.0),
        yaw=-1.2,
        roll=0.2,
        user=far_user,
        room=(10.0, 10.0, 6.0),
        ap=(5.0, 5.0, 6.0),
    )
    near_gain = total_gain(near, user, params, los_mode=LOS_ALWAYS)
    far_gain = total_gain(far, far_user, params, los_mode=LOS_ALWAYS)
    assert far_gain.h_los == pytest.approx(near_gain.h_los / 4, rel=1e-9)
    assert far_gain.h_nlos == pytest.approx(near_gain.h_nlos / 16, rel=1e-9)


def test_mirror_array_and_wall_in_mirrored_room(symmetric_scene, params):
    """In an x/y-symmetric room the two surfaces differ only by reflectivity."""
    user = symmetric_scene.user
    ris = total_gain(symmetric_scene, user, params, los_mode=LOS_NEVER)
    wall = total_gain(
        symmetric_scene, user, params, path_set=PATH_WALL, los_mode=LOS_NEVER
    )
    assert wall.h_total > 0
    assert ris.h_total / wall.h_total == pytest.approx(0.95 / 0.8, rel=1e-9)


def test_total_gain_rejects_unknown_modes(scene, params):
    """Path sets and LoS modes are closed sets."""
    with pytest.raises(ConfigurationError):
        total_gain(scene, scene.user, params, path_set="ceiling")
    with pytest.raises(ConfigurationError):
        total_gain(scene, scene.user, params, los_mode="sometimes")
