import math

import numpy as np
import pytest

from tunnelkit.trap.models import (
    HarmonicTrap, TrapConfig, barrier_acceleration, barrier_potential, confining_height, potential
)
from tunnelkit.trap.saddle import PlaneCut, find_geometry
from tunnelkit.units.models import MICROMETER, NANOKELVIN
from tunnelkit.utils.errors import NonConfiningTrapError


def test_potential_vanishes_at_origin_without_barrier():
    assert potential(TrapConfig(barrier_height=0.0), (0.0, 0.0, 0.0)) == 0.0


def test_barrier_peak_at_centre():
    cfg = TrapConfig(barrier_height=300.0)
    assert potential(cfg, (0.0, cfg.barrier_center, 0.0)) == pytest.approx(300.0, rel=1e-14)
    assert barrier_potential(cfg, (0.0, cfg.barrier_center, 0.0)) == pytest.approx(300.0, rel=1e-14)


def test_barrier_off_centre_at_rayleigh_range():
    cfg = TrapConfig(barrier_height=300.0)
    z_r = cfg.rayleigh_range
    assert barrier_potential(cfg, (0.0, 0.0, z_r)) == pytest.approx(300.0 / math.sqrt(2), rel=1e-12)
    assert cfg.waist_at(z_r) == pytest.approx(cfg.barrier_waist * math.sqrt(2), rel=1e-12)


def test_full_beam_exponent_halves_amplitude():
    cfg = TrapConfig(barrier_height=300.0, sheet_exponent=2)
    assert barrier_potential(cfg, (0.0, 0.0, cfg.rayleigh_range)) == pytest.approx(150.0, rel=1e-12)


def test_mirror_symmetry_is_exact():
    cfg = TrapConfig(barrier_height=290.0)
    rng = np.random.default_rng(3)
    for x, y, z in rng.uniform(-20e-6, 20e-6, size=(50, 3)):
        assert cfg.evaluate(x, y, z) == cfg.evaluate(-x, y, -z)


def test_barrier_acceleration_at_330():
    a_b, a_bar = barrier_acceleration(TrapConfig(barrier_height=330.0))
    assert a_b == pytest.approx(21.06, rel=2e-3)
    assert a_bar == pytest.approx(6.005, rel=2e-3)
    assert a_bar == pytest.approx(8.4 * a_b / (8.4 + a_b), rel=1e-14)


def test_reduced_acceleration_limits():
    cfg = TrapConfig()
    # a_b = g_eff exactly when the sheet slope is twice gravity
    _, a_bar = barrier_acceleration(cfg.with_barrier(2 * confining_height(cfg)))
    assert a_bar == pytest.approx(cfg.g_eff / 2, rel=1e-12)
    _, a_bar = barrier_acceleration(cfg.with_barrier(1e8))
    assert a_bar == pytest.approx(cfg.g_eff, rel=1e-5)


def test_barrier_acceleration_matches_finite_difference():
    cfg = TrapConfig(barrier_height=330.0)
    a_b, _ = barrier_acceleration(cfg)
    y = cfg.barrier_center + cfg.barrier_waist / 2
    h = 2e-11
    slope = (barrier_potential(cfg, (0.0, y + h, 0.0)) - barrier_potential(cfg, (0.0, y - h, 0.0))) / (2 * h)
    assert -slope * NANOKELVIN / cfg.mass == pytest.approx(a_b + cfg.g_eff, rel=1e-9)


def test_non_confining_barrier():
    cfg = TrapConfig()
    with pytest.raises(NonConfiningTrapError):
        barrier_acceleration(cfg.with_barrier(0.9 * confining_height(cfg)))
    with pytest.raises(NonConfiningTrapError):
        find_geometry(cfg.with_barrier(0.0))


def test_trap_config_validation():
    with pytest.raises(ValueError):
        TrapConfig(barrier_height=-1.0)
    with pytest.raises(ValueError):
        TrapConfig(sheet_exponent=3)
    with pytest.raises(ValueError):
        TrapConfig(barrier_waist=0.0)


def test_geometry_at_290():
    cfg = TrapConfig(barrier_height=290.0)
    geometry = find_geometry(cfg)
    assert 0 < geometry.trap_depth < 290.0
    assert 70.0 < geometry.trap_depth < 120.0
    # minimum on the trap side of the barrier, saddles off the z axis
    assert geometry.minimum[1] < cfg.barrier_center
    upper, lower = geometry.saddles
    assert upper[1] == lower[1]
    assert upper[2] == -lower[2] and upper[2] > 0
    assert cfg.evaluate(*upper) == pytest.approx(cfg.evaluate(*lower), abs=1e-9)
    assert geometry.saddle_waist == pytest.approx(float(cfg.waist_at(upper[2])))


def test_critical_points_are_stationary():
    cfg = TrapConfig(barrier_height=330.0)
    geometry = find_geometry(cfg)
    cut = PlaneCut(cfg)
    to_cut = lambda p: ((p[1] - cfg.barrier_center) / MICROMETER, p[2] / MICROMETER)
    assert np.linalg.norm(cut.grad(*to_cut(geometry.minimum))) < 1e-5
    saddle = to_cut(geometry.saddles[0])
    assert np.linalg.norm(cut.grad(*saddle)) < 1e-5
    eigenvalues = np.linalg.eigvalsh(cut.hessian(*saddle))
    assert np.count_nonzero(eigenvalues < 0) == 1
    assert np.all(np.linalg.eigvalsh(cut.hessian(*to_cut(geometry.minimum))) > 0)


def test_trap_depth_increases_with_barrier():
    depths = [find_geometry(TrapConfig(barrier_height=h)).trap_depth for h in range(200, 401, 20)]
    assert np.all(np.diff(depths) > 0)


def test_geometry_to_dict_units():
    geometry = find_geometry(TrapConfig(barrier_height=330.0))
    data = geometry.to_dict()
    assert data['trap_depth_nk'] == geometry.trap_depth
    assert data['saddle_waist_um'] == pytest.approx(geometry.saddle_waist / MICROMETER)
    assert len(data['saddles_um']) == 2


def test_harmonic_trap():
    trap = HarmonicTrap(2 * math.pi * 100, 2 * math.pi * 20, 2 * math.pi * 100)
    assert trap.reference_frequency == pytest.approx(2 * math.pi * 20)
    assert trap.escape_cut is None
    y = 5e-6
    expected = 0.5 * trap.mass * trap.omega_y ** 2 * y ** 2 / NANOKELVIN
    assert trap.evaluate(0.0, y, 0.0) == pytest.approx(expected)
    assert np.all(trap.barrier_shape(np.zeros(3), np.ones(3), 0.0) == 0)
