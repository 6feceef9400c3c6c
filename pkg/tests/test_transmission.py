import math

import numpy as np
import pytest

from tunnelkit.trap.models import TrapConfig
from tunnelkit.trap.saddle import find_geometry
from tunnelkit.transmission.models import (
    BarrierProfile1D, attempt_rate, beta_slope, chain_product, converged_log_transmission,
    default_energy_window, escape_rate_curve, gaussian_profile, log_transmission, reflection,
    saddle_profile, slab_matrix, square_profile, transmission, transmission_curve, turning_points,
    wavenumber_scale, wkb_log_transmission
)
from tunnelkit.units.models import MICROMETER
from tunnelkit.utils.errors import FitError


def square_barrier_exact(height, width_um, energy):
    scale = wavenumber_scale()
    if energy < height:
        kappa = math.sqrt(scale * (height - energy))
        return 1.0 / (1.0 + height ** 2 * math.sinh(kappa * width_um) ** 2 / (4 * energy * (height - energy)))
    k = math.sqrt(scale * (energy - height))
    return 1.0 / (1.0 + height ** 2 * math.sin(k * width_um) ** 2 / (4 * energy * (energy - height)))


def test_free_space_is_transparent():
    y = np.linspace(-2e-6, 2e-6, 101)
    profile = BarrierProfile1D(y, np.zeros_like(y))
    for energy in (0.5, 10.0, 300.0):
        assert transmission(profile, energy) == pytest.approx(1.0, abs=1e-12)


def test_square_barrier_closed_form():
    profile = square_profile(100.0, 0.5 * MICROMETER)
    for energy in np.linspace(1.0, 200.0, 50):
        assert transmission(profile, energy) == pytest.approx(square_barrier_exact(100.0, 0.5, energy), abs=1e-12)


def test_thick_square_barrier_does_not_underflow():
    height, energy, width = 1000.0, 100.0, 50.0
    kappa = math.sqrt(wavenumber_scale() * (height - energy))
    expected = math.log(16 * energy * (height - energy) / height ** 2) - 2 * kappa * width
    assert expected < -1000
    assert log_transmission(square_profile(height, width * MICROMETER), energy) == pytest.approx(expected, rel=1e-9)
    assert transmission(square_profile(height, width * MICROMETER), energy) == 0.0


def test_flux_conservation():
    profiles = [square_profile(100.0, 0.5 * MICROMETER), gaussian_profile(100.0, 1.2 * MICROMETER, points=2001)]
    for profile in profiles:
        for energy in (5.0, 50.0, 95.0, 150.0):
            assert transmission(profile, energy) + reflection(profile, energy) == pytest.approx(1.0, abs=1e-10)


def test_chain_product_matches_direct_product():
    rng = np.random.default_rng(7)
    mats = [slab_matrix(k2, 0.2) for k2 in rng.uniform(-4.0, 4.0, size=25)]
    matrix, log_scale = chain_product(np.array(mats))
    direct = np.linalg.multi_dot(mats[::-1])
    np.testing.assert_allclose(matrix * math.exp(log_scale), direct, rtol=1e-9, atol=1e-11 * np.abs(direct).max())


def test_slab_refinement_is_second_order():
    coarse = gaussian_profile(100.0, 1.0 * MICROMETER, points=200)
    values = [log_transmission(coarse.resample(n), 50.0) for n in (200, 400, 800)]
    order = math.log2(abs(values[0] - values[1]) / abs(values[1] - values[2]))
    assert order >= 1.9


def test_converged_log_transmission():
    profile = gaussian_profile(100.0, 1.0 * MICROMETER, points=500)
    value, slabs = converged_log_transmission(profile, 50.0)
    assert slabs > 500
    reference = log_transmission(profile.resample(64000), 50.0)
    assert value == pytest.approx(reference, abs=1e-5)


def test_wkb_agrees_deep_under_the_barrier():
    profile = gaussian_profile(100.0, 2.0 * MICROMETER, points=4001)
    checked = 0
    for energy in np.linspace(10.0, 60.0, 6):
        exact = log_transmission(profile, energy)
        if exact < -5:
            checked += 1
            assert wkb_log_transmission(profile, energy) == pytest.approx(exact, rel=0.1)
    assert checked >= 4


def test_wkb_on_square_barrier():
    profile = square_profile(100.0, 0.5 * MICROMETER)
    kappa = math.sqrt(wavenumber_scale() * 60.0)
    assert wkb_log_transmission(profile, 40.0) == pytest.approx(-2 * kappa * 0.5, rel=1e-8)
    left, right = turning_points(profile, 40.0)
    assert left == pytest.approx(0.0, abs=1e-12)
    assert right == pytest.approx(0.5 * MICROMETER, rel=1e-9)


@pytest.mark.parametrize('height', [240.0, 290.0, 330.0])
def test_beta_for_saddle_barrier(height):
    cfg = TrapConfig(barrier_height=height)
    geometry = find_geometry(cfg)
    profile = saddle_profile(cfg, geometry)
    beta = beta_slope(profile, default_energy_window(geometry.trap_depth))
    assert 0.15 <= beta <= 0.3


@pytest.mark.parametrize('height', [240.0, 290.0, 330.0])
def test_saddle_profile_defaults_to_waist(height):
    cfg = TrapConfig(barrier_height=height)
    geometry = find_geometry(cfg)
    waist = saddle_profile(cfg, geometry)
    fwhm = saddle_profile(cfg, geometry, 'fwhm')
    assert waist.label == 'gaussian-waist'
    window = default_energy_window(geometry.trap_depth)
    assert 0.15 <= beta_slope(fwhm, window) < beta_slope(waist, window) <= 0.3


def test_thicker_barrier_has_steeper_slope():
    thin = gaussian_profile(100.0, 1.0 * MICROMETER, points=2001)
    thick = gaussian_profile(100.0, 2.0 * MICROMETER, points=2001)
    assert beta_slope(thick, (60.0, 90.0)) > beta_slope(thin, (60.0, 90.0)) > 0
    assert beta_slope(thick, (60.0, 90.0), method='wkb') > 0


def test_energy_and_length_scaling():
    # ln T is unchanged when V and E scale by λ and lengths by 1/√λ
    lam = 4.0
    base = gaussian_profile(100.0, 1.0 * MICROMETER, points=1001)
    scaled = gaussian_profile(lam * 100.0, 1.0 * MICROMETER / math.sqrt(lam), points=1001)
    for energy in (20.0, 70.0):
        assert log_transmission(scaled, lam * energy) == pytest.approx(log_transmission(base, energy), rel=1e-9)


def test_width_conventions():
    fwhm = gaussian_profile(100.0, 1.0 * MICROMETER, convention='fwhm', points=2001)
    waist = gaussian_profile(100.0, 1.0 * MICROMETER, convention='waist', points=2001)
    assert waist.width == pytest.approx(1.0 * MICROMETER, rel=1e-3)
    assert fwhm.width == pytest.approx(MICROMETER / math.sqrt(2 * math.log(2)), rel=1e-3)
    assert log_transmission(waist, 50.0) < log_transmission(fwhm, 50.0)
    with pytest.raises(ValueError):
        gaussian_profile(100.0, 1e-6, convention='hwhm')


def test_transmission_curve_and_escape_rate(deep_trap):
    profile = gaussian_profile(100.0, 1.0 * MICROMETER, points=2001)
    energies = np.linspace(40.0, 95.0, 12)
    curve = transmission_curve(profile, energies)
    assert np.all(np.diff(curve.transmission) > 0)
    assert np.all(curve.transmission <= 1.0)
    assert len(curve.to_rows()) == 12
    rates = escape_rate_curve(profile, energies, deep_trap)
    np.testing.assert_allclose(rates, attempt_rate(deep_trap) * curve.transmission, rtol=1e-14)
    assert attempt_rate(deep_trap) == pytest.approx(math.sqrt(86.0 * 43.0))


def test_default_energy_window():
    assert default_energy_window(94.0) == (74.0, 92.0)
    low, high = default_energy_window(10.0)
    assert low == pytest.approx(0.5) and high == 8.0


def test_invalid_requests():
    profile = gaussian_profile(100.0, 1.0 * MICROMETER, points=501)
    with pytest.raises(ValueError):
        log_transmission(profile, 0.0)
    with pytest.raises(ValueError):
        turning_points(profile, 120.0)
    with pytest.raises(FitError):
        beta_slope(profile, (60.0, 90.0), samples=3)
    with pytest.raises(FitError):
        beta_slope(profile, (90.0, 60.0))
    with pytest.raises(ValueError):
        beta_slope(profile, (60.0, 110.0))
    with pytest.raises(ValueError):
        beta_slope(profile, (60.0, 90.0), method='exact')
    raised = BarrierProfile1D(profile.y, profile.potential + 10.0)
    with pytest.raises(ValueError):
        log_transmission(raised, 5.0)
    with pytest.raises(ValueError):
        raised.resample(1000)
    with pytest.raises(ValueError):
        BarrierProfile1D(np.array([0.0, 1.0, 3.0]), np.zeros(3))
