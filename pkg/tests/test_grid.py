import math

import numpy as np
import pytest
from scipy.constants import hbar

from tunnelkit.grid.fft import FFTBackend, initialize_fft_backend
from tunnelkit.grid.io import (
    density_slice, export_density, load_field, plot_plane, save_field, write_density_csv
)
from tunnelkit.grid.models import FieldState, Grid, Region, apply_kinetic_half_step, norm_squared
from tunnelkit.units.models import MILLISECOND, RB87
from tunnelkit.utils.errors import EmptyRegionError
from tunnelkit.utils.helpers import read_csv


def gaussian(grid, width, y0=0.0, k=0.0):
    y = grid.mesh['y']
    values = np.exp(-(y - y0) ** 2 / (2 * width ** 2) + 1j * k * y)
    for axis in grid.axes:
        if axis != 'y':
            values = values * np.exp(-grid.mesh[axis] ** 2 / (2 * width ** 2))
    return FieldState(grid, np.array(np.broadcast_to(values, grid.shape)))


def test_grid_geometry():
    grid = Grid((64, 32), (80e-6, 40e-6), (10e-6, 0.0))
    assert grid.dims == 2
    assert grid.axes == ('y', 'z')
    assert grid.spacing == pytest.approx((1.25e-6, 1.25e-6))
    y = grid.coordinates('y')
    assert y[32] == pytest.approx(10e-6)
    assert y[0] == pytest.approx(-30e-6)
    assert grid.coordinates('x').tolist() == [0.0]
    assert grid.mesh['x'].shape == (1, 1)
    assert grid.k_squared.shape == grid.shape


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((4,), (1e-6,))
    with pytest.raises(ValueError):
        Grid((16, 16, 16, 16), (1e-6,) * 4)
    with pytest.raises(ValueError):
        Grid((16, 16), (1e-6, -1e-6))


def test_uniform_field_norm():
    grid = Grid((16, 16), (4e-6, 2e-6))
    field = FieldState(grid, np.full(grid.shape, 3.0 + 4.0j))
    assert norm_squared(field) == pytest.approx(25.0 * 8e-12, rel=1e-12)


def test_norm_is_additive_over_disjoint_regions():
    grid = Grid((64, 32), (40e-6, 20e-6))
    field = gaussian(grid, 5e-6, y0=2e-6)
    total = norm_squared(field)
    left = norm_squared(field, Region.below('y', 1e-6))
    right = norm_squared(field, Region.above('y', 1e-6))
    assert left + right == pytest.approx(total, rel=1e-12)
    inner = norm_squared(field, Region.box(y=(-5e-6, 5e-6), z=(-5e-6, 5e-6)))
    assert inner <= norm_squared(field, Region.box(y=(-8e-6, 8e-6), z=(-8e-6, 8e-6))) <= total
    assert norm_squared(field, Region.full()) == total


def test_empty_region():
    grid = Grid((16,), (10e-6,))
    with pytest.raises(EmptyRegionError):
        Region.above('y', 1.0).mask(grid)


def test_field_validation():
    grid = Grid((16,), (10e-6,))
    with pytest.raises(ValueError):
        FieldState(grid, np.zeros(8))
    with pytest.raises(ValueError):
        FieldState(grid, np.full(16, np.nan))


def test_fft_round_trip():
    backend = FFTBackend(threads=1)
    rng = np.random.default_rng(0)
    values = rng.normal(size=(32, 16)) + 1j * rng.normal(size=(32, 16))
    np.testing.assert_allclose(backend.inverse(backend.forward(values)), values, rtol=1e-12, atol=1e-12)


def test_unknown_backend_falls_back_to_scipy():
    assert initialize_fft_backend('cufft', threads=1).name == 'scipy'


def test_kinetic_step_preserves_plane_wave_modulus():
    grid = Grid((128,), (50e-6,))
    k = grid.wavenumbers('y')[5]
    field = FieldState(grid, np.exp(1j * k * grid.coordinates('y')))
    advanced = apply_kinetic_half_step(field, 0.1, backend=FFTBackend(1))
    np.testing.assert_allclose(np.abs(advanced.values), 1.0, rtol=1e-12)
    assert advanced.time == pytest.approx(0.05)


def test_kinetic_step_zero_dt_is_identity():
    grid = Grid((64,), (20e-6,))
    field = gaussian(grid, 2e-6)
    same = apply_kinetic_half_step(field, 0.0, backend=FFTBackend(1))
    np.testing.assert_allclose(same.values, field.values, rtol=1e-12, atol=1e-14)


def test_kinetic_step_norm_drift():
    grid = Grid((256,), (60e-6,))
    field = gaussian(grid, 2e-6, k=1e6)
    before = norm_squared(field)
    backend = FFTBackend(1)
    for _ in range(20):
        after_step = apply_kinetic_half_step(field, 0.05, backend=backend)
        assert norm_squared(after_step) == pytest.approx(norm_squared(field), rel=1e-12)
        field = after_step
    assert norm_squared(field) == pytest.approx(before, rel=1e-11)


def test_free_gaussian_dispersion():
    grid = Grid((1024,), (200e-6,))
    sigma = 2e-6
    field = gaussian(grid, sigma)
    backend = FFTBackend(1)
    dt = 0.2
    for _ in range(50):
        field = apply_kinetic_half_step(field, dt, backend=backend)
    # 50 half steps of 0.2 ms
    t = 50 * 0.5 * dt * MILLISECOND
    y = grid.coordinates('y')
    density = field.density
    width2 = np.sum(density * y ** 2) / np.sum(density)
    expected = 0.5 * sigma ** 2 * (1 + (hbar * t / (RB87.mass * sigma ** 2)) ** 2)
    assert width2 == pytest.approx(expected, rel=1e-3)


def test_stable_time_step():
    grid = Grid((256,), (80e-6,))
    dx = 80e-6 / 256
    assert grid.stable_time_step(RB87.mass) == pytest.approx(0.5 * RB87.mass * dx ** 2 / (math.pi * hbar) * 1e3)


def test_max_kinetic_energy():
    grid = Grid((256, 128), (80e-6, 60e-6))
    assert grid.max_kinetic_energy('y', RB87.mass) == pytest.approx(282.0, rel=1e-3)
    finer = Grid((320, 128), (32e-6, 60e-6))
    ratio = finer.max_kinetic_energy('y', RB87.mass) / grid.max_kinetic_energy('y', RB87.mass)
    assert ratio == pytest.approx((0.3125 / 0.1) ** 2)
    with pytest.raises(ValueError):
        grid.max_kinetic_energy('x', RB87.mass)


def test_field_save_and_load(tmp_path):
    grid = Grid((16, 8), (8e-6, 4e-6), (1e-6, 0.0))
    field = gaussian(grid, 1e-6)
    field.time, field.barrier_height = 12.5, 290.0
    path = save_field(field, str(tmp_path / 'snap'))
    assert path.endswith('.npz')
    loaded = load_field(path)
    assert loaded.grid == grid
    np.testing.assert_array_equal(loaded.values, field.values)
    assert (loaded.time, loaded.barrier_height) == (12.5, 290.0)


def test_density_slice_and_csv(tmp_path):
    grid = Grid((8, 16, 12), (8e-6, 16e-6, 12e-6))
    field = gaussian(grid, 2e-6)
    sliced = density_slice(field, {'x': 0.0})
    assert set(sliced) == {'y', 'z', 'density'}
    assert sliced['density'].shape == (16, 12)
    with pytest.raises(ValueError):
        density_slice(field)
    with pytest.raises(ValueError):
        density_slice(field, {'w': 0.0})

    path = write_density_csv(field, str(tmp_path / 'slice.csv'), {'x': 0.0})
    columns = read_csv(path)
    assert list(columns) == ['y_um', 'z_um', 'density']
    assert len(columns['density']) == 16 * 12
    assert max(columns['density']) == pytest.approx(float(sliced['density'].max()))


def test_export_density_of_saved_field(tmp_path):
    grid = Grid((8, 16, 12), (8e-6, 16e-6, 12e-6))
    path = save_field(gaussian(grid, 2e-6), str(tmp_path / 'snap'))
    csv_path = export_density(path)
    assert csv_path == str(tmp_path / 'snap_density.csv')
    columns = read_csv(csv_path)
    assert list(columns) == ['y_um', 'z_um', 'density']
    assert len(columns['density']) == 16 * 12
    assert plot_plane(grid) == {'x': 0.0}
    assert plot_plane(Grid((16, 12), (16e-6, 12e-6))) is None
