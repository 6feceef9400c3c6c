"""
Shared fixtures and the --runslow switch
"""
import math

import pytest

from tunnelkit.grid.fft import FFTBackend
from tunnelkit.grid.models import Grid
from tunnelkit.solver.schedule import AbsorberConfig, SolverConfig
from tunnelkit.trap.models import HarmonicTrap, TrapConfig
from tunnelkit.units.models import RB87_MASS_AMU, Species


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run slow simulations')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def deep_trap():
    return TrapConfig(barrier_height=330.0)


@pytest.fixture
def ideal_species():
    """Rb mass without interactions or loss"""
    return Species.from_user_units(RB87_MASS_AMU, 0.0, 0.0, name='ideal')


@pytest.fixture
def cigar_trap():
    """Tight transverse confinement with a weak y axis for 1D runs"""
    return HarmonicTrap(2 * math.pi * 500.0, 2 * math.pi * 20.0, 2 * math.pi * 500.0)


@pytest.fixture
def line_grid():
    return Grid((512,), (100e-6,))


@pytest.fixture
def backend():
    return FFTBackend(threads=1)


@pytest.fixture
def no_absorber():
    return AbsorberConfig(enabled=False)


@pytest.fixture
def fast_solver_config():
    return SolverConfig(dt=0.001, dt_imag=0.01, max_steps=50000, snapshot_interval=0.1,
                        duration=1.0, tolerance=1e-10, check_interval=10)
