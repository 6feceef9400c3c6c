"""
Rectangular grids, complex fields and spatial regions
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.constants import hbar

from tunnelkit.grid.fft import FFTBackend, initialize_fft_backend
from tunnelkit.units.models import MILLISECOND, NANOKELVIN, RB87
from tunnelkit.utils.errors import EmptyRegionError

AXES_BY_DIMS = {1: ('y',), 2: ('y', 'z'), 3: ('x', 'y', 'z')}


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid; extents and centers in m

    Reduced-dimensionality grids keep the y axis (and z in 2D); the axes
    they drop sit at coordinate 0.
    """
    points: Tuple[int, ...]
    extents: Tuple[float, ...]
    centers: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, 'points', tuple(int(n) for n in self.points))
        object.__setattr__(self, 'extents', tuple(float(e) for e in self.extents))
        if self.centers is None:
            object.__setattr__(self, 'centers', (0.0,) * len(self.points))
        else:
            object.__setattr__(self, 'centers', tuple(float(c) for c in self.centers))
        if len(self.points) not in AXES_BY_DIMS:
            raise ValueError(f"Grid must have 1, 2 or 3 axes, got {len(self.points)}")
        if not (len(self.points) == len(self.extents) == len(self.centers)):
            raise ValueError("points, extents and centers must have the same length")
        if any(n < 8 for n in self.points):
            raise ValueError(f"Grid needs at least 8 points per axis, got {self.points}")
        if any(e <= 0 for e in self.extents):
            raise ValueError(f"Grid extents must be positive, got {self.extents}")

    @property
    def dims(self) -> int:
        return len(self.points)

    @property
    def axes(self) -> Tuple[str, ...]:
        return AXES_BY_DIMS[self.dims]

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.points

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extents, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def coordinates(self, axis: str) -> np.ndarray:
        """1D coordinates of an axis; 0 for an axis the grid does not carry"""
        if axis not in self.axes:
            return np.zeros(1)
        i = self.axes.index(axis)
        n, d = self.points[i], self.spacing[i]
        return self.centers[i] + (np.arange(n) - n // 2) * d

    def wavenumbers(self, axis: str) -> np.ndarray:
        i = self.axes.index(axis)
        return 2.0 * np.pi * np.fft.fftfreq(self.points[i], d=self.spacing[i])

    def _broadcast(self, values: np.ndarray, axis: str) -> np.ndarray:
        shape = [1] * self.dims
        shape[self.axes.index(axis)] = values.size
        return values.reshape(shape)

    @cached_property
    def mesh(self) -> Dict[str, np.ndarray]:
        """Sparse (broadcastable) coordinates for x, y, z"""
        result = {}
        for axis in ('x', 'y', 'z'):
            if axis in self.axes:
                result[axis] = self._broadcast(self.coordinates(axis), axis)
            else:
                result[axis] = np.zeros([1] * self.dims)
        return result

    @cached_property
    def k_squared(self) -> np.ndarray:
        total = np.zeros(self.shape)
        for axis in self.axes:
            total = total + self._broadcast(self.wavenumbers(axis), axis) ** 2
        return total

    def max_kinetic_energy(self, axis: str, mass: float) -> float:
        """ħ²(π/d)²/2m along one axis in nK; faster motion aliases"""
        d = self.spacing[self.axes.index(axis)]
        return (hbar * np.pi / d) ** 2 / (2.0 * mass) / NANOKELVIN

    def stable_time_step(self, mass: float, margin: float = 0.5) -> float:
        """Largest real-time step in ms allowed by dt < margin·m·dx²/(πħ)"""
        dx = min(self.spacing)
        return margin * mass * dx ** 2 / (np.pi * hbar) / MILLISECOND


@dataclass
class FieldState:
    """Order parameter on a grid, normalised so that ∫|ψ|² dV = N

    values are in atoms^(1/2)/m^(d/2); time in ms; barrier_height in nK.
    """
    grid: Grid
    values: np.ndarray
    time: float = 0.0
    barrier_height: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"Field shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Field contains non-finite values")

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def copy(self) -> 'FieldState':
        return FieldState(self.grid, self.values.copy(), self.time, self.barrier_height)


@dataclass(frozen=True)
class Region:
    """Axis-aligned box; each bound is (axis, lower, upper) with lower <= c < upper"""
    bounds: Tuple[Tuple[str, Optional[float], Optional[float]], ...] = ()

    @classmethod
    def full(cls) -> 'Region':
        return cls()

    @classmethod
    def box(cls, **limits: Tuple[Optional[float], Optional[float]]) -> 'Region':
        return cls(tuple((axis, lo, hi) for axis, (lo, hi) in sorted(limits.items())))

    @classmethod
    def below(cls, axis: str, value: float) -> 'Region':
        return cls(((axis, None, value),))

    @classmethod
    def above(cls, axis: str, value: float) -> 'Region':
        return cls(((axis, value, None),))

    def mask(self, grid: Grid) -> np.ndarray:
        selected = np.ones(grid.shape, dtype=bool)
        for axis, lo, hi in self.bounds:
            coords = grid.mesh[axis]
            if lo is not None:
                selected = selected & (coords >= lo)
            if hi is not None:
                selected = selected & (coords < hi)
        if not selected.any():
            raise EmptyRegionError(f"Region {self.bounds} selects no grid points")
        return selected


def norm_squared(field: FieldState, region: Optional[Region] = None) -> float:
    """∫_region |ψ|² dV (Riemann sum)"""
    density = field.density
    if region is not None and region.bounds:
        density = density[region.mask(field.grid)]
    return float(np.sum(density) * field.grid.cell_volume)


def kinetic_phase(grid: Grid, dt: float, mass: float) -> np.ndarray:
    """exp(-iħk²dt/4m) for a real-time kinetic half step of dt (ms)"""
    return np.exp(-1j * hbar * grid.k_squared * dt * MILLISECOND / (4.0 * mass))


def apply_kinetic_half_step(field: FieldState, dt: float, mass: float = RB87.mass,
                            backend: Optional[FFTBackend] = None) -> FieldState:
    """Free evolution over dt/2, applied exactly in Fourier space"""
    backend = backend or initialize_fft_backend()
    spectrum = backend.forward(field.values) * kinetic_phase(field.grid, dt, mass)
    return FieldState(field.grid, backend.inverse(spectrum), field.time + 0.5 * dt, field.barrier_height)
