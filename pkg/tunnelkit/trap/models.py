"""
Trap potential models

TrapConfig describes the repulsive-sheet trap: separable harmonic
confinement along x and z, a linear tilt from the effective gravity along
+y, and a Gaussian light sheet centred at y0 whose waist diffracts along
z. HarmonicTrap is a plain separable oscillator with the same evaluation
interface, used for validation runs.

Positions are in m, energies in nK.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Tuple

import numpy as np

from tunnelkit.units.models import RB87, NANOKELVIN, Species
from tunnelkit.utils.errors import NonConfiningTrapError

AXES = ('x', 'y', 'z')


@dataclass(frozen=True)
class TrapConfig:
    """Parameters of the repulsive-sheet trap (SI, barrier height in nK)"""
    omega_x: float = 2 * math.pi * 86.0
    omega_z: float = 2 * math.pi * 43.0
    g_eff: float = 8.4
    barrier_height: float = 330.0
    barrier_waist: float = 1.3e-6
    rayleigh_range: float = 8e-6
    flat_halfwidth: float = 50e-6
    barrier_center: float = 0.0
    taper_length: float = 10e-6
    sheet_exponent: int = 1
    species: Species = field(default=RB87)

    def __post_init__(self):
        for name in ('omega_x', 'omega_z', 'barrier_waist', 'rayleigh_range', 'g_eff'):
            if not getattr(self, name) > 0:
                raise ValueError(f"TrapConfig.{name} must be positive, got {getattr(self, name)}")
        if self.barrier_height < 0:
            raise ValueError(f"Barrier height must be non-negative, got {self.barrier_height}")
        if self.sheet_exponent not in (1, 2):
            raise ValueError(f"sheet_exponent must be 1 or 2, got {self.sheet_exponent}")
        if self.flat_halfwidth < 0 or self.taper_length <= 0:
            raise ValueError("flat_halfwidth must be >= 0 and taper_length > 0")

    @property
    def mass(self) -> float:
        return self.species.mass

    @property
    def reference_frequency(self) -> float:
        """Weakest confinement, used as the solver's unit of frequency"""
        return min(self.omega_x, self.omega_z)

    @property
    def transverse_frequencies(self) -> Mapping[str, float]:
        """Frequencies of the axes that may be frozen out in reduced-dimension runs"""
        return {'x': self.omega_x, 'z': self.omega_z}

    @property
    def escape_cut(self) -> float:
        """y beyond which ground-state preparation walls off the escape side"""
        return self.barrier_center

    def with_barrier(self, height: float) -> 'TrapConfig':
        return replace(self, barrier_height=height)

    def waist_at(self, z):
        """Local 1/e² half-width w(z) of the diffracting sheet"""
        return self.barrier_waist * np.sqrt(1.0 + (np.asarray(z) / self.rayleigh_range) ** 2)

    def _taper(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        edge = (ax - self.flat_halfwidth) / self.taper_length
        taper = 0.5 * (1.0 + np.cos(np.pi * np.clip(edge, 0.0, 1.0)))
        return np.where(ax <= self.flat_halfwidth, 1.0, taper)

    def barrier_shape(self, x, y, z):
        """Barrier potential per unit of barrier height (dimensionless)"""
        z = np.asarray(z, dtype=float)
        w = self.waist_at(z)
        s = np.asarray(y, dtype=float) - self.barrier_center
        amplitude = (self.barrier_waist / w) ** self.sheet_exponent
        return amplitude * np.exp(-2.0 * s ** 2 / w ** 2) * self._taper(x)

    def harmonic(self, x, z):
        """Harmonic part in nK"""
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return 0.5 * self.mass * (self.omega_x ** 2 * x ** 2 + self.omega_z ** 2 * z ** 2) / NANOKELVIN

    def tilt(self, y):
        """Effective-gravity part in nK"""
        return -self.mass * self.g_eff * (np.asarray(y, dtype=float) - self.barrier_center) / NANOKELVIN

    def evaluate(self, x=0.0, y=0.0, z=0.0, barrier_height: Optional[float] = None):
        """Potential energy in nK at (x, y, z) in m"""
        height = self.barrier_height if barrier_height is None else barrier_height
        return self.harmonic(x, z) + self.tilt(y) + height * self.barrier_shape(x, y, z)


@dataclass(frozen=True)
class HarmonicTrap:
    """Separable harmonic trap; barrier_height is carried but has no effect"""
    omega_x: float
    omega_y: float
    omega_z: float
    species: Species = field(default=RB87)
    barrier_height: float = 0.0

    def __post_init__(self):
        if not (self.omega_x > 0 and self.omega_y > 0 and self.omega_z > 0):
            raise ValueError("HarmonicTrap frequencies must be positive")

    @property
    def mass(self) -> float:
        return self.species.mass

    @property
    def reference_frequency(self) -> float:
        return min(self.omega_x, self.omega_y, self.omega_z)

    @property
    def transverse_frequencies(self) -> Mapping[str, float]:
        return {'x': self.omega_x, 'y': self.omega_y, 'z': self.omega_z}

    @property
    def barrier_center(self) -> float:
        return 0.0

    @property
    def escape_cut(self) -> Optional[float]:
        return None

    def with_barrier(self, height: float) -> 'HarmonicTrap':
        return replace(self, barrier_height=height)

    def barrier_shape(self, x, y, z):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y), np.asarray(z)).shape)

    def evaluate(self, x=0.0, y=0.0, z=0.0, barrier_height: Optional[float] = None):
        x, y, z = (np.asarray(c, dtype=float) for c in (x, y, z))
        return 0.5 * self.mass * (self.omega_x ** 2 * x ** 2 + self.omega_y ** 2 * y ** 2
                                  + self.omega_z ** 2 * z ** 2) / NANOKELVIN


def potential(cfg: TrapConfig, point) -> float:
    """U(x, y, z; U0) in nK for a point (x, y, z) in m"""
    x, y, z = point
    return float(cfg.evaluate(x, y, z))


def barrier_potential(cfg: TrapConfig, point) -> float:
    """Barrier-only contribution in nK"""
    x, y, z = point
    return float(cfg.barrier_height * cfg.barrier_shape(x, y, z))


def barrier_acceleration(cfg: TrapConfig) -> Tuple[float, float]:
    """Linearised barrier acceleration a_b and reduced acceleration ā in m/s²

    a_b = 2U0/(m w0 √e) - g_eff is the steepest slope of the sheet divided
    by m, net of gravity; ā = g_eff a_b/(g_eff + a_b).
    """
    u0 = cfg.barrier_height * NANOKELVIN
    a_b = 2.0 * u0 / (cfg.mass * cfg.barrier_waist * math.sqrt(math.e)) - cfg.g_eff
    if a_b <= 0:
        raise NonConfiningTrapError(
            f"Barrier of {cfg.barrier_height} nK is not steeper than g_eff={cfg.g_eff} m/s² (a_b={a_b:.3g})")
    a_bar = cfg.g_eff * a_b / (cfg.g_eff + a_b)
    return a_b, a_bar


def confining_height(cfg: TrapConfig) -> float:
    """Barrier height in nK at which a_b = 0"""
    return cfg.g_eff * cfg.mass * cfg.barrier_waist * math.sqrt(math.e) / 2.0 / NANOKELVIN
