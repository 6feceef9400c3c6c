"""
Physical constants, atomic species and the unit system

User-facing quantities are expressed in nK (energies, k_B-scaled), μm
(lengths) and ms (times). The solver works in harmonic-oscillator units
of a reference trap frequency, built by UnitSystem.for_species.
"""
import math
from dataclasses import dataclass
from typing import Dict

from scipy.constants import Boltzmann, atomic_mass, hbar, physical_constants

from tunnelkit.utils.errors import UnitError

BOHR_RADIUS = physical_constants['Bohr radius'][0]

# J per nK, m per μm, s per ms
NANOKELVIN = Boltzmann * 1e-9
MICROMETER = 1e-6
MILLISECOND = 1e-3

QUANTITY_KINDS = ('energy', 'length', 'time', 'frequency', 'acceleration', 'density')


@dataclass(frozen=True)
class Species:
    """Atomic species data in SI units

    Args:
        mass: atomic mass in kg
        scattering_length: s-wave scattering length a_s in m
        three_body_constant: three-body loss constant L in m^6/s, defined by
            dN/dt = -L <n^2> N
    """
    mass: float
    scattering_length: float
    three_body_constant: float
    name: str = 'custom'

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"Species mass must be positive, got {self.mass}")
        # a_s = 0 (ideal gas) and L = 0 (no loss) are admitted
        if self.scattering_length < 0:
            raise ValueError(f"Scattering length must be non-negative, got {self.scattering_length}")
        if self.three_body_constant < 0:
            raise ValueError(f"Three-body constant must be non-negative, got {self.three_body_constant}")

    @classmethod
    def from_user_units(cls, mass_amu: float, scattering_length_a0: float,
                        three_body_constant: float, name: str = 'custom') -> 'Species':
        """Build a species from amu and Bohr radii"""
        return cls(mass=mass_amu * atomic_mass,
                   scattering_length=scattering_length_a0 * BOHR_RADIUS,
                   three_body_constant=three_body_constant,
                   name=name)


# 87Rb in |F=2, mF=2>. L from the three-body decay measurement for this state,
# 1.8e-29 cm^6/s.
RB87_MASS_AMU = 86.909180527
RB87_SCATTERING_LENGTH_A0 = 98.98
RB87_THREE_BODY = 1.8e-41

RB87 = Species.from_user_units(RB87_MASS_AMU, RB87_SCATTERING_LENGTH_A0, RB87_THREE_BODY, name='Rb87')


def interaction_coupling(species: Species) -> float:
    """Contact coupling g = 4πħ²a_s/m in J·m³"""
    return 4.0 * math.pi * hbar ** 2 * species.scattering_length / species.mass


@dataclass(frozen=True)
class UnitSystem:
    """User units and the dimensionless scaling used by the solver

    Dimensionless scales are those of a harmonic oscillator of frequency
    `omega_ref` for a particle of mass `mass`: energy ħω, length
    √(ħ/mω), time 1/ω.
    """
    mass: float
    omega_ref: float
    energy_unit: float = NANOKELVIN
    length_unit: float = MICROMETER
    time_unit: float = MILLISECOND

    def __post_init__(self):
        if not (self.mass > 0 and self.omega_ref > 0):
            raise ValueError("UnitSystem requires positive mass and reference frequency")

    @classmethod
    def for_species(cls, species: Species, omega_ref: float) -> 'UnitSystem':
        return cls(mass=species.mass, omega_ref=omega_ref)

    @property
    def energy_scale(self) -> float:
        """ħω in J"""
        return hbar * self.omega_ref

    @property
    def length_scale(self) -> float:
        """Oscillator length in m"""
        return math.sqrt(hbar / (self.mass * self.omega_ref))

    @property
    def time_scale(self) -> float:
        """1/ω in s"""
        return 1.0 / self.omega_ref

    def _factors(self) -> Dict[str, float]:
        # user value * factor = dimensionless value
        return {
            'energy': self.energy_unit / self.energy_scale,
            'length': self.length_unit / self.length_scale,
            'time': self.time_unit / self.time_scale,
            # rad/s
            'frequency': self.time_scale,
            # m/s^2
            'acceleration': self.time_scale ** 2 / self.length_scale,
            # m^-3
            'density': self.length_scale ** 3,
        }

    def factor(self, kind: str) -> float:
        try:
            return self._factors()[kind]
        except KeyError:
            raise UnitError(f"Unknown quantity kind '{kind}'; expected one of {QUANTITY_KINDS}")

    def to_dimensionless(self, value, kind: str):
        """Convert a value in user units to the solver's dimensionless units"""
        return value * self.factor(kind)

    def from_dimensionless(self, value, kind: str):
        """Inverse of to_dimensionless"""
        return value / self.factor(kind)


def nk_to_joule(value):
    return value * NANOKELVIN


def joule_to_nk(value):
    return value / NANOKELVIN
