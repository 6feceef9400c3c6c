"""
Closed-form estimates for a condensate held against a linear barrier wall

The chemical potential follows the linear-wall Thomas-Fermi result
μ = (12 (ħω̄)² m ā N a_s)^(1/3) with ω̄ = √(ω_x ω_z), and the three-body
rate uses ⟨n²⟩ = (3/10)(μ/g)² for the same profile.
"""
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from scipy.constants import hbar

from tunnelkit.trap.models import TrapConfig, barrier_acceleration
from tunnelkit.units.models import NANOKELVIN, Species, interaction_coupling

MEAN_SQUARE_FRACTION = 3.0 / 10.0


@dataclass(frozen=True)
class AnalyticEstimates:
    mu: float
    epsilon_0: float
    mean_square_density: float
    peak_density: float
    gamma_3b: float
    omega_bar: float
    n_atoms: float
    barrier_height: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def omega_bar(trap: TrapConfig) -> float:
    return math.sqrt(trap.omega_x * trap.omega_z)


def _wall_constant(trap: TrapConfig, species: Species) -> float:
    # μ³ = constant · N, in J³
    _, a_bar = barrier_acceleration(trap)
    return 12.0 * (hbar * omega_bar(trap)) ** 2 * species.mass * a_bar * species.scattering_length


def mu_analytic(trap: TrapConfig, n_atoms: float, species: Optional[Species] = None) -> float:
    """Chemical potential in nK for N atoms"""
    if n_atoms < 0:
        raise ValueError(f"Atom number must be non-negative, got {n_atoms}")
    species = species or trap.species
    constant = _wall_constant(trap, species)
    if n_atoms == 0:
        return 0.0
    return (constant * n_atoms) ** (1.0 / 3.0) / NANOKELVIN


def n_from_mu(trap: TrapConfig, mu: float, species: Optional[Species] = None) -> float:
    """Atom number whose analytic chemical potential is mu (nK)"""
    if mu < 0:
        raise ValueError(f"Chemical potential must be non-negative, got {mu}")
    species = species or trap.species
    constant = _wall_constant(trap, species)
    if mu == 0:
        return 0.0
    if constant == 0:
        raise ValueError("An ideal gas (a_s = 0) has no finite N for μ > 0")
    return (mu * NANOKELVIN) ** 3 / constant


def epsilon_0(trap: TrapConfig, species: Optional[Species] = None) -> float:
    """Single-particle ground-state energy scale (ħ² m ā²/2)^(1/3) in nK"""
    species = species or trap.species
    _, a_bar = barrier_acceleration(trap)
    return (hbar ** 2 * species.mass * a_bar ** 2 / 2.0) ** (1.0 / 3.0) / NANOKELVIN


def peak_density(species: Species, mu: float) -> float:
    """Thomas-Fermi peak density μ/g in m^-3"""
    if mu < 0:
        raise ValueError(f"Chemical potential must be non-negative, got {mu}")
    g = interaction_coupling(species)
    if g == 0:
        raise ValueError("Peak density is undefined for a_s = 0")
    return mu * NANOKELVIN / g


def three_body_rate(species: Species, mu: float) -> float:
    """Γ_3b = L (3/10)(μ/g)² in s^-1"""
    if mu == 0:
        return 0.0
    return species.three_body_constant * MEAN_SQUARE_FRACTION * peak_density(species, mu) ** 2


def estimate(trap: TrapConfig, n_atoms: float, species: Optional[Species] = None) -> AnalyticEstimates:
    species = species or trap.species
    mu = mu_analytic(trap, n_atoms, species)
    n0 = peak_density(species, mu) if mu > 0 else 0.0
    return AnalyticEstimates(
        mu=mu,
        epsilon_0=epsilon_0(trap, species),
        mean_square_density=MEAN_SQUARE_FRACTION * n0 ** 2,
        peak_density=n0,
        gamma_3b=three_body_rate(species, mu),
        omega_bar=omega_bar(trap),
        n_atoms=float(n_atoms),
        barrier_height=trap.barrier_height,
    )
