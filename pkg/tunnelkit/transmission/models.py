"""
One-dimensional single-particle transmission through a barrier profile

Profiles are sampled on a uniform grid; each sample stands for a slab of
constant potential one spacing wide. Slabs propagate the real pair
(ψ, ψ') with unit-determinant 2×2 matrices, multiplied pairwise with a
running log scale so that thick barriers neither overflow nor underflow.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.constants import hbar
from scipy.integrate import quad
from scipy.optimize import brentq

from tunnelkit.config.config import logger
from tunnelkit.trap.models import TrapConfig
from tunnelkit.units.models import MICROMETER, NANOKELVIN, RB87, Species
from tunnelkit.utils.errors import FitError, NumericalError

WIDTH_CONVENTIONS = ('waist', 'fwhm')
DEFAULT_POINTS = 8001
RICHARDSON_TOLERANCE = 1e-6


def wavenumber_scale(species: Species = RB87) -> float:
    """k² per nK of kinetic energy, in μm^-2"""
    return 2.0 * species.mass * NANOKELVIN / hbar ** 2 * MICROMETER ** 2


@dataclass(frozen=True)
class BarrierProfile1D:
    """Potential V(y) in nK sampled at uniformly spaced y (m)

    The asymptotic levels default to the end samples. `func`, when given,
    evaluates the underlying shape anywhere and allows resampling.
    """
    y: np.ndarray
    potential: np.ndarray
    left_level: Optional[float] = None
    right_level: Optional[float] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    label: str = 'custom'

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        v = np.asarray(self.potential, dtype=float)
        if y.ndim != 1 or y.shape != v.shape or y.size < 2:
            raise ValueError("Profile needs matching 1D arrays with at least 2 samples")
        steps = np.diff(y)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("Profile samples must be uniformly spaced and increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("Profile potential must be finite")
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'potential', v)
        if self.left_level is None:
            object.__setattr__(self, 'left_level', float(v[0]))
        if self.right_level is None:
            object.__setattr__(self, 'right_level', float(v[-1]))

    @property
    def spacing(self) -> float:
        return float(self.y[1] - self.y[0])

    @property
    def peak(self) -> float:
        return float(self.potential.max())

    @property
    def width(self) -> float:
        """Full width (m) where V exceeds the baseline by 1/√e of the peak excess"""
        base = min(self.left_level, self.right_level)
        level = base + (self.peak - base) * math.exp(-0.5)
        above = np.flatnonzero(self.potential >= level)
        if above.size == 0:
            return 0.0
        lo, hi = above[0], above[-1]

        def crossing(i, j):
            v_i, v_j = self.potential[i], self.potential[j]
            if v_i == v_j:
                return self.y[i]
            return self.y[i] + (level - v_i) / (v_j - v_i) * (self.y[j] - self.y[i])

        left = crossing(lo - 1, lo) if lo > 0 else self.y[0]
        right = crossing(hi, hi + 1) if hi < len(self.y) - 1 else self.y[-1]
        return float(right - left)

    def resample(self, points: int) -> 'BarrierProfile1D':
        """Same extent sliced into `points` slabs; needs func"""
        if self.func is None:
            raise ValueError("Profile has no analytic shape to resample")
        lo = self.y[0] - 0.5 * self.spacing
        extent = self.spacing * len(self.y)
        y = lo + (np.arange(points) + 0.5) * extent / points
        return BarrierProfile1D(y, self.func(y), self.left_level, self.right_level, self.func, self.label)

    def value(self, y) -> np.ndarray:
        """Continuous V(y): the analytic shape if known, else linear interpolation"""
        if self.func is not None:
            return self.func(np.asarray(y, dtype=float))
        return np.interp(y, self.y, self.potential, left=self.left_level, right=self.right_level)


@dataclass(frozen=True)
class TransmissionCurve:
    energies: np.ndarray
    transmission: np.ndarray
    log_transmission: np.ndarray

    def to_rows(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.energies.tolist(), self.transmission.tolist(), self.log_transmission.tolist()))


def _effective_waist(width: float, convention: str) -> float:
    if convention == 'waist':
        return width
    if convention == 'fwhm':
        # FWHM of exp(-2s²/w²) is w·√(2 ln 2)
        return width / math.sqrt(2.0 * math.log(2.0))
    raise ValueError(f"Unknown width convention '{convention}'; expected one of {WIDTH_CONVENTIONS}")


def gaussian_profile(height: float, width: float, convention: str = 'waist',
                     points: int = DEFAULT_POINTS, span: float = 4.0, center: float = 0.0) -> BarrierProfile1D:
    """height·exp(-2(y - center)²/w²) with w fixed by `width` under `convention`

    The profile covers ±span·w around the centre and decays to 0 at both ends.
    """
    if height < 0 or width <= 0:
        raise ValueError("Gaussian barrier needs height >= 0 and width > 0")
    w = _effective_waist(width, convention)
    func = lambda y: height * np.exp(-2.0 * (np.asarray(y) - center) ** 2 / w ** 2)
    extent = 2.0 * span * w
    y = center - 0.5 * extent + (np.arange(points) + 0.5) * extent / points
    return BarrierProfile1D(y, func(y), 0.0, 0.0, func, f'gaussian-{convention}')


def square_profile(height: float, width: float, points: int = 64) -> BarrierProfile1D:
    """Rectangular barrier on [0, width] with zero potential outside"""
    if width <= 0:
        raise ValueError("Square barrier width must be positive")
    func = lambda y: np.where((np.asarray(y) >= 0.0) & (np.asarray(y) <= width), height, 0.0)
    y = (np.arange(points) + 0.5) * width / points
    return BarrierProfile1D(y, np.full(points, float(height)), 0.0, 0.0, func, 'square')


def saddle_profile(trap: TrapConfig, geometry=None, convention: str = 'waist',
                   points: int = DEFAULT_POINTS) -> BarrierProfile1D:
    """Gaussian barrier of height U_s and width equal to the local waist at the saddle"""
    if geometry is None:
        from tunnelkit.trap.saddle import find_geometry
        geometry = find_geometry(trap)
    return gaussian_profile(geometry.trap_depth, geometry.saddle_waist, convention, points)


def slab_matrix(k2: float, d: float) -> np.ndarray:
    """Transfer matrix of (ψ, ψ') across a slab with k² (μm^-2) and width d (μm)"""
    if k2 > 0:
        k = math.sqrt(k2)
        c, s = math.cos(k * d), math.sin(k * d)
        return np.array([[c, s / k], [-k * s, c]])
    if k2 < 0:
        kappa = math.sqrt(-k2)
        c, s = math.cosh(kappa * d), math.sinh(kappa * d)
        return np.array([[c, s / kappa], [kappa * s, c]])
    return np.array([[1.0, d], [0.0, 1.0]])


def _slab_matrices(k2: np.ndarray, d: float) -> np.ndarray:
    mats = np.empty((k2.size, 2, 2))
    prop = k2 > 0
    evan = k2 < 0
    flat = ~(prop | evan)
    k = np.sqrt(k2[prop])
    mats[prop] = np.stack([np.stack([np.cos(k * d), np.sin(k * d) / k], -1),
                           np.stack([-k * np.sin(k * d), np.cos(k * d)], -1)], -2)
    kappa = np.sqrt(-k2[evan])
    mats[evan] = np.stack([np.stack([np.cosh(kappa * d), np.sinh(kappa * d) / kappa], -1),
                           np.stack([kappa * np.sinh(kappa * d), np.cosh(kappa * d)], -1)], -2)
    mats[flat] = np.array([[1.0, d], [0.0, 1.0]])
    return mats


def chain_product(mats: np.ndarray) -> Tuple[np.ndarray, float]:
    """Ordered product M_n ⋯ M_1 as (normalised matrix, ln scale)

    Pairs are multiplied level by level; after every level each partial
    product is divided by its largest entry and the log of that factor
    is carried separately.
    """
    mats = np.array(mats, dtype=float)
    scales = np.zeros(len(mats))
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, np.eye(2)[None]])
            scales = np.append(scales, 0.0)
        mats = np.matmul(mats[1::2], mats[0::2])
        scales = scales[1::2] + scales[0::2]
        norms = np.max(np.abs(mats), axis=(1, 2))
        if np.any(~np.isfinite(norms)) or np.any(norms == 0):
            raise NumericalError("Non-finite transfer-matrix entries")
        mats = mats / norms[:, None, None]
        scales = scales + np.log(norms)
    return mats[0], float(scales[0])


def _scattering(profile: BarrierProfile1D, energy: float, species: Species):
    if energy <= 0:
        raise ValueError(f"Energy must be positive, got {energy}")
    if energy <= profile.left_level or energy <= profile.right_level:
        raise ValueError(f"E={energy} nK is not above both asymptotic levels "
                         f"({profile.left_level}, {profile.right_level}) nK")
    scale = wavenumber_scale(species)
    k2 = scale * (energy - profile.potential)
    matrix, log_scale = chain_product(_slab_matrices(k2, profile.spacing / MICROMETER))
    k_left = math.sqrt(scale * (energy - profile.left_level))
    k_right = math.sqrt(scale * (energy - profile.right_level))
    m11, m12, m21, m22 = matrix.ravel()
    a = 1j * k_right * m11 - m21
    b = 1j * k_left * m22 + k_left * k_right * m12
    return a, b, k_left, k_right, log_scale


def log_transmission(profile: BarrierProfile1D, energy: float, species: Species = RB87,
                     richardson: bool = False) -> float:
    """ln T at energy E (nK)"""
    a, b, k_left, k_right, log_scale = _scattering(profile, energy, species)
    value = (math.log(k_right / k_left) + 2.0 * math.log(2.0 * k_left)
             - 2.0 * math.log(abs(a + b)) - 2.0 * log_scale)
    if not math.isfinite(value):
        raise NumericalError(f"Non-finite ln T at E={energy} nK")
    if richardson and profile.func is not None:
        refined = log_transmission(profile.resample(2 * len(profile.y)), energy, species)
        if abs(refined - value) >= RICHARDSON_TOLERANCE:
            logger.warning(f"Slab refinement moved ln T by {abs(refined - value):.2e} at E={energy} nK")
    return min(value, 0.0)


def transmission(profile: BarrierProfile1D, energy: float, species: Species = RB87) -> float:
    """T ∈ [0, 1] at energy E (nK)"""
    return min(1.0, math.exp(log_transmission(profile, energy, species)))


def reflection(profile: BarrierProfile1D, energy: float, species: Species = RB87) -> float:
    """R = |r|² with r = (b - a)/(a + b)"""
    a, b, _, _, _ = _scattering(profile, energy, species)
    return float(abs((b - a) / (a + b)) ** 2)


def transmission_curve(profile: BarrierProfile1D, energies: Sequence[float],
                       species: Species = RB87) -> TransmissionCurve:
    energies = np.asarray(energies, dtype=float)
    log_t = np.array([log_transmission(profile, e, species) for e in energies])
    return TransmissionCurve(energies, np.minimum(np.exp(log_t), 1.0), log_t)


def converged_log_transmission(profile: BarrierProfile1D, energy: float, species: Species = RB87,
                               tolerance: float = RICHARDSON_TOLERANCE,
                               max_doublings: int = 6) -> Tuple[float, int]:
    """ln T after doubling the slab count until it moves by less than tolerance

    Returns the value and the slab count it was obtained with.
    """
    current = profile
    value = log_transmission(current, energy, species)
    for _ in range(max_doublings):
        refined = current.resample(2 * len(current.y))
        refined_value = log_transmission(refined, energy, species)
        if abs(refined_value - value) < tolerance:
            return refined_value, len(refined.y)
        current, value = refined, refined_value
    logger.warning(f"ln T not converged to {tolerance} after {max_doublings} doublings at E={energy} nK")
    return value, len(current.y)


def turning_points(profile: BarrierProfile1D, energy: float) -> Tuple[float, float]:
    """Classical turning points (m) on either side of the peak"""
    if energy >= profile.peak:
        raise ValueError(f"E={energy} nK is not below the barrier peak {profile.peak} nK")
    i_peak = int(np.argmax(profile.potential))
    # one spacing beyond each end the potential sits at its asymptotic level
    y = np.concatenate([[profile.y[0] - profile.spacing], profile.y, [profile.y[-1] + profile.spacing]])
    v = np.concatenate([[profile.left_level], profile.potential, [profile.right_level]])
    i_peak += 1
    left_idx = np.flatnonzero(v[:i_peak] < energy)
    right_idx = np.flatnonzero(v[i_peak:] < energy)
    if left_idx.size == 0 or right_idx.size == 0:
        raise ValueError(f"No classical turning points at E={energy} nK within the profile")
    excess = lambda point: float(profile.value(point)) - energy
    left = brentq(excess, y[left_idx[-1]], y[i_peak], xtol=1e-16)
    right = brentq(excess, y[i_peak], y[i_peak + right_idx[0]], xtol=1e-16)
    return left, right


def wkb_log_transmission(profile: BarrierProfile1D, energy: float, species: Species = RB87) -> float:
    """ln T ≈ -2∫√(2m(V - E))/ħ dy between the turning points"""
    left, right = turning_points(profile, energy)
    scale = wavenumber_scale(species)
    integrand = lambda y_um: math.sqrt(scale * max(float(profile.value(y_um * MICROMETER)) - energy, 0.0))
    integral, _ = quad(integrand, left / MICROMETER, right / MICROMETER, limit=200,
                       epsabs=1e-12, epsrel=1e-10)
    return -2.0 * integral


def beta_slope(profile: BarrierProfile1D, energy_range: Tuple[float, float], species: Species = RB87,
               samples: int = 11, method: str = 'transfer') -> float:
    """Least-squares slope of ln T against E over energy_range, in nK^-1"""
    e_min, e_max = energy_range
    if samples < 5:
        raise FitError(f"beta_slope needs at least 5 energies, got {samples}")
    if not e_max > e_min:
        raise FitError(f"Degenerate energy range {energy_range}")
    if e_max >= profile.peak:
        raise ValueError(f"Energy range {energy_range} reaches the barrier peak {profile.peak:.2f} nK")
    energies = np.linspace(e_min, e_max, samples)
    if method == 'wkb':
        log_t = np.array([wkb_log_transmission(profile, e, species) for e in energies])
    elif method == 'transfer':
        log_t = transmission_curve(profile, energies, species).log_transmission
    else:
        raise ValueError(f"Unknown method '{method}'")
    if not np.all(np.isfinite(log_t)):
        raise FitError("Non-finite ln T in the slope window")
    slope, _ = np.polyfit(energies, log_t, 1)
    return float(slope)


def default_energy_window(u_s: float, below_top: Tuple[float, float] = (20.0, 2.0)) -> Tuple[float, float]:
    """Energy window [U_s - 20, U_s - 2] nK used for β at a given trap depth"""
    low = max(u_s - below_top[0], 0.05 * u_s)
    return low, u_s - below_top[1]


def attempt_rate(trap: TrapConfig) -> float:
    """Order-of-magnitude attempt frequency ν = ω̄/2π in Hz (qualitative overlay only)"""
    return math.sqrt(trap.omega_x * trap.omega_z) / (2.0 * math.pi)


def escape_rate_curve(profile: BarrierProfile1D, energies: Sequence[float], trap: TrapConfig,
                      species: Species = RB87) -> np.ndarray:
    """Single-particle Γ(E) = ν·T(E) in s^-1; qualitative, not a fitted prediction"""
    return attempt_rate(trap) * transmission_curve(profile, energies, species).transmission
