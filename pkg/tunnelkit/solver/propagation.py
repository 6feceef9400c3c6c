"""
Split-step Fourier propagation of the Gross-Pitaevskii equation

The solver works in harmonic-oscillator units of the trap's reference
frequency: energies in ħω, lengths in √(ħ/mω), times in 1/ω. Fields are
converted on entry and exit, so callers only ever see FieldState in SI
normalisation (∫|ψ|² dV = N).

Reduced-dimensionality grids (1D along y, 2D in y-z) freeze the missing
axes in their harmonic ground state; the contact and three-body couplings
are rescaled by the corresponding overlap integrals and the transverse
zero-point energy is left out of every reported energy.
"""
import math
from dataclasses import astuple, dataclass, fields
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.constants import hbar
from scipy.optimize import brentq

from tunnelkit.config.config import logger
from tunnelkit.grid.fft import FFTBackend, initialize_fft_backend
from tunnelkit.grid.models import AXES_BY_DIMS, FieldState, Grid, Region
from tunnelkit.observables.models import TimeSeries
from tunnelkit.solver.schedule import AbsorberConfig, RampSchedule, SolverConfig
from tunnelkit.trap.models import TrapConfig, barrier_acceleration
from tunnelkit.units.models import Species, UnitSystem, interaction_coupling
from tunnelkit.utils.errors import ConvergenceError, EmptyRegionError, NumericalError

# Relative norm growth per real-time step treated as an instability
NORM_GROWTH_LIMIT = 1e-6


@dataclass(frozen=True)
class Snapshot:
    """One record of the snapshot stream (ms, nK, atoms)"""
    time: float
    barrier_height: float
    n_total: float
    n_trapped: float
    mu_trapped: float

    @classmethod
    def columns(cls) -> Tuple[str, ...]:
        return ('time_ms', 'barrier_nk', 'n_total', 'n_trapped', 'mu_trapped_nk')

    def as_row(self) -> Tuple[float, ...]:
        return astuple(self)


@dataclass
class PropagationResult:
    snapshots: List[Snapshot]
    final_state: FieldState
    aborted: bool = False

    def series(self, kind: str) -> TimeSeries:
        """TimeSeries of one snapshot field: n_total, n_trapped or mu_trapped"""
        if kind not in {f.name for f in fields(Snapshot)} - {'time'}:
            raise ValueError(f"Unknown snapshot field '{kind}'")
        return TimeSeries([s.time for s in self.snapshots],
                          [getattr(s, kind) for s in self.snapshots], kind=kind)


@dataclass(frozen=True)
class ConvergenceInfo:
    """Outcome of an imaginary-time relaxation"""
    steps: int
    checks: int
    mu: float
    relative_change: float
    state_residual: float


def frozen_axes(dims: int) -> Tuple[str, ...]:
    return tuple(axis for axis in ('x', 'y', 'z') if axis not in AXES_BY_DIMS[dims])


def reduced_couplings(trap, species: Species, dims: int) -> Tuple[float, float]:
    """Contact coupling (J·m^d) and three-body constant (m^2d/s) for a d-dimensional grid

    Integrating a frozen harmonic ground state of length a out of the
    equation divides g by √(2π)·a and L by √3·π·a².
    """
    g = interaction_coupling(species)
    loss = species.three_body_constant
    for axis in frozen_axes(dims):
        a = math.sqrt(hbar / (species.mass * trap.transverse_frequencies[axis]))
        g /= math.sqrt(2.0 * math.pi) * a
        loss /= math.sqrt(3.0) * math.pi * a ** 2
    return g, loss


class GPESolver:
    """Imaginary- and real-time Strang splitting on a fixed grid and trap"""

    def __init__(self, trap, grid: Grid, config: Optional[SolverConfig] = None,
                 absorber: Optional[AbsorberConfig] = None, species: Optional[Species] = None,
                 backend: Optional[FFTBackend] = None, energy_reference: float = 0.0):
        self.trap = trap
        self.grid = grid
        self.config = config or SolverConfig()
        self.absorber = absorber or AbsorberConfig()
        self.species = species or trap.species
        self.backend = backend or initialize_fft_backend()
        self.energy_reference = energy_reference
        self.last_convergence: Optional[ConvergenceInfo] = None

        self.units = UnitSystem.for_species(self.species, trap.reference_frequency)
        length = self.units.length_scale
        self._energy = self.units.factor('energy')
        self._time = self.units.factor('time')
        self._field_scale = length ** (grid.dims / 2.0)
        self._cell = grid.cell_volume / length ** grid.dims

        g, loss = reduced_couplings(trap, self.species, grid.dims)
        self.coupling = g / (self.units.energy_scale * length ** grid.dims)
        self.loss_rate = loss * self.units.time_scale / length ** (2 * grid.dims)
        self._kinetic = 0.5 * grid.k_squared * length ** 2

        x, y, z = (grid.mesh[a] for a in ('x', 'y', 'z'))
        y_eval = y
        if trap.escape_cut is not None:
            # the tilt is flattened beyond the absorber onset
            y_eval = np.minimum(y, self.absorber.onset_position(trap.barrier_center))
        self._static = np.broadcast_to(trap.evaluate(x, y_eval, z, barrier_height=0.0),
                                       grid.shape) * self._energy
        self._shape = np.broadcast_to(trap.barrier_shape(x, y, z), grid.shape) * self._energy
        self._absorb = self.absorber.profile(grid, trap.barrier_center) * self._energy
        self._escape_side = None
        if trap.escape_cut is not None:
            self._escape_side = np.broadcast_to(y >= trap.escape_cut, grid.shape)
        self._potential_cache: Tuple[Optional[float], Optional[np.ndarray]] = (None, None)

        logger.info(f"GPE solver: {grid.dims}D grid {grid.points}, "
                    f"g={self.coupling:.4g} ħω·l^{grid.dims}, L={self.loss_rate:.4g}, "
                    f"dt={self.config.dt} ms, dt_imag={self.config.dt_imag} ms")

    # Conversions

    def _to_internal(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=complex) * self._field_scale

    def _to_state(self, psi: np.ndarray, time: float, height: float) -> FieldState:
        return FieldState(self.grid, psi / self._field_scale, time, height)

    def _norm(self, psi: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
        density = np.abs(psi) ** 2
        if mask is not None:
            density = density[mask]
        return float(np.sum(density) * self._cell)

    # Operators

    def potential(self, height: float) -> np.ndarray:
        """Real potential in internal units for a barrier height in nK"""
        cached_height, cached = self._potential_cache
        if cached_height != height:
            cached = self._static + height * self._shape
            self._potential_cache = (height, cached)
        return cached

    def _walled_potential(self, height: float) -> np.ndarray:
        v = self.potential(height)
        if self._escape_side is None:
            return v
        return np.where(self._escape_side, np.maximum(v, height * self._energy), v)

    def _apply_kinetic(self, psi: np.ndarray) -> np.ndarray:
        return self.backend.inverse(self._kinetic * self.backend.forward(psi))

    def _kinetic_step(self, psi: np.ndarray, factor: np.ndarray) -> np.ndarray:
        return self.backend.inverse(factor * self.backend.forward(psi))

    def _expectation(self, psi: np.ndarray, v: np.ndarray, mask: Optional[np.ndarray],
                     interaction_weight: float) -> float:
        density = np.abs(psi) ** 2
        h_psi = self._apply_kinetic(psi) + (v + interaction_weight * self.coupling * density) * psi
        integrand = np.real(np.conj(psi) * h_psi)
        if mask is not None:
            integrand, density = integrand[mask], density[mask]
        norm = float(np.sum(density))
        if norm <= 0:
            raise EmptyRegionError("Region carries no norm")
        return float(np.sum(integrand)) / norm

    def _mu_internal(self, psi: np.ndarray, v: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
        return self._expectation(psi, v, mask, 1.0)

    def _to_nk(self, value: float) -> float:
        return value / self._energy

    def _mask(self, region: Optional[Region]) -> Optional[np.ndarray]:
        if region is None or not region.bounds:
            return None
        return region.mask(self.grid)

    # Observables

    def chemical_potential(self, state: FieldState, region: Optional[Region] = None) -> float:
        """μ in nK over a region, kinetic term evaluated spectrally on the full grid"""
        psi = self._to_internal(state.values)
        mu = self._mu_internal(psi, self.potential(state.barrier_height), self._mask(region))
        return self._to_nk(mu) - self.energy_reference

    def energy(self, state: FieldState) -> float:
        """Energy per particle ∫ψ*(T + V + g|ψ|²/2)ψ dV / N in nK"""
        psi = self._to_internal(state.values)
        return self._to_nk(self._expectation(psi, self.potential(state.barrier_height), None, 0.5)) \
            - self.energy_reference

    def mean_square_density(self, state: FieldState, region: Optional[Region] = None) -> float:
        """⟨n²⟩ = ∫n³ dV / ∫n dV in m^-2d"""
        density = state.density
        mask = self._mask(region)
        if mask is not None:
            density = density[mask]
        norm = float(np.sum(density))
        if norm <= 0:
            raise EmptyRegionError("Region carries no norm")
        return float(np.sum(density ** 3) / norm)

    def three_body_rate(self, state: FieldState, region: Optional[Region] = None) -> float:
        """Instantaneous L⟨n²⟩ in s^-1 with the reduced-dimension constant"""
        _, loss = reduced_couplings(self.trap, self.species, self.grid.dims)
        return loss * self.mean_square_density(state, region)

    # Ground state

    def thomas_fermi_guess(self, n_atoms: float, height: float) -> np.ndarray:
        """Internal-unit TF profile max(μ - V, 0)/g normalised to N; a Gaussian when g = 0"""
        v = self._walled_potential(height)
        if self.coupling <= 0:
            centre = np.unravel_index(np.argmin(v), v.shape)
            exponent = np.zeros(self.grid.shape)
            length = self.units.length_scale
            for i, axis in enumerate(self.grid.axes):
                coords = self.grid.mesh[axis]
                exponent = exponent - 0.5 * ((coords - coords.flat[centre[i]]) / length) ** 2
            psi = np.exp(exponent).astype(complex)
        else:
            v_min = float(v.min())
            count = lambda mu: float(np.sum(np.maximum(mu - v, 0.0)) * self._cell / self.coupling) - n_atoms
            span = 1.0
            while count(v_min + span) < 0:
                span *= 2.0
                if span > 1e12:
                    raise NumericalError("Thomas-Fermi bracket failed")
            mu = brentq(count, v_min, v_min + span, xtol=1e-12 * span)
            psi = np.sqrt(np.maximum(mu - v, 0.0)).astype(complex)
        return psi * math.sqrt(n_atoms / self._norm(psi))

    def ground_state(self, n_atoms: float, height: Optional[float] = None,
                     initial: Optional[FieldState] = None) -> FieldState:
        """Relax to the lowest-energy state with N atoms by imaginary-time propagation"""
        if n_atoms <= 0:
            raise ValueError(f"Atom number must be positive, got {n_atoms}")
        height = self.trap.barrier_height if height is None else height
        if isinstance(self.trap, TrapConfig):
            barrier_acceleration(self.trap.with_barrier(height))

        cfg = self.config
        v = self._walled_potential(height)
        dtau = cfg.dt_imag * self._time
        half_kinetic = np.exp(-0.5 * dtau * self._kinetic)

        if initial is not None:
            psi = self._to_internal(initial.values)
            psi *= math.sqrt(n_atoms / self._norm(psi))
        else:
            psi = self.thomas_fermi_guess(n_atoms, height)

        mu_prev = self._mu_internal(psi, v)
        psi_prev = psi.copy()
        checks = 0
        change = residual = math.inf
        for step in range(1, cfg.max_steps + 1):
            psi = self._kinetic_step(psi, half_kinetic)
            psi *= np.exp(-(v + self.coupling * np.abs(psi) ** 2) * dtau)
            psi = self._kinetic_step(psi, half_kinetic)
            norm = self._norm(psi)
            if not (norm > 0 and math.isfinite(norm)):
                raise NumericalError(f"Imaginary-time norm became {norm} at step {step}")
            psi *= math.sqrt(n_atoms / norm)

            if step % cfg.check_interval == 0:
                checks += 1
                mu = self._mu_internal(psi, v)
                change = abs(mu - mu_prev) / max(abs(mu), 1e-300) / cfg.check_interval
                # ‖ψ − ψ_prev‖/‖ψ‖ per step
                residual = math.sqrt(self._norm(psi - psi_prev) / n_atoms) / cfg.check_interval
                mu_prev, psi_prev = mu, psi.copy()
                if change < cfg.tolerance and residual < cfg.state_tolerance:
                    # remove the global phase so the returned state is real-positive
                    phase = psi.flat[np.argmax(np.abs(psi))]
                    psi = psi * (abs(phase) / phase)
                    self.last_convergence = ConvergenceInfo(step, checks, self._to_nk(mu), change, residual)
                    logger.info(f"Ground state converged after {step} steps ({checks} checks): "
                                f"μ={self._to_nk(mu) - self.energy_reference:.4f} nK")
                    return self._to_state(psi, initial.time if initial else 0.0, height)

        logger.error(f"Imaginary time did not converge in {cfg.max_steps} steps "
                     f"(|Δμ|/μ per step {change:.3e}, state residual per step {residual:.3e})")
        raise ConvergenceError(f"Ground state not converged after {cfg.max_steps} steps; "
                               f"last relative change {change:.3e}, state residual {residual:.3e}")

    # Real time

    def three_body_term(self, psi: np.ndarray, dtau: float, density: Optional[np.ndarray] = None) -> np.ndarray:
        """Apply the -i(ħL/2)|ψ|⁴ψ loss over one internal-unit step; a no-op when disabled or L = 0"""
        if not self.config.three_body_loss or self.loss_rate <= 0:
            return psi
        if density is None:
            density = np.abs(psi) ** 2
        # exact solution of dn/dt = -L n³ over one step
        return psi * (1.0 + 2.0 * self.loss_rate * density ** 2 * dtau) ** -0.25

    def step(self, psi: np.ndarray, height: float, dtau: float, half_kinetic: np.ndarray) -> np.ndarray:
        """One Strang step in internal units"""
        psi = self._kinetic_step(psi, half_kinetic)
        density = np.abs(psi) ** 2
        phase = self.potential(height) + self.coupling * density
        psi = psi * np.exp(-1j * phase * dtau - self._absorb * dtau)
        psi = self.three_body_term(psi, dtau, density)
        return self._kinetic_step(psi, half_kinetic)

    def propagate(self, state: FieldState, ramp: Optional[RampSchedule] = None,
                  trapped_region: Optional[Region] = None,
                  observer: Optional[Callable[[Snapshot, FieldState], None]] = None,
                  duration: Optional[float] = None) -> PropagationResult:
        """Real-time evolution over `duration` ms with the barrier following `ramp`

        Snapshots are taken at t = 0, every snapshot interval and at the end.
        On an instability the snapshots gathered so far are kept on the
        raised NumericalError as `partial`.
        """
        cfg = self.config
        cfg.check_stability(self.grid, self.species.mass)
        ramp = ramp or RampSchedule.hold(state.barrier_height)
        duration = cfg.duration if duration is None else duration
        steps = int(math.ceil(duration / cfg.dt - 1e-9))
        mask = self._mask(trapped_region)
        absorbing = bool(np.any(self._absorb > 0)) or cfg.three_body_loss

        dtau = cfg.dt * self._time
        half_kinetic = np.exp(-0.5j * dtau * self._kinetic)
        psi = self._to_internal(state.values)
        t0 = state.time
        snapshots: List[Snapshot] = []

        def record(step_index: int, height: float) -> Snapshot:
            t = t0 + step_index * cfg.dt
            snap = Snapshot(
                time=t,
                barrier_height=height,
                n_total=self._norm(psi),
                n_trapped=self._norm(psi, mask),
                mu_trapped=self._to_nk(self._mu_internal(psi, self.potential(height), mask))
                - self.energy_reference,
            )
            if absorbing and snapshots and snap.n_total > snapshots[-1].n_total * (1.0 + 1e-9):
                raise NumericalError(f"Total norm grew between snapshots at t={t:.3f} ms")
            snapshots.append(snap)
            if observer is not None:
                observer(snap, self._to_state(psi, t, height))
            return snap

        record(0, ramp.height_at(0.0))
        norm = self._norm(psi)
        every = cfg.steps_per_snapshot
        height = ramp.height_at(0.0)
        try:
            for n in range(1, steps + 1):
                height = ramp.height_at((n - 0.5) * cfg.dt)
                psi = self.step(psi, height, dtau, half_kinetic)
                new_norm = self._norm(psi)
                if not math.isfinite(new_norm):
                    raise NumericalError(f"Non-finite field at step {n} (t={t0 + n * cfg.dt:.4f} ms)")
                if new_norm > norm * (1.0 + NORM_GROWTH_LIMIT):
                    raise NumericalError(f"Norm grew by {new_norm / norm - 1.0:.3e} at step {n}; "
                                         f"reduce dt or check the absorber")
                norm = new_norm
                if n % every == 0 or n == steps:
                    height = ramp.height_at(n * cfg.dt)
                    snap = record(n, height)
                    if n % (every * 50) == 0:
                        logger.info(f"t={snap.time:.1f} ms U0={snap.barrier_height:.1f} nK "
                                    f"N_trapped={snap.n_trapped:.1f} μ={snap.mu_trapped:.2f} nK")
        except NumericalError as e:
            logger.error(f"Propagation aborted: {e}")
            e.partial = PropagationResult(snapshots, self._to_state(psi, snapshots[-1].time, height), True)
            raise

        final = self._to_state(psi, t0 + steps * cfg.dt, ramp.height_at(steps * cfg.dt))
        return PropagationResult(snapshots, final)


def ground_state(trap, n_atoms: float, grid: Grid, config: Optional[SolverConfig] = None,
                 **kwargs) -> FieldState:
    return GPESolver(trap, grid, config, **kwargs).ground_state(n_atoms)


def propagate(state: FieldState, trap, ramp: RampSchedule, absorber: AbsorberConfig,
              config: SolverConfig, observer=None, trapped_region: Optional[Region] = None,
              **kwargs) -> PropagationResult:
    solver = GPESolver(trap, state.grid, config, absorber, **kwargs)
    return solver.propagate(state, ramp, trapped_region, observer)


def chemical_potential(state: FieldState, trap, region: Optional[Region] = None, **kwargs) -> float:
    kwargs.setdefault('absorber', AbsorberConfig(enabled=False))
    return GPESolver(trap, state.grid, **kwargs).chemical_potential(state, region)
