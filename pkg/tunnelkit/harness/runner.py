"""
Experiment orchestration

Every public run_* function takes a validated RunConfig, writes plot-ready
CSV plus JSON summaries into its own run directory together with a
manifest, and returns the in-memory results. Independent runs of a sweep
are farmed out to a process pool; results are always collected in sweep
order so outputs do not depend on the degree of parallelism.
"""
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from tunnelkit.analytics.models import estimate, mu_analytic
from tunnelkit.config.config import logger
from tunnelkit.grid.fft import initialize_fft_backend
from tunnelkit.grid.io import plot_plane, save_field, write_density_csv
from tunnelkit.grid.models import Region
from tunnelkit.harness.config import RunConfig
from tunnelkit.harness.manifest import RunManifest
from tunnelkit.observables.models import (
    DecayFit, RegimeLabels, TimeSeries, classify_regimes, decay_rate, fit_gamma_mu
)
from tunnelkit.solver.propagation import GPESolver, PropagationResult, Snapshot
from tunnelkit.solver.schedule import AbsorberConfig
from tunnelkit.trap.saddle import TrapGeometry, find_geometry
from tunnelkit.transmission.models import (
    attempt_rate, beta_slope, default_energy_window, saddle_profile, transmission_curve
)
from tunnelkit.units.models import MICROMETER
from tunnelkit.utils.errors import FitError, NumericalError
from tunnelkit.utils.helpers import write_csv, write_json

FIGURE2_COLUMNS = ('atoms', 'mu_analytic_nk', 'mu_gpe_nk', 'barrier_nk', 'trap_depth_nk')
GAMMA_COLUMNS = ('time_ms', 'gamma_per_s', 'mu_nk', 'regime')
BETA_COLUMNS = ('barrier_nk', 'trap_depth_nk', 'saddle_waist_um', 'beta_transfer', 'beta_wkb',
                'beta_gpe', 'beta_gpe_stderr')
TRANSMISSION_COLUMNS = ('energy_nk', 'transmission', 'log_transmission', 'escape_rate_per_s')


@dataclass
class Dataset:
    """Rows of one CSV output plus the run directory they were written to"""
    directory: str
    columns: Tuple[str, ...]
    rows: List[Tuple[Any, ...]]
    summary: Dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)


@dataclass
class DecayResult:
    barrier_height: float
    directory: str
    geometry: TrapGeometry
    propagation: PropagationResult
    atoms: TimeSeries
    gamma: TimeSeries
    mu: TimeSeries
    regimes: RegimeLabels
    fit: Optional[DecayFit]
    fit_error: Optional[str] = None

    def summary(self) -> Dict[str, Any]:
        final = self.propagation.snapshots[-1]
        return {
            'barrier_nk': self.barrier_height,
            'trap_depth_nk': self.geometry.trap_depth,
            'geometry': self.geometry.to_dict(),
            'final_time_ms': final.time,
            'final_n_trapped': final.n_trapped,
            'final_n_total': final.n_total,
            'spill_to_tunneling_ms': self.regimes.spill_to_tunneling,
            'tunneling_to_background_ms': self.regimes.tunneling_to_background,
            'regime_counts': {label: self.regimes.count(label)
                              for label in ('spill', 'tunneling', 'background')},
            'fit': None if self.fit is None else self.fit.to_dict(),
            'fit_error': self.fit_error,
        }


def run_directory(config: RunConfig, name: str, out_dir: Optional[str] = None) -> str:
    directory = out_dir or os.path.join(config.output_dir, f"{config.label}-{name}-{config.config_hash[:8]}")
    os.makedirs(directory, exist_ok=True)
    return directory


def _new_manifest(config: RunConfig, command: str) -> RunManifest:
    return RunManifest(command, config.label, config.config_hash, config.to_dict())


def _parallel_map(func: Callable, tasks: Sequence[tuple], workers: int) -> List[Any]:
    """func(*task) for every task, in task order"""
    workers = min(workers, len(tasks))
    if workers <= 1:
        return [func(*task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, *zip(*tasks)))


def _split_threads(config: RunConfig, tasks: int) -> Tuple[int, int]:
    workers = max(1, min(config.threads, tasks))
    return workers, max(1, config.threads // workers)


def _solver(config: RunConfig, height: float, geometry: TrapGeometry, fft_threads: int,
            absorber: Optional[AbsorberConfig] = None) -> GPESolver:
    return GPESolver(config.trap(height), config.grid(), config.solver(),
                     absorber or config.absorber(), config.species(),
                     backend=initialize_fft_backend(threads=fft_threads),
                     energy_reference=geometry.minimum_energy)


# μ against N

def figure2_point(config: RunConfig, height: float, n_atoms: float, fft_threads: int = 1) -> Tuple[Any, ...]:
    trap = config.trap(height)
    geometry = find_geometry(trap)
    mu_a = mu_analytic(trap, n_atoms, config.species())
    if n_atoms == 0:
        mu_gpe = 0.0
    else:
        absorber = AbsorberConfig(onset=config.absorber().onset, enabled=False)
        solver = _solver(config, height, geometry, fft_threads, absorber)
        state = solver.ground_state(n_atoms)
        mu_gpe = solver.chemical_potential(state)
    logger.info(f"U0={height} nK N={n_atoms:g}: μ_analytic={mu_a:.3f} nK μ_GPE={mu_gpe:.3f} nK")
    return (n_atoms, mu_a, mu_gpe, height, geometry.trap_depth)


def run_figure2(config: RunConfig, out_dir: Optional[str] = None) -> Dataset:
    """μ(N) from the analytic formula and from GPE ground states, per barrier height"""
    directory = run_directory(config, 'fig2', out_dir)
    manifest = _new_manifest(config, 'fig2')
    tasks = [(config, h, n) for h in config.barrier_heights for n in config.atom_numbers]
    workers, fft_threads = _split_threads(config, len(tasks))
    rows = _parallel_map(figure2_point, [t + (fft_threads,) for t in tasks], workers)

    manifest.add_output(directory, write_csv(os.path.join(directory, 'fig2.csv'), FIGURE2_COLUMNS, rows))
    summary = {'points': len(rows), 'barrier_heights_nk': config.barrier_heights,
               'atom_numbers': config.atom_numbers}
    manifest.add_output(directory, write_json(os.path.join(directory, 'summary.json'), summary))
    manifest.finish()
    manifest.write(directory)
    return Dataset(directory, FIGURE2_COLUMNS, rows, summary)


# Decay of a single run

def _write_snapshots(directory: str, manifest: RunManifest, snapshots: List[Snapshot]) -> None:
    path = os.path.join(directory, 'snapshots.csv')
    manifest.add_output(directory, write_csv(path, Snapshot.columns(), [s.as_row() for s in snapshots]))


def run_decay(config: RunConfig, barrier_height: Optional[float] = None, out_dir: Optional[str] = None,
              fft_threads: Optional[int] = None) -> DecayResult:
    """Prepare at the high barrier, ramp down, propagate and analyse N(t)"""
    height = config.barrier_heights[0] if barrier_height is None else barrier_height
    directory = run_directory(config, f"decay-{height:g}nK", out_dir)
    manifest = _new_manifest(config, 'decay')
    manifest.diagnostics['barrier_nk'] = height
    obs = config['observables']
    n_atoms = config.atom_numbers[0]
    prep_height = config['ramp']['prep_barrier_nk']

    trap = config.trap(height)
    geometry = find_geometry(trap)
    solver = _solver(config, height, geometry, fft_threads or config.threads)
    logger.info(f"Decay run U0={height} nK (U_s={geometry.trap_depth:.2f} nK), N0={n_atoms:g}, "
                f"writing to {directory}")

    state = solver.ground_state(n_atoms, height=prep_height)
    manifest.diagnostics['ground_state'] = {
        'steps': solver.last_convergence.steps,
        'checks': solver.last_convergence.checks,
        'relative_change': solver.last_convergence.relative_change,
        'state_residual': solver.last_convergence.state_residual,
        'mu_nk': solver.chemical_potential(state),
    }

    pending = sorted(float(t) for t in config['run']['dump_times_ms'])

    def observer(snapshot: Snapshot, field_state) -> None:
        while pending and snapshot.time >= pending[0] - 1e-9:
            stem = f"{pending.pop(0):g}ms"
            manifest.add_output(directory, save_field(field_state, os.path.join(directory, f"field_{stem}.npz")))
            path = os.path.join(directory, f"density_{stem}.csv")
            manifest.add_output(directory, write_density_csv(field_state, path, plot_plane(field_state.grid)))

    region = Region.below('y', geometry.saddles[0][1])
    try:
        result = solver.propagate(state, config.ramp(height), region, observer)
    except NumericalError as e:
        partial = getattr(e, 'partial', None)
        if partial is not None:
            _write_snapshots(directory, manifest, partial.snapshots)
        manifest.diagnostics['error'] = str(e)
        manifest.finish('aborted')
        manifest.write(directory)
        raise
    _write_snapshots(directory, manifest, result.snapshots)

    atoms = result.series('n_trapped')
    if config['run']['noise'] > 0:
        rng = np.random.default_rng(config.seed)
        noisy = atoms.values * (1.0 + config['run']['noise'] * rng.standard_normal(len(atoms)))
        atoms = TimeSeries(atoms.times, np.maximum(noisy, np.finfo(float).tiny), atoms.kind)
    gamma = decay_rate(atoms)
    if obs['add_background']:
        gamma = TimeSeries(gamma.times, gamma.values + obs['gamma_bg'], gamma.kind)
    mu = result.series('mu_trapped')
    u_s = geometry.trap_depth

    regimes = classify_regimes(gamma, mu, u_s, obs['gamma_bg'], obs['sigma_bg'], obs['sustain'])
    fit, fit_error = None, None
    try:
        fit = fit_gamma_mu(gamma, mu, obs['gamma_bg'], u_s, obs['free_background'], obs['fit_domain'])
    except FitError as e:
        fit_error = str(e)
        logger.warning(f"Γ-μ fit skipped at U0={height} nK: {e}")

    mu_at_gamma = mu.at(gamma.times)
    rows = [(t, g, m, label) for t, g, m, label in
            zip(gamma.times.tolist(), gamma.values.tolist(), mu_at_gamma.tolist(), regimes.labels)]
    manifest.add_output(directory, write_csv(os.path.join(directory, 'gamma.csv'), GAMMA_COLUMNS, rows))

    decay = DecayResult(height, directory, geometry, result, atoms, gamma, mu, regimes, fit, fit_error)
    summary = decay.summary()
    if fit is not None:
        manifest.add_output(directory, write_json(os.path.join(directory, 'fit.json'), fit.to_dict()))
    manifest.add_output(directory, write_json(os.path.join(directory, 'summary.json'), summary))
    manifest.diagnostics.update({'trap_depth_nk': u_s, 'final_n_trapped': summary['final_n_trapped']})
    manifest.finish()
    manifest.write(directory)
    return decay


def decay_summary(config: RunConfig, height: float, out_dir: str, fft_threads: int) -> Dict[str, Any]:
    """run_decay reduced to its summary; picklable for the process pool"""
    return run_decay(config, height, out_dir, fft_threads).summary()


# β against barrier height

def transfer_beta(config: RunConfig, height: float) -> Dict[str, float]:
    """β from transfer matrices and from WKB on the saddle-point profile at one barrier height"""
    obs = config['observables']
    trap = config.trap(height)
    geometry = find_geometry(trap)
    profile = saddle_profile(trap, geometry, obs['width_convention'])
    window = default_energy_window(geometry.trap_depth, tuple(obs['beta_window_below_top_nk']))
    species = config.species()
    return {
        'barrier_nk': height,
        'trap_depth_nk': geometry.trap_depth,
        'saddle_waist_um': geometry.saddle_waist / MICROMETER,
        'beta_transfer': beta_slope(profile, window, species, obs['beta_samples']),
        'beta_wkb': beta_slope(profile, window, species, obs['beta_samples'], method='wkb'),
    }


def run_beta_comparison(config: RunConfig, out_dir: Optional[str] = None, include_gpe: bool = True) -> Dataset:
    """Paired β(U0) from GPE decay fits and from the 1D transfer-matrix model"""
    directory = run_directory(config, 'beta', out_dir)
    manifest = _new_manifest(config, 'beta')
    heights = config.barrier_heights
    single = [transfer_beta(config, h) for h in heights]

    gpe = [None] * len(heights)
    if include_gpe:
        workers, fft_threads = _split_threads(config, len(heights))
        tasks = [(config, h, os.path.join(directory, f"decay-{h:g}nK"), fft_threads) for h in heights]
        gpe = _parallel_map(decay_summary, tasks, workers)
        for task in tasks:
            manifest.add_output(directory, os.path.join(task[2], 'manifest.json'))

    rows = []
    for tm, summary in zip(single, gpe):
        fit = summary['fit'] if summary else None
        rows.append((tm['barrier_nk'], tm['trap_depth_nk'], tm['saddle_waist_um'], tm['beta_transfer'],
                     tm['beta_wkb'],
                     fit['beta'] if fit else float('nan'),
                     fit['beta_stderr'] if fit and fit['beta_stderr'] is not None else float('nan')))
    manifest.add_output(directory, write_csv(os.path.join(directory, 'beta.csv'), BETA_COLUMNS, rows))
    summary = {'barrier_heights_nk': heights, 'include_gpe': include_gpe,
               'width_convention': config['observables']['width_convention']}
    manifest.add_output(directory, write_json(os.path.join(directory, 'summary.json'), summary))
    manifest.finish()
    manifest.write(directory)
    return Dataset(directory, BETA_COLUMNS, rows, summary)


# Single-shot commands

def run_analytics(config: RunConfig, n_atoms: Optional[float] = None,
                  barrier_height: Optional[float] = None) -> Dict[str, Any]:
    trap = config.trap(barrier_height)
    n_atoms = config.atom_numbers[0] if n_atoms is None else n_atoms
    return estimate(trap, n_atoms, config.species()).to_dict()


def run_transmission(config: RunConfig, out_dir: Optional[str] = None, barrier_height: Optional[float] = None,
                     energy_range: Optional[Tuple[float, float]] = None, points: int = 41) -> Dataset:
    """(E, T, ln T) CSV and a β summary for the saddle-point profile"""
    height = config.barrier_heights[0] if barrier_height is None else barrier_height
    directory = run_directory(config, f"transmission-{height:g}nK", out_dir)
    manifest = _new_manifest(config, 'transmission')
    obs = config['observables']
    trap = config.trap(height)
    geometry = find_geometry(trap)
    profile = saddle_profile(trap, geometry, obs['width_convention'])
    window = default_energy_window(geometry.trap_depth, tuple(obs['beta_window_below_top_nk']))
    e_min, e_max = energy_range or window
    energies = np.linspace(e_min, e_max, points)
    species = config.species()
    curve = transmission_curve(profile, energies, species)
    nu = attempt_rate(trap)
    rows = [(e, t, lt, nu * t) for e, t, lt in curve.to_rows()]
    manifest.add_output(directory, write_csv(os.path.join(directory, 'transmission.csv'),
                                             TRANSMISSION_COLUMNS, rows))
    summary = transfer_beta(config, height)
    summary.update({'beta_window_nk': list(window), 'attempt_rate_hz': nu,
                    'width_convention': obs['width_convention'], 'profile_width_um': profile.width / MICROMETER})
    manifest.add_output(directory, write_json(os.path.join(directory, 'beta.json'), summary))
    manifest.finish()
    manifest.write(directory)
    return Dataset(directory, TRANSMISSION_COLUMNS, rows, summary)
