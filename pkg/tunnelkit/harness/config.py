"""
Run configuration: TOML loading, presets, validation and hashing

Values are kept in user units (nK, μm, ms, μs, Hz, amu, Bohr radii) and
converted to SI only when the module-level objects are built.
"""
import copy
import math
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

from tunnelkit.config.config import OUTPUT_DIR, THREADS, logger
from tunnelkit.grid.models import Grid
from tunnelkit.solver.schedule import AbsorberConfig, RampSchedule, SolverConfig
from tunnelkit.trap.models import TrapConfig, barrier_acceleration
from tunnelkit.units.models import (
    MICROMETER, RB87_MASS_AMU, RB87_SCATTERING_LENGTH_A0, RB87_THREE_BODY, Species
)
from tunnelkit.utils.errors import ConfigError, GeometryError
from tunnelkit.utils.helpers import canonical_hash

PRESET_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'presets')
PRESETS = ('desk', 'paper3d')
HASH_EXCLUDE = ('run.output_dir', 'run.threads')
# Share of the y-axis kinetic cutoff that the fall from the saddle may use
FALL_BUDGET_FRACTION = 0.5

DEFAULTS: Dict[str, Dict[str, Any]] = {
    'run': {
        'label': 'run',
        'output_dir': OUTPUT_DIR,
        'seed': 0,
        'threads': THREADS,
        'noise': 0.0,
        'dump_times_ms': [],
    },
    'species': {
        'name': 'Rb87',
        'mass_amu': RB87_MASS_AMU,
        'scattering_length_a0': RB87_SCATTERING_LENGTH_A0,
        'three_body_constant': RB87_THREE_BODY,
    },
    'trap': {
        'omega_x_hz': 86.0,
        'omega_z_hz': 43.0,
        'g_eff': 8.4,
        'barrier_nk': 330.0,
        'waist_um': 1.3,
        'rayleigh_range_um': 8.0,
        'flat_halfwidth_um': 50.0,
        'barrier_center_um': 0.0,
        'taper_um': 10.0,
        'sheet_exponent': 1,
    },
    'grid': {
        'points': [64, 320, 128],
        'extents_um': [32.0, 32.0, 60.0],
        'centers_um': [0.0, 4.0, 0.0],
    },
    'solver': {
        'dt_us': 0.5,
        'dt_imag_us': 1.0,
        'max_steps': 200000,
        'snapshot_interval_ms': 1.0,
        'duration_ms': 600.0,
        'tolerance': 1e-8,
        'state_tolerance': 1e-6,
        'check_interval': 20,
        'three_body_loss': False,
    },
    'ramp': {
        'prep_barrier_nk': 550.0,
        'ramp_ms': 5.0,
    },
    'absorber': {
        'enabled': True,
        'onset_um': 5.0,
        'ramp_length_um': 10.0,
        'peak_nk': 500.0,
        'exponent': 4.0,
        'face_depth_um': 2.0,
    },
    'observables': {
        'gamma_bg': 0.31,
        'sigma_bg': 0.02,
        'sustain': 3,
        'add_background': True,
        'free_background': False,
        'fit_domain': 'linear',
        'width_convention': 'waist',
        'beta_window_below_top_nk': [20.0, 2.0],
        'beta_samples': 11,
    },
    'sweep': {
        'barrier_heights_nk': [290.0],
        'atom_numbers': [150000.0],
    },
}

CHOICES = {
    ('observables', 'fit_domain'): ('linear', 'log'),
    ('observables', 'width_convention'): ('waist', 'fwhm'),
}


def _check_type(section: str, key: str, value: Any, default: Any) -> Any:
    where = f"[{section}] {key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list, got {value!r}")
        return list(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        choices = CHOICES.get((section, key))
        if choices and value not in choices:
            raise ConfigError(f"{where} must be one of {choices}, got {value!r}")
        return value
    return value


def merge(base: Dict[str, Dict[str, Any]], update: Mapping[str, Any], source: str) -> Dict[str, Dict[str, Any]]:
    """Layer a parsed TOML document over base, rejecting unknown sections and keys"""
    merged = copy.deepcopy(base)
    for section, values in update.items():
        if section not in DEFAULTS:
            raise ConfigError(f"Unknown section [{section}] in {source}")
        if not isinstance(values, Mapping):
            raise ConfigError(f"[{section}] in {source} must be a table")
        for key, value in values.items():
            if key not in DEFAULTS[section]:
                raise ConfigError(f"Unknown key '{key}' in [{section}] of {source}")
            merged[section][key] = _check_type(section, key, value, DEFAULTS[section][key])
    return merged


def read_toml(path: str) -> Dict[str, Any]:
    try:
        with open(path, 'rb') as handle:
            return tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in {path}: {e}")


def preset_path(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset '{name}'; expected one of {PRESETS}")
    return os.path.join(PRESET_DIR, f'{name}.toml')


def parse_override(text: str) -> Tuple[str, str, Any]:
    """'section.key=value' with the value parsed as a TOML literal (bare words as strings)"""
    if '=' not in text or '.' not in text.split('=', 1)[0]:
        raise ConfigError(f"Override '{text}' must look like section.key=value")
    dotted, raw = text.split('=', 1)
    section, key = dotted.strip().split('.', 1)
    try:
        value = tomllib.loads(f"v = {raw.strip()}")['v']
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return section, key, value


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration in user units"""
    sections: Dict[str, Dict[str, Any]]

    def __getitem__(self, section: str) -> Dict[str, Any]:
        return self.sections[section]

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        return copy.deepcopy(self.sections)

    @property
    def config_hash(self) -> str:
        return canonical_hash(self.sections, exclude=HASH_EXCLUDE)

    @property
    def label(self) -> str:
        return self['run']['label']

    @property
    def output_dir(self) -> str:
        return self['run']['output_dir']

    @property
    def seed(self) -> int:
        return self['run']['seed']

    @property
    def threads(self) -> int:
        return max(1, self['run']['threads'])

    def replace(self, section: str, **values: Any) -> 'RunConfig':
        return RunConfig(merge(self.sections, {section: values}, 'override'))

    # Module objects

    def species(self) -> Species:
        s = self['species']
        return Species.from_user_units(s['mass_amu'], s['scattering_length_a0'],
                                       s['three_body_constant'], s['name'])

    def trap(self, barrier_height: Optional[float] = None) -> TrapConfig:
        t = self['trap']
        return TrapConfig(
            omega_x=2.0 * math.pi * t['omega_x_hz'],
            omega_z=2.0 * math.pi * t['omega_z_hz'],
            g_eff=t['g_eff'],
            barrier_height=t['barrier_nk'] if barrier_height is None else barrier_height,
            barrier_waist=t['waist_um'] * MICROMETER,
            rayleigh_range=t['rayleigh_range_um'] * MICROMETER,
            flat_halfwidth=t['flat_halfwidth_um'] * MICROMETER,
            barrier_center=t['barrier_center_um'] * MICROMETER,
            taper_length=t['taper_um'] * MICROMETER,
            sheet_exponent=t['sheet_exponent'],
            species=self.species(),
        )

    def grid(self) -> Grid:
        g = self['grid']
        if not (len(g['points']) == len(g['extents_um']) == len(g['centers_um'])):
            raise ConfigError("[grid] points, extents_um and centers_um must have the same length")
        return Grid(tuple(g['points']),
                    tuple(e * MICROMETER for e in g['extents_um']),
                    tuple(c * MICROMETER for c in g['centers_um']))

    def solver(self) -> SolverConfig:
        s = self['solver']
        return SolverConfig(
            dt=s['dt_us'] * 1e-3,
            dt_imag=s['dt_imag_us'] * 1e-3,
            max_steps=s['max_steps'],
            snapshot_interval=s['snapshot_interval_ms'],
            duration=s['duration_ms'],
            tolerance=s['tolerance'],
            state_tolerance=s['state_tolerance'],
            check_interval=s['check_interval'],
            three_body_loss=s['three_body_loss'],
        )

    def absorber(self) -> AbsorberConfig:
        a = self['absorber']
        return AbsorberConfig(
            onset=a['onset_um'] * MICROMETER,
            ramp_length=a['ramp_length_um'] * MICROMETER,
            peak=a['peak_nk'],
            exponent=a['exponent'],
            face_depth=a['face_depth_um'] * MICROMETER,
            enabled=a['enabled'],
        )

    def ramp(self, final_height: float) -> RampSchedule:
        r = self['ramp']
        return RampSchedule.linear(r['prep_barrier_nk'], final_height, r['ramp_ms'])

    @property
    def barrier_heights(self) -> List[float]:
        return [float(h) for h in self['sweep']['barrier_heights_nk']]

    @property
    def atom_numbers(self) -> List[float]:
        return [float(n) for n in self['sweep']['atom_numbers']]


def load_config(path: Optional[str] = None, preset: Optional[str] = None,
                overrides: Optional[List[str]] = None, output_dir: Optional[str] = None,
                threads: Optional[int] = None, seed: Optional[int] = None) -> RunConfig:
    """Resolve defaults, then preset, then file, then command-line values"""
    sections = copy.deepcopy(DEFAULTS)
    if preset:
        sections = merge(sections, read_toml(preset_path(preset)), f"preset '{preset}'")
    if path:
        sections = merge(sections, read_toml(path), path)
    for text in overrides or ():
        section, key, value = parse_override(text)
        sections = merge(sections, {section: {key: value}}, f"override '{text}'")
    run_values = {k: v for k, v in (('output_dir', output_dir), ('threads', threads), ('seed', seed))
                  if v is not None}
    if run_values:
        sections = merge(sections, {'run': run_values}, 'command line')
    return RunConfig(sections)


def validate(config: RunConfig) -> RunConfig:
    """Check every module precondition before any compute

    Raises ConfigError for invalid values and NonConfiningTrapError when a
    swept barrier is not steeper than gravity.
    """
    from tunnelkit.trap.saddle import find_geometry

    try:
        species = config.species()
        grid = config.grid()
        solver = config.solver()
        absorber = config.absorber()
        config.ramp(config['ramp']['prep_barrier_nk'])
        trap = config.trap()
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e))

    run = config['run']
    if run['noise'] < 0:
        raise ConfigError("[run] noise must be >= 0")
    if run['seed'] < 0:
        raise ConfigError("[run] seed must be >= 0")
    observables = config['observables']
    if observables['gamma_bg'] < 0 or observables['sigma_bg'] <= 0 or observables['sustain'] < 1:
        raise ConfigError("[observables] needs gamma_bg >= 0, sigma_bg > 0 and sustain >= 1")
    window = observables['beta_window_below_top_nk']
    if len(window) != 2 or not window[0] > window[1] > 0:
        raise ConfigError("[observables] beta_window_below_top_nk must be [far, near] with far > near > 0")
    if observables['beta_samples'] < 5:
        raise ConfigError("[observables] beta_samples must be at least 5")
    if not config.barrier_heights:
        raise ConfigError("[sweep] barrier_heights_nk must not be empty")
    if not config.atom_numbers or any(n < 0 for n in config.atom_numbers):
        raise ConfigError("[sweep] atom_numbers must be a non-empty list of non-negative numbers")

    solver.check_stability(grid, species.mass)

    y_coords = grid.coordinates('y')
    onset = absorber.onset_position(trap.barrier_center)
    fall_budget = FALL_BUDGET_FRACTION * grid.max_kinetic_energy('y', species.mass)
    heights = sorted(set(config.barrier_heights + [config['ramp']['prep_barrier_nk']]))
    for height in heights:
        barrier_acceleration(trap.with_barrier(height))
        try:
            geometry = find_geometry(trap.with_barrier(height))
        except GeometryError as e:
            raise ConfigError(f"No saddle for barrier height {height} nK: {e}")
        y_min = geometry.minimum[1]
        _, y_saddle, z_saddle = geometry.saddles[0]
        if not y_coords[0] < y_min < y_coords[-1]:
            raise ConfigError(f"Trap minimum y={y_min / MICROMETER:.2f} μm lies outside the grid")
        # the preparation barrier holds every atom, so only swept heights release any
        if height not in config.barrier_heights:
            continue
        if absorber.enabled and onset <= y_saddle + 2.0 * geometry.saddle_waist:
            raise ConfigError(f"Absorber onset {onset / MICROMETER:.2f} μm overlaps the saddle region "
                              f"at {height} nK (saddle y={y_saddle / MICROMETER:.2f} μm)")
        # the tilt is flat beyond the onset, so this is the largest energy an escaping atom picks up
        fall = geometry.saddle_energy - float(trap.with_barrier(height).evaluate(0.0, onset, z_saddle))
        if fall > fall_budget:
            raise ConfigError(f"Atoms leaving the saddle at {height} nK fall {fall:.0f} nK before the absorber "
                              f"onset; the y spacing only resolves {fall_budget:.0f} nK of it. "
                              f"Move the onset closer or refine the y axis")
    if absorber.enabled and onset >= y_coords[-1]:
        raise ConfigError(f"Absorber onset {onset / MICROMETER:.2f} μm lies beyond the grid")

    logger.info(f"Config '{config.label}' valid (hash {config.config_hash[:12]})")
    return config
