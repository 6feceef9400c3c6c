"""
Barrier ramp schedules, absorber and solver settings
"""
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from tunnelkit.grid.models import Grid
from tunnelkit.utils.errors import ConfigError

Segment = Tuple[float, float, float]


@dataclass(frozen=True)
class RampSchedule:
    """Piecewise-linear barrier height U0(t) in nK

    Each segment is (duration ms, start nK, end nK); after the last segment
    the height stays at the last end value.
    """
    segments: Tuple[Segment, ...]

    def __post_init__(self):
        segments = tuple(tuple(float(v) for v in s) for s in self.segments)
        if not segments:
            raise ValueError("RampSchedule needs at least one segment")
        for duration, start, end in segments:
            if duration < 0:
                raise ValueError(f"Ramp segment duration must be >= 0, got {duration}")
            if start < 0 or end < 0:
                raise ValueError(f"Ramp heights must be >= 0, got {start} -> {end}")
        object.__setattr__(self, 'segments', segments)

    @classmethod
    def hold(cls, height: float) -> 'RampSchedule':
        return cls(((0.0, height, height),))

    @classmethod
    def linear(cls, start: float, end: float, duration: float) -> 'RampSchedule':
        return cls(((duration, start, end),))

    @property
    def total_duration(self) -> float:
        return sum(s[0] for s in self.segments)

    @property
    def initial_height(self) -> float:
        return self.segments[0][1]

    @property
    def final_height(self) -> float:
        return self.segments[-1][2]

    def height_at(self, t: float) -> float:
        """Barrier height at time t (ms) since the ramp started"""
        elapsed = 0.0
        for duration, start, end in self.segments:
            if t < elapsed + duration:
                frac = (t - elapsed) / duration if duration > 0 else 1.0
                return start + (end - start) * max(frac, 0.0)
            elapsed += duration
        return self.final_height


@dataclass(frozen=True)
class AbsorberConfig:
    """Complex absorbing potential -iW

    The main absorber starts `onset` beyond the barrier centre along +y and
    rises as peak·clamp((y - y_on)/ramp_length)^exponent. Thin absorbers of
    depth `face_depth` line every other grid face. Lengths in m, peak in nK.
    """
    onset: float = 5e-6
    ramp_length: float = 10e-6
    peak: float = 500.0
    exponent: float = 4.0
    face_depth: float = 2e-6
    enabled: bool = True

    def __post_init__(self):
        if self.onset <= 0 or self.ramp_length <= 0:
            raise ValueError("Absorber onset and ramp length must be positive")
        if self.peak < 0:
            raise ValueError(f"Absorber strength must be >= 0, got {self.peak}")
        if self.exponent <= 0 or self.face_depth < 0:
            raise ValueError("Absorber exponent must be positive and face depth >= 0")

    def onset_position(self, barrier_center: float) -> float:
        return barrier_center + self.onset

    def _ramp(self, distance, length):
        return self.peak * np.clip(distance / length, 0.0, 1.0) ** self.exponent

    def profile(self, grid: Grid, barrier_center: float = 0.0) -> np.ndarray:
        """W on the grid in nK; zeros when disabled"""
        if not self.enabled or self.peak == 0:
            return np.zeros(grid.shape)
        y = grid.mesh['y']
        absorb = np.broadcast_to(self._ramp(y - self.onset_position(barrier_center), self.ramp_length),
                                 grid.shape).copy()
        if self.face_depth > 0:
            for i, axis in enumerate(grid.axes):
                coords = grid.mesh[axis]
                half = 0.5 * grid.extents[i]
                lower = grid.centers[i] - half + self.face_depth
                absorb = np.maximum(absorb, self._ramp(lower - coords, self.face_depth))
                upper = grid.centers[i] + half - grid.spacing[i] - self.face_depth
                absorb = np.maximum(absorb, self._ramp(coords - upper, self.face_depth))
        return absorb


@dataclass(frozen=True)
class SolverConfig:
    """Time steps and budgets; times in ms

    tolerance bounds |Δμ|/μ per imaginary-time step and state_tolerance bounds
    ‖ψ − ψ_prev‖/‖ψ‖ per step, both evaluated every `check_interval` steps.
    """
    dt: float = 0.0005
    dt_imag: float = 0.001
    max_steps: int = 200000
    snapshot_interval: float = 1.0
    duration: float = 600.0
    tolerance: float = 1e-8
    state_tolerance: float = 1e-6
    check_interval: int = 20
    three_body_loss: bool = False
    stability_margin: float = 0.5

    def __post_init__(self):
        for name in ('dt', 'dt_imag', 'snapshot_interval', 'tolerance', 'state_tolerance',
                     'stability_margin'):
            if not getattr(self, name) > 0:
                raise ValueError(f"SolverConfig.{name} must be positive, got {getattr(self, name)}")
        if self.duration < 0:
            raise ValueError(f"SolverConfig.duration must be >= 0, got {self.duration}")
        if self.max_steps < 1 or self.check_interval < 1:
            raise ValueError("max_steps and check_interval must be at least 1")

    @property
    def steps_per_snapshot(self) -> int:
        return max(1, int(round(self.snapshot_interval / self.dt)))

    @property
    def real_time_steps(self) -> int:
        return int(math.ceil(self.duration / self.dt - 1e-9))

    def check_stability(self, grid: Grid, mass: float) -> None:
        limit = grid.stable_time_step(mass, self.stability_margin)
        if self.dt >= limit:
            raise ConfigError(f"dt={self.dt} ms exceeds the stability bound {limit:.4g} ms for this grid")
