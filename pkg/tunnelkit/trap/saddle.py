"""
Critical points of the trap potential in the x = 0 plane

The minimum and the two mirror-image saddle points are first bracketed on
a coarse z scan (for each z the barrier crest and the trap-side minimum
along y are root-bracketed with brentq) and then refined with a damped
Newton iteration on the analytic (y, z) gradient.
"""
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from tunnelkit.config.config import logger
from tunnelkit.trap.models import TrapConfig, barrier_acceleration
from tunnelkit.units.models import MICROMETER, NANOKELVIN
from tunnelkit.utils.errors import GeometryError

Point = Tuple[float, float, float]


@dataclass(frozen=True)
class TrapGeometry:
    """Minimum, saddles and derived depth of a trap (SI positions, nK energies)"""
    minimum: Point
    minimum_energy: float
    saddles: Tuple[Point, Point]
    saddle_energy: float
    trap_depth: float
    barrier_acceleration: float
    reduced_acceleration: float
    saddle_waist: float

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly view in μm and nK"""
        to_um = lambda p: [c / MICROMETER for c in p]
        return {
            'minimum_um': to_um(self.minimum),
            'minimum_energy_nk': self.minimum_energy,
            'saddles_um': [to_um(p) for p in self.saddles],
            'saddle_energy_nk': self.saddle_energy,
            'trap_depth_nk': self.trap_depth,
            'barrier_acceleration': self.barrier_acceleration,
            'reduced_acceleration': self.reduced_acceleration,
            'saddle_waist_um': self.saddle_waist / MICROMETER,
        }


class PlaneCut:
    """U(0, y, z) in nK with s = y - y0 and z in μm"""

    def __init__(self, cfg: TrapConfig):
        self.cfg = cfg
        self.u0 = cfg.barrier_height
        self.w0 = cfg.barrier_waist / MICROMETER
        self.z_r = cfg.rayleigh_range / MICROMETER
        self.p = cfg.sheet_exponent
        self.c_g = cfg.mass * cfg.g_eff * MICROMETER / NANOKELVIN
        self.c_z = 0.5 * cfg.mass * cfg.omega_z ** 2 * MICROMETER ** 2 / NANOKELVIN

    def _q(self, z):
        return 1.0 + (z / self.z_r) ** 2

    def _barrier(self, s, z):
        q = self._q(z)
        return self.u0 * q ** (-0.5 * self.p) * math.exp(-2.0 * s ** 2 / (self.w0 ** 2 * q))

    def value(self, s: float, z: float) -> float:
        return self.c_z * z ** 2 - self.c_g * s + self._barrier(s, z)

    def grad(self, s: float, z: float) -> np.ndarray:
        q = self._q(z)
        b = self._barrier(s, z)
        v_s = -self.c_g - 4.0 * s * b / (self.w0 ** 2 * q)
        v_z = 2.0 * self.c_z * z + b * (z / (self.z_r ** 2 * q)) * (-self.p + 4.0 * s ** 2 / (self.w0 ** 2 * q))
        return np.array([v_s, v_z])

    def hessian(self, s: float, z: float, h: float = 1e-5) -> np.ndarray:
        g_sp, g_sm = self.grad(s + h, z), self.grad(s - h, z)
        g_zp, g_zm = self.grad(s, z + h), self.grad(s, z - h)
        hess = np.column_stack([(g_sp - g_sm) / (2 * h), (g_zp - g_zm) / (2 * h)])
        return 0.5 * (hess + hess.T)

    def local_waist(self, z: float) -> float:
        return self.w0 * math.sqrt(self._q(z))

    def crest_and_floor(self, z: float) -> Optional[Tuple[float, float]]:
        """Barrier crest and trap-side minimum along s at fixed z, or None"""
        w = self.local_waist(z)
        amplitude = self.u0 * self._q(z) ** (-0.5 * self.p)
        if 2.0 * amplitude / (w * math.sqrt(math.e)) <= self.c_g:
            return None
        v_s = lambda s: self.grad(s, z)[0]
        crest = brentq(v_s, -0.5 * w, 0.0, xtol=1e-14)
        floor = brentq(v_s, -12.0 * w, -0.5 * w, xtol=1e-14)
        return crest, floor

    @property
    def gradient_scale(self) -> float:
        return max(self.u0 / self.w0, self.c_g)


def _newton(cut: PlaneCut, start: np.ndarray, tol: float, max_iter: int = 100) -> np.ndarray:
    point = np.array(start, dtype=float)
    grad = cut.grad(*point)
    for _ in range(max_iter):
        if np.linalg.norm(grad) < tol:
            return point
        step = np.linalg.solve(cut.hessian(*point), -grad)
        for _ in range(40):
            trial = point + step
            trial_grad = cut.grad(*trial)
            if np.linalg.norm(trial_grad) < np.linalg.norm(grad):
                break
            step *= 0.5
        point, grad = trial, trial_grad
    if np.linalg.norm(grad) < tol:
        return point
    raise GeometryError(f"Newton refinement stalled at |grad|={np.linalg.norm(grad):.3e} nK/μm")


def find_geometry(cfg: TrapConfig, z_scan_points: int = 801) -> TrapGeometry:
    """Locate the trap minimum and the two saddle points in the x = 0 plane"""
    cut = PlaneCut(cfg)
    tol = 1e-9 * cut.gradient_scale

    a_b, a_bar = barrier_acceleration(cfg)
    at_center = cut.crest_and_floor(0.0)
    if at_center is None:
        raise GeometryError(f"No barrier-side critical points for U0={cfg.barrier_height} nK")

    minimum = _newton(cut, np.array([at_center[1], 0.0]), tol)
    hess_min = np.linalg.eigvalsh(cut.hessian(*minimum))
    if np.any(hess_min <= 0):
        raise GeometryError("Refined minimum is not a local minimum")

    # Crest energy along z; the saddle is where it is lowest
    z_values = np.linspace(0.0, 6.0 * cut.z_r, z_scan_points)
    crest_energy = []
    crest_s = []
    for z in z_values:
        found = cut.crest_and_floor(z)
        if found is None:
            break
        crest_s.append(found[0])
        crest_energy.append(cut.value(found[0], z))
    crest_energy = np.asarray(crest_energy)
    best = int(np.argmin(crest_energy))
    if best == len(crest_energy) - 1 and len(crest_energy) < len(z_values):
        raise GeometryError("Saddle not bracketed: crest energy keeps falling until the barrier vanishes")

    saddle = _newton(cut, np.array([crest_s[best], z_values[best]]), tol)
    saddle[1] = abs(saddle[1])
    hess_saddle = np.linalg.eigvalsh(cut.hessian(*saddle))
    if np.count_nonzero(hess_saddle < 0) != 1:
        raise GeometryError(f"Refined point is not a first-order saddle (eigenvalues {hess_saddle})")

    y0 = cfg.barrier_center
    min_energy = cut.value(*minimum)
    saddle_energy = cut.value(*saddle)
    y_min = y0 + minimum[0] * MICROMETER
    y_sad = y0 + saddle[0] * MICROMETER
    z_sad = saddle[1] * MICROMETER
    geometry = TrapGeometry(
        minimum=(0.0, y_min, minimum[1] * MICROMETER),
        minimum_energy=float(cfg.evaluate(0.0, y_min, minimum[1] * MICROMETER)),
        saddles=((0.0, y_sad, z_sad), (0.0, y_sad, -z_sad)),
        saddle_energy=float(cfg.evaluate(0.0, y_sad, z_sad)),
        trap_depth=float(saddle_energy - min_energy),
        barrier_acceleration=a_b,
        reduced_acceleration=a_bar,
        saddle_waist=float(cfg.waist_at(z_sad)),
    )
    logger.info(f"Trap geometry at U0={cfg.barrier_height:.1f} nK: U_s={geometry.trap_depth:.2f} nK, "
                f"saddles at y={y_sad / MICROMETER:.3f} μm, z=±{z_sad / MICROMETER:.3f} μm")
    return geometry
