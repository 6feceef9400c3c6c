"""
Field snapshot and density-slice export
"""
import os
from typing import Dict, Optional

import numpy as np

from tunnelkit.config.config import logger
from tunnelkit.grid.models import FieldState, Grid
from tunnelkit.units.models import MICROMETER
from tunnelkit.utils.helpers import write_csv

FIELD_FORMAT_VERSION = 1


def save_field(field: FieldState, path: str) -> str:
    """Write grid metadata and row-major amplitudes to a .npz archive"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    grid = field.grid
    np.savez(
        path,
        format_version=FIELD_FORMAT_VERSION,
        axes=np.array(grid.axes),
        points=np.array(grid.points),
        extents=np.array(grid.extents),
        centers=np.array(grid.centers),
        time_ms=field.time,
        barrier_nk=field.barrier_height,
        values=np.ascontiguousarray(field.values),
    )
    # np.savez appends the suffix when it is missing
    saved = path if path.endswith('.npz') else path + '.npz'
    logger.info(f"Saved field at t={field.time:.3f} ms to {saved}")
    return saved


def load_field(path: str) -> FieldState:
    with np.load(path) as data:
        version = int(data['format_version'])
        if version != FIELD_FORMAT_VERSION:
            raise ValueError(f"Unsupported field format version {version}")
        grid = Grid(tuple(int(n) for n in data['points']),
                    tuple(float(e) for e in data['extents']),
                    tuple(float(c) for c in data['centers']))
        return FieldState(grid, data['values'], float(data['time_ms']), float(data['barrier_nk']))


def density_slice(field: FieldState, fixed: Optional[Dict[str, float]] = None) -> Dict[str, np.ndarray]:
    """|ψ|² on the grid with the axes in `fixed` pinned at the nearest grid coordinate

    Returns the remaining axis coordinates (μm) and the sliced density (m^-d).
    """
    fixed = fixed or {}
    grid = field.grid
    index = []
    kept = {}
    for axis in grid.axes:
        coords = grid.coordinates(axis)
        if axis in fixed:
            index.append(int(np.argmin(np.abs(coords - fixed[axis]))))
        else:
            index.append(slice(None))
            kept[axis] = coords / MICROMETER
    unknown = set(fixed) - set(grid.axes)
    if unknown:
        raise ValueError(f"Cannot fix axes {sorted(unknown)} on a {grid.dims}D grid")
    if len(kept) > 2:
        raise ValueError("A density slice keeps at most two axes")
    kept['density'] = field.density[tuple(index)]
    return kept


def write_density_csv(field: FieldState, path: str, fixed: Optional[Dict[str, float]] = None) -> str:
    """Long-format CSV of a 1D or 2D density slice: one row per grid point"""
    sliced = density_slice(field, fixed)
    density = sliced.pop('density')
    axes = list(sliced)
    mesh = np.meshgrid(*[sliced[a] for a in axes], indexing='ij')
    columns = [f'{a}_um' for a in axes] + ['density']
    rows = zip(*[m.ravel() for m in mesh], density.ravel())
    return write_csv(path, columns, rows)


def plot_plane(grid: Grid) -> Optional[Dict[str, float]]:
    """Axes pinned for plotting: the y-z plane at x = 0 on 3D grids, nothing otherwise"""
    return {'x': 0.0} if grid.dims == 3 else None


def export_density(field_path: str, out_path: Optional[str] = None) -> str:
    """Density CSV in the plotting plane for a saved field; next to the .npz by default"""
    field = load_field(field_path)
    out_path = out_path or os.path.splitext(field_path)[0] + '_density.csv'
    return write_density_csv(field, out_path, plot_plane(field.grid))
