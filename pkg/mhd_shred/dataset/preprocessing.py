"""
Field preprocessing: hydrostatic removal, min-max scaling, parametric
stacking, sensor sampling and lag windows.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from mhd_shred.errors import DimensionError, ScalingError, SensorPlacementError
from mhd_shred.linalg import as_dense
from mhd_shred.mhdsim.grid import Grid
from mhd_shred.schemas import ChannelRange


def remove_hydrostatic(p: np.ndarray, rho0: float, g: Sequence[float], coords: np.ndarray) -> np.ndarray:
    """p' = p - rho0 * (g . x); p is (n_cells,) or (n_cells, Nt)"""
    p = np.asarray(p, dtype=np.float64)
    column = rho0 * (np.asarray(coords, dtype=np.float64) @ np.asarray(g, dtype=np.float64))
    return p - (column[:, None] if p.ndim == 2 else column)


def fit_range(channel: str, blocks: Iterable[np.ndarray]) -> ChannelRange:
    """Min-max range over the given blocks; degenerate ranges raise ScalingError"""
    lo, hi = np.inf, -np.inf
    for block in blocks:
        block = np.asarray(block)
        if block.size:
            lo = min(lo, float(np.min(block)))
            hi = max(hi, float(np.max(block)))
    if not hi > lo:
        raise ScalingError(channel)
    return ChannelRange(min=lo, max=hi)


def normalize_minmax(values: np.ndarray, rng: ChannelRange, channel: str = "field") -> np.ndarray:
    if not rng.max > rng.min:
        raise ScalingError(channel)
    return (np.asarray(values, dtype=np.float64) - rng.min) / (rng.max - rng.min)


def denormalize_minmax(values: np.ndarray, rng: ChannelRange, channel: str = "field") -> np.ndarray:
    if not rng.max > rng.min:
        raise ScalingError(channel)
    return np.asarray(values, dtype=np.float64) * (rng.max - rng.min) + rng.min


@dataclass(frozen=True)
class StackedSnapshots:
    """Column-wise concatenation of trajectories; columns[i] = (run_id, start, stop)"""
    matrix: np.ndarray
    columns: List[Tuple[str, int, int]]

    def block(self, run_id: str) -> np.ndarray:
        for rid, start, stop in self.columns:
            if rid == run_id:
                return self.matrix[:, start:stop]
        raise KeyError(run_id)


def stack_parametric(trajectories: Sequence[np.ndarray], run_ids: Optional[Sequence[str]] = None) -> StackedSnapshots:
    if not trajectories:
        raise DimensionError("Nothing to stack")
    blocks = [as_dense(t, "trajectory") for t in trajectories]
    rows = blocks[0].shape[0]
    for b in blocks:
        if b.shape[0] != rows:
            raise DimensionError(f"Trajectory has {b.shape[0]} rows, expected {rows}")
    ids = list(run_ids) if run_ids is not None else [str(i) for i in range(len(blocks))]
    columns, start = [], 0
    for rid, b in zip(ids, blocks):
        columns.append((rid, start, start + b.shape[1]))
        start += b.shape[1]
    return StackedSnapshots(np.concatenate(blocks, axis=1), columns)


def resolve_sensors(grid: Grid, positions: Sequence[Sequence[float]]) -> np.ndarray:
    """
    Map sensor coordinates to fluid-DOF indices.

    Nearest cell centre; a solid hit falls back to the closest fluid cell
    among its 26 neighbours.
    """
    nx, ny, nz = grid.shape
    hx, hy, hz = grid.spacing
    a = grid.geometry.side
    xc, yc, zc = grid.cell_centers()
    dof = np.full(grid.n_cells, -1)
    dof[grid.fluid_index] = np.arange(grid.n_fluid)

    resolved = []
    for pos in positions:
        x, y, z = (float(v) for v in pos)
        i = int(np.clip(np.floor((x + 0.5 * a) / hx), 0, nx - 1))
        j = int(np.clip(np.floor((y + 0.5 * a) / hy), 0, ny - 1))
        k = int(np.clip(np.floor(z / hz), 0, nz - 1))
        if grid.solid[i, j, k]:
            best, best_d = None, np.inf
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    for dk in (-1, 0, 1):
                        ii, jj, kk = i + di, j + dj, (k + dk) % nz
                        if not (0 <= ii < nx and 0 <= jj < ny) or grid.solid[ii, jj, kk]:
                            continue
                        d = (xc[ii] - x) ** 2 + (yc[jj] - y) ** 2 + (zc[kk] - z) ** 2
                        if d < best_d:
                            best, best_d = (ii, jj, kk), d
            if best is None:
                raise SensorPlacementError(f"Sensor at {tuple(pos)} lies inside the pipe with no fluid neighbour")
            i, j, k = best
        resolved.append(int(dof[np.ravel_multi_index((i, j, k), grid.shape)]))
    if len(set(resolved)) != len(resolved):
        raise SensorPlacementError(f"Sensors {list(positions)} do not resolve to distinct cells: {resolved}")
    return np.asarray(resolved)


def extract_sensor_series(field: np.ndarray, sensor_dofs: Sequence[int]) -> np.ndarray:
    """(n_fluid, Nt) field -> (Nt, n_sensors) readings"""
    field = np.asarray(field, dtype=np.float64)
    return field[np.asarray(sensor_dofs), :].T.copy()


@dataclass(frozen=True)
class LaggedBatch:
    """inputs (N, lag, n_sensors); targets (N, width); one sample per frame"""
    inputs: np.ndarray
    targets: np.ndarray
    trajectory: np.ndarray
    frame: np.ndarray

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @staticmethod
    def concat(batches: Sequence["LaggedBatch"]) -> "LaggedBatch":
        return LaggedBatch(
            inputs=np.concatenate([b.inputs for b in batches]),
            targets=np.concatenate([b.targets for b in batches]),
            trajectory=np.concatenate([b.trajectory for b in batches]),
            frame=np.concatenate([b.frame for b in batches]),
        )


def build_lagged_sequences(series: np.ndarray, targets: np.ndarray, lag: int = 30, trajectory: int = 0) -> LaggedBatch:
    """
    Window k covers frames [k - lag + 1, k]; early frames are front-padded
    by repeating frame 0.
    """
    series = np.asarray(series, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if series.ndim != 2 or series.shape[0] < 1:
        raise DimensionError(f"series must be (Nt >= 1, n_sensors), got {series.shape}")
    if targets.shape[0] != series.shape[0]:
        raise DimensionError(f"{targets.shape[0]} targets for {series.shape[0]} frames")
    n_t = series.shape[0]
    padded = np.concatenate([np.repeat(series[:1], lag - 1, axis=0), series])
    windows = np.lib.stride_tricks.sliding_window_view(padded, (lag, series.shape[1]))[:, 0]
    return LaggedBatch(
        inputs=np.ascontiguousarray(windows[:n_t]),
        targets=targets.reshape(n_t, -1).copy(),
        trajectory=np.full(n_t, trajectory),
        frame=np.arange(n_t),
    )
