"""
Staggered Cartesian grid with a staircase-masked cooling pipe.

Cells are indexed (i, j, k) along (x, y, z) in C order. Face-normal vector
components live on faces: x-faces have shape (nx+1, ny, nz), y-faces
(nx, ny+1, nz) and z-faces (nx, ny, nz). The z direction is cyclic, so z-face k
sits between cells k-1 (mod nz) and k.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from mhd_shred.errors import ConfigurationError, SolverError
from mhd_shred.schemas import Geometry


@dataclass(frozen=True)
class Grid:
    geometry: Geometry
    shape: Tuple[int, int, int]
    spacing: Tuple[float, float, float]
    solid: np.ndarray
    face_shapes: Tuple[Tuple[int, int, int], ...] = field(repr=False)
    face_offsets: Tuple[int, ...] = field(repr=False)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_faces(self) -> int:
        return self.face_offsets[-1]

    @property
    def fluid(self) -> np.ndarray:
        return ~self.solid

    @property
    def n_fluid(self) -> int:
        return int(np.count_nonzero(~self.solid))

    @property
    def fluid_index(self) -> np.ndarray:
        """Flat (C-order) ids of the fluid cells; defines DOF order everywhere"""
        return np.flatnonzero(~self.solid.ravel())

    @property
    def is_2d(self) -> bool:
        return self.shape[2] == 1

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        nx, ny, nz = self.shape
        hx, hy, hz = self.spacing
        a = self.geometry.side
        x = -0.5 * a + (np.arange(nx) + 0.5) * hx
        y = -0.5 * a + (np.arange(ny) + 0.5) * hy
        z = (np.arange(nz) + 0.5) * hz
        return x, y, z

    def fluid_coordinates(self) -> np.ndarray:
        """(n_fluid, 3) cell-centre coordinates in DOF order"""
        x, y, z = self.cell_centers()
        X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
        return pts[self.fluid_index]

    def to_fluid(self, cells: np.ndarray) -> np.ndarray:
        """Cell array (..., nx, ny, nz) -> fluid DOF vector (..., n_fluid)"""
        lead = cells.shape[:-3]
        return cells.reshape(*lead, -1)[..., self.fluid_index]

    def from_fluid(self, values: np.ndarray, fill: float = 0.0) -> np.ndarray:
        out = np.full(self.n_cells, fill, dtype=np.float64)
        out[self.fluid_index] = values
        return out.reshape(self.shape)

    def split_faces(self, vec: np.ndarray) -> List[np.ndarray]:
        return [vec[self.face_offsets[d]:self.face_offsets[d + 1]].reshape(self.face_shapes[d]) for d in range(3)]

    def join_faces(self, comps) -> np.ndarray:
        return np.concatenate([np.asarray(c, dtype=np.float64).ravel() for c in comps])

    def face_neighbors(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Per face: minus-side cell id, plus-side cell id (-1 at walls), axis, spacing"""
        nx, ny, nz = self.shape
        minus, plus, axes, steps = [], [], [], []
        for d in range(3):
            idx = np.indices(self.face_shapes[d]).reshape(3, -1)
            lo = idx.copy()
            lo[d] -= 1
            hi = idx.copy()
            if d == 2:
                lo[2] %= nz
                lo_ok = np.ones(idx.shape[1], dtype=bool)
                hi_ok = lo_ok
            else:
                lo_ok = lo[d] >= 0
                hi_ok = hi[d] < self.shape[d]
            lo_id = np.full(idx.shape[1], -1)
            hi_id = np.full(idx.shape[1], -1)
            lo_id[lo_ok] = np.ravel_multi_index(tuple(lo[:, lo_ok]), self.shape)
            hi_id[hi_ok] = np.ravel_multi_index(tuple(hi[:, hi_ok]), self.shape)
            minus.append(lo_id)
            plus.append(hi_id)
            axes.append(np.full(idx.shape[1], d))
            steps.append(np.full(idx.shape[1], self.spacing[d]))
        return np.concatenate(minus), np.concatenate(plus), np.concatenate(axes), np.concatenate(steps)

    def open_faces(self) -> np.ndarray:
        """Faces whose every adjacent cell is fluid (velocity may be non-zero there)"""
        minus, plus, _, _ = self.face_neighbors()
        solid = self.solid.ravel()
        blocked = ((minus >= 0) & solid[np.maximum(minus, 0)]) | ((plus >= 0) & solid[np.maximum(plus, 0)])
        return ~blocked

    def with_extra_solid(self, mask: np.ndarray) -> "Grid":
        return Grid(self.geometry, self.shape, self.spacing, self.solid | mask, self.face_shapes, self.face_offsets)


def build_grid(geometry: Geometry) -> Grid:
    """Discretize the box and mask the pipe (or channel slabs) as solid cells"""
    nx, ny, nz = geometry.nx, geometry.ny, geometry.nz
    if nx < 8 or ny < 8 or (nz < 8 and nz != 1):
        raise ConfigurationError(f"Grid {nx}x{ny}x{nz} too coarse: need >= 8 cells per axis (nz = 1 selects 2-D mode)")
    a = geometry.side
    hx, hy, hz = a / nx, a / ny, geometry.length / nz

    shape = (nx, ny, nz)
    solid = np.zeros(shape, dtype=bool)
    x = -0.5 * a + (np.arange(nx) + 0.5) * hx
    y = -0.5 * a + (np.arange(ny) + 0.5) * hy

    if geometry.kind == "pipe":
        if geometry.r_pipe >= 0.5 * a:
            raise ConfigurationError(f"Pipe radius {geometry.r_pipe} must be below a/2 = {0.5 * a}")
        if geometry.r_pipe > 0:
            cells_across = 2.0 * geometry.r_pipe / max(hx, hy)
            if cells_across < 4:
                raise ConfigurationError(
                    f"Pipe spans {cells_across:.1f} cells across its diameter; at least 4 are needed"
                )
            X, Y = np.meshgrid(x, y, indexing="ij")
            disk = X ** 2 + Y ** 2 <= geometry.r_pipe ** 2
            solid[:, :, :] = disk[:, :, None]
    else:
        s = geometry.slab_cells
        if 2 * s >= ny:
            raise ConfigurationError(f"Slabs of {s} cells leave no fluid rows in ny = {ny}")
        solid[:, :s, :] = True
        solid[:, ny - s:, :] = True

    face_shapes = ((nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz))
    sizes = [int(np.prod(s)) for s in face_shapes]
    offsets = (0, sizes[0], sizes[0] + sizes[1], sum(sizes))
    return Grid(geometry, shape, (hx, hy, hz), solid, face_shapes, offsets)


class Projector:
    """
    Face divergence / cell gradient pair and a factorized Poisson solve.

    Unknowns live on the cells selected by `unknown`. Faces between an unknown
    cell and a non-unknown cell (solid) or a wall use either a homogeneous
    Dirichlet value on the face (gradient through a half cell) or a
    homogeneous Neumann condition (zero gradient).
    """

    def __init__(self, grid: Grid, unknown: np.ndarray, solid_dirichlet: bool, wall_dirichlet: bool,
                 tolerance: float = 1e-9):
        self.grid = grid
        self.tolerance = tolerance
        unknown = unknown.ravel()
        self.cells = np.flatnonzero(unknown)
        n = self.cells.size
        col = np.full(grid.n_cells, -1)
        col[self.cells] = np.arange(n)

        minus, plus, _, h = grid.face_neighbors()
        faces = np.arange(grid.n_faces)
        cm = np.where(minus >= 0, col[np.maximum(minus, 0)], -1)
        cp = np.where(plus >= 0, col[np.maximum(plus, 0)], -1)

        rows, cols, vals = [], [], []
        both = (cm >= 0) & (cp >= 0)
        rows += [faces[both], faces[both]]
        cols += [cp[both], cm[both]]
        vals += [1.0 / h[both], -1.0 / h[both]]

        plus_only = (cp >= 0) & (cm < 0)
        minus_only = (cm >= 0) & (cp < 0)
        dirichlet_faces = 0
        for side, sign in ((plus_only, 1.0), (minus_only, -1.0)):
            other = minus if sign > 0 else plus
            at_wall = other < 0
            use = side & np.where(at_wall, wall_dirichlet, solid_dirichlet)
            dirichlet_faces += int(np.count_nonzero(use))
            rows.append(faces[use])
            cols.append((cp if sign > 0 else cm)[use])
            vals.append(sign * 2.0 / h[use])

        G = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(grid.n_faces, n)
        ).tocsr()

        # Divergence: +1/h on the minus cell of a face, -1/h on the plus cell.
        drows, dcols, dvals = [], [], []
        for c_side, sign in ((cm, 1.0), (cp, -1.0)):
            ok = c_side >= 0
            drows.append(c_side[ok])
            dcols.append(faces[ok])
            dvals.append(sign / h[ok])
        D = sp.coo_matrix(
            (np.concatenate(dvals), (np.concatenate(drows), np.concatenate(dcols))), shape=(n, grid.n_faces)
        ).tocsr()

        self.G = G
        self.D = D
        L = (D @ G).tolil()
        self.pinned = dirichlet_faces == 0
        if self.pinned:
            # Pure Neumann/cyclic: fix the gauge on the first unknown.
            L[0, :] = 0.0
            L[0, 0] = 1.0
        self.L = L.tocsc()
        self._lu = splu(self.L)

    def divergence(self, faces: np.ndarray) -> np.ndarray:
        return self.D @ faces

    def gradient(self, values: np.ndarray) -> np.ndarray:
        return self.G @ values

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.array(rhs, dtype=np.float64)
        if self.pinned:
            rhs[0] = 0.0
        x = self._lu.solve(rhs)
        residual = float(np.max(np.abs(self.L @ x - rhs), initial=0.0))
        scale = float(np.max(np.abs(rhs), initial=0.0))
        if not np.all(np.isfinite(x)) or residual > self.tolerance * scale:
            raise SolverError("Poisson solve did not converge", residual)
        return x

    def scatter(self, values: np.ndarray) -> np.ndarray:
        """Unknown vector -> full cell array (zeros elsewhere)"""
        out = np.zeros(self.grid.n_cells)
        out[self.cells] = values
        return out.reshape(self.grid.shape)


def cell_average(grid: Grid, comps) -> np.ndarray:
    """Face components -> cell-centred vector (3, nx, ny, nz)"""
    fx, fy, fz = comps
    return np.stack([
        0.5 * (fx[:-1] + fx[1:]),
        0.5 * (fy[:, :-1] + fy[:, 1:]),
        0.5 * (fz + np.roll(fz, -1, axis=2)),
    ])


def to_faces(cells: np.ndarray, axis: int) -> np.ndarray:
    """Cell scalar -> faces normal to `axis` (walls take the adjacent cell)"""
    if axis == 2:
        return 0.5 * (cells + np.roll(cells, 1, axis=2))
    pad = [(0, 0)] * 3
    pad[axis] = (1, 1)
    padded = np.pad(cells, pad, mode="edge")
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (padded[tuple(lo)] + padded[tuple(hi)])
