"""
Closures: Lorentz force, Joule heating, Boussinesq density and the
low-magnetic-Reynolds current solve used by the quasi-static induction mode.
"""

from typing import Sequence, Tuple

import numpy as np

from mhd_shred.errors import DimensionError, PhysicsError
from mhd_shred.mhdsim.grid import Grid, Projector, cell_average, to_faces
from mhd_shred.schemas import MaterialProps


def _check_ghosted(B: np.ndarray) -> None:
    if B.ndim != 4 or B.shape[0] != 3 or min(B.shape[1:]) < 3:
        raise DimensionError(f"Expected a (3, nx+2, ny+2, nz+2) ghosted field, got shape {B.shape}")


def curl_central(F: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    """Second-order central curl of a ghosted cell field; returns interior cells only"""
    _check_ghosted(F)
    hx, hy, hz = spacing

    def d(comp: int, axis: int, h: float) -> np.ndarray:
        lo = [slice(1, -1)] * 3
        hi = [slice(1, -1)] * 3
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        return (F[comp][tuple(hi)] - F[comp][tuple(lo)]) / (2.0 * h)

    return np.stack([
        d(2, 1, hy) - d(1, 2, hz),
        d(0, 2, hz) - d(2, 0, hx),
        d(1, 0, hx) - d(0, 1, hy),
    ])


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Component-first cross product; either operand may be a length-3 constant"""
    ax, ay, az = a[0], a[1], a[2]
    bx, by, bz = b[0], b[1], b[2]
    return np.stack(np.broadcast_arrays(ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx))


def lorentz_force(B: np.ndarray, mu_B: float, spacing: Sequence[float]) -> np.ndarray:
    """F = (curl B / mu_B) x B on interior cells [N/m^3]"""
    J = curl_central(B, spacing) / mu_B
    return cross(J, B[:, 1:-1, 1:-1, 1:-1])


def joule_heating(B: np.ndarray, sigma: float, mu_B: float, spacing: Sequence[float]) -> np.ndarray:
    """q = |curl B / mu_B|^2 / sigma on interior cells [W/m^3]"""
    J = curl_central(B, spacing) / mu_B
    return np.sum(J * J, axis=0) / sigma


def update_density(T: np.ndarray, props: MaterialProps, T0: float) -> np.ndarray:
    rho = props.rho0 * (1.0 - props.beta * (np.asarray(T, dtype=np.float64) - T0))
    if np.any(rho <= 0):
        raise PhysicsError(f"Non-positive density: temperature {np.max(T):.1f} K is outside the linear law's range")
    return rho


def pad_cells(field: np.ndarray, wall_value: Sequence[float]) -> np.ndarray:
    """
    Ghost a (3, nx, ny, nz) cell field: Dirichlet `wall_value` on the x and y
    walls (mirrored through the wall face), cyclic along z.
    """
    out = np.pad(field, ((0, 0), (1, 1), (1, 1), (0, 0)), mode="edge")
    for c in range(3):
        w = wall_value[c]
        out[c, 0, 1:-1] = 2.0 * w - field[c, 0]
        out[c, -1, 1:-1] = 2.0 * w - field[c, -1]
        out[c, :, 0] = 2.0 * w - out[c, :, 1]
        out[c, :, -1] = 2.0 * w - out[c, :, -2]
    return np.concatenate([out[..., -1:], out, out[..., :1]], axis=3)


class LowRmCurrents:
    """
    Induced currents for an imposed uniform field.

    J = sigma (-grad(phi) + u x B0) with div J = 0. The pipe is a perfect
    conductor (phi = 0); the box walls are insulating (J.n = 0) unless
    `wall_conducting`.
    """

    def __init__(self, grid: Grid, wall_conducting: bool):
        self.grid = grid
        self.projector = Projector(grid, grid.fluid, solid_dirichlet=True, wall_dirichlet=wall_conducting)
        minus, plus, _, _ = grid.face_neighbors()
        fluid = grid.fluid.ravel()
        touches_fluid = ((minus >= 0) & fluid[np.maximum(minus, 0)]) | ((plus >= 0) & fluid[np.maximum(plus, 0)])
        at_wall = (minus < 0) | (plus < 0)
        self.carries = touches_fluid & (wall_conducting | ~at_wall)

    def solve(self, u_faces, B0: Sequence[float], sigma: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (J, force, joule) as cell arrays, zero in the solid"""
        grid = self.grid
        uc = cell_average(grid, u_faces)
        E = cross(uc, np.asarray(B0, dtype=np.float64).reshape(3, 1, 1, 1))
        e_faces = grid.join_faces([to_faces(E[d], d) for d in range(3)]) * self.carries
        phi = self.projector.solve(self.projector.divergence(e_faces))
        j_faces = sigma * (e_faces - self.projector.gradient(phi))
        J = cell_average(grid, grid.split_faces(j_faces)) * grid.fluid
        force = cross(J, np.asarray(B0, dtype=np.float64).reshape(3, 1, 1, 1)) * grid.fluid
        joule = np.sum(J * J, axis=0) / sigma
        return J, force, joule
