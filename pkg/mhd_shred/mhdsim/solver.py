"""
Explicit time integration of the coupled induction / momentum / energy system.

Velocity and (full-induction) magnetic field are face-normal components on the
staggered grid; temperature and pressure are cell-centred. The box walls are
far-field boundaries held at p_ext; the pipe is no-slip, isothermal at T_pipe
and electrically conducting.
"""

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from mhd_shred.errors import PhysicsError, ShredToolkitError, SimulationError, TimeStepError
from mhd_shred.mhdsim.grid import Grid, Projector, build_grid, cell_average, to_faces
from mhd_shred.mhdsim.physics import (
    LowRmCurrents,
    curl_central,
    joule_heating,
    lorentz_force,
    pad_cells,
    update_density,
)
from mhd_shred.mhdsim.storage import FIELDS, SnapshotSeries
from mhd_shred.schemas import MaterialProps, SimConfig


@dataclass
class FluidState:
    u: List[np.ndarray]
    p: np.ndarray
    T: np.ndarray
    rho: np.ndarray
    B: List[np.ndarray]
    time: float = 0.0

    def cell_velocity(self, grid: Grid) -> np.ndarray:
        return cell_average(grid, self.u)

    def cell_field(self, grid: Grid) -> np.ndarray:
        return cell_average(grid, self.B)


class SolverOperators:
    """Factorized operators shared by every step of one run"""

    def __init__(self, grid: Grid, config: SimConfig):
        self.grid = grid
        self.pressure = Projector(grid, grid.fluid, solid_dirichlet=False, wall_dirichlet=True)
        self.blocked = [~open_ for open_ in grid.split_faces(grid.open_faces())]
        self.currents = LowRmCurrents(grid, config.wall_conducting) if config.induction_mode == "quasi-static" else None
        self._cleaner: Optional[Projector] = None

    @property
    def cleaner(self) -> Projector:
        if self._cleaner is None:
            everywhere = np.ones(self.grid.shape, dtype=bool)
            self._cleaner = Projector(self.grid, everywhere, solid_dirichlet=False, wall_dirichlet=True)
        return self._cleaner


def _neighbors(q: np.ndarray, axis: int, comp: int, blocked: Optional[np.ndarray] = None,
               wall: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lower/upper neighbours of face component `comp` along `axis`.

    Box walls: zero gradient, or Dirichlet `wall` (mirrored) across the wall
    for transverse directions. Solid: no-slip mirror across a blocked
    transverse neighbour.
    """
    if axis == 2:
        lo = np.roll(q, 1, axis=2)
        hi = np.roll(q, -1, axis=2)
        lo_blk = np.roll(blocked, 1, axis=2) if blocked is not None else None
        hi_blk = np.roll(blocked, -1, axis=2) if blocked is not None else None
    else:
        pad = [(0, 0)] * 3
        pad[axis] = (1, 1)
        padded = np.pad(q, pad, mode="edge")
        n = q.shape[axis]
        lo = np.take(padded, np.arange(0, n), axis=axis)
        hi = np.take(padded, np.arange(2, n + 2), axis=axis)
        if wall is not None and axis != comp:
            first = [slice(None)] * 3
            last = [slice(None)] * 3
            first[axis] = slice(0, 1)
            last[axis] = slice(n - 1, n)
            lo[tuple(first)] = 2.0 * wall - q[tuple(first)]
            hi[tuple(last)] = 2.0 * wall - q[tuple(last)]
        if blocked is not None:
            bpad = np.pad(blocked, pad, mode="constant", constant_values=False)
            lo_blk = np.take(bpad, np.arange(0, n), axis=axis)
            hi_blk = np.take(bpad, np.arange(2, n + 2), axis=axis)
    if blocked is not None and axis != comp:
        lo = np.where(lo_blk & ~blocked, -q, lo)
        hi = np.where(hi_blk & ~blocked, -q, hi)
    return lo, hi


def _max_speeds(u: Sequence[np.ndarray]) -> np.ndarray:
    return np.array([float(np.max(np.abs(c), initial=0.0)) for c in u])


def stable_dt(state: FluidState, grid: Grid, config: SimConfig, b_max: float) -> Tuple[float, str]:
    """Tightest explicit stability bound (times the safety factor) and its name"""
    props = config.material
    h = np.asarray(grid.spacing)
    inv2 = float(np.sum(1.0 / h ** 2))
    speeds = _max_speeds(state.u)
    bounds: Dict[str, float] = {
        "thermal": 1.0 / (float(np.sum(speeds / h)) + 2.0 * props.thermal_diffusivity * inv2),
        "viscous": 1.0 / (4.0 * props.kinematic_viscosity * inv2),
    }
    if np.any(speeds > 0):
        bounds["advection"] = config.cfl * float(np.min(h[speeds > 0] / speeds[speeds > 0]))
    if b_max > 0:
        bounds["magnetic damping"] = props.rho0 / (props.sigma_el * b_max ** 2)
    if config.induction_mode == "full":
        bounds["induction"] = 1.0 / (2.0 * props.magnetic_diffusivity * inv2)
    name = min(bounds, key=bounds.get)
    return config.safety * bounds[name], name


def step_momentum(state: FluidState, dt: float, grid: Grid, props: MaterialProps, ops: SolverOperators,
                  forces: Sequence[np.ndarray], cfl: float = 0.5) -> Tuple[List[np.ndarray], np.ndarray]:
    """
    Upwind advection + explicit viscosity + body forces, then projection.

    `forces` are face arrays [N/m^3]. Returns (divergence-free face velocity,
    dynamic pressure on cells).
    """
    h = grid.spacing
    speeds = _max_speeds(state.u)
    courant = float(np.max(speeds * dt / np.asarray(h)))
    if courant > cfl * (1.0 + 1e-12):
        safe = cfl * float(np.min(np.asarray(h)[speeds > 0] / speeds[speeds > 0]))
        raise TimeStepError(f"Courant number {courant:.3f} exceeds {cfl}", safe)

    nu = props.kinematic_viscosity
    uc = state.cell_velocity(grid)
    u_star = []
    for d in range(3):
        q = state.u[d]
        blocked = ops.blocked[d]
        rate = forces[d] / props.rho0
        for e in range(3):
            lo, hi = _neighbors(q, e, d, blocked)
            v = q if e == d else to_faces(uc[e], d)
            rate = rate - np.where(v > 0, v * (q - lo), v * (hi - q)) / h[e]
            rate = rate + nu * (lo + hi - 2.0 * q) / h[e] ** 2
        qs = q + dt * rate
        qs[blocked] = 0.0
        u_star.append(qs)

    flat = grid.join_faces(u_star)
    proj = ops.pressure
    p = proj.solve(proj.divergence(flat) * (props.rho0 / dt))
    flat = flat - proj.gradient(p) * (dt / props.rho0)
    return grid.split_faces(flat), proj.scatter(p)


def step_energy(T: np.ndarray, u: Sequence[np.ndarray], dt: float, grid: Grid, props: MaterialProps,
                source: Optional[np.ndarray] = None, T_solid=560.0) -> np.ndarray:
    """
    Upwind advection-diffusion of temperature with an optional volumetric
    source [W/m^3]. Solid cells hold `T_solid` (scalar or cell array) and act
    as Dirichlet neighbours; box walls are adiabatic.
    """
    alpha = props.thermal_diffusivity
    h = grid.spacing
    limit = 1.0 / (2.0 * alpha * sum(1.0 / hd ** 2 for hd in h))
    if dt > limit * (1.0 + 1e-12):
        raise TimeStepError(f"Thermal step {dt:.3g} s exceeds the diffusion bound", limit)

    solid = grid.solid
    held = np.broadcast_to(np.asarray(T_solid, dtype=np.float64), grid.shape)
    Tg = np.where(solid, held, T)
    uc = cell_average(grid, u)
    rate = np.zeros(grid.shape) if source is None else source / (props.rho0 * props.c_p)
    for e in range(3):
        lo, hi = _neighbors(Tg, e, e)
        rate = rate - np.where(uc[e] > 0, uc[e] * (Tg - lo), uc[e] * (hi - Tg)) / h[e]
        rate = rate + alpha * (lo + hi - 2.0 * Tg) / h[e] ** 2
    return np.where(solid, held, Tg + dt * rate)


def clean_divergence(B: Sequence[np.ndarray], grid: Grid, projector: Optional[Projector] = None) -> List[np.ndarray]:
    """Remove the gradient part of a face field: B - grad(psi), lap(psi) = div B, psi = 0 on the walls"""
    if projector is None:
        projector = Projector(grid, np.ones(grid.shape, dtype=bool), solid_dirichlet=False, wall_dirichlet=True)
    flat = grid.join_faces(B)
    psi = projector.solve(projector.divergence(flat))
    return grid.split_faces(flat - projector.gradient(psi))


def divergence_norm(faces: Sequence[np.ndarray], grid: Grid, projector: Projector) -> float:
    """max |div| * h_min / max |component|, 0 for a zero field"""
    flat = grid.join_faces(faces)
    scale = float(np.max(np.abs(flat), initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(projector.divergence(flat)), initial=0.0)) * min(grid.spacing) / scale


def step_induction(B: Sequence[np.ndarray], u: Sequence[np.ndarray], dt: float, grid: Grid, props: MaterialProps,
                   B_wall: Sequence[float], ops: SolverOperators) -> List[np.ndarray]:
    """dB/dt = curl(u x B) + eta lap(B), walls held at B_wall, then divergence cleaning"""
    eta = props.magnetic_diffusivity
    h = grid.spacing
    limit = 1.0 / (2.0 * eta * sum(1.0 / hd ** 2 for hd in h))
    if dt > limit * (1.0 + 1e-12):
        raise TimeStepError(f"Induction step {dt:.3g} s exceeds the magnetic diffusion bound", limit)

    uc = cell_average(grid, u)
    Bc = cell_average(grid, B)
    E = np.stack([
        uc[1] * Bc[2] - uc[2] * Bc[1],
        uc[2] * Bc[0] - uc[0] * Bc[2],
        uc[0] * Bc[1] - uc[1] * Bc[0],
    ])
    Eg = np.pad(E, ((0, 0), (1, 1), (1, 1), (0, 0)), mode="edge")
    Eg = np.concatenate([Eg[..., -1:], Eg, Eg[..., :1]], axis=3)
    stretch = curl_central(Eg, h)

    new = []
    for d in range(3):
        q = B[d]
        rate = to_faces(stretch[d], d)
        for e in range(3):
            lo, hi = _neighbors(q, e, d, wall=B_wall[d])
            rate = rate + eta * (lo + hi - 2.0 * q) / h[e] ** 2
        qn = q + dt * rate
        if d == 0:
            qn[0], qn[-1] = B_wall[0], B_wall[0]
        elif d == 1:
            qn[:, 0], qn[:, -1] = B_wall[1], B_wall[1]
        new.append(qn)
    return clean_divergence(new, grid, ops.cleaner)


def uniform_faces(grid: Grid, value: Sequence[float]) -> List[np.ndarray]:
    return [np.full(grid.face_shapes[d], float(value[d])) for d in range(3)]


def initial_state(grid: Grid, config: SimConfig) -> FluidState:
    blocked = [~o for o in grid.split_faces(grid.open_faces())]
    uz = np.full(grid.face_shapes[2], config.u0)
    uz[blocked[2]] = 0.0
    u = [np.zeros(grid.face_shapes[0]), np.zeros(grid.face_shapes[1]), uz]
    T = np.where(grid.solid, config.T_pipe, config.T0)
    return FluidState(
        u=u,
        p=np.zeros(grid.shape),
        T=T,
        rho=update_density(T, config.material, config.T0),
        B=uniform_faces(grid, config.drive.field_at(0.0)),
        time=0.0,
    )


def advance(state: FluidState, dt: float, grid: Grid, config: SimConfig, ops: SolverOperators) -> FluidState:
    """One explicit step of the coupled system"""
    props = config.material
    t_new = state.time + dt

    force = None
    joule = None
    if config.induction_mode == "full":
        B = step_induction(state.B, state.u, dt, grid, props, config.drive.field_at(t_new), ops)
        Bc = cell_average(grid, B)
        if np.any(Bc != 0.0):
            Bg = pad_cells(Bc, config.drive.field_at(t_new))
            force = lorentz_force(Bg, props.mu_B, grid.spacing) * grid.fluid
            joule = joule_heating(Bg, props.sigma_el, props.mu_B, grid.spacing) * grid.fluid
    else:
        B0 = config.drive.field_at(state.time)
        B = uniform_faces(grid, B0)
        if any(b != 0.0 for b in B0):
            _, force, joule = ops.currents.solve(state.u, B0, props.sigma_el)

    buoyancy = (state.rho - props.rho0) * grid.fluid
    forces = []
    for d in range(3):
        cell_force = buoyancy * config.gravity[d]
        if force is not None:
            cell_force = cell_force + force[d]
        face_force = to_faces(cell_force, d)
        if d == 2 and config.axial_forcing:
            face_force = face_force + config.axial_forcing
        forces.append(face_force)

    u, p = step_momentum(state, dt, grid, props, ops, forces, config.cfl)
    T = step_energy(state.T, u, dt, grid, props, joule if config.joule_heating else None, config.T_pipe)
    if not (np.all(np.isfinite(T)) and all(np.all(np.isfinite(c)) for c in u)):
        raise PhysicsError(f"Non-finite state at t = {t_new:.6g} s")
    rho = update_density(T, props, config.T0)
    return FluidState(u=u, p=p, T=T, rho=rho, B=B, time=t_new)


def advance_to(state: FluidState, t_target: float, grid: Grid, config: SimConfig,
               ops: SolverOperators) -> Tuple[FluidState, int]:
    """Equal sub-steps from state.time to t_target under the current stability bound"""
    span = t_target - state.time
    dt_max, _ = stable_dt(state, grid, config, config.drive.max_magnitude())
    n_sub = max(1, math.ceil(span / dt_max - 1e-9))
    dt = span / n_sub
    for _ in range(n_sub):
        state = advance(state, dt, grid, config, ops)
    return replace(state, time=t_target), n_sub


def frame_values(state: FluidState, grid: Grid, config: SimConfig) -> Dict[str, np.ndarray]:
    """Fluid-cell values of the stored fields; pressure includes p_ext and the hydrostatic column"""
    uc = state.cell_velocity(grid)
    coords = grid.fluid_coordinates()
    hydrostatic = config.material.rho0 * (coords @ np.asarray(config.gravity))
    return {
        "T": grid.to_fluid(state.T),
        "ux": grid.to_fluid(uc[0]),
        "uy": grid.to_fluid(uc[1]),
        "uz": grid.to_fluid(uc[2]),
        "p": config.p_ext + hydrostatic + grid.to_fluid(state.p),
    }


def run_simulation(config: SimConfig, debug: bool = False,
                   progress: Optional[Callable[[int, int], None]] = None) -> SnapshotSeries:
    """
    Integrate from t = 0 to t_end, storing frames at (k+1) * store_dt.

    Any failure inside a frame is re-raised as SimulationError carrying the
    frame index.
    """
    grid = build_grid(config.geometry)
    ops = SolverOperators(grid, config)
    state = initial_state(grid, config)
    n_frames = config.frame_count

    frames = {name: np.empty((grid.n_fluid, n_frames)) for name in FIELDS}
    drive = np.empty((n_frames, 3))
    times = np.empty(n_frames)
    max_div = 0.0
    steps = 0

    started = time.perf_counter()
    for k in range(n_frames):
        t_target = (k + 1) * config.store_dt
        try:
            state, n_sub = advance_to(state, t_target, grid, config, ops)
        except ShredToolkitError as e:
            raise SimulationError(k, e) from e
        steps += n_sub
        for name, values in frame_values(state, grid, config).items():
            frames[name][:, k] = values
        bx, by, _ = config.drive.field_at(t_target)
        drive[k] = (bx, by, config.drive.magnitude_at(t_target))
        times[k] = t_target
        div = divergence_norm(state.u, grid, ops.pressure)
        max_div = max(max_div, div)
        if debug:
            print(f"[DEBUG] frame {k + 1}/{n_frames} t={t_target:.3f}s sub-steps={n_sub} "
                  f"T=[{frames['T'][:, k].min():.2f}, {frames['T'][:, k].max():.2f}] div(u)={div:.2e}")
        if progress is not None:
            progress(k + 1, n_frames)

    return SnapshotSeries(
        config=config,
        times=times,
        fields=frames,
        drive=drive,
        coords=grid.fluid_coordinates(),
        wall_time=time.perf_counter() - started,
        diagnostics={"max_divergence": max_div, "steps": float(steps)},
    )
