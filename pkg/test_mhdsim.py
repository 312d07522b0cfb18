"""Tests for the desk-scale MHD simulator."""

import math

import numpy as np
import pytest

from mhd_shred.errors import ConfigurationError, PhysicsError, TimeStepError
from mhd_shred.mhdsim import (
    FluidState,
    LowRmCurrents,
    SolverOperators,
    build_grid,
    clean_divergence,
    is_complete,
    joule_heating,
    load_series,
    lorentz_force,
    run_simulation,
    save_series,
    step_energy,
    step_induction,
    step_momentum,
    update_density,
    write_vtk,
)
from mhd_shred.mhdsim.grid import Projector
from mhd_shred.mhdsim.solver import divergence_norm, uniform_faces
from mhd_shred.schemas import Geometry, MagneticDrive, MaterialProps, SimConfig

PROPS = MaterialProps()


def _state(grid, u, T=600.0):
    T = np.full(grid.shape, T) if np.isscalar(T) else T
    return FluidState(u=u, p=np.zeros(grid.shape), T=T, rho=np.full(grid.shape, PROPS.rho0),
                      B=uniform_faces(grid, (0.0, 0.0, 0.0)))


def _zero_faces(grid):
    return [np.zeros(s) for s in grid.face_shapes]


# ============================================================================
# Grid
# ============================================================================

def test_pipe_mask_matches_analytic_area():
    """16x16 cross-section: masked disk within 2 cells of pi r^2 / h^2"""
    grid = build_grid(Geometry(nx=16, ny=16, nz=8))
    per_layer = int(np.count_nonzero(grid.solid[:, :, 0]))
    analytic = math.pi * 0.005 ** 2 / (0.02 / 16) ** 2
    assert abs(per_layer - analytic) <= 2
    assert per_layer == 52
    # contiguous cylinder along the axis
    assert all(np.array_equal(grid.solid[:, :, k], grid.solid[:, :, 0]) for k in range(8))
    assert grid.n_fluid == (256 - 52) * 8


def test_degenerate_and_invalid_pipes():
    assert build_grid(Geometry(r_pipe=0.0, nx=8, ny=8, nz=8)).n_fluid == 512
    with pytest.raises(ConfigurationError):
        build_grid(Geometry(r_pipe=0.01))
    with pytest.raises(ConfigurationError):
        build_grid(Geometry(nx=8, ny=8, nz=8, r_pipe=0.002))
    with pytest.raises(ConfigurationError):
        build_grid(Geometry(nx=4, ny=16, nz=16))


def test_two_dimensional_mode_accepts_single_layer():
    grid = build_grid(Geometry(nx=16, ny=16, nz=1))
    assert grid.is_2d
    assert grid.fluid_coordinates().shape == (grid.n_fluid, 3)


# ============================================================================
# Closures
# ============================================================================

def _ghosted(grid, fn):
    """Evaluate a (3,)-valued function on cell centres including one ghost layer"""
    hx, hy, hz = grid.spacing
    x, y, z = grid.cell_centers()
    xg = np.concatenate([[x[0] - hx], x, [x[-1] + hx]])
    yg = np.concatenate([[y[0] - hy], y, [y[-1] + hy]])
    zg = np.concatenate([[z[0] - hz], z, [z[-1] + hz]])
    X, Y, Z = np.meshgrid(xg, yg, zg, indexing="ij")
    return np.stack(fn(X, Y, Z)), X[1:-1, 1:-1, 1:-1], Y[1:-1, 1:-1, 1:-1]


def test_lorentz_force_closures():
    grid = build_grid(Geometry(r_pipe=0.0, nx=8, ny=8, nz=8))
    k = 3.0
    mu = PROPS.mu_B

    uniform, _, _ = _ghosted(grid, lambda X, Y, Z: (np.full_like(X, 0.3), np.full_like(X, 0.2), np.full_like(X, 1.0)))
    assert np.all(lorentz_force(uniform, mu, grid.spacing) == 0.0)
    assert np.all(lorentz_force(np.zeros_like(uniform), mu, grid.spacing) == 0.0)

    shear, _, Y = _ghosted(grid, lambda X, Y, Z: (np.zeros_like(X), np.zeros_like(X), k * Y))
    F = lorentz_force(shear, mu, grid.spacing)
    np.testing.assert_allclose(F[0], 0.0, atol=1e-6)
    np.testing.assert_allclose(F[1], -k * k * Y / mu, rtol=1e-10, atol=1e-6)
    np.testing.assert_allclose(F[2], 0.0, atol=1e-6)


def test_joule_heating_closures():
    grid = build_grid(Geometry(r_pipe=0.0, nx=8, ny=8, nz=8))
    k = 3.0
    sigma, mu = PROPS.sigma_el, PROPS.mu_B

    uniform, _, _ = _ghosted(grid, lambda X, Y, Z: (np.ones_like(X), np.zeros_like(X), np.zeros_like(X)))
    assert np.all(joule_heating(uniform, sigma, mu, grid.spacing) == 0.0)

    shear, _, _ = _ghosted(grid, lambda X, Y, Z: (np.zeros_like(X), np.zeros_like(X), k * Y))
    q = joule_heating(shear, sigma, mu, grid.spacing)
    np.testing.assert_allclose(q, k * k / (sigma * mu * mu), rtol=1e-10)
    np.testing.assert_allclose(joule_heating(2.0 * shear, sigma, mu, grid.spacing), 4.0 * q, rtol=1e-12)


def test_density_law():
    assert update_density(np.array([600.0]), PROPS, 600.0)[0] == pytest.approx(9806.0)
    assert update_density(np.array([560.0]), PROPS, 600.0)[0] == pytest.approx(9857.0, abs=0.05)
    flat = MaterialProps(beta=0.0)
    np.testing.assert_array_equal(update_density(np.array([300.0, 900.0]), flat, 600.0), [9806.0, 9806.0])
    with pytest.raises(PhysicsError):
        update_density(np.array([600.0 + 2.0 / 1.3e-4]), PROPS, 600.0)


def test_low_rm_currents_insulating_and_conducting_walls():
    """Uniform axial flow across a toroidal field: insulating box carries no current"""
    grid = build_grid(Geometry(r_pipe=0.0, nx=8, ny=8, nz=8))
    u0, bx = 0.01, 1.0
    u = [np.zeros(grid.face_shapes[0]), np.zeros(grid.face_shapes[1]), np.full(grid.face_shapes[2], u0)]

    J, force, joule = LowRmCurrents(grid, wall_conducting=False).solve(u, (bx, 0.0, 0.0), PROPS.sigma_el)
    scale = PROPS.sigma_el * u0 * bx
    assert np.max(np.abs(J)) <= 1e-8 * scale

    J, force, joule = LowRmCurrents(grid, wall_conducting=True).solve(u, (bx, 0.0, 0.0), PROPS.sigma_el)
    np.testing.assert_allclose(J[1], scale, rtol=1e-9)
    np.testing.assert_allclose(force[2], -PROPS.sigma_el * u0 * bx ** 2, rtol=1e-9)
    np.testing.assert_allclose(joule, PROPS.sigma_el * (u0 * bx) ** 2, rtol=1e-9)


# ============================================================================
# Divergence cleaning and induction
# ============================================================================

def test_clean_divergence_removes_pure_gradient():
    grid = build_grid(Geometry(r_pipe=0.0, nx=8, ny=8, nz=8))
    everywhere = np.ones(grid.shape, dtype=bool)
    proj = Projector(grid, everywhere, solid_dirichlet=False, wall_dirichlet=True)
    rng = np.random.default_rng(0)
    phi = rng.standard_normal(grid.n_cells)
    B = grid.split_faces(proj.gradient(phi))
    cleaned = clean_divergence(B, grid, proj)
    scale = float(np.max(np.abs(proj.gradient(phi))))
    assert max(float(np.max(np.abs(c))) for c in cleaned) <= 1e-10 * scale


def test_clean_divergence_fixed_point_and_post_condition():
    grid = build_grid(Geometry(r_pipe=0.0, nx=8, ny=8, nz=8))
    everywhere = np.ones(grid.shape, dtype=bool)
    proj = Projector(grid, everywhere, solid_dirichlet=False, wall_dirichlet=True)

    uniform = uniform_faces(grid, (0.4, -0.2, 1.1))
    for before, after in zip(uniform, clean_divergence(uniform, grid, proj)):
        np.testing.assert_allclose(after, before, atol=1e-12)

    rng = np.random.default_rng(4)
    noisy = [rng.uniform(-1.0, 1.0, s) for s in grid.face_shapes]
    once = clean_divergence(noisy, grid, proj)
    assert divergence_norm(once, grid, proj) <= 1e-10
    twice = clean_divergence(once, grid, proj)
    for a, b in zip(once, twice):
        np.testing.assert_allclose(b, a, atol=1e-12)


def _induction_setup():
    geometry = Geometry(r_pipe=0.0, nx=16, ny=16, nz=1)
    grid = build_grid(geometry)
    config = SimConfig(geometry=geometry, induction_mode="full")
    return grid, config, SolverOperators(grid, config)


def test_induction_keeps_uniform_field_at_rest():
    grid, config, ops = _induction_setup()
    B = uniform_faces(grid, (0.0, 0.0, 1.5))
    out = step_induction(B, _zero_faces(grid), 1e-8, grid, PROPS, (0.0, 0.0, 1.5), ops)
    for a, b in zip(B, out):
        np.testing.assert_allclose(b, a, atol=1e-12)


def test_induction_sine_mode_decays_at_diffusive_rate():
    grid, config, ops = _induction_setup()
    a = grid.geometry.side
    k = 2.0 * math.pi / a
    x, y, _ = grid.cell_centers()
    shape = np.outer(np.sin(k * (x + a / 2)), np.sin(k * (y + a / 2)))[:, :, None]
    B = [np.zeros(grid.face_shapes[0]), np.zeros(grid.face_shapes[1]), shape.copy()]

    rate = 2.0 * PROPS.magnetic_diffusivity * k * k
    dt = 0.003 / rate
    steps = 100
    for _ in range(steps):
        B = step_induction(B, _zero_faces(grid), dt, grid, PROPS, (0.0, 0.0, 0.0), ops)
    amplitude = float(np.sum(B[2] * shape) / np.sum(shape * shape))
    assert amplitude == pytest.approx(math.exp(-rate * dt * steps), rel=1e-2)


def test_induction_rejects_unstable_step():
    grid, config, ops = _induction_setup()
    B = uniform_faces(grid, (0.0, 0.0, 1.0))
    with pytest.raises(TimeStepError) as info:
        step_induction(B, _zero_faces(grid), 1e-3, grid, PROPS, (0.0, 0.0, 1.0), ops)
    assert info.value.suggested_dt < 1e-3


# ============================================================================
# Momentum
# ============================================================================

def test_uniform_flow_stays_uniform():
    geometry = Geometry(r_pipe=0.0, nx=8, ny=8, nz=8)
    grid = build_grid(geometry)
    ops = SolverOperators(grid, SimConfig(geometry=geometry))
    u = [np.zeros(grid.face_shapes[0]), np.zeros(grid.face_shapes[1]), np.full(grid.face_shapes[2], 0.01)]
    new_u, p = step_momentum(_state(grid, u), 0.05, grid, PROPS, ops, _zero_faces(grid))
    for before, after in zip(u, new_u):
        np.testing.assert_allclose(after, before, atol=1e-15)
    np.testing.assert_allclose(p, 0.0, atol=1e-9)


def test_momentum_cfl_violation():
    geometry = Geometry(r_pipe=0.0, nx=8, ny=8, nz=8)
    grid = build_grid(geometry)
    ops = SolverOperators(grid, SimConfig(geometry=geometry))
    u = [np.zeros(grid.face_shapes[0]), np.zeros(grid.face_shapes[1]), np.full(grid.face_shapes[2], 1.0)]
    with pytest.raises(TimeStepError):
        step_momentum(_state(grid, u), 0.1, grid, PROPS, ops, _zero_faces(grid))


def test_momentum_first_order_in_time():
    """Viscous decay of a shear mode integrated to a fixed time: Richardson ratio near 2"""
    geometry = Geometry(r_pipe=0.0, nx=16, ny=16, nz=1)
    grid = build_grid(geometry)
    ops = SolverOperators(grid, SimConfig(geometry=geometry))
    a = geometry.side
    x, _, _ = grid.cell_centers()
    profile = 1e-3 * np.cos(math.pi * (x + a / 2) / a)[:, None, None] * np.ones(grid.face_shapes[2])

    def integrate(dt, t_end=2.0):
        u = [np.zeros(grid.face_shapes[0]), np.zeros(grid.face_shapes[1]), profile.copy()]
        for _ in range(int(round(t_end / dt))):
            u, _ = step_momentum(_state(grid, u), dt, grid, PROPS, ops, _zero_faces(grid))
        return u[2]

    coarse, mid, fine = integrate(0.5), integrate(0.25), integrate(0.125)
    ratio = np.linalg.norm(coarse - mid) / np.linalg.norm(mid - fine)
    assert 1.8 < ratio < 2.2


# ============================================================================
# Energy
# ============================================================================

def test_energy_equilibrium_and_maximum_principle():
    geometry = Geometry(nx=16, ny=16, nz=1)
    grid = build_grid(geometry)
    u = _zero_faces(grid)
    alpha = PROPS.thermal_diffusivity
    dt = 0.9 / (2.0 * alpha * sum(1.0 / h ** 2 for h in grid.spacing))

    no_pipe = build_grid(Geometry(r_pipe=0.0, nx=16, ny=16, nz=1))
    T = np.full(no_pipe.shape, 600.0)
    np.testing.assert_array_equal(step_energy(T, u, dt, no_pipe, PROPS), T)

    T = np.where(grid.solid, 560.0, 600.0)
    for _ in range(400):
        T_new = step_energy(T, u, dt, grid, PROPS, T_solid=560.0)
        assert np.all(T_new <= T + 1e-12)
        assert T_new.min() >= 560.0 - 1e-12 and T_new.max() <= 600.0 + 1e-12
        T = T_new
    assert T[grid.fluid].min() < 599.0


def test_energy_rejects_unstable_step():
    grid = build_grid(Geometry(nx=16, ny=16, nz=1))
    with pytest.raises(TimeStepError):
        step_energy(np.full(grid.shape, 600.0), _zero_faces(grid), 1.0, grid, PROPS)


def _mean_boundary_radius(solid, fluid, r):
    touching = np.zeros_like(solid)
    for axis in (0, 1):
        for shift in (1, -1):
            touching |= np.roll(fluid, shift, axis=axis)
    return float(r[solid & touching].mean())


@pytest.mark.slow
def test_annulus_conduction_matches_log_profile():
    """Pure conduction between the pipe (560 K) and an outer ring (600 K)"""
    geometry = Geometry(nx=80, ny=80, nz=1, r_pipe=0.005)
    base = build_grid(geometry)
    x, y, _ = base.cell_centers()
    X, Y = np.meshgrid(x, y, indexing="ij")
    r = np.hypot(X, Y)[:, :, None]
    outer = r > 0.009
    grid = base.with_extra_solid(outer)
    T_solid = np.where(outer, 600.0, 560.0)

    alpha = PROPS.thermal_diffusivity
    dt = 0.9 / (2.0 * alpha * sum(1.0 / h ** 2 for h in grid.spacing))
    T = np.where(grid.solid, T_solid, 600.0)
    u = _zero_faces(grid)
    for _ in range(int(2.5 / dt)):
        T = step_energy(T, u, dt, grid, PROPS, T_solid=T_solid)

    fluid = grid.fluid
    ri = _mean_boundary_radius(base.solid, fluid, r)
    ro = _mean_boundary_radius(outer, fluid, r)
    analytic = 560.0 + 40.0 * np.log(r / ri) / math.log(ro / ri)
    rel = np.linalg.norm((T - analytic)[fluid]) / np.linalg.norm((analytic - 560.0)[fluid])
    assert rel <= 0.03


# ============================================================================
# Full runs
# ============================================================================

def _small_config(**overrides):
    values = dict(
        geometry=Geometry(nx=16, ny=16, nz=8),
        drive=MagneticDrive(Bx=1.0),
        t_end=0.05,
        store_dt=0.025,
    )
    values.update(overrides)
    return SimConfig(**values)


def test_zero_field_run_is_steady():
    config = SimConfig(
        geometry=Geometry(r_pipe=0.0, nx=8, ny=8, nz=8),
        drive=MagneticDrive(Bx=0.0),
        gravity=(0.0, 0.0, 0.0),
        T0=600.0,
        T_pipe=600.0,
        t_end=0.1,
        store_dt=0.05,
    )
    series = run_simulation(config)
    assert series.n_frames == 2
    for name, values in series.fields.items():
        np.testing.assert_allclose(values, values[:, :1], atol=1e-10, rtol=0)


def test_default_config_frame_count():
    assert SimConfig().frame_count == 120
    with pytest.raises(ValueError):
        SimConfig(t_end=3.0, store_dt=0.07)


def test_runs_are_deterministic_and_round_trip(tmp_path):
    config = _small_config()
    first = run_simulation(config)
    second = run_simulation(config)
    for name in first.fields:
        assert np.array_equal(first.fields[name], second.fields[name])
    assert first.diagnostics["max_divergence"] <= 1e-8
    np.testing.assert_allclose(first.drive[:, 0], 1.0)
    np.testing.assert_allclose(first.times, [0.025, 0.05])

    directory = save_series(first, tmp_path / first.run_id)
    assert is_complete(directory, config)
    assert not is_complete(directory, config.model_copy(update={"T0": 601.0}))
    loaded = load_series(directory)
    for name in first.fields:
        assert np.array_equal(loaded.fields[name], first.fields[name])
    assert np.array_equal(loaded.coords, first.coords)
    assert loaded.config == config


def test_temperature_bounded_without_joule_heating():
    series = run_simulation(_small_config(joule_heating=False, t_end=0.1))
    T = series.fields["T"]
    assert T.min() >= 560.0 - 1e-9 and T.max() <= 600.0 + 1e-9


def test_vtk_export_masks_solid_cells(tmp_path):
    config = _small_config()
    grid = build_grid(config.geometry)
    series = run_simulation(config)
    path = write_vtk(tmp_path / "frame.vtk", grid, {"T": series.fields["T"][:, -1]})
    lines = path.read_text().splitlines()
    assert f"CELL_DATA {grid.n_cells}" in lines
    values = lines[lines.index("LOOKUP_TABLE default") + 1:]
    assert len(values) == grid.n_cells
    assert sum(1 for v in values if np.isfinite(float(v))) == grid.n_fluid


@pytest.mark.slow
def test_hartmann_channel_profile():
    """Ha = 10 channel flow driven by an axial gradient against the analytic profile"""
    half_width = 0.005
    B = 10.0 / (half_width * math.sqrt(PROPS.sigma_el / PROPS.mu_visc))
    core = 0.01
    G = core * PROPS.sigma_el * B ** 2
    config = SimConfig(
        geometry=Geometry(kind="channel", side=0.0105, nx=8, ny=42, nz=1, slab_cells=1),
        drive=MagneticDrive(kind="constant-combined", Bx=0.0, By=B),
        gravity=(0.0, 0.0, 0.0),
        axial_forcing=G,
        wall_conducting=True,
        joule_heating=False,
        T0=600.0,
        T_pipe=600.0,
        u0=core,
        t_end=8.0,
        store_dt=0.5,
    )
    series = run_simulation(config)
    y = series.coords[:, 1]
    uz = series.fields["uz"][:, -1]
    ha = 10.0
    analytic = core * (1.0 - np.cosh(ha * y / half_width) / math.cosh(ha))
    assert np.linalg.norm(uz - analytic) / np.linalg.norm(analytic) <= 0.02
