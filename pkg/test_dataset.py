"""Tests for preprocessing, campaign presets and dataset bundles."""

import math

import numpy as np
import pytest

from mhd_shred.dataset import (
    audit_bundle,
    build_lagged_sequences,
    denormalize_minmax,
    extract_sensor_series,
    fit_range,
    load_preset,
    make_splits,
    normalize_minmax,
    remove_hydrostatic,
    resolve_sensors,
    save_bundle,
    stack_parametric,
)
from mhd_shred.errors import (
    ConfigurationError,
    DataError,
    DimensionError,
    MissingRunsError,
    ScalingError,
    SensorPlacementError,
)
from mhd_shred.linalg import read_dmx
from mhd_shred.mhdsim import build_grid
from mhd_shred.schemas import ChannelRange, ExperimentConfig, Geometry, MagneticDrive, SplitSpec

from conftest import tiny_config


# ============================================================================
# Pressure and scaling
# ============================================================================

def test_remove_hydrostatic_recovers_dynamic_pressure():
    rng = np.random.default_rng(1)
    coords = rng.uniform(-0.01, 0.01, (20, 3))
    g = (0.0, -9.81, 0.0)
    dynamic = rng.standard_normal((20, 4))
    column = 9806.0 * coords @ np.asarray(g)
    p = dynamic + column[:, None]
    np.testing.assert_allclose(remove_hydrostatic(p, 9806.0, g, coords), dynamic, atol=1e-9)
    np.testing.assert_allclose(remove_hydrostatic(p[:, 0], 9806.0, g, coords), dynamic[:, 0], atol=1e-9)


def test_minmax_endpoints_and_inverse():
    rng = ChannelRange(min=560.0, max=600.0)
    np.testing.assert_allclose(normalize_minmax([560.0, 580.0, 600.0], rng), [0.0, 0.5, 1.0])
    values = np.random.default_rng(2).uniform(500.0, 650.0, 50)
    back = denormalize_minmax(normalize_minmax(values, rng), rng)
    np.testing.assert_allclose(back, values, rtol=1e-12)
    # test data outside the fitted range is never clipped
    assert normalize_minmax([620.0], rng)[0] == pytest.approx(1.5)


def test_degenerate_range_raises_scaling_error():
    with pytest.raises(ScalingError) as info:
        fit_range("ux", [np.zeros((4, 3)), np.zeros((4, 2))])
    assert info.value.channel == "ux"
    with pytest.raises(ScalingError):
        normalize_minmax([1.0], ChannelRange(min=2.0, max=2.0), "T")
    fitted = fit_range("T", [np.array([[1.0, 3.0]]), np.array([[-2.0]])])
    assert (fitted.min, fitted.max) == (-2.0, 3.0)


def test_stack_parametric_keeps_run_blocks():
    a = np.ones((6, 3))
    b = 2.0 * np.ones((6, 5))
    stacked = stack_parametric([a, b], ["run_a", "run_b"])
    assert stacked.matrix.shape == (6, 8)
    assert stacked.columns == [("run_a", 0, 3), ("run_b", 3, 8)]
    np.testing.assert_array_equal(stacked.block("run_b"), b)
    with pytest.raises(DimensionError):
        stack_parametric([a, np.ones((5, 2))])
    with pytest.raises(DimensionError):
        stack_parametric([])


# ============================================================================
# Sensors
# ============================================================================

def _dof(grid, ijk):
    return int(np.searchsorted(grid.fluid_index, np.ravel_multi_index(ijk, grid.shape)))


def test_default_sensors_resolve_to_distinct_fluid_cells():
    grid = build_grid(Geometry())
    dofs = resolve_sensors(grid, ExperimentConfig().sensors.positions)
    expected = [_dof(grid, ijk) for ijk in [(13, 9, 28), (12, 6, 25), (5, 11, 3)]]
    assert list(dofs) == expected


def test_sensor_at_cell_centre_reads_that_cell():
    grid = build_grid(Geometry())
    x, y, z = grid.cell_centers()
    dofs = resolve_sensors(grid, [(x[1], y[2], z[3])])
    assert dofs[0] == _dof(grid, (1, 2, 3))

    field = np.arange(grid.n_fluid * 4, dtype=np.float64).reshape(grid.n_fluid, 4)
    series = extract_sensor_series(field, dofs)
    assert series.shape == (4, 1)
    np.testing.assert_array_equal(series[:, 0], field[dofs[0]])


def test_sensor_inside_pipe_is_rejected():
    grid = build_grid(Geometry())
    with pytest.raises(SensorPlacementError):
        resolve_sensors(grid, [(0.0, 0.0, 0.03)])


def test_sensor_on_pipe_edge_moves_to_fluid_neighbour():
    grid = build_grid(Geometry())
    x, y, z = grid.cell_centers()
    nx, ny, _ = grid.shape
    # first solid cell that touches fluid along +x
    i, j = next((i, j) for i in range(nx - 1) for j in range(ny)
                if grid.solid[i, j, 4] and not grid.solid[i + 1, j, 4])
    dof = resolve_sensors(grid, [(x[i], y[j], z[4])])[0]
    ii, jj, kk = np.unravel_index(grid.fluid_index[dof], grid.shape)
    assert not grid.solid[ii, jj, kk]
    assert max(abs(ii - i), abs(jj - j), abs(kk - 4)) == 1


def test_sensors_sharing_a_cell_are_rejected():
    grid = build_grid(Geometry())
    with pytest.raises(SensorPlacementError):
        resolve_sensors(grid, [(0.0070, 0.0014, 0.0617), (0.0071, 0.0013, 0.0616)])


# ============================================================================
# Lag windows
# ============================================================================

def test_lagged_windows_shapes_and_front_padding():
    n_t, lag = 120, 30
    # frame 0 is nonzero so repeating it differs from zero padding
    series = np.arange(1.0, n_t + 1.0)[:, None]
    targets = np.random.default_rng(3).standard_normal((n_t, 5))
    batch = build_lagged_sequences(series, targets, lag)
    assert batch.inputs.shape == (n_t, lag, 1)
    assert batch.targets.shape == (n_t, 5)
    np.testing.assert_array_equal(batch.inputs[0, :, 0], np.full(lag, 1.0))
    np.testing.assert_array_equal(batch.inputs[5, :, 0], np.r_[np.full(lag - 6, 1.0), np.arange(1.0, 7.0)])
    np.testing.assert_array_equal(batch.inputs[-1, :, 0], np.arange(n_t - lag + 1.0, n_t + 1.0))
    np.testing.assert_array_equal(batch.frame, np.arange(n_t))


def test_constant_series_gives_constant_windows():
    series = np.full((10, 3), 0.25)
    batch = build_lagged_sequences(series, np.zeros((10, 2)), lag=4)
    assert np.all(batch.inputs == 0.25)


def test_lagged_windows_reject_mismatched_targets():
    with pytest.raises(DimensionError):
        build_lagged_sequences(np.zeros((10, 3)), np.zeros((9, 2)), lag=4)


# ============================================================================
# Presets and overrides
# ============================================================================

def test_toroidal_preset_tables():
    config = load_preset("toroidal")
    assert [d.Bx for d in config.splits.test] == [0.75, 1.85, 2.5]
    assert len(config.splits.train) == 7 and len(config.splits.validation) == 2
    assert config.thresholds.eps_T == 0.06


def test_combined_preset_test_drive():
    drive = load_preset("combined").splits.test[0]
    assert drive.max_magnitude() == pytest.approx(1.662, abs=1e-3)
    assert drive.angle_deg == pytest.approx(15.71, abs=0.01)


def test_oscillating_preset_tables():
    config = load_preset("oscillating")
    assert (len(config.splits.train), len(config.splits.validation), len(config.splits.test)) == (9, 4, 3)
    case_a = config.splits.test[0]
    assert case_a.magnitude_at(0.0) == pytest.approx(1.7)
    assert case_a.omega == pytest.approx(2.0 * math.pi / 0.8)
    assert all(d.C - abs(d.A) > 0 for d in config.splits.all_drives())


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        load_preset("poloidal")


def test_overrides_reach_nested_keys():
    config = load_preset("toroidal").with_overrides({
        "rank": "3",
        "sim.geometry.nx": "24",
        "train.decoder_widths": "32,64",
        "param_estimation": "true",
        "splits.test": "toroidal:0.8;combined:1.0/0.3",
    })
    assert config.rank == 3
    assert config.sim.geometry.nx == 24
    assert tuple(config.train.decoder_widths) == (32, 64)
    assert config.param_estimation is True
    assert config.splits.test[1] == MagneticDrive(kind="constant-combined", Bx=1.0, By=0.3)
    with pytest.raises(ConfigurationError):
        config.with_overrides({"sim.not_a_key": "1"})
    with pytest.raises(ConfigurationError):
        config.with_overrides({"rank": "0"})


def test_sensor_positions_override():
    config = load_preset("toroidal").with_overrides({
        "sensors.positions": "0.007,0.0014,0.0617; -0.0027,0.0045,0.0066",
    })
    assert config.sensors.positions == [(0.007, 0.0014, 0.0617), (-0.0027, 0.0045, 0.0066)]
    with pytest.raises(ConfigurationError):
        config.with_overrides({"sensors.positions": "0.007,0.0014"})
    with pytest.raises(ConfigurationError):
        config.with_overrides({"sensors.positions": "0.007,north,0.06"})


def test_drive_parsing():
    assert MagneticDrive.parse("toroidal:1.5").Bx == 1.5
    drive = MagneticDrive.parse("sinusoidal:0.5/7.85/1.57/1.2")
    assert drive.kind == "sinusoidal-toroidal"
    with pytest.raises(ConfigurationError):
        MagneticDrive.parse("toroidal:abc")
    with pytest.raises(ConfigurationError):
        MagneticDrive.parse("sinusoidal:2/1/0/1")


def test_overlapping_splits_are_rejected():
    spec = SplitSpec(train=[MagneticDrive(Bx=1.0)], test=[MagneticDrive(Bx=1.0)])
    with pytest.raises(ConfigurationError):
        spec.check_disjoint()


# ============================================================================
# Bundles
# ============================================================================

def test_missing_runs_are_listed(tmp_path):
    config = tiny_config(tmp_path)
    with pytest.raises(MissingRunsError) as info:
        make_splits(config)
    assert len(info.value.missing) == 5


def test_bundle_shapes_and_scaling(tiny_campaign):
    bundle = make_splits(tiny_campaign)
    assert bundle.output_map.width == 5 * 2 + 1
    assert bundle.output_map.param_index == 10
    assert len(bundle.split_runs("train")) == 2
    assert set(bundle.fit_runs) == {r.run_id for r in bundle.runs if r.split != "test"}

    fit = [r for r in bundle.runs if r.split != "test"]
    targets = np.vstack([r.targets for r in fit])
    # latent and parameter columns are scaled over train + validation only
    np.testing.assert_allclose(targets.min(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(targets.max(axis=0), 1.0, atol=1e-12)

    batch = bundle.batch("train")
    assert batch.inputs.shape == (2 * 4, tiny_campaign.lag, 3)
    for record in bundle.runs:
        assert record.sensors.shape == (4, 3)
        assert record.targets.shape == (4, 11)


def test_stacked_basis_mode(tiny_campaign):
    bundle = make_splits(tiny_campaign.model_copy(update={"basis_mode": "stacked", "param_estimation": False}))
    assert [b.name for b in bundle.output_map.blocks] == ["state"]
    assert bundle.output_map.width == 2
    assert bundle.bases["state"].U.shape[0] == 5 * bundle.coords.shape[0]


def test_saved_bundle_passes_audit_and_detects_tampering(tiny_campaign, tmp_path):
    bundle = make_splits(tiny_campaign)
    directory = save_bundle(bundle, tmp_path / "bundle")
    report = audit_bundle(directory)
    assert (report["train"], report["validation"], report["test"]) == (2, 1, 2)
    assert report["files_checked"] == 5 + 5

    record = bundle.split_runs("test")[0]
    np.testing.assert_array_equal(read_dmx(directory / "latent" / f"{record.run_id}.dmx"), record.targets)

    manifest = directory / "split_manifest.txt"
    text = manifest.read_text()
    leaked = text.replace("fit_runs=", f"fit_runs={record.run_id},")
    manifest.write_text(leaked)
    with pytest.raises(DataError, match="test runs used for fitting"):
        audit_bundle(directory)

    manifest.write_text(text)
    basis = directory / "basis" / "T.dmx"
    raw = basis.read_bytes()
    basis.write_bytes(raw[:-1] + bytes([raw[-1] ^ 0xFF]))
    with pytest.raises(DataError, match="hash mismatch"):
        audit_bundle(directory)
