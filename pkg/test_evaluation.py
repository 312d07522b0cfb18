"""Tests for reconstruction metrics and campaign reports."""

import numpy as np
import pandas as pd
import pytest

from mhd_shred.dataset import fit_range, make_splits, normalize_minmax
from mhd_shred.errors import ConfigurationError, DimensionError
from mhd_shred.evaluation import (
    ReconstructionResult,
    aggregate_l2_error,
    campaign_report,
    evaluate_case,
    evaluate_param_estimation,
    flagged_frames,
    reconstruct_full_state,
    reconstruct_normalized,
    relative_l2_error,
    residual_field,
)
from mhd_shred.evaluation.metrics import ParamMetrics
from mhd_shred.evaluation.report import SUMMARY_COLUMNS, case_slug
from mhd_shred.linalg import project, truncated_svd
from mhd_shred.schemas import AcceptanceThresholds, ChannelRange, OutputBlock, OutputMap, ScalingParams
from mhd_shred.shred import ShredArchitecture, init_model


# ============================================================================
# Error measures
# ============================================================================

def test_relative_error_oracles():
    rng = np.random.default_rng(0)
    truth = rng.standard_normal((30, 6))
    np.testing.assert_array_equal(relative_l2_error(truth, truth), np.zeros(6))
    np.testing.assert_allclose(relative_l2_error(truth, np.zeros_like(truth)), np.ones(6))
    eps = relative_l2_error(np.array([[3.0], [4.0]]), np.array([[3.0], [0.0]]))
    assert eps[0] == pytest.approx(0.8)
    assert aggregate_l2_error(truth, 0.5 * truth) == pytest.approx(0.5)


def test_zero_truth_frames_are_flagged():
    truth = np.ones((4, 3))
    truth[:, 1] = 0.0
    eps = relative_l2_error(truth, np.zeros_like(truth))
    assert np.isnan(eps[1])
    assert flagged_frames(eps) == [1]
    with pytest.raises(DimensionError):
        relative_l2_error(truth, np.zeros((4, 2)))


def test_residual_field_is_absolute_difference():
    np.testing.assert_array_equal(residual_field([1.0, -2.0], [0.5, 1.0]), [0.5, 3.0])
    with pytest.raises(DimensionError):
        residual_field([1.0], [1.0, 2.0])


def test_parameter_estimation_metrics():
    b_true = np.linspace(0.2, 0.8, 10)
    metrics = evaluate_param_estimation(b_true + 0.1, b_true, lag=3)
    assert metrics.rmse == pytest.approx(0.1)
    assert metrics.rmse_post_burn_in == pytest.approx(0.1)
    assert metrics.max_dev_post_burn_in == pytest.approx(0.1)

    early = b_true.copy()
    early[:3] += 1.0
    metrics = evaluate_param_estimation(early, b_true, lag=3)
    assert metrics.rmse_post_burn_in == 0.0
    assert metrics.rmse == pytest.approx(np.sqrt(0.3))

    with pytest.raises(ConfigurationError):
        evaluate_param_estimation(None, b_true, lag=3)


# ============================================================================
# Back-projection
# ============================================================================

def _low_rank_case(rank=2, n_rows=40, n_t=12):
    rng = np.random.default_rng(4)
    X = rng.standard_normal((n_rows, rank)) @ rng.standard_normal((rank, n_t))
    basis, _ = truncated_svd(X, rank)
    V = project(basis, X)
    ranges = [fit_range(f"latent:T[{m}]", [V[m]]) for m in range(rank)]
    outputs = np.column_stack([normalize_minmax(V[m], ranges[m]) for m in range(rank)])
    scaling = ScalingParams(fields={"T": ChannelRange(min=560.0, max=600.0),
                                    "p": ChannelRange(min=-50.0, max=50.0)},
                            latent={"T": ranges, "p": ranges})
    return X, basis, outputs, scaling


def test_exact_latents_reproduce_low_rank_fields():
    X, basis, outputs, scaling = _low_rank_case()
    output_map = OutputMap(blocks=[OutputBlock(name="T", start=0, stop=2, fields=["T"])])
    fields = reconstruct_normalized(outputs, {"T": basis}, scaling, output_map)
    np.testing.assert_allclose(fields["T"], X, atol=1e-10)

    with pytest.raises(DimensionError):
        reconstruct_normalized(outputs[:, :1], {"T": basis}, scaling, output_map)


def test_stacked_block_splits_rows_per_field():
    X, basis, outputs, scaling = _low_rank_case(n_rows=40)
    output_map = OutputMap(blocks=[OutputBlock(name="state", start=0, stop=2, fields=["T", "p"])])
    scaling.latent["state"] = scaling.latent["T"]
    fields = reconstruct_normalized(outputs, {"state": basis}, scaling, output_map)
    np.testing.assert_allclose(fields["T"], X[:20], atol=1e-10)
    np.testing.assert_allclose(fields["p"], X[20:], atol=1e-10)


def test_full_state_readds_hydrostatic_column():
    X, basis, outputs, scaling = _low_rank_case()
    output_map = OutputMap(blocks=[OutputBlock(name="p", start=0, stop=2, fields=["p"])])
    coords = np.random.default_rng(5).uniform(-0.01, 0.01, (40, 3))
    state = reconstruct_full_state(outputs, {"p": basis}, scaling, output_map, coords=coords, rho0=9806.0,
                                   gravity=(0.0, -9.81, 0.0))
    np.testing.assert_allclose(state["p_prime"], X * 100.0 - 50.0, atol=1e-8)
    column = 9806.0 * coords @ np.array([0.0, -9.81, 0.0])
    np.testing.assert_allclose(state["p"] - state["p_prime"], np.repeat(column[:, None], 12, axis=1), atol=1e-9)


# ============================================================================
# Cases on a generated campaign
# ============================================================================

@pytest.fixture(scope="module")
def bundle(tiny_campaign):
    return make_splits(tiny_campaign)


def test_oracle_latents_measure_the_truncation_floor(bundle):
    inside, outside = bundle.split_runs("test")
    result = evaluate_case(None, bundle, inside, name="oracle", oracle=True)
    assert result.oracle and result.n_frames == 4
    assert result.in_range
    assert not evaluate_case(None, bundle, outside, oracle=True).in_range
    assert result.param.rmse == 0.0
    for name in ("T", "u", "p"):
        assert np.all(np.isfinite(result.errors[name]))
        assert np.all(np.isfinite(result.errors_physical[name]))
    assert result.recon["T"].shape == result.truth["T"].shape == (bundle.coords.shape[0], 4)


def test_case_reconstruction_is_the_full_state_back_projection(bundle):
    record = bundle.split_runs("test")[0]
    result = evaluate_case(None, bundle, record, oracle=True)
    full = reconstruct_full_state(record.targets, bundle.bases, bundle.scaling, bundle.output_map)
    for name in ("T", "ux", "uy", "uz"):
        assert result.recon[name].tobytes() == full[name].tobytes()
    # pressure is scored without the hydrostatic column
    assert result.recon["p"].tobytes() == full["p_prime"].tobytes()


def test_untrained_model_case(bundle):
    config = bundle.config
    arch = ShredArchitecture.from_train_config(config.train, len(bundle.sensor_dofs), bundle.output_map.width,
                                               config.lag)
    model = init_model(arch, seed=0, output_map=bundle.output_map, scaling=bundle.scaling)
    record = bundle.split_runs("test")[0]
    result = evaluate_case(model, bundle, record)
    assert result.name == record.drive.label
    assert result.b_hat.shape == (4,)
    assert result.predict_seconds >= 0.0
    with pytest.raises(ConfigurationError):
        evaluate_case(None, bundle, record)


# ============================================================================
# Reports
# ============================================================================

def _result(name, eps, in_range=True, b_hat=None, b_true=None, lag=2):
    eps = np.asarray(eps, dtype=np.float64)
    errors = {"T": eps, "u": eps, "p": eps}
    param = evaluate_param_estimation(b_hat, b_true, lag) if b_hat is not None else None
    return ReconstructionResult(
        name=name,
        run_id=f"{name}_run",
        drive_label=name,
        times=0.025 * np.arange(1, eps.size + 1),
        errors=errors,
        errors_physical={k: 0.5 * v for k, v in errors.items()},
        aggregate={k: float(np.mean(v)) for k, v in errors.items()},
        truth={},
        recon={},
        b_hat=b_hat,
        b_true=b_true,
        param=param,
        in_range=in_range,
    )


def test_empty_report_has_header_only(tmp_path):
    report = campaign_report([], tmp_path, lag=2)
    assert (tmp_path / "summary.csv").read_text().splitlines() == [",".join(SUMMARY_COLUMNS)]
    assert report.passed
    assert "PASSED" in (tmp_path / "summary.md").read_text()


def test_perfect_reconstruction_report(tmp_path):
    report = campaign_report([_result("bx_0.75", np.zeros(6))], tmp_path, lag=2,
                             thresholds=AcceptanceThresholds(eps_T=0.06, eps_u=0.1, eps_p=0.05))
    row = report.summary.iloc[0]
    for column in ("max_eps_T", "mean_eps_u_post", "max_eps_p_phys", "aggregate_eps_T"):
        assert row[column] == 0.0
    assert report.passed
    assert report.case_files == [tmp_path / "cases" / "bx_0.75.csv"]
    assert (tmp_path / "timings.txt").is_file()


def test_summary_matches_case_tables(tmp_path):
    eps = np.array([0.5, 0.4, 0.03, 0.05, 0.02])
    report = campaign_report([_result("case A", eps)], tmp_path, lag=2)
    table = pd.read_csv(tmp_path / "cases" / f"{case_slug('case A')}.csv")
    row = report.summary.iloc[0]
    assert row["max_eps_T"] == pytest.approx(table["eps_T"].max(), rel=1e-9)
    assert row["max_eps_T_post"] == pytest.approx(0.05)
    assert row["mean_eps_T_post"] == pytest.approx(0.1 / 3)
    assert row["max_eps_T_phys"] == pytest.approx(0.25)
    assert list(table.columns[:3]) == ["frame", "t", "eps_T"]


def test_reports_are_reproducible(tmp_path):
    results = [_result("bx_0.75", [0.1, 0.05, 0.02, 0.01])]
    campaign_report(results, tmp_path / "a", lag=2)
    campaign_report(results, tmp_path / "b", lag=2)
    for name in ("summary.csv", "summary.md", "cases/bx_0.75.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_threshold_violations_use_post_burn_in_frames(tmp_path):
    thresholds = AcceptanceThresholds(eps_T=0.06, eps_u=0.10, eps_p=0.05)
    burn_in_only = _result("burn-in", [0.9, 0.9, 0.01, 0.02])
    late = _result("late", [0.01, 0.01, 0.08, 0.02])
    report = campaign_report([burn_in_only, late], tmp_path, lag=2, thresholds=thresholds)
    assert not report.passed
    assert len(report.violations) == 2
    assert all(v.startswith("late:") for v in report.violations)
    assert "FAILED" in (tmp_path / "summary.md").read_text()


def test_parameter_and_extrapolation_checks(tmp_path):
    b_true = np.full(4, 0.5)
    thresholds = AcceptanceThresholds(b_rmse=0.1, extrapolation_ratio=2.0)
    results = [
        _result("inside", [0.01] * 4, b_hat=b_true + 0.05, b_true=b_true),
        _result("outside", [0.03] * 4, in_range=False, b_hat=b_true + 0.2, b_true=b_true),
    ]
    report = campaign_report(results, tmp_path, lag=2, thresholds=thresholds)
    messages = "\n".join(report.violations)
    assert "outside: post-burn-in B RMSE" in messages
    assert "inside: post-burn-in B RMSE" not in messages
    assert "outside: extrapolation ratio for eps_T = 3.00" in messages
    table = pd.read_csv(tmp_path / "cases" / "outside.csv")
    np.testing.assert_allclose(table["B_hat"], 0.7)
    assert isinstance(results[0].param, ParamMetrics)
