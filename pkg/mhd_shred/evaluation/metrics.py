"""
Back-projection of network outputs to full fields and the error measures
used to judge them.
"""

import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from mhd_shred.errors import ConfigurationError, DimensionError
from mhd_shred.linalg import ReducedBasis, reconstruct
from mhd_shred.dataset.bundle import DatasetBundle, RunRecord, load_physical
from mhd_shred.dataset.preprocessing import denormalize_minmax, normalize_minmax
from mhd_shred.mhdsim.storage import VELOCITY
from mhd_shred.schemas import OutputMap, ScalingParams
from mhd_shred.shred.model import ShredModel, predict_batch

ERROR_FIELDS = ("T", "u", "p")


def reconstruct_normalized(outputs: np.ndarray, bases: Mapping[str, ReducedBasis], scaling: ScalingParams,
                           output_map: OutputMap) -> Dict[str, np.ndarray]:
    """(Nt, width) scaled network outputs -> normalized fields (n_fluid, Nt) per physical field"""
    outputs = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    if outputs.shape[1] != output_map.width:
        raise DimensionError(f"Outputs have width {outputs.shape[1]}, the output map expects {output_map.width}")
    fields: Dict[str, np.ndarray] = {}
    for block in output_map.blocks:
        basis = bases[block.name]
        if block.stop - block.start != basis.rank:
            raise DimensionError(f"Block '{block.name}' has {block.stop - block.start} columns, basis rank {basis.rank}")
        ranges = scaling.latent[block.name]
        V = np.stack([
            denormalize_minmax(outputs[:, block.start + m], ranges[m], f"latent:{block.name}[{m}]")
            for m in range(basis.rank)
        ])
        X = reconstruct(basis, V)
        n_rows = X.shape[0] // len(block.fields)
        for i, name in enumerate(block.fields):
            fields[name] = X[i * n_rows:(i + 1) * n_rows]
    return fields


def reconstruct_full_state(outputs: np.ndarray, bases: Mapping[str, ReducedBasis], scaling: ScalingParams,
                           output_map: OutputMap, coords: Optional[np.ndarray] = None, rho0: float = 0.0,
                           gravity: Sequence[float] = (0.0, 0.0, 0.0)) -> Dict[str, np.ndarray]:
    """
    Physical-unit fields from network outputs.

    Unscale latents, back-project, denormalize; pressure comes back as p'
    (key 'p_prime') and, when coordinates are given, with the hydrostatic
    column re-added (key 'p').
    """
    normalized = reconstruct_normalized(outputs, bases, scaling, output_map)
    physical = {name: denormalize_minmax(values, scaling.fields[name], name) for name, values in normalized.items()}
    if "p" in physical:
        physical["p_prime"] = physical["p"]
        if coords is not None:
            column = rho0 * (np.asarray(coords) @ np.asarray(gravity, dtype=np.float64))
            physical["p"] = physical["p_prime"] + column[:, None]
    return physical


def relative_l2_error(truth: np.ndarray, recon: np.ndarray) -> np.ndarray:
    """
    Per-frame ||truth - recon|| / ||truth|| over all rows of (rows, Nt) arrays.

    Frames whose truth norm is zero are flagged with NaN.
    """
    truth = np.asarray(truth, dtype=np.float64)
    recon = np.asarray(recon, dtype=np.float64)
    if truth.shape != recon.shape:
        raise DimensionError(f"Truth {truth.shape} and reconstruction {recon.shape} differ in shape")
    if truth.ndim == 1:
        truth, recon = truth[:, None], recon[:, None]
    num = np.linalg.norm(truth - recon, axis=0)
    den = np.linalg.norm(truth, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        eps = num / den
    eps[den == 0.0] = np.nan
    return eps


def flagged_frames(eps: np.ndarray) -> List[int]:
    return [int(k) for k in np.flatnonzero(np.isnan(eps))]


def aggregate_l2_error(truth: np.ndarray, recon: np.ndarray) -> float:
    """Whole-trajectory relative error (norm over all rows and frames)"""
    den = float(np.linalg.norm(truth))
    return float(np.linalg.norm(np.asarray(truth) - np.asarray(recon)) / den) if den > 0 else float("nan")


def residual_field(truth_frame: np.ndarray, recon_frame: np.ndarray) -> np.ndarray:
    truth_frame = np.asarray(truth_frame, dtype=np.float64)
    recon_frame = np.asarray(recon_frame, dtype=np.float64)
    if truth_frame.shape != recon_frame.shape:
        raise DimensionError(f"Frames differ in shape: {truth_frame.shape} vs {recon_frame.shape}")
    return np.abs(truth_frame - recon_frame)


@dataclass(frozen=True)
class ParamMetrics:
    rmse: float
    rmse_post_burn_in: float
    max_dev_post_burn_in: float


def evaluate_param_estimation(b_hat: Optional[np.ndarray], b_true: np.ndarray, lag: int) -> ParamMetrics:
    """RMSE of the normalized |B| estimate over the whole window and after the first `lag` frames"""
    if b_hat is None:
        raise ConfigurationError("The model has no parameter-estimation head")
    b_hat = np.asarray(b_hat, dtype=np.float64)
    b_true = np.asarray(b_true, dtype=np.float64)
    if b_hat.shape != b_true.shape:
        raise DimensionError(f"Estimate {b_hat.shape} and truth {b_true.shape} differ in shape")
    dev = b_hat - b_true
    post = dev[lag:]
    return ParamMetrics(
        rmse=float(np.sqrt(np.mean(dev ** 2))),
        rmse_post_burn_in=float(np.sqrt(np.mean(post ** 2))) if post.size else float("nan"),
        max_dev_post_burn_in=float(np.max(np.abs(post))) if post.size else float("nan"),
    )


def _error_set(truth: Mapping[str, np.ndarray], recon: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
    return {
        "T": relative_l2_error(truth["T"], recon["T"]),
        "u": relative_l2_error(np.vstack([truth[c] for c in VELOCITY]), np.vstack([recon[c] for c in VELOCITY])),
        "p": relative_l2_error(truth["p"], recon["p"]),
    }


@dataclass
class ReconstructionResult:
    """Everything measured for one test trajectory"""
    name: str
    run_id: str
    drive_label: str
    times: np.ndarray
    errors: Dict[str, np.ndarray]
    errors_physical: Dict[str, np.ndarray]
    aggregate: Dict[str, float]
    truth: Dict[str, np.ndarray] = field(repr=False)
    recon: Dict[str, np.ndarray] = field(repr=False)
    b_hat: Optional[np.ndarray] = None
    b_true: Optional[np.ndarray] = None
    param: Optional[ParamMetrics] = None
    in_range: bool = True
    predict_seconds: float = 0.0
    oracle: bool = False

    @property
    def n_frames(self) -> int:
        return int(self.times.size)

    def errors_for(self, convention: str) -> Dict[str, np.ndarray]:
        return self.errors if convention == "normalized" else self.errors_physical


def in_training_range(bundle: DatasetBundle, record: RunRecord) -> bool:
    """Whether a test drive's peak magnitude lies inside the training span"""
    peaks = [r.drive.max_magnitude() for r in bundle.split_runs("train")]
    return min(peaks) - 1e-12 <= record.drive.max_magnitude() <= max(peaks) + 1e-12


def evaluate_case(model: Optional[ShredModel], bundle: DatasetBundle, record: RunRecord, name: Optional[str] = None,
                  oracle: bool = False) -> ReconstructionResult:
    """
    Reconstruct one trajectory and score it against the stored simulation.

    With `oracle`, the true scaled latents replace the network output, which
    measures the truncation floor of the bases.
    """
    sim = bundle.config.sim
    if oracle:
        outputs = record.targets
        elapsed = 0.0
    else:
        if model is None:
            raise ConfigurationError("A trained model is required unless oracle latents are used")
        batch = bundle.run_batch(record)
        started = time.perf_counter()
        outputs = predict_batch(model, batch.inputs)
        elapsed = time.perf_counter() - started

    started = time.perf_counter()
    full = reconstruct_full_state(outputs, bundle.bases, bundle.scaling, bundle.output_map)
    elapsed += time.perf_counter() - started

    # stored truth has the hydrostatic column removed, so pressure is compared as p'
    recon_phys = {n: v for n, v in full.items() if n != "p_prime"}
    recon_norm = {n: normalize_minmax(v, bundle.scaling.fields[n], n) for n, v in recon_phys.items()}
    truth_phys = {n: load_physical(record.directory, n, sim, bundle.coords) for n in recon_phys}
    truth_norm = {n: normalize_minmax(v, bundle.scaling.fields[n], n) for n, v in truth_phys.items()}

    errors = _error_set(truth_norm, recon_norm)
    errors_physical = _error_set(truth_phys, recon_phys)
    aggregate = {
        "T": aggregate_l2_error(truth_norm["T"], recon_norm["T"]),
        "u": aggregate_l2_error(np.vstack([truth_norm[c] for c in VELOCITY]),
                                np.vstack([recon_norm[c] for c in VELOCITY])),
        "p": aggregate_l2_error(truth_norm["p"], recon_norm["p"]),
    }

    b_hat = b_true = param = None
    idx = bundle.output_map.param_index
    if idx is not None:
        b_hat = np.asarray(outputs)[:, idx]
        b_true = record.targets[:, idx]
        param = evaluate_param_estimation(b_hat, b_true, bundle.config.lag)

    return ReconstructionResult(
        name=name or record.drive.label,
        run_id=record.run_id,
        drive_label=record.drive.label,
        times=record.times,
        errors=errors,
        errors_physical=errors_physical,
        aggregate=aggregate,
        truth=truth_phys,
        recon=recon_phys,
        b_hat=b_hat,
        b_true=b_true,
        param=param,
        in_range=in_training_range(bundle, record),
        predict_seconds=elapsed / max(len(record.times), 1),
        oracle=oracle,
    )
