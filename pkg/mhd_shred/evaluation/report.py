"""
Campaign reports.

    <out>/cases/<case>.csv     per-frame errors (both conventions), B_hat / B_true with the param head
    <out>/summary.csv          one row per case
    <out>/summary.md           readable summary and acceptance verdict
    <out>/timings.txt          wall-clock numbers (kept apart so the other files are reproducible)
"""

import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from mhd_shred.evaluation.metrics import ERROR_FIELDS, ReconstructionResult
from mhd_shred.manifest import write_manifest
from mhd_shred.schemas import AcceptanceThresholds

CONVENTIONS = ("normalized", "physical")


def _suffix(convention: str) -> str:
    return "" if convention == "normalized" else "_phys"


def _summary_columns() -> List[str]:
    columns = ["case", "run_id", "drive", "in_range", "oracle", "frames"]
    for convention in CONVENTIONS:
        s = _suffix(convention)
        for name in ERROR_FIELDS:
            columns += [f"max_eps_{name}{s}", f"mean_eps_{name}{s}",
                        f"max_eps_{name}_post{s}", f"mean_eps_{name}_post{s}"]
    columns += [f"aggregate_eps_{name}" for name in ERROR_FIELDS]
    columns += ["b_rmse", "b_rmse_post", "b_max_dev_post"]
    return columns


SUMMARY_COLUMNS = _summary_columns()


def _nan_stat(values: np.ndarray, fn) -> float:
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    return float(fn(values)) if values.size else float("nan")


def case_slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "case"


def case_frame(result: ReconstructionResult) -> pd.DataFrame:
    """Per-frame error table of one test trajectory"""
    data: Dict[str, np.ndarray] = {"frame": np.arange(result.n_frames), "t": result.times}
    for convention in CONVENTIONS:
        errors = result.errors_for(convention)
        for name in ERROR_FIELDS:
            data[f"eps_{name}{_suffix(convention)}"] = errors[name]
    if result.b_hat is not None:
        data["B_hat"] = result.b_hat
        data["B_true"] = result.b_true
    return pd.DataFrame(data)


def summarize_case(result: ReconstructionResult, lag: int) -> Dict[str, object]:
    row: Dict[str, object] = {
        "case": result.name,
        "run_id": result.run_id,
        "drive": result.drive_label,
        "in_range": bool(result.in_range),
        "oracle": bool(result.oracle),
        "frames": result.n_frames,
    }
    for convention in CONVENTIONS:
        s = _suffix(convention)
        errors = result.errors_for(convention)
        for name in ERROR_FIELDS:
            eps = errors[name]
            row[f"max_eps_{name}{s}"] = _nan_stat(eps, np.max)
            row[f"mean_eps_{name}{s}"] = _nan_stat(eps, np.mean)
            row[f"max_eps_{name}_post{s}"] = _nan_stat(eps[lag:], np.max)
            row[f"mean_eps_{name}_post{s}"] = _nan_stat(eps[lag:], np.mean)
    for name in ERROR_FIELDS:
        row[f"aggregate_eps_{name}"] = result.aggregate[name]
    param = result.param
    row["b_rmse"] = param.rmse if param else float("nan")
    row["b_rmse_post"] = param.rmse_post_burn_in if param else float("nan")
    row["b_max_dev_post"] = param.max_dev_post_burn_in if param else float("nan")
    return row


def summary_frame(results: Sequence[ReconstructionResult], lag: int) -> pd.DataFrame:
    return pd.DataFrame([summarize_case(r, lag) for r in results], columns=SUMMARY_COLUMNS)


def extrapolation_ratios(summary: pd.DataFrame, convention: str = "normalized") -> Dict[str, Dict[str, float]]:
    """Post-burn-in mean error of each out-of-range case over the in-range mean, per field"""
    if summary.empty:
        return {}
    s = _suffix(convention)
    inside = summary[summary["in_range"]]
    outside = summary[~summary["in_range"]]
    if inside.empty or outside.empty:
        return {}
    ratios: Dict[str, Dict[str, float]] = {}
    for _, row in outside.iterrows():
        ratios[row["case"]] = {}
        for name in ERROR_FIELDS:
            column = f"mean_eps_{name}_post{s}"
            reference = float(inside[column].mean())
            ratios[row["case"]][name] = float(row[column]) / reference if reference > 0 else float("nan")
    return ratios


def check_thresholds(summary: pd.DataFrame, thresholds: AcceptanceThresholds) -> List[str]:
    """Human-readable list of every violated acceptance limit"""
    violations: List[str] = []
    s = _suffix(thresholds.convention)
    limits = {"T": thresholds.eps_T, "u": thresholds.eps_u, "p": thresholds.eps_p}
    for _, row in summary.iterrows():
        for name, limit in limits.items():
            if limit is None:
                continue
            value = float(row[f"max_eps_{name}_post{s}"])
            if not value <= limit:
                violations.append(f"{row['case']}: post-burn-in max eps_{name} = {value:.4f} > {limit:.4f}")
        if thresholds.b_rmse is not None and np.isfinite(row["b_rmse_post"]):
            if row["b_rmse_post"] > thresholds.b_rmse:
                violations.append(
                    f"{row['case']}: post-burn-in B RMSE = {row['b_rmse_post']:.4f} > {thresholds.b_rmse:.4f}"
                )
    if thresholds.extrapolation_ratio is not None:
        for case, ratios in extrapolation_ratios(summary, thresholds.convention).items():
            for name, ratio in ratios.items():
                if np.isfinite(ratio) and ratio > thresholds.extrapolation_ratio:
                    violations.append(
                        f"{case}: extrapolation ratio for eps_{name} = {ratio:.2f} > {thresholds.extrapolation_ratio:.2f}"
                    )
    return violations


@dataclass
class CampaignReport:
    directory: Path
    summary: pd.DataFrame
    violations: List[str] = field(default_factory=list)
    case_files: List[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _markdown(summary: pd.DataFrame, lag: int, thresholds: AcceptanceThresholds, violations: List[str],
              ratios: Mapping[str, Mapping[str, float]], title: str) -> str:
    s = _suffix(thresholds.convention)
    content = f"""# {title}

## Report Settings
- **Error convention for acceptance:** {thresholds.convention} (per-frame relative L2; velocity uses the joint three-component norm; pressure has the hydrostatic column removed)
- **Burn-in excluded from post statistics:** first {lag} frames
- **Test cases:** {len(summary)}

## Errors per Case
| Case | In range | max eps_T | max eps_u | max eps_p | post max eps_T | post max eps_u | post max eps_p | B RMSE (post) |
|---|---|---|---|---|---|---|---|---|
"""
    for _, row in summary.iterrows():
        content += (
            f"| {row['case']} | {'yes' if row['in_range'] else 'no'} "
            f"| {row[f'max_eps_T{s}']:.4f} | {row[f'max_eps_u{s}']:.4f} | {row[f'max_eps_p{s}']:.4f} "
            f"| {row[f'max_eps_T_post{s}']:.4f} | {row[f'max_eps_u_post{s}']:.4f} | {row[f'max_eps_p_post{s}']:.4f} "
            f"| {row['b_rmse_post']:.4f} |\n"
        )

    content += "\n## Whole-Trajectory Aggregate (normalized)\n"
    for _, row in summary.iterrows():
        content += (f"- {row['case']}: eps_T {row['aggregate_eps_T']:.4f}, eps_u {row['aggregate_eps_u']:.4f}, "
                    f"eps_p {row['aggregate_eps_p']:.4f}\n")

    if ratios:
        content += "\n## Extrapolation Ratios (post-burn-in mean vs in-range mean)\n"
        for case, values in ratios.items():
            content += f"- {case}: " + ", ".join(f"{k} {v:.2f}" for k, v in values.items()) + "\n"

    content += "\n## Acceptance\n"
    if violations:
        content += "**Result:** FAILED\n\n"
        for v in violations:
            content += f"- {v}\n"
    else:
        content += "**Result:** PASSED\n"
    return content


def campaign_report(results: Sequence[ReconstructionResult], out_dir: Union[str, Path], lag: int,
                    thresholds: Optional[AcceptanceThresholds] = None, title: str = "SHRED Campaign Report",
                    timings: Optional[Mapping[str, float]] = None, verbose: bool = False) -> CampaignReport:
    """Write per-case CSVs, the summary table, the markdown summary and timings"""
    thresholds = thresholds or AcceptanceThresholds()
    out_dir = Path(out_dir)
    (out_dir / "cases").mkdir(parents=True, exist_ok=True)

    case_files = []
    for result in results:
        path = out_dir / "cases" / f"{case_slug(result.name)}.csv"
        case_frame(result).to_csv(path, index=False, float_format="%.10e")
        case_files.append(path)

    summary = summary_frame(results, lag)
    summary.to_csv(out_dir / "summary.csv", index=False, float_format="%.10e")
    violations = check_thresholds(summary, thresholds)
    ratios = extrapolation_ratios(summary, thresholds.convention)
    (out_dir / "summary.md").write_text(
        _markdown(summary, lag, thresholds, violations, ratios, title), encoding="utf-8"
    )

    entries: Dict[str, object] = {"generated": datetime.now().strftime("%Y-%m-%d %H:%M:%S")}
    for result in results:
        entries[f"predict_s_per_frame_{case_slug(result.name)}"] = f"{result.predict_seconds:.6f}"
    for key, value in (timings or {}).items():
        entries[key] = f"{value:.3f}"
    write_manifest(out_dir / "timings.txt", entries)

    if verbose:
        status = "✅" if not violations else "⚠️"
        print(f"{status} [REPORT] {len(results)} case(s) written to {out_dir}; "
              f"{len(violations)} threshold violation(s)")
    return CampaignReport(directory=out_dir, summary=summary, violations=violations, case_files=case_files)
