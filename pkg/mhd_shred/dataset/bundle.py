"""
Dataset bundles: the split, scaled, compressed and windowed view of a
campaign's snapshot store.

Bundle directory:
    basis/<block>.dmx          spatial modes U (rows x r)
    basis/<block>_sigma.dmx    singular values (1 x r)
    latent/<run_id>.dmx        scaled network targets (Nt x width)
    sensors/<run_id>.csv       normalized sensor readings per frame
    scaling.json               ScalingParams
    output_map.json            OutputMap
    split_manifest.txt         splits, fit runs and file hashes
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from mhd_shred.errors import ConfigurationError, DataError, MissingRunsError
from mhd_shred.linalg import ReducedBasis, file_sha256, project, truncated_svd, write_dmx
from mhd_shred.manifest import read_manifest, write_manifest
from mhd_shred.mhdsim.grid import build_grid
from mhd_shred.mhdsim.storage import FIELDS, is_complete, load_drive, load_field, run_id
from mhd_shred.schemas import (
    ChannelRange,
    ExperimentConfig,
    MagneticDrive,
    OutputBlock,
    OutputMap,
    ScalingParams,
    SimConfig,
)
from mhd_shred.dataset.preprocessing import (
    LaggedBatch,
    build_lagged_sequences,
    extract_sensor_series,
    fit_range,
    normalize_minmax,
    remove_hydrostatic,
    resolve_sensors,
    stack_parametric,
)

SPLITS = ("train", "validation", "test")


def sim_config_for(config: ExperimentConfig, drive: MagneticDrive) -> SimConfig:
    return config.sim.model_copy(update={"drive": drive})


def snapshot_root(config: ExperimentConfig) -> Path:
    return Path(config.output_dir) / "snapshots"


def run_directory(config: ExperimentConfig, drive: MagneticDrive) -> Path:
    return snapshot_root(config) / run_id(sim_config_for(config, drive))


@dataclass
class RunRecord:
    run_id: str
    split: str
    drive: MagneticDrive
    directory: Path
    sensors: np.ndarray
    targets: np.ndarray
    times: np.ndarray
    data_hash: str


@dataclass
class DatasetBundle:
    config: ExperimentConfig
    scaling: ScalingParams
    bases: Dict[str, ReducedBasis]
    output_map: OutputMap
    sensor_dofs: np.ndarray
    coords: np.ndarray
    runs: List[RunRecord] = field(default_factory=list)

    def split_runs(self, split: str) -> List[RunRecord]:
        return [r for r in self.runs if r.split == split]

    def batch(self, split: str) -> LaggedBatch:
        runs = self.split_runs(split)
        if not runs:
            raise ConfigurationError(f"Split '{split}' has no runs")
        return LaggedBatch.concat([
            build_lagged_sequences(r.sensors, r.targets, self.config.lag, trajectory=i)
            for i, r in enumerate(runs)
        ])

    def run_batch(self, record: RunRecord) -> LaggedBatch:
        return build_lagged_sequences(record.sensors, record.targets, self.config.lag)

    @property
    def fit_runs(self) -> List[str]:
        return list(self.scaling.fit_runs)


def load_physical(directory: Path, name: str, sim: SimConfig, coords: np.ndarray) -> np.ndarray:
    values = load_field(directory, name)
    if name == "p":
        values = remove_hydrostatic(values, sim.material.rho0, sim.gravity, coords)
    return values


def _output_map(config: ExperimentConfig) -> OutputMap:
    r = config.rank
    if config.basis_mode == "stacked":
        blocks = [OutputBlock(name="state", start=0, stop=r, fields=list(FIELDS))]
    else:
        blocks = [OutputBlock(name=f, start=i * r, stop=(i + 1) * r, fields=[f]) for i, f in enumerate(FIELDS)]
    param = blocks[-1].stop if config.param_estimation else None
    return OutputMap(blocks=blocks, param_index=param)


def make_splits(config: ExperimentConfig, verbose: bool = False) -> DatasetBundle:
    """
    Build the bundle from a generated campaign.

    Field ranges, bases and latent ranges are fitted on train + validation runs
    only; test runs are transformed with those fits and never clipped.
    """
    config.splits.check_disjoint()
    for split in ("train", "validation"):
        if not getattr(config.splits, split):
            raise ConfigurationError(f"Split '{split}' is empty")

    entries = []
    missing = []
    for split in SPLITS:
        for drive in getattr(config.splits, split):
            directory = run_directory(config, drive)
            if not is_complete(directory, sim_config_for(config, drive)):
                missing.append(f"{split}: {drive.label} ({directory})")
            entries.append((split, drive, directory))
    if missing:
        raise MissingRunsError(missing)

    grid = build_grid(config.sim.geometry)
    coords = grid.fluid_coordinates()
    sensor_dofs = resolve_sensors(grid, config.sensors.positions)
    fit = [e for e in entries if e[0] != "test"]
    fit_ids = [d.name for _, _, d in fit]

    # Field ranges (train + validation only)
    ranges: Dict[str, ChannelRange] = {}
    for name in FIELDS:
        ranges[name] = fit_range(name, (load_physical(d, name, config.sim, coords) for _, _, d in fit))
    if verbose:
        print(f"📏 [DATASET] Fitted min-max ranges on {len(fit_ids)} train/validation runs")

    def normalized(directory: Path, name: str) -> np.ndarray:
        return normalize_minmax(load_physical(directory, name, config.sim, coords), ranges[name], name)

    output_map = _output_map(config)
    bases: Dict[str, ReducedBasis] = {}
    latents: Dict[str, Dict[str, np.ndarray]] = {d.name: {} for _, _, d in entries}
    for block in output_map.blocks:
        def rows(directory: Path) -> np.ndarray:
            return np.vstack([normalized(directory, f) for f in block.fields])

        stacked = stack_parametric([rows(d) for _, _, d in fit], fit_ids)
        basis, _ = truncated_svd(stacked.matrix, config.rank)
        bases[block.name] = basis
        for rid, start, stop in stacked.columns:
            latents[rid][block.name] = project(basis, stacked.matrix[:, start:stop])
        del stacked
        for split, _, d in entries:
            if split == "test":
                latents[d.name][block.name] = project(basis, rows(d))
        if verbose:
            kept = float(np.sum(basis.sigma ** 2))
            print(f"🧮 [DATASET] Basis '{block.name}': rank {config.rank}, sigma_1 = {basis.sigma[0]:.4g}, "
                  f"retained energy {kept:.4g}")

    latent_ranges: Dict[str, List[ChannelRange]] = {}
    for block in output_map.blocks:
        latent_ranges[block.name] = [
            fit_range(f"latent:{block.name}[{m}]", (latents[rid][block.name][m] for rid in fit_ids))
            for m in range(config.rank)
        ]

    drives = {d.name: load_drive(d) for _, _, d in entries}
    param_range: Optional[ChannelRange] = None
    if output_map.param_index is not None:
        param_range = fit_range("parameter:|B|", (drives[rid]["B_magnitude"].to_numpy() for rid in fit_ids))

    scaling = ScalingParams(fields=ranges, latent=latent_ranges, parameter=param_range, fit_runs=fit_ids)

    runs = []
    for split, drive, d in entries:
        columns = []
        for block in output_map.blocks:
            V = latents[d.name][block.name]
            for m, rng in enumerate(latent_ranges[block.name]):
                columns.append(normalize_minmax(V[m], rng, f"latent:{block.name}[{m}]"))
        if param_range is not None:
            columns.append(normalize_minmax(drives[d.name]["B_magnitude"].to_numpy(), param_range, "parameter:|B|"))
        targets = np.stack(columns, axis=1)
        sensors = extract_sensor_series(normalized(d, "T"), sensor_dofs)
        runs.append(RunRecord(
            run_id=d.name,
            split=split,
            drive=drive,
            directory=d,
            sensors=sensors,
            targets=targets,
            times=drives[d.name]["t"].to_numpy(dtype=np.float64),
            data_hash=read_manifest(d / "manifest.txt").get("sha256_T", ""),
        ))

    if verbose:
        counts = {s: len([r for r in runs if r.split == s]) for s in SPLITS}
        print(f"✅ [DATASET] Bundle ready: {counts['train']} train / {counts['validation']} validation / "
              f"{counts['test']} test runs, {len(sensor_dofs)} sensors, output width {output_map.width}")

    return DatasetBundle(
        config=config,
        scaling=scaling,
        bases=bases,
        output_map=output_map,
        sensor_dofs=sensor_dofs,
        coords=coords,
        runs=runs,
    )


def save_bundle(bundle: DatasetBundle, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    hashes = {}
    for name, basis in bundle.bases.items():
        hashes[f"sha256_basis_{name}"] = file_sha256(write_dmx(directory / "basis" / f"{name}.dmx", basis.U))
        write_dmx(directory / "basis" / f"{name}_sigma.dmx", basis.sigma[None, :])
    for run in bundle.runs:
        hashes[f"sha256_latent_{run.run_id}"] = file_sha256(
            write_dmx(directory / "latent" / f"{run.run_id}.dmx", run.targets)
        )
        sensors = pd.DataFrame(run.sensors, columns=[f"S{i + 1}" for i in range(run.sensors.shape[1])])
        sensors.insert(0, "t", run.times)
        (directory / "sensors").mkdir(parents=True, exist_ok=True)
        sensors.to_csv(directory / "sensors" / f"{run.run_id}.csv", index=False)

    (directory / "scaling.json").write_text(bundle.scaling.model_dump_json(indent=2), encoding="utf-8")
    (directory / "output_map.json").write_text(bundle.output_map.model_dump_json(indent=2), encoding="utf-8")

    entries = {
        "campaign": bundle.config.campaign,
        "basis_mode": bundle.config.basis_mode,
        "rank": bundle.config.rank,
        "lag": bundle.config.lag,
        "sensor_dofs": ",".join(str(int(s)) for s in bundle.sensor_dofs),
    }
    for split in SPLITS:
        entries[f"{split}_runs"] = ",".join(r.run_id for r in bundle.split_runs(split))
    entries["fit_runs"] = ",".join(bundle.scaling.fit_runs)
    entries["scaling_sha256"] = file_sha256(directory / "scaling.json")
    entries.update({f"run_sha256_{r.run_id}": r.data_hash for r in bundle.runs})
    entries.update(hashes)
    write_manifest(directory / "split_manifest.txt", entries)
    return directory


def _ids(manifest: Dict[str, str], key: str) -> List[str]:
    return [s for s in manifest.get(key, "").split(",") if s]


def audit_bundle(directory: Union[str, Path]) -> Dict[str, object]:
    """
    Check a saved bundle for test leakage and tampering.

    Scaling and bases must come from exactly train + validation, never from
    test, and every recorded file hash must match. Raises DataError listing
    every problem found.
    """
    directory = Path(directory)
    manifest = read_manifest(directory / "split_manifest.txt")
    scaling = ScalingParams.model_validate_json((directory / "scaling.json").read_text(encoding="utf-8"))
    problems = []

    train, val, test = (_ids(manifest, f"{s}_runs") for s in SPLITS)
    fit = _ids(manifest, "fit_runs")
    if set(fit) != set(train) | set(val):
        problems.append(f"fit runs {sorted(fit)} differ from train + validation {sorted(set(train) | set(val))}")
    if set(scaling.fit_runs) != set(fit):
        problems.append("scaling.json fit runs differ from the manifest")
    leaked = (set(fit) | set(scaling.fit_runs)) & set(test)
    if leaked:
        problems.append(f"test runs used for fitting: {sorted(leaked)}")
    overlap = (set(train) & set(val)) | ((set(train) | set(val)) & set(test))
    if overlap:
        problems.append(f"runs in more than one split: {sorted(overlap)}")

    if file_sha256(directory / "scaling.json") != manifest.get("scaling_sha256"):
        problems.append("scaling.json hash mismatch")
    checked = 0
    for key, expected in manifest.items():
        if key.startswith("sha256_basis_"):
            path = directory / "basis" / f"{key[len('sha256_basis_'):]}.dmx"
        elif key.startswith("sha256_latent_"):
            path = directory / "latent" / f"{key[len('sha256_latent_'):]}.dmx"
        else:
            continue
        checked += 1
        if not path.is_file():
            problems.append(f"missing {path.relative_to(directory)}")
        elif file_sha256(path) != expected:
            problems.append(f"hash mismatch for {path.relative_to(directory)}")

    if problems:
        raise DataError("Bundle audit failed:\n" + "\n".join(f"  - {p}" for p in problems))
    return {
        "train": len(train),
        "validation": len(val),
        "test": len(test),
        "files_checked": checked,
        "manifest_sha256": file_sha256(directory / "split_manifest.txt"),
    }
