"""
Snapshot store: one directory per simulator run.

    <run_id>/T.dmx, ux.dmx, uy.dmx, uz.dmx, p.dmx   (n_fluid x Nt)
    <run_id>/cells.csv                             fluid-cell coordinates in DOF order
    <run_id>/drive.csv                             t, Bx, By, |B| per frame
    <run_id>/manifest.txt                          config, hashes, timings
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

import numpy as np
import pandas as pd

from mhd_shred.errors import CorruptFileError, DataError
from mhd_shred.linalg import file_sha256, read_dmx, write_dmx
from mhd_shred.manifest import read_manifest, write_manifest
from mhd_shred.schemas import SimConfig

FIELDS = ("T", "ux", "uy", "uz", "p")
VELOCITY = ("ux", "uy", "uz")
MANIFEST = "manifest.txt"


@dataclass
class SnapshotSeries:
    config: SimConfig
    times: np.ndarray
    fields: Dict[str, np.ndarray]
    drive: np.ndarray
    coords: np.ndarray
    wall_time: float = 0.0
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def n_frames(self) -> int:
        return int(self.times.size)

    @property
    def n_fluid(self) -> int:
        return int(self.coords.shape[0])

    @property
    def run_id(self) -> str:
        return run_id(self.config)

    def frame_index(self, t: float) -> int:
        """Frame holding time t (frames sit at (k+1) * store_dt)"""
        k = int(round(t / self.config.store_dt)) - 1
        if not 0 <= k < self.n_frames:
            raise DataError(f"t = {t} s is outside the stored frames (0, {self.times[-1]:.4g}] s")
        return k


def run_id(config: SimConfig) -> str:
    return f"{config.drive.label}_{config.config_hash()[:10]}"


def save_series(series: SnapshotSeries, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    hashes = {}
    for name in FIELDS:
        path = write_dmx(directory / f"{name}.dmx", series.fields[name])
        hashes[f"sha256_{name}"] = file_sha256(path)

    pd.DataFrame(series.coords, columns=["x", "y", "z"]).to_csv(directory / "cells.csv", index_label="dof")
    pd.DataFrame({
        "t": series.times,
        "Bx": series.drive[:, 0],
        "By": series.drive[:, 1],
        "B_magnitude": series.drive[:, 2],
    }).to_csv(directory / "drive.csv", index=False)

    entries = {
        "run_id": series.run_id,
        "drive": series.config.drive.label,
        "config_hash": series.config.config_hash(),
        "frames": series.n_frames,
        "n_fluid": series.n_fluid,
        "wall_time_s": f"{series.wall_time:.3f}",
        "pressure_anchor": "box walls",
    }
    entries.update({f"diag_{k}": f"{v:.6g}" for k, v in series.diagnostics.items()})
    entries.update(hashes)
    entries["config"] = series.config.model_dump_json()
    write_manifest(directory / MANIFEST, entries)
    return directory


def load_series(directory: Union[str, Path], verify: bool = True) -> SnapshotSeries:
    directory = Path(directory)
    manifest = read_manifest(directory / MANIFEST)
    try:
        config = SimConfig.model_validate_json(manifest["config"])
    except (KeyError, ValueError) as e:
        raise CorruptFileError(f"{directory}: manifest has no readable config ({e})") from e

    fields = {}
    for name in FIELDS:
        path = directory / f"{name}.dmx"
        if verify and file_sha256(path) != manifest.get(f"sha256_{name}"):
            raise CorruptFileError(f"{path}: content hash does not match the run manifest")
        fields[name] = read_dmx(path)

    cells = pd.read_csv(directory / "cells.csv")
    drive = pd.read_csv(directory / "drive.csv")
    return SnapshotSeries(
        config=config,
        times=drive["t"].to_numpy(dtype=np.float64),
        fields=fields,
        drive=drive[["Bx", "By", "B_magnitude"]].to_numpy(dtype=np.float64),
        coords=cells[["x", "y", "z"]].to_numpy(dtype=np.float64),
        wall_time=float(manifest.get("wall_time_s", 0.0)),
        diagnostics={k[5:]: float(v) for k, v in manifest.items() if k.startswith("diag_")},
    )


def load_field(directory: Union[str, Path], name: str) -> np.ndarray:
    """One (n_fluid, Nt) field of a stored run"""
    if name not in FIELDS:
        raise DataError(f"Unknown field '{name}'; stored fields are {', '.join(FIELDS)}")
    return read_dmx(Path(directory) / f"{name}.dmx")


def load_drive(directory: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(Path(directory) / "drive.csv")


def is_complete(directory: Union[str, Path], config: SimConfig) -> bool:
    """True when the run directory already holds this exact configuration"""
    path = Path(directory) / MANIFEST
    if not path.is_file():
        return False
    try:
        manifest = read_manifest(path)
    except CorruptFileError:
        return False
    return manifest.get("config_hash") == config.config_hash() and all(
        (Path(directory) / f"{name}.dmx").is_file() for name in FIELDS
    )


def write_vtk(path: Union[str, Path], grid, fields: Mapping[str, np.ndarray], title: Optional[str] = None) -> Path:
    """
    Legacy ASCII VTK structured-points file with one cell scalar per field.

    `fields` hold fluid-DOF vectors; masked (solid) cells are written as NaN.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nx, ny, nz = grid.shape
    hx, hy, hz = grid.spacing
    a = grid.geometry.side
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"{title or 'mhd-shred frame'}\n")
        f.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        f.write(f"DIMENSIONS {nx + 1} {ny + 1} {nz + 1}\n")
        f.write(f"ORIGIN {-0.5 * a!r} {-0.5 * a!r} 0.0\n")
        f.write(f"SPACING {hx!r} {hy!r} {hz!r}\n")
        f.write(f"CELL_DATA {grid.n_cells}\n")
        for name, values in fields.items():
            full = grid.from_fluid(np.asarray(values, dtype=np.float64), fill=np.nan)
            f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            # VTK orders cells with x fastest
            for v in full.ravel(order="F"):
                f.write(f"{v:.10g}\n")
    return path
