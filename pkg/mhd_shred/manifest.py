"""key=value manifests shared by snapshot runs, bundles, models and reports."""

from pathlib import Path
from typing import Dict, Mapping, Union

from dotenv import dotenv_values

from mhd_shred.errors import CorruptFileError


def write_manifest(path: Union[str, Path], entries: Mapping[str, object]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for key, value in entries.items():
        text = str(value)
        if "\n" in text:
            raise ValueError(f"Manifest value for '{key}' spans several lines")
        lines.append(f"{key}={text}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise CorruptFileError(f"Manifest not found: {path}")
    return {k: (v or "") for k, v in dotenv_values(path, interpolate=False).items()}
