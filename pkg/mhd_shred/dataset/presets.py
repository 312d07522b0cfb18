"""
Campaign presets: drive tables, error thresholds and export times for the
three magnetic-field studies.
"""

import math
from typing import Dict, List

from mhd_shred.errors import ConfigurationError
from mhd_shred.schemas import AcceptanceThresholds, ExperimentConfig, MagneticDrive, SplitSpec

# Constant toroidal field
# Format: (split, Bx [T])
TOROIDAL_CASES = [
    ("train", 0.5),
    ("train", 0.7),
    ("train", 0.9),
    ("train", 1.1),
    ("train", 1.3),
    ("train", 1.6),
    ("train", 2.0),

    ("validation", 1.0),
    ("validation", 1.7),

    # 0.75 and 1.85 interpolate, 2.5 extrapolates
    ("test", 0.75),
    ("test", 1.85),
    ("test", 2.5),
]

# Constant toroidal + poloidal field
# Format: (split, Bx [T], By [T])
COMBINED_CASES = [
    ("train", 1.0, 0.2),
    ("train", 1.4, 0.35),
    ("train", 1.8, 0.55),
    ("train", 2.0, 0.7),

    ("validation", 1.2, 0.3),

    ("test", 1.6, 0.45),
]

# Oscillating toroidal field B(t) = A sin(omega t + phi) + C
# Format: (split, A [T], period [s], phi [rad], C [T])
HALF_PI = math.pi / 2
OSCILLATING_CASES = [
    ("train", 0.5, 1.4, -0.05 + HALF_PI, 1.3),
    ("train", 0.45, 1.5, 1.0 + HALF_PI, 1.2),
    ("train", 0.42, 0.7, HALF_PI + 3.0, 1.3),
    ("train", 0.48, 1.1, HALF_PI + 1.3, 1.1),
    ("train", 0.6, 1.0, -1.0, 1.25),
    ("train", 0.7, 1.1, -1.0, 1.1),
    ("train", 0.45, 0.8, -0.11, 1.25),
    ("train", 0.45, 1.4, -0.11, 1.25),
    ("train", 0.45, 1.75, -0.11, 1.25),

    ("validation", 0.6, 2.0, HALF_PI, 1.1),
    ("validation", 0.55, 1.4, HALF_PI + 0.2, 1.2),
    ("validation", 0.45, 1.0, -0.11, 1.25),
    ("validation", 0.45, 1.5, -0.11, 1.25),

    # test cases A, B, C
    ("test", 0.5, 0.8, HALF_PI, 1.2),
    ("test", 0.45, 1.25, -0.11, 1.25),
    ("test", 0.4, 1.4, -0.8, 1.25),
]


def _splits(rows: List[tuple], make) -> SplitSpec:
    grouped: Dict[str, List[MagneticDrive]] = {"train": [], "validation": [], "test": []}
    for split, *values in rows:
        grouped[split].append(make(*values))
    spec = SplitSpec(**grouped)
    spec.check_disjoint()
    return spec


def toroidal_campaign() -> ExperimentConfig:
    return ExperimentConfig(
        campaign="toroidal",
        splits=_splits(TOROIDAL_CASES, lambda bx: MagneticDrive(kind="constant-toroidal", Bx=bx)),
        frames_at=[2.0],
        thresholds=AcceptanceThresholds(eps_T=0.06, eps_u=0.10, eps_p=0.05, extrapolation_ratio=2.0),
    )


def combined_campaign() -> ExperimentConfig:
    return ExperimentConfig(
        campaign="combined",
        splits=_splits(COMBINED_CASES, lambda bx, by: MagneticDrive(kind="constant-combined", Bx=bx, By=by)),
        frames_at=[2.0],
        thresholds=AcceptanceThresholds(eps_T=0.06, eps_u=0.06, eps_p=0.05),
    )


def oscillating_campaign() -> ExperimentConfig:
    def drive(a, period, phi, c):
        return MagneticDrive(kind="sinusoidal-toroidal", A=a, omega=2.0 * math.pi / period, phi=phi, C=c)

    return ExperimentConfig(
        campaign="oscillating",
        splits=_splits(OSCILLATING_CASES, drive),
        frames_at=[1.75],
        thresholds=AcceptanceThresholds(eps_T=0.08, eps_u=0.06, eps_p=0.06, b_rmse=0.10),
    )


PRESETS = {
    "toroidal": toroidal_campaign,
    "combined": combined_campaign,
    "oscillating": oscillating_campaign,
}


def load_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigurationError(f"Unknown preset '{name}'; choose from {', '.join(PRESETS)}") from None
