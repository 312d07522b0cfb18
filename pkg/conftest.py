"""Shared fixtures: a tiny generated campaign the dataset, evaluation and CLI tests reuse."""

import pytest

from mhd_shred.dataset.bundle import run_directory, sim_config_for
from mhd_shred.mhdsim import run_simulation, save_series
from mhd_shred.schemas import ExperimentConfig, Geometry, MagneticDrive, SimConfig, SplitSpec, TrainConfig


def tiny_config(output_dir, **overrides) -> ExperimentConfig:
    """8x8x8 box, four frames, two training drives; 1.2 T sits outside the training span"""
    values = dict(
        campaign="custom",
        sim=SimConfig(geometry=Geometry(nx=8, ny=8, nz=8), t_end=0.1, store_dt=0.025),
        splits=SplitSpec(
            train=[MagneticDrive(Bx=0.5), MagneticDrive(Bx=1.0)],
            validation=[MagneticDrive(Bx=0.8)],
            test=[MagneticDrive(Bx=0.6), MagneticDrive(Bx=1.2)],
        ),
        rank=2,
        lag=2,
        output_dir=str(output_dir),
        param_estimation=True,
        train=TrainConfig(epochs=15, batch_size=4, hidden=6, lstm_layers=1, decoder_widths=(12,), patience=15),
        frames_at=[0.05],
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def generate(config: ExperimentConfig) -> None:
    for drive in config.splits.all_drives():
        series = run_simulation(sim_config_for(config, drive))
        save_series(series, run_directory(config, drive))


@pytest.fixture(scope="session")
def tiny_campaign(tmp_path_factory):
    config = tiny_config(tmp_path_factory.mktemp("campaign"))
    generate(config)
    return config
