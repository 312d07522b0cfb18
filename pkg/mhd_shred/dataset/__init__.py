from mhd_shred.dataset.bundle import DatasetBundle, RunRecord, audit_bundle, make_splits, run_directory, save_bundle
from mhd_shred.dataset.preprocessing import (
    LaggedBatch,
    StackedSnapshots,
    build_lagged_sequences,
    denormalize_minmax,
    extract_sensor_series,
    fit_range,
    normalize_minmax,
    remove_hydrostatic,
    resolve_sensors,
    stack_parametric,
)
from mhd_shred.dataset.presets import PRESETS, load_preset
