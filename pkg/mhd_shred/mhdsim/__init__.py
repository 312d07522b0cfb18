from mhd_shred.mhdsim.grid import Grid, Projector, build_grid
from mhd_shred.mhdsim.physics import LowRmCurrents, joule_heating, lorentz_force, update_density
from mhd_shred.mhdsim.solver import (
    FluidState,
    SolverOperators,
    clean_divergence,
    initial_state,
    run_simulation,
    stable_dt,
    step_energy,
    step_induction,
    step_momentum,
)
from mhd_shred.mhdsim.storage import FIELDS, SnapshotSeries, is_complete, load_series, run_id, save_series, write_vtk
