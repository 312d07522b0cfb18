from mhd_shred.linalg.dmx import file_sha256, read_dmx, write_dmx
from mhd_shred.linalg.svd import (
    ReducedBasis,
    as_dense,
    project,
    reconstruct,
    singular_values,
    truncated_svd,
    truncation_error,
)
