"""Error types raised across the toolkit."""

from typing import Optional, Sequence


class ShredToolkitError(Exception):
    """Base class for every error raised by the toolkit"""


class DimensionError(ShredToolkitError, ValueError):
    """Matrix or tensor shapes do not line up"""


class DataError(ShredToolkitError, ValueError):
    """Input data is non-finite or otherwise unusable"""


class ConfigurationError(ShredToolkitError, ValueError):
    """A configuration violates one of its invariants"""


class UsageError(ShredToolkitError, ValueError):
    """Command-line usage problem (unknown format, missing source)"""


class ScalingError(ShredToolkitError, ValueError):
    """A min-max channel is degenerate"""

    def __init__(self, channel: str, message: Optional[str] = None):
        self.channel = channel
        super().__init__(message or f"Degenerate scaling channel '{channel}': max == min")


class SensorPlacementError(ShredToolkitError, ValueError):
    """A sensor coordinate cannot be resolved to a fluid cell"""


class PhysicsError(ShredToolkitError, ValueError):
    """A physical closure produced an impossible state (e.g. non-positive density)"""


class TimeStepError(ShredToolkitError, RuntimeError):
    """Requested time step violates a stability bound"""

    def __init__(self, message: str, suggested_dt: float):
        self.suggested_dt = suggested_dt
        super().__init__(f"{message} (suggested dt <= {suggested_dt:.6g} s)")


class SolverError(ShredToolkitError, RuntimeError):
    """A linear solve did not reach its tolerance"""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class SimulationError(ShredToolkitError, RuntimeError):
    """A simulation step failed; carries the frame being produced"""

    def __init__(self, frame: int, cause: Exception):
        self.frame = frame
        self.cause = cause
        super().__init__(f"Simulation aborted while producing frame {frame}: {cause}")


class NumericError(ShredToolkitError, RuntimeError):
    """A network intermediate became non-finite"""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} at step {step}")


class TrainingError(ShredToolkitError, RuntimeError):
    """Training diverged"""

    def __init__(self, message: str, epoch: int):
        self.epoch = epoch
        super().__init__(f"{message} at epoch {epoch}")


class CorruptFileError(ShredToolkitError, ValueError):
    """A binary container is truncated or malformed"""


class VersionMismatchError(ShredToolkitError, ValueError):
    """A binary container was written by an incompatible format version"""


class MissingRunsError(ShredToolkitError, RuntimeError):
    """Snapshot store lacks runs a command needs"""

    def __init__(self, missing: Sequence[str]):
        self.missing = list(missing)
        listing = "\n".join(f"  - {item}" for item in self.missing)
        super().__init__(
            f"{len(self.missing)} run(s) missing from the snapshot store:\n{listing}\n"
            "Run the 'generate' subcommand with the same config first."
        )
