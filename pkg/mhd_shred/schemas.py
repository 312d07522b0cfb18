import hashlib
import math
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from mhd_shred.errors import ConfigurationError


class MaterialProps(BaseModel):
    """Lead-lithium thermophysical properties"""
    model_config = ConfigDict(frozen=True)

    rho0: float = Field(9806.0, gt=0, description="Reference density [kg/m^3]")
    mu_visc: float = Field(1.93e-3, gt=0, description="Dynamic viscosity [Pa s]")
    mu_B: float = Field(1.26e-6, gt=0, description="Magnetic permeability [H/m], also used for mu_0")
    sigma_el: float = Field(7.82e5, gt=0, description="Electrical conductivity [1/(Ohm m)]")
    beta: float = Field(1.3e-4, ge=0, description="Thermal expansion coefficient [1/K]; 0 is the incompressible limit")
    kappa: float = Field(20.93, gt=0, description="Thermal conductivity [W/(m K)]")
    c_p: float = Field(189.5, gt=0, description="Specific heat [J/(kg K)]")

    @property
    def thermal_diffusivity(self) -> float:
        return self.kappa / (self.rho0 * self.c_p)

    @property
    def magnetic_diffusivity(self) -> float:
        return 1.0 / (self.sigma_el * self.mu_B)

    @property
    def kinematic_viscosity(self) -> float:
        return self.mu_visc / self.rho0


class Geometry(BaseModel):
    """Box with an embedded cooling pipe (or, for validation, a slab channel)"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["pipe", "channel"] = Field("pipe", description="'pipe' embeds the cooling tube; 'channel' adds two solid slabs normal to y")
    length: float = Field(0.07, gt=0, description="Axial length L [m]")
    side: float = Field(0.02, gt=0, description="Cross-section side a [m]")
    r_pipe: float = Field(0.005, ge=0, description="Pipe radius [m]")
    slab_cells: int = Field(1, ge=1, description="Solid slab thickness in cells (channel kind only)")
    nx: int = Field(16, ge=1, description="Cells along x (toroidal)")
    ny: int = Field(16, ge=1, description="Cells along y (poloidal)")
    nz: int = Field(32, ge=1, description="Cells along z (axial); 1 selects the 2-D cross-section mode")


class MagneticDrive(BaseModel):
    """Imposed magnetic field profile"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant-toroidal", "constant-combined", "sinusoidal-toroidal"] = "constant-toroidal"
    Bx: float = Field(0.0, description="Toroidal component [T] (constant kinds)")
    By: float = Field(0.0, description="Poloidal component [T] (constant-combined)")
    A: float = Field(0.0, description="Sinusoid amplitude [T]")
    omega: float = Field(0.0, description="Angular frequency [1/s]")
    phi: float = Field(0.0, description="Phase [rad]")
    C: float = Field(0.0, description="Offset [T]")

    @model_validator(mode="after")
    def _never_reverses(self) -> "MagneticDrive":
        if self.kind == "sinusoidal-toroidal" and not self.C - abs(self.A) > 0:
            raise ValueError("sinusoidal drive requires C - |A| > 0 so the field never reverses")
        return self

    def field_at(self, t: float) -> Tuple[float, float, float]:
        """Drive vector (Bx, By, Bz) at time t"""
        if self.kind == "sinusoidal-toroidal":
            return (self.A * math.sin(self.omega * t + self.phi) + self.C, 0.0, 0.0)
        if self.kind == "constant-combined":
            return (self.Bx, self.By, 0.0)
        return (self.Bx, 0.0, 0.0)

    def magnitude_at(self, t: float) -> float:
        bx, by, bz = self.field_at(t)
        return math.sqrt(bx * bx + by * by + bz * bz)

    def max_magnitude(self) -> float:
        if self.kind == "sinusoidal-toroidal":
            return abs(self.A) + abs(self.C)
        return math.hypot(self.Bx, self.By if self.kind == "constant-combined" else 0.0)

    @property
    def angle_deg(self) -> float:
        """Orientation against the toroidal axis"""
        if self.kind != "constant-combined":
            return 0.0
        return math.degrees(math.atan2(self.By, self.Bx))

    @property
    def label(self) -> str:
        if self.kind == "sinusoidal-toroidal":
            return f"sin_A{self.A:g}_w{self.omega:.6g}_phi{self.phi:.6g}_C{self.C:g}"
        if self.kind == "constant-combined":
            return f"bxby_{self.Bx:g}_{self.By:g}"
        return f"bx_{self.Bx:g}"

    @classmethod
    def parse(cls, text: str) -> "MagneticDrive":
        """Parse 'toroidal:1.0', 'combined:1.6/0.45' or 'sinusoidal:A/omega/phi/C'"""
        kind, _, values = text.strip().partition(":")
        try:
            numbers = [float(v) for v in values.split("/") if v.strip()]
            if kind == "toroidal" and len(numbers) == 1:
                return cls(kind="constant-toroidal", Bx=numbers[0])
            if kind == "combined" and len(numbers) == 2:
                return cls(kind="constant-combined", Bx=numbers[0], By=numbers[1])
            if kind == "sinusoidal" and len(numbers) == 4:
                a, w, p, c = numbers
                return cls(kind="sinusoidal-toroidal", A=a, omega=w, phi=p, C=c)
        except (ValueError, ValidationError) as e:
            raise ConfigurationError(f"Invalid drive '{text}': {e}") from e
        raise ConfigurationError(f"Invalid drive '{text}'; expected toroidal:Bx, combined:Bx/By or sinusoidal:A/omega/phi/C")


class SimConfig(BaseModel):
    """Everything a single simulator run depends on"""
    model_config = ConfigDict(frozen=True)

    material: MaterialProps = Field(default_factory=MaterialProps)
    geometry: Geometry = Field(default_factory=Geometry)
    drive: MagneticDrive = Field(default_factory=MagneticDrive)
    T0: float = Field(600.0, gt=0, description="Initial lead-lithium temperature [K]")
    T_pipe: float = Field(560.0, gt=0, description="Pipe wall temperature [K]")
    u0: float = Field(0.01, description="Initial axial velocity [m/s]")
    p_ext: float = Field(1e5, description="Wall pressure [Pa]")
    t_end: float = Field(3.0, gt=0, description="Simulated time [s]")
    store_dt: float = Field(0.025, gt=0, description="Frame spacing [s]")
    cfl: float = Field(0.5, gt=0, le=1.0, description="Advective Courant limit")
    induction_mode: Literal["full", "quasi-static"] = "quasi-static"
    gravity: Tuple[float, float, float] = Field((0.0, -9.81, 0.0), description="Gravity vector [m/s^2]")
    axial_forcing: float = Field(0.0, description="Imposed axial driving pressure gradient magnitude [Pa/m]")
    wall_conducting: bool = Field(False, description="Treat the artificial walls as perfectly conducting (phi = 0)")
    joule_heating: bool = Field(True, description="Include the Joule source in the energy equation")
    safety: float = Field(0.9, gt=0, le=1.0, description="Fraction of the tightest stability bound used per sub-step")

    @model_validator(mode="after")
    def _integer_frames(self) -> "SimConfig":
        ratio = self.t_end / self.store_dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"t_end / store_dt = {ratio} is not an integer frame count")
        return self

    @property
    def frame_count(self) -> int:
        return int(round(self.t_end / self.store_dt))

    def config_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()


# Temperature probe coordinates [m]
DEFAULT_SENSORS: List[Tuple[float, float, float]] = [
    (0.0070, 0.0014, 0.0617),
    (0.0051, -0.0018, 0.0564),
    (-0.0027, 0.0045, 0.0066),
]


class SensorSpec(BaseModel):
    """Where the temperature probes sit"""
    model_config = ConfigDict(frozen=True)

    positions: List[Tuple[float, float, float]] = Field(default_factory=lambda: list(DEFAULT_SENSORS))
    observed_field: Literal["T"] = "T"

    @field_validator("positions")
    @classmethod
    def _at_least_one(cls, v):
        if not v:
            raise ValueError("at least one sensor is required")
        return v


class SplitSpec(BaseModel):
    """Drive settings per split"""
    model_config = ConfigDict(frozen=True)

    train: List[MagneticDrive] = Field(default_factory=list)
    validation: List[MagneticDrive] = Field(default_factory=list)
    test: List[MagneticDrive] = Field(default_factory=list)

    def check_disjoint(self) -> None:
        seen: Dict[str, str] = {}
        for split in ("train", "validation", "test"):
            for drive in getattr(self, split):
                key = drive.model_dump_json()
                if key in seen:
                    raise ConfigurationError(
                        f"Drive {drive.label} appears in both '{seen[key]}' and '{split}' splits"
                    )
                seen[key] = split

    def all_drives(self) -> List[MagneticDrive]:
        return [*self.train, *self.validation, *self.test]


class TrainConfig(BaseModel):
    """Training hyperparameters"""
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(500, ge=1)
    batch_size: int = Field(64, ge=1)
    learning_rate: float = Field(1e-3, ge=0)
    patience: int = Field(20, ge=1)
    seed: int = Field(0, ge=0)
    hidden: int = Field(64, ge=1, description="LSTM hidden width")
    lstm_layers: int = Field(2, ge=1)
    decoder_widths: Tuple[int, ...] = Field((350, 400), description="Shallow decoder hidden widths")
    dropout: float = Field(0.0, ge=0.0, lt=1.0, description="Decoder dropout rate")


class ChannelRange(BaseModel):
    model_config = ConfigDict(frozen=True)

    min: float
    max: float


class ScalingParams(BaseModel):
    """Min-max ranges fitted on train + validation data only"""

    fields: Dict[str, ChannelRange] = Field(default_factory=dict, description="Per physical channel (T, ux, uy, uz, p)")
    latent: Dict[str, List[ChannelRange]] = Field(default_factory=dict, description="Per basis block, per mode")
    parameter: Optional[ChannelRange] = Field(None, description="Drive magnitude range for the parameter head")
    fit_runs: List[str] = Field(default_factory=list, description="Run ids the ranges were computed from")


class OutputBlock(BaseModel):
    """A contiguous slice of the network output tied to one reduced basis"""
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., description="Basis name: a field (T, ux, ...) or 'state' for the stacked basis")
    start: int = Field(..., ge=0)
    stop: int = Field(..., ge=1)
    fields: List[str] = Field(..., description="Physical fields stacked (in order) in the basis rows")


class OutputMap(BaseModel):
    """How the network output vector splits into latent blocks and the parameter estimate"""
    model_config = ConfigDict(frozen=True)

    blocks: List[OutputBlock]
    param_index: Optional[int] = Field(None, description="Column of the normalized |B| estimate, if trained")

    @property
    def width(self) -> int:
        stop = max((b.stop for b in self.blocks), default=0)
        return stop + (1 if self.param_index is not None else 0)


class AcceptanceThresholds(BaseModel):
    """Post-burn-in error limits; None disables a check"""
    model_config = ConfigDict(frozen=True)

    eps_T: Optional[float] = None
    eps_u: Optional[float] = None
    eps_p: Optional[float] = None
    b_rmse: Optional[float] = None
    extrapolation_ratio: Optional[float] = None
    convention: Literal["normalized", "physical"] = "normalized"


class ExperimentConfig(BaseModel):
    """A campaign: what to simulate, how to split, how to train and judge"""
    model_config = ConfigDict(frozen=True)

    campaign: Literal["toroidal", "combined", "oscillating", "custom"] = "custom"
    sim: SimConfig = Field(default_factory=SimConfig)
    splits: SplitSpec = Field(default_factory=SplitSpec)
    rank: int = Field(5, ge=1)
    lag: int = Field(30, ge=1)
    basis_mode: Literal["per_field", "stacked"] = "per_field"
    train: TrainConfig = Field(default_factory=TrainConfig)
    sensors: SensorSpec = Field(default_factory=SensorSpec)
    output_dir: str = "data/campaigns"
    seed: int = Field(0, ge=0)
    param_estimation: bool = False
    frames_at: List[float] = Field(default_factory=lambda: [2.0], description="Times [s] of VTK frame exports")
    thresholds: AcceptanceThresholds = Field(default_factory=AcceptanceThresholds)

    def with_overrides(self, flat: Dict[str, str]) -> "ExperimentConfig":
        """Overlay dotted 'section.key' string values and re-validate"""
        data = self.model_dump()
        for dotted, raw in flat.items():
            if raw is None:
                continue
            parts = dotted.strip().split(".")
            if parts[0] == "splits" and len(parts) == 2:
                data["splits"][parts[1]] = [
                    MagneticDrive.parse(item).model_dump() for item in raw.split(";") if item.strip()
                ]
                continue
            node = data
            for key in parts[:-1]:
                if not isinstance(node.get(key), dict):
                    raise ConfigurationError(f"Unknown config section '{dotted}'")
                node = node[key]
            if parts[-1] not in node:
                raise ConfigurationError(f"Unknown config key '{dotted}'")
            node[parts[-1]] = _coerce(raw, node[parts[-1]])
        try:
            return ExperimentConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(str(e)) from e


def _coerce(raw: str, current):
    """Bring a string override into the shape of the value it replaces"""
    if isinstance(current, (list, tuple)):
        # nested lists (sensor positions) are ';'-separated groups of ','-separated numbers
        if current and isinstance(current[0], (list, tuple)):
            return [_coerce(group, current[0]) for group in raw.split(";") if group.strip()]
        items = [s for s in raw.split(",") if s.strip()]
        try:
            if current and isinstance(current[0], int) and not isinstance(current[0], bool):
                return [int(s) for s in items]
            return [float(s) for s in items]
        except ValueError as e:
            raise ConfigurationError(f"Cannot read '{raw}' as a list of numbers") from e
    if isinstance(current, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return raw
