import math
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.world import World

Vector3 = Tuple[float, float, float]


class SonarConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_beams: int = Field(512, ge=2)
    fov_h: float = Field(math.pi / 2, gt=0, le=math.pi)
    r_min: float = Field(2.0, gt=0)
    r_max: float = 60.0
    vertical_beamwidth: float = Field(math.radians(20.0), ge=0)
    intensity_hit: float = 100.0
    intensity_miss: float = 0.0
    intensity_threshold: float = 15.0
    elevation_subrays: int = Field(1, ge=1)
    intensity_noise: float = Field(0.0, ge=0)
    sweep_time_cost: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "SonarConfig":
        if self.r_min >= self.r_max:
            raise ValueError("sonar r_min must be below r_max")
        if not self.intensity_miss < self.intensity_threshold <= self.intensity_hit:
            raise ValueError("intensities must satisfy miss < threshold <= hit")
        return self

    @property
    def beam_spacing(self) -> float:
        return self.fov_h / self.n_beams


class PivotSweep(BaseModel):
    model_config = ConfigDict(frozen=True)

    angles_deg: List[float] = Field(default_factory=lambda: [float(a) for a in range(-45, 46)])

    @model_validator(mode="after")
    def _check_angles(self) -> "PivotSweep":
        if not self.angles_deg:
            raise ValueError("pivot sweep needs at least one angle")
        if any(b <= a for a, b in zip(self.angles_deg, self.angles_deg[1:])):
            raise ValueError("pivot angles must be strictly increasing")
        if 0.0 not in self.angles_deg:
            raise ValueError("pivot sweep must contain 0")
        if any(abs(a) > 90.0 for a in self.angles_deg):
            raise ValueError("pivot angles must lie within +/-90 degrees")
        return self

    @property
    def angles(self) -> List[float]:
        return [math.radians(a) for a in self.angles_deg]


class VehicleLimits(BaseModel):
    model_config = ConfigDict(frozen=True)

    v_x_max: float = Field(1.0, gt=0)
    v_y_max: float = Field(0.5, gt=0)
    v_z_max: float = Field(0.5, gt=0)
    r_max: float = Field(math.radians(15.0), gt=0)


class TrackingConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau: float = Field(0.0, ge=0)
    dt: float = Field(0.05, gt=0)
    integrator: Literal["midpoint", "euler"] = "midpoint"


class Spd2cConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    intensity_threshold: float = 15.0
    gap_length: int = Field(150, ge=1)
    pivot_group_length: int = Field(30, ge=1)
    central_sector: Tuple[int, int] = (100, 400)
    convexity_threshold: float = Field(0.02, gt=0)
    convexity_tolerance: float = Field(1e-9, ge=0)
    k_v: float = Field(0.35, gt=0)
    k_t: float = Field(0.12, gt=0)
    # beam-to-heading gain; None derives it from the sonar beam spacing
    k_r: Optional[float] = Field(None, gt=0)
    psi_max: float = Field(math.pi / 2, gt=0)
    fallback_turn_rate: float = 0.12 * math.pi / 4
    goal_band: float = Field(0.5, gt=0)
    sweep_every: int = Field(16, ge=1)

    @model_validator(mode="after")
    def _check_sector(self) -> "Spd2cConfig":
        lo, hi = self.central_sector
        if not 1 <= lo < hi:
            raise ValueError("central sector must satisfy 1 <= i_min < i_max")
        return self


class CbfConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    obstacle_radius: float = Field(3.0, gt=0)
    gain: float = Field(0.5, gt=0)


class MemoryConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    radius: float = Field(15.0, gt=0)
    resolution: float = Field(0.05, gt=0)
    use_index: bool = False


class ApfConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    k_att: float = Field(0.1, gt=0)
    k_rep: float = Field(20.0, gt=0)
    influence_distance: float = Field(8.0, gt=0)
    speed_cap: float = Field(1.0, gt=0)
    yaw_gain: float = Field(1.0, gt=0)
    stall_threshold: float = Field(1e-6, ge=0)


class DwaConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    v_samples: int = Field(7, ge=3)
    r_samples: int = Field(11, ge=3)
    horizon: float = Field(3.0, gt=0)
    sim_step: float = Field(0.25, gt=0)
    heading_weight: float = Field(0.8, ge=0)
    clearance_weight: float = Field(1.0, ge=0)
    speed_weight: float = Field(0.3, ge=0)
    robot_radius: float = Field(3.5, gt=0)
    clearance_cap: float = Field(8.0, gt=0)
    v_accel: float = Field(0.5, gt=0)
    r_accel: float = Field(1.0, gt=0)
    window_period: float = Field(0.125, gt=0)


class ClutterSpec(BaseModel):
    """Seeded random placement of vertical cylinders and spheres."""

    model_config = ConfigDict(frozen=True)

    count: int = Field(..., ge=0)
    region_min: Tuple[float, float] = (10.0, -20.0)
    region_max: Tuple[float, float] = (90.0, 20.0)
    radius_range: Tuple[float, float] = (1.0, 2.5)
    kinds: List[Literal["cylinder", "sphere"]] = Field(default_factory=lambda: ["cylinder"])
    keep_out: float = Field(8.0, ge=0)
    min_spacing: float = Field(9.0, ge=0)
    base_depth: float = -30.0
    height: float = Field(60.0, gt=0)


class StartSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    position: Vector3 = (0.0, 0.0, 0.0)
    heading: float = 0.0


class ScenarioSpec(BaseModel):
    """Everything one episode needs, as loaded from a scenario file."""

    model_config = ConfigDict(frozen=True)

    schema_version: int = 1
    name: str = "scenario"
    world: World = Field(default_factory=World)
    clutter: Optional[ClutterSpec] = None
    start: StartSpec = Field(default_factory=StartSpec)
    goal: Vector3
    goal_tolerance: float = Field(1.0, gt=0)
    min_distance: Optional[float] = Field(None, gt=0)
    time_budget: float = Field(..., gt=0)
    control_period: float = Field(0.125, gt=0)
    scan_every: int = Field(1, ge=1)
    seed: int = 0
    sonar: SonarConfig = Field(default_factory=SonarConfig)
    sweep: PivotSweep = Field(default_factory=PivotSweep)
    spd2c: Spd2cConfig = Field(default_factory=Spd2cConfig)
    cbf: CbfConfig = Field(default_factory=CbfConfig)
    memory: MemoryConfig = Field(default_factory=MemoryConfig)
    limits: VehicleLimits = Field(default_factory=VehicleLimits)
    tracking: TrackingConfig = Field(default_factory=TrackingConfig)
    apf: ApfConfig = Field(default_factory=ApfConfig)
    dwa: DwaConfig = Field(default_factory=DwaConfig)

    @property
    def d_min(self) -> float:
        if self.min_distance is not None:
            return self.min_distance
        return self.cbf.obstacle_radius

    @model_validator(mode="after")
    def _check_beam_indices(self) -> "ScenarioSpec":
        n_beams = self.sonar.n_beams
        if self.spd2c.central_sector[1] > n_beams:
            raise ValueError(
                f"central sector {self.spd2c.central_sector} exceeds the {n_beams} sonar beams"
            )
        if self.spd2c.gap_length > n_beams:
            raise ValueError(f"gap length {self.spd2c.gap_length} exceeds the {n_beams} sonar beams")
        if self.dwa.robot_radius <= self.sonar.r_min:
            raise ValueError(
                f"DWA robot radius {self.dwa.robot_radius} must exceed the sonar blind zone "
                f"r_min={self.sonar.r_min}"
            )
        if self.spd2c.k_r is not None and not math.isclose(
            self.spd2c.k_r, self.sonar.beam_spacing, rel_tol=1e-6
        ):
            raise ValueError(
                f"k_r={self.spd2c.k_r} does not match the sonar beam spacing "
                f"{self.sonar.beam_spacing} (fov_h / n_beams)"
            )
        return self


class Metrics(BaseModel):
    success: bool
    termination: Literal["goal", "collision", "timeout"]
    path_length: float
    travel_time: float
    min_clearance: Optional[float] = None
    d_min_violations: int = 0
    avg_angular_jerk: float
    pivot_events: int = 0
    pivot_cost_unmodelled: bool = False
    cycles: int = 0
    cycle_time_median: float = 0.0
    cycle_time_p95: float = 0.0
    cycle_time_max: float = 0.0
    tracking_tau: float = 0.0
    obstacle_radius: float = 0.0
    cbf_gain: float = 0.0


class BatchRow(BaseModel):
    scenario: str
    algo: str
    seed: int
    metrics: Optional[Metrics] = None
    error: Optional[str] = None


class BatchSummary(BaseModel):
    rows: List[BatchRow] = Field(default_factory=list)
    medians: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    jerk_reduction: Dict[str, float] = Field(default_factory=dict)
