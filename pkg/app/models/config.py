"""
Experiment configuration schema. Every block rejects unknown keys.
"""

import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.errors import ConfigError
from app.core.fem import BoundaryCondition, SolverParams
from app.core.geometry import BumpProfile, DumbbellSpec, ObstacleShape, rectangle_domain, resolve_clearance
from app.core.mesh import MeshParams


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RectangleConfig(_Block):
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @model_validator(mode="after")
    def non_empty(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("rectangle must have positive extent")
        return self

    @property
    def sides(self) -> Tuple[float, float]:
        return self.x_max - self.x_min, self.y_max - self.y_min


class GeometryConfig(_Block):
    omega1: RectangleConfig = RectangleConfig(x_min=-3.0, x_max=-1.0, y_min=-1.0, y_max=1.0)
    omega2: RectangleConfig = RectangleConfig(x_min=1.0, x_max=2.0, y_min=-0.5, y_max=0.5)
    xi: float = Field(0.15, gt=0.0)
    rho: Union[Literal["default"], List[Tuple[float, float]]] = "default"
    eps_list: List[float] = Field(default_factory=lambda: [0.12, 0.08, 0.05, 0.03], min_length=1)
    connector_samples: int = Field(16, ge=8)

    @field_validator("eps_list")
    @classmethod
    def positive_eps(cls, values: List[float]) -> List[float]:
        if any(v <= 0.0 for v in values):
            raise ValueError("every epsilon must be positive")
        return values

    def bump_profile(self) -> BumpProfile:
        if self.rho == "default":
            return BumpProfile.default()
        return BumpProfile(tuple(tuple(p) for p in self.rho))

    def dumbbell(self, epsilon: float) -> DumbbellSpec:
        o1, o2 = self.omega1, self.omega2
        return DumbbellSpec(
            omega1=rectangle_domain(o1.x_min, o1.x_max, o1.y_min, o1.y_max),
            omega2=rectangle_domain(o2.x_min, o2.x_max, o2.y_min, o2.y_max),
            epsilon=epsilon,
            xi=self.xi,
            rho=self.bump_profile(),
            connector_samples=self.connector_samples,
        )


class MeshConfig(_Block):
    h_max: float = Field(0.04, gt=0.0)
    min_angle: float = Field(20.0, gt=0.0, le=34.0)
    connector_factor: float = Field(0.25, gt=0.0)
    grading: float = Field(1.5, gt=1.0)

    def params(self) -> MeshParams:
        return MeshParams(
            h_max=self.h_max, min_angle=self.min_angle, connector_factor=self.connector_factor, grading=self.grading
        )


class SolverConfig(_Block):
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    k: int = Field(6, ge=2)
    tol: float = Field(1e-9, gt=0.0)
    seed: int = 0

    def params(self) -> SolverParams:
        return SolverParams(tol=self.tol, seed=self.seed)


class AnalysisConfig(_Block):
    r1: float = Field(0.3, gt=0.0)
    r2: float = Field(0.3, gt=0.0)
    z0: Optional[float] = None
    x0: Tuple[float, float] = (-2.0, 0.0)
    hotspot_tol: float = Field(1e-3, gt=0.0, lt=1.0)
    hotspot_radius: float = Field(0.1, gt=0.0)
    decay_tol: float = Field(0.05, ge=0.0)
    decay_stations: int = Field(64, ge=4)
    decay_eps: float = Field(0.05, gt=0.0)
    polya_tol: float = Field(1e-6, ge=0.0)
    mass_tol: float = Field(1e-8, gt=0.0)


class ObstacleConfig(_Block):
    shape: Literal["square", "regular"] = "square"
    side: float = Field(0.4, gt=0.0)
    n_sides: int = Field(6, ge=3)
    radius: float = Field(0.2, gt=0.0)
    spacing: float = Field(0.1, gt=0.0)
    clearance: Optional[float] = Field(None, ge=0.0)
    eps: float = Field(0.05, gt=0.0)
    proximity: float = Field(0.2, gt=0.0)

    def obstacle(self) -> ObstacleShape:
        from app.core.obstacle import regular_obstacle, square_obstacle

        if self.shape == "square":
            return square_obstacle(self.side)
        return regular_obstacle(self.n_sides, self.radius)

    def effective_clearance(self, h_max: float) -> float:
        return resolve_clearance(self.clearance, h_max)


class OutputConfig(_Block):
    directory: str = "results"
    formats: List[Literal["csv", "json", "svg", "txt"]] = Field(default_factory=lambda: ["csv", "json", "svg", "txt"])
    jobs: Optional[int] = Field(None, ge=1)


class ExperimentConfig(_Block):
    geometry: GeometryConfig = GeometryConfig()
    mesh: MeshConfig = MeshConfig()
    solver: SolverConfig = SolverConfig()
    analysis: AnalysisConfig = AnalysisConfig()
    obstacle: ObstacleConfig = ObstacleConfig()
    output: OutputConfig = OutputConfig()

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def load_config(path: Optional[Union[str, Path]]) -> ExperimentConfig:
    """Load and validate a JSON config; a missing path yields the defaults."""
    if path is None:
        return ExperimentConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        errors = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigError(f"invalid config {path}: {len(errors)} error(s)", errors) from e


def default_config_json() -> str:
    return json.dumps(ExperimentConfig().model_dump(mode="json"), indent=2, sort_keys=True)
