from enum import Enum
from typing import Any

from pydantic import BaseModel, Field, field_validator, model_validator

UINT64_MAX = 2**64 - 1


class Mode(str, Enum):
    binomial = "binomial"
    multinomial = "multinomial"


class PriorKind(str, Enum):
    horseshoe = "horseshoe"
    normal = "normal"


class ModelTag(str, Enum):
    fm_w = "FM-W"
    sm_w = "SM-W"
    fm_uw = "FM-UW"
    sm_uw = "SM-UW"

    @property
    def functional(self) -> bool:
        return self in (ModelTag.fm_w, ModelTag.fm_uw)

    @property
    def weighted(self) -> bool:
        return self in (ModelTag.fm_w, ModelTag.sm_w)


class SamplerConfig(BaseModel):
    iterations: int = Field(5000, gt=0, description="Total Gibbs sweeps.")
    burn_in: int = Field(
        1000, ge=0, description="Sweeps discarded before retaining draws."
    )
    thin: int = Field(1, gt=0, description="Keep every thin-th draw.")
    sigma2_beta: float = Field(
        10.0, gt=0, description="Prior variance of the scalar coefficients."
    )
    seed: int = Field(0, ge=0, le=UINT64_MAX, description="Master seed.")
    chains: int = Field(1, gt=0, description="Independent chains to run.")
    prior: PriorKind = Field(
        PriorKind.horseshoe,
        description="Prior on the functional coefficients b.",
    )
    sigma2_b: float = Field(
        10.0,
        gt=0,
        description="Prior variance of b when prior is 'normal'.",
    )
    validate_state: bool = Field(
        False,
        description="Check every state invariant after each sweep.",
    )

    @model_validator(mode="after")
    def check_burn_in(self) -> "SamplerConfig":
        if self.burn_in >= self.iterations:
            raise ValueError(
                f"burn_in ({self.burn_in}) must be less than iterations "
                f"({self.iterations})"
            )
        return self

    @property
    def retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


class SimulationConfig(BaseModel):
    replicates: int = Field(20, gt=0)
    expected_n: float = Field(300.0, gt=0)
    informative: bool = Field(
        True,
        description=(
            "Use the response-dependent size variable; when False every "
            "unit has the same size."
        ),
    )
    population_size: int = Field(
        2000,
        gt=1,
        description="Units generated when no population file is given.",
    )
    grid_size: int = Field(
        96, gt=1, description="Grid points of generated populations."
    )


class ColumnContract(BaseModel):
    id_column: str = "unit_id"
    response_column: str = "response"
    trials_column: str | None = None
    weight_column: str = "weight"
    category_column: str | None = None
    covariates: list[str] = []
    delimiter: str = ","


class RunConfig(BaseModel):
    mode: Mode = Mode.binomial
    curves_file: str | None = None
    scalars_file: str | None = None
    out_dir: str = "surveyfda-out"
    threshold: float = Field(0.95, gt=0, le=1)
    log1p: bool = False
    intercept: bool = True
    standardize: bool = Field(
        True,
        description=(
            "Center and scale covariates; the scaling is stored with the "
            "draws and reused for prediction."
        ),
    )
    categories: list[str] = []
    columns: ColumnContract = ColumnContract()
    sampler: SamplerConfig = SamplerConfig()
    simulation: SimulationConfig = SimulationConfig()
    threads: int = Field(1, gt=0)

    @field_validator("categories")
    @classmethod
    def unique_categories(cls, value: list[str]) -> list[str]:
        if len(set(value)) != len(value):
            raise ValueError(f"categories must be distinct: {value}")
        return value

    @model_validator(mode="after")
    def check_mode(self) -> "RunConfig":
        if self.mode == Mode.multinomial:
            if len(self.categories) < 2:
                raise ValueError(
                    "multinomial mode needs an ordered list of at least 2 "
                    "categories"
                )
            if not self.columns.category_column:
                raise ValueError("multinomial mode needs a category_column")
        return self


class BceReport(BaseModel):
    model_tag: ModelTag
    replicate: int
    bce: float = Field(..., ge=0)
    sample_size: int = 0
    K: int = 0


class ArtifactMetadata(BaseModel):
    """Sidecar document written next to every draws file."""

    code_version: str
    seed: int
    config: dict[str, Any]
    basis: dict[str, Any] | None = None
    covariate_names: list[str] = []
    covariate_scaling: dict[str, list[float]] = {}
    category_names: list[str] = []
    slice_index: int | None = None
    columns: list[str] = []


class SimulationMetadata(BaseModel):
    """Provenance document written by the simulate command."""

    code_version: str
    seed: int
    config: dict[str, Any]
    population_size: int
    replicates: int
    failed_replicates: list[int] = []
    basis_sharing: str = (
        "one basis per subsample, shared by the functional fits"
    )
