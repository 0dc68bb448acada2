"""
Experiment configuration models.

One validated record holds every run parameter: file locations, RCM settings,
network hyperparameters and the evaluation protocol. Defaults mirror the
published response-time settings (N_u=5, N_s=15, N=2, PE=0, d=16, eta=0.0005).
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PathsConfig(BaseModel):
    """Input and output locations."""

    model_config = ConfigDict(extra="forbid")

    matrix: str = Field(default="data/rtMatrix.txt", description="QoS matrix file")
    matrix_format: Literal["matrix-text", "csv"] = Field(default="matrix-text")
    user_metadata: Optional[str] = Field(default=None, description="User region table")
    service_metadata: Optional[str] = Field(default=None, description="Service region table")
    metadata_format: Literal["csv", "wsdream"] = Field(default="csv")
    output_dir: str = Field(default="output", description="Directory for all artifacts")


class RcmConfig(BaseModel):
    """Reputation calculation settings."""

    model_config = ConfigDict(extra="forbid")

    n_user_clusters: int = Field(default=5, ge=1, description="N_u")
    n_service_clusters: int = Field(default=15, ge=1, description="N_s")
    beta: float = Field(default=0.05, gt=0.0, description="Logit coefficient")
    kmeans_max_iter: int = Field(default=100, ge=1)


class ModelConfig(BaseModel):
    """Network and optimizer hyperparameters."""

    model_config = ConfigDict(extra="forbid")

    d: int = Field(default=16, gt=0, description="Latent dimension, divisible by 4")
    n_stack: int = Field(default=2, ge=0, le=9, description="Number of stacked QPHN blocks")
    use_pe: bool = Field(default=False, description="Learned position embeddings in encoders")
    token_dim: Optional[int] = Field(default=None, gt=0, description="Attention token width")
    lambda_reg: float = Field(default=1e-4, ge=0.0)
    batch_size: int = Field(default=256, ge=1)
    epochs: int = Field(default=50, ge=0)
    learning_rate: float = Field(default=0.0005, ge=0.0, description="eta")
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)

    @field_validator("d")
    @classmethod
    def validate_d(cls, v: int) -> int:
        """d must be divisible by 4 and fit the two-digit label."""
        if v % 4 != 0:
            raise ValueError("d must be divisible by 4")
        if v > 99:
            raise ValueError("d must be at most 99")
        return v

    @model_validator(mode="after")
    def validate_token_dim(self) -> "ModelConfig":
        """token_dim must divide every encoder scale (2d, d, d/2)."""
        token_dim = self.resolved_token_dim
        for width in (2 * self.d, self.d, self.d // 2):
            if width % token_dim != 0:
                raise ValueError(f"token_dim {token_dim} does not divide scale width {width}")
        return self

    @property
    def resolved_token_dim(self) -> int:
        """Token width, defaulting to d/4."""
        return self.token_dim if self.token_dim is not None else self.d // 4


class ProtocolConfig(BaseModel):
    """Evaluation protocol settings."""

    model_config = ConfigDict(extra="forbid")

    densities: List[float] = Field(default_factory=lambda: [0.02, 0.04, 0.06, 0.08, 0.10])
    outlier_fraction: float = Field(default=0.10, ge=0.0, lt=1.0)
    seed: int = Field(default=42, ge=0, lt=2**64)
    validation_fraction: float = Field(
        default=0.0, ge=0.0, lt=1.0,
        description="Share of the training split held out for per-epoch validation MAE",
    )
    workers: int = Field(default=1, ge=1, description="Parallel sweep cells")

    @field_validator("densities")
    @classmethod
    def validate_densities(cls, v: List[float]) -> List[float]:
        """Every density must lie in (0, 1]."""
        if not v:
            raise ValueError("at least one density is required")
        for density in v:
            if not 0.0 < density <= 1.0:
                raise ValueError(f"density {density} outside (0, 1]")
        return v


class LoggingConfig(BaseModel):
    """Logging settings."""

    model_config = ConfigDict(extra="forbid")

    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    log_dir: str = "logs"
    max_file_size_mb: int = Field(default=10, ge=1)
    backup_count: int = Field(default=5, ge=0)


class ExperimentConfig(BaseModel):
    """Every run parameter in one validated record."""

    model_config = ConfigDict(extra="forbid")

    paths: PathsConfig = Field(default_factory=PathsConfig)
    rcm: RcmConfig = Field(default_factory=RcmConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    protocol: ProtocolConfig = Field(default_factory=ProtocolConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    def echo(self) -> dict:
        """Plain-dict rendering embedded in every output artifact."""
        return self.model_dump(mode="json")


class RahnConfig(BaseModel):
    """Architecture record of one network: what a checkpoint must agree on."""

    model_config = ConfigDict(extra="forbid")

    d: int = Field(default=16, gt=0)
    n_stack: int = Field(default=2, ge=0, le=9)
    use_pe: bool = False
    token_dim: Optional[int] = Field(default=None, gt=0)
    lambda_reg: float = Field(default=1e-4, ge=0.0)
    beta: float = Field(default=0.05, gt=0.0)
    seed: int = Field(default=42, ge=0)

    @model_validator(mode="after")
    def validate_shapes(self) -> "RahnConfig":
        """Same shape rules as ModelConfig."""
        ModelConfig(d=self.d, n_stack=self.n_stack, token_dim=self.token_dim)
        return self

    @property
    def resolved_token_dim(self) -> int:
        return self.token_dim if self.token_dim is not None else self.d // 4

    @property
    def npe_label(self) -> str:
        """Label "NPEd": N as one digit, PE as one digit, d as two digits."""
        return f"{self.n_stack}{int(self.use_pe)}{self.d:02d}"

    @classmethod
    def from_experiment(cls, config: ExperimentConfig, seed: Optional[int] = None) -> "RahnConfig":
        """Project the experiment record onto the network settings."""
        return cls(
            d=config.model.d,
            n_stack=config.model.n_stack,
            use_pe=config.model.use_pe,
            token_dim=config.model.token_dim,
            lambda_reg=config.model.lambda_reg,
            beta=config.rcm.beta,
            seed=config.protocol.seed if seed is None else seed,
        )
