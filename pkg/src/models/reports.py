"""
Report models.

Training and evaluation reports; every report embeds the resolved
configuration so a run can be reconstructed from its outputs alone.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator


class TrainingReport(BaseModel):
    """Outcome of one training run."""

    npe_label: str
    config: Dict[str, Any] = Field(default_factory=dict)
    seed: int
    epoch_losses: List[float] = Field(default_factory=list)
    validation_mae: List[float] = Field(default_factory=list)
    initial_loss: Optional[float] = None
    n_train: int = Field(default=0, ge=0)
    parameter_count: int = Field(default=0, ge=0)
    wall_seconds: float = Field(default=0.0, ge=0.0)


class MetricReport(BaseModel):
    """Accuracy of one configuration on one density."""

    mae: float = Field(..., ge=0.0)
    rmse: float = Field(..., ge=0.0)
    n_test: int = Field(..., ge=0)
    n_removed_outliers: int = Field(default=0, ge=0)
    npe_label: str
    density: float
    seed: int
    baseline_mae: Optional[float] = None
    baseline_rmse: Optional[float] = None
    published_mae: Optional[float] = None
    published_rmse: Optional[float] = None
    wall_seconds: float = Field(default=0.0, ge=0.0)
    config: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_power_mean(self) -> "MetricReport":
        """RMSE dominates MAE over the same residuals."""
        if self.rmse + 1e-12 < self.mae:
            raise ValueError(f"rmse {self.rmse} < mae {self.mae}")
        return self

    @property
    def mae_improvement_over_baseline(self) -> Optional[float]:
        """Relative MAE reduction against the global-mean baseline."""
        if not self.baseline_mae:
            return None
        return (self.baseline_mae - self.mae) / self.baseline_mae

    def table_row(self) -> str:
        """Single-line rendering in the style of the published comparison table."""
        row = (
            f"NPEd={self.npe_label} MD={self.density * 100:.0f}% "
            f"MAE={self.mae:.3f} RMSE={self.rmse:.3f} n_test={self.n_test} "
            f"removed={self.n_removed_outliers}"
        )
        if self.published_mae is not None and self.published_rmse is not None:
            row += f" | published MAE={self.published_mae:.3f} RMSE={self.published_rmse:.3f}"
        if self.baseline_mae is not None:
            row += f" | global-mean MAE={self.baseline_mae:.3f}"
        return row


class SweepCellResult(BaseModel):
    """One sweep cell: a report on success or the failure message."""

    cell_index: int
    npe_label: str
    density: float
    report: Optional[MetricReport] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.report is None


class SweepResult(BaseModel):
    """All cells of a sweep plus the reported (never gating) trend checks."""

    cells: List[SweepCellResult] = Field(default_factory=list)
    trend_checks: List[Dict[str, Any]] = Field(default_factory=list)

    @property
    def reports(self) -> List[MetricReport]:
        return [c.report for c in self.cells if c.report is not None]

    @property
    def n_failed(self) -> int:
        return sum(1 for c in self.cells if c.failed)
