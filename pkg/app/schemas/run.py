import enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings
from app.schemas.mc import MCParams


class OutputFormat(str, enum.Enum):
    CSV = "csv"
    JSON = "json"


class RunConfig(BaseModel):
    """Everything one CLI invocation depends on besides the settings."""

    model_config = ConfigDict(frozen=True)

    subcommand: str
    spec_path: Optional[str] = None
    theta_scale: Optional[float] = Field(default=None, ge=0.0)
    claim: str = "const:1"
    n: int = Field(default=1, ge=1)
    n_grid: Optional[tuple[int, ...]] = None
    alpha: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    alpha_grid: Optional[tuple[float, ...]] = None
    eps: Optional[float] = None
    eps_grid: Optional[tuple[float, ...]] = None
    delta: Optional[float] = None
    budget: Optional[float] = None
    minimize: bool = False
    atoms_path: Optional[str] = None
    np_kind: str = "naa1"
    method: str = "auto"
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    n_samples: int = Field(default_factory=lambda: settings.MC_SAMPLES, ge=100)
    chunk_size: int = Field(default_factory=lambda: settings.MC_CHUNK_SIZE, ge=1)
    max_workers: int = Field(default_factory=lambda: settings.MC_MAX_WORKERS, ge=1)
    two_pass: bool = False
    out: Optional[str] = None
    format: Optional[OutputFormat] = None

    def mc_params(self) -> Optional[MCParams]:
        """None without a seed; stochastic paths then refuse to run."""
        if self.seed is None:
            return None
        return MCParams(
            n_samples=self.n_samples,
            seed=self.seed,
            chunk_size=self.chunk_size,
            two_pass=self.two_pass,
            max_workers=self.max_workers,
        )
