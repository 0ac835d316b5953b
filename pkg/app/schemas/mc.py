from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class MCParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_samples: int = Field(ge=100)
    seed: int = Field(ge=0, lt=2**64)
    chunk_size: int = Field(default=65_536, ge=1)
    two_pass: bool = False
    max_workers: int = Field(default=1, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _chunk_fits(cls, data: Any) -> Any:
        # a chunk never spans more than the whole run
        if isinstance(data, dict):
            n = data.get("n_samples")
            chunk = data.get("chunk_size", 65_536)
            if isinstance(n, int) and isinstance(chunk, int) and chunk > n:
                data = {**data, "chunk_size": n}
        return data


class MCEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    stderr: float = Field(ge=0.0)
    n_effective: int
    seed_used: int

    def interval(self, width: float = 3.0) -> tuple[float, float]:
        return (self.mean - width * self.stderr, self.mean + width * self.stderr)
