from typing import Optional

from fastapi import HTTPException

from app.core.config import settings
from app.core.exceptions import ConfigError, StatisticalError
from app.schemas.api import MCQuery
from app.schemas.mc import MCParams


def mc_params_from(query: MCQuery) -> Optional[MCParams]:
    """None without a seed; Monte Carlo paths then answer 422."""
    if query.seed is None:
        return None
    return MCParams(
        n_samples=query.samples or settings.MC_SAMPLES,
        seed=query.seed,
        chunk_size=settings.MC_CHUNK_SIZE,
        two_pass=query.two_pass,
        max_workers=settings.MC_MAX_WORKERS,
    )


def to_http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, StatisticalError):
        return HTTPException(status_code=500, detail=str(exc))
    if isinstance(exc, (ConfigError, ValueError)):
        return HTTPException(status_code=422, detail=str(exc))
    return HTTPException(status_code=500, detail="internal error")
