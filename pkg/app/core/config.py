from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # ignore variables in .env that are not declared here
    model_config = SettingsConfigDict(
        env_file=".env",
        extra="ignore",
    )

    PROJECT_NAME: str = "Quantile Pricing Lab"
    OUTPUT_SCHEMA_VERSION: str = "1"
    LOG_LEVEL: str = "INFO"

    # Monte Carlo defaults
    MC_SAMPLES: int = 1_000_000
    MC_CHUNK_SIZE: int = 65_536
    MC_MAX_WORKERS: int = 4
    MC_STREAM_BLOCK: int = 8_192

    # Pricing
    LIPSCHITZ_DELTA: float = 1.0

    # API
    CORS_ORIGINS: list[str] = ["*"]


settings = Settings()
