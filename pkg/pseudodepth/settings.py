"""Process-level settings."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="PSD_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"
    log_format: str = "json"  # json | text

    # Torch runtime
    torch_threads: int = 1
    deterministic: bool = True  # torch.use_deterministic_algorithms in serial mode

    # Artifact publishing
    max_io_retries: int = 3
    io_retry_delay: float = 0.2


# Global settings instance
settings = Settings()
