"""Application configuration using Pydantic Settings."""

from functools import lru_cache
from pathlib import Path
from typing import Any, Literal, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from qmwf.errors import ConfigValidationError


class Settings(BaseSettings):
    """Settings loaded from environment variables, `.env` or a key-value file."""

    model_config = SettingsConfigDict(
        env_prefix="QMWF_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Tensor algebra
    tensor_element_cap: int = 10_000_000

    # Runtime
    seed: int = 0
    log_level: str = "INFO"

    # Model
    embed_dim: int = 50
    channels: int = 150
    patch_size: int = 1
    shared_kernels: bool = False
    log_pool: bool = False
    epsilon: float = 1e-6
    max_positions: int = 40

    # Training
    learning_rate: float = 1e-3
    batch_size: int = 100
    l2_lambda: float = 1e-5
    epochs: int = 50
    margin: float = 0.5
    # Unset keeps the negatives the data ships with
    neg_k: Optional[int] = None

    # Char path
    char_window: int = 3
    char_pool: Union[Literal["word"], int] = "word"

    # Verification suite
    verify_oracle_instances: int = 1000
    verify_grad_configs: int = 10
    verify_als_seeds: int = 20


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def load_settings_file(path: Optional[Path]) -> Settings:
    """
    Load settings from a key-value config file.

    Keys are Settings field names with the ``QMWF_`` prefix
    (``QMWF_LEARNING_RATE=0.0001``). Environment variables still apply
    to keys the file does not set.

    Args:
        path: Config file, or None for the cached default settings

    Returns:
        Settings instance

    Raises:
        ConfigValidationError: If a value in the file fails validation
    """
    if path is None:
        return get_settings()
    try:
        return Settings(_env_file=str(path))
    except ValidationError as exc:
        raise ConfigValidationError(f"--config {path}: {exc}") from exc


ModelT = TypeVar("ModelT", bound=BaseModel)


def validated(model_cls: Type[ModelT], **values: Any) -> ModelT:
    """
    Build a pydantic model, reporting invalid values as ConfigValidationError.

    Args:
        model_cls: Model class to instantiate
        **values: Field values

    Returns:
        Validated model instance
    """
    try:
        return model_cls(**values)
    except ValidationError as exc:
        raise ConfigValidationError(f"invalid {model_cls.__name__}: {exc}") from exc
