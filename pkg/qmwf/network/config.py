"""Network configuration."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qmwf.config import Settings, validated


class QmwfConfig(BaseModel):
    """Shape and pooling options of the product-pooling network."""

    model_config = ConfigDict(frozen=True)

    embed_dim: int = Field(..., ge=1, description="Word state dimension M")
    channels: int = Field(..., ge=1, description="Convolution channels, the CP rank R")
    patch_size: int = Field(1, ge=1, le=3, description="Words per convolution window")
    shared_kernels: bool = Field(False, description="Reuse one kernel per channel at every position")
    log_domain: bool = Field(False, description="Pool with exp(Σ log(|x| + ε) / P) and sign parity instead of Π x")
    epsilon: float = Field(1e-6, gt=0.0)
    max_positions: int = Field(40, ge=1, description="Longest sentence the kernels cover")

    @model_validator(mode="after")
    def _positions_cover_patch(self) -> "QmwfConfig":
        if self.max_positions < self.patch_size:
            raise ValueError("max_positions must be at least patch_size")
        return self

    @property
    def window_dim(self) -> int:
        """Length of one convolution window, M · patch_size."""
        return self.embed_dim * self.patch_size

    @property
    def positions(self) -> int:
        """Number of windows in a sentence of max_positions words."""
        return self.max_positions - self.patch_size + 1

    @property
    def kernel_slots(self) -> int:
        """Distinct kernels stored per channel."""
        return 1 if self.shared_kernels else self.positions

    @classmethod
    def from_settings(cls, settings: Settings, **overrides: Any) -> "QmwfConfig":
        """Build from settings defaults, with explicit overrides taking precedence."""
        values: dict[str, Any] = {
            "embed_dim": settings.embed_dim,
            "channels": settings.channels,
            "patch_size": settings.patch_size,
            "shared_kernels": settings.shared_kernels,
            "log_domain": settings.log_pool,
            "epsilon": settings.epsilon,
            "max_positions": settings.max_positions,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return validated(cls, **values)
