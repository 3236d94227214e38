"""Training hyperparameters."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from qmwf.config import Settings, validated

# Search grid of the sweep command
LEARNING_RATES = (1e-3, 1e-4, 1e-5)
BATCH_SIZES = (80, 100, 120, 140)
L2_LAMBDAS = (1e-4, 1e-5, 1e-6)


class HyperParams(BaseModel):
    """Optimizer, batching and objective settings of one training run."""

    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(1e-3, gt=0.0)
    batch_size: int = Field(100, ge=1, description="Triplets per Adam step")
    l2_lambda: float = Field(1e-5, ge=0.0, description="Weight of (λ/2)·Σ||θ||²")
    epochs: int = Field(50, ge=1)
    margin: float = Field(0.5, gt=0.0, description="Hinge margin between positive and negative scores")
    seed: int = 0

    @classmethod
    def from_settings(cls, settings: Settings, **overrides: Any) -> "HyperParams":
        """Build from settings defaults, with explicit overrides taking precedence."""
        values: dict[str, Any] = {
            "learning_rate": settings.learning_rate,
            "batch_size": settings.batch_size,
            "l2_lambda": settings.l2_lambda,
            "epochs": settings.epochs,
            "margin": settings.margin,
            "seed": settings.seed,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return validated(cls, **values)
