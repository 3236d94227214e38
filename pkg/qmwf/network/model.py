"""Trainable parameters of the network and the sentence representation."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from qmwf.errors import DimensionError
from qmwf.network.config import QmwfConfig
from qmwf.tensor.cp import CPFactors


@dataclass(frozen=True)
class Representation:
    """
    Sentence vector v = (v_1, ..., v_R), v_r = t_r · Π_r.

    In the log domain ``values`` hold t_r · exp(Σ_i log(|Σ_{r,i}| + ε) / P) and
    ``signs`` the parity (−1)^{#negative factors} of each channel.
    """

    values: np.ndarray
    signs: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise DimensionError("representation entries must be finite")
        object.__setattr__(self, "values", values)
        if self.signs is not None:
            signs = np.asarray(self.signs, dtype=np.float64).reshape(-1)
            if signs.shape != values.shape:
                raise DimensionError("signs must match values in length")
            object.__setattr__(self, "signs", signs)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def signed(self) -> np.ndarray:
        """Values with the sign parity applied."""
        return self.values if self.signs is None else self.signs * self.values


@dataclass
class QmwfModel:
    """
    Convolution kernels e_{r,i} and output weights t_r.

    ``kernels`` has shape (R, slots, M · patch_size); slots is 1 with shared
    kernels, otherwise one per window position.
    """

    config: QmwfConfig
    kernels: np.ndarray
    out_weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        cfg = self.config
        self.kernels = np.asarray(self.kernels, dtype=np.float64)
        expected = (cfg.channels, cfg.kernel_slots, cfg.window_dim)
        if self.kernels.shape != expected:
            raise DimensionError(f"kernels have shape {self.kernels.shape}, expected {expected}")
        if self.out_weights is None:
            self.out_weights = np.ones(cfg.channels)
        self.out_weights = np.asarray(self.out_weights, dtype=np.float64).reshape(-1)
        if self.out_weights.size != cfg.channels:
            raise DimensionError(f"{self.out_weights.size} output weights for {cfg.channels} channels")
        if not (np.all(np.isfinite(self.kernels)) and np.all(np.isfinite(self.out_weights))):
            raise DimensionError("model parameters must be finite")

    @classmethod
    def initialize(cls, config: QmwfConfig, rng: np.random.Generator) -> "QmwfModel":
        """Kernels uniform on ±1/√(M · patch_size), output weights 1."""
        bound = 1.0 / np.sqrt(config.window_dim)
        kernels = rng.uniform(-bound, bound, size=(config.channels, config.kernel_slots, config.window_dim))
        return cls(config=config, kernels=kernels, out_weights=np.ones(config.channels))

    def params(self) -> dict[str, np.ndarray]:
        """Trainable arrays by block name; updates to them act on the model."""
        return {"kernels": self.kernels, "out_weights": self.out_weights}

    def kernels_at(self, positions: int) -> np.ndarray:
        """Kernels for the first ``positions`` windows, shape (R, positions, W)."""
        if self.config.shared_kernels:
            return np.broadcast_to(self.kernels, (self.config.channels, positions, self.config.window_dim))
        if positions > self.config.kernel_slots:
            raise DimensionError(
                f"{positions} windows exceed the {self.config.kernel_slots} kernel positions "
                f"(max_positions={self.config.max_positions})"
            )
        return self.kernels[:, :positions]

    def copy(self) -> "QmwfModel":
        return QmwfModel(config=self.config, kernels=self.kernels.copy(), out_weights=self.out_weights.copy())

    def as_cp_factors(self, length: int) -> CPFactors:
        """
        CP factors of the global tensor this model projects a sentence of ``length`` words onto.

        Kernels are scaled to unit norm and their norms folded into the
        weights, so the projection is unchanged. Requires patch_size 1.
        """
        if self.config.patch_size != 1:
            raise DimensionError("CP factors correspond to the network only for patch_size 1")
        kernels = self.kernels[:, 0] if self.config.shared_kernels else self.kernels_at(length)
        norms = np.linalg.norm(kernels, axis=-1)
        units = kernels / np.where(norms > 0, norms, 1.0)[..., None]
        units[norms == 0] = 0.0
        units[..., 0][norms == 0] = 1.0
        if self.config.shared_kernels:
            weights = self.out_weights * norms**length
        else:
            weights = self.out_weights * np.prod(norms, axis=1)
        return CPFactors(weights=weights, factors=units, order=length, shared=self.config.shared_kernels)
