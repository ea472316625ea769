"""Bridge run configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BridgeConfig:
    """Checkpoint and inference settings shared by all exporters."""

    model: str
    device: str = "cpu"
    batch_size: int = 16
    max_length: int = 512
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if self.max_length <= 1:
            raise ValueError("max_length must leave room for at least one token")
