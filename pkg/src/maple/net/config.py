from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class NetConfig:
    """Shapes for the policy/value network and the two embedding towers."""

    board_size: int
    policy_outputs: int          # board area, +1 when the game has a pass
    anchor_channels: int         # 34 Phantom Go, 18 Dark Hex
    input_channels: int = 6
    blocks: int = 1
    filters: int = 16
    embed_dim: int = 64

    def __post_init__(self):
        for name in ("board_size", "policy_outputs", "anchor_channels",
                     "input_channels", "blocks", "filters", "embed_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
