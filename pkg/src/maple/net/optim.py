"""SGD with classical momentum. Weight decay is not applied here: the loss
already folds the exact L2 gradient into the gradient tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimState:
    lr: float = 0.02
    momentum: float = 0.9
    weight_decay: float = 1e-4
    step: int = 0
    velocities: dict[str, np.ndarray] = field(default_factory=dict)


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             opt: OptimState) -> None:
    """v <- mu*v + g; theta <- theta - lr*v. Updates params in place."""
    for name, theta in params.items():
        g = grads[name]
        v = opt.velocities.get(name)
        if v is None:
            v = np.zeros_like(theta)
            opt.velocities[name] = v
        v *= opt.momentum
        v += g
        theta -= opt.lr * v
    opt.step += 1
