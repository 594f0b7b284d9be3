from .checkpoint import (CheckpointError, CheckpointMeta, load_checkpoint,
                         save_checkpoint)
from .config import NetConfig
from .loss import loss_and_gradients, triplet_success_fraction
from .model import (embed_forward, forward_embeddings, forward_policy_value,
                    init_params, masked_softmax, policy_value_forward)
from .optim import OptimState, sgd_step

__all__ = [
    "CheckpointError", "CheckpointMeta", "NetConfig", "OptimState",
    "embed_forward", "forward_embeddings", "forward_policy_value",
    "init_params", "load_checkpoint", "loss_and_gradients", "masked_softmax",
    "policy_value_forward", "save_checkpoint", "sgd_step",
    "triplet_success_fraction",
]
