"""Joint training objective: squared value error, policy cross-entropy, a
margin-1 triplet hinge on the embedding towers, and L2 regularization.

    mean_i [ (z_i - v_i)^2  -  pi_i . log p_i  +  max(0, 1 + d_ap - d_an) ]
        + c * sum(theta^2)

Records whose information set is a singleton carry no triplet term: their
hinge contributes 0 and the skip is reported so training can log the
skipped fraction. All gradients are exact analytic derivatives; the hinge
takes subgradient 0 at the kink and distance gradients are zeroed at
coincident embeddings.
"""

from __future__ import annotations

import numpy as np

from . import model as M
from .config import NetConfig

EPS_DIST = 1e-12


def loss_and_gradients(params: dict, cfg: NetConfig, batch: dict,
                       weight_decay: float = 1e-4):
    """Returns (total, parts, grads).

    batch keys: state (B,6,n,n), pi (B,A), legal (B,A) bool, z (B,),
    anchor (B,Ca,n,n), positive (B,4,n,n), negative (B,4,n,n),
    triplet_mask (B,) bool.
    """
    state = batch["state"]
    pi = batch["pi"]
    legal = batch["legal"]
    z = batch["z"]
    bsz = state.shape[0]
    grads: dict[str, np.ndarray] = {}

    policy, value, pv_cache = M.policy_value_forward(params, cfg, state, legal)
    value_loss = float(np.mean((z - value) ** 2))
    # -pi . log p over legal entries only; pi is zero wherever legal is zero.
    logp = np.where(policy > 0, np.log(np.where(policy > 0, policy, 1.0)), 0.0)
    policy_loss = float(-(pi * logp).sum(axis=1).mean())

    dvalue = 2.0 * (value - z) / bsz
    dlogits = (policy - pi) * legal / bsz
    M.policy_value_backward(params, cfg, dlogits, dvalue, pv_cache, grads)

    ea, ca = M.embed_forward(params, cfg, "anchor", batch["anchor"])
    ep, cp = M.embed_forward(params, cfg, "state", batch["positive"])
    en, cn = M.embed_forward(params, cfg, "state", batch["negative"])
    mask = batch["triplet_mask"].astype(ea.dtype)
    diff_ap = ea - ep
    diff_an = ea - en
    d_ap = np.linalg.norm(diff_ap, axis=1)
    d_an = np.linalg.norm(diff_an, axis=1)
    hinge = np.maximum(0.0, 1.0 + d_ap - d_an) * mask
    triplet_loss = float(hinge.sum() / bsz)
    active = ((1.0 + d_ap - d_an) > 0) * mask / bsz
    # d(d)/d(diff) = diff / d, guarded at zero distance
    g_ap = (active / np.maximum(d_ap, EPS_DIST))[:, None] * diff_ap
    g_an = -(active / np.maximum(d_an, EPS_DIST))[:, None] * diff_an
    M.embed_backward(params, cfg, "anchor", g_ap + g_an, ca, grads)
    M.embed_backward(params, cfg, "state", -g_ap, cp, grads)
    M.embed_backward(params, cfg, "state", -g_an, cn, grads)

    l2 = 0.0
    for name, theta in params.items():
        l2 += float((theta.astype(np.float64) ** 2).sum())
        grads[name] = grads.get(name, 0) + 2.0 * weight_decay * theta
    l2_loss = weight_decay * l2

    n_usable = float(mask.sum())
    parts = {
        "value": value_loss,
        "policy": policy_loss,
        "triplet": triplet_loss,
        "l2": l2_loss,
        "triplet_skipped": float(bsz - n_usable) / bsz,
        "triplet_success": float(((d_ap < d_an) * mask).sum() / n_usable)
        if n_usable else 0.0,
    }
    total = value_loss + policy_loss + triplet_loss + l2_loss
    return total, parts, grads


def triplet_success_fraction(params, cfg, anchors, positives, negatives) -> float:
    """Fraction of triplets with d(anchor, positive) < d(anchor, negative)."""
    ea, _ = M.embed_forward(params, cfg, "anchor", anchors)
    ep, _ = M.embed_forward(params, cfg, "state", positives)
    en, _ = M.embed_forward(params, cfg, "state", negatives)
    d_ap = np.linalg.norm(ea - ep, axis=1)
    d_an = np.linalg.norm(ea - en, axis=1)
    return float(np.mean(d_ap < d_an))
