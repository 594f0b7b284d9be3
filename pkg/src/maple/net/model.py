"""Parameter initialization and forward passes for the residual
policy/value network and the two embedding towers.

The shared body is an input 3x3 conv plus `blocks` residual blocks (two
3x3 convs each, identity skip, ReLU). The policy head is a 1x1 conv to 2
channels, ReLU, then an affine map to action logits; the value head is a
1x1 conv to 1 channel, ReLU, affine to a scalar, tanh. The anchor and
state towers repeat the body shape with their own weights and finish with
global average pooling and an affine map to the embedding dimension; they
share nothing with the policy/value trunk.
"""

from __future__ import annotations

import numpy as np

from . import layers as L
from .config import NetConfig

def tower_in_channels(cfg: NetConfig, prefix: str) -> int:
    if prefix == "body":
        return cfg.input_channels
    if prefix == "anchor":
        return cfg.anchor_channels
    if prefix == "state":
        return 4
    raise ValueError(prefix)


def init_params(cfg: NetConfig, rng: np.random.Generator,
                dtype=np.float32, zero: bool = False) -> dict[str, np.ndarray]:
    params: dict[str, np.ndarray] = {}

    def he(shape, fan_in):
        if zero:
            return np.zeros(shape, dtype=dtype)
        return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)

    def zeros(shape):
        return np.zeros(shape, dtype=dtype)

    f = cfg.filters
    hw = cfg.board_size * cfg.board_size
    for prefix in ("body", "anchor", "state"):
        cin = tower_in_channels(cfg, prefix)
        params[f"{prefix}.in.w"] = he((f, cin * 9), cin * 9)
        params[f"{prefix}.in.b"] = zeros(f)
        for i in range(cfg.blocks):
            for leg in ("c1", "c2"):
                params[f"{prefix}.res{i}.{leg}.w"] = he((f, f * 9), f * 9)
                params[f"{prefix}.res{i}.{leg}.b"] = zeros(f)
    params["policy.conv.w"] = he((2, f), f)
    params["policy.conv.b"] = zeros(2)
    params["policy.fc.w"] = he((cfg.policy_outputs, 2 * hw), 2 * hw)
    params["policy.fc.b"] = zeros(cfg.policy_outputs)
    params["value.conv.w"] = he((1, f), f)
    params["value.conv.b"] = zeros(1)
    params["value.fc.w"] = he((1, hw), hw)
    params["value.fc.b"] = zeros(1)
    for prefix in ("anchor", "state"):
        params[f"{prefix}.fc.w"] = he((cfg.embed_dim, f), f)
        params[f"{prefix}.fc.b"] = zeros(cfg.embed_dim)
    return params


def _check_finite(x: np.ndarray):
    if not np.all(np.isfinite(x)):
        raise FloatingPointError("non-finite activation (training bug)")


def body_forward(params, cfg: NetConfig, prefix: str, x):
    caches = []
    h, c_in = L.conv3x3_forward(x, params[f"{prefix}.in.w"],
                                params[f"{prefix}.in.b"])
    h, m_in = L.relu_forward(h)
    caches.append(("in", c_in, m_in))
    for i in range(cfg.blocks):
        t, c1 = L.conv3x3_forward(h, params[f"{prefix}.res{i}.c1.w"],
                                  params[f"{prefix}.res{i}.c1.b"])
        t, m1 = L.relu_forward(t)
        t, c2 = L.conv3x3_forward(t, params[f"{prefix}.res{i}.c2.w"],
                                  params[f"{prefix}.res{i}.c2.b"])
        s = h + t
        h, m2 = L.relu_forward(s)
        caches.append((f"res{i}", c1, m1, c2, m2))
    _check_finite(h)
    return h, caches


def body_backward(params, cfg: NetConfig, prefix: str, dh, caches, grads):
    for entry in reversed(caches[1:]):
        name, c1, m1, c2, m2 = entry
        ds = L.relu_backward(dh, m2)
        dt, dw2, db2 = L.conv3x3_backward(ds, c2)
        dt = L.relu_backward(dt, m1)
        dx, dw1, db1 = L.conv3x3_backward(dt, c1)
        grads[f"{prefix}.{name}.c2.w"] = grads.get(f"{prefix}.{name}.c2.w", 0) + dw2
        grads[f"{prefix}.{name}.c2.b"] = grads.get(f"{prefix}.{name}.c2.b", 0) + db2
        grads[f"{prefix}.{name}.c1.w"] = grads.get(f"{prefix}.{name}.c1.w", 0) + dw1
        grads[f"{prefix}.{name}.c1.b"] = grads.get(f"{prefix}.{name}.c1.b", 0) + db1
        dh = ds + dx
    _, c_in, m_in = caches[0]
    dh = L.relu_backward(dh, m_in)
    dx, dw, db = L.conv3x3_backward(dh, c_in)
    grads[f"{prefix}.in.w"] = grads.get(f"{prefix}.in.w", 0) + dw
    grads[f"{prefix}.in.b"] = grads.get(f"{prefix}.in.b", 0) + db
    return dx


def masked_softmax(logits: np.ndarray, legal: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the legal entries; illegal entries are 0."""
    if not legal.any(axis=1).all():
        raise ValueError("a row has no legal action")
    neg = np.finfo(logits.dtype).min / 4
    z = np.where(legal, logits, neg)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z) * legal
    return e / e.sum(axis=1, keepdims=True)


def policy_value_forward(params, cfg: NetConfig, x, legal):
    """Returns (policy (B, A), value (B,), cache)."""
    h, body_c = body_forward(params, cfg, "body", x)
    b = x.shape[0]
    ph, pc = L.conv1x1_forward(h, params["policy.conv.w"], params["policy.conv.b"])
    ph, pm = L.relu_forward(ph)
    logits, pfc = L.linear_forward(ph.reshape(b, -1), params["policy.fc.w"],
                                   params["policy.fc.b"])
    vh, vc = L.conv1x1_forward(h, params["value.conv.w"], params["value.conv.b"])
    vh, vm = L.relu_forward(vh)
    vraw, vfc = L.linear_forward(vh.reshape(b, -1), params["value.fc.w"],
                                 params["value.fc.b"])
    value = np.tanh(vraw[:, 0])
    _check_finite(logits)
    _check_finite(value)
    policy = masked_softmax(logits, legal)
    cache = (body_c, pc, pm, pfc, vc, vm, vfc, value, policy, x.shape, h.shape)
    return policy, value, cache


def policy_value_backward(params, cfg: NetConfig, dlogits, dvalue, cache, grads):
    """dlogits: (B, A) grad at the pre-softmax logits; dvalue: (B,) grad at
    the post-tanh value."""
    (body_c, pc, pm, pfc, vc, vm, vfc, value, _policy, xshape, hshape) = cache
    b = xshape[0]
    dvraw = (dvalue * (1.0 - value * value))[:, None]
    dvh, dwv, dbv = L.linear_backward(dvraw, vfc)
    grads["value.fc.w"] = grads.get("value.fc.w", 0) + dwv
    grads["value.fc.b"] = grads.get("value.fc.b", 0) + dbv
    dvh = L.relu_backward(dvh.reshape(b, 1, cfg.board_size, cfg.board_size), vm)
    dh_v, dwvc, dbvc = L.conv1x1_backward(dvh, vc)
    grads["value.conv.w"] = grads.get("value.conv.w", 0) + dwvc
    grads["value.conv.b"] = grads.get("value.conv.b", 0) + dbvc

    dph, dwp, dbp = L.linear_backward(dlogits, pfc)
    grads["policy.fc.w"] = grads.get("policy.fc.w", 0) + dwp
    grads["policy.fc.b"] = grads.get("policy.fc.b", 0) + dbp
    dph = L.relu_backward(dph.reshape(b, 2, cfg.board_size, cfg.board_size), pm)
    dh_p, dwpc, dbpc = L.conv1x1_backward(dph, pc)
    grads["policy.conv.w"] = grads.get("policy.conv.w", 0) + dwpc
    grads["policy.conv.b"] = grads.get("policy.conv.b", 0) + dbpc

    return body_backward(params, cfg, "body", dh_p + dh_v, body_c, grads)


def embed_forward(params, cfg: NetConfig, prefix: str, x):
    """Returns (embedding (B, D), cache)."""
    h, body_c = body_forward(params, cfg, prefix, x)
    pooled, gc = L.gap_forward(h)
    emb, fc = L.linear_forward(pooled, params[f"{prefix}.fc.w"],
                               params[f"{prefix}.fc.b"])
    _check_finite(emb)
    return emb, (body_c, gc, fc)


def embed_backward(params, cfg: NetConfig, prefix: str, demb, cache, grads):
    body_c, gc, fc = cache
    dpool, dw, db = L.linear_backward(demb, fc)
    grads[f"{prefix}.fc.w"] = grads.get(f"{prefix}.fc.w", 0) + dw
    grads[f"{prefix}.fc.b"] = grads.get(f"{prefix}.fc.b", 0) + db
    dh = L.gap_backward(dpool, gc)
    return body_backward(params, cfg, prefix, dh, body_c, grads)


def forward_policy_value(params, cfg: NetConfig, planes, legal):
    """Inference entry point; accepts a single (C, n, n) example or a batch."""
    single = planes.ndim == 3
    x = planes[None] if single else planes
    lm = legal[None] if single else legal
    policy, value, _ = policy_value_forward(params, cfg, x, lm)
    if single:
        return policy[0], float(value[0])
    return policy, value


def forward_embeddings(params, cfg: NetConfig, anchor_planes, board_planes):
    """Embeddings and distances for one anchor against a stack of boards.

    Returns (anchor_embedding (D,), board_embeddings (M, D), distances (M,)).
    """
    ea, _ = embed_forward(params, cfg, "anchor", anchor_planes[None])
    es, _ = embed_forward(params, cfg, "state", board_planes)
    d = np.linalg.norm(es - ea, axis=1)
    return ea[0], es, d
