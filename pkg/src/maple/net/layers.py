"""Functional layers with explicit forward caches and analytic backward
passes. Convolutions are same-padded, stride 1, expressed as one matmul via
im2col; boards are tiny so index maps are precomputed per spatial shape.
"""

from __future__ import annotations

import numpy as np

_IM2COL_IDX: dict[tuple[int, int], np.ndarray] = {}


def _patch_index(h: int, w: int) -> np.ndarray:
    """(h*w, 9) indices into the zero-padded (h+2)*(w+2) plane."""
    key = (h, w)
    idx = _IM2COL_IDX.get(key)
    if idx is None:
        wp = w + 2
        rows = []
        for i in range(h):
            for j in range(w):
                rows.append([(i + ki) * wp + (j + kj)
                             for ki in range(3) for kj in range(3)])
        idx = np.asarray(rows, dtype=np.intp)
        _IM2COL_IDX[key] = idx
    return idx


def im2col3(x: np.ndarray) -> np.ndarray:
    """(B, C, H, W) -> (B*H*W, C*9), channel-major patch layout."""
    b, c, h, w = x.shape
    xp = np.zeros((b, c, h + 2, w + 2), dtype=x.dtype)
    xp[:, :, 1:-1, 1:-1] = x
    idx = _patch_index(h, w)
    cols = xp.reshape(b, c, -1)[:, :, idx]          # (B, C, HW, 9)
    return cols.transpose(0, 2, 1, 3).reshape(b * h * w, c * 9)


def col2im3(dcols: np.ndarray, shape: tuple[int, int, int, int]) -> np.ndarray:
    b, c, h, w = shape
    idx = _patch_index(h, w)
    d = dcols.reshape(b, h * w, c, 9).transpose(0, 2, 1, 3)
    dxp = np.zeros((b, c, (h + 2) * (w + 2)), dtype=dcols.dtype)
    np.add.at(dxp, (slice(None), slice(None), idx), d)
    return dxp.reshape(b, c, h + 2, w + 2)[:, :, 1:-1, 1:-1]


def conv3x3_forward(x, w, bias):
    """w: (F, C*9); returns (out (B,F,H,W), cache)."""
    b, c, h, wd = x.shape
    cols = im2col3(x)
    out = cols @ w.T + bias
    out = out.reshape(b, h * wd, -1).transpose(0, 2, 1).reshape(b, -1, h, wd)
    return out, (cols, w, x.shape)


def conv3x3_backward(dout, cache):
    cols, w, xshape = cache
    b, c, h, wd = xshape
    dflat = dout.reshape(b, -1, h * wd).transpose(0, 2, 1).reshape(b * h * wd, -1)
    dw = dflat.T @ cols
    db = dflat.sum(axis=0)
    dcols = dflat @ w
    dx = col2im3(dcols, xshape)
    return dx, dw, db


def conv1x1_forward(x, w, bias):
    """w: (F, C)."""
    b, c, h, wd = x.shape
    flat = x.reshape(b, c, h * wd)
    out = np.einsum("fc,bcs->bfs", w, flat, optimize=True) + bias[:, None]
    return out.reshape(b, -1, h, wd), (flat, w, x.shape)


def conv1x1_backward(dout, cache):
    flat, w, xshape = cache
    b, c, h, wd = xshape
    dflat_out = dout.reshape(b, -1, h * wd)
    dw = np.einsum("bfs,bcs->fc", dflat_out, flat, optimize=True)
    db = dflat_out.sum(axis=(0, 2))
    dx = np.einsum("fc,bfs->bcs", w, dflat_out, optimize=True).reshape(xshape)
    return dx, dw, db


def relu_forward(x):
    out = np.maximum(x, 0)
    return out, (x > 0)


def relu_backward(dout, mask):
    return dout * mask


def linear_forward(x, w, bias):
    """x: (B, D); w: (O, D)."""
    return x @ w.T + bias, (x, w)


def linear_backward(dout, cache):
    x, w = cache
    return dout @ w, dout.T @ x, dout.sum(axis=0)


def gap_forward(x):
    """Global average pool (B, C, H, W) -> (B, C)."""
    b, c, h, w = x.shape
    return x.mean(axis=(2, 3)), (x.shape,)


def gap_backward(dout, cache):
    (shape,) = cache
    b, c, h, w = shape
    return np.broadcast_to(dout[:, :, None, None] / (h * w), shape).copy()
