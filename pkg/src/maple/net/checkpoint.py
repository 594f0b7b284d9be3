"""Binary checkpoint format.

Layout (little-endian throughout):
    magic   8 bytes  b"MAPLENET"
    version u32      currently 1
    game    name record (u32 length + utf-8 bytes)
    size    u32      board size
    komi    f32      0 for games without komi
    netcfg  6 x u32  input_channels, blocks, filters, policy_outputs,
                     embed_dim, anchor_channels
    count   u32      number of tensor records
    records          u32 name length, name bytes, u32 rank, u32 dims[rank],
                     float32 payload

Optimizer state rides along under an "opt/" name prefix: velocity tensors
as "opt/v/<param>", scalars (lr, momentum, weight_decay, step) as rank-0
records.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .config import NetConfig
from .optim import OptimState

MAGIC = b"MAPLENET"
VERSION = 1


class CheckpointError(Exception):
    pass


@dataclass(frozen=True)
class CheckpointMeta:
    game: str
    size: int
    komi: float


def _write_record(buf: list[bytes], name: str, arr: np.ndarray):
    nb = name.encode("utf-8")
    buf.append(struct.pack("<I", len(nb)))
    buf.append(nb)
    buf.append(struct.pack("<I", arr.ndim))
    for d in arr.shape:
        buf.append(struct.pack("<I", d))
    buf.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def save_checkpoint(path, params: dict[str, np.ndarray], cfg: NetConfig,
                    meta: CheckpointMeta, opt: OptimState | None = None):
    if not params:
        raise ValueError("refusing to save an empty model")
    records: list[tuple[str, np.ndarray]] = sorted(params.items())
    if opt is not None:
        records.append(("opt/lr", np.asarray(opt.lr)))
        records.append(("opt/momentum", np.asarray(opt.momentum)))
        records.append(("opt/weight_decay", np.asarray(opt.weight_decay)))
        records.append(("opt/step", np.asarray(float(opt.step))))
        records.extend((f"opt/v/{n}", v) for n, v in sorted(opt.velocities.items()))
    buf: list[bytes] = [MAGIC, struct.pack("<I", VERSION)]
    gb = meta.game.encode("utf-8")
    buf.append(struct.pack("<I", len(gb)))
    buf.append(gb)
    buf.append(struct.pack("<If", meta.size, meta.komi))
    buf.append(struct.pack("<6I", cfg.input_channels, cfg.blocks, cfg.filters,
                           cfg.policy_outputs, cfg.embed_dim,
                           cfg.anchor_channels))
    buf.append(struct.pack("<I", len(records)))
    for name, arr in records:
        _write_record(buf, name, np.asarray(arr))
    data = b"".join(buf)
    with open(path, "wb") as fh:
        fh.write(data)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("truncated checkpoint file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f32(self) -> float:
        return struct.unpack("<f", self.take(4))[0]


def load_checkpoint(path):
    """Returns (params, cfg, meta, opt_or_None)."""
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)
    if r.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a model checkpoint")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    game = r.take(r.u32()).decode("utf-8")
    size = r.u32()
    komi = r.f32()
    cfg = NetConfig(board_size=size,
                    input_channels=r.u32(), blocks=r.u32(), filters=r.u32(),
                    policy_outputs=r.u32(), embed_dim=r.u32(),
                    anchor_channels=r.u32())
    count = r.u32()
    params: dict[str, np.ndarray] = {}
    raw_opt: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        if rank > 8:
            raise CheckpointError(f"{path}: implausible tensor rank {rank}")
        shape = tuple(r.u32() for _ in range(rank))
        n_items = int(np.prod(shape)) if shape else 1
        payload = r.take(4 * n_items)
        arr = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
        if name.startswith("opt/"):
            raw_opt[name] = arr
        else:
            params[name] = arr
    if r.pos != len(data):
        raise CheckpointError(f"{path}: trailing bytes after last record")
    _validate_shapes(params, cfg)
    opt = None
    if raw_opt:
        opt = OptimState(lr=float(raw_opt["opt/lr"]),
                         momentum=float(raw_opt["opt/momentum"]),
                         weight_decay=float(raw_opt["opt/weight_decay"]),
                         step=int(float(raw_opt["opt/step"])))
        opt.velocities = {n[len("opt/v/"):]: a for n, a in raw_opt.items()
                          if n.startswith("opt/v/")}
    return params, cfg, CheckpointMeta(game, size, komi), opt


def _validate_shapes(params: dict[str, np.ndarray], cfg: NetConfig):
    hw = cfg.board_size * cfg.board_size
    expect = {
        "body.in.w": (cfg.filters, cfg.input_channels * 9),
        "policy.fc.w": (cfg.policy_outputs, 2 * hw),
        "value.fc.w": (1, hw),
        "anchor.in.w": (cfg.filters, cfg.anchor_channels * 9),
        "state.in.w": (cfg.filters, 4 * 9),
    }
    for name, shape in expect.items():
        if name not in params:
            raise CheckpointError(f"missing tensor {name!r}")
        if params[name].shape != shape:
            raise CheckpointError(
                f"tensor {name!r} has shape {params[name].shape}, "
                f"config implies {shape}")
