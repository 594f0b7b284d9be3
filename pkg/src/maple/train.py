"""Self-play data generation, replay buffer, and the joint optimization
loop.

The self-play driver is omniscient: it runs the referee, so each decision
can store the true world state next to the mover's observation history.
That pairing is what lets the embedding towers train jointly with the
policy/value network with no external dataset: the anchor is the history
encoding, the positive is the true board, and negatives are drawn fresh
from the information set every time a record is sampled into a batch.
"""

from __future__ import annotations

import pickle
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encode import anchor_channels, encode_board4, encode_history, \
    encode_state_from_histories
from .games.referee import Game, Referee
from .games.types import GameOutcome, Player, outcome_value
from .net import (CheckpointMeta, NetConfig, OptimState, init_params,
                  loss_and_gradients, save_checkpoint, sgd_step)
from .sampling import InformationConstraints, derive_constraints, sample_random
from .search import (BudgetCounter, NetEvaluator, SearchConfig, legal_mask,
                     maple_search, pimc_search)

# Safety valve for degenerate self-play Go games that never pass.
MAX_TURNS_FACTOR = 6


@dataclass
class TrainingRecord:
    state: np.ndarray                  # (6, n, n), omniscient encoding
    pi: np.ndarray                     # (A,), projected onto true legality
    legal: np.ndarray                  # (A,) bool, true-world legal mask
    anchor: np.ndarray                 # viewer history encoding
    positive: np.ndarray               # (4, n, n), true board
    positive_cells: bytes
    constraints: InformationConstraints
    to_play: Player
    z: float = 0.0


@dataclass
class TrainConfig:
    iterations: int = 20
    games_per_iter: int = 50
    steps_per_iter: int = 100
    batch: int = 64
    lr: float = 0.02
    momentum: float = 0.9
    weight_decay: float = 1e-4
    buffer_games: int = 500
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        for name in ("iterations", "games_per_iter", "steps_per_iter",
                     "batch", "buffer_games", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


class ReplayBuffer:
    """FIFO over whole games; batch sampling is uniform over all stored
    decisions, with one element redrawn if a draw ever lands on a single
    game while more are available."""

    def __init__(self, capacity_games: int):
        self.capacity = capacity_games
        self.games: deque[list[TrainingRecord]] = deque()

    def append(self, records: list[TrainingRecord]):
        self.games.append(records)
        while len(self.games) > self.capacity:
            self.games.popleft()

    def __len__(self) -> int:
        return len(self.games)

    @property
    def num_records(self) -> int:
        return sum(len(g) for g in self.games)

    def sample(self, batch: int, rng: np.random.Generator) -> list[TrainingRecord]:
        lengths = np.array([len(g) for g in self.games])
        cum = np.cumsum(lengths)
        flat_ids = rng.integers(0, cum[-1], size=batch)
        games = np.searchsorted(cum, flat_ids, side="right")
        if len(self.games) >= 2 and len(set(games.tolist())) < 2:
            other = [i for i in range(len(self.games)) if i != games[0]]
            g2 = int(rng.choice(other))
            start = cum[g2 - 1] if g2 > 0 else 0
            flat_ids[-1] = start + rng.integers(0, lengths[g2])
            games[-1] = g2
        out = []
        for fid, g in zip(flat_ids, games):
            start = cum[g - 1] if g > 0 else 0
            out.append(self.games[g][fid - start])
        return out


def _make_record(game: Game, ref: Referee, actor: Player,
                 pi: np.ndarray) -> TrainingRecord:
    world = ref.world
    hist = ref.histories[actor]
    opp_hist = ref.histories[actor.opponent]
    mask = legal_mask(game, world)
    proj = pi * mask
    total = proj.sum()
    if total > 0:
        proj = proj / total
    else:
        proj = mask / mask.sum()
    return TrainingRecord(
        state=encode_state_from_histories(game, world, actor, hist, opp_hist),
        pi=proj.astype(np.float32),
        legal=mask,
        anchor=encode_history(game, hist),
        positive=encode_board4(game, world, actor),
        positive_cells=world.cells,
        constraints=derive_constraints(game, hist),
        to_play=actor,
    )


@dataclass
class SelfplayResult:
    records: list[TrainingRecord]
    outcome: GameOutcome
    turns: int
    counter: BudgetCounter
    forfeited: bool = False
    record_text: str = ""


def selfplay_game(game: Game, evaluator: NetEvaluator, cfg: SearchConfig,
                  algorithm: str, rng: np.random.Generator) -> SelfplayResult:
    """Play one game with both seats driven by the same network snapshot."""
    search = maple_search if algorithm == "maple" else pimc_search
    ref = Referee(game)
    records: list[TrainingRecord] = []
    counter = BudgetCounter()
    move_number = 0
    outcome = None
    forfeited = False
    max_turns = MAX_TURNS_FACTOR * game.area
    while outcome is None:
        actor = ref.to_play
        attempts = 0
        while True:
            attempts += 1
            if attempts > game.area + 1:
                outcome = GameOutcome(actor.opponent)
                forfeited = True
                break
            res = search(game, ref.histories[actor], evaluator, cfg, rng,
                         move_number=move_number, selfplay=True,
                         counter=counter)
            records.append(_make_record(game, ref, actor, res.pi))
            feedback = ref.attempt(actor, res.action)
            if feedback.is_legal:
                break
        move_number += 1
        if outcome is None:
            outcome = ref.outcome()
        if outcome is None and game.has_pass and move_number >= max_turns:
            # Stalled Phantom Go game: score the standing position.
            margin = game.score_area(ref.world)
            winner = Player.FIRST if margin > 0 else \
                Player.SECOND if margin < 0 else None
            outcome = GameOutcome(winner, int(margin))
    for rec in records:
        rec.z = float(outcome_value(outcome, rec.to_play))
    return SelfplayResult(records, outcome, move_number, counter, forfeited,
                          ref.record_text())


def build_triplet(game: Game, record: TrainingRecord,
                  rng: np.random.Generator, tries: int = 10):
    """(anchor, positive, negative, usable) for one record; the negative is
    a fresh consistent world different from the true one. Singleton
    information sets yield usable=False and a zeroed negative."""
    zeroed = np.zeros_like(record.positive)
    if record.constraints.hidden_count < 1:
        return record.anchor, record.positive, zeroed, False
    for _ in range(tries):
        cs = sample_random(game, record.constraints, 1, rng)
        if not cs.worlds:
            break
        world = cs.worlds[0]
        if world.cells != record.positive_cells:
            neg = encode_board4(game, world, record.to_play)
            return record.anchor, record.positive, neg, True
    return record.anchor, record.positive, zeroed, False


def batch_arrays(game: Game, records: list[TrainingRecord],
                 rng: np.random.Generator) -> dict:
    anchors, positives, negatives, usable = [], [], [], []
    for rec in records:
        a, p, n, ok = build_triplet(game, rec, rng)
        anchors.append(a)
        positives.append(p)
        negatives.append(n)
        usable.append(ok)
    return {
        "state": np.stack([r.state for r in records]),
        "pi": np.stack([r.pi for r in records]),
        "legal": np.stack([r.legal for r in records]),
        "z": np.array([r.z for r in records], dtype=np.float32),
        "anchor": np.stack(anchors),
        "positive": np.stack(positives),
        "negative": np.stack(negatives),
        "triplet_mask": np.array(usable, dtype=bool),
    }


def net_config_for(game: Game, blocks: int, filters: int,
                   embed_dim: int = 64) -> NetConfig:
    return NetConfig(board_size=game.size,
                     policy_outputs=game.action_space,
                     anchor_channels=anchor_channels(game),
                     blocks=blocks, filters=filters, embed_dim=embed_dim)


METRIC_KEYS = ("iter", "games", "steps", "loss", "v_loss", "p_loss",
               "tri_loss", "l2", "buf", "avg_len", "pv_evals_per_move")


def _metrics_line(values: dict) -> str:
    # 9 decimals so the logged total matches the sum of its logged
    # components well within 1e-6
    parts = []
    for key in METRIC_KEYS:
        v = values[key]
        parts.append(f"{key}={v}" if isinstance(v, int) else f"{key}={v:.9f}")
    return " ".join(parts)


def _rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass
class TrainState:
    params: dict
    opt: OptimState
    buffer: ReplayBuffer
    iteration: int = 0
    metrics_lines: list[str] = field(default_factory=list)


def run_training(game: Game, net_cfg: NetConfig, search_cfg: SearchConfig,
                 algorithm: str, cfg: TrainConfig, out_dir,
                 komi: float = 1.0, log=None) -> TrainState:
    """Iterated self-play + optimization. Resumable: the output directory
    holds the latest checkpoint, the pickled buffer, and a progress file;
    rerunning on a populated directory continues after the last completed
    iteration."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = CheckpointMeta(game.name, game.size, getattr(game, "komi", 0.0))
    progress = out / "progress.txt"
    metrics_path = out / "metrics.txt"

    if progress.exists():
        state = _load_state(out, cfg)
    else:
        params = init_params(net_cfg, _rng_for(cfg.seed, 0))
        opt = OptimState(lr=cfg.lr, momentum=cfg.momentum,
                         weight_decay=cfg.weight_decay)
        save_checkpoint(out / "ckpt_0.maplenet", params, net_cfg, meta, opt)
        state = TrainState(params, opt, ReplayBuffer(cfg.buffer_games))

    while state.iteration < cfg.iterations:
        it = state.iteration + 1
        snapshot = {k: v.copy() for k, v in state.params.items()}
        evaluator = NetEvaluator(game, snapshot, net_cfg)

        def play(j: int) -> SelfplayResult:
            rng = _rng_for(cfg.seed, it, 0, j)
            return selfplay_game(game, evaluator, search_cfg, algorithm, rng)

        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(play, range(cfg.games_per_iter)))
        else:
            results = [play(j) for j in range(cfg.games_per_iter)]
        total_moves = 0
        total_evals = 0
        for res in results:
            state.buffer.append(res.records)
            total_moves += res.turns
            total_evals += res.counter.policy_value_evals

        opt_rng = _rng_for(cfg.seed, it, 1)
        sums = {"loss": 0.0, "value": 0.0, "policy": 0.0, "triplet": 0.0,
                "l2": 0.0}
        for _ in range(cfg.steps_per_iter):
            records = state.buffer.sample(cfg.batch, opt_rng)
            batch = batch_arrays(game, records, opt_rng)
            total, parts, grads = loss_and_gradients(
                state.params, net_cfg, batch, weight_decay=cfg.weight_decay)
            sgd_step(state.params, grads, state.opt)
            sums["loss"] += total
            for key in ("value", "policy", "triplet", "l2"):
                sums[key] += parts[key]
        n = cfg.steps_per_iter
        line = _metrics_line({
            "iter": it, "games": cfg.games_per_iter, "steps": state.opt.step,
            "loss": sums["loss"] / n, "v_loss": sums["value"] / n,
            "p_loss": sums["policy"] / n, "tri_loss": sums["triplet"] / n,
            "l2": sums["l2"] / n, "buf": len(state.buffer),
            "avg_len": total_moves / len(results),
            "pv_evals_per_move": total_evals / max(1, total_moves),
        })
        state.metrics_lines.append(line)
        if log:
            log(line)

        state.iteration = it
        save_checkpoint(out / f"ckpt_{state.opt.step}.maplenet",
                        state.params, net_cfg, meta, state.opt)
        with open(out / "buffer.pkl", "wb") as fh:
            pickle.dump(state.buffer, fh)
        metrics_path.write_text("\n".join(state.metrics_lines) + "\n")
        progress.write_text(f"iteration={it}\nstep={state.opt.step}\n")
    return state


def _load_state(out: Path, cfg: TrainConfig) -> TrainState:
    from .net import load_checkpoint

    text = (out / "progress.txt").read_text().strip().splitlines()
    fields = dict(line.split("=", 1) for line in text)
    iteration = int(fields["iteration"])
    step = int(fields["step"])
    params, _, _, opt = load_checkpoint(out / f"ckpt_{step}.maplenet")
    with open(out / "buffer.pkl", "rb") as fh:
        buffer = pickle.load(fh)
    metrics = [l for l in (out / "metrics.txt").read_text().splitlines() if l]
    return TrainState(params, opt, buffer, iteration, metrics[:iteration])
