"""Match running, win-rate statistics, Bradley-Terry Elo fitting, ablation
grids over the sampling sizes, and embedding dumps for external projection
tools."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encode import encode_board4, encode_history
from .games.referee import Game, Referee
from .games.types import PASS, GameOutcome, Player, outcome_value
from .net import NetConfig, embed_forward, load_checkpoint
from .sampling import derive_constraints, sample_random
from .search import (BudgetCounter, NetEvaluator, SearchConfig, maple_search,
                     pimc_search, rollout_opponent)
from .train import selfplay_game


class NetAgent:
    """Plays through the multi-world search (or the PIMC baseline)."""

    def __init__(self, params: dict, net_cfg: NetConfig, game: Game,
                 search_cfg: SearchConfig, algorithm: str = "maple"):
        if algorithm not in ("maple", "pimc"):
            raise ValueError(f"unknown algorithm {algorithm!r}")
        self.evaluator = NetEvaluator(game, params, net_cfg)
        self.search_cfg = search_cfg
        self.algorithm = algorithm
        self.counter = BudgetCounter()

    def choose(self, game: Game, history, rng, move_number: int) -> int:
        search = maple_search if self.algorithm == "maple" else pimc_search
        res = search(game, history, self.evaluator, self.search_cfg, rng,
                     move_number=move_number, counter=self.counter)
        return res.action


class RandomAgent:
    """Uniform over cells not known to be blocked; in Phantom Go passing
    competes with the candidate cells at uniform weight."""

    def choose(self, game: Game, history, rng, move_number: int) -> int:
        blocked = history.own_stones | history.known_opponent_stones \
            | history.pending_tried
        cells = [c for c in range(game.area) if c not in blocked]
        if game.has_pass:
            idx = int(rng.integers(len(cells) + 1))
            return PASS if idx == len(cells) else cells[idx]
        if not cells:
            raise ValueError("no candidate cells left")
        return int(cells[rng.integers(len(cells))])


class RolloutAgent:
    """Vanilla UCT on one sampled determinization per decision."""

    def __init__(self, simulations: int):
        self.simulations = simulations

    def choose(self, game: Game, history, rng, move_number: int) -> int:
        return rollout_opponent(game, history, self.simulations, rng)


@dataclass
class MatchResult:
    wins: int = 0
    draws: int = 0
    losses: int = 0
    records: list[str] = field(default_factory=list)

    @property
    def games(self) -> int:
        return self.wins + self.draws + self.losses

    @property
    def score(self) -> float:
        return self.wins + 0.5 * self.draws


def play_game(game: Game, agents: dict[Player, object],
              rng: np.random.Generator) -> tuple[GameOutcome, Referee]:
    """One refereed game; agents are re-asked after illegal attempts, with
    the per-turn attempt cap forfeiting (never expected to fire)."""
    ref = Referee(game)
    move_number = 0
    while True:
        outcome = ref.outcome()
        if outcome is not None:
            return outcome, ref
        actor = ref.to_play
        agent = agents[actor]
        for attempt in range(game.area + 1):
            action = agent.choose(game, ref.histories[actor], rng, move_number)
            feedback = ref.attempt(actor, action)
            if feedback.is_legal:
                break
        else:
            return GameOutcome(actor.opponent), ref
        move_number += 1
        if game.has_pass and move_number >= 6 * game.area:
            margin = game.score_area(ref.world)
            winner = Player.FIRST if margin > 0 else \
                Player.SECOND if margin < 0 else None
            return GameOutcome(winner, int(margin)), ref


def run_match(game: Game, agent_a, agent_b, games_total: int,
              seed: int, keep_records: bool = False) -> MatchResult:
    """Alternating colors: agent A is FIRST in even-numbered games."""
    if games_total % 2 != 0:
        raise ValueError("games_total must be even (colors alternate)")
    result = MatchResult()
    for g in range(games_total):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(g,)))
        a_first = g % 2 == 0
        agents = {Player.FIRST: agent_a if a_first else agent_b,
                  Player.SECOND: agent_b if a_first else agent_a}
        outcome, ref = play_game(game, agents, rng)
        if outcome.winner is None:
            result.draws += 1
        else:
            a_won = (outcome.winner == Player.FIRST) == a_first
            if a_won:
                result.wins += 1
            else:
                result.losses += 1
        if keep_records:
            result.records.append(ref.record_text())
    return result


def win_rate_ci(wins: int, draws: int, losses: int) -> tuple[float, float]:
    """Score rate (draws count half) and its 95% normal-approximation
    half-width."""
    n = wins + draws + losses
    if n < 1:
        raise ValueError("no games played")
    rate = (wins + 0.5 * draws) / n
    half = 1.96 * math.sqrt(rate * (1.0 - rate) / n)
    return rate, half


# --- Bradley-Terry Elo ------------------------------------------------------

ELO_SCALE = 400.0 / math.log(10.0)
P_FLOOR = 1e-12


@dataclass
class EloTable:
    ratings: dict[str, float]
    anchor: float
    residual: float


def elo_fit(agents: list[str],
            results: list[tuple[str, str, float, float, float]],
            anchor: float = 1000.0, tol: float = 1e-9,
            max_iter: int = 100_000) -> EloTable:
    """Maximum-likelihood Bradley-Terry ratings on the 400*log10 scale.

    `results` entries are (a, b, wins_a, draws, wins_b); draws count as
    half a win for each side. The mean fitted rating is shifted to the
    anchor. A disconnected result graph is refused, naming the components.
    """
    index = {a: i for i, a in enumerate(agents)}
    n = len(agents)
    wins = np.zeros((n, n))
    games = np.zeros((n, n))
    for a, b, wa, d, wb in results:
        i, j = index[a], index[b]
        wins[i, j] += wa + 0.5 * d
        wins[j, i] += wb + 0.5 * d
        games[i, j] += wa + d + wb
        games[j, i] += wa + d + wb
    _check_connected(agents, games)

    p = np.ones(n)
    w = wins.sum(axis=1)
    for _ in range(max_iter):
        denom = np.zeros(n)
        for i in range(n):
            mask = games[i] > 0
            denom[i] = (games[i, mask] / (p[i] + p[mask])).sum()
        p_new = np.where(denom > 0, w / np.maximum(denom, P_FLOOR), P_FLOOR)
        p_new = np.maximum(p_new, P_FLOOR)
        p_new /= p_new.sum()
        if np.abs(p_new - p).max() < tol:
            p = p_new
            break
        p = p_new
    raw = ELO_SCALE * np.log(p)
    raw += anchor - raw.mean()
    residual = _fit_residual(p, wins, games)
    return EloTable({a: float(raw[index[a]]) for a in agents}, anchor, residual)


def _fit_residual(p, wins, games) -> float:
    n = len(p)
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if games[i, j] > 0:
                expected = p[i] / (p[i] + p[j])
                observed = wins[i, j] / games[i, j]
                worst = max(worst, abs(expected - observed))
    return worst


def _check_connected(agents: list[str], games: np.ndarray):
    n = len(agents)
    seen = {0}
    stack = [0]
    while stack:
        cur = stack.pop()
        for j in range(n):
            if games[cur, j] > 0 and j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) != n:
        inside = sorted(agents[i] for i in seen)
        outside = sorted(agents[i] for i in range(n) if i not in seen)
        raise ValueError(
            f"result graph is disconnected: {inside} vs {outside}")


# --- opponent pools and ablation grids --------------------------------------

def make_opponent(spec: str, game: Game, search_cfg: SearchConfig):
    """Builtin opponents: 'random', 'rollout:<sims>', or a checkpoint path."""
    if spec == "random":
        return RandomAgent()
    if spec.startswith("rollout:"):
        return RolloutAgent(int(spec.split(":", 1)[1]))
    if spec == "rollout":
        return RolloutAgent(100)
    return load_net_agent(spec, game, search_cfg)


def load_net_agent(path: str, game: Game, search_cfg: SearchConfig,
                   algorithm: str = "maple") -> NetAgent:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    params, net_cfg, meta, _ = load_checkpoint(p)
    if meta.game != game.name or meta.size != game.size:
        raise ValueError(
            f"checkpoint {path} was trained for {meta.game} size {meta.size}, "
            f"not {game.name} size {game.size}")
    return NetAgent(params, net_cfg, game, search_cfg, algorithm)


def pool_match(game: Game, agent, opponents: dict[str, object],
               games_per_opponent: int, seed: int) -> dict[str, MatchResult]:
    out = {}
    for idx, (name, opp) in enumerate(sorted(opponents.items())):
        out[name] = run_match(game, agent, opp, games_per_opponent,
                              seed + 7919 * idx)
    return out


@dataclass
class GridCell:
    train_value: int
    eval_value: int
    rate: float
    ci: float
    n: int


def ablation_grid(game: Game, axis: str, train_ckpts: dict[int, str],
                  eval_values: list[int], base_cfg: SearchConfig,
                  opponents: list[str], games_per_opponent: int,
                  seed: int, algorithm: str = "maple") -> list[GridCell]:
    """Win-rate matrix over {training value} x {evaluation value} of the
    chosen sampling-size axis, against a fixed opponent pool."""
    if axis not in ("k", "m"):
        raise ValueError("axis must be 'k' or 'm'")
    cells = []
    for tv in sorted(train_ckpts):
        path = train_ckpts[tv]
        if not Path(path).exists():
            raise FileNotFoundError(
                f"missing checkpoint for train value {tv}: {path}")
        for ev in eval_values:
            cfg_kw = dict(vars(base_cfg))
            if axis == "k":
                cfg_kw["k"] = ev
                cfg_kw["m"] = max(base_cfg.m, ev)
            else:
                cfg_kw["m"] = ev
                cfg_kw["k"] = min(base_cfg.k, ev)
            cfg = SearchConfig(**cfg_kw)
            agent = load_net_agent(path, game, cfg, algorithm)
            opps = {spec: make_opponent(spec, game, base_cfg)
                    for spec in opponents}
            results = pool_match(game, agent, opps, games_per_opponent, seed)
            wins = sum(r.wins for r in results.values())
            draws = sum(r.draws for r in results.values())
            losses = sum(r.losses for r in results.values())
            rate, ci = win_rate_ci(wins, draws, losses)
            cells.append(GridCell(tv, ev, rate, ci, wins + draws + losses))
    return cells


def grid_file_text(axis: str, train_values: list[int], eval_values: list[int],
                   cells: list[GridCell]) -> str:
    lines = [f"axis={axis} "
             f"train_values={','.join(str(v) for v in sorted(train_values))} "
             f"eval_values={','.join(str(v) for v in eval_values)}"]
    for cell in cells:
        lines.append(f"cell {cell.train_value} {cell.eval_value} "
                     f"rate={cell.rate:.6f} ci={cell.ci:.6f} n={cell.n}")
    return "\n".join(lines) + "\n"


# --- embedding dumps ---------------------------------------------------------

def dump_embeddings(game: Game, params: dict, net_cfg: NetConfig,
                    search_cfg: SearchConfig, num_states: int,
                    negatives_per_state: int, seed: int,
                    algorithm: str = "maple") -> str:
    """Self-play states embedded as CSV rows (state id, role, components,
    distance to that state's anchor). States come from fresh self-play with
    the given parameters; only decisions with a non-singleton information
    set are kept so every state has real negatives."""
    evaluator = NetEvaluator(game, params, net_cfg)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    records = []
    guard = 0
    while len(records) < num_states:
        guard += 1
        if guard > 50 * num_states:
            raise RuntimeError("could not collect enough non-singleton states")
        res = selfplay_game(game, evaluator, search_cfg, algorithm, rng)
        records.extend(r for r in res.records
                       if r.constraints.hidden_count >= 1)
    records = records[:num_states]

    dim = net_cfg.embed_dim
    header = ["state", "role"] + [f"e{i}" for i in range(dim)] + ["d_to_anchor"]
    lines = [",".join(header)]

    def fmt(x: float) -> str:
        return f"{x:.6g}"

    for sid, rec in enumerate(records):
        ea, _ = embed_forward(params, net_cfg, "anchor", rec.anchor[None])
        boards = [rec.positive]
        roles = ["positive"]
        negs = _draw_negatives(game, rec, negatives_per_state, rng)
        boards.extend(negs)
        roles.extend(["negative"] * len(negs))
        es, _ = embed_forward(params, net_cfg, "state", np.stack(boards))
        lines.append(",".join([str(sid), "anchor"]
                              + [fmt(v) for v in ea[0]] + [fmt(0.0)]))
        for role, emb in zip(roles, es):
            d = float(np.linalg.norm(emb - ea[0]))
            lines.append(",".join([str(sid), role]
                                  + [fmt(v) for v in emb] + [fmt(d)]))
    return "\n".join(lines) + "\n"


def _draw_negatives(game: Game, rec, count: int, rng) -> list[np.ndarray]:
    """`count` negative boards; drawn with replacement when the information
    set has fewer distinct non-true members."""
    from .train import build_triplet

    out = []
    for _ in range(count):
        _, _, neg, ok = build_triplet(game, rec, rng)
        if not ok:
            raise RuntimeError("record unexpectedly lost its negatives")
        out.append(neg)
    return out
