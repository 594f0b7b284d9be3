"""Tree search over sampled world states.

Two searchers share one simulation core:

* the multi-world search keeps a single tree; every simulation applies the
  selected action sequence to each surviving sampled world, discards the
  worlds where an action is illegal, batch-evaluates the survivors at the
  leaf, and expands with the per-action-averaged policy and the mean value;
* the perfect-information search is the same core run with exactly one
  world, which is also the building block of the PIMC baseline (k
  independent searches whose normalized root visit distributions are
  averaged).

Values are stored from each node's to-play perspective and negated per ply
during backup. Network evaluations are metered: the multi-world search
costs at most k*N evaluations, with equality exactly when no world is ever
discarded and no sampled world turns terminal at a leaf.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encode import encode_board4, encode_history, encode_state
from .games.history import ObservationHistory
from .games.referee import Game
from .games.types import PASS, GameOutcome, Player, outcome_value
from .net import NetConfig, policy_value_forward, forward_embeddings
from .sampling import (CandidateSet, derive_constraints, sample_random,
                       sample_siamese)


@dataclass
class SearchConfig:
    simulations: int = 16
    k: int = 5
    m: int = 50
    sampler: str = "random"            # random | siamese
    c_puct: float = 1.25
    noise_eps: float = 0.25            # self-play root Dirichlet fraction
    noise_alpha: float | None = None   # None -> 10 / board area
    temperature_moves: int | None = None  # None -> round(0.1 * board area)

    def __post_init__(self):
        if self.simulations < 1 or self.k < 1:
            raise ValueError("simulations and k must be >= 1")
        if self.m < self.k:
            raise ValueError("m must be >= k")
        if self.sampler not in ("random", "siamese"):
            raise ValueError(f"unknown sampler {self.sampler!r}")

    def temperature_for(self, game: Game) -> int:
        if self.temperature_moves is not None:
            return self.temperature_moves
        return max(1, round(0.1 * game.area))

    def alpha_for(self, game: Game) -> float:
        return self.noise_alpha if self.noise_alpha is not None \
            else 10.0 / game.area


@dataclass
class BudgetCounter:
    policy_value_evals: int = 0
    siamese_evals: int = 0
    leaf_world_sizes: list[int] = field(default_factory=list)
    discard_events: int = 0        # worlds dropped during selection
    terminal_leaf_worlds: int = 0  # worlds that were terminal at a leaf
    empty_worldset_events: int = 0
    expansions: int = 0


@dataclass(frozen=True)
class SearchWorld:
    """A sampled determinization plus what each player knows of the other's
    on-board stones in this hypothetical line."""

    world: object
    known: tuple[frozenset[int], frozenset[int]]  # indexed by knower

    def advance(self, game: Game, action: int) -> "SearchWorld | None":
        actor = self.world.to_play
        feedback, nxt = game.attempt(self.world, actor, action)
        if not feedback.is_legal:
            return None
        if feedback.captured:
            gone = set(feedback.captured)
            known = (frozenset(self.known[0] - gone),
                     frozenset(self.known[1] - gone))
        else:
            known = self.known
        return SearchWorld(nxt, known)


class Node:
    __slots__ = ("to_play", "actions", "P", "N", "W", "children", "visits",
                 "raw_pbar")

    def __init__(self, to_play: Player):
        self.to_play = to_play
        self.actions: np.ndarray | None = None
        self.P: np.ndarray | None = None
        self.N: np.ndarray | None = None
        self.W: np.ndarray | None = None
        self.children: list[Node | None] | None = None
        self.visits = 0
        self.raw_pbar: np.ndarray | None = None

    @property
    def expanded(self) -> bool:
        return self.actions is not None

    def expand(self, actions: np.ndarray, priors: np.ndarray,
               raw_pbar: np.ndarray):
        self.actions = actions
        self.P = priors
        self.N = np.zeros(len(actions), dtype=np.int64)
        self.W = np.zeros(len(actions), dtype=np.float64)
        self.children = [None] * len(actions)
        self.raw_pbar = raw_pbar


def puct_select(node: Node, c_puct: float) -> int:
    """Index of the edge maximizing Q + c * P * sqrt(sum N) / (1 + N).

    With no edge visits yet the exploration bonus vanishes for every child,
    so the prior argmax is taken directly; ties always break to the lowest
    index (np.argmax keeps the first maximum).
    """
    total = node.N.sum()
    if total == 0:
        return int(np.argmax(node.P))
    q = np.where(node.N > 0, node.W / np.maximum(node.N, 1), 0.0)
    scores = q + c_puct * node.P * (np.sqrt(total) / (1.0 + node.N))
    return int(np.argmax(scores))


def aggregate_policy(policies: np.ndarray, legals: np.ndarray):
    """Average per-world action probabilities over the worlds where each
    action is legal. Returns (action_indices, raw_means, renorm_priors);
    actions legal in no world are absent."""
    counts = legals.sum(axis=0)
    support = np.flatnonzero(counts > 0)
    sums = (policies * legals).sum(axis=0)
    raw = sums[support] / counts[support]
    priors = raw / raw.sum()
    return support, raw, priors


def aggregate_value(net_values, terminal_values) -> float:
    """Mean over all valid worlds at a leaf; terminal worlds contribute
    their exact outcome."""
    vals = list(net_values) + list(terminal_values)
    return float(np.mean(vals))


def empty_worldset_value(node: Node, edge: int) -> float:
    """Backup value when every surviving world rejects the selected action:
    the edge's current mean value, or 0 if it was never visited."""
    if node.N[edge] > 0:
        return float(node.W[edge] / node.N[edge])
    return 0.0


def action_to_index(game: Game, action: int) -> int:
    return game.area if action == PASS else action


def index_to_action(game: Game, index: int) -> int:
    return PASS if index == game.area else index


def legal_mask(game: Game, world) -> np.ndarray:
    mask = np.zeros(game.action_space, dtype=bool)
    for a in game.legal_actions(world):
        mask[action_to_index(game, a)] = True
    return mask


class NetEvaluator:
    """Batched network access for the searchers and the Siamese sampler."""

    def __init__(self, game: Game, params: dict, cfg: NetConfig):
        self.game = game
        self.params = params
        self.cfg = cfg

    def evaluate(self, sworlds: list[SearchWorld]):
        game = self.game
        persp = sworlds[0].world.to_play
        opp = persp.opponent
        planes = np.stack([
            encode_state(game, sw.world, persp,
                         known_to_viewer=sw.known[persp],
                         known_to_opponent=sw.known[opp])
            for sw in sworlds])
        masks = np.stack([legal_mask(game, sw.world) for sw in sworlds])
        policies, values, _ = policy_value_forward(
            self.params, self.cfg, planes, masks)
        return policies, values, masks

    def distances_to_anchor(self, history: ObservationHistory, worlds) -> np.ndarray:
        anchor = encode_history(self.game, history)
        boards = np.stack([encode_board4(self.game, w, history.viewer)
                           for w in worlds])
        _, _, dists = forward_embeddings(self.params, self.cfg, anchor, boards)
        return dists


@dataclass
class SearchResult:
    pi: np.ndarray           # over the game's full action space
    action: int
    counter: BudgetCounter
    root: Node


def _simulate(game: Game, root: Node, root_worlds: list[SearchWorld],
              evaluator: NetEvaluator, c_puct: float,
              counter: BudgetCounter) -> None:
    node = root
    worlds = root_worlds
    path: list[tuple[Node, int]] = []
    node.visits += 1
    while node.expanded:
        ai = puct_select(node, c_puct)
        action = int(node.actions[ai])
        survivors = []
        for sw in worlds:
            nxt = sw.advance(game, action)
            if nxt is not None:
                survivors.append(nxt)
        counter.discard_events += len(worlds) - len(survivors)
        if not survivors:
            counter.empty_worldset_events += 1
            val = empty_worldset_value(node, ai)
            node.W[ai] += val
            node.N[ai] += 1
            for pnode, pai in reversed(path):
                val = -val
                pnode.W[pai] += val
                pnode.N[pai] += 1
            return
        child = node.children[ai]
        if child is None:
            child = Node(node.to_play.opponent)
            node.children[ai] = child
        path.append((node, ai))
        node = child
        worlds = survivors
        node.visits += 1

    # Leaf: split surviving worlds into terminal and live ones.
    terminal_vals = []
    live: list[SearchWorld] = []
    for sw in worlds:
        out = game.terminal_outcome(sw.world)
        if out is not None:
            terminal_vals.append(outcome_value(out, node.to_play))
        else:
            live.append(sw)
    counter.leaf_world_sizes.append(len(worlds))
    counter.terminal_leaf_worlds += len(terminal_vals)
    if live:
        policies, values, masks = evaluator.evaluate(live)
        counter.policy_value_evals += len(live)
        support, raw, priors = aggregate_policy(policies, masks)
        actions = np.array([index_to_action(game, int(i)) for i in support])
        node.expand(actions, priors, raw)
        counter.expansions += 1
        value = aggregate_value(values, terminal_vals)
    else:
        value = aggregate_value([], terminal_vals)

    val = value
    for pnode, pai in reversed(path):
        val = -val
        pnode.W[pai] += val
        pnode.N[pai] += 1


def _mix_root_noise(root: Node, eps: float, alpha: float,
                    rng: np.random.Generator):
    if eps <= 0 or not root.expanded or len(root.actions) == 0:
        return
    noise = rng.dirichlet(np.full(len(root.actions), alpha))
    root.P = (1.0 - eps) * root.P + eps * noise


def _extract_pi(game: Game, root: Node) -> np.ndarray:
    pi = np.zeros(game.action_space)
    if not root.expanded:
        return pi
    total = root.N.sum()
    for ai, action in enumerate(root.actions):
        pi[action_to_index(game, int(action))] = \
            root.N[ai] / total if total > 0 else root.P[ai]
    return pi


def _choose_action(game: Game, pi: np.ndarray, move_number: int,
                   temperature_moves: int, rng: np.random.Generator) -> int:
    if pi.sum() <= 0:
        raise ValueError("search produced an empty policy")
    if move_number < temperature_moves:
        idx = int(rng.choice(len(pi), p=pi / pi.sum()))
    else:
        idx = int(np.argmax(pi))
    return index_to_action(game, idx)


def _run_search(game: Game, worlds: list[SearchWorld], to_play: Player,
                evaluator: NetEvaluator, cfg: SearchConfig,
                rng: np.random.Generator, counter: BudgetCounter,
                noise_eps: float) -> Node:
    if not worlds:
        raise ValueError("empty information set: no worlds to search")
    root = Node(to_play)
    _simulate(game, root, worlds, evaluator, cfg.c_puct, counter)
    _mix_root_noise(root, noise_eps, cfg.alpha_for(game), rng)
    for _ in range(cfg.simulations - 1):
        _simulate(game, root, worlds, evaluator, cfg.c_puct, counter)
    return root


def _sample_worlds(game: Game, history: ObservationHistory,
                   evaluator: NetEvaluator, cfg: SearchConfig,
                   rng: np.random.Generator,
                   counter: BudgetCounter) -> list[SearchWorld]:
    constraints = derive_constraints(game, history)
    if cfg.sampler == "siamese":
        cs = sample_siamese(game, constraints, cfg.m, cfg.k, evaluator,
                            history, rng)
        counter.siamese_evals += cs.evaluated
    else:
        cs = sample_random(game, constraints, cfg.k, rng)
    known_viewer = frozenset(constraints.known_opponent)
    known = [frozenset(), frozenset()]
    known[history.viewer] = known_viewer
    return [SearchWorld(w, (known[0], known[1])) for w in cs.worlds]


def maple_search(game: Game, history: ObservationHistory,
                 evaluator: NetEvaluator, cfg: SearchConfig,
                 rng: np.random.Generator, *, worlds=None,
                 move_number: int = 10 ** 9, selfplay: bool = False,
                 counter: BudgetCounter | None = None) -> SearchResult:
    """Multi-world shared-tree search from an information state."""
    counter = counter if counter is not None else BudgetCounter()
    if worlds is None:
        worlds = _sample_worlds(game, history, evaluator, cfg, rng, counter)
    root = _run_search(game, worlds, history.to_play, evaluator, cfg, rng,
                       counter, cfg.noise_eps if selfplay else 0.0)
    pi = _extract_pi(game, root)
    action = _choose_action(game, pi, move_number, cfg.temperature_for(game),
                            rng)
    return SearchResult(pi, action, counter, root)


def alphazero_search(game: Game, world, evaluator: NetEvaluator,
                     cfg: SearchConfig, rng: np.random.Generator, *,
                     knowledge=(frozenset(), frozenset()),
                     move_number: int = 10 ** 9, selfplay: bool = False,
                     counter: BudgetCounter | None = None) -> SearchResult:
    """Single-determinization perfect-information search."""
    counter = counter if counter is not None else BudgetCounter()
    sw = SearchWorld(world, knowledge)
    root = _run_search(game, [sw], world.to_play, evaluator, cfg, rng,
                       counter, cfg.noise_eps if selfplay else 0.0)
    pi = _extract_pi(game, root)
    action = _choose_action(game, pi, move_number, cfg.temperature_for(game),
                            rng)
    return SearchResult(pi, action, counter, root)


def pimc_search(game: Game, history: ObservationHistory,
                evaluator: NetEvaluator, cfg: SearchConfig,
                rng: np.random.Generator, *, worlds=None,
                move_number: int = 10 ** 9, selfplay: bool = False,
                counter: BudgetCounter | None = None) -> SearchResult:
    """PIMC baseline: k fully independent single-world searches whose
    normalized root visit distributions are averaged over the actions legal
    in at least one sampled world."""
    counter = counter if counter is not None else BudgetCounter()
    if worlds is None:
        worlds = _sample_worlds(game, history, evaluator, cfg, rng, counter)
    if not worlds:
        raise ValueError("empty information set: no worlds to search")
    noise = cfg.noise_eps if selfplay else 0.0
    pis = []
    for sw in worlds:
        root = _run_search(game, [sw], history.to_play, evaluator, cfg, rng,
                           counter, noise)
        pis.append(_extract_pi(game, root))
    pi = np.mean(pis, axis=0)
    total = pi.sum()
    if total > 0:
        pi = pi / total
    action = _choose_action(game, pi, move_number, cfg.temperature_for(game),
                            rng)
    return SearchResult(pi, action, counter, None)


# --- network-free UCT opponent -------------------------------------------

UCT_C = 1.4


class _UctNode:
    __slots__ = ("untried", "children", "N", "W")

    def __init__(self, game: Game, world):
        self.untried = list(game.legal_actions(world))
        self.children: dict[int, _UctNode] = {}
        self.N: dict[int, int] = {}
        self.W: dict[int, float] = {}


def _eyelike(game: Game, world, cell: int, stone: int) -> bool:
    from .games.phantomgo import go_neighbors
    return all(world.cells[nb] == stone
               for nb in go_neighbors(cell, game.size))


def _playout_actions(game: Game, world) -> list[int]:
    if not game.has_pass:
        return [c for c in range(game.area) if world.cells[c] == 0]
    from .games.phantomgo import stone_of
    me = stone_of(world.to_play)
    acts = [a for a in game.legal_actions(world)
            if a != PASS and not _eyelike(game, world, a, me)]
    return acts


def _random_playout(game: Game, world, rng: np.random.Generator) -> GameOutcome:
    cap = 4 * game.area
    for _ in range(cap):
        out = game.terminal_outcome(world)
        if out is not None:
            return out
        acts = _playout_actions(game, world)
        action = PASS if not acts else int(acts[rng.integers(len(acts))])
        _, world = game.attempt(world, world.to_play, action)
    if game.has_pass:
        margin = game.score_area(world)
        winner = Player.FIRST if margin > 0 else \
            Player.SECOND if margin < 0 else None
        return GameOutcome(winner, int(margin))
    return game.terminal_outcome(world) or GameOutcome(None)


def _uct_simulate(game: Game, node: _UctNode, world,
                  rng: np.random.Generator) -> float:
    """One UCT iteration; returns the value from world.to_play's view."""
    out = game.terminal_outcome(world)
    if out is not None:
        return outcome_value(out, world.to_play)
    if node.untried:
        idx = int(rng.integers(len(node.untried)))
        action = node.untried.pop(idx)
        _, nxt = game.attempt(world, world.to_play, action)
        node.children[action] = _UctNode(game, nxt)
        outcome = _random_playout(game, nxt, rng)
        value = outcome_value(outcome, world.to_play)
        node.N[action] = node.N.get(action, 0) + 1
        node.W[action] = node.W.get(action, 0.0) + value
        return value
    total = sum(node.N.values())
    log_total = np.log(max(total, 1))
    best, best_score = None, -np.inf
    for action, child in node.children.items():
        n = node.N[action]
        score = node.W[action] / n + UCT_C * np.sqrt(log_total / n)
        if score > best_score:
            best, best_score = action, score
    _, nxt = game.attempt(world, world.to_play, best)
    value = -_uct_simulate(game, node.children[best], nxt, rng)
    node.N[best] += 1
    node.W[best] += value
    return value


def rollout_opponent(game: Game, history: ObservationHistory,
                     simulations: int, rng: np.random.Generator) -> int:
    """Fixed evaluation opponent: vanilla UCT with uniform random playouts
    on one freshly sampled determinization. No network evaluations."""
    constraints = derive_constraints(game, history)
    cs = sample_random(game, constraints, 1, rng)
    if not cs.worlds:
        raise ValueError("no consistent world to search")
    world = cs.worlds[0]
    root = _UctNode(game, world)
    for _ in range(simulations):
        _uct_simulate(game, root, world, rng)
    if not root.N:
        acts = game.legal_actions(world)
        return int(acts[rng.integers(len(acts))])
    return max(root.N.items(), key=lambda kv: (kv[1], -kv[0]))[0]
