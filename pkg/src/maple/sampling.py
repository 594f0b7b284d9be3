"""Sampling of determinized world states consistent with an observation
history: exact enumeration (oracle, small boards), uniform random sampling,
and embedding-distance-filtered sampling.

Consistency is constraint-level: a candidate world must carry the viewer's
stones, the known opponent stones, `hidden_count` extra opponent stones on
cells not known to be occupied or empty, match the public turn/pass state,
be structurally valid (every Go group has a liberty), and be undecided
(the real game is still running, so a world with a winner is impossible).
For Dark Hex this coincides with full replay consistency; for Phantom Go
capture timing is deliberately not reconstructed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .games.darkhex import DarkHex, HexWorld, place
from .games.history import ObservationHistory
from .games.phantomgo import EMPTY, GoWorld, PhantomGo, _group_and_liberties, stone_of
from .games.referee import Game
from .games.types import Player

# A candidate draw that collides with already-kept worlds (or is invalid)
# is retried at most this many times per remaining slot.
MAX_REJECTS_PER_SLOT = 50


@dataclass(frozen=True)
class InformationConstraints:
    viewer: Player
    to_play: Player
    own: frozenset[int]
    known_opponent: frozenset[int]
    known_empty: frozenset[int]
    hidden_count: int
    passes: int
    prisoners: tuple[int, int]

    @property
    def blocked(self) -> frozenset[int]:
        return self.own | self.known_opponent | self.known_empty


@dataclass
class CandidateSet:
    worlds: list
    provenance: str                      # exhaustive | random | siamese
    distances: list[float] | None = None
    evaluated: int = 0                   # embedding evaluations performed


def derive_constraints(game: Game, history: ObservationHistory) -> InformationConstraints:
    captured_by_viewer = sum(1 for _, owner in history.revealed_captures
                             if owner == history.viewer.opponent)
    captured_by_opponent = len(history.revealed_captures) - captured_by_viewer
    if history.viewer == Player.FIRST:
        prisoners = (captured_by_viewer, captured_by_opponent)
    else:
        prisoners = (captured_by_opponent, captured_by_viewer)
    return InformationConstraints(
        viewer=history.viewer,
        to_play=history.to_play,
        own=history.own_stones,
        known_opponent=history.known_opponent_stones,
        known_empty=history.known_empty if game.has_pass else frozenset(),
        hidden_count=history.hidden_opponent_count,
        passes=history.consecutive_passes,
        prisoners=prisoners,
    )


def free_cells(game: Game, constraints: InformationConstraints) -> list[int]:
    blocked = constraints.blocked
    return [c for c in range(game.area) if c not in blocked]


def build_world(game: Game, constraints: InformationConstraints,
                hidden: Sequence[int]):
    """Assemble a world from the constraints plus a hidden-stone placement;
    returns None when the assembly is invalid or already decided."""
    viewer = constraints.viewer
    opp = viewer.opponent
    if isinstance(game, DarkHex):
        world = game.initial_world()
        for c in sorted(constraints.own):
            world = place(world, viewer, c)
        for c in sorted(constraints.known_opponent) + sorted(hidden):
            world = place(world, opp, c)
        world = HexWorld(world.size, world.cells, constraints.to_play, world.uf)
        if game.terminal_outcome(world) is not None:
            return None
        return world
    cells = bytearray(game.area)
    for c in constraints.own:
        cells[c] = stone_of(viewer)
    for c in constraints.known_opponent:
        cells[c] = stone_of(opp)
    for c in hidden:
        cells[c] = stone_of(opp)
    occupied = constraints.own | constraints.known_opponent | set(hidden)
    seen: set[int] = set()
    for c in occupied:
        if c in seen:
            continue
        group, libs = _group_and_liberties(cells, game.size, c)
        if libs == 0:
            return None
        seen |= group
    return GoWorld(game.size, bytes(cells), constraints.to_play, None,
                   constraints.passes, constraints.prisoners)


def is_consistent(game: Game, constraints: InformationConstraints, world) -> bool:
    """Constraint-satisfaction check used by the oracles."""
    viewer_stone = stone_of(constraints.viewer) if game.has_pass else \
        (1 if constraints.viewer == Player.FIRST else 2)
    opp_stone = 3 - viewer_stone
    own = {c for c in range(game.area) if world.cells[c] == viewer_stone}
    theirs = {c for c in range(game.area) if world.cells[c] == opp_stone}
    if own != set(constraints.own):
        return False
    if not set(constraints.known_opponent) <= theirs:
        return False
    if len(theirs) != len(constraints.known_opponent) + constraints.hidden_count:
        return False
    if theirs & set(constraints.known_empty):
        return False
    if world.to_play != constraints.to_play:
        return False
    return game.terminal_outcome(world) is None


def enumerate_consistent(game: Game, constraints: InformationConstraints,
                         limit: int = 100_000) -> CandidateSet:
    """Every consistent world exactly once. Oracle only: refuses when the
    raw placement count exceeds `limit`."""
    free = free_cells(game, constraints)
    total = math.comb(len(free), constraints.hidden_count)
    if total > limit:
        raise ValueError(
            f"information set too large to enumerate: C({len(free)},"
            f"{constraints.hidden_count}) = {total} > limit {limit}")
    worlds = []
    for hidden in combinations(free, constraints.hidden_count):
        w = build_world(game, constraints, hidden)
        if w is not None:
            worlds.append(w)
    return CandidateSet(worlds, "exhaustive")


def sample_random(game: Game, constraints: InformationConstraints, k: int,
                  rng: np.random.Generator) -> CandidateSet:
    """Up to k distinct worlds, uniform without replacement over the
    information set. Shrinks (never fails) when the set is small."""
    if k < 1:
        raise ValueError("k must be >= 1")
    free = free_cells(game, constraints)
    h = constraints.hidden_count
    if h == 0:
        w = build_world(game, constraints, ())
        return CandidateSet([w] if w is not None else [], "random")
    total = math.comb(len(free), h)
    if total <= 4 * k:
        # Small information set: enumerate and draw exactly.
        worlds = enumerate_consistent(game, constraints, limit=4 * k).worlds
        if len(worlds) <= k:
            return CandidateSet(worlds, "random")
        idx = rng.choice(len(worlds), size=k, replace=False)
        return CandidateSet([worlds[i] for i in sorted(idx)], "random")
    worlds = []
    keys = set()
    free_arr = np.array(free)
    rejects = 0
    while len(worlds) < k and rejects < MAX_REJECTS_PER_SLOT:
        hidden = tuple(sorted(rng.choice(free_arr, size=h, replace=False).tolist()))
        if hidden in keys:
            rejects += 1
            continue
        w = build_world(game, constraints, hidden)
        if w is None:
            rejects += 1
            continue
        keys.add(hidden)
        worlds.append(w)
        rejects = 0
    return CandidateSet(worlds, "random")


def sample_siamese(game: Game, constraints: InformationConstraints, m: int,
                   k: int, embedder, anchor: ObservationHistory,
                   rng: np.random.Generator) -> CandidateSet:
    """Draw m random candidates, keep the k whose state embeddings sit
    closest to the anchor embedding. Ties keep generation order."""
    if m < k:
        raise ValueError("m must be >= k")
    candidates = sample_random(game, constraints, m, rng)
    worlds = candidates.worlds
    if not worlds:
        return CandidateSet([], "siamese", [], 0)
    dists = embedder.distances_to_anchor(anchor, worlds)
    order = np.argsort(dists, kind="stable")[:k]
    return CandidateSet([worlds[i] for i in order], "siamese",
                        [float(dists[i]) for i in order], len(worlds))
