"""Phantom Go rules: standard Go mechanics with referee feedback.

Board mechanics follow plain Go with simple ko and area (Chinese) scoring;
komi defaults to 1.0 credited to White (SECOND). Suicide is illegal. Two
consecutive legal passes end the game and the position is scored as-is.
"""

from __future__ import annotations

from dataclasses import dataclass

from .types import PASS, Feedback, GameOutcome, MoveFeedback, Player

EMPTY, BLACK, WHITE = 0, 1, 2


def go_neighbors(cell: int, size: int) -> tuple[int, ...]:
    r, c = divmod(cell, size)
    out = []
    if r > 0:
        out.append(cell - size)
    if r < size - 1:
        out.append(cell + size)
    if c > 0:
        out.append(cell - 1)
    if c < size - 1:
        out.append(cell + 1)
    return tuple(out)


@dataclass(frozen=True)
class GoWorld:
    size: int
    cells: bytes
    to_play: Player
    ko_point: int | None
    passes: int                    # consecutive legal passes, 0..2
    prisoners: tuple[int, int]     # stones captured by FIRST, by SECOND

    def key(self) -> tuple:
        return (self.cells, int(self.to_play), self.ko_point, self.passes)


def _group_and_liberties(cells, size, start) -> tuple[set[int], int]:
    """Flood the group containing `start`; returns (stones, liberty count)."""
    color = cells[start]
    stones = {start}
    libs: set[int] = set()
    stack = [start]
    while stack:
        cur = stack.pop()
        for nb in go_neighbors(cur, size):
            v = cells[nb]
            if v == EMPTY:
                libs.add(nb)
            elif v == color and nb not in stones:
                stones.add(nb)
                stack.append(nb)
    return stones, len(libs)


def stone_of(player: Player) -> int:
    return BLACK if player == Player.FIRST else WHITE


class PhantomGo:
    """Game object: referee-level move adjudication for Phantom Go."""

    name = "phantomgo"
    has_pass = True

    def __init__(self, size: int = 9, komi: float = 1.0):
        if size < 1:
            raise ValueError("board size must be positive")
        self.size = size
        self.komi = komi
        self.area = size * size
        self.action_space = self.area + 1   # trailing slot is pass

    def initial_world(self) -> GoWorld:
        return GoWorld(self.size, bytes(self.area), Player.FIRST, None, 0, (0, 0))

    def attempt(self, world: GoWorld, actor: Player,
                action: int) -> tuple[MoveFeedback, GoWorld]:
        if actor != world.to_play:
            raise ValueError("attempt out of turn")
        if action == PASS:
            nxt = GoWorld(world.size, world.cells, actor.opponent, None,
                          world.passes + 1, world.prisoners)
            return MoveFeedback(Feedback.LEGAL), nxt
        if not 0 <= action < self.area:
            raise ValueError(f"action {action} out of range")
        if world.cells[action] != EMPTY:
            return MoveFeedback(Feedback.OCCUPIED), world
        if world.ko_point == action:
            return MoveFeedback(Feedback.KO), world

        size = world.size
        me = stone_of(actor)
        them = stone_of(actor.opponent)
        cells = bytearray(world.cells)
        cells[action] = me

        captured: set[int] = set()
        for nb in go_neighbors(action, size):
            if cells[nb] == them and nb not in captured:
                grp, libs = _group_and_liberties(cells, size, nb)
                if libs == 0:
                    captured |= grp
        for cell in captured:
            cells[cell] = EMPTY

        own_group, own_libs = _group_and_liberties(cells, size, action)
        if own_libs == 0:
            return MoveFeedback(Feedback.SUICIDE), world

        ko = None
        if len(captured) == 1 and len(own_group) == 1 and own_libs == 1:
            ko = next(iter(captured))

        pris = list(world.prisoners)
        pris[actor] += len(captured)
        nxt = GoWorld(size, bytes(cells), actor.opponent, ko, 0,
                      (pris[0], pris[1]))
        return MoveFeedback(Feedback.LEGAL, tuple(sorted(captured))), nxt

    def is_legal(self, world: GoWorld, action: int) -> bool:
        if action == PASS:
            return True
        if not 0 <= action < self.area or world.cells[action] != EMPTY:
            return False
        if world.ko_point == action:
            return False
        fb, _ = self.attempt(world, world.to_play, action)
        return fb.is_legal

    def legal_actions(self, world: GoWorld) -> list[int]:
        acts = [i for i in range(self.area) if self.is_legal(world, i)]
        acts.append(PASS)
        return acts

    def score_area(self, world: GoWorld, komi: float | None = None) -> float:
        """Area score for Black: stones + exclusive territory, minus White's
        and komi. Empty regions touching both colors count for neither."""
        if komi is None:
            komi = self.komi
        size = world.size
        seen = [False] * self.area
        counts = {BLACK: 0, WHITE: 0}
        for i in range(self.area):
            v = world.cells[i]
            if v != EMPTY:
                counts[v] += 1
            elif not seen[i]:
                region = [i]
                seen[i] = True
                stack = [i]
                borders: set[int] = set()
                while stack:
                    cur = stack.pop()
                    for nb in go_neighbors(cur, size):
                        v2 = world.cells[nb]
                        if v2 == EMPTY:
                            if not seen[nb]:
                                seen[nb] = True
                                region.append(nb)
                                stack.append(nb)
                        else:
                            borders.add(v2)
                if borders == {BLACK}:
                    counts[BLACK] += len(region)
                elif borders == {WHITE}:
                    counts[WHITE] += len(region)
        return counts[BLACK] - counts[WHITE] - komi

    def terminal_outcome(self, world: GoWorld) -> GameOutcome | None:
        if world.passes < 2:
            return None
        margin = self.score_area(world)
        margin_int = int(margin) if margin == int(margin) else margin
        if margin > 0:
            return GameOutcome(Player.FIRST, margin_int)
        if margin < 0:
            return GameOutcome(Player.SECOND, margin_int)
        return GameOutcome(None, margin_int)

    def render(self, world: GoWorld) -> str:
        chars = {EMPTY: ".", BLACK: "X", WHITE: "O"}
        return "\n".join(
            " ".join(chars[world.cells[r * self.size + c]]
                     for c in range(self.size))
            for r in range(self.size))
