"""Dark Hex rules: hidden-placement Hex on an n x n rhombus.

Cells are row-major indices. FIRST connects the top and bottom edges,
SECOND connects left and right. Winner detection is an incremental
union-find over stones plus four virtual border nodes; worlds are immutable
values so each move copies the (tiny) parent table.
"""

from __future__ import annotations

from dataclasses import dataclass

from .types import Feedback, GameOutcome, MoveFeedback, Player

EMPTY, FIRST_STONE, SECOND_STONE = 0, 1, 2

# Standard rhombus adjacency in (row, col) offsets.
HEX_OFFSETS = ((-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0))


def hex_neighbors(cell: int, size: int) -> tuple[int, ...]:
    if not 0 <= cell < size * size:
        raise ValueError(f"cell {cell} out of range for size {size}")
    r, c = divmod(cell, size)
    out = []
    for dr, dc in HEX_OFFSETS:
        nr, nc = r + dr, c + dc
        if 0 <= nr < size and 0 <= nc < size:
            out.append(nr * size + nc)
    return tuple(out)


def _find(parents: list[int], x: int) -> int:
    while parents[x] != x:
        parents[x] = parents[parents[x]]
        x = parents[x]
    return x


@dataclass(frozen=True)
class HexWorld:
    size: int
    cells: bytes                 # size*size entries of EMPTY/FIRST/SECOND
    to_play: Player
    uf: tuple[int, ...]          # parents over cells + 4 virtual borders

    # virtual node ids
    @property
    def _top(self):
        return self.size * self.size

    @property
    def _bottom(self):
        return self.size * self.size + 1

    @property
    def _left(self):
        return self.size * self.size + 2

    @property
    def _right(self):
        return self.size * self.size + 3

    def key(self) -> tuple:
        return (self.cells, int(self.to_play))


def initial_world(size: int) -> HexWorld:
    n2 = size * size
    return HexWorld(size, bytes(n2), Player.FIRST, tuple(range(n2 + 4)))


def place(world: HexWorld, player: Player, cell: int) -> HexWorld:
    """Put `player`'s stone on an empty cell, keeping connectivity current."""
    n = world.size
    assert world.cells[cell] == EMPTY
    stone = FIRST_STONE if player == Player.FIRST else SECOND_STONE
    cells = bytearray(world.cells)
    cells[cell] = stone
    parents = list(world.uf)

    def union(a, b):
        ra, rb = _find(parents, a), _find(parents, b)
        if ra != rb:
            parents[ra] = rb

    r, c = divmod(cell, n)
    if player == Player.FIRST:
        if r == 0:
            union(cell, world._top)
        if r == n - 1:
            union(cell, world._bottom)
    else:
        if c == 0:
            union(cell, world._left)
        if c == n - 1:
            union(cell, world._right)
    for nb in hex_neighbors(cell, n):
        if cells[nb] == stone:
            union(cell, nb)
    return HexWorld(n, bytes(cells), world.to_play, tuple(parents))


def hex_winner(world: HexWorld) -> Player | None:
    parents = list(world.uf)
    if _find(parents, world._top) == _find(parents, world._bottom):
        return Player.FIRST
    if _find(parents, world._left) == _find(parents, world._right):
        return Player.SECOND
    return None


class DarkHex:
    """Game object: referee-level move adjudication for Dark Hex."""

    name = "darkhex"
    has_pass = False

    def __init__(self, size: int = 11):
        if size < 1:
            raise ValueError("board size must be positive")
        self.size = size
        self.area = size * size
        self.action_space = self.area

    def initial_world(self) -> HexWorld:
        return initial_world(self.size)

    def attempt(self, world: HexWorld, actor: Player,
                action: int) -> tuple[MoveFeedback, HexWorld]:
        if actor != world.to_play:
            raise ValueError("attempt out of turn")
        if not 0 <= action < self.area:
            raise ValueError(f"action {action} out of range")
        if world.cells[action] != EMPTY:
            return MoveFeedback(Feedback.OCCUPIED), world
        nxt = place(world, actor, action)
        nxt = HexWorld(nxt.size, nxt.cells, actor.opponent, nxt.uf)
        return MoveFeedback(Feedback.LEGAL), nxt

    def is_legal(self, world: HexWorld, action: int) -> bool:
        return 0 <= action < self.area and world.cells[action] == EMPTY

    def legal_actions(self, world: HexWorld) -> list[int]:
        return [i for i in range(self.area) if world.cells[i] == EMPTY]

    def terminal_outcome(self, world: HexWorld) -> GameOutcome | None:
        winner = hex_winner(world)
        if winner is None:
            return None
        return GameOutcome(winner)

    def render(self, world: HexWorld) -> str:
        chars = {EMPTY: ".", FIRST_STONE: "X", SECOND_STONE: "O"}
        lines = []
        for r in range(self.size):
            row = " ".join(chars[world.cells[r * self.size + c]]
                           for c in range(self.size))
            lines.append(" " * r + row)
        return "\n".join(lines)
