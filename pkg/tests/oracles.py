"""Independent reference implementations used only as test oracles.

These deliberately reimplement the rules the slow, obvious way: full-board
scans, BFS, flood fill. They share no code with the engine so that
agreement between the two is meaningful.
"""

from __future__ import annotations

from collections import deque


# --- Hex ----------------------------------------------------------------------

def hex_adjacent(cell: int, size: int):
    r, c = divmod(cell, size)
    for dr, dc in ((-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)):
        nr, nc = r + dr, c + dc
        if 0 <= nr < size and 0 <= nc < size:
            yield nr * size + nc


def bfs_hex_winner(cells, size: int):
    """0/1 for a winner, None otherwise. First connects row 0 to row
    size-1, Second connects column 0 to column size-1."""
    for player, stone in ((0, 1), (1, 2)):
        if player == 0:
            starts = [c for c in range(size) if cells[c] == stone]
            goal = lambda cell: cell // size == size - 1
        else:
            starts = [r * size for r in range(size) if cells[r * size] == stone]
            goal = lambda cell: cell % size == size - 1
        seen = set(starts)
        queue = deque(starts)
        while queue:
            cur = queue.popleft()
            if goal(cur):
                return player
            for nb in hex_adjacent(cur, size):
                if cells[nb] == stone and nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
    return None


# --- Go -----------------------------------------------------------------------

def go_adjacent(cell: int, size: int):
    r, c = divmod(cell, size)
    if r > 0:
        yield cell - size
    if r < size - 1:
        yield cell + size
    if c > 0:
        yield cell - 1
    if c < size - 1:
        yield cell + 1


def go_group(cells, size, start):
    color = cells[start]
    group = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nb in go_adjacent(cur, size):
            if cells[nb] == color and nb not in group:
                group.add(nb)
                queue.append(nb)
    return group


def go_liberties(cells, size, group):
    libs = set()
    for cell in group:
        for nb in go_adjacent(cell, size):
            if cells[nb] == 0:
                libs.add(nb)
    return libs


class SimpleGo:
    """Naive reference Go: list board, full rescans, simple ko."""

    def __init__(self, size):
        self.size = size
        self.cells = [0] * (size * size)
        self.to_play = 1
        self.ko = None
        self.passes = 0

    def try_move(self, cell):
        """Returns 'occupied' | 'suicide' | 'ko' | ('legal', captured set)."""
        if cell == -1:
            self.passes += 1
            self.to_play = 3 - self.to_play
            self.ko = None
            return ("legal", set())
        if self.cells[cell] != 0:
            return "occupied"
        if self.ko == cell:
            return "ko"
        me, them = self.to_play, 3 - self.to_play
        trial = list(self.cells)
        trial[cell] = me
        captured = set()
        for nb in go_adjacent(cell, self.size):
            if trial[nb] == them:
                group = go_group(trial, self.size, nb)
                if not go_liberties(trial, self.size, group):
                    captured |= group
        for c in captured:
            trial[c] = 0
        own = go_group(trial, self.size, cell)
        own_libs = go_liberties(trial, self.size, own)
        if not own_libs:
            return "suicide"
        self.ko = None
        if len(captured) == 1 and len(own) == 1 and len(own_libs) == 1:
            self.ko = next(iter(captured))
        self.cells = trial
        self.to_play = them
        self.passes = 0
        return ("legal", captured)


def flood_fill_score(cells, size, komi):
    """Area score for Black (1): stones plus empty regions touching only
    one color."""
    score = {1: 0, 2: 0}
    seen = set()
    for i, v in enumerate(cells):
        if v != 0:
            score[v] += 1
        elif i not in seen:
            region = {i}
            queue = deque([i])
            touching = set()
            while queue:
                cur = queue.popleft()
                for nb in go_adjacent(cur, size):
                    if cells[nb] == 0:
                        if nb not in region:
                            region.add(nb)
                            queue.append(nb)
                    else:
                        touching.add(cells[nb])
            seen |= region
            if touching == {1}:
                score[1] += len(region)
            elif touching == {2}:
                score[2] += len(region)
    return score[1] - score[2] - komi
