"""Feature-plane encoders: world states and observation histories to binary
tensors with a fixed channel layout.

State tensor (6, n, n), from `perspective`:
    0  perspective's stones          1  opponent's stones
    2  perspective to move (const)   3  opponent to move (const)
    4  opponent stones known to perspective
    5  perspective stones known to the opponent

The board-only variant keeps channels 0-3. History tensors hold per-turn
snapshot blocks over the viewer's last 8 completed turns, most recent
first: own stones x8, known opponent stones x8, then for Phantom Go tried
positions x8 and capture reveals x8, then the two to-move planes. Totals:
34 channels for Phantom Go, 18 for Dark Hex.

Channels 4-5 are exact when both observation histories are available (the
omniscient self-play driver); during search over sampled worlds channel 5
falls back to the viewer's public lower bound, since opponent probes are
invisible to the viewer.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .games.darkhex import FIRST_STONE, SECOND_STONE
from .games.history import ObservationHistory
from .games.phantomgo import BLACK, WHITE
from .games.referee import Game
from .games.types import Player

STATE_CHANNELS = 6
BOARD_CHANNELS = 4
HISTORY_TURNS = 8


def anchor_channels(game: Game) -> int:
    per_turn = 4 if game.has_pass else 2
    return per_turn * HISTORY_TURNS + 2


def _stone_value(player: Player) -> int:
    # Both games use 1 for FIRST and 2 for SECOND.
    return FIRST_STONE if player == Player.FIRST else SECOND_STONE


def _fill_cells(plane: np.ndarray, cells: Iterable[int], size: int):
    for c in cells:
        plane[c // size, c % size] = 1.0


def encode_state(game: Game, world, perspective: Player,
                 known_to_viewer: Iterable[int] = (),
                 known_to_opponent: Iterable[int] = (),
                 dtype=np.float32) -> np.ndarray:
    n = game.size
    planes = np.zeros((STATE_CHANNELS, n, n), dtype=dtype)
    mine = _stone_value(perspective)
    theirs = _stone_value(perspective.opponent)
    board = np.frombuffer(world.cells, dtype=np.uint8).reshape(n, n)
    planes[0][board == mine] = 1.0
    planes[1][board == theirs] = 1.0
    if world.to_play == perspective:
        planes[2].fill(1.0)
    else:
        planes[3].fill(1.0)
    _fill_cells(planes[4], known_to_viewer, n)
    _fill_cells(planes[5], known_to_opponent, n)
    return planes


def encode_board4(game: Game, world, perspective: Player,
                  dtype=np.float32) -> np.ndarray:
    return encode_state(game, world, perspective, dtype=dtype)[:BOARD_CHANNELS]


def encode_state_from_histories(game: Game, world, perspective: Player,
                                viewer_history: ObservationHistory,
                                opponent_history: ObservationHistory,
                                dtype=np.float32) -> np.ndarray:
    """Exact encoding with both players' knowledge (training targets)."""
    return encode_state(game, world, perspective,
                        known_to_viewer=viewer_history.known_opponent_stones,
                        known_to_opponent=opponent_history.known_opponent_stones,
                        dtype=dtype)


def encode_history(game: Game, history: ObservationHistory,
                   dtype=np.float32) -> np.ndarray:
    n = game.size
    channels = anchor_channels(game)
    planes = np.zeros((channels, n, n), dtype=dtype)
    snaps = history.snapshots[::-1][:HISTORY_TURNS]   # most recent first
    for t, snap in enumerate(snaps):
        _fill_cells(planes[t], snap.own, n)
        _fill_cells(planes[HISTORY_TURNS + t], snap.known_opponent, n)
        if game.has_pass:
            _fill_cells(planes[2 * HISTORY_TURNS + t], snap.tried, n)
            _fill_cells(planes[3 * HISTORY_TURNS + t], snap.captured, n)
    if history.to_play == history.viewer:
        planes[channels - 2].fill(1.0)
    else:
        planes[channels - 1].fill(1.0)
    return planes
