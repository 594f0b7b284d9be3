"""One player's view of a game: an ordered event stream plus derived caches.

The event list is the single source of truth. Every cache is recomputed by
replaying the events, which keeps the replay-consistency property trivially
true and makes scripted fixtures easy to reason about.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .types import PASS, Feedback, ObservationEvent, Player


@dataclass(frozen=True)
class TurnSnapshot:
    """Knowledge at the end of one completed viewer turn."""

    own: frozenset[int]
    known_opponent: frozenset[int]
    tried: frozenset[int]      # cells rejected during this turn
    captured: frozenset[int]   # capture reveals since the previous snapshot


class _Replay:
    """Mutable accumulator used while replaying an event stream."""

    def __init__(self, viewer: Player):
        self.viewer = viewer
        self.own: set[int] = set()
        self.known_opponent: set[int] = set()
        self.known_empty: set[int] = set()
        self.tried: set[int] = set()
        self.revealed: list[tuple[int, Player]] = []
        self.turn_count = 0
        self.opponent_moves = 0          # opponent non-pass completed turns
        self.opponent_captured = 0       # opponent stones revealed captured
        self.consecutive_passes = 0
        self.snapshots: list[TurnSnapshot] = []
        self.turn_tried: set[int] = set()
        self.turn_captured: set[int] = set()
        self.last_feedback: Feedback | None = None

    def _apply_reveals(self, revealed):
        for cell, owner in revealed:
            self.revealed.append((cell, owner))
            self.turn_captured.add(cell)
            if owner == self.viewer:
                self.own.discard(cell)
            else:
                self.known_opponent.discard(cell)
                self.opponent_captured += 1
            self.known_empty.add(cell)

    def _close_viewer_turn(self):
        self.snapshots.append(TurnSnapshot(
            own=frozenset(self.own),
            known_opponent=frozenset(self.known_opponent),
            tried=frozenset(self.turn_tried),
            captured=frozenset(self.turn_captured),
        ))
        self.turn_tried = set()
        self.turn_captured = set()
        self.turn_count += 1

    def feed(self, ev: ObservationEvent):
        if ev.actor == self.viewer:
            fb = ev.feedback
            self.last_feedback = fb.kind
            if fb.is_legal:
                if ev.action == PASS:
                    self.consecutive_passes += 1
                else:
                    self.consecutive_passes = 0
                    self.own.add(ev.action)
                    self.known_empty.discard(ev.action)
                self._apply_reveals(ev.revealed)
                self._close_viewer_turn()
            else:
                self.turn_tried.add(ev.action)
                self.tried.add(ev.action)
                if fb.kind == Feedback.OCCUPIED:
                    if ev.action not in self.own:
                        self.known_opponent.add(ev.action)
                else:
                    # suicide/ko rejections prove the cell was empty then
                    self.known_empty.add(ev.action)
        else:
            if ev.action == PASS:
                self.consecutive_passes += 1
            else:
                # Hidden placement: any cell we believed empty may now be
                # occupied, so the known-empty set decays before captures
                # from this same move are recorded.
                self.consecutive_passes = 0
                self.opponent_moves += 1
                self.known_empty.clear()
            self._apply_reveals(ev.revealed)
            self.turn_count += 1


@dataclass(frozen=True)
class ObservationHistory:
    viewer: Player
    events: tuple[ObservationEvent, ...] = ()

    def with_event(self, ev: ObservationEvent) -> "ObservationHistory":
        return ObservationHistory(self.viewer, self.events + (ev,))

    @cached_property
    def _replay(self) -> _Replay:
        r = _Replay(self.viewer)
        for ev in self.events:
            r.feed(ev)
        return r

    @property
    def own_stones(self) -> frozenset[int]:
        return frozenset(self._replay.own)

    @property
    def known_opponent_stones(self) -> frozenset[int]:
        return frozenset(self._replay.known_opponent)

    @property
    def known_empty(self) -> frozenset[int]:
        return frozenset(self._replay.known_empty)

    @property
    def tried_cells(self) -> frozenset[int]:
        return frozenset(self._replay.tried)

    @property
    def revealed_captures(self) -> tuple[tuple[int, Player], ...]:
        return tuple(self._replay.revealed)

    @property
    def turn_count(self) -> int:
        return self._replay.turn_count

    @property
    def to_play(self) -> Player:
        # Every completed turn (own or observed opponent) alternates the mover.
        return Player(self._replay.turn_count % 2)

    @property
    def consecutive_passes(self) -> int:
        return self._replay.consecutive_passes

    @property
    def opponent_moves(self) -> int:
        return self._replay.opponent_moves

    @property
    def opponent_captured(self) -> int:
        return self._replay.opponent_captured

    @property
    def snapshots(self) -> list[TurnSnapshot]:
        return list(self._replay.snapshots)

    @property
    def pending_tried(self) -> frozenset[int]:
        """Rejected cells of the current, not yet completed turn."""
        return frozenset(self._replay.turn_tried)

    @property
    def last_feedback(self) -> Feedback | None:
        return self._replay.last_feedback

    @property
    def hidden_opponent_count(self) -> int:
        """Opponent stones on the board whose location the viewer cannot pin."""
        r = self._replay
        on_board = r.opponent_moves - r.opponent_captured
        return on_board - len(r.known_opponent)
