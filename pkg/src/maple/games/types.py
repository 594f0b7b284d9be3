"""Shared domain types for the two-player hidden-placement games."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum


class Player(IntEnum):
    FIRST = 0
    SECOND = 1

    @property
    def opponent(self) -> "Player":
        return Player(1 - self)


# Actions are cell indices (0-based, row-major). Pass is a sentinel; only
# Phantom Go accepts it.
PASS = -1
Action = int


def action_str(action: Action) -> str:
    return "pass" if action == PASS else str(action)


def parse_action(text: str) -> Action:
    return PASS if text == "pass" else int(text)


class Feedback(IntEnum):
    """Referee verdict for an attempted move."""

    LEGAL = 0
    OCCUPIED = 1
    SUICIDE = 2
    KO = 3

    @property
    def is_legal(self) -> bool:
        return self is Feedback.LEGAL

    @property
    def label(self) -> str:
        return ("legal", "occupied", "suicide", "ko")[self]


FEEDBACK_BY_LABEL = {f.label: f for f in Feedback}


@dataclass(frozen=True)
class MoveFeedback:
    kind: Feedback
    # Cells captured by a legal move; nonempty only in Phantom Go. The
    # captured stones always belonged to the mover's opponent.
    captured: tuple[int, ...] = ()

    @property
    def is_legal(self) -> bool:
        return self.kind.is_legal


@dataclass(frozen=True)
class GameOutcome:
    winner: Player | None  # None = draw
    # Area score for FIRST minus komi; Phantom Go only.
    margin: int | None = None

    @property
    def is_draw(self) -> bool:
        return self.winner is None


def outcome_value(outcome: GameOutcome, perspective: Player) -> int:
    """Game result in {-1, 0, +1} from `perspective`."""
    if outcome.winner is None:
        return 0
    return 1 if outcome.winner == perspective else -1


@dataclass(frozen=True)
class ObservationEvent:
    """One referee-mediated event as seen by a single player.

    `action` is present for the viewer's own attempts and for public
    opponent actions (pass announcements); a hidden opponent placement has
    action=None. `feedback` exists only on the viewer's own attempts.
    `revealed` lists (cell, owner) pairs made public by captures.
    """

    turn: int
    actor: Player
    action: Action | None = None
    feedback: MoveFeedback | None = None
    revealed: tuple[tuple[int, Player], ...] = ()

    @property
    def is_own(self) -> bool:  # relative to the stream it lives in
        return self.feedback is not None
