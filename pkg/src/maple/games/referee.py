"""The omniscient referee: adjudicates attempts and emits per-player events.

Information rules: a player always sees its own attempts and their
feedback; a hidden placement by the opponent is observed only as "the
opponent completed a turn"; passes are announced publicly; captures are
revealed to both players as (cell, owner) pairs. Illegal attempts are
private to the actor and never advance the move counter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .darkhex import DarkHex
from .history import ObservationHistory
from .phantomgo import PhantomGo
from .types import (PASS, GameOutcome, MoveFeedback, ObservationEvent,
                    Player, action_str)

Game = DarkHex | PhantomGo


def make_game(name: str, size: int, komi: float = 1.0) -> Game:
    if name == "darkhex":
        return DarkHex(size)
    if name == "phantomgo":
        return PhantomGo(size, komi)
    raise ValueError(f"unknown game {name!r}")


def apply_attempt(game: Game, world, actor: Player, action: int, turn: int = 0):
    """Adjudicate one attempt.

    Returns (feedback, next_world, (event_for_first, event_for_second));
    the non-actor's entry is None for illegal attempts.
    """
    if game.terminal_outcome(world) is not None:
        raise ValueError("game already decided")
    feedback, next_world = game.attempt(world, actor, action)
    revealed = tuple((c, actor.opponent) for c in feedback.captured)
    own_event = ObservationEvent(turn, actor, action, feedback, revealed)
    if not feedback.is_legal:
        events = (own_event, None) if actor == Player.FIRST else (None, own_event)
        return feedback, next_world, events
    visible = action if action == PASS else None
    other_event = ObservationEvent(turn, actor, visible, None, revealed)
    if actor == Player.FIRST:
        return feedback, next_world, (own_event, other_event)
    return feedback, next_world, (other_event, own_event)


@dataclass
class Referee:
    """Drives one real game: true world plus both observation histories."""

    game: Game
    seed: int | None = None
    world: object = None
    histories: list[ObservationHistory] = field(default_factory=list)
    turn: int = 0
    attempt_lines: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.world = self.game.initial_world()
        self.histories = [ObservationHistory(Player.FIRST),
                          ObservationHistory(Player.SECOND)]

    @property
    def to_play(self) -> Player:
        return self.world.to_play

    def outcome(self) -> GameOutcome | None:
        return self.game.terminal_outcome(self.world)

    def attempt(self, actor: Player, action: int) -> MoveFeedback:
        turn = self.turn
        feedback, next_world, events = apply_attempt(
            self.game, self.world, actor, action, turn)
        for player in (Player.FIRST, Player.SECOND):
            if events[player] is not None:
                self.histories[player] = \
                    self.histories[player].with_event(events[player])
        self.world = next_world
        if feedback.is_legal:
            self.turn += 1
        self.attempt_lines.append(
            f"t={turn} actor={int(actor)} action={action_str(action)} "
            f"feedback={feedback.kind.label} "
            f"captured={','.join(str(c) for c in feedback.captured)}")
        return feedback

    def record_text(self) -> str:
        """Game record in the line-based text format."""
        out = self.outcome()
        lines = [f"game={self.game.name}",
                 f"size={self.game.size}",
                 f"seed={self.seed if self.seed is not None else 0}"]
        lines.extend(self.attempt_lines)
        if out is not None:
            result = "draw" if out.winner is None else \
                ("first" if out.winner == Player.FIRST else "second")
            margin = out.margin if out.margin is not None else 0
            lines.append(f"result={result} margin={int(margin)}")
        return "\n".join(lines) + "\n"
