from .darkhex import DarkHex, HexWorld, hex_neighbors, hex_winner
from .history import ObservationHistory, TurnSnapshot
from .phantomgo import GoWorld, PhantomGo
from .referee import Game, Referee, apply_attempt, make_game
from .types import (PASS, Action, Feedback, GameOutcome, MoveFeedback,
                    ObservationEvent, Player, action_str, outcome_value,
                    parse_action)

__all__ = [
    "PASS", "Action", "DarkHex", "Feedback", "Game", "GameOutcome",
    "GoWorld", "HexWorld", "MoveFeedback", "ObservationEvent",
    "ObservationHistory", "PhantomGo", "Player", "Referee", "TurnSnapshot",
    "action_str", "apply_attempt", "hex_neighbors", "hex_winner",
    "make_game", "outcome_value", "parse_action",
]
