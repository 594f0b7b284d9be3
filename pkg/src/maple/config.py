"""Line-based `key = value` configuration with dotted section prefixes.

Two default profiles exist: `desk` (small boards, small nets, minutes of
compute) and `paper` (full-scale hyperparameters). A config file overrides
profile defaults key by key; unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .games.referee import Game, make_game
from .net import NetConfig
from .search import SearchConfig
from .train import TrainConfig, net_config_for


class ConfigError(Exception):
    pass


_DESK = {
    "game.name": "darkhex",
    "game.size": 5,
    "game.komi": 1.0,
    "net.blocks": 1,
    "net.filters": 16,
    "net.embed_dim": 64,
    "search.algorithm": "maple",
    "search.sampler": "siamese",
    "search.simulations": 16,
    "search.k": 3,
    "search.m": 10,
    "search.c_puct": 1.25,
    "search.noise_eps": 0.25,
    "search.temperature_moves": "auto",
    "train.iterations": 20,
    "train.games_per_iter": 50,
    "train.steps_per_iter": 100,
    "train.batch": 64,
    "train.lr": 0.02,
    "train.momentum": 0.9,
    "train.weight_decay": 0.0001,
    "train.buffer_games": 500,
    "train.seed": 0,
    "train.workers": 1,
    "eval.games": 200,
    "eval.opponents": "random,rollout:64",
    "eval.seed": 1,
    "serve.port": 8421,
    "serve.max_games": 64,
}

_PAPER_OVERRIDES = {
    "game.size": 11,
    "net.blocks": 3,
    "net.filters": 256,
    "search.k": 5,
    "search.m": 50,
    "train.iterations": 200,
    "train.games_per_iter": 1000,
    "train.steps_per_iter": 200,
    "train.batch": 1024,
    "train.buffer_games": 20000,
    "eval.games": 250,
}

_STR_KEYS = {"game.name", "search.algorithm", "search.sampler",
             "eval.opponents"}
_FLOAT_KEYS = {"game.komi", "search.c_puct", "search.noise_eps", "train.lr",
               "train.momentum", "train.weight_decay"}

_CHOICES = {
    "game.name": ("darkhex", "phantomgo"),
    "search.algorithm": ("maple", "pimc"),
    "search.sampler": ("random", "siamese"),
}


def profile_defaults(profile: str) -> dict:
    if profile == "desk":
        return dict(_DESK)
    if profile == "paper":
        out = dict(_DESK)
        out.update(_PAPER_OVERRIDES)
        return out
    raise ConfigError(f"unknown profile {profile!r} (expected desk or paper)")


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _STR_KEYS:
        return raw
    if key == "search.temperature_moves" and raw == "auto":
        return "auto"
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        return int(raw)
    except ValueError:
        kind = "number" if key in _FLOAT_KEYS else "integer"
        raise ConfigError(f"{key}: expected {kind}, got {raw!r}") from None


def parse_config_text(text: str, profile: str = "desk",
                      source: str = "<config>") -> dict:
    values = profile_defaults(profile)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', "
                              f"got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in values:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    _validate(values)
    return values


def load_config(path, profile: str = "desk") -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(p.read_text(), profile, source=str(path))


def _validate(v: dict):
    for key, choices in _CHOICES.items():
        if v[key] not in choices:
            raise ConfigError(f"{key}: must be one of {'|'.join(choices)}, "
                              f"got {v[key]!r}")
    positive = ["game.size", "net.blocks", "net.filters", "net.embed_dim",
                "search.simulations", "search.k", "search.m",
                "train.iterations", "train.games_per_iter",
                "train.steps_per_iter", "train.batch", "train.buffer_games",
                "train.workers", "eval.games", "serve.port",
                "serve.max_games"]
    for key in positive:
        if v[key] < 1:
            raise ConfigError(f"{key}: must be >= 1, got {v[key]}")
    if v["search.m"] < v["search.k"]:
        raise ConfigError("search.m must be >= search.k")
    if v["eval.games"] % 2 != 0:
        raise ConfigError("eval.games must be even (colors alternate)")
    if not 0.0 <= v["search.noise_eps"] <= 1.0:
        raise ConfigError("search.noise_eps must be in [0, 1]")


@dataclass
class AppConfig:
    values: dict

    def game(self) -> Game:
        return make_game(self.values["game.name"], self.values["game.size"],
                         self.values["game.komi"])

    def net_config(self, game: Game) -> NetConfig:
        return net_config_for(game, blocks=self.values["net.blocks"],
                              filters=self.values["net.filters"],
                              embed_dim=self.values["net.embed_dim"])

    def search_config(self) -> SearchConfig:
        tm = self.values["search.temperature_moves"]
        return SearchConfig(
            simulations=self.values["search.simulations"],
            k=self.values["search.k"],
            m=self.values["search.m"],
            sampler=self.values["search.sampler"],
            c_puct=self.values["search.c_puct"],
            noise_eps=self.values["search.noise_eps"],
            temperature_moves=None if tm == "auto" else tm,
        )

    def train_config(self) -> TrainConfig:
        v = self.values
        return TrainConfig(
            iterations=v["train.iterations"],
            games_per_iter=v["train.games_per_iter"],
            steps_per_iter=v["train.steps_per_iter"],
            batch=v["train.batch"],
            lr=v["train.lr"],
            momentum=v["train.momentum"],
            weight_decay=v["train.weight_decay"],
            buffer_games=v["train.buffer_games"],
            seed=v["train.seed"],
            workers=v["train.workers"],
        )

    @property
    def algorithm(self) -> str:
        return self.values["search.algorithm"]

    @property
    def opponents(self) -> list[str]:
        return [s.strip() for s in self.values["eval.opponents"].split(",")
                if s.strip()]


def app_config(path, profile: str = "desk") -> AppConfig:
    cfg = AppConfig(load_config(path, profile))
    try:   # eager construction surfaces any remaining value errors as config errors
        game = cfg.game()
        cfg.net_config(game)
        cfg.search_config()
        cfg.train_config()
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
