"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import AppConfig, ConfigError, app_config
from .evaluate import (ablation_grid, dump_embeddings, grid_file_text,
                       load_net_agent, make_opponent, run_match, win_rate_ci)
from .net import init_params, load_checkpoint
from .search import NetEvaluator
from .train import run_training, selfplay_game

DEFAULT_K_GRID = [1, 5, 10]
DEFAULT_M_GRID = [10, 30, 50, 100]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maple",
        description="Imperfect-information game engine: training, "
                    "evaluation, and a fog-of-war match server.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="config file (key = value lines)")
        p.add_argument("--profile", choices=("desk", "paper"), default="desk",
                       help="default table a config file overrides")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")

    p = sub.add_parser("train", help="run the self-play training loop")
    common(p)
    p.add_argument("--out", default="run", help="output directory")

    p = sub.add_parser("selfplay", help="generate self-play game records")
    common(p)
    p.add_argument("-n", type=int, required=True, help="number of games")
    p.add_argument("--ckpt", default=None,
                   help="checkpoint (default: freshly initialized net)")

    p = sub.add_parser("evaluate", help="match two agents")
    common(p)
    p.add_argument("--a", required=True, help="checkpoint for agent A")
    p.add_argument("--b", required=True,
                   help="checkpoint or builtin (random, rollout:<sims>)")
    p.add_argument("--games", type=int, default=None)
    p.add_argument("--out", default=None, help="write the result file here")

    p = sub.add_parser("ablate", help="sampling-size ablation grid")
    common(p)
    p.add_argument("--axis", choices=("k", "m"), required=True)
    p.add_argument("--ckpt", action="append", default=[],
                   help="either PATH (single train value from the config) "
                        "or VALUE=PATH, repeatable")
    p.add_argument("--eval-values", default=None,
                   help="comma list overriding the default grid")
    p.add_argument("--games", type=int, default=None,
                   help="games per opponent per cell")
    p.add_argument("--out", default="grid.txt")

    p = sub.add_parser("dump-embeddings", help="embedding table for "
                                               "external projection tools")
    common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--states", type=int, default=50)
    p.add_argument("--negatives", type=int, default=50)
    p.add_argument("--out", default="embeddings.csv")

    p = sub.add_parser("serve", help="HTTP match service")
    common(p)
    p.add_argument("--ckpt", default=None,
                   help="agent checkpoint (builtins always available)")
    p.add_argument("--port", type=int, default=None)
    return parser


def _seeded(cfg: AppConfig, override: int | None, key: str) -> int:
    return cfg.values[key] if override is None else override


def cmd_train(args) -> int:
    cfg = app_config(args.config, args.profile)
    game = cfg.game()
    train_cfg = cfg.train_config()
    if args.seed is not None:
        train_cfg.seed = args.seed
    run_training(game, cfg.net_config(game), cfg.search_config(),
                 cfg.algorithm, train_cfg, args.out,
                 log=lambda line: print(line, flush=True))
    return 0


def cmd_selfplay(args) -> int:
    cfg = app_config(args.config, args.profile)
    game = cfg.game()
    net_cfg = cfg.net_config(game)
    if args.ckpt:
        params, net_cfg, meta, _ = load_checkpoint(args.ckpt)
    else:
        params = init_params(net_cfg, np.random.default_rng(
            _seeded(cfg, args.seed, "train.seed")))
    evaluator = NetEvaluator(game, params, net_cfg)
    seed = _seeded(cfg, args.seed, "train.seed")
    for j in range(args.n):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,)))
        res = selfplay_game(game, evaluator, cfg.search_config(),
                            cfg.algorithm, rng)
        sys.stdout.write(res.record_text + "\n")
    return 0


def cmd_evaluate(args) -> int:
    cfg = app_config(args.config, args.profile)
    game = cfg.game()
    search_cfg = cfg.search_config()
    games = args.games if args.games is not None else cfg.values["eval.games"]
    seed = _seeded(cfg, args.seed, "eval.seed")
    agent_a = load_net_agent(args.a, game, search_cfg, cfg.algorithm)
    agent_b = make_opponent(args.b, game, search_cfg)
    result = run_match(game, agent_a, agent_b, games, seed)
    rate, ci = win_rate_ci(result.wins, result.draws, result.losses)
    text = (f"a={args.a} b={args.b} games={result.games} "
            f"wins={result.wins} draws={result.draws} "
            f"losses={result.losses} rate={rate:.6f} ci={ci:.6f}\n")
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def _parse_ckpt_args(entries: list[str], default_value: int) -> dict[int, str]:
    out: dict[int, str] = {}
    for entry in entries:
        if "=" in entry:
            value, path = entry.split("=", 1)
            out[int(value)] = path
        else:
            out[default_value] = entry
    return out


def cmd_ablate(args) -> int:
    cfg = app_config(args.config, args.profile)
    game = cfg.game()
    base = cfg.search_config()
    eval_values = [int(v) for v in args.eval_values.split(",")] \
        if args.eval_values else \
        (DEFAULT_K_GRID if args.axis == "k" else DEFAULT_M_GRID)
    default_tv = cfg.values["search.k"] if args.axis == "k" \
        else cfg.values["search.m"]
    ckpts = _parse_ckpt_args(args.ckpt, default_tv)
    if not ckpts:
        raise FileNotFoundError("ablate needs at least one --ckpt")
    games = args.games if args.games is not None else cfg.values["eval.games"]
    cells = ablation_grid(game, args.axis, ckpts, eval_values, base,
                          cfg.opponents, games,
                          _seeded(cfg, args.seed, "eval.seed"),
                          cfg.algorithm)
    text = grid_file_text(args.axis, list(ckpts), eval_values, cells)
    Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_dump_embeddings(args) -> int:
    cfg = app_config(args.config, args.profile)
    game = cfg.game()
    params, net_cfg, meta, _ = load_checkpoint(args.ckpt)
    if meta.game != game.name or meta.size != game.size:
        raise ValueError(f"checkpoint {args.ckpt} is for {meta.game} size "
                         f"{meta.size}, config wants {game.name} {game.size}")
    text = dump_embeddings(game, params, net_cfg, cfg.search_config(),
                           args.states, args.negatives,
                           _seeded(cfg, args.seed, "eval.seed"),
                           cfg.algorithm)
    Path(args.out).write_text(text)
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    cfg = app_config(args.config, args.profile)
    port = args.port if args.port is not None else cfg.values["serve.port"]
    serve(cfg, port=port, default_ckpt=args.ckpt)
    return 0


_COMMANDS = {
    "train": cmd_train,
    "selfplay": cmd_selfplay,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "dump-embeddings": cmd_dump_embeddings,
    "serve": cmd_serve,
}


def cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:   # argparse errors are usage errors
        return 2 if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli())
