"""Config parsing and the command-line surface (exit codes, defaults)."""

import numpy as np
import pytest

from maple.cli import DEFAULT_K_GRID, DEFAULT_M_GRID, build_parser, cli
from maple.config import ConfigError, app_config, parse_config_text
from maple.games import DarkHex
from maple.net import CheckpointMeta, init_params, save_checkpoint
from maple.train import net_config_for


def test_defaults_desk_profile():
    cfg = parse_config_text("", profile="desk")
    assert cfg["game.name"] == "darkhex"
    assert cfg["net.filters"] == 16
    assert cfg["search.k"] == 3
    assert cfg["train.games_per_iter"] == 50


def test_defaults_paper_profile():
    cfg = parse_config_text("", profile="paper")
    assert cfg["net.filters"] == 256
    assert cfg["net.blocks"] == 3
    assert cfg["search.k"] == 5
    assert cfg["search.m"] == 50
    assert cfg["train.games_per_iter"] == 1000
    assert cfg["train.batch"] == 1024
    assert cfg["train.buffer_games"] == 20000
    assert cfg["train.lr"] == 0.02
    assert cfg["train.momentum"] == 0.9
    assert cfg["train.weight_decay"] == 0.0001


def test_override_and_comments():
    text = """
    # a comment
    game.name = phantomgo
    game.size = 5
    search.k = 2
    """
    cfg = parse_config_text(text)
    assert cfg["game.name"] == "phantomgo"
    assert cfg["game.size"] == 5
    assert cfg["search.k"] == 2


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("game.sizes = 5")


def test_bad_value_rejected():
    with pytest.raises(ConfigError, match="expected integer"):
        parse_config_text("game.size = five")
    with pytest.raises(ConfigError, match="search.k"):
        parse_config_text("search.k = 0")
    with pytest.raises(ConfigError, match="must be one of"):
        parse_config_text("search.algorithm = minimax")
    with pytest.raises(ConfigError, match="m must be >= "):
        parse_config_text("search.k = 5\nsearch.m = 2")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        app_config(tmp_path / "nope.cfg")


def test_cli_config_error_exit_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("search.k = 0\n")
    assert cli(["train", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_cli_missing_checkpoint_exit_1(tmp_path, capsys):
    cfg = tmp_path / "ok.cfg"
    cfg.write_text("game.size = 3\n")
    rc = cli(["evaluate", str(cfg), "--a", str(tmp_path / "missing.maplenet"),
              "--b", "random", "--games", "2"])
    assert rc == 1
    assert "missing.maplenet" in capsys.readouterr().err


def test_cli_ablate_default_grids():
    parser = build_parser()
    args = parser.parse_args(["ablate", "cfg", "--axis", "k"])
    assert args.axis == "k"
    assert DEFAULT_K_GRID == [1, 5, 10]
    assert DEFAULT_M_GRID == [10, 30, 50, 100]


def test_cli_selfplay_writes_records(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("game.size = 3\nsearch.simulations = 4\nsearch.k = 2\n"
                   "search.m = 2\nsearch.sampler = random\n")
    rc = cli(["selfplay", str(cfg), "-n", "2", "--seed", "3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("game=darkhex") == 2
    assert "result=" in out


def test_cli_evaluate_and_rerun_identical(tmp_path, capsys):
    game = DarkHex(3)
    ncfg = net_config_for(game, blocks=1, filters=8)
    params = init_params(ncfg, np.random.default_rng(1))
    ckpt = tmp_path / "a.maplenet"
    save_checkpoint(ckpt, params, ncfg, CheckpointMeta("darkhex", 3, 0.0))
    cfg = tmp_path / "c.cfg"
    cfg.write_text("game.size = 3\nsearch.simulations = 4\nsearch.k = 2\n"
                   "search.m = 2\nsearch.sampler = random\neval.games = 4\n")
    outs = []
    for name in ("r1.txt", "r2.txt"):
        rc = cli(["evaluate", str(cfg), "--a", str(ckpt), "--b", "random",
                  "--out", str(tmp_path / name)])
        assert rc == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    assert b"rate=" in outs[0]


def test_cli_dump_embeddings(tmp_path):
    game = DarkHex(3)
    ncfg = net_config_for(game, blocks=1, filters=8)
    params = init_params(ncfg, np.random.default_rng(2))
    ckpt = tmp_path / "e.maplenet"
    save_checkpoint(ckpt, params, ncfg, CheckpointMeta("darkhex", 3, 0.0))
    cfg = tmp_path / "c.cfg"
    cfg.write_text("game.size = 3\nsearch.simulations = 4\nsearch.k = 2\n"
                   "search.m = 2\nsearch.sampler = random\n")
    out = tmp_path / "emb.csv"
    rc = cli(["dump-embeddings", str(cfg), "--ckpt", str(ckpt),
              "--states", "2", "--negatives", "3", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * (2 + 3)
