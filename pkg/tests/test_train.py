"""Self-play data generation, replay buffer semantics, triplet building,
and the training loop's logging/resume behavior."""

import numpy as np
import pytest

from maple.games import DarkHex, Player
from maple.net import init_params, load_checkpoint
from maple.search import NetEvaluator, SearchConfig
from maple.train import (ReplayBuffer, TrainConfig, batch_arrays,
                         build_triplet, net_config_for, run_training,
                         selfplay_game)


@pytest.fixture(scope="module")
def sp():
    game = DarkHex(3)
    cfg = net_config_for(game, blocks=1, filters=8)
    params = init_params(cfg, np.random.default_rng(30))
    ev = NetEvaluator(game, params, cfg)
    scfg = SearchConfig(simulations=8, k=2, m=4, sampler="random")
    return game, ev, scfg


def test_selfplay_game_invariants(sp):
    game, ev, scfg = sp
    res = selfplay_game(game, ev, scfg, "maple", np.random.default_rng(0))
    assert not res.forfeited
    assert res.turns <= 9
    assert res.outcome.winner is not None
    for rec in res.records:
        assert rec.pi.sum() == pytest.approx(1.0, abs=1e-6)
        assert (rec.pi[~rec.legal] == 0).all()
        assert rec.z == (1.0 if rec.to_play == res.outcome.winner else -1.0)
    # the two players' z values are negatives of each other
    zs = {rec.to_play: rec.z for rec in res.records}
    assert zs[Player.FIRST] == -zs[Player.SECOND]


def test_selfplay_pimc_mode(sp):
    game, ev, scfg = sp
    res = selfplay_game(game, ev, scfg, "pimc", np.random.default_rng(1))
    assert res.outcome.winner is not None
    assert res.counter.policy_value_evals > 0


def test_records_store_true_world_planes(sp):
    game, ev, scfg = sp
    res = selfplay_game(game, ev, scfg, "maple", np.random.default_rng(2))
    first = res.records[0]
    assert first.state.shape == (6, 3, 3)
    assert first.anchor.shape == (18, 3, 3)
    assert first.positive.shape == (4, 3, 3)
    assert len(first.positive_cells) == 9


def test_build_triplet_negative_differs(sp):
    game, ev, scfg = sp
    rng = np.random.default_rng(3)
    res = selfplay_game(game, ev, scfg, "maple", rng)
    usable = [r for r in res.records if r.constraints.hidden_count >= 1]
    assert usable
    rec = usable[-1]
    for _ in range(200):
        anchor, pos, neg, ok = build_triplet(game, rec, rng)
        assert ok
        assert not np.array_equal(pos, neg)


def test_build_triplet_singleton_skipped(sp):
    game, ev, scfg = sp
    rng = np.random.default_rng(4)
    res = selfplay_game(game, ev, scfg, "maple", rng)
    first = res.records[0]          # opening decision: no opponent stones
    assert first.constraints.hidden_count == 0
    _, _, neg, ok = build_triplet(game, first, rng)
    assert not ok and not neg.any()


def test_buffer_fifo_eviction():
    buf = ReplayBuffer(3)
    for i in range(5):
        buf.append([f"game{i}"])
    assert len(buf) == 3
    assert [g[0] for g in buf.games] == ["game2", "game3", "game4"]


def test_buffer_batches_mix_games():
    buf = ReplayBuffer(10)
    buf.append(["a1", "a2"])
    buf.append(["b1"])
    rng = np.random.default_rng(5)
    for _ in range(50):
        batch = buf.sample(4, rng)
        games = {x[0] for x in batch}
        assert len(games) >= 2


def test_buffer_uniform_over_decisions():
    """With realistic batch sizes the mixing redraw is rare and sampling
    stays uniform across decisions regardless of game lengths."""
    buf = ReplayBuffer(10)
    buf.append([("g0", i) for i in range(30)])
    buf.append([("g1", i) for i in range(10)])
    buf.append([("g2", i) for i in range(20)])
    rng = np.random.default_rng(6)
    counts = {"g0": 0, "g1": 0, "g2": 0}
    n = 2000
    for _ in range(n):
        for item in buf.sample(12, rng):
            counts[item[0]] += 1
    total = 12 * n
    assert counts["g0"] / total == pytest.approx(0.5, abs=0.02)
    assert counts["g1"] / total == pytest.approx(1 / 6, abs=0.02)
    assert counts["g2"] / total == pytest.approx(1 / 3, abs=0.02)


def test_batch_arrays_shapes(sp):
    game, ev, scfg = sp
    rng = np.random.default_rng(7)
    res = selfplay_game(game, ev, scfg, "maple", rng)
    batch = batch_arrays(game, res.records[:4], rng)
    assert batch["state"].shape == (4, 6, 3, 3)
    assert batch["anchor"].shape == (4, 18, 3, 3)
    assert batch["pi"].shape == (4, 9)
    assert batch["triplet_mask"].dtype == bool


def _mini_cfg(**kw):
    base = dict(iterations=2, games_per_iter=3, steps_per_iter=4, batch=8,
                buffer_games=20, seed=11, workers=1)
    base.update(kw)
    return TrainConfig(**base)


def test_run_training_outputs(tmp_path, sp):
    game, _, scfg = sp
    ncfg = net_config_for(game, blocks=1, filters=8)
    out = tmp_path / "run"
    state = run_training(game, ncfg, scfg, "maple", _mini_cfg(), out)
    metrics = (out / "metrics.txt").read_text().splitlines()
    assert len(metrics) == 2
    for line in metrics:
        keys = [kv.split("=")[0] for kv in line.split()]
        assert keys == ["iter", "games", "steps", "loss", "v_loss", "p_loss",
                        "tri_loss", "l2", "buf", "avg_len",
                        "pv_evals_per_move"]
        vals = dict(kv.split("=") for kv in line.split())
        total = float(vals["loss"])
        parts = sum(float(vals[k]) for k in ("v_loss", "p_loss", "tri_loss",
                                             "l2"))
        assert total == pytest.approx(parts, abs=1e-6)
    assert (out / "ckpt_0.maplenet").exists()
    assert (out / "ckpt_8.maplenet").exists()


def test_run_training_deterministic(tmp_path, sp):
    game, _, scfg = sp
    ncfg = net_config_for(game, blocks=1, filters=8)
    texts = []
    for name in ("a", "b"):
        out = tmp_path / name
        run_training(game, ncfg, scfg, "maple", _mini_cfg(), out)
        texts.append((out / "metrics.txt").read_bytes())
    assert texts[0] == texts[1]


def test_run_training_resume_matches_straight_run(tmp_path, sp):
    game, _, scfg = sp
    ncfg = net_config_for(game, blocks=1, filters=8)
    full = tmp_path / "full"
    run_training(game, ncfg, scfg, "maple", _mini_cfg(iterations=3), full)
    half = tmp_path / "half"
    run_training(game, ncfg, scfg, "maple", _mini_cfg(iterations=2), half)
    # resume to the third iteration
    run_training(game, ncfg, scfg, "maple", _mini_cfg(iterations=3), half)
    assert (half / "metrics.txt").read_bytes() == \
        (full / "metrics.txt").read_bytes()
    p_full, _, _, _ = load_checkpoint(full / "ckpt_12.maplenet")
    p_half, _, _, _ = load_checkpoint(half / "ckpt_12.maplenet")
    for name in p_full:
        assert (p_full[name] == p_half[name]).all()
