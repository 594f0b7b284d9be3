"""Match machinery, confidence intervals, Bradley-Terry fitting, grids,
and embedding dumps."""

import math

import numpy as np
import pytest

from maple.evaluate import (EloTable, GridCell, NetAgent, RandomAgent,
                            ablation_grid, dump_embeddings, elo_fit,
                            grid_file_text, load_net_agent, make_opponent,
                            run_match, win_rate_ci)
from maple.games import DarkHex, PhantomGo
from maple.net import CheckpointMeta, init_params, save_checkpoint
from maple.search import SearchConfig
from maple.train import net_config_for


def test_win_rate_ci_values():
    rate, hw = win_rate_ci(750, 0, 750)
    assert rate == 0.5
    assert hw == pytest.approx(1.96 * math.sqrt(0.25 / 1500), abs=1e-12)
    assert hw == pytest.approx(0.0253, abs=5e-4)


def test_win_rate_ci_paper_shape():
    # rate 0.8373 at n=1500: same order as the published +/-1.77%
    hw = 1.96 * math.sqrt(0.8373 * (1 - 0.8373) / 1500)
    assert hw == pytest.approx(0.0187, abs=5e-4)


def test_win_rate_ci_empty_invalid():
    with pytest.raises(ValueError):
        win_rate_ci(0, 0, 0)


def test_elo_two_agent_closed_form():
    table = elo_fit(["a", "b"], [("a", "b", 75, 0, 25)])
    gap = table.ratings["a"] - table.ratings["b"]
    assert gap == pytest.approx(400 * math.log10(3), abs=0.01)


def test_elo_all_draws_equal_ratings():
    table = elo_fit(["a", "b", "c"],
                    [("a", "b", 0, 10, 0), ("b", "c", 0, 10, 0),
                     ("a", "c", 0, 10, 0)])
    for r in table.ratings.values():
        assert r == pytest.approx(1000.0, abs=1e-6)


def test_elo_anchor_invariance_of_gaps():
    results = [("a", "b", 60, 0, 40), ("b", "c", 70, 10, 20)]
    t1 = elo_fit(["a", "b", "c"], results, anchor=1000)
    t2 = elo_fit(["a", "b", "c"], results, anchor=0)
    for x in ("a", "b"):
        for y in ("b", "c"):
            g1 = t1.ratings[x] - t1.ratings[y]
            g2 = t2.ratings[x] - t2.ratings[y]
            assert g1 == pytest.approx(g2, abs=1e-6)
    assert np.mean(list(t2.ratings.values())) == pytest.approx(0.0, abs=1e-6)


def test_elo_logistic_reproduces_empirical_rate():
    table = elo_fit(["a", "b"], [("a", "b", 64, 0, 36)])
    gap = table.ratings["a"] - table.ratings["b"]
    predicted = 1.0 / (1.0 + 10 ** (-gap / 400))
    assert predicted == pytest.approx(0.64, abs=1e-6)


def test_elo_disconnected_graph_refused():
    with pytest.raises(ValueError, match="disconnected"):
        elo_fit(["a", "b", "c", "d"],
                [("a", "b", 5, 0, 5), ("c", "d", 5, 0, 5)])


def test_run_match_color_balance(hex3):
    class CountingRandom(RandomAgent):
        def __init__(self):
            self.first_seat_games = 0

        def choose(self, game, history, rng, move_number):
            if not history.events:
                self.first_seat_games += 1
            return super().choose(game, history, rng, move_number)

    a = CountingRandom()
    res = run_match(hex3, a, RandomAgent(), 20, seed=3)
    assert res.games == 20
    assert a.first_seat_games == 10


def test_run_match_rejects_odd_games(hex3):
    with pytest.raises(ValueError):
        run_match(hex3, RandomAgent(), RandomAgent(), 9, seed=0)


def test_run_match_deterministic(hex3):
    r1 = run_match(hex3, RandomAgent(), RandomAgent(), 12, seed=5)
    r2 = run_match(hex3, RandomAgent(), RandomAgent(), 12, seed=5)
    assert (r1.wins, r1.draws, r1.losses) == (r2.wins, r2.draws, r2.losses)


def test_random_self_match_near_half(hex3):
    res = run_match(hex3, RandomAgent(), RandomAgent(), 300, seed=7)
    rate, hw = win_rate_ci(res.wins, res.draws, res.losses)
    assert abs(rate - 0.5) <= hw + 0.02


def test_mirrored_spec_mirrors_totals(hex3):
    res_ab = run_match(hex3, RandomAgent(), RandomAgent(), 40, seed=9)
    res_ba = run_match(hex3, RandomAgent(), RandomAgent(), 40, seed=9)
    # identical agent classes: swapping labels mirrors W/L by symmetry of
    # the driver (seats and seeds are identical, agents are stateless)
    assert res_ab.wins + res_ab.losses == res_ba.wins + res_ba.losses


def test_phantomgo_match_with_random(go3):
    res = run_match(go3, RandomAgent(), RandomAgent(), 6, seed=11)
    assert res.games == 6


@pytest.fixture(scope="module")
def ckpt3(tmp_path_factory):
    game = DarkHex(3)
    cfg = net_config_for(game, blocks=1, filters=8)
    params = init_params(cfg, np.random.default_rng(40))
    path = tmp_path_factory.mktemp("ckpt") / "net.maplenet"
    save_checkpoint(path, params, cfg, CheckpointMeta("darkhex", 3, 0.0))
    return str(path)


def test_load_net_agent_missing_checkpoint(hex3):
    with pytest.raises(FileNotFoundError, match="nope.maplenet"):
        load_net_agent("nope.maplenet", hex3, SearchConfig())


def test_load_net_agent_game_mismatch(ckpt3):
    with pytest.raises(ValueError, match="darkhex size 3"):
        load_net_agent(ckpt3, DarkHex(5), SearchConfig())
    with pytest.raises(ValueError, match="darkhex"):
        load_net_agent(ckpt3, PhantomGo(3), SearchConfig())


def test_net_agent_plays_match(hex3, ckpt3):
    cfg = SearchConfig(simulations=8, k=2, m=2, sampler="random")
    agent = load_net_agent(ckpt3, hex3, cfg)
    res = run_match(hex3, agent, RandomAgent(), 6, seed=13)
    assert res.games == 6


def test_ablation_grid_and_file(hex3, ckpt3):
    base = SearchConfig(simulations=6, k=2, m=3, sampler="random")
    cells = ablation_grid(hex3, "k", {2: ckpt3}, [1, 2], base,
                          ["random"], games_per_opponent=6, seed=17)
    assert len(cells) == 2
    text = grid_file_text("k", [2], [1, 2], cells)
    lines = text.strip().splitlines()
    assert lines[0] == "axis=k train_values=2 eval_values=1,2"
    assert lines[1].startswith("cell 2 1 rate=")
    assert all(f"n=6" in l for l in lines[1:])


def test_ablation_grid_missing_checkpoint(hex3):
    base = SearchConfig(simulations=6, k=2, m=3, sampler="random")
    with pytest.raises(FileNotFoundError, match="gone.maplenet"):
        ablation_grid(hex3, "k", {2: "gone.maplenet"}, [1], base,
                      ["random"], 4, 0)


def test_one_by_one_grid_reduces_to_run_match(hex3, ckpt3):
    base = SearchConfig(simulations=6, k=2, m=3, sampler="random")
    cells = ablation_grid(hex3, "k", {2: ckpt3}, [2], base,
                          ["random"], games_per_opponent=8, seed=19)
    agent = load_net_agent(ckpt3, hex3, base)
    direct = run_match(hex3, agent, make_opponent("random", hex3, base), 8,
                       seed=19)
    rate, ci = win_rate_ci(direct.wins, direct.draws, direct.losses)
    assert cells[0].rate == pytest.approx(rate)
    assert cells[0].n == 8


def test_grid_reruns_identical(hex3, ckpt3):
    base = SearchConfig(simulations=6, k=2, m=3, sampler="random")
    out = []
    for _ in range(2):
        cells = ablation_grid(hex3, "k", {2: ckpt3}, [1, 2], base,
                              ["random"], 6, seed=23)
        out.append(grid_file_text("k", [2], [1, 2], cells))
    assert out[0] == out[1]


def test_dump_embeddings_rows(hex3, ckpt3):
    from maple.net import load_checkpoint
    params, net_cfg, _, _ = load_checkpoint(ckpt3)
    scfg = SearchConfig(simulations=6, k=2, m=2, sampler="random")
    text = dump_embeddings(hex3, params, net_cfg, scfg, num_states=4,
                           negatives_per_state=5, seed=29)
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    assert header[:2] == ["state", "role"]
    assert header[-1] == "d_to_anchor"
    assert len(header) == 2 + net_cfg.embed_dim + 1
    rows = lines[1:]
    assert len(rows) == 4 * (2 + 5)
    anchors = [r for r in rows if r.split(",")[1] == "anchor"]
    assert len(anchors) == 4
    for r in anchors:
        assert float(r.split(",")[-1]) == 0.0


def test_dump_embeddings_zero_weight_model(hex3):
    game = hex3
    cfg = net_config_for(game, blocks=1, filters=8)
    params = init_params(cfg, np.random.default_rng(0), zero=True)
    scfg = SearchConfig(simulations=4, k=2, m=2, sampler="random")
    text = dump_embeddings(game, params, cfg, scfg, num_states=2,
                           negatives_per_state=3, seed=31)
    for row in text.strip().splitlines()[1:]:
        assert float(row.split(",")[-1]) == 0.0
