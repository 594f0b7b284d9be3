"""HTTP match service: endpoint semantics and information hygiene."""

import json

import numpy as np
import pytest
import requests

from maple.config import AppConfig, profile_defaults
from maple.games import Player
from maple.server import start_server


@pytest.fixture(scope="module")
def server():
    cfg = AppConfig(profile_defaults("desk"))
    cfg.values["game.size"] = 3
    cfg.values["serve.max_games"] = 256
    httpd, match_server, port = start_server(cfg)
    yield f"http://127.0.0.1:{port}", match_server
    httpd.shutdown()


def new_game(base, **kw):
    body = {"game": "darkhex", "size": 3, "human_seat": 0,
            "agent": "random", "seed": 1}
    body.update(kw)
    r = requests.post(f"{base}/games", json=body)
    assert r.status_code == 200, r.text
    return r.json()["game_id"]


def test_create_and_view(server):
    base, _ = server
    gid = new_game(base)
    view = requests.get(f"{base}/games/{gid}/view").json()
    assert view["to_move"] == 0
    assert view["own_stones"] == []
    assert view["game"] == "darkhex"
    assert "result" not in view


def test_unknown_game_404(server):
    base, _ = server
    assert requests.get(f"{base}/games/ffffffffffff/view").status_code == 404
    assert requests.delete(f"{base}/games/ffffffffffff").status_code == 404


def test_malformed_bodies_400(server):
    base, _ = server
    gid = new_game(base)
    r = requests.post(f"{base}/games/{gid}/attempt", data="not json",
                      headers={"Content-Type": "application/json"})
    assert r.status_code == 400
    r = requests.post(f"{base}/games/{gid}/attempt", json={"cell": 99})
    assert r.status_code == 400
    r = requests.post(f"{base}/games/{gid}/attempt", json={"cell": "pass"})
    assert r.status_code == 400          # Dark Hex has no pass
    r = requests.post(f"{base}/games", json={"game": "checkers"})
    assert r.status_code == 400


def test_occupied_attempt_enters_tried_cells(server):
    base, match_server = server
    gid = new_game(base, seed=7)
    r = requests.post(f"{base}/games/{gid}/attempt", json={"cell": 4})
    assert r.json()["feedback"] == "legal"
    requests.post(f"{base}/games/{gid}/agent-move")
    # locate the agent's hidden stone through the server's own referee and
    # probe exactly that cell
    world = match_server.sessions[gid].referee.world
    hidden = next(c for c in range(9) if world.cells[c] == 2)
    r = requests.post(f"{base}/games/{gid}/attempt", json={"cell": hidden})
    body = r.json()
    assert body["feedback"] == "occupied"
    assert hidden in body["view"]["tried_cells"]
    assert hidden in body["view"]["known_opponent_stones"]
    assert body["view"]["to_move"] == 0      # human keeps the turn


def test_out_of_turn_409(server):
    base, _ = server
    gid = new_game(base)
    r = requests.post(f"{base}/games/{gid}/agent-move")
    assert r.status_code == 409
    requests.post(f"{base}/games/{gid}/attempt", json={"cell": 0})
    r = requests.post(f"{base}/games/{gid}/attempt", json={"cell": 1})
    assert r.status_code == 409


def test_record_only_after_end_and_delete(server):
    base, _ = server
    gid = new_game(base)
    assert requests.get(f"{base}/games/{gid}/record").status_code == 409
    assert requests.delete(f"{base}/games/{gid}").json() == {"deleted": True}
    assert requests.get(f"{base}/games/{gid}/view").status_code == 404


def test_agent_move_on_finished_game_409(server):
    base, _ = server
    gid = new_game(base, seed=3)
    # drive the human to a quick win down column 0: cells 0,3,6
    for cell in (0, 3, 6):
        r = requests.post(f"{base}/games/{gid}/attempt", json={"cell": cell})
        body = r.json()
        if "result" in body["view"]:
            break
        if body["view"]["to_move"] == 1:
            requests.post(f"{base}/games/{gid}/agent-move")
    view = requests.get(f"{base}/games/{gid}/view").json()
    if "result" not in view:
        # agent stones blocked the column; finish with any legal cells
        for cell in range(9):
            r = requests.post(f"{base}/games/{gid}/attempt", json={"cell": cell})
            if r.status_code != 200:
                continue
            body = r.json()
            if "result" in body["view"]:
                break
            if body["view"]["to_move"] == 1:
                requests.post(f"{base}/games/{gid}/agent-move")
        view = requests.get(f"{base}/games/{gid}/view").json()
    assert "result" in view
    assert requests.post(f"{base}/games/{gid}/agent-move").status_code == 409
    assert requests.post(f"{base}/games/{gid}/attempt",
                         json={"cell": 8}).status_code == 409
    record = requests.get(f"{base}/games/{gid}/record")
    assert record.status_code == 200
    assert record.text.startswith("game=darkhex")


def test_phantomgo_pass_and_agent_projection(server):
    base, _ = server
    gid = new_game(base, game="phantomgo", size=3, seed=5)
    r = requests.post(f"{base}/games/{gid}/attempt", json={"cell": 4})
    assert r.json()["feedback"] == "legal"
    r = requests.post(f"{base}/games/{gid}/agent-move")
    attempts = r.json()["attempts"]
    assert len(attempts) == 1
    assert attempts[0]["feedback"] == "legal"
    assert attempts[0]["cell"] in (None, "pass")   # hidden or announced pass
    r = requests.post(f"{base}/games/{gid}/attempt", json={"cell": "pass"})
    assert r.json()["feedback"] == "legal"


def view_is_function_of_history(view, hist):
    assert sorted(view["own_stones"]) == sorted(hist.own_stones)
    assert sorted(view["known_opponent_stones"]) == \
        sorted(hist.known_opponent_stones)
    assert sorted(view["tried_cells"]) == sorted(hist.tried_cells)
    assert len(view["revealed_captures"]) == len(hist.revealed_captures)


def test_information_hygiene_fuzz(server):
    """Across fuzzed games, no /view payload ever contains an opponent
    stone the human is not entitled to know."""
    base, match_server = server
    rng = np.random.default_rng(17)
    for trial in range(30):
        human_seat = int(rng.integers(2))
        gid = new_game(base, human_seat=human_seat, seed=int(rng.integers(1e6)),
                       agent="random")
        session = match_server.sessions[gid]
        for _ in range(60):
            view = requests.get(f"{base}/games/{gid}/view").json()
            hist = session.referee.histories[Player(human_seat)]
            view_is_function_of_history(view, hist)
            true_opponent_stones = {
                c for c in range(9)
                if session.referee.world.cells[c] == (2 if human_seat == 0 else 1)}
            leaked = set(view["known_opponent_stones"]) - set(hist.known_opponent_stones)
            assert not leaked
            # every reported opponent stone must be justified by history
            assert set(view["known_opponent_stones"]) <= true_opponent_stones
            if "result" in view:
                break
            if view["to_move"] == human_seat:
                candidates = [c for c in range(9)
                              if c not in view["own_stones"]
                              and c not in view["known_opponent_stones"]]
                cell = int(candidates[rng.integers(len(candidates))])
                requests.post(f"{base}/games/{gid}/attempt",
                              json={"cell": cell})
            else:
                requests.post(f"{base}/games/{gid}/agent-move")
        requests.delete(f"{base}/games/{gid}")


def test_concurrent_games_independent(server):
    base, _ = server
    g1 = new_game(base, seed=21)
    g2 = new_game(base, seed=22)
    requests.post(f"{base}/games/{g1}/attempt", json={"cell": 0})
    v2 = requests.get(f"{base}/games/{g2}/view").json()
    assert v2["own_stones"] == []
    requests.delete(f"{base}/games/{g1}")
    requests.delete(f"{base}/games/{g2}")
