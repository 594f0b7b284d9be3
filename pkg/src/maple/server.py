"""HTTP match service exposing fog-of-war game views.

Every response about a game is computed from the human player's
observation history (plus public facts: whose turn it is, the final
result), never from the hidden true board. The agent's rejected probes are
private to the agent; the `attempts` array returned by /agent-move carries
only the public projection of its turn (hidden completing move, announced
pass, capture reveals).

In-memory only: sessions are capped and idle games are evicted after 24
hours. Intended for desk-scale interactive play, not production hosting.
"""

from __future__ import annotations

import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .config import AppConfig
from .evaluate import make_opponent
from .games.referee import Referee, make_game
from .games.types import PASS, Player
from .search import SearchConfig

IDLE_EVICT_SECONDS = 24 * 3600


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


@dataclass
class GameSession:
    sid: str
    referee: Referee
    human_seat: Player
    agent: object
    rng: np.random.Generator
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.time)
    move_number: int = 0
    forfeited_by: Player | None = None

    @property
    def game(self):
        return self.referee.game

    def outcome(self):
        if self.forfeited_by is not None:
            from .games.types import GameOutcome
            return GameOutcome(self.forfeited_by.opponent)
        return self.referee.outcome()


def view_payload(session: GameSession) -> dict:
    hist = session.referee.histories[session.human_seat]
    view = {
        "game": session.game.name,
        "size": session.game.size,
        "human_seat": int(session.human_seat),
        "own_stones": sorted(hist.own_stones),
        "known_opponent_stones": sorted(hist.known_opponent_stones),
        "tried_cells": sorted(hist.tried_cells),
        "revealed_captures": [[c, int(owner)]
                              for c, owner in hist.revealed_captures],
        "to_move": int(session.referee.to_play),
        "move_count": session.referee.turn,
        "last_feedback": hist.last_feedback.label
        if hist.last_feedback is not None else None,
    }
    out = session.outcome()
    if out is not None:
        view["result"] = {
            "winner": None if out.winner is None else int(out.winner),
            "margin": out.margin,
        }
    return view


def _public_projection(events) -> list[dict]:
    out = []
    for ev in events:
        out.append({
            "cell": "pass" if ev.action == PASS else ev.action,
            "feedback": "legal",
            "captured": [c for c, _ in ev.revealed],
        })
    return out


class MatchServer:
    def __init__(self, cfg: AppConfig, default_ckpt: str | None = None,
                 static_dir: str | None = None):
        self.cfg = cfg
        self.default_ckpt = default_ckpt
        self.max_games = cfg.values["serve.max_games"]
        self.sessions: dict[str, GameSession] = {}
        self.registry_lock = threading.Lock()
        self.static_dir = Path(static_dir) if static_dir else None

    # --- session management -------------------------------------------------

    def _evict_idle(self):
        now = time.time()
        stale = [sid for sid, s in self.sessions.items()
                 if now - s.last_access > IDLE_EVICT_SECONDS]
        for sid in stale:
            del self.sessions[sid]

    def create_game(self, body: dict) -> dict:
        game_name = body.get("game", self.cfg.values["game.name"])
        size = body.get("size", self.cfg.values["game.size"])
        komi = body.get("komi", self.cfg.values["game.komi"])
        human_seat = body.get("human_seat", 0)
        if game_name not in ("darkhex", "phantomgo"):
            raise ApiError(400, f"unknown game {game_name!r}")
        if human_seat not in (0, 1):
            raise ApiError(400, "human_seat must be 0 or 1")
        if not isinstance(size, int) or size < 1 or size > 19:
            raise ApiError(400, "size must be an integer in 1..19")
        game = make_game(game_name, size, komi)

        overrides = body.get("search", {})
        if not isinstance(overrides, dict):
            raise ApiError(400, "search must be an object")
        base = self.cfg.search_config()
        try:
            search_cfg = SearchConfig(
                simulations=overrides.get("simulations", base.simulations),
                k=overrides.get("k", base.k),
                m=overrides.get("m", base.m),
                sampler=overrides.get("sampler", base.sampler),
                c_puct=overrides.get("c_puct", base.c_puct),
                noise_eps=0.0,
                temperature_moves=overrides.get("temperature_moves", 0),
            )
        except (ValueError, TypeError) as exc:
            raise ApiError(400, f"bad search overrides: {exc}") from exc

        spec = body.get("agent_ckpt") or body.get("agent") \
            or self.default_ckpt or "rollout:100"
        try:
            agent = make_opponent(str(spec), game, search_cfg)
        except FileNotFoundError as exc:
            raise ApiError(400, str(exc)) from exc
        except ValueError as exc:
            raise ApiError(400, str(exc)) from exc

        seed = body.get("seed")
        rng = np.random.default_rng(seed)
        sid = uuid.uuid4().hex[:12]
        session = GameSession(sid, Referee(game, seed=seed),
                              Player(human_seat), agent, rng)
        with self.registry_lock:
            self._evict_idle()
            if len(self.sessions) >= self.max_games:
                raise ApiError(409, "server is at its game limit")
            self.sessions[sid] = session
        return {"game_id": sid, "view": view_payload(session)}

    def _session(self, sid: str) -> GameSession:
        with self.registry_lock:
            session = self.sessions.get(sid)
        if session is None:
            raise ApiError(404, f"unknown game {sid!r}")
        session.last_access = time.time()
        return session

    # --- endpoint bodies ------------------------------------------------------

    def view(self, sid: str) -> dict:
        session = self._session(sid)
        with session.lock:
            return view_payload(session)

    def human_attempt(self, sid: str, body: dict) -> dict:
        session = self._session(sid)
        with session.lock:
            if session.outcome() is not None:
                raise ApiError(409, "game is over")
            if session.referee.to_play != session.human_seat:
                raise ApiError(409, "not your turn")
            raw = body.get("cell")
            game = session.game
            if raw == "pass":
                if not game.has_pass:
                    raise ApiError(400, "this game has no pass")
                action = PASS
            elif isinstance(raw, int) and 0 <= raw < game.area:
                action = raw
            else:
                raise ApiError(400, f"cell must be 0..{game.area - 1}"
                                    + (" or \"pass\"" if game.has_pass else ""))
            feedback = session.referee.attempt(session.human_seat, action)
            if feedback.is_legal:
                session.move_number += 1
            return {"feedback": feedback.kind.label,
                    "captured": list(feedback.captured),
                    "view": view_payload(session)}

    def agent_move(self, sid: str) -> dict:
        session = self._session(sid)
        with session.lock:
            if session.outcome() is not None:
                raise ApiError(409, "game is over")
            agent_seat = session.human_seat.opponent
            if session.referee.to_play != agent_seat:
                raise ApiError(409, "not the agent's turn")
            game = session.game
            hist_before = session.referee.histories[session.human_seat]
            n_before = len(hist_before.events)
            for _ in range(game.area + 1):
                action = session.agent.choose(
                    game, session.referee.histories[agent_seat], session.rng,
                    session.move_number)
                feedback = session.referee.attempt(agent_seat, action)
                if feedback.is_legal:
                    break
            else:
                session.forfeited_by = agent_seat
            session.move_number += 1
            new_events = session.referee.histories[session.human_seat] \
                .events[n_before:]
            return {"attempts": _public_projection(new_events),
                    "view": view_payload(session)}

    def record(self, sid: str) -> str:
        session = self._session(sid)
        with session.lock:
            if session.outcome() is None:
                raise ApiError(409, "game still in progress")
            return session.referee.record_text()

    def delete(self, sid: str) -> dict:
        with self.registry_lock:
            if sid not in self.sessions:
                raise ApiError(404, f"unknown game {sid!r}")
            del self.sessions[sid]
        return {"deleted": True}


# --- HTTP plumbing ------------------------------------------------------------

_ROUTES = [
    ("POST", re.compile(r"^/games$"), "create"),
    ("GET", re.compile(r"^/games/([0-9a-f]+)/view$"), "view"),
    ("POST", re.compile(r"^/games/([0-9a-f]+)/attempt$"), "attempt"),
    ("POST", re.compile(r"^/games/([0-9a-f]+)/agent-move$"), "agent_move"),
    ("GET", re.compile(r"^/games/([0-9a-f]+)/record$"), "record"),
    ("DELETE", re.compile(r"^/games/([0-9a-f]+)$"), "delete"),
]

_STATIC_TYPES = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".map": "application/json"}


def make_handler(server: MatchServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # quiet by default
            pass

        def _send(self, status: int, payload, content_type="application/json"):
            data = payload if isinstance(payload, bytes) else (
                payload.encode() if isinstance(payload, str)
                else json.dumps(payload).encode())
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods",
                             "GET, POST, DELETE, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()
            self.wfile.write(data)

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return {}
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ApiError(400, f"malformed JSON body: {exc}") from exc
            if not isinstance(body, dict):
                raise ApiError(400, "body must be a JSON object")
            return body

        def _dispatch(self, method: str):
            path = self.path.split("?", 1)[0]
            try:
                for verb, pattern, name in _ROUTES:
                    if verb != method:
                        continue
                    match = pattern.match(path)
                    if match:
                        self._handle(name, match)
                        return
                if method == "GET" and self._try_static(path):
                    return
                raise ApiError(404, f"no such endpoint: {method} {path}")
            except ApiError as exc:
                self._send(exc.status, {"error": str(exc)})
            except Exception as exc:   # pragma: no cover - defensive
                self._send(500, {"error": f"internal error: {exc}"})

        def _handle(self, name: str, match):
            if name == "create":
                self._send(200, server.create_game(self._body()))
            elif name == "view":
                self._send(200, server.view(match.group(1)))
            elif name == "attempt":
                self._send(200, server.human_attempt(match.group(1),
                                                     self._body()))
            elif name == "agent_move":
                self._send(200, server.agent_move(match.group(1)))
            elif name == "record":
                self._send(200, server.record(match.group(1)),
                           content_type="text/plain; charset=utf-8")
            elif name == "delete":
                self._send(200, server.delete(match.group(1)))

        def _try_static(self, path: str) -> bool:
            root = server.static_dir
            if root is None:
                return False
            rel = "index.html" if path == "/" else path.lstrip("/")
            target = (root / rel).resolve()
            if not str(target).startswith(str(root.resolve())) \
                    or not target.is_file():
                return False
            ctype = _STATIC_TYPES.get(target.suffix, "application/octet-stream")
            self._send(200, target.read_bytes(), content_type=ctype)
            return True

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def do_DELETE(self):
            self._dispatch("DELETE")

        def do_OPTIONS(self):
            self._send(204, b"")

    return Handler


def start_server(cfg: AppConfig, port: int = 0,
                 default_ckpt: str | None = None,
                 static_dir: str | None = None):
    """Bind and start serving on a background thread; returns
    (http_server, match_server, port)."""
    match_server = MatchServer(cfg, default_ckpt, static_dir)
    httpd = ThreadingHTTPServer(("127.0.0.1", port), make_handler(match_server))
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    return httpd, match_server, httpd.server_address[1]


def serve(cfg: AppConfig, port: int, default_ckpt: str | None = None):
    static = Path("frontend/dist")
    match_server = MatchServer(cfg, default_ckpt,
                               str(static) if static.is_dir() else None)
    httpd = ThreadingHTTPServer(("0.0.0.0", port), make_handler(match_server))
    print(f"serving on http://0.0.0.0:{port} "
          f"(agent default: {default_ckpt or 'rollout:100'})", flush=True)
    try:
        httpd.serve_forever()
    finally:
        httpd.server_close()
