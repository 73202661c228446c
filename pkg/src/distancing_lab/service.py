"""Live multiplayer service: websocket sessions over the state machine.

Each session owns an event queue and a consumer task, so its machine sees
one event at a time in arrival order.  Log lines are appended to disk
before the outbound messages of the same transition are sent.  Timers are
plain asyncio sleeps scaled by ``timer_scale`` (0 fires them immediately,
which drives simulated-time tests through the same code path).

Humans join over ``/ws``; bot seats are filled at session creation from
the configured policies.  ``GET /health`` reports session counts.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import logging
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .machine import (
    BROADCAST,
    ClientDisconnected,
    ClientMessage,
    Phase,
    SessionMachine,
    StepResult,
    TimerFired,
    TimerRequest,
)
from .policies import AgentPolicy
from .protocol import error_message
from .simulation import SessionConfig

log = logging.getLogger("distancing_lab.service")


@dataclass
class ServiceConfig:
    session: SessionConfig = field(default_factory=SessionConfig)
    bot_policies: list[AgentPolicy] = field(default_factory=list)
    seed: int = 0
    log_dir: Path | None = None
    timer_scale: float = 1.0
    session_prefix: str = "live"

    def __post_init__(self) -> None:
        seats = self.session.network().node_count
        if len(self.bot_policies) > seats:
            raise ValueError(
                f"{len(self.bot_policies)} bot policies for {seats} seats"
            )
        if self.timer_scale < 0:
            raise ValueError("timer_scale must be >= 0")
        if self.log_dir is not None:
            self.log_dir = Path(self.log_dir)


class ServerSession:
    def __init__(self, config: ServiceConfig, index: int):
        self.session_id = f"{config.session_prefix}-{index}"
        self.machine = SessionMachine(
            config.session,
            seed=config.seed + index,
            session_id=self.session_id,
            bot_policies=config.bot_policies,
        )
        self.timer_scale = config.timer_scale
        self.queue: asyncio.Queue = asyncio.Queue()
        self.connections: dict[str, WebSocket] = {}
        self._timer_task: asyncio.Task | None = None
        self._consumer: asyncio.Task | None = None
        self._log_path = (
            config.log_dir / f"{self.session_id}.jsonl"
            if config.log_dir is not None
            else None
        )
        if self._log_path is not None:
            self._log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_path.write_text("")

    @property
    def phase(self) -> Phase:
        return self.machine.phase

    def has_free_human_seat(self) -> bool:
        return self.machine.phase is Phase.LOBBY and any(
            not s.is_bot and s.conn_id is None and not s.name
            for s in self.machine.seats
        )

    async def start(self) -> None:
        self._consumer = asyncio.create_task(self._consume())
        await self._apply(self.machine.start())

    def submit(self, event) -> None:
        self.queue.put_nowait(event)

    async def _consume(self) -> None:
        while True:
            event = await self.queue.get()
            try:
                step = self.machine.advance(event)
            except Exception:
                log.exception("session %s: transition failed", self.session_id)
                continue
            await self._apply(step)

    async def _apply(self, step: StepResult) -> None:
        self._persist(step.log_lines)
        for target, payload in step.outbound:
            await self._send(target, payload)
        self._schedule(step.timer)

    def _persist(self, lines: list[str]) -> None:
        if self._log_path is None or not lines:
            return
        with self._log_path.open("a") as fh:
            for line in lines:
                fh.write(line + "\n")

    async def _send(self, target: str, payload: dict) -> None:
        sockets = (
            list(self.connections.items())
            if target == BROADCAST
            else [(target, self.connections.get(target))]
        )
        for conn_id, ws in sockets:
            if ws is None:
                continue
            try:
                await ws.send_text(json.dumps(payload))
            except Exception:
                self.connections.pop(conn_id, None)

    def _schedule(self, request: TimerRequest | None) -> None:
        if request is None:
            return
        if self._timer_task is not None:
            self._timer_task.cancel()
        if self.timer_scale == 0:
            self.submit(TimerFired(request.timer_id))
            return

        async def fire() -> None:
            await asyncio.sleep(request.seconds * self.timer_scale)
            self.submit(TimerFired(request.timer_id))

        self._timer_task = asyncio.create_task(fire())

    def close(self) -> None:
        for task in (self._timer_task, self._consumer):
            if task is not None:
                task.cancel()


class SessionManager:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.sessions: list[ServerSession] = []
        self._conn_counter = itertools.count(1)

    def new_conn_id(self) -> str:
        return f"c{next(self._conn_counter)}"

    async def session_for_join(self) -> ServerSession:
        for session in self.sessions:
            if session.has_free_human_seat():
                return session
        session = ServerSession(self.config, len(self.sessions))
        self.sessions.append(session)
        await session.start()
        return session

    async def spawn_session(self) -> ServerSession:
        session = ServerSession(self.config, len(self.sessions))
        self.sessions.append(session)
        await session.start()
        return session

    def counts(self) -> dict:
        finished = sum(
            1 for s in self.sessions if s.phase is Phase.FINISHED
        )
        return {
            "status": "ok",
            "open_sessions": len(self.sessions) - finished,
            "finished_sessions": finished,
        }

    def close(self) -> None:
        for session in self.sessions:
            session.close()


def create_app(config: ServiceConfig) -> FastAPI:
    manager = SessionManager(config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.close()

    app = FastAPI(lifespan=lifespan)
    app.state.manager = manager

    @app.get("/health")
    def health() -> dict:
        return manager.counts()

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        conn_id = manager.new_conn_id()
        session: ServerSession | None = None
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    payload = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(
                        json.dumps(
                            error_message("malformed", "frame is not JSON")
                        )
                    )
                    continue
                if session is None:
                    if (
                        not isinstance(payload, dict)
                        or payload.get("type") != "join"
                    ):
                        await ws.send_text(
                            json.dumps(
                                error_message("not_joined", "join first")
                            )
                        )
                        continue
                    session = await manager.session_for_join()
                    session.connections[conn_id] = ws
                session.submit(ClientMessage(conn_id, payload))
        except WebSocketDisconnect:
            if session is not None:
                session.connections.pop(conn_id, None)
                session.submit(ClientDisconnected(conn_id))

    return app


def serve(host: str, port: int, config: ServiceConfig) -> None:
    """Run the service until interrupted; raises on invalid config."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="info")
