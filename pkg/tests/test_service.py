import json
import time

import pytest
from starlette.testclient import TestClient

from distancing_lab.machine import Phase, replay_log
from distancing_lab.policies import logit_response, static_equilibrium
from distancing_lab.service import ServiceConfig, create_app
from distancing_lab.simulation import SessionConfig, cents

FAST_SESSION = SessionConfig(
    network_name="star",
    alpha=0.65,
    intervention="fine",
    decision_seconds=30.0,  # humans never time out in these tests
    review_seconds=0.005,
    briefing_seconds=0.005,
)


def make_app(tmp_path, **overrides):
    config = ServiceConfig(
        session=overrides.pop("session", FAST_SESSION),
        bot_policies=overrides.pop("bot_policies", [static_equilibrium()] * 4),
        seed=overrides.pop("seed", 42),
        log_dir=tmp_path,
        **overrides,
    )
    return create_app(config)


def drive_session(ws):
    """Join and play Yes every round; returns results and the end message."""
    ws.send_text(json.dumps({"type": "join", "name": "human"}))
    results = []
    end = None
    while end is None:
        message = json.loads(ws.receive_text())
        kind = message["type"]
        if kind == "round_start":
            ws.send_text(
                json.dumps({"type": "submit_decision", "distance": True})
            )
        elif kind == "round_result":
            results.append(message)
        elif kind == "session_end":
            end = message
        elif kind == "error":
            raise AssertionError(f"unexpected error: {message}")
    return results, end


def test_health_endpoint(tmp_path):
    with TestClient(make_app(tmp_path)) as client:
        body = client.get("/health").json()
        assert body == {
            "status": "ok",
            "open_sessions": 0,
            "finished_sessions": 0,
        }


def test_invalid_config_refused(tmp_path):
    with pytest.raises(ValueError):
        SessionConfig(alpha=1.5)
    with pytest.raises(ValueError):
        ServiceConfig(
            session=FAST_SESSION,
            bot_policies=[static_equilibrium()] * 9,
        )


def test_full_session_with_one_human_and_bot_fill(tmp_path):
    app = make_app(tmp_path)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            results, end = drive_session(ws)
        assert len(results) == 40
        # a distancing participant scores 65 or -35 every round
        assert {r["points"] for r in results} <= {65.0, -35.0}
        payment = end["payment"]
        assert payment["total"] == cents(
            payment["fee"] + sum(payment["part_bonus"])
        )
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline:
            if client.get("/health").json()["finished_sessions"] == 1:
                break
            time.sleep(0.01)
        assert client.get("/health").json()["finished_sessions"] == 1

    log_path = tmp_path / "live-0.jsonl"
    rebuilt = replay_log(log_path.read_text())
    assert rebuilt.phase is Phase.FINISHED
    assert (
        rebuilt.log.payment_event()["seats"][0]["total"] == payment["total"]
    )


def test_two_sessions_do_not_interleave(tmp_path):
    app = make_app(tmp_path)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws1:
            ws1.send_text(json.dumps({"type": "join", "name": "first"}))
            first_msg = json.loads(ws1.receive_text())
            assert first_msg["type"] == "joined"
            # session live-0 is now full (4 bots + this human); a second
            # client must land in a fresh session while live-0 is active
            with client.websocket_connect("/ws") as ws2:
                results2, end2 = drive_session(ws2)
            # finish the first session afterwards
            results1 = []
            end1 = None
            ws1.send_text(
                json.dumps({"type": "submit_decision", "distance": False})
            )
            while end1 is None:
                message = json.loads(ws1.receive_text())
                if message["type"] == "round_start":
                    ws1.send_text(
                        json.dumps(
                            {"type": "submit_decision", "distance": False}
                        )
                    )
                elif message["type"] == "round_result":
                    results1.append(message)
                elif message["type"] == "session_end":
                    end1 = message
        manager = app.state.manager
        assert len(manager.sessions) == 2
        ids = [s.session_id for s in manager.sessions]
        assert ids == ["live-0", "live-1"]

    log0 = (tmp_path / "live-0.jsonl").read_text()
    log1 = (tmp_path / "live-1.jsonl").read_text()
    assert '"session_id":"live-0"' in log0.splitlines()[0]
    assert '"session_id":"live-1"' in log1.splitlines()[0]
    for text in (log0, log1):
        machine = replay_log(text)
        assert machine.phase is Phase.FINISHED
        assert len(machine.log.round_records()) == 40
    assert len(results2) == 40


def test_malformed_frame_gets_error_reply(tmp_path):
    with TestClient(make_app(tmp_path)) as client:
        with client.websocket_connect("/ws") as ws:
            ws.send_text("{nope")
            reply = json.loads(ws.receive_text())
            assert reply["type"] == "error"
            assert reply["code"] == "malformed"
            ws.send_text(
                json.dumps({"type": "submit_decision", "distance": True})
            )
            reply = json.loads(ws.receive_text())
            assert reply["code"] == "not_joined"


def test_serve_over_real_sockets(tmp_path):
    # full network path: uvicorn server, websockets client, one session
    import asyncio
    import threading

    import uvicorn
    import websockets

    config = ServiceConfig(
        session=FAST_SESSION,
        bot_policies=[static_equilibrium()] * 4,
        seed=5,
        log_dir=tmp_path,
    )
    app = create_app(config)
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        assert time.monotonic() < deadline, "server did not start"
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]

    async def drive():
        results = 0
        async with websockets.connect(
            f"ws://127.0.0.1:{port}/ws", open_timeout=5
        ) as ws:
            await ws.send(json.dumps({"type": "join", "name": "e2e"}))
            while True:
                message = json.loads(
                    await asyncio.wait_for(ws.recv(), timeout=10)
                )
                if message["type"] == "round_start":
                    await ws.send(
                        json.dumps(
                            {"type": "submit_decision", "distance": True}
                        )
                    )
                elif message["type"] == "round_result":
                    results += 1
                elif message["type"] == "session_end":
                    return results, message

        raise AssertionError("session never ended")

    try:
        results, end = asyncio.run(drive())
    finally:
        server.should_exit = True
        thread.join(timeout=10)
    assert results == 40
    assert end["payment"]["total"] > 0
    machine = replay_log((tmp_path / "live-0.jsonl").read_text())
    assert machine.phase is Phase.FINISHED


def test_persisted_log_is_deterministic_for_bot_sessions(tmp_path):
    # same seed, two service instances: identical bot-only session logs
    texts = []
    for run in range(2):
        run_dir = tmp_path / f"run{run}"
        config = ServiceConfig(
            session=FAST_SESSION,
            bot_policies=[logit_response(0.4, belief=0.3)] * 5,
            seed=7,
            log_dir=run_dir,
            timer_scale=0.0,
        )
        app = create_app(config)
        with TestClient(app) as client:
            client.portal.call(app.state.manager.spawn_session)
            deadline = time.monotonic() + 5
            while time.monotonic() < deadline:
                counts = client.get("/health").json()
                if counts["finished_sessions"] == 1:
                    break
                time.sleep(0.01)
            assert client.get("/health").json()["finished_sessions"] == 1
        texts.append((run_dir / "live-0.jsonl").read_text())
    assert texts[0] == texts[1]
    replay_log(texts[0])
