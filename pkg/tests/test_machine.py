import json

import pytest

from distancing_lab.machine import (
    ClientDisconnected,
    ClientMessage,
    Phase,
    SessionMachine,
    TimerFired,
    pump_timers,
    replay_log,
    run_bot_session,
)
from distancing_lab.policies import (
    always_distance,
    logit_response,
    never_distance,
    static_equilibrium,
)
from distancing_lab.session_log import Decision
from distancing_lab.simulation import SessionConfig, score_round

CONFIG = SessionConfig(network_name="star", alpha=0.65, intervention="fine")


def join(machine, conn, name=None):
    return machine.advance(
        ClientMessage(conn, {"type": "join", "name": name or conn})
    )


def decide(machine, conn, distance=True):
    return machine.advance(
        ClientMessage(conn, {"type": "submit_decision", "distance": distance})
    )


def fire_timer(machine):
    assert machine.pending_timer is not None
    return machine.advance(TimerFired(machine.pending_timer.timer_id))


def play_session(machine, conns, choose=None):
    """Drive connected humans to completion; returns all steps."""
    steps = []
    guard = 0
    while machine.phase is not Phase.FINISHED:
        guard += 1
        assert guard < 1000, f"stuck in {machine.phase}"
        if machine.phase is Phase.ROUND_DECISION:
            for seat in machine.seats:
                if (
                    not seat.is_bot
                    and not seat.disqualified
                    and seat.seat not in machine.decisions
                    and seat.conn_id is not None
                ):
                    distance = (
                        choose(seat.seat, machine.round_index)
                        if choose
                        else True
                    )
                    steps.append(decide(machine, seat.conn_id, distance))
        if machine.phase is not Phase.FINISHED and machine.pending_timer:
            steps.append(fire_timer(machine))
    return steps


class TestLobby:
    def test_empty_session_logs_header_only(self):
        machine = SessionMachine(CONFIG, seed=1, session_id="t")
        machine.start()
        assert [e["event"] for e in machine.log.events] == ["header"]
        assert machine.phase is Phase.LOBBY

    def test_five_joins_form_group_and_start_round(self):
        machine = SessionMachine(CONFIG, seed=2, session_id="t")
        machine.start()
        steps = [join(machine, f"h{i}") for i in range(5)]
        types_last = [m["type"] for _, m in steps[-1].outbound]
        assert "group_formed" in types_last
        assert machine.phase is Phase.ROUND_DECISION
        round_starts = [
            m
            for _, m in steps[-1].outbound
            if m["type"] == "round_start"
        ]
        assert len(round_starts) == 5
        positions = {m["position"] for m in round_starts}
        assert positions == set(range(5))  # everyone got a distinct node
        for m in round_starts:
            assert m["deadline_seconds"] == CONFIG.decision_seconds
            assert m["params"]["fine"] == 0.0  # baseline part

    def test_join_when_full_is_rejected(self):
        machine = SessionMachine(CONFIG, seed=3, session_id="t")
        machine.start()
        for i in range(5):
            join(machine, f"h{i}")
        step = join(machine, "h5")
        assert step.outbound[0][1]["type"] == "error"
        assert step.outbound[0][1]["code"] == "session_full"

    def test_bots_fill_highest_seats(self):
        machine = SessionMachine(
            CONFIG, seed=4, session_id="t", bot_policies=[never_distance()] * 4
        )
        machine.start()
        assert [s.is_bot for s in machine.seats] == [False, True, True, True, True]


class TestDecisionPhase:
    def make_started(self, seed=5):
        machine = SessionMachine(
            CONFIG, seed=seed, session_id="t", bot_policies=[never_distance()] * 4
        )
        machine.start()
        join(machine, "h0")
        assert machine.phase is Phase.ROUND_DECISION
        return machine

    def test_decision_ack_and_resolution(self):
        machine = self.make_started()
        step = decide(machine, "h0", True)
        kinds = [m["type"] for _, m in step.outbound]
        assert kinds[0] == "decision_ack"
        assert "round_result" in kinds  # human decision completed the set
        assert machine.phase is Phase.ROUND_REVIEW

    def test_duplicate_decision_is_idempotent(self):
        machine = self.make_started()
        decide(machine, "h0", True)
        fire_timer(machine)  # review over, round 2 starts
        assert machine.phase is Phase.ROUND_DECISION
        first = decide(machine, "h0", False)
        # resolution happened; submit again in review phase
        again = decide(machine, "h0", True)
        assert again.outbound[0][1]["type"] == "error"
        assert again.outbound[0][1]["code"] == "wrong_phase"

    def test_no_decision_after_deadline(self):
        machine = self.make_started()
        fire_timer(machine)  # deadline: human becomes a timeout
        assert machine.phase is Phase.ROUND_REVIEW
        step = decide(machine, "h0", True)
        assert step.outbound[0][1]["code"] == "wrong_phase"
        rec = machine.log.round_records()[0]
        assert rec.decisions[0] is Decision.TIMEOUT
        assert rec.points[0] <= -100.0  # timeout penalty applied

    def test_malformed_and_unknown_messages(self):
        machine = self.make_started()
        phase_before = machine.phase
        round_before = machine.round_index
        for payload in (
            "not a dict",
            {"type": "launch_missiles"},
            {"type": "submit_decision", "distance": "yes"},
            {"type": "join"},
        ):
            step = machine.advance(ClientMessage("h0", payload))
            assert step.outbound[0][1]["type"] == "error"
        assert machine.phase is phase_before
        assert machine.round_index == round_before

    def test_stale_timer_ignored(self):
        machine = self.make_started()
        old = machine.pending_timer
        decide(machine, "h0", True)  # resolves; new review timer pending
        step = machine.advance(TimerFired(old.timer_id))
        assert step.outbound == [] and step.log_lines == []
        assert machine.phase is Phase.ROUND_REVIEW


class TestDisqualification:
    def test_three_silent_rounds_disqualify_and_bot_takes_over(self):
        machine = SessionMachine(
            CONFIG, seed=6, session_id="t", bot_policies=[always_distance()] * 4
        )
        machine.start()
        join(machine, "h0")
        steps = []
        pump_timers(machine, steps)  # human never answers
        assert machine.phase is Phase.FINISHED
        dq = [e for e in machine.log.events if e["event"] == "disqualified"]
        assert dq == [{"event": "disqualified", "seat": 0, "round": 3}]
        records = machine.log.round_records()
        assert [r.decisions[0] for r in records[:3]] == [Decision.TIMEOUT] * 3
        # the replacement bot never distances from round 4 on
        assert all(r.decisions[0] is Decision.NO for r in records[3:])
        payment = machine.log.payment_event()
        assert payment["seats"][0]["total"] == 0.0
        assert payment["seats"][1]["total"] > 0.0

    def test_responsive_human_with_bot_fill_reaches_finished(self):
        machine = SessionMachine(
            CONFIG, seed=7, session_id="t", bot_policies=[static_equilibrium()] * 4
        )
        machine.start()
        join(machine, "h0")
        play_session(machine, ["h0"])
        assert machine.phase is Phase.FINISHED
        assert machine.log.is_complete()
        assert len(machine.log.round_records()) == 40


class TestReconnect:
    def test_resume_token_restores_seat(self):
        machine = SessionMachine(
            CONFIG, seed=8, session_id="t", bot_policies=[never_distance()] * 4
        )
        machine.start()
        step = join(machine, "h0")
        token = next(
            m["resume_token"]
            for _, m in step.outbound
            if m["type"] == "joined"
        )
        machine.advance(ClientDisconnected("h0"))
        assert machine.seats[0].conn_id is None
        step = machine.advance(
            ClientMessage(
                "h0-new", {"type": "join", "name": "h0", "resume_token": token}
            )
        )
        kinds = [m["type"] for _, m in step.outbound]
        assert "joined" in kinds and "round_start" in kinds
        assert machine.seats[0].conn_id == "h0-new"
        decide(machine, "h0-new", True)
        assert machine.log.round_records()[0].decisions[0] is Decision.YES

    def test_bad_token_rejected(self):
        machine = SessionMachine(CONFIG, seed=9, session_id="t")
        machine.start()
        step = machine.advance(
            ClientMessage(
                "x", {"type": "join", "name": "x", "resume_token": "nope"}
            )
        )
        assert step.outbound[0][1]["code"] == "bad_token"


class TestDeterminismAndReplay:
    def test_bot_session_is_byte_identical_across_runs(self):
        runs = [
            run_bot_session(CONFIG, [logit_response(0.4, belief=0.3)] * 5, seed=11)[
                0
            ].log.to_jsonl()
            for _ in range(3)
        ]
        assert runs[0] == runs[1] == runs[2]
        other = run_bot_session(
            CONFIG, [logit_response(0.4, belief=0.3)] * 5, seed=12
        )[0].log.to_jsonl()
        assert other != runs[0]

    def test_replay_reproduces_payments(self):
        machine, _ = run_bot_session(
            CONFIG, [logit_response(0.4, belief=0.3)] * 5, seed=13
        )
        rebuilt = replay_log(machine.log.to_jsonl())
        assert rebuilt.log.to_jsonl() == machine.log.to_jsonl()
        assert rebuilt.log.payment_event() == machine.log.payment_event()

    def test_replay_with_human_inputs(self):
        machine = SessionMachine(
            CONFIG, seed=14, session_id="t", bot_policies=[static_equilibrium()] * 4
        )
        machine.start()
        join(machine, "alice")
        play_session(machine, ["alice"], choose=lambda s, r: r % 2 == 0)
        rebuilt = replay_log(machine.log.to_jsonl())
        assert rebuilt.log.to_jsonl() == machine.log.to_jsonl()

    def test_truncated_log_is_reported(self):
        machine, _ = run_bot_session(CONFIG, [never_distance()] * 5, seed=15)
        lines = machine.log.to_jsonl().splitlines()
        with pytest.raises(ValueError, match="truncated"):
            replay_log("\n".join(lines[:-5]))

    def test_corrupt_line_is_named(self):
        machine, _ = run_bot_session(CONFIG, [never_distance()] * 5, seed=16)
        lines = machine.log.to_jsonl().splitlines()
        lines[7] = lines[7][:-3] + "@@@"
        with pytest.raises(ValueError, match="line 8"):
            replay_log("\n".join(lines))

    def test_tampered_outcome_is_detected(self):
        machine, _ = run_bot_session(CONFIG, [never_distance()] * 5, seed=17)
        lines = machine.log.to_jsonl().splitlines()
        idx, line = next(
            (i, ln)
            for i, ln in enumerate(lines)
            if '"event":"round_outcome"' in ln
        )
        record = json.loads(line)
        record["points"] = [999.0] * 5
        lines[idx] = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with pytest.raises(ValueError, match=f"line {idx + 1}"):
            replay_log("\n".join(lines))


class TestInvariants:
    def test_points_conservation(self):
        machine, _ = run_bot_session(
            CONFIG, [logit_response(0.3, belief=0.2)] * 5, seed=18
        )
        log = machine.log
        for rec in log.round_records():
            params = CONFIG.params_for(rec.part)
            recomputed = tuple(
                score_round(rec_to_outcome(rec), params)
            )
            assert recomputed == rec.points

    def test_information_hiding_over_full_trace(self):
        machine = SessionMachine(
            CONFIG, seed=19, session_id="t", bot_policies=[logit_response(0.4)] * 3
        )
        machine.start()
        steps = [join(machine, "h0"), join(machine, "h1")]
        steps += play_session(
            machine, ["h0", "h1"], choose=lambda s, r: (s + r) % 2 == 0
        )
        allowed_result_keys = {
            "type",
            "round",
            "round_in_part",
            "part",
            "decision",
            "infected",
            "points",
            "history",
            "review_seconds",
        }
        saw_result = False
        for step in steps:
            for target, message in step.outbound:
                assert target != "*" or message["type"] in (
                    "lobby_update",
                    "group_formed",
                    "intervention_start",
                )
                if message["type"] == "round_result":
                    saw_result = True
                    assert set(message) == allowed_result_keys
                    assert isinstance(message["infected"], bool)
                    assert len(message["history"]) <= CONFIG.history_window
                if message["type"] == "round_start":
                    assert "positions" not in message  # own node only
        assert saw_result

    def test_history_window_contents(self):
        machine = SessionMachine(
            CONFIG, seed=20, session_id="t", bot_policies=[never_distance()] * 4
        )
        machine.start()
        join(machine, "h0")
        results = []
        steps = play_session(machine, ["h0"])
        for step in steps:
            for _, message in step.outbound:
                if message["type"] == "round_result":
                    results.append(message)
        assert len(results) == 40
        first = results[0]
        assert len(first["history"]) == 1  # first round shows one row
        last = results[-1]
        assert len(last["history"]) == 5
        assert [h["round_in_part"] for h in last["history"]] == [16, 17, 18, 19, 20]


def rec_to_outcome(rec):
    from distancing_lab.simulation import RoundOutcome

    return RoundOutcome(
        round_index=rec.round_index,
        part=rec.part,
        positions=rec.positions,
        decisions=rec.decisions,
        patient_zero=rec.patient_zero,
        coin=rec.coin,
        infected=rec.infected,
        points=rec.points,
    )
