"""Event-serialized state machine for one live session.

The machine consumes one event at a time (a client message, a timer
firing, or a disconnect) and produces outbound messages plus log lines;
it performs no I/O and never reads a clock, so it is unit-testable and
replayable without any network.  Timers are requested as (id, seconds)
descriptors; the runtime fires them back as :class:`TimerFired` events
and stale ids are ignored.

Phase machine::

    LOBBY -> [INSTRUCTIONS] -> (ROUND_DECISION -> ROUND_RESOLVE ->
    ROUND_REVIEW) x 20 -> INTERVENTION_BRIEFING -> (rounds) x 20 ->
    FINISHED

ROUND_RESOLVE is transient: resolving happens atomically inside the
event that completes a round (last decision or the deadline), so the
machine always rests in one of the other phases.

Every input event is appended to the session log before it is processed
and every derived record before its messages are emitted, which makes a
persisted log replayable bit-for-bit: feed the logged inputs to a fresh
machine with the same config and seed and it reproduces the log.

Determinism notes: seats are announced deterministically (bots occupy
the highest seats at creation, humans fill lowest-first), resume tokens
are derived from the session seed, and log records carry no wall-clock
timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .policies import AgentPolicy, Observation, never_distance, policy_decide
from .protocol import ProtocolError, error_message, parse_client_message
from .session_log import Decision, Part, SessionLog
from .simulation import (
    SessionConfig,
    assign_positions,
    compute_payment,
    sample_round,
)

DISQUALIFYING_TIMEOUTS = 3
BROADCAST = "*"


class Phase(str, Enum):
    LOBBY = "lobby"
    INSTRUCTIONS = "instructions"
    ROUND_DECISION = "round_decision"
    ROUND_RESOLVE = "round_resolve"
    ROUND_REVIEW = "round_review"
    INTERVENTION_BRIEFING = "intervention_briefing"
    FINISHED = "finished"


@dataclass(frozen=True)
class ClientMessage:
    conn_id: str
    payload: dict


@dataclass(frozen=True)
class TimerFired:
    timer_id: int


@dataclass(frozen=True)
class ClientDisconnected:
    conn_id: str


@dataclass(frozen=True)
class TimerRequest:
    timer_id: int
    seconds: float


@dataclass
class StepResult:
    outbound: list[tuple[str, dict]] = field(default_factory=list)
    log_lines: list[str] = field(default_factory=list)
    timer: TimerRequest | None = None


@dataclass
class SeatState:
    seat: int
    name: str
    is_bot: bool
    policy: AgentPolicy | None
    resume_token: str
    conn_id: str | None = None
    timeout_streak: int = 0
    disqualified: bool = False
    history: list[tuple[int, Decision, bool, float]] = field(
        default_factory=list
    )  # (round_in_part, decision, infected, points)


class SessionMachine:
    """One session: seats, rounds, interventions, payment."""

    def __init__(
        self,
        config: SessionConfig,
        seed: int,
        session_id: str,
        bot_policies: list[AgentPolicy] | None = None,
    ):
        self.config = config
        self.net = config.network()
        self.seed = seed
        self.session_id = session_id
        bot_policies = list(bot_policies or [])
        if len(bot_policies) > self.net.node_count:
            raise ValueError("more bot policies than seats")
        self.rng = np.random.default_rng(seed)
        self.log = SessionLog()
        self.phase = Phase.LOBBY
        self.round_index = 0
        self.positions: tuple[int, ...] = ()
        self.decisions: dict[int, tuple[Decision, str]] = {}
        self._timer_id = 0
        self._pending_timer: TimerRequest | None = None
        self.seats: list[SeatState] = []
        n = self.net.node_count
        human_seats = n - len(bot_policies)
        for seat in range(n):
            is_bot = seat >= human_seats
            policy = bot_policies[seat - human_seats] if is_bot else None
            self.seats.append(
                SeatState(
                    seat=seat,
                    name=f"bot-{seat}" if is_bot else "",
                    is_bot=is_bot,
                    policy=policy,
                    resume_token=f"seat{seat}-{seed}",
                )
            )
        self._humans_expected = human_seats

    # ---- helpers -------------------------------------------------------

    @property
    def pending_timer(self) -> TimerRequest | None:
        return self._pending_timer

    def _request_timer(self, step: StepResult, seconds: float) -> None:
        self._timer_id += 1
        self._pending_timer = TimerRequest(self._timer_id, seconds)
        step.timer = self._pending_timer

    def _log(self, step: StepResult, record: dict) -> None:
        step.log_lines.append(self.log.append(record))

    def _send(self, step: StepResult, seat: SeatState | None, payload: dict) -> None:
        if seat is None:
            step.outbound.append((BROADCAST, payload))
        elif seat.conn_id is not None:
            step.outbound.append((seat.conn_id, payload))

    def _seat_by_conn(self, conn_id: str) -> SeatState | None:
        for seat in self.seats:
            if seat.conn_id == conn_id:
                return seat
        return None

    def seats_filled(self) -> int:
        return sum(1 for s in self.seats if s.is_bot or s.conn_id is not None)

    def part(self) -> Part:
        return self.config.part_of_round(self.round_index)

    def params(self):
        return self.config.params_for(self.part())

    # ---- lifecycle -----------------------------------------------------

    def start(self) -> StepResult:
        """Open the session: header, bot joins, maybe the whole session."""
        step = StepResult()
        self._log(
            step,
            {
                "event": "header",
                "schema": 1,
                "session_id": self.session_id,
                "seed": self.seed,
                "config": self.config.to_json_dict(),
            },
        )
        for seat in self.seats:
            if seat.is_bot:
                self._log(
                    step,
                    {
                        "event": "join",
                        "seat": seat.seat,
                        "name": seat.name,
                        "kind": "bot",
                        "policy": seat.policy.to_json_dict(),
                    },
                )
        if self.seats_filled() == self.net.node_count:
            self._form_group(step)
        return step

    def advance(self, event) -> StepResult:
        step = StepResult()
        if isinstance(event, TimerFired):
            if (
                self._pending_timer is None
                or event.timer_id != self._pending_timer.timer_id
            ):
                return step  # stale timer
            self._log(step, {"event": "timer_fired", "timer_id": event.timer_id})
            self._pending_timer = None
            self._on_timer(step)
        elif isinstance(event, ClientMessage):
            self._log(
                step,
                {
                    "event": "client_message",
                    "conn": event.conn_id,
                    "payload": event.payload,
                },
            )
            self._on_client(step, event.conn_id, event.payload)
        elif isinstance(event, ClientDisconnected):
            seat = self._seat_by_conn(event.conn_id)
            if seat is not None:
                seat.conn_id = None
        else:
            raise TypeError(f"unknown event {event!r}")
        return step

    # ---- client messages ------------------------------------------------

    def _on_client(self, step: StepResult, conn_id: str, payload) -> None:
        try:
            message = parse_client_message(payload)
        except ProtocolError as exc:
            step.outbound.append(
                (conn_id, error_message(exc.code, str(exc)))
            )
            return
        if message["type"] == "join":
            self._on_join(step, conn_id, message)
        elif message["type"] == "submit_decision":
            self._on_decision(step, conn_id, message)

    def _on_join(self, step: StepResult, conn_id: str, message: dict) -> None:
        token = message.get("resume_token")
        if token:
            for seat in self.seats:
                if seat.resume_token == token and not seat.is_bot:
                    seat.conn_id = conn_id
                    self._send_welcome(step, seat, rejoin=True)
                    return
            step.outbound.append(
                (conn_id, error_message("bad_token", "unknown resume token"))
            )
            return
        if self._seat_by_conn(conn_id) is not None:
            step.outbound.append(
                (conn_id, error_message("already_joined", "already seated"))
            )
            return
        free = next(
            (
                s
                for s in self.seats
                if not s.is_bot and s.conn_id is None and not s.name
            ),
            None,
        )
        if free is None or self.phase is not Phase.LOBBY:
            step.outbound.append(
                (conn_id, error_message("session_full", "no free seat"))
            )
            return
        free.conn_id = conn_id
        free.name = message["name"]
        self._log(
            step,
            {
                "event": "join",
                "seat": free.seat,
                "name": free.name,
                "kind": "human",
            },
        )
        self._send_welcome(step, free, rejoin=False)
        self._send(
            step,
            None,
            {
                "type": "lobby_update",
                "seats_filled": self.seats_filled(),
                "seats_total": self.net.node_count,
            },
        )
        if self.seats_filled() == self.net.node_count:
            self._form_group(step)

    def _send_welcome(self, step: StepResult, seat: SeatState, rejoin: bool) -> None:
        self._send(
            step,
            seat,
            {
                "type": "joined",
                "seat": seat.seat,
                "resume_token": seat.resume_token,
            },
        )
        if rejoin and self.phase in (
            Phase.ROUND_DECISION,
            Phase.ROUND_REVIEW,
        ):
            # catch the client up with the round in flight
            self._send(step, seat, {"type": "group_formed", "seats_total": self.net.node_count})
            if self.phase is Phase.ROUND_DECISION:
                self._send(step, seat, self._round_start_message(seat))

    def _on_decision(self, step: StepResult, conn_id: str, message: dict) -> None:
        seat = self._seat_by_conn(conn_id)
        if seat is None:
            step.outbound.append(
                (conn_id, error_message("not_joined", "join first"))
            )
            return
        if self.phase is not Phase.ROUND_DECISION:
            step.outbound.append(
                (
                    conn_id,
                    error_message(
                        "wrong_phase", "no decision is being accepted now"
                    ),
                )
            )
            return
        if seat.disqualified:
            step.outbound.append(
                (conn_id, error_message("disqualified", "seat is disqualified"))
            )
            return
        if seat.seat in self.decisions:
            previous = self.decisions[seat.seat][0]
            self._send(
                step,
                seat,
                {
                    "type": "decision_ack",
                    "round": self.round_index,
                    "distance": previous is Decision.YES,
                },
            )
            return
        choice = Decision.YES if message["distance"] else Decision.NO
        self.decisions[seat.seat] = (choice, "client")
        self._log(
            step,
            {
                "event": "decision",
                "round": self.round_index,
                "seat": seat.seat,
                "choice": choice.value,
                "source": "client",
            },
        )
        self._send(
            step,
            seat,
            {
                "type": "decision_ack",
                "round": self.round_index,
                "distance": choice is Decision.YES,
            },
        )
        if len(self.decisions) == self.net.node_count:
            self._resolve_round(step)

    # ---- timers ----------------------------------------------------------

    def _on_timer(self, step: StepResult) -> None:
        if self.phase is Phase.INSTRUCTIONS:
            self._start_round(step, 1)
        elif self.phase is Phase.ROUND_DECISION:
            self._resolve_round(step)
        elif self.phase is Phase.ROUND_REVIEW:
            if self.round_index == self.config.rounds_per_part:
                self._start_briefing(step)
            elif self.round_index == self.config.total_rounds:
                self._finish(step)
            else:
                self._start_round(step, self.round_index + 1)
        elif self.phase is Phase.INTERVENTION_BRIEFING:
            self._start_round(step, self.config.rounds_per_part + 1)

    # ---- session flow ----------------------------------------------------

    def _form_group(self, step: StepResult) -> None:
        self._send(
            step,
            None,
            {"type": "group_formed", "seats_total": self.net.node_count},
        )
        if self.config.instructions_seconds > 0:
            self.phase = Phase.INSTRUCTIONS
            self._request_timer(step, self.config.instructions_seconds)
        else:
            self._start_round(step, 1)

    def _round_start_message(self, seat: SeatState) -> dict:
        return {
            "type": "round_start",
            "round": self.round_index,
            "round_in_part": (self.round_index - 1)
            % self.config.rounds_per_part
            + 1,
            "rounds_per_part": self.config.rounds_per_part,
            "part": self.part().value,
            "network": self.net.to_json_dict(),
            "position": self.positions[seat.seat],
            "params": self.params().to_json_dict(),
            "deadline_seconds": self.config.decision_seconds,
        }

    def _start_round(self, step: StepResult, round_index: int) -> None:
        self.round_index = round_index
        self.decisions = {}
        self.positions = assign_positions(
            self.rng, range(self.net.node_count), self.net
        )
        self.phase = Phase.ROUND_DECISION
        self._log(
            step,
            {
                "event": "round_start",
                "round": round_index,
                "part": self.part().value,
                "positions": list(self.positions),
            },
        )
        for seat in self.seats:
            if not seat.is_bot and not seat.disqualified:
                self._send(step, seat, self._round_start_message(seat))
        params = self.params()
        for seat in self.seats:
            policy = seat.policy
            if policy is None:
                continue
            observation = Observation(
                net=self.net,
                params=params,
                part=self.part(),
                position=self.positions[seat.seat],
                round_in_part=(round_index - 1) % self.config.rounds_per_part
                + 1,
                history=tuple(
                    (d, i, p)
                    for (_, d, i, p) in seat.history[-self.config.history_window :]
                ),
            )
            choice = (
                Decision.YES
                if policy_decide(policy, observation, self.rng)
                else Decision.NO
            )
            self.decisions[seat.seat] = (choice, "policy")
            self._log(
                step,
                {
                    "event": "decision",
                    "round": round_index,
                    "seat": seat.seat,
                    "choice": choice.value,
                    "source": "policy",
                },
            )
        if len(self.decisions) == self.net.node_count:
            self._resolve_round(step)
        else:
            self._request_timer(step, self.config.decision_seconds)

    def _resolve_round(self, step: StepResult) -> None:
        self.phase = Phase.ROUND_RESOLVE
        self._pending_timer = None
        for seat in self.seats:
            if seat.seat not in self.decisions:
                self.decisions[seat.seat] = (Decision.TIMEOUT, "deadline")
                self._log(
                    step,
                    {
                        "event": "decision",
                        "round": self.round_index,
                        "seat": seat.seat,
                        "choice": Decision.TIMEOUT.value,
                        "source": "deadline",
                    },
                )
        ordered = tuple(
            self.decisions[seat.seat][0] for seat in self.seats
        )
        params = self.params()
        outcome = sample_round(
            self.rng,
            self.net,
            ordered,
            params,
            round_index=self.round_index,
            part=self.part(),
            positions=self.positions,
        )
        self._log(
            step,
            {
                "event": "round_outcome",
                "round": self.round_index,
                "part": self.part().value,
                "patient_zero": outcome.patient_zero,
                "coin": outcome.coin,
                "infected": sorted(outcome.infected),
                "points": list(outcome.points),
            },
        )
        round_in_part = (self.round_index - 1) % self.config.rounds_per_part + 1
        for seat in self.seats:
            infected = seat.seat in outcome.infected
            seat.history.append(
                (
                    round_in_part,
                    ordered[seat.seat],
                    infected,
                    outcome.points[seat.seat],
                )
            )
            if ordered[seat.seat] is Decision.TIMEOUT:
                seat.timeout_streak += 1
            else:
                seat.timeout_streak = 0
        for seat in self.seats:
            if (
                not seat.disqualified
                and not seat.is_bot
                and seat.timeout_streak >= DISQUALIFYING_TIMEOUTS
            ):
                seat.disqualified = True
                seat.policy = never_distance()
                self._log(
                    step,
                    {
                        "event": "disqualified",
                        "seat": seat.seat,
                        "round": self.round_index,
                    },
                )
                self._send(
                    step,
                    seat,
                    {
                        "type": "disqualified",
                        "reason": "three consecutive missed decisions",
                    },
                )
        for seat in self.seats:
            if seat.is_bot or seat.disqualified:
                continue
            history = [
                {
                    "round_in_part": r,
                    "decision": d.value,
                    "infected": i,
                    "points": p,
                }
                for (r, d, i, p) in seat.history[-self.config.history_window :]
            ]
            self._send(
                step,
                seat,
                {
                    "type": "round_result",
                    "round": self.round_index,
                    "round_in_part": round_in_part,
                    "part": self.part().value,
                    "decision": ordered[seat.seat].value,
                    "infected": seat.seat in outcome.infected,
                    "points": outcome.points[seat.seat],
                    "history": history,
                    "review_seconds": self.config.review_seconds,
                },
            )
        self.phase = Phase.ROUND_REVIEW
        self._request_timer(step, self.config.review_seconds)

    def _start_briefing(self, step: StepResult) -> None:
        self.phase = Phase.INTERVENTION_BRIEFING
        self._log(
            step,
            {
                "event": "intervention",
                "kind": self.config.intervention,
                "round": self.config.rounds_per_part + 1,
            },
        )
        self._send(
            step,
            None,
            {
                "type": "intervention_start",
                "kind": self.config.intervention,
                "briefing_seconds": self.config.briefing_seconds,
            },
        )
        self._request_timer(step, self.config.briefing_seconds)

    def _finish(self, step: StepResult) -> None:
        payments = compute_payment(self.log, self.rng)
        self._log(
            step,
            {
                "event": "payment",
                "seats": [p.to_json_dict() for p in payments],
            },
        )
        self._log(step, {"event": "end"})
        for seat in self.seats:
            if not seat.is_bot:
                self._send(
                    step,
                    seat,
                    {
                        "type": "session_end",
                        "payment": payments[seat.seat].to_json_dict(),
                    },
                )
        self.phase = Phase.FINISHED
        self._pending_timer = None


def pump_timers(machine: SessionMachine, steps: list[StepResult]) -> None:
    """Fire pending timers until none remain (simulated time)."""
    while machine.pending_timer is not None:
        steps.append(machine.advance(TimerFired(machine.pending_timer.timer_id)))


def run_bot_session(
    config: SessionConfig,
    bot_policies: list[AgentPolicy],
    seed: int,
    session_id: str = "server-sim",
) -> tuple[SessionMachine, list[StepResult]]:
    """Drive an all-bot session to completion in simulated time."""
    machine = SessionMachine(config, seed, session_id, bot_policies)
    steps = [machine.start()]
    pump_timers(machine, steps)
    if machine.phase is not Phase.FINISHED:
        raise RuntimeError(f"bot session stalled in phase {machine.phase}")
    return machine, steps


def replay_log(lines: list[str] | str) -> SessionMachine:
    """Rebuild a machine from a persisted log, verifying every line.

    Feeds the logged inputs (client messages and timer firings) through a
    fresh machine created from the logged header and bot roster; raises
    ``ValueError`` naming the first line that diverges, is corrupt, or is
    missing.
    """
    from .policies import policy_from_json
    from .simulation import config_from_json
    import json as _json

    if isinstance(lines, str):
        lines = [ln for ln in lines.splitlines() if ln.strip()]
    records = []
    for lineno, line in enumerate(lines, start=1):
        try:
            records.append(_json.loads(line))
        except _json.JSONDecodeError as exc:
            raise ValueError(f"log line {lineno}: invalid JSON ({exc})") from None
    if not records or records[0].get("event") != "header":
        raise ValueError("log line 1: expected a header event")
    header = records[0]
    config = config_from_json(header["config"])
    bot_policies = [
        policy_from_json(r["policy"])
        for r in records
        if r.get("event") == "join" and r.get("kind") == "bot"
    ]
    machine = SessionMachine(
        config, header["seed"], header["session_id"], bot_policies
    )
    produced: list[str] = list(machine.start().log_lines)
    for record in records:
        event = record.get("event")
        if event == "client_message":
            step = machine.advance(
                ClientMessage(record["conn"], record["payload"])
            )
        elif event == "timer_fired":
            step = machine.advance(TimerFired(record["timer_id"]))
        else:
            continue
        produced.extend(step.log_lines)
    for lineno, (want, got) in enumerate(zip(lines, produced), start=1):
        if want != got:
            raise ValueError(
                f"log line {lineno}: replay diverged\n  logged: {want}\n  replay: {got}"
            )
    if len(produced) < len(lines):
        raise ValueError(
            f"log line {len(produced) + 1}: log continues past replay "
            "(truncated or corrupt input stream)"
        )
    if len(produced) > len(lines):
        raise ValueError(
            f"log line {len(lines) + 1}: log is truncated (replay continues)"
        )
    return machine
