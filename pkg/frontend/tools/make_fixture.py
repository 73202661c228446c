"""Record a real server-side session transcript for the client tests.

Drives the session state machine with one human (conn "h0") and four
static-equilibrium bots on the star at 65% contagion with the fine
intervention.  The human answers every round except round 5, which times
out, so the transcript exercises the recorded-No state.  The output
captures, in order, every message the human's connection received, plus
the authoritative payment breakdown for cross-checking the payment
screen.

Run from the repository root after installing the package:

    python frontend/tools/make_fixture.py
"""

import json
from pathlib import Path

from distancing_lab.machine import (
    ClientMessage,
    Phase,
    SessionMachine,
    TimerFired,
)
from distancing_lab.policies import static_equilibrium
from distancing_lab.simulation import SessionConfig

OUT = Path(__file__).parent.parent / "test" / "fixtures" / "transcript.json"
SKIPPED_ROUND = 5


def main() -> None:
    config = SessionConfig(
        network_name="star", alpha=0.65, intervention="fine"
    )
    machine = SessionMachine(
        config, seed=4244, session_id="fixture", bot_policies=[static_equilibrium()] * 4
    )
    received: list[dict] = []

    def collect(step):
        for target, message in step.outbound:
            if target in ("h0", "*"):
                received.append(message)

    collect(machine.start())
    collect(
        machine.advance(ClientMessage("h0", {"type": "join", "name": "human"}))
    )
    guard = 0
    while machine.phase is not Phase.FINISHED:
        guard += 1
        assert guard < 500, machine.phase
        if (
            machine.phase is Phase.ROUND_DECISION
            and 0 not in machine.decisions
            and machine.round_index != SKIPPED_ROUND
        ):
            collect(
                machine.advance(
                    ClientMessage(
                        "h0",
                        {
                            "type": "submit_decision",
                            "distance": machine.round_index % 2 == 1,
                        },
                    )
                )
            )
        if machine.phase is not Phase.FINISHED and machine.pending_timer:
            collect(machine.advance(TimerFired(machine.pending_timer.timer_id)))

    payment = machine.log.payment_event()["seats"][0]
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(
        json.dumps(
            {
                "note": "recorded from the session state machine; do not edit",
                "config": config.to_json_dict(),
                "skipped_round": SKIPPED_ROUND,
                "messages": received,
                "expected_payment": payment,
            },
            indent=1,
            sort_keys=True,
        )
    )
    print(f"wrote {OUT} ({len(received)} messages)")


if __name__ == "__main__":
    main()
