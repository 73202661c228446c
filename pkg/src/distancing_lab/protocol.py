"""Wire protocol for live sessions: one JSON message per websocket frame.

Client to server:
    {"type": "join", "name": str, "resume_token": str?}
    {"type": "submit_decision", "distance": bool}

Server to client:
    {"type": "error", "code": str, "message": str}
    {"type": "joined", "seat": int, "resume_token": str}
    {"type": "lobby_update", "seats_filled": int, "seats_total": int}
    {"type": "group_formed", "seats_total": int}
    {"type": "round_start", "round": int, "round_in_part": int,
     "rounds_per_part": int, "part": str, "network": {...}, "position": int,
     "params": {...}, "deadline_seconds": float}
    {"type": "decision_ack", "round": int, "distance": bool}
    {"type": "round_result", "round": int, "round_in_part": int, "part": str,
     "decision": "yes"|"no"|"timeout", "infected": bool, "points": float,
     "history": [{"round_in_part", "decision", "infected", "points"}, ...],
     "review_seconds": float}
    {"type": "intervention_start", "kind": "fine"|"nudge",
     "briefing_seconds": float}
    {"type": "disqualified", "reason": str}
    {"type": "session_end", "payment": {...}}

Round results never carry another participant's decision or infection
status; a client learns only its own view of each round.
"""

from __future__ import annotations

CLIENT_TYPES = ("join", "submit_decision")


class ProtocolError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def parse_client_message(payload) -> dict:
    """Validate a decoded client frame, returning it; raise ProtocolError."""
    if not isinstance(payload, dict):
        raise ProtocolError("malformed", "message must be a JSON object")
    kind = payload.get("type")
    if kind not in CLIENT_TYPES:
        raise ProtocolError("unknown_type", f"unknown message type {kind!r}")
    if kind == "join":
        if not isinstance(payload.get("name"), str) or not payload["name"]:
            raise ProtocolError("malformed", "join needs a nonempty name")
        token = payload.get("resume_token")
        if token is not None and not isinstance(token, str):
            raise ProtocolError("malformed", "resume_token must be a string")
    if kind == "submit_decision" and not isinstance(
        payload.get("distance"), bool
    ):
        raise ProtocolError("malformed", "submit_decision needs a boolean")
    return payload


def error_message(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}
