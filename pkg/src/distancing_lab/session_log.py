"""Append-only session logs shared by the simulator and the live server.

A session log is an ordered list of JSON event records, one per line when
persisted (JSON Lines).  Replaying a log with its seed reproduces every
outcome bit-exactly, so log lines contain no wall-clock timestamps and are
serialized canonically (sorted keys, compact separators).

Event kinds
-----------
``header``        session id, seed, config snapshot, schema version
``join``          seat, participant name, bot/human kind, policy spec
``round_start``   round (1-based over the whole session), part, positions
``decision``      round, seat, choice (yes/no/timeout), source
``round_outcome`` round, part, patient-zero seat, coin, infected seats,
                  points per seat
``intervention``  kind (fine/nudge), first round it applies to
``disqualified``  seat, round
``payment``       per-seat payment breakdown
``end``           closes the log
``client_message``/``timer_fired``  raw inputs (live server only), kept so
                  a server log can be replayed through the state machine
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .model import Network, network_from_json, node_roles

SCHEMA_VERSION = 1


class Part(str, Enum):
    BASELINE = "baseline"
    INTERVENTION = "intervention"


class Decision(str, Enum):
    YES = "yes"
    NO = "no"
    TIMEOUT = "timeout"

    @property
    def distanced(self) -> bool:
        return self is Decision.YES


def canonical_line(record: dict) -> str:
    """Canonical single-line JSON used for every persisted event."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    part: Part
    positions: tuple[int, ...]
    decisions: tuple[Decision, ...]
    sources: tuple[str, ...]
    patient_zero: int
    coin: bool | None
    infected: frozenset[int]
    points: tuple[float, ...]


@dataclass
class SessionLog:
    events: list[dict] = field(default_factory=list)

    def append(self, record: dict) -> str:
        self.events.append(record)
        return canonical_line(record)

    @property
    def header(self) -> dict:
        if not self.events or self.events[0].get("event") != "header":
            raise ValueError("log has no header")
        return self.events[0]

    @property
    def session_id(self) -> str:
        return self.header["session_id"]

    @property
    def seed(self) -> int:
        return self.header["seed"]

    @property
    def config(self) -> dict:
        return self.header["config"]

    def network(self) -> Network:
        return network_from_json(self.config["network"])

    @property
    def seat_count(self) -> int:
        return self.network().node_count

    def roster(self) -> list[dict]:
        return [e for e in self.events if e.get("event") == "join"]

    def disqualified_seats(self) -> set[int]:
        return {
            e["seat"] for e in self.events if e.get("event") == "disqualified"
        }

    def payment_event(self) -> dict | None:
        for e in self.events:
            if e.get("event") == "payment":
                return e
        return None

    def is_complete(self) -> bool:
        return bool(self.events) and self.events[-1].get("event") == "end"

    def round_records(self) -> list[RoundRecord]:
        rounds: dict[int, dict] = {}
        for e in self.events:
            kind = e.get("event")
            if kind == "round_start":
                rounds[e["round"]] = {
                    "part": e["part"],
                    "positions": e["positions"],
                    "decisions": {},
                    "sources": {},
                }
            elif kind == "decision":
                entry = rounds.get(e["round"])
                if entry is None:
                    raise ValueError(f"decision for unknown round {e['round']}")
                entry["decisions"][e["seat"]] = e["choice"]
                entry["sources"][e["seat"]] = e["source"]
            elif kind == "round_outcome":
                entry = rounds.get(e["round"])
                if entry is None:
                    raise ValueError(f"outcome for unknown round {e['round']}")
                entry["outcome"] = e
        seats = self.seat_count
        records = []
        for round_index in sorted(rounds):
            entry = rounds[round_index]
            if "outcome" not in entry:
                continue  # round still in flight
            outcome = entry["outcome"]
            records.append(
                RoundRecord(
                    round_index=round_index,
                    part=Part(entry["part"]),
                    positions=tuple(entry["positions"]),
                    decisions=tuple(
                        Decision(entry["decisions"][s]) for s in range(seats)
                    ),
                    sources=tuple(entry["sources"][s] for s in range(seats)),
                    patient_zero=outcome["patient_zero"],
                    coin=outcome["coin"],
                    infected=frozenset(outcome["infected"]),
                    points=tuple(outcome["points"]),
                )
            )
        return records

    def points_by_seat_and_part(self) -> dict[tuple[int, Part], list[float]]:
        table: dict[tuple[int, Part], list[float]] = {}
        for rec in self.round_records():
            for seat in range(self.seat_count):
                table.setdefault((seat, rec.part), []).append(rec.points[seat])
        return table

    # ---- persistence -------------------------------------------------

    def to_jsonl(self) -> str:
        return "".join(canonical_line(e) + "\n" for e in self.events)

    def write_jsonl(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.to_jsonl())
        tmp.replace(path)

    @classmethod
    def from_jsonl(cls, text: str) -> "SessionLog":
        events = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"bad log line {lineno}: {exc}") from None
            if not isinstance(record, dict) or "event" not in record:
                raise ValueError(f"bad log line {lineno}: missing event tag")
            events.append(record)
        log = cls(events)
        log.header  # noqa: B018 - raises if the first line is not a header
        return log

    @classmethod
    def read_jsonl(cls, path: str | Path) -> "SessionLog":
        return cls.from_jsonl(Path(path).read_text())

    # ---- decision matrix ---------------------------------------------

    def decision_rows(self) -> list[dict]:
        """One row per participant-round, for CSV export and analysis."""
        net = self.network()
        roles = node_roles(net)
        cfg = self.config
        names = {e["seat"]: e["name"] for e in self.roster()}
        rows = []
        for rec in self.round_records():
            for seat in range(self.seat_count):
                node = rec.positions[seat]
                rows.append(
                    {
                        "session_id": self.session_id,
                        "seat": seat,
                        "participant": names.get(seat, f"seat{seat}"),
                        "round": rec.round_index,
                        "part": rec.part.value,
                        "node": node,
                        "role": roles[node].value,
                        "decision": rec.decisions[seat].value,
                        "infected": int(seat in rec.infected),
                        "points": rec.points[seat],
                        "network": cfg.get("network_name", ""),
                        "alpha": cfg.get("alpha", ""),
                        "intervention": cfg.get("intervention", ""),
                    }
                )
        return rows


DECISION_CSV_FIELDS = [
    "session_id",
    "seat",
    "participant",
    "round",
    "part",
    "node",
    "role",
    "decision",
    "infected",
    "points",
    "network",
    "alpha",
    "intervention",
]


def decisions_to_csv(logs: list[SessionLog]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=DECISION_CSV_FIELDS)
    writer.writeheader()
    for log in logs:
        for row in log.decision_rows():
            writer.writerow(row)
    return buf.getvalue()
