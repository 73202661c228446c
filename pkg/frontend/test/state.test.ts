import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { PaymentDoc, ServerMessage } from "../src/protocol.js";
import { formatDollars } from "../src/format.js";
import {
  applyLocal,
  applyMessage,
  applyTick,
  connectionLost,
  connectionOpen,
  initialView,
  joinMessage,
  submitDecision,
  type ClientView,
} from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));
const transcript = JSON.parse(
  readFileSync(join(here, "fixtures", "transcript.json"), "utf-8")
) as {
  skipped_round: number;
  messages: ServerMessage[];
  expected_payment: PaymentDoc;
};

function foldTranscript(): {
  final: ClientView;
  states: ClientView[];
} {
  let view = initialView();
  view = connectionOpen(view);
  const states: ClientView[] = [];
  let now = 1_000_000;
  for (const message of transcript.messages) {
    now += 250;
    view = applyMessage(view, message, now);
    states.push(view);
  }
  return { final: view, states };
}

const roundStart: ServerMessage = {
  type: "round_start",
  round: 1,
  round_in_part: 1,
  rounds_per_part: 20,
  part: "baseline",
  network: { node_count: 5, edges: [[0, 1], [0, 2], [0, 3], [0, 4]], labels: ["P", "E", "C", "M", "Q"] },
  position: 2,
  params: { b: 100, c: 35, gamma: 0.5, alpha: 0.65, fine: 0 },
  deadline_seconds: 20,
};

describe("join and lobby flow", () => {
  it("moves joined -> lobby -> waiting -> decision", () => {
    let view = connectionOpen(initialView());
    view = applyMessage(
      view,
      { type: "joined", seat: 0, resume_token: "tok" },
      0
    );
    expect(view.screen).toBe("lobby");
    expect(view.resumeToken).toBe("tok");
    view = applyMessage(
      view,
      { type: "lobby_update", seats_filled: 3, seats_total: 5 },
      0
    );
    expect(view.seatsFilled).toBe(3);
    view = applyMessage(view, { type: "group_formed", seats_total: 5 }, 0);
    expect(view.screen).toBe("waiting");
    view = applyMessage(view, roundStart, 0);
    expect(view.screen).toBe("decision");
    expect(view.position).toBe(2);
  });

  it("builds the join message with and without a resume token", () => {
    expect(joinMessage("p", null)).toEqual({ type: "join", name: "p" });
    expect(joinMessage("p", "tok")).toEqual({
      type: "join",
      name: "p",
      resume_token: "tok",
    });
  });
});

describe("countdown", () => {
  it("derives from the server deadline, never below zero", () => {
    let view = applyMessage(initialView(), roundStart, 10_000);
    expect(view.countdownSeconds).toBe(20);
    view = applyTick(view, 15_000);
    expect(view.countdownSeconds).toBe(15);
    view = applyTick(view, 29_900);
    expect(view.countdownSeconds).toBe(1);
    view = applyTick(view, 31_000);
    expect(view.countdownSeconds).toBe(0);
    view = applyTick(view, 99_000);
    expect(view.countdownSeconds).toBe(0);
  });

  it("subtracts measured latency from the deadline", () => {
    const view = applyMessage(initialView(), roundStart, 10_000, 2_000);
    expect(view.countdownSeconds).toBe(18);
  });
});

describe("decision submission", () => {
  it("sends exactly one decision per round", () => {
    let view = applyMessage(initialView(), roundStart, 0);
    const first = submitDecision(view, true);
    expect(first.message).toEqual({ type: "submit_decision", distance: true });
    view = first.view;
    const second = submitDecision(view, true); // rapid double click
    expect(second.message).toBeNull();
    const flip = submitDecision(view, false);
    expect(flip.message).toBeNull();
  });

  it("does not submit outside the decision screen", () => {
    const outcome = submitDecision(initialView(), true);
    expect(outcome.message).toBeNull();
  });
});

describe("briefings", () => {
  it("fine briefing is continue-ready immediately", () => {
    const view = applyMessage(
      initialView(),
      { type: "intervention_start", kind: "fine", briefing_seconds: 15 },
      0
    );
    expect(view.screen).toBe("briefing");
    expect(view.briefingMediaDone).toBe(true);
  });

  it("nudge briefing blocks continue until the media completes", () => {
    let view = applyMessage(
      initialView(),
      { type: "intervention_start", kind: "nudge", briefing_seconds: 180 },
      0
    );
    expect(view.briefingMediaDone).toBe(false);
    const blocked = applyLocal(view, { type: "continue" });
    expect(blocked.screen).toBe("briefing");
    view = applyLocal(view, { type: "media_complete" });
    view = applyLocal(view, { type: "continue" });
    expect(view.screen).toBe("waiting");
  });

  it("unknown kinds do not derail the session", () => {
    let view = applyMessage(
      initialView(),
      { type: "intervention_start", kind: "mystery", briefing_seconds: 5 },
      0
    );
    expect(view.screen).toBe("briefing");
    view = applyMessage(view, roundStart, 0);
    expect(view.screen).toBe("decision");
  });
});

describe("connection state", () => {
  it("flags loss and recovery without touching the screen", () => {
    let view = applyMessage(initialView(), roundStart, 0);
    view = connectionLost(view);
    expect(view.connected).toBe(false);
    expect(view.screen).toBe("decision");
    view = connectionOpen(view);
    expect(view.connected).toBe(true);
  });

  it("keeps errors as a banner without changing state", () => {
    const before = applyMessage(initialView(), roundStart, 0);
    const after = applyMessage(
      before,
      { type: "error", code: "wrong_phase", message: "nope" },
      0
    );
    expect(after.errorBanner).toContain("wrong_phase");
    expect(after.screen).toBe(before.screen);
    expect(after.round).toBe(before.round);
  });
});

describe("recorded server transcript", () => {
  it("completes all 40 rounds and ends on the payment screen", () => {
    const { final, states } = foldTranscript();
    const results = states.filter((s, i) => {
      const message = transcript.messages[i];
      return message.type === "round_result";
    });
    expect(results.length).toBe(40);
    expect(final.screen).toBe("payment");
    expect(final.roundsPerPart).toBe(20);
  });

  it("shows the recorded-No state with the 200-point penalty", () => {
    const { states } = foldTranscript();
    const skipped = transcript.skipped_round;
    const atSkip = states.find(
      (s) =>
        s.lastResult !== null &&
        s.lastResult.round === skipped &&
        s.screen === "result"
    );
    expect(atSkip).toBeDefined();
    expect(atSkip!.lastResult!.decision).toBe("timeout");
    expect(atSkip!.lastResult!.points).toBe(-200);
  });

  it("keeps the history window at five rows, starting from one", () => {
    const { states } = foldTranscript();
    const firstResult = states.find((s) => s.lastResult !== null);
    expect(firstResult!.lastResult!.history.length).toBe(1);
    for (const state of states) {
      if (state.lastResult) {
        expect(state.lastResult.history.length).toBeLessThanOrEqual(5);
        expect(state.lastResult.history.length).toBeGreaterThan(0);
      }
    }
  });

  it("payment screen matches the server's payment to the cent", () => {
    const { final } = foldTranscript();
    const expected = transcript.expected_payment;
    expect(final.payment).toEqual(expected);
    expect(formatDollars(final.payment!.total)).toBe(
      formatDollars(expected.total)
    );
    const partSum = expected.part_bonus.reduce((a, b) => a + b, 0);
    expect(Math.round((expected.fee + partSum) * 100)).toBe(
      Math.round(expected.total * 100)
    );
  });

  it("replaying the transcript reproduces identical final screens", () => {
    const first = foldTranscript().final;
    const second = foldTranscript().final;
    expect(second).toEqual(first);
  });
});
