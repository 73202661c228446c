/**
 * Client view state: a pure fold over the server message stream plus
 * local clock ticks and button events.  Rendering reads this and nothing
 * else, so replaying a recorded transcript reproduces the final screens
 * exactly.  Countdowns derive from server-sent deadlines captured at
 * message receipt (optionally latency-adjusted), never from local round
 * assumptions.
 */

import type {
  ClientMessage,
  HistoryEntry,
  NetworkDoc,
  ParamsDoc,
  PaymentDoc,
  ServerMessage,
} from "./protocol.js";

export type Screen =
  | "connecting"
  | "lobby"
  | "decision"
  | "waiting"
  | "result"
  | "briefing"
  | "payment"
  | "disqualified";

export interface RoundResultView {
  round: number;
  roundInPart: number;
  part: string;
  decision: "yes" | "no" | "timeout";
  infected: boolean;
  points: number;
  history: HistoryEntry[];
}

export interface ClientView {
  screen: Screen;
  connected: boolean;
  seat: number | null;
  resumeToken: string | null;
  seatsFilled: number;
  seatsTotal: number;
  round: number;
  roundInPart: number;
  roundsPerPart: number;
  part: string;
  network: NetworkDoc | null;
  position: number | null;
  params: ParamsDoc | null;
  submitted: boolean | null; // the choice sent this round, if any
  acked: boolean;
  lastResult: RoundResultView | null;
  interventionKind: string | null;
  briefingMediaDone: boolean;
  payment: PaymentDoc | null;
  disqualifiedReason: string | null;
  deadlineAtMs: number | null;
  countdownSeconds: number | null;
  errorBanner: string | null;
}

export function initialView(): ClientView {
  return {
    screen: "connecting",
    connected: false,
    seat: null,
    resumeToken: null,
    seatsFilled: 0,
    seatsTotal: 5,
    round: 0,
    roundInPart: 0,
    roundsPerPart: 20,
    part: "baseline",
    network: null,
    position: null,
    params: null,
    submitted: null,
    acked: false,
    lastResult: null,
    interventionKind: null,
    briefingMediaDone: false,
    payment: null,
    disqualifiedReason: null,
    deadlineAtMs: null,
    countdownSeconds: null,
    errorBanner: null,
  };
}

function withDeadline(
  view: ClientView,
  seconds: number,
  nowMs: number,
  latencyMs: number
): ClientView {
  const deadlineAtMs = nowMs + seconds * 1000 - latencyMs;
  return {
    ...view,
    deadlineAtMs,
    countdownSeconds: remaining(deadlineAtMs, nowMs),
  };
}

function remaining(deadlineAtMs: number | null, nowMs: number): number | null {
  if (deadlineAtMs === null) return null;
  return Math.max(0, Math.ceil((deadlineAtMs - nowMs) / 1000));
}

export function applyMessage(
  view: ClientView,
  message: ServerMessage,
  nowMs: number,
  latencyMs = 0
): ClientView {
  switch (message.type) {
    case "joined":
      return {
        ...view,
        connected: true,
        seat: message.seat,
        resumeToken: message.resume_token,
        screen: view.screen === "connecting" ? "lobby" : view.screen,
        errorBanner: null,
      };
    case "lobby_update":
      return {
        ...view,
        seatsFilled: message.seats_filled,
        seatsTotal: message.seats_total,
      };
    case "group_formed":
      return {
        ...view,
        seatsFilled: message.seats_total,
        seatsTotal: message.seats_total,
        screen: view.screen === "lobby" || view.screen === "connecting"
          ? "waiting"
          : view.screen,
      };
    case "round_start":
      return withDeadline(
        {
          ...view,
          screen: "decision",
          round: message.round,
          roundInPart: message.round_in_part,
          roundsPerPart: message.rounds_per_part,
          part: message.part,
          network: message.network,
          position: message.position,
          params: message.params,
          submitted: null,
          acked: false,
          interventionKind: view.interventionKind,
          errorBanner: null,
        },
        message.deadline_seconds,
        nowMs,
        latencyMs
      );
    case "decision_ack":
      return { ...view, acked: true, submitted: message.distance };
    case "round_result":
      return withDeadline(
        {
          ...view,
          screen: "result",
          lastResult: {
            round: message.round,
            roundInPart: message.round_in_part,
            part: message.part,
            decision: message.decision,
            infected: message.infected,
            points: message.points,
            history: message.history,
          },
        },
        message.review_seconds,
        nowMs,
        latencyMs
      );
    case "intervention_start":
      return withDeadline(
        {
          ...view,
          screen: "briefing",
          interventionKind: message.kind,
          briefingMediaDone: message.kind === "fine",
        },
        message.briefing_seconds,
        nowMs,
        latencyMs
      );
    case "disqualified":
      return {
        ...view,
        screen: "disqualified",
        disqualifiedReason: message.reason,
        deadlineAtMs: null,
        countdownSeconds: null,
      };
    case "session_end":
      return {
        ...view,
        screen: "payment",
        payment: message.payment,
        deadlineAtMs: null,
        countdownSeconds: null,
      };
    case "error":
      return { ...view, errorBanner: `${message.code}: ${message.message}` };
    default:
      return view;
  }
}

export function applyTick(view: ClientView, nowMs: number): ClientView {
  const countdownSeconds = remaining(view.deadlineAtMs, nowMs);
  if (countdownSeconds === view.countdownSeconds) return view;
  return { ...view, countdownSeconds };
}

export function connectionLost(view: ClientView): ClientView {
  return { ...view, connected: false };
}

export function connectionOpen(view: ClientView): ClientView {
  return { ...view, connected: true };
}

/** Local UI events: media completion and the briefing continue button. */
export function applyLocal(
  view: ClientView,
  event: { type: "media_complete" } | { type: "continue" }
): ClientView {
  if (event.type === "media_complete") {
    return { ...view, briefingMediaDone: true };
  }
  if (view.screen === "briefing" && view.briefingMediaDone) {
    return { ...view, screen: "waiting" };
  }
  return view;
}

export interface SubmitOutcome {
  view: ClientView;
  message: ClientMessage | null;
}

/** At most one decision leaves the client per round. */
export function submitDecision(
  view: ClientView,
  distance: boolean
): SubmitOutcome {
  if (view.screen !== "decision" || view.submitted !== null) {
    return { view, message: null };
  }
  return {
    view: { ...view, submitted: distance },
    message: { type: "submit_decision", distance },
  };
}

export function joinMessage(
  name: string,
  resumeToken: string | null
): ClientMessage {
  return resumeToken
    ? { type: "join", name, resume_token: resumeToken }
    : { type: "join", name };
}
