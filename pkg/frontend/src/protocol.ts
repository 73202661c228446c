/** Message types exchanged with the session server (one JSON per frame). */

export interface NetworkDoc {
  node_count: number;
  edges: [number, number][];
  labels?: string[];
}

export interface ParamsDoc {
  b: number;
  c: number;
  gamma: number;
  alpha: number;
  fine: number;
}

export interface HistoryEntry {
  round_in_part: number;
  decision: "yes" | "no" | "timeout";
  infected: boolean;
  points: number;
}

export interface PaymentDoc {
  seat: number;
  disqualified: boolean;
  fee: number;
  part_rounds: number[][];
  part_points: number[];
  part_bonus: number[];
  total: number;
}

export type ServerMessage =
  | { type: "error"; code: string; message: string }
  | { type: "joined"; seat: number; resume_token: string }
  | { type: "lobby_update"; seats_filled: number; seats_total: number }
  | { type: "group_formed"; seats_total: number }
  | {
      type: "round_start";
      round: number;
      round_in_part: number;
      rounds_per_part: number;
      part: string;
      network: NetworkDoc;
      position: number;
      params: ParamsDoc;
      deadline_seconds: number;
    }
  | { type: "decision_ack"; round: number; distance: boolean }
  | {
      type: "round_result";
      round: number;
      round_in_part: number;
      part: string;
      decision: "yes" | "no" | "timeout";
      infected: boolean;
      points: number;
      history: HistoryEntry[];
      review_seconds: number;
    }
  | { type: "intervention_start"; kind: string; briefing_seconds: number }
  | { type: "disqualified"; reason: string }
  | { type: "session_end"; payment: PaymentDoc };

export type ClientMessage =
  | { type: "join"; name: string; resume_token?: string }
  | { type: "submit_decision"; distance: boolean };

export function isServerMessage(value: unknown): value is ServerMessage {
  return (
    typeof value === "object" &&
    value !== null &&
    typeof (value as { type?: unknown }).type === "string"
  );
}
