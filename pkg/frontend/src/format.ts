/** Small display helpers shared by the renderer and the tests. */

import type { HistoryEntry, ParamsDoc, PaymentDoc } from "./protocol.js";

export function formatPoints(points: number): string {
  const sign = points < 0 ? "−" : "";
  const magnitude = Math.abs(points);
  const text = Number.isInteger(magnitude)
    ? String(magnitude)
    : magnitude.toFixed(2);
  return `${sign}${text} points`;
}

export function formatDollars(amount: number): string {
  return `$${amount.toFixed(2)}`;
}

export function decisionLabel(decision: "yes" | "no" | "timeout"): string {
  if (decision === "yes") return "Yes";
  if (decision === "no") return "No";
  return "No (recorded automatically)";
}

export function outcomeLabel(infected: boolean): string {
  return infected ? "infected" : "healthy";
}

/** The four payoff lines shown on decision screens and fine briefings. */
export function payoffLines(params: ParamsDoc): string[] {
  const healthyFree = params.b - params.fine;
  const healthyDistanced = params.b - params.c;
  const sickFree = -params.fine;
  const sickDistanced = -params.c;
  return [
    `${formatPoints(healthyFree)}: no distancing, healthy`,
    `${formatPoints(healthyDistanced)}: distancing, healthy`,
    `${formatPoints(sickFree)}: no distancing, infected`,
    `${formatPoints(sickDistanced)}: distancing, infected`,
  ];
}

export function historyRows(history: HistoryEntry[]): string[][] {
  return history.map((entry) => [
    String(entry.round_in_part),
    decisionLabel(entry.decision),
    outcomeLabel(entry.infected),
    formatPoints(entry.points),
  ]);
}

export function paymentRows(payment: PaymentDoc): string[][] {
  const rows = payment.part_bonus.map((bonus, index) => [
    `Part ${index + 1} bonus (games ${payment.part_rounds[index].join(", ")})`,
    formatDollars(bonus),
  ]);
  rows.push(["Participation fee", formatDollars(payment.fee)]);
  rows.push(["Total", formatDollars(payment.total)]);
  return rows;
}
