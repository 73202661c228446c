/** DOM renderer: draws the whole view into a root element on each update. */

import { networkSvg } from "./graph.js";
import {
  decisionLabel,
  formatPoints,
  historyRows,
  outcomeLabel,
  payoffLines,
  paymentRows,
} from "./format.js";
import type { ClientView } from "./state.js";

export interface Handlers {
  onDecision: (distance: boolean) => void;
  onContinue: () => void;
  onMediaComplete: () => void;
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function table(rows: string[][], headers: string[]): HTMLElement {
  const wrapper = document.createElement("table");
  const head = wrapper.createTHead().insertRow();
  headers.forEach((h) => {
    const cell = document.createElement("th");
    cell.textContent = h;
    head.appendChild(cell);
  });
  const body = wrapper.createTBody();
  rows.forEach((cells) => {
    const row = body.insertRow();
    cells.forEach((value) => {
      row.insertCell().textContent = value;
    });
  });
  return wrapper;
}

export function render(root: HTMLElement, view: ClientView, handlers: Handlers): void {
  root.textContent = "";
  const top = el("div", "topbar");
  if (view.countdownSeconds !== null) {
    top.appendChild(
      el("div", "countdown", `${view.countdownSeconds}s`)
    );
  }
  if (view.round > 0) {
    top.appendChild(
      el(
        "div",
        "roundinfo",
        `${view.part === "baseline" ? "Part 1" : "Part 2"} · game ` +
          `${view.roundInPart}/${view.roundsPerPart}`
      )
    );
  }
  root.appendChild(top);

  if (!view.connected && view.screen !== "connecting") {
    root.appendChild(
      el("div", "banner reconnect", "Connection lost — reconnecting…")
    );
  }
  if (view.errorBanner) {
    root.appendChild(el("div", "banner error", view.errorBanner));
  }

  const main = el("div", `screen screen-${view.screen}`);
  root.appendChild(main);

  switch (view.screen) {
    case "connecting":
      main.appendChild(el("p", "status", "Connecting to the session…"));
      break;
    case "lobby":
      main.appendChild(el("h2", "", "Waiting room"));
      main.appendChild(
        el(
          "p",
          "status",
          `Matching you with other participants… ` +
            `${view.seatsFilled}/${view.seatsTotal} seats filled`
        )
      );
      break;
    case "waiting":
      main.appendChild(el("p", "status", "Waiting for the next game…"));
      break;
    case "decision":
      renderDecision(main, view, handlers);
      break;
    case "result":
      renderResult(main, view);
      break;
    case "briefing":
      renderBriefing(main, view, handlers);
      break;
    case "payment":
      renderPayment(main, view);
      break;
    case "disqualified":
      main.appendChild(el("h2", "", "Disqualified"));
      main.appendChild(
        el(
          "p",
          "status",
          view.disqualifiedReason ?? "You were disqualified from the experiment."
        )
      );
      main.appendChild(
        el("p", "status", "You will not receive any payment for this experiment.")
      );
      break;
  }
}

function renderDecision(
  main: HTMLElement,
  view: ClientView,
  handlers: Handlers
): void {
  main.appendChild(el("h2", "", "Do you practice social distancing?"));
  const columns = el("div", "columns");
  const info = el("div", "info");
  if (view.params) {
    info.appendChild(
      el(
        "p",
        "",
        `Rate of contagiousness: ${(view.params.alpha * 100).toFixed(0)}%`
      )
    );
    const list = document.createElement("ul");
    payoffLines(view.params).forEach((line) => {
      const item = document.createElement("li");
      item.textContent = line;
      list.appendChild(item);
    });
    info.appendChild(list);
  }
  columns.appendChild(info);
  const diagram = el("div", "diagram");
  if (view.network) {
    diagram.innerHTML = networkSvg(view.network, view.position);
    const own =
      view.network.labels?.[view.position ?? -1] ?? String(view.position);
    diagram.appendChild(el("p", "own-position", `You are position ${own}`));
  }
  columns.appendChild(diagram);
  main.appendChild(columns);

  const buttons = el("div", "buttons");
  const yes = el("button", "yes", "Yes") as HTMLButtonElement;
  const no = el("button", "no", "No") as HTMLButtonElement;
  const locked = view.submitted !== null;
  yes.disabled = locked;
  no.disabled = locked;
  yes.addEventListener("click", () => handlers.onDecision(true));
  no.addEventListener("click", () => handlers.onDecision(false));
  buttons.appendChild(yes);
  buttons.appendChild(no);
  main.appendChild(buttons);
  if (locked) {
    main.appendChild(
      el(
        "p",
        "status",
        view.acked
          ? `Choice recorded: ${view.submitted ? "Yes" : "No"}`
          : "Submitting your choice…"
      )
    );
  }
}

function renderResult(main: HTMLElement, view: ClientView): void {
  const result = view.lastResult;
  if (!result) return;
  main.appendChild(el("h2", "", `Game ${result.roundInPart} result`));
  if (result.decision === "timeout") {
    main.appendChild(
      el(
        "div",
        "banner timeout",
        "You did not submit a choice: recorded as ‘No’ with a 200-point penalty"
      )
    );
  }
  main.appendChild(
    el(
      "p",
      "outcome",
      `Your choice: ${decisionLabel(result.decision)} · ` +
        `You are ${outcomeLabel(result.infected)} · ` +
        `${formatPoints(result.points)}`
    )
  );
  main.appendChild(el("h3", "", "Your last games"));
  main.appendChild(
    table(historyRows(result.history), ["Game", "Choice", "Outcome", "Points"])
  );
}

function renderBriefing(
  main: HTMLElement,
  view: ClientView,
  handlers: Handlers
): void {
  main.appendChild(el("h2", "", "Part 2 is about to begin"));
  if (view.interventionKind === "fine") {
    main.appendChild(
      el(
        "p",
        "",
        "From now on you receive a fine of 15 points in any game in which " +
          "you do not practice social distancing. Points per game are now:"
      )
    );
    const list = document.createElement("ul");
    if (view.params) {
      payoffLines({ ...view.params, fine: 15 }).forEach((line) => {
        const item = document.createElement("li");
        item.textContent = line;
        list.appendChild(item);
      });
    }
    main.appendChild(list);
  } else if (view.interventionKind === "nudge") {
    main.appendChild(
      el("p", "", "Please watch the short video before continuing.")
    );
    const video = el("div", "video-placeholder", "▶ video");
    video.addEventListener("click", handlers.onMediaComplete);
    main.appendChild(video);
  } else {
    main.appendChild(
      el(
        "div",
        "banner error",
        `Unknown intervention ${String(view.interventionKind)}; ` +
          "the session continues automatically."
      )
    );
  }
  const cont = el("button", "continue", "Continue") as HTMLButtonElement;
  cont.disabled = !view.briefingMediaDone;
  cont.addEventListener("click", handlers.onContinue);
  main.appendChild(cont);
}

function renderPayment(main: HTMLElement, view: ClientView): void {
  main.appendChild(el("h2", "", "Session complete"));
  if (!view.payment) return;
  main.appendChild(table(paymentRows(view.payment), ["Item", "Amount"]));
  if (view.payment.disqualified) {
    main.appendChild(
      el("p", "status", "Disqualified participants receive no payment.")
    );
  }
}
