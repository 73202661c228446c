/** Entry point: wires the socket, the view reducer, and the renderer. */

import { SessionSocket } from "./net.js";
import { render } from "./render.js";
import {
  applyLocal,
  applyMessage,
  applyTick,
  connectionLost,
  connectionOpen,
  initialView,
  submitDecision,
} from "./state.js";

const TICK_MS = 200;

function serverUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("server");
  if (fromQuery) return fromQuery;
  const scheme = window.location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${window.location.host}/ws`;
}

function participantName(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("name");
  return fromQuery || `participant-${Math.floor(Math.random() * 1e6)}`;
}

function start(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  let view = initialView();
  const name = participantName();

  const redraw = () => render(root, view, handlers);

  const socket = new SessionSocket(serverUrl(), {
    onMessage: (message) => {
      view = applyMessage(view, message, Date.now());
      redraw();
    },
    onOpen: () => {
      view = connectionOpen(view);
      redraw();
    },
    onClose: () => {
      view = connectionLost(view);
      redraw();
    },
    resumeToken: () => view.resumeToken,
    participantName: () => name,
  });

  const handlers = {
    onDecision: (distance: boolean) => {
      const outcome = submitDecision(view, distance);
      view = outcome.view;
      if (outcome.message) socket.send(outcome.message);
      redraw();
    },
    onContinue: () => {
      view = applyLocal(view, { type: "continue" });
      redraw();
    },
    onMediaComplete: () => {
      view = applyLocal(view, { type: "media_complete" });
      redraw();
    },
  };

  window.setInterval(() => {
    const next = applyTick(view, Date.now());
    if (next !== view) {
      view = next;
      redraw();
    }
  }, TICK_MS);

  redraw();
  socket.connect();
}

start();
