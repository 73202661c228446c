/** Websocket wrapper: JSON frames, automatic reconnect with resume token. */

import type { ClientMessage, ServerMessage } from "./protocol.js";
import { isServerMessage } from "./protocol.js";

export interface SocketHooks {
  onMessage: (message: ServerMessage) => void;
  onOpen: () => void;
  onClose: () => void;
  resumeToken: () => string | null;
  participantName: () => string;
}

const RECONNECT_DELAY_MS = 1500;

export class SessionSocket {
  private ws: WebSocket | null = null;
  private closed = false;

  constructor(private url: string, private hooks: SocketHooks) {}

  connect(): void {
    if (this.closed) return;
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.addEventListener("open", () => {
      this.hooks.onOpen();
      const token = this.hooks.resumeToken();
      const join: ClientMessage = token
        ? { type: "join", name: this.hooks.participantName(), resume_token: token }
        : { type: "join", name: this.hooks.participantName() };
      ws.send(JSON.stringify(join));
    });
    ws.addEventListener("message", (event) => {
      let parsed: unknown;
      try {
        parsed = JSON.parse(String(event.data));
      } catch {
        return;
      }
      if (isServerMessage(parsed)) this.hooks.onMessage(parsed);
    });
    ws.addEventListener("close", () => {
      this.hooks.onClose();
      if (!this.closed) {
        setTimeout(() => this.connect(), RECONNECT_DELAY_MS);
      }
    });
  }

  send(message: ClientMessage): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(message));
    }
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
