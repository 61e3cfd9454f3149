// WebSocket wrapper with automatic reconnect. On a drop the client comes
// back as a plain observer until the server assigns a role again.

import { parseServerMessage, type ServerMessage } from "./protocol.js";

export interface SocketCallbacks {
  onOpen(): void;
  onClose(): void;
  onMessage(msg: ServerMessage): void;
}

export class SessionSocket {
  private ws: WebSocket | null = null;
  private closedByUser = false;
  private retryMs = 500;

  constructor(
    private readonly url: string,
    private readonly callbacks: SocketCallbacks,
  ) {}

  connect(): void {
    this.closedByUser = false;
    this.open();
  }

  private open(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.addEventListener("open", () => {
      this.retryMs = 500;
      this.callbacks.onOpen();
    });
    ws.addEventListener("message", (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg !== null) this.callbacks.onMessage(msg);
    });
    ws.addEventListener("close", () => {
      this.ws = null;
      this.callbacks.onClose();
      if (!this.closedByUser) {
        setTimeout(() => this.open(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 5000);
      }
    });
    ws.addEventListener("error", () => ws.close());
  }

  send(msg: object): boolean {
    if (this.ws === null || this.ws.readyState !== WebSocket.OPEN) return false;
    this.ws.send(JSON.stringify(msg));
    return true;
  }

  close(): void {
    this.closedByUser = true;
    this.ws?.close();
  }
}
