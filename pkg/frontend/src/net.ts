// WebSocket client for the live service: strict decoding of everything the
// server sends, command sending, and automatic reconnect with capped
// exponential backoff.  The socket constructor is injected so tests (and the
// node-based scripted client) can supply their own implementation.

import { decodeServerMessage, encodeCommand } from "./protocol.js";
import type { ClientCommand, ServerMessage } from "./protocol.js";
import type { ConnectionStatus } from "./state.js";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  readyState: number;
  send(data: string): void;
  close(): void;
}

export const WS_OPEN = 1;

export type NetEvent =
  | { kind: "status"; status: ConnectionStatus }
  | { kind: "message"; msg: ServerMessage }
  | { kind: "protocol-error"; error: Error };

const BACKOFF_MS = [500, 1000, 2000, 5000];

export class TeleopSocket {
  private url: string;
  private makeSocket: (url: string) => WebSocketLike;
  private onEvent: (ev: NetEvent) => void;
  private setTimer: (fn: () => void, ms: number) => unknown;
  private socket: WebSocketLike | null = null;
  private attempts = 0;
  private stopped = false;

  constructor(
    url: string,
    onEvent: (ev: NetEvent) => void,
    makeSocket: (url: string) => WebSocketLike,
    setTimer: (fn: () => void, ms: number) => unknown = (fn, ms) => setTimeout(fn, ms),
  ) {
    this.url = url;
    this.onEvent = onEvent;
    this.makeSocket = makeSocket;
    this.setTimer = setTimer;
  }

  start(): void {
    this.stopped = false;
    this.connect("connecting");
  }

  stop(): void {
    this.stopped = true;
    if (this.socket !== null) this.socket.close();
    this.socket = null;
    this.onEvent({ kind: "status", status: "closed" });
  }

  /** Send a command; returns false (dropping it) when the socket is not open. */
  send(cmd: ClientCommand): boolean {
    if (this.socket === null || this.socket.readyState !== WS_OPEN) return false;
    this.socket.send(encodeCommand(cmd));
    return true;
  }

  get connected(): boolean {
    return this.socket !== null && this.socket.readyState === WS_OPEN;
  }

  private connect(status: "connecting" | "reconnecting"): void {
    if (this.stopped) return;
    this.onEvent({ kind: "status", status });
    const sock = this.makeSocket(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.attempts = 0;
      this.onEvent({ kind: "status", status: "connected" });
    };
    sock.onmessage = (ev) => {
      if (typeof ev.data !== "string") {
        this.onEvent({ kind: "protocol-error", error: new Error("binary frame from server") });
        return;
      }
      let msg: ServerMessage;
      try {
        msg = decodeServerMessage(ev.data);
      } catch (e) {
        this.onEvent({ kind: "protocol-error", error: e as Error });
        return;
      }
      this.onEvent({ kind: "message", msg });
    };
    sock.onerror = () => {
      // onclose always follows; reconnect is scheduled there
    };
    sock.onclose = () => {
      if (this.socket !== sock) return;
      this.socket = null;
      if (this.stopped) return;
      const wait = BACKOFF_MS[Math.min(this.attempts, BACKOFF_MS.length - 1)]!;
      this.attempts += 1;
      this.onEvent({ kind: "status", status: "reconnecting" });
      this.setTimer(() => this.connect("reconnecting"), wait);
    };
  }
}
