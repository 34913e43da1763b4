/**
 * Bridge connection with automatic reconnect and exponential backoff.
 *
 * Injection of an utterance is the only mutating command the console can
 * issue; everything else is read-only observation of the event stream.
 */

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientHooks {
  onEvent: (raw: string) => void;
  onStatus: (status: "connecting" | "open" | "retrying", detail?: string) => void;
}

const INITIAL_BACKOFF_MS = 500;
const MAX_BACKOFF_MS = 10_000;

export class BridgeClient {
  private socket: SocketLike | null = null;
  private backoff = INITIAL_BACKOFF_MS;
  private closed = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private hooks: ClientHooks,
    private factory: SocketFactory,
  ) {}

  connect(): void {
    if (this.closed) {
      return;
    }
    this.hooks.onStatus("connecting");
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoff = INITIAL_BACKOFF_MS;
      this.hooks.onStatus("open");
    };
    socket.onmessage = (ev) => {
      this.hooks.onEvent(String(ev.data));
    };
    socket.onerror = () => {
      /* the close handler schedules the retry */
    };
    socket.onclose = () => {
      if (this.closed) {
        return;
      }
      this.hooks.onStatus("retrying", `retrying in ${this.backoff}ms`);
      this.timer = setTimeout(() => this.connect(), this.backoff);
      this.backoff = Math.min(this.backoff * 2, MAX_BACKOFF_MS);
    };
  }

  sendUtterance(text: string): void {
    if (!this.socket) {
      throw new Error("not connected");
    }
    this.socket.send(JSON.stringify({ type: "utterance", text }));
  }

  requestState(): void {
    if (!this.socket) {
      throw new Error("not connected");
    }
    this.socket.send(JSON.stringify({ type: "get_state" }));
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    if (this.socket) {
      this.socket.close();
    }
  }
}
