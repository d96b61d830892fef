// Reconnecting WebSocket client: exponential backoff, status reporting,
// and a session counter so a daemon restart resumes without a page reload.

export type ConnectionStatus = "connecting" | "connected" | "reconnecting" | "closed";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  send(data: string): void;
  close(): void;
  readyState: number;
}

export type WsFactory = (url: string) => WebSocketLike;

export interface ClientHandlers {
  onStatus?: (status: ConnectionStatus) => void;
  onMessage?: (data: string) => void;
  onOpen?: () => void;
}

export interface ClientOptions {
  backoffMs?: number;
  maxBackoffMs?: number;
  wsFactory?: WsFactory;
}

const WS_OPEN = 1;

export class ReconnectingClient {
  readonly url: string;
  status: ConnectionStatus = "closed";
  sessions = 0;

  private ws: WebSocketLike | null = null;
  private handlers: ClientHandlers;
  private backoffMs: number;
  private readonly baseBackoffMs: number;
  private readonly maxBackoffMs: number;
  private readonly factory: WsFactory;
  private closedByUser = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(url: string, handlers: ClientHandlers = {}, options: ClientOptions = {}) {
    this.url = url;
    this.handlers = handlers;
    this.baseBackoffMs = options.backoffMs ?? 500;
    this.maxBackoffMs = options.maxBackoffMs ?? 5000;
    this.backoffMs = this.baseBackoffMs;
    this.factory = options.wsFactory ?? ((u) => new WebSocket(u) as unknown as WebSocketLike);
  }

  connect(): void {
    this.closedByUser = false;
    this.setStatus(this.sessions === 0 ? "connecting" : "reconnecting");
    this.open();
  }

  close(): void {
    this.closedByUser = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.ws?.close();
    this.setStatus("closed");
  }

  send(message: object): boolean {
    if (this.ws !== null && this.ws.readyState === WS_OPEN) {
      this.ws.send(JSON.stringify(message));
      return true;
    }
    return false;
  }

  private open(): void {
    let ws: WebSocketLike;
    try {
      ws = this.factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.sessions += 1;
      this.backoffMs = this.baseBackoffMs;
      this.setStatus("connected");
      this.handlers.onOpen?.();
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data === "string") this.handlers.onMessage?.(ev.data);
      else this.handlers.onMessage?.(String(ev.data));
    };
    ws.onerror = () => {
      /* the close handler drives reconnection */
    };
    ws.onclose = () => {
      this.ws = null;
      if (!this.closedByUser) this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    this.setStatus("reconnecting");
    const delay = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, this.maxBackoffMs);
    this.timer = setTimeout(() => this.open(), delay);
  }

  private setStatus(status: ConnectionStatus): void {
    if (this.status !== status) {
      this.status = status;
      this.handlers.onStatus?.(status);
    }
  }
}
