/**
 * Websocket client for the gridmesh broker.
 *
 * The broker replies with exactly one frame per command, in order, so
 * pending requests form a FIFO of resolvers. The socket is anything with
 * the browser WebSocket shape; the Node `ws` package matches it too,
 * which is what the test suite uses.
 */

import {
  Frame,
  decodeFrameBytes,
  encodeFrame,
  frame,
} from "./frames.js";
import { NamedValues, Value, vint } from "./values.js";

export const PROTO_VERSION = 1;

export interface WireSocket {
  binaryType: string;
  readyState: number;
  send(data: Uint8Array): void;
  close(): void;
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: ArrayBuffer | Uint8Array }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
}

export class ServerError extends Error {
  constructor(public code: string, message: string, public extra: Record<string, unknown> = {}) {
    super(`${code}: ${message}`);
  }
}

export class UnknownGroup extends ServerError {
  constructor(message: string, public groups: string[]) {
    super("unknown_group", message);
  }
}

export class ConnectionLost extends Error {}

export interface GroupInfo {
  members: number;
  lastSeq: number;
}

export class WorkspaceClient {
  sessionId = -1;
  /** Latest value per variable, merged across sync replies. */
  readonly workspace = new Map<string, Value>();
  onDisconnect: (() => void) | null = null;

  private pending: { resolve: (f: Frame) => void; reject: (e: Error) => void }[] = [];
  private closed = false;

  private constructor(private sock: WireSocket) {}

  static async connect(sock: WireSocket): Promise<WorkspaceClient> {
    const c = new WorkspaceClient(sock);
    sock.binaryType = "arraybuffer";
    if (sock.readyState === 0) {
      await new Promise<void>((resolve, reject) => {
        sock.onopen = () => resolve();
        sock.onerror = (e) => reject(new ConnectionLost(String(e)));
      });
    }
    sock.onmessage = (ev) => c.handleMessage(ev.data);
    sock.onclose = () => c.handleClose();
    sock.onerror = () => c.handleClose();
    const reply = await c.request(frame("hello", { proto: PROTO_VERSION }));
    if (reply.cmd !== "ok") {
      sock.close();
      throw new ServerError(String(reply.headers.code ?? "?"), String(reply.headers.message ?? ""));
    }
    c.sessionId = Number(reply.headers.session);
    return c;
  }

  private handleMessage(data: ArrayBuffer | Uint8Array) {
    const bytes = data instanceof Uint8Array ? data : new Uint8Array(data);
    let f: Frame;
    try {
      f = decodeFrameBytes(bytes);
    } catch (e) {
      this.failAll(new ConnectionLost(`undecodable frame: ${e}`));
      this.sock.close();
      return;
    }
    const p = this.pending.shift();
    if (p) p.resolve(f);
  }

  private handleClose() {
    if (this.closed) return;
    this.closed = true;
    this.failAll(new ConnectionLost("connection closed"));
    this.onDisconnect?.();
  }

  private failAll(e: Error) {
    const ps = this.pending;
    this.pending = [];
    for (const p of ps) p.reject(e);
  }

  private request(f: Frame): Promise<Frame> {
    if (this.closed) return Promise.reject(new ConnectionLost("connection closed"));
    const done = new Promise<Frame>((resolve, reject) => {
      this.pending.push({ resolve, reject });
    });
    this.sock.send(encodeFrame(f));
    return done;
  }

  private async command(f: Frame): Promise<Frame> {
    const reply = await this.request(f);
    if (reply.cmd === "err") {
      const code = String(reply.headers.code ?? "?");
      const message = String(reply.headers.message ?? "");
      if (code === "unknown_group") {
        throw new UnknownGroup(message, (reply.headers.groups as string[]) ?? []);
      }
      throw new ServerError(code, message, reply.headers);
    }
    return reply;
  }

  async join(groups: string[]): Promise<void> {
    await this.command(frame("join", { groups }));
  }

  async leave(groups: string[]): Promise<void> {
    await this.command(frame("leave", { groups }));
  }

  async send(groups: string[], pairs: NamedValues): Promise<void> {
    await this.command(frame("send", { groups }, pairs));
  }

  async broadcast(pairs: NamedValues): Promise<void> {
    await this.command(frame("broadcast", {}, pairs));
  }

  /** Pull pending updates into the workspace; returns them in sync order. */
  async sync(maxN = -1): Promise<NamedValues> {
    const reply = await this.command(frame("sync", { n: maxN }));
    for (const [name, v] of reply.payload) this.workspace.set(name, v);
    return reply.payload;
  }

  /** True when updates are pending; timeoutMs < 0 waits indefinitely. */
  async wait(timeoutMs = -1): Promise<boolean> {
    const reply = await this.command(frame("wait", { timeout_ms: timeoutMs }));
    return Boolean(reply.headers.pending);
  }

  async listGroups(): Promise<Map<string, GroupInfo>> {
    const reply = await this.command(frame("list"));
    const out = new Map<string, GroupInfo>();
    for (const [name, v] of reply.payload) {
      if (v.kind !== "list" || v.items.length !== 2) continue;
      const [members, lastSeq] = v.items;
      if (members.kind !== "int" || lastSeq.kind !== "int") continue;
      out.set(name, { members: Number(members.v), lastSeq: Number(lastSeq.v) });
    }
    return out;
  }

  async close(): Promise<void> {
    if (this.closed) return;
    this.closed = true;
    try {
      this.sock.send(encodeFrame(frame("bye")));
    } catch {
      // already gone
    }
    this.sock.close();
  }
}

// re-export for callers that only import the client module
export { vint };
