/**
 * Command framing: magic "DMSG", u32 header length, u32 payload length,
 * compact JSON header (first key "cmd"), then an encoded named-value
 * payload. Over websockets each frame is exactly one binary message.
 */

import {
  NamedValues,
  decodeNamedValues,
  encodeNamedValues,
} from "./values.js";

export const MAGIC = [0x44, 0x4d, 0x53, 0x47]; // "DMSG"
export const MAX_HEADER = 64 * 1024;
export const MAX_PAYLOAD = 1024 ** 3;

export const COMMANDS = new Set([
  "hello",
  "ok",
  "err",
  "join",
  "leave",
  "send",
  "broadcast",
  "sync",
  "sync_reply",
  "wait",
  "notify",
  "list",
  "list_reply",
  "bye",
]);

export type Headers = Record<string, unknown>;

export interface Frame {
  cmd: string;
  headers: Headers;
  payload: NamedValues;
}

export class FrameError extends Error {}
export class BadMagic extends FrameError {}
export class MalformedHeader extends FrameError {}
export class OversizeFrame extends FrameError {}

export function frame(cmd: string, headers: Headers = {}, payload: NamedValues = []): Frame {
  if (!COMMANDS.has(cmd)) throw new MalformedHeader(`unknown command ${JSON.stringify(cmd)}`);
  return { cmd, headers, payload };
}

const utf8enc = new TextEncoder();
const utf8dec = new TextDecoder("utf-8", { fatal: true });

export function encodeFrame(f: Frame): Uint8Array {
  const header = utf8enc.encode(JSON.stringify({ cmd: f.cmd, ...f.headers }));
  if (header.byteLength > MAX_HEADER) throw new OversizeFrame("header exceeds 64 KiB");
  const payload = encodeNamedValues(f.payload);
  if (payload.byteLength > MAX_PAYLOAD) throw new OversizeFrame("payload exceeds 1 GiB");
  const out = new Uint8Array(12 + header.byteLength + payload.byteLength);
  const view = new DataView(out.buffer);
  out.set(MAGIC, 0);
  view.setUint32(4, header.byteLength, true);
  view.setUint32(8, payload.byteLength, true);
  out.set(header, 12);
  out.set(payload, 12 + header.byteLength);
  return out;
}

export class IncompleteFrame extends Error {
  constructor(public needed: number) {
    super(`need ${needed} bytes`);
  }
}

/** Decode one frame from the front of a buffer; returns [frame, consumed]. */
export function decodeFramePrefix(data: Uint8Array): [Frame, number] {
  if (data.byteLength < 12) throw new IncompleteFrame(12);
  for (let i = 0; i < 4; i++) {
    if (data[i] !== MAGIC[i]) throw new BadMagic("bad magic");
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const hlen = view.getUint32(4, true);
  const plen = view.getUint32(8, true);
  if (hlen > MAX_HEADER) throw new OversizeFrame("header exceeds 64 KiB");
  if (plen > MAX_PAYLOAD) throw new OversizeFrame("payload exceeds 1 GiB");
  const total = 12 + hlen + plen;
  if (data.byteLength < total) throw new IncompleteFrame(total);

  let obj: unknown;
  try {
    obj = JSON.parse(utf8dec.decode(data.subarray(12, 12 + hlen)));
  } catch (e) {
    throw new MalformedHeader(`header is not valid JSON: ${e}`);
  }
  if (typeof obj !== "object" || obj === null || !("cmd" in obj)) {
    throw new MalformedHeader("header missing cmd");
  }
  const { cmd, ...headers } = obj as { cmd: unknown } & Headers;
  if (typeof cmd !== "string" || !COMMANDS.has(cmd)) {
    throw new MalformedHeader(`unknown command ${JSON.stringify(cmd)}`);
  }
  const payload = decodeNamedValues(data.subarray(12 + hlen, total));
  return [{ cmd, headers, payload }, total];
}

/** Decode a complete byte string (one websocket message) into a frame. */
export function decodeFrameBytes(data: Uint8Array): Frame {
  const [f, used] = decodeFramePrefix(data);
  if (used !== data.byteLength) throw new MalformedHeader("trailing bytes after frame");
  return f;
}
