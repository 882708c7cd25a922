/**
 * Binary value codec for the gridmesh wire protocol.
 *
 * Layout (all integers/floats little-endian): tag byte, then per kind:
 *   0x00 null, 0x01 bool (1 byte), 0x02 int64, 0x03 float64,
 *   0x04 complex128 (re, im), 0x05 string (u32 length + UTF-8),
 *   0x06 ndarray (elem tag, dim count 1..8, u32 extents, row-major data),
 *   0x07 list (u32 count + values), 0x08 map (u32 count + key/value pairs,
 *   keys encoded as strings).
 *
 * Doubles carry their exact bit pattern so NaN payloads and -0.0 survive a
 * round trip even though JS canonicalizes NaN at the number level.
 */

export const TAG_NULL = 0x00;
export const TAG_BOOL = 0x01;
export const TAG_INT = 0x02;
export const TAG_DOUBLE = 0x03;
export const TAG_COMPLEX = 0x04;
export const TAG_STR = 0x05;
export const TAG_NDARRAY = 0x06;
export const TAG_LIST = 0x07;
export const TAG_MAP = 0x08;

export const MAX_DEPTH = 32;
export const MAX_DIMS = 8;
export const MAX_ENCODED_SIZE = 2 ** 31 - 1;

export type ArrayElemTag = typeof TAG_INT | typeof TAG_DOUBLE | typeof TAG_COMPLEX;

export type Value =
  | { kind: "null" }
  | { kind: "bool"; v: boolean }
  | { kind: "int"; v: bigint }
  | { kind: "double"; bits: bigint }
  | { kind: "complex"; reBits: bigint; imBits: bigint }
  | { kind: "str"; v: string }
  | { kind: "array"; elem: ArrayElemTag; dims: number[]; data: Uint8Array }
  | { kind: "list"; items: Value[] }
  | { kind: "map"; pairs: [string, Value][] };

export type NamedValues = [string, Value][];

export class MalformedValue extends Error {}
export class BadValue extends Error {}

const f64buf = new DataView(new ArrayBuffer(8));

export function doubleBits(x: number): bigint {
  f64buf.setFloat64(0, x, true);
  return f64buf.getBigUint64(0, true);
}

export function bitsToDouble(bits: bigint): number {
  f64buf.setBigUint64(0, bits, true);
  return f64buf.getFloat64(0, true);
}

export const vnull: Value = { kind: "null" };
export const vbool = (v: boolean): Value => ({ kind: "bool", v });
export const vint = (v: bigint | number): Value => {
  const b = BigInt(v);
  if (b < -(2n ** 63n) || b >= 2n ** 63n) throw new BadValue("int out of 64-bit range");
  return { kind: "int", v: b };
};
export const vdouble = (v: number): Value => ({ kind: "double", bits: doubleBits(v) });
export const vcomplex = (re: number, im: number): Value => ({
  kind: "complex",
  reBits: doubleBits(re),
  imBits: doubleBits(im),
});
export const vstr = (v: string): Value => ({ kind: "str", v });
export const vlist = (items: Value[]): Value => ({ kind: "list", items });

export function vmap(pairs: [string, Value][]): Value {
  const seen = new Set<string>();
  for (const [k] of pairs) {
    if (seen.has(k)) throw new BadValue(`duplicate map key ${JSON.stringify(k)}`);
    seen.add(k);
  }
  return { kind: "map", pairs };
}

const ELEM_SIZE: Record<number, number> = {
  [TAG_INT]: 8,
  [TAG_DOUBLE]: 8,
  [TAG_COMPLEX]: 16,
};

export function varray(elem: ArrayElemTag, dims: number[], data: Uint8Array): Value {
  if (!(elem in ELEM_SIZE)) throw new BadValue(`bad array element tag ${elem}`);
  if (dims.length < 1 || dims.length > MAX_DIMS) throw new BadValue("dim count must be 1..8");
  let n = 1;
  for (const d of dims) {
    if (d < 0 || !Number.isInteger(d)) throw new BadValue("bad extent");
    n *= d;
  }
  if (data.byteLength !== n * ELEM_SIZE[elem]) {
    throw new BadValue(`data length ${data.byteLength} != ${n * ELEM_SIZE[elem]}`);
  }
  return { kind: "array", elem, dims: dims.slice(), data };
}

export function doublesArray(values: number[] | Float64Array, dims?: number[]): Value {
  const arr = values instanceof Float64Array ? values : Float64Array.from(values);
  // slice to a tight copy so the Uint8Array view covers exactly the data
  const bytes = new Uint8Array(arr.buffer.slice(arr.byteOffset, arr.byteOffset + arr.byteLength));
  return varray(TAG_DOUBLE, dims ?? [arr.length], bytes);
}

export function intsArray(values: number[], dims?: number[]): Value {
  const arr = BigInt64Array.from(values.map(BigInt));
  return varray(TAG_INT, dims ?? [values.length], new Uint8Array(arr.buffer));
}

/** Double array contents as plain numbers (NaN payloads collapse). */
export function arrayToNumbers(v: Value): number[] {
  if (v.kind !== "array") throw new BadValue("not an array");
  const dv = new DataView(v.data.buffer, v.data.byteOffset, v.data.byteLength);
  const out: number[] = [];
  if (v.elem === TAG_DOUBLE) {
    for (let i = 0; i < v.data.byteLength; i += 8) out.push(dv.getFloat64(i, true));
  } else if (v.elem === TAG_INT) {
    for (let i = 0; i < v.data.byteLength; i += 8) out.push(Number(dv.getBigInt64(i, true)));
  } else {
    throw new BadValue("complex array has no plain-number view");
  }
  return out;
}

export function valuesEqual(a: Value, b: Value): boolean {
  if (a.kind !== b.kind) return false;
  switch (a.kind) {
    case "null":
      return true;
    case "bool":
      return a.v === (b as typeof a).v;
    case "int":
      return a.v === (b as typeof a).v;
    case "double":
      return a.bits === (b as typeof a).bits;
    case "complex": {
      const o = b as typeof a;
      return a.reBits === o.reBits && a.imBits === o.imBits;
    }
    case "str":
      return a.v === (b as typeof a).v;
    case "array": {
      const o = b as typeof a;
      if (a.elem !== o.elem || a.dims.length !== o.dims.length) return false;
      if (a.dims.some((d, i) => d !== o.dims[i])) return false;
      if (a.data.byteLength !== o.data.byteLength) return false;
      for (let i = 0; i < a.data.byteLength; i++) if (a.data[i] !== o.data[i]) return false;
      return true;
    }
    case "list": {
      const o = b as typeof a;
      return a.items.length === o.items.length && a.items.every((x, i) => valuesEqual(x, o.items[i]));
    }
    case "map": {
      const o = b as typeof a;
      return (
        a.pairs.length === o.pairs.length &&
        a.pairs.every(([k, x], i) => k === o.pairs[i][0] && valuesEqual(x, o.pairs[i][1]))
      );
    }
  }
}

// ---------------------------------------------------------------------------
// Encoding

class Writer {
  buf = new Uint8Array(256);
  len = 0;
  private view = new DataView(this.buf.buffer);

  private ensure(extra: number) {
    if (this.len + extra <= this.buf.length) return;
    let cap = this.buf.length * 2;
    while (cap < this.len + extra) cap *= 2;
    const next = new Uint8Array(cap);
    next.set(this.buf.subarray(0, this.len));
    this.buf = next;
    this.view = new DataView(next.buffer);
  }

  u8(x: number) {
    this.ensure(1);
    this.buf[this.len++] = x;
  }

  u32(x: number) {
    this.ensure(4);
    this.view.setUint32(this.len, x, true);
    this.len += 4;
  }

  u64(x: bigint) {
    this.ensure(8);
    this.view.setBigUint64(this.len, x & 0xffffffffffffffffn, true);
    this.len += 8;
  }

  bytes(b: Uint8Array) {
    this.ensure(b.byteLength);
    this.buf.set(b, this.len);
    this.len += b.byteLength;
  }

  done(): Uint8Array {
    return this.buf.slice(0, this.len);
  }
}

const utf8enc = new TextEncoder();
const utf8dec = new TextDecoder("utf-8", { fatal: true });

function checkDepth(v: Value, depth: number) {
  if (v.kind === "list") {
    if (depth + 1 > MAX_DEPTH) throw new BadValue("nesting depth exceeds 32");
    for (const it of v.items) checkDepth(it, depth + 1);
  } else if (v.kind === "map") {
    if (depth + 1 > MAX_DEPTH) throw new BadValue("nesting depth exceeds 32");
    for (const [, it] of v.pairs) checkDepth(it, depth + 1);
  }
}

function encodeInto(v: Value, w: Writer) {
  switch (v.kind) {
    case "null":
      w.u8(TAG_NULL);
      break;
    case "bool":
      w.u8(TAG_BOOL);
      w.u8(v.v ? 1 : 0);
      break;
    case "int":
      w.u8(TAG_INT);
      w.u64(BigInt.asUintN(64, v.v));
      break;
    case "double":
      w.u8(TAG_DOUBLE);
      w.u64(v.bits);
      break;
    case "complex":
      w.u8(TAG_COMPLEX);
      w.u64(v.reBits);
      w.u64(v.imBits);
      break;
    case "str": {
      const raw = utf8enc.encode(v.v);
      w.u8(TAG_STR);
      w.u32(raw.byteLength);
      w.bytes(raw);
      break;
    }
    case "array":
      w.u8(TAG_NDARRAY);
      w.u8(v.elem);
      w.u8(v.dims.length);
      for (const d of v.dims) w.u32(d);
      w.bytes(v.data);
      break;
    case "list":
      w.u8(TAG_LIST);
      w.u32(v.items.length);
      for (const it of v.items) encodeInto(it, w);
      break;
    case "map":
      w.u8(TAG_MAP);
      w.u32(v.pairs.length);
      for (const [k, it] of v.pairs) {
        encodeInto(vstr(k), w);
        encodeInto(it, w);
      }
      break;
  }
}

export function encodeValue(v: Value): Uint8Array {
  checkDepth(v, 0);
  const w = new Writer();
  encodeInto(v, w);
  if (w.len > MAX_ENCODED_SIZE) throw new BadValue("encoded value exceeds 2^31-1 bytes");
  return w.done();
}

export function encodeNamedValues(pairs: NamedValues): Uint8Array {
  const seen = new Set<string>();
  for (const [name] of pairs) {
    if (name.length < 1 || seen.has(name)) {
      throw new BadValue(`duplicate or empty name ${JSON.stringify(name)}`);
    }
    seen.add(name);
  }
  const w = new Writer();
  w.u32(pairs.length);
  for (const [name, v] of pairs) {
    checkDepth(v, 0);
    const raw = utf8enc.encode(name);
    w.u32(raw.byteLength);
    w.bytes(raw);
    encodeInto(v, w);
  }
  if (w.len > MAX_ENCODED_SIZE) throw new BadValue("encoded payload exceeds 2^31-1 bytes");
  return w.done();
}

// ---------------------------------------------------------------------------
// Decoding

class Reader {
  pos = 0;
  private view: DataView;

  constructor(public buf: Uint8Array) {
    this.view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  }

  take(n: number): Uint8Array {
    if (this.pos + n > this.buf.byteLength) throw new MalformedValue("truncated input");
    const out = this.buf.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  u8(): number {
    if (this.pos >= this.buf.byteLength) throw new MalformedValue("truncated input");
    return this.buf[this.pos++];
  }

  u32(): number {
    if (this.pos + 4 > this.buf.byteLength) throw new MalformedValue("truncated input");
    const x = this.view.getUint32(this.pos, true);
    this.pos += 4;
    return x;
  }

  u64(): bigint {
    if (this.pos + 8 > this.buf.byteLength) throw new MalformedValue("truncated input");
    const x = this.view.getBigUint64(this.pos, true);
    this.pos += 8;
    return x;
  }
}

function decodeOne(r: Reader, depth: number): Value {
  const tag = r.u8();
  switch (tag) {
    case TAG_NULL:
      return vnull;
    case TAG_BOOL: {
      const b = r.u8();
      if (b !== 0 && b !== 1) throw new MalformedValue("bad bool byte");
      return vbool(b === 1);
    }
    case TAG_INT:
      return { kind: "int", v: BigInt.asIntN(64, r.u64()) };
    case TAG_DOUBLE:
      return { kind: "double", bits: r.u64() };
    case TAG_COMPLEX:
      return { kind: "complex", reBits: r.u64(), imBits: r.u64() };
    case TAG_STR: {
      const n = r.u32();
      try {
        return vstr(utf8dec.decode(r.take(n)));
      } catch {
        throw new MalformedValue("invalid UTF-8 in string");
      }
    }
    case TAG_NDARRAY: {
      const elem = r.u8();
      if (!(elem in ELEM_SIZE)) throw new MalformedValue(`bad array element tag ${elem}`);
      const ndims = r.u8();
      if (ndims < 1 || ndims > MAX_DIMS) throw new MalformedValue("dim count out of 1..8");
      const dims: number[] = [];
      let n = 1;
      for (let i = 0; i < ndims; i++) {
        const d = r.u32();
        dims.push(d);
        n *= d;
      }
      const data = r.take(n * ELEM_SIZE[elem]).slice();
      return { kind: "array", elem: elem as ArrayElemTag, dims, data };
    }
    case TAG_LIST: {
      if (depth + 1 > MAX_DEPTH) throw new MalformedValue("nesting depth exceeds 32");
      const n = r.u32();
      const items: Value[] = [];
      for (let i = 0; i < n; i++) items.push(decodeOne(r, depth + 1));
      return vlist(items);
    }
    case TAG_MAP: {
      if (depth + 1 > MAX_DEPTH) throw new MalformedValue("nesting depth exceeds 32");
      const n = r.u32();
      const pairs: [string, Value][] = [];
      for (let i = 0; i < n; i++) {
        const k = decodeOne(r, depth + 1);
        if (k.kind !== "str") throw new MalformedValue("map key is not a string");
        pairs.push([k.v, decodeOne(r, depth + 1)]);
      }
      try {
        return vmap(pairs);
      } catch (e) {
        throw new MalformedValue(String(e));
      }
    }
    default:
      throw new MalformedValue(`unknown tag ${tag}`);
  }
}

export function decodeValue(data: Uint8Array): [Value, number] {
  if (data.byteLength === 0) throw new MalformedValue("empty input");
  const r = new Reader(data);
  const v = decodeOne(r, 0);
  return [v, r.pos];
}

export function decodeNamedValues(data: Uint8Array): NamedValues {
  const r = new Reader(data);
  const n = r.u32();
  const pairs: NamedValues = [];
  const seen = new Set<string>();
  for (let i = 0; i < n; i++) {
    const ln = r.u32();
    let name: string;
    try {
      name = utf8dec.decode(r.take(ln));
    } catch {
      throw new MalformedValue("invalid UTF-8 in name");
    }
    if (name.length < 1 || seen.has(name)) {
      throw new MalformedValue(`duplicate or empty name ${JSON.stringify(name)}`);
    }
    seen.add(name);
    pairs.push([name, decodeOne(r, 0)]);
  }
  if (r.pos !== data.byteLength) throw new MalformedValue("trailing bytes after payload");
  return pairs;
}
