"""Typed value universe and its canonical binary encoding.

Every datum exchanged between clients, the broker, and the tools is a
Value: null, bool, int64, float64, complex128, UTF-8 string, N-d array,
list, or ordered map.  The byte layout here is the single source of
truth for all transports; it must stay bit-exact.

Layout (all integers/floats little-endian):
    tag byte, then per kind:
      0x00 Null      --
      0x01 Bool      1 byte (0/1)
      0x02 Int       i64
      0x03 Double    f64
      0x04 Complex   f64 real, f64 imag
      0x05 Str       u32 byte length, UTF-8 bytes
      0x06 NDArray   elem tag (0x02/0x03/0x04), dim count (1..8),
                     u32 per extent, row-major elements
      0x07 List      u32 count, encoded elements
      0x08 Map       u32 count, (Str-encoded key, encoded value) pairs
"""

from __future__ import annotations

import struct

import numpy as np

TAG_NULL = 0x00
TAG_BOOL = 0x01
TAG_INT = 0x02
TAG_DOUBLE = 0x03
TAG_COMPLEX = 0x04
TAG_STR = 0x05
TAG_NDARRAY = 0x06
TAG_LIST = 0x07
TAG_MAP = 0x08

MAX_DEPTH = 32
MAX_DIMS = 8
MAX_ENCODED_SIZE = 2**31 - 1

_ARRAY_DTYPES = {
    TAG_INT: np.dtype("<i8"),
    TAG_DOUBLE: np.dtype("<f8"),
    TAG_COMPLEX: np.dtype("<c16"),
}

_U32 = struct.Struct("<I")
_I64 = struct.Struct("<q")
_F64 = struct.Struct("<d")
_C128 = struct.Struct("<dd")


class MalformedValue(Exception):
    """Raised on undecodable bytes; the connection must be aborted."""


class ValueError_(ValueError):
    """Invalid Value construction (bad dims, duplicate map keys, ...)."""


class Value:
    """Base class; concrete kinds below. Immutable by convention."""

    __slots__ = ()
    tag: int = -1

    def __ne__(self, other):
        return not self.__eq__(other)


class VNull(Value):
    __slots__ = ()
    tag = TAG_NULL

    def __eq__(self, other):
        return isinstance(other, VNull)

    def __hash__(self):
        return hash(TAG_NULL)

    def __repr__(self):
        return "VNull()"


NULL = VNull()


class VBool(Value):
    __slots__ = ("v",)
    tag = TAG_BOOL

    def __init__(self, v: bool):
        self.v = bool(v)

    def __eq__(self, other):
        return isinstance(other, VBool) and self.v == other.v

    def __hash__(self):
        return hash((TAG_BOOL, self.v))

    def __repr__(self):
        return f"VBool({self.v})"


class VInt(Value):
    __slots__ = ("v",)
    tag = TAG_INT

    def __init__(self, v: int):
        if not -(2**63) <= v < 2**63:
            raise ValueError_("int out of 64-bit signed range")
        self.v = int(v)

    def __eq__(self, other):
        return isinstance(other, VInt) and self.v == other.v

    def __hash__(self):
        return hash((TAG_INT, self.v))

    def __repr__(self):
        return f"VInt({self.v})"


class VDouble(Value):
    __slots__ = ("v",)
    tag = TAG_DOUBLE

    def __init__(self, v: float):
        self.v = float(v)

    def __eq__(self, other):
        # bitwise: NaN payloads and -0.0 are significant
        return isinstance(other, VDouble) and _F64.pack(self.v) == _F64.pack(other.v)

    def __hash__(self):
        return hash((TAG_DOUBLE, _F64.pack(self.v)))

    def __repr__(self):
        return f"VDouble({self.v!r})"


class VComplex(Value):
    __slots__ = ("re", "im")
    tag = TAG_COMPLEX

    def __init__(self, re: float, im: float):
        self.re = float(re)
        self.im = float(im)

    def __eq__(self, other):
        return isinstance(other, VComplex) and _C128.pack(
            self.re, self.im
        ) == _C128.pack(other.re, other.im)

    def __hash__(self):
        return hash((TAG_COMPLEX, _C128.pack(self.re, self.im)))

    def __repr__(self):
        return f"VComplex({self.re!r}, {self.im!r})"


class VStr(Value):
    __slots__ = ("v",)
    tag = TAG_STR

    def __init__(self, v: str):
        if not isinstance(v, str):
            raise ValueError_("VStr requires str")
        self.v = v

    def __eq__(self, other):
        return isinstance(other, VStr) and self.v == other.v

    def __hash__(self):
        return hash((TAG_STR, self.v))

    def __repr__(self):
        return f"VStr({self.v!r})"


class VArray(Value):
    """N-dimensional homogeneous array of int64, float64, or complex128.

    `data` is held as a contiguous little-endian numpy array of the flat
    row-major elements; `dims` is the shape (1..8 extents, each >= 0).
    """

    __slots__ = ("elem_tag", "dims", "data")
    tag = TAG_NDARRAY

    def __init__(self, elem_tag: int, dims, data):
        if elem_tag not in _ARRAY_DTYPES:
            raise ValueError_(f"bad array element tag {elem_tag:#x}")
        dims = tuple(int(d) for d in dims)
        if not 1 <= len(dims) <= MAX_DIMS:
            raise ValueError_("dim count must be 1..8")
        if any(d < 0 for d in dims):
            raise ValueError_("negative extent")
        n = 1
        for d in dims:
            n *= d
        arr = np.ascontiguousarray(data, dtype=_ARRAY_DTYPES[elem_tag]).reshape(-1)
        if arr.size != n:
            raise ValueError_(f"data length {arr.size} != product of dims {n}")
        self.elem_tag = elem_tag
        self.dims = dims
        self.data = arr

    def __eq__(self, other):
        return (
            isinstance(other, VArray)
            and self.elem_tag == other.elem_tag
            and self.dims == other.dims
            and self.data.tobytes() == other.data.tobytes()
        )

    def __hash__(self):
        return hash((TAG_NDARRAY, self.elem_tag, self.dims, self.data.tobytes()))

    def __repr__(self):
        return f"VArray(tag={self.elem_tag:#x}, dims={self.dims})"


def array_of_doubles(values, dims=None) -> VArray:
    arr = np.asarray(values, dtype="<f8")
    return VArray(TAG_DOUBLE, dims if dims is not None else arr.shape, arr)


def array_of_ints(values, dims=None) -> VArray:
    arr = np.asarray(values, dtype="<i8")
    return VArray(TAG_INT, dims if dims is not None else arr.shape, arr)


class VList(Value):
    __slots__ = ("items",)
    tag = TAG_LIST

    def __init__(self, items):
        items = tuple(items)
        for it in items:
            if not isinstance(it, Value):
                raise ValueError_("VList items must be Values")
        self.items = items

    def __eq__(self, other):
        return isinstance(other, VList) and self.items == other.items

    def __hash__(self):
        return hash((TAG_LIST, self.items))

    def __repr__(self):
        return f"VList({list(self.items)!r})"


class VMap(Value):
    """Insertion-ordered string-keyed map; keys unique."""

    __slots__ = ("pairs",)
    tag = TAG_MAP

    def __init__(self, pairs):
        pairs = tuple((k, v) for k, v in pairs)
        seen = set()
        for k, v in pairs:
            if not isinstance(k, str):
                raise ValueError_("VMap keys must be str")
            if not isinstance(v, Value):
                raise ValueError_("VMap values must be Values")
            if k in seen:
                raise ValueError_(f"duplicate map key {k!r}")
            seen.add(k)
        self.pairs = pairs

    def __eq__(self, other):
        return isinstance(other, VMap) and self.pairs == other.pairs

    def __hash__(self):
        return hash((TAG_MAP, self.pairs))

    def __repr__(self):
        return f"VMap({list(self.pairs)!r})"


def _check_depth(v: Value, depth: int) -> None:
    """depth = number of enclosing List/Map levels, self included."""
    if isinstance(v, VList):
        if depth + 1 > MAX_DEPTH:
            raise ValueError_("nesting depth exceeds 32")
        for it in v.items:
            _check_depth(it, depth + 1)
    elif isinstance(v, VMap):
        if depth + 1 > MAX_DEPTH:
            raise ValueError_("nesting depth exceeds 32")
        for _, it in v.pairs:
            _check_depth(it, depth + 1)


def _encode_into(v: Value, out: bytearray) -> None:
    if isinstance(v, VNull):
        out.append(TAG_NULL)
    elif isinstance(v, VBool):
        out.append(TAG_BOOL)
        out.append(1 if v.v else 0)
    elif isinstance(v, VInt):
        out.append(TAG_INT)
        out.extend(_I64.pack(v.v))
    elif isinstance(v, VDouble):
        out.append(TAG_DOUBLE)
        out.extend(_F64.pack(v.v))
    elif isinstance(v, VComplex):
        out.append(TAG_COMPLEX)
        out.extend(_C128.pack(v.re, v.im))
    elif isinstance(v, VStr):
        raw = v.v.encode("utf-8")
        out.append(TAG_STR)
        out.extend(_U32.pack(len(raw)))
        out.extend(raw)
    elif isinstance(v, VArray):
        out.append(TAG_NDARRAY)
        out.append(v.elem_tag)
        out.append(len(v.dims))
        for d in v.dims:
            out.extend(_U32.pack(d))
        out += memoryview(v.data).cast("B")  # contiguous by construction
    elif isinstance(v, VList):
        out.append(TAG_LIST)
        out.extend(_U32.pack(len(v.items)))
        for it in v.items:
            _encode_into(it, out)
    elif isinstance(v, VMap):
        out.append(TAG_MAP)
        out.extend(_U32.pack(len(v.pairs)))
        for k, it in v.pairs:
            _encode_into(VStr(k), out)
            _encode_into(it, out)
    else:
        raise ValueError_(f"not a Value: {v!r}")


def encode_value(v: Value) -> bytes:
    """Canonical binary encoding; equal values yield identical bytes."""
    _check_depth(v, 0)
    out = bytearray()
    _encode_into(v, out)
    if len(out) > MAX_ENCODED_SIZE:
        raise ValueError_("encoded value exceeds 2^31-1 bytes")
    return bytes(out)


class _Reader:
    __slots__ = ("buf", "pos")

    def __init__(self, buf, pos=0):
        self.buf = memoryview(buf)
        self.pos = pos

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.buf):
            raise MalformedValue("truncated input")
        mv = self.buf[self.pos : self.pos + n]
        self.pos += n
        return mv

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def u8(self) -> int:
        return self.take(1)[0]


def _decode(r: _Reader, depth: int) -> Value:
    """depth = number of enclosing List/Map levels."""
    tag = r.u8()
    if tag == TAG_NULL:
        return NULL
    if tag == TAG_BOOL:
        b = r.u8()
        if b not in (0, 1):
            raise MalformedValue("bad bool byte")
        return VBool(b == 1)
    if tag == TAG_INT:
        return VInt(_I64.unpack(r.take(8))[0])
    if tag == TAG_DOUBLE:
        v = VDouble.__new__(VDouble)
        v.v = _F64.unpack(r.take(8))[0]
        return v
    if tag == TAG_COMPLEX:
        re, im = _C128.unpack(r.take(16))
        v = VComplex.__new__(VComplex)
        v.re, v.im = re, im
        return v
    if tag == TAG_STR:
        n = r.u32()
        raw = r.take(n)
        try:
            return VStr(raw.tobytes().decode("utf-8"))
        except UnicodeDecodeError as e:
            raise MalformedValue("invalid UTF-8 in string") from e
    if tag == TAG_NDARRAY:
        elem_tag = r.u8()
        if elem_tag not in _ARRAY_DTYPES:
            raise MalformedValue(f"bad array element tag {elem_tag:#x}")
        ndims = r.u8()
        if not 1 <= ndims <= MAX_DIMS:
            raise MalformedValue("dim count out of 1..8")
        dims = tuple(r.u32() for _ in range(ndims))
        n = 1
        for d in dims:
            n *= d
        dtype = _ARRAY_DTYPES[elem_tag]
        raw = r.take(n * dtype.itemsize)
        data = np.frombuffer(raw, dtype=dtype)
        return VArray(elem_tag, dims, data)
    if tag == TAG_LIST:
        if depth + 1 > MAX_DEPTH:
            raise MalformedValue("nesting depth exceeds 32")
        n = r.u32()
        return VList(_decode(r, depth + 1) for _ in range(n))
    if tag == TAG_MAP:
        if depth + 1 > MAX_DEPTH:
            raise MalformedValue("nesting depth exceeds 32")
        n = r.u32()
        pairs = []
        for _ in range(n):
            k = _decode(r, depth + 1)
            if not isinstance(k, VStr):
                raise MalformedValue("map key is not a string")
            pairs.append((k.v, _decode(r, depth + 1)))
        try:
            return VMap(pairs)
        except ValueError_ as e:
            raise MalformedValue(str(e)) from e
    raise MalformedValue(f"unknown tag {tag:#x}")


def decode_value(data) -> tuple[Value, int]:
    """Decode one Value; returns (value, bytes consumed)."""
    if len(data) == 0:
        raise MalformedValue("empty input")
    r = _Reader(data)
    v = _decode(r, 0)
    return v, r.pos


# ---------------------------------------------------------------------------
# NamedValues: the unit of a send/broadcast/sync payload.

def check_names(pairs) -> None:
    seen = set()
    for name, v in pairs:
        if not isinstance(name, str) or len(name) < 1:
            raise ValueError_("variable names must be non-empty strings")
        if name in seen:
            raise ValueError_(f"duplicate variable name {name!r}")
        if not isinstance(v, Value):
            raise ValueError_("payload values must be Values")
        seen.add(name)


def encode_named_values_into(pairs, out: bytearray) -> None:
    """Append the encoding of an ordered (name, Value) sequence to out."""
    pairs = list(pairs)
    check_names(pairs)
    start = len(out)
    out.extend(_U32.pack(len(pairs)))
    for name, v in pairs:
        _check_depth(v, 0)
        raw = name.encode("utf-8")
        out.extend(_U32.pack(len(raw)))
        out.extend(raw)
        _encode_into(v, out)
    if len(out) - start > MAX_ENCODED_SIZE:
        raise ValueError_("encoded payload exceeds 2^31-1 bytes")


def encode_named_values(pairs) -> bytes:
    """Encode an ordered (name, Value) sequence with unique names."""
    out = bytearray()
    encode_named_values_into(pairs, out)
    return bytes(out)


def decode_named_values(data) -> list[tuple[str, Value]]:
    """Inverse of encode_named_values; rejects trailing bytes."""
    r = _Reader(data)
    n = r.u32()
    pairs = []
    seen = set()
    for _ in range(n):
        ln = r.u32()
        try:
            name = r.take(ln).tobytes().decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedValue("invalid UTF-8 in name") from e
        if name in seen or len(name) < 1:
            raise MalformedValue(f"duplicate or empty name {name!r}")
        seen.add(name)
        pairs.append((name, _decode(r, 0)))
    if r.pos != len(r.buf):
        raise MalformedValue("trailing bytes after payload")
    return pairs
