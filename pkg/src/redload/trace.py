"""Event model and the binary / text encodings of memory-access traces.

A trace is a header, a source map, and a flat stream of per-thread events.
The binary form is canonical:

    magic   b"LRT1", version u16 (=1), all integers little-endian
    source map:
        u32 site_count, then per site:  u32 id, str function, str file, u32 line
        u32 loop_count, then per loop:  u32 id, str file, u32 line
        (str = u16 byte length + UTF-8 bytes)
    events until EOF, one record each:
        u8 kind, u32 thread_id, u64 ins_index, kind-specific payload

The text form (one event per line, strings percent-encoded) exists for
golden-file tests and debugging; see docs/trace-format.md for both layouts.
"""

import struct
from dataclasses import dataclass, field
from urllib.parse import quote, unquote

from .errors import TraceDecodeError, TraceEncodeError

MAGIC = b"LRT1"
VERSION = 1

# Event kinds (u8 tags in the binary encoding).
LOAD = 1
CALL = 2
RETURN = 3
LOOPHEAD = 4
ALLOC = 5
FREE = 6
STATIC_IMAGE = 7
THREAD_START = 8

KIND_NAMES = {
    LOAD: "load",
    CALL: "call",
    RETURN: "return",
    LOOPHEAD: "loophead",
    ALLOC: "alloc",
    FREE: "free",
    STATIC_IMAGE: "static_image",
    THREAD_START: "thread_start",
}

# Floating-point classes of a load.
NONFP = 0
F32 = 1
F64 = 2

FP_NAMES = {NONFP: "nonfp", F32: "f32", F64: "f64"}
FP_BY_NAME = {v: k for k, v in FP_NAMES.items()}

LOAD_SIZES = frozenset((1, 2, 4, 8, 16, 32))


@dataclass(slots=True)
class TraceEvent:
    """One runtime occurrence; only the fields for its kind are set."""

    kind: int
    thread_id: int
    ins_index: int
    addr: int = 0
    size: int = 0
    value: bytes = b""
    fp_class: int = NONFP
    site_id: int = 0
    loop_id: int = 0
    base: int = 0
    alloc_size: int = 0
    objects: tuple = ()  # StaticImage: tuple of (name, base, size)


@dataclass
class SourceMap:
    """Resolves static identifiers to source locations.

    sites: site_id -> (function, file, line); loops: loop_id -> (file, line).
    """

    sites: dict = field(default_factory=dict)
    loops: dict = field(default_factory=dict)

    def add_site(self, site_id, function, file, line):
        self.sites[site_id] = (function, file, line)

    def add_loop(self, loop_id, file, line):
        self.loops[loop_id] = (file, line)

    def site(self, site_id):
        return self.sites[site_id]

    def loop(self, loop_id):
        return self.loops[loop_id]


def load_event(thread_id, ins_index, addr, value, fp_class=NONFP, site_id=0):
    return TraceEvent(LOAD, thread_id, ins_index, addr=addr, size=len(value),
                      value=bytes(value), fp_class=fp_class, site_id=site_id)


_HDR = struct.Struct("<IQ")          # thread_id, ins_index
_LOAD_FIXED = struct.Struct("<QBBI")  # addr, size, fp_class, site_id
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_2U32 = struct.Struct("<II")
_2U64 = struct.Struct("<QQ")
_U16 = struct.Struct("<H")


def _check_event(ev, index, state, source_map):
    """Validate one event against the format invariants.

    `state` carries per-thread (last ins_index, open call depth) so a single
    streaming pass can enforce ordering and balance.
    """
    tid = ev.thread_id
    last_ins, depth = state.get(tid, (-1, 0))
    if ev.ins_index <= last_ins:
        raise TraceEncodeError(
            f"ins_index {ev.ins_index} not increasing in thread {tid}", index)
    kind = ev.kind
    if kind == LOAD:
        if ev.size not in LOAD_SIZES:
            raise TraceEncodeError(f"bad load size {ev.size}", index)
        if len(ev.value) != ev.size:
            raise TraceEncodeError(
                f"value has {len(ev.value)} bytes, size says {ev.size}", index)
        if ev.fp_class == F32 and ev.size % 4:
            raise TraceEncodeError("F32 load size not a multiple of 4", index)
        if ev.fp_class == F64 and ev.size % 8:
            raise TraceEncodeError("F64 load size not a multiple of 8", index)
        if ev.fp_class not in FP_NAMES:
            raise TraceEncodeError(f"unknown fp_class {ev.fp_class}", index)
        if source_map is not None and ev.site_id not in source_map.sites:
            raise TraceEncodeError(f"unresolved site_id {ev.site_id}", index)
    elif kind == CALL:
        depth += 1
        if source_map is not None and ev.site_id not in source_map.sites:
            raise TraceEncodeError(f"unresolved site_id {ev.site_id}", index)
    elif kind == RETURN:
        if depth == 0:
            raise TraceEncodeError(
                f"return with no open call in thread {tid}", index)
        depth -= 1
        if source_map is not None and ev.site_id not in source_map.sites:
            raise TraceEncodeError(f"unresolved site_id {ev.site_id}", index)
    elif kind == LOOPHEAD:
        if source_map is not None:
            if ev.loop_id not in source_map.loops:
                raise TraceEncodeError(
                    f"unresolved loop_id {ev.loop_id}", index)
            if ev.site_id not in source_map.sites:
                raise TraceEncodeError(
                    f"unresolved site_id {ev.site_id}", index)
    elif kind not in KIND_NAMES:
        raise TraceEncodeError(f"unknown event kind {kind}", index)
    state[tid] = (ev.ins_index, depth)


def write_trace(events, source_map, sink):
    """Encode events to `sink` (binary stream); returns bytes written.

    Raises TraceEncodeError naming the offending event index when an
    invariant is violated.
    """
    written = 0

    def put(b):
        nonlocal written
        sink.write(b)
        written += len(b)

    def put_str(s):
        raw = s.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise TraceEncodeError(f"string too long ({len(raw)} bytes)")
        put(_U16.pack(len(raw)))
        put(raw)

    put(MAGIC)
    put(_U16.pack(VERSION))

    put(_U32.pack(len(source_map.sites)))
    for site_id in sorted(source_map.sites):
        function, file, line = source_map.sites[site_id]
        put(_U32.pack(site_id))
        put_str(function)
        put_str(file)
        put(_U32.pack(line))
    put(_U32.pack(len(source_map.loops)))
    for loop_id in sorted(source_map.loops):
        file, line = source_map.loops[loop_id]
        put(_U32.pack(loop_id))
        put_str(file)
        put(_U32.pack(line))

    state = {}
    for index, ev in enumerate(events):
        _check_event(ev, index, state, source_map)
        put(bytes((ev.kind,)))
        put(_HDR.pack(ev.thread_id, ev.ins_index))
        kind = ev.kind
        if kind == LOAD:
            put(_LOAD_FIXED.pack(ev.addr, ev.size, ev.fp_class, ev.site_id))
            put(ev.value)
        elif kind == CALL or kind == RETURN:
            put(_U32.pack(ev.site_id))
        elif kind == LOOPHEAD:
            put(_2U32.pack(ev.loop_id, ev.site_id))
        elif kind == ALLOC:
            put(_2U64.pack(ev.base, ev.alloc_size))
        elif kind == FREE:
            put(_U64.pack(ev.base))
        elif kind == STATIC_IMAGE:
            put(_U32.pack(len(ev.objects)))
            for name, base, size in ev.objects:
                put_str(name)
                put(_2U64.pack(base, size))
        # THREAD_START has no payload
    return written


class _Reader:
    """Buffered reader over a binary stream with absolute offsets."""

    CHUNK = 1 << 20

    def __init__(self, stream):
        self.stream = stream
        self.buf = b""
        self.pos = 0       # consumed within buf
        self.offset = 0    # absolute offset of next unread byte

    def take(self, n, record_start):
        while len(self.buf) - self.pos < n:
            chunk = self.stream.read(self.CHUNK)
            if not chunk:
                raise TraceDecodeError("truncated record", record_start)
            self.buf = self.buf[self.pos:] + chunk
            self.pos = 0
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        self.offset += n
        return out

    def at_eof(self):
        if self.pos < len(self.buf):
            return False
        chunk = self.stream.read(self.CHUNK)
        if not chunk:
            return True
        self.buf = chunk
        self.pos = 0
        return False


def _read_str(r, record_start):
    (n,) = _U16.unpack(r.take(2, record_start))
    raw = r.take(n, record_start)
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        raise TraceDecodeError("invalid UTF-8 in string", record_start) from None


def read_trace(source):
    """Decode a binary trace; returns (event iterator, SourceMap).

    The header and source map are read eagerly; events stream lazily with
    memory bounded independent of trace length. Raises TraceDecodeError with
    a byte offset on bad magic, truncation, or an unknown event kind.
    """
    r = _Reader(source)
    magic = r.take(4, 0) if not r.at_eof() else b""
    if magic != MAGIC:
        raise TraceDecodeError(f"bad magic {magic!r}", 0)
    (version,) = _U16.unpack(r.take(2, 0))
    if version != VERSION:
        raise TraceDecodeError(f"unsupported version {version}", 4)

    source_map = SourceMap()
    map_start = r.offset
    (n_sites,) = _U32.unpack(r.take(4, map_start))
    for _ in range(n_sites):
        (site_id,) = _U32.unpack(r.take(4, map_start))
        function = _read_str(r, map_start)
        file = _read_str(r, map_start)
        (line,) = _U32.unpack(r.take(4, map_start))
        source_map.add_site(site_id, function, file, line)
    (n_loops,) = _U32.unpack(r.take(4, map_start))
    for _ in range(n_loops):
        (loop_id,) = _U32.unpack(r.take(4, map_start))
        file = _read_str(r, map_start)
        (line,) = _U32.unpack(r.take(4, map_start))
        source_map.add_loop(loop_id, file, line)

    def events():
        while not r.at_eof():
            rec_start = r.offset
            kind = r.take(1, rec_start)[0]
            thread_id, ins_index = _HDR.unpack(r.take(12, rec_start))
            if kind == LOAD:
                addr, size, fp_class, site_id = _LOAD_FIXED.unpack(
                    r.take(14, rec_start))
                if size not in LOAD_SIZES:
                    raise TraceDecodeError(f"bad load size {size}", rec_start)
                if fp_class not in FP_NAMES:
                    raise TraceDecodeError(
                        f"bad fp_class {fp_class}", rec_start)
                value = r.take(size, rec_start)
                yield TraceEvent(LOAD, thread_id, ins_index, addr=addr,
                                 size=size, value=value, fp_class=fp_class,
                                 site_id=site_id)
            elif kind == CALL or kind == RETURN:
                (site_id,) = _U32.unpack(r.take(4, rec_start))
                yield TraceEvent(kind, thread_id, ins_index, site_id=site_id)
            elif kind == LOOPHEAD:
                loop_id, site_id = _2U32.unpack(r.take(8, rec_start))
                yield TraceEvent(LOOPHEAD, thread_id, ins_index,
                                 loop_id=loop_id, site_id=site_id)
            elif kind == ALLOC:
                base, size = _2U64.unpack(r.take(16, rec_start))
                yield TraceEvent(ALLOC, thread_id, ins_index, base=base,
                                 alloc_size=size)
            elif kind == FREE:
                (base,) = _U64.unpack(r.take(8, rec_start))
                yield TraceEvent(FREE, thread_id, ins_index, base=base)
            elif kind == STATIC_IMAGE:
                (count,) = _U32.unpack(r.take(4, rec_start))
                objs = []
                for _ in range(count):
                    name = _read_str(r, rec_start)
                    base, size = _2U64.unpack(r.take(16, rec_start))
                    objs.append((name, base, size))
                yield TraceEvent(STATIC_IMAGE, thread_id, ins_index,
                                 objects=tuple(objs))
            elif kind == THREAD_START:
                yield TraceEvent(THREAD_START, thread_id, ins_index)
            else:
                raise TraceDecodeError(f"unknown event kind {kind}", rec_start)

    return events(), source_map


TEXT_HEADER = "LRT1 1"


def write_text_trace(events, source_map, sink):
    """One event per line; strings percent-encoded. For debugging and
    golden-file tests; the binary format is canonical."""
    w = sink.write
    w(TEXT_HEADER + "\n")
    for site_id in sorted(source_map.sites):
        function, file, line = source_map.sites[site_id]
        w(f"site {site_id} {quote(function, safe='')} {quote(file, safe='')} {line}\n")
    for loop_id in sorted(source_map.loops):
        file, line = source_map.loops[loop_id]
        w(f"loopsite {loop_id} {quote(file, safe='')} {line}\n")
    state = {}
    for index, ev in enumerate(events):
        _check_event(ev, index, state, source_map)
        k = ev.kind
        if k == LOAD:
            w(f"L {ev.thread_id} {ev.ins_index} 0x{ev.addr:x} {ev.size} "
              f"{ev.value.hex()} {FP_NAMES[ev.fp_class]} {ev.site_id}\n")
        elif k == CALL:
            w(f"C {ev.thread_id} {ev.ins_index} {ev.site_id}\n")
        elif k == RETURN:
            w(f"R {ev.thread_id} {ev.ins_index} {ev.site_id}\n")
        elif k == LOOPHEAD:
            w(f"H {ev.thread_id} {ev.ins_index} {ev.loop_id} {ev.site_id}\n")
        elif k == ALLOC:
            w(f"A {ev.thread_id} {ev.ins_index} 0x{ev.base:x} {ev.alloc_size}\n")
        elif k == FREE:
            w(f"F {ev.thread_id} {ev.ins_index} 0x{ev.base:x}\n")
        elif k == STATIC_IMAGE:
            objs = " ".join(f"{quote(name, safe='')}:0x{base:x}:{size}"
                            for name, base, size in ev.objects)
            w(f"S {ev.thread_id} {ev.ins_index} {objs}".rstrip() + "\n")
        elif k == THREAD_START:
            w(f"T {ev.thread_id} {ev.ins_index}\n")


def read_text_trace(source):
    """Parse the text form; returns (event list, SourceMap)."""
    lines = source.read().splitlines()
    if not lines or lines[0] != TEXT_HEADER:
        raise TraceDecodeError("bad text trace header", 0)
    source_map = SourceMap()
    events = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "site":
                source_map.add_site(int(parts[1]), unquote(parts[2]),
                                    unquote(parts[3]), int(parts[4]))
            elif tag == "loopsite":
                source_map.add_loop(int(parts[1]), unquote(parts[2]),
                                    int(parts[3]))
            elif tag == "L":
                value = bytes.fromhex(parts[5])
                events.append(TraceEvent(
                    LOAD, int(parts[1]), int(parts[2]), addr=int(parts[3], 16),
                    size=int(parts[4]), value=value,
                    fp_class=FP_BY_NAME[parts[6]], site_id=int(parts[7])))
            elif tag == "C":
                events.append(TraceEvent(CALL, int(parts[1]), int(parts[2]),
                                         site_id=int(parts[3])))
            elif tag == "R":
                events.append(TraceEvent(RETURN, int(parts[1]), int(parts[2]),
                                         site_id=int(parts[3])))
            elif tag == "H":
                events.append(TraceEvent(LOOPHEAD, int(parts[1]), int(parts[2]),
                                         loop_id=int(parts[3]),
                                         site_id=int(parts[4])))
            elif tag == "A":
                events.append(TraceEvent(ALLOC, int(parts[1]), int(parts[2]),
                                         base=int(parts[3], 16),
                                         alloc_size=int(parts[4])))
            elif tag == "F":
                events.append(TraceEvent(FREE, int(parts[1]), int(parts[2]),
                                         base=int(parts[3], 16)))
            elif tag == "S":
                objs = []
                for tok in parts[3:]:
                    name, base, size = tok.rsplit(":", 2)
                    objs.append((unquote(name), int(base, 16), int(size)))
                events.append(TraceEvent(STATIC_IMAGE, int(parts[1]),
                                         int(parts[2]), objects=tuple(objs)))
            elif tag == "T":
                events.append(TraceEvent(THREAD_START, int(parts[1]),
                                         int(parts[2])))
            else:
                raise TraceDecodeError(f"unknown line tag {tag!r}", lineno)
        except TraceDecodeError:
            raise
        except (ValueError, KeyError, IndexError) as exc:
            raise TraceDecodeError(f"bad line: {exc}", lineno) from None
    return events, source_map
