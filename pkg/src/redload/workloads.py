"""Deterministic synthetic workloads exhibiting known redundancy patterns.

Each scenario simulates a small program as an event stream: calls and
returns around its functions, a loop-header pass at every iteration
boundary, allocation or image registration for every array touched, and
loads carrying the values the simulated memory really holds. Identical
(name, params) always produce the identical trace, so scenarios double as
golden inputs for the analysis engine and for the naive oracle below.
"""

import math
import random
import struct
from dataclasses import dataclass, field

from .errors import ConfigError
from .temporal import PairCounters, ProgramTotals
from .trace import (ALLOC, CALL, F32, F64, FREE, LOAD, LOOPHEAD, NONFP,
                    RETURN, STATIC_IMAGE, THREAD_START, SourceMap, TraceEvent)

STATIC_BASE = 0x10000000
DYNAMIC_BASE = 0x70000000
UNOWNED_BASE = 0x7FFF0000       # never registered; stands in for stack slots

_U32 = struct.Struct("<I")
_F64S = struct.Struct("<d")
_F32S = struct.Struct("<f")


def u32(v):
    return _U32.pack(v & 0xFFFFFFFF)


def u64(v):
    return struct.pack("<Q", v & 0xFFFFFFFFFFFFFFFF)


def f64(x):
    return _F64S.pack(x)


def f32(x):
    return _F32S.pack(x)


@dataclass
class Scenario:
    name: str
    params: dict = field(default_factory=dict)


class _Emitter:
    """Builds one thread's events with a monotonically increasing
    instruction index."""

    __slots__ = ("tid", "ins")

    def __init__(self, tid, start_ins=0):
        self.tid = tid
        self.ins = start_ins

    def _next(self):
        i = self.ins
        self.ins += 1
        return i

    def thread_start(self):
        return TraceEvent(THREAD_START, self.tid, self._next())

    def call(self, site):
        return TraceEvent(CALL, self.tid, self._next(), site_id=site)

    def ret(self, site):
        return TraceEvent(RETURN, self.tid, self._next(), site_id=site)

    def loop(self, loop_id, site):
        return TraceEvent(LOOPHEAD, self.tid, self._next(), loop_id=loop_id,
                          site_id=site)

    def load(self, addr, value, site, fp=NONFP):
        return TraceEvent(LOAD, self.tid, self._next(), addr=addr,
                          size=len(value), value=value, fp_class=fp,
                          site_id=site)

    def alloc(self, base, size):
        return TraceEvent(ALLOC, self.tid, self._next(), base=base,
                          alloc_size=size)

    def free(self, base):
        return TraceEvent(FREE, self.tid, self._next(), base=base)


def _dyn_base(tid, offset=0):
    # Per-thread dynamic ranges stay disjoint across any interleaving.
    return DYNAMIC_BASE + (tid << 36) + offset


# ------------------------------------------------------------ scenarios --

def _build_adjacent_equal(p, sm):
    values = tuple(p["values"])
    reps = p["reps"]
    base = STATIC_BASE
    sm.add_site(1, "main", "adjacent_equal.c", 2)
    sm.add_site(2, "main", "adjacent_equal.c", 4)
    sm.add_loop(101, "adjacent_equal.c", 3)
    statics = [("A", base, 4 * len(values))]

    def body(em, tid):
        yield em.thread_start()
        yield em.call(1)
        for _ in range(reps):
            for i, v in enumerate(values):
                yield em.loop(101, 1)
                yield em.load(base + 4 * i, u32(v), 2)
        yield em.ret(1)

    return statics, body


def _build_linear_search(p, sm):
    n = p["n"]
    queries = p["queries"]
    probe = p["probe"]
    if probe is None:
        probe = n - 1
    if not 0 <= probe < n:
        raise ConfigError(f"probe {probe} outside key range 0..{n - 1}")
    base = STATIC_BASE
    sm.add_site(1, "main", "linear_search.c", 14)
    sm.add_site(2, "findIndex", "linear_search.c", 1)
    sm.add_site(3, "findIndex", "linear_search.c", 3)
    sm.add_loop(101, "linear_search.c", 15)   # query loop in main
    sm.add_loop(102, "linear_search.c", 2)    # scan loop in findIndex
    statics = [("keys", base, 4 * n)]

    def body(em, tid):
        yield em.thread_start()
        yield em.call(1)
        for _ in range(queries):
            yield em.loop(101, 1)
            yield em.call(2)
            for i in range(n):
                yield em.loop(102, 2)
                yield em.load(base + 4 * i, u32(i), 3)
                if i >= probe:
                    break
            yield em.ret(2)
        yield em.ret(1)

    return statics, body


def _build_hash_collision(p, sm):
    chain = p["chain"]
    searches = p["searches"]
    table_base = STATIC_BASE
    sm.add_site(1, "main", "hash_collision.c", 20)
    sm.add_site(2, "setup", "hash_collision.c", 14)
    sm.add_site(3, "hashtable_search", "hash_collision.c", 1)
    sm.add_site(4, "hashtable_search", "hash_collision.c", 6)
    sm.add_site(5, "hashtable_search", "hash_collision.c", 8)
    sm.add_site(6, "hashtable_search", "hash_collision.c", 9)
    sm.add_loop(101, "hash_collision.c", 21)  # search loop in main
    sm.add_loop(102, "hash_collision.c", 7)   # list walk in search
    statics = [("table", table_base, 8)]

    def body(em, tid):
        nodes = [_dyn_base(tid, k * 16) for k in range(chain)]
        yield em.thread_start()
        yield em.call(1)
        yield em.call(2)
        for nb in nodes:
            yield em.alloc(nb, 16)
        yield em.ret(2)
        for _ in range(searches):
            yield em.loop(101, 1)
            yield em.call(3)
            yield em.load(table_base, u64(nodes[0]), 4)
            for k, nb in enumerate(nodes):
                yield em.loop(102, 3)
                yield em.load(nb, u32(0xA000 + k), 5)
                nxt = nodes[k + 1] if k + 1 < chain else 0
                yield em.load(nb + 8, u64(nxt), 6)
            yield em.ret(3)
        yield em.ret(1)

    return statics, body


def _build_stencil(p, sm):
    nx, ny, reps = p["nx"], p["ny"], p["reps"]
    base = STATIC_BASE
    sm.add_site(1, "main", "stencil.c", 1)
    sm.add_site(3, "main", "stencil.c", 8)
    sm.add_site(4, "main", "stencil.c", 9)
    sm.add_site(5, "main", "stencil.c", 10)
    sm.add_loop(101, "stencil.c", 2)
    sm.add_loop(102, "stencil.c", 3)
    statics = [("tIn", base, 8 * nx * ny)]

    def cell(i):
        return f64(300.0 + 0.125 * i)

    def body(em, tid):
        yield em.thread_start()
        yield em.call(1)
        for _ in range(reps):
            for y in range(ny):
                yield em.loop(101, 1)
                for x in range(nx):
                    yield em.loop(102, 1)
                    c = x + y * nx
                    w = c if x == 0 else c - 1
                    e = c if x == nx - 1 else c + 1
                    yield em.load(base + 8 * c, cell(c), 3, fp=F64)
                    yield em.load(base + 8 * w, cell(w), 4, fp=F64)
                    yield em.load(base + 8 * e, cell(e), 5, fp=F64)
        yield em.ret(1)

    return statics, body


def _build_forward_copy(p, sm):
    length, reps = p["len"], p["reps"]
    sm.add_site(1, "main", "forward_copy.c", 12)
    sm.add_site(2, "init", "forward_copy.c", 3)
    sm.add_site(3, "cache_invalidate", "forward_copy.c", 5)
    sm.add_site(4, "cache_invalidate", "forward_copy.c", 8)
    sm.add_loop(101, "forward_copy.c", 13)   # call loop in main
    sm.add_loop(102, "forward_copy.c", 7)    # copy loop in the callee

    def body(em, tid):
        buf = _dyn_base(tid)
        yield em.thread_start()
        yield em.call(1)
        yield em.call(2)
        yield em.alloc(buf, 4 * length)
        yield em.ret(2)
        for _ in range(reps):
            yield em.loop(101, 1)
            yield em.call(3)
            for i in range(1, length):
                yield em.loop(102, 3)
                yield em.load(buf + 4 * (i - 1), u32(1), 4)
            yield em.ret(3)
        yield em.ret(1)

    return [], body


def _build_callee_spill(p, sm):
    reps = p["reps"]
    params = (7, 480, 640)
    data_base = STATIC_BASE
    sm.add_site(1, "main", "callee_spill.c", 1)
    sm.add_site(2, "PelYline", "callee_spill.c", 8)
    sm.add_site(3, "PelYline", "callee_spill.c", 9)
    sm.add_site(4, "PelYline", "callee_spill.c", 10)
    sm.add_site(5, "PelYline", "callee_spill.c", 11)
    sm.add_site(6, "PelYline", "callee_spill.c", 12)
    sm.add_loop(101, "callee_spill.c", 2)
    statics = [("ref_pic", data_base, 4 * reps)]

    def body(em, tid):
        spill = UNOWNED_BASE
        yield em.thread_start()
        yield em.call(1)
        for pos in range(reps):
            yield em.loop(101, 1)
            yield em.call(2)
            for slot, v in enumerate(params):
                yield em.load(spill + 4 * slot, u32(v), 3 + slot)
            yield em.load(data_base + 4 * pos, u32(1000 + pos), 6)
            yield em.ret(2)
        yield em.ret(1)

    return statics, body


def _sparse_layout(length, zero_density, layout, seed, salt):
    zeros = round(length * zero_density)
    vals = [0] * zeros + [salt + i for i in range(length - zeros)]
    if layout == "shuffled":
        random.Random(seed).shuffle(vals)
    elif layout != "block":
        raise ConfigError(f"unknown layout {layout!r}")
    return vals


def _build_sparse_zeros(p, sm):
    length = p["len"]
    delta_vals = _sparse_layout(length, p["zero_density"], p["layout"],
                                p["seed"], 1000)
    oldw_vals = _sparse_layout(length, p["zero_density"], p["layout"],
                               p["seed"] + 1, 5000)
    delta_base = STATIC_BASE
    sm.add_site(1, "main", "sparse_zeros.c", 10)
    sm.add_site(2, "init", "sparse_zeros.c", 2)
    sm.add_site(3, "main", "sparse_zeros.c", 13)
    sm.add_site(4, "main", "sparse_zeros.c", 14)
    sm.add_loop(101, "sparse_zeros.c", 12)
    statics = [("delta", delta_base, 4 * length)]

    def body(em, tid):
        oldw = _dyn_base(tid)
        yield em.thread_start()
        yield em.call(1)
        yield em.call(2)
        yield em.alloc(oldw, 4 * length)
        yield em.ret(2)
        for _ in range(p["passes"]):
            for j in range(length):
                yield em.loop(101, 1)
                yield em.load(delta_base + 4 * j, u32(delta_vals[j]), 3)
                yield em.load(oldw + 4 * j, u32(oldw_vals[j]), 4)
        yield em.ret(1)

    return statics, body


def _build_approx_drift(p, sm):
    length, reps, step = p["len"], p["reps"], p["step"]
    base = STATIC_BASE
    sm.add_site(1, "main", "approx_drift.c", 1)
    sm.add_site(3, "main", "approx_drift.c", 5)
    sm.add_loop(101, "approx_drift.c", 2)
    sm.add_loop(102, "approx_drift.c", 4)
    statics = [("vals", base, 8 * length)]

    def body(em, tid):
        yield em.thread_start()
        yield em.call(1)
        for r in range(reps):
            yield em.loop(101, 1)
            scale = (1.0 + step) ** r
            for i in range(length):
                yield em.loop(102, 1)
                yield em.load(base + 8 * i, f64((100.0 + i) * scale), 3,
                              fp=F64)
        yield em.ret(1)

    return statics, body


_RM_FUNC_SITES = tuple(range(10, 15))
_RM_LOAD_SITES = tuple(range(20, 28))
_RM_BYTE_POOL = (0, 0, 1, 2, 255)
_RM_FP_POOL = (0.0, 1.0, 100.0, 100.4, 100.5, -3.75, float("nan"))


def _build_random_mixed(p, sm):
    loads = p["loads"]
    region = p["region_bytes"]
    max_depth = p["max_depth"]
    fp_fraction = p["fp_fraction"]
    churn = p["churn"]
    base = STATIC_BASE

    sm.add_site(1, "main", "random_mixed.c", 1)
    for s in _RM_FUNC_SITES:
        sm.add_site(s, f"f{s - 10}", "random_mixed.c", 100 + s)
    for s in _RM_LOAD_SITES:
        sm.add_site(s, "load", "random_mixed.c", 200 + s)
    # Loop ids are handed out per (function site, nesting slot) so a
    # function re-entered anywhere replays the same static loops.
    loop_ids = {}
    next_loop = [1000]

    def loop_id_for(site, slot):
        key = (site, slot)
        lid = loop_ids.get(key)
        if lid is None:
            lid = next_loop[0]
            next_loop[0] += 1
            loop_ids[key] = lid
            sm.add_loop(lid, "random_mixed.c", lid)
        return lid

    # Pre-assign the loop ids both threads may touch so the source map is
    # complete before any stream is consumed.
    for s in (1,) + _RM_FUNC_SITES:
        for slot in range(6):
            loop_id_for(s, slot)

    third = region // 3
    statics = [("obj0", base, third - 8),
               ("obj1", base + third, third - 8)]
    dyn_off = 2 * third

    def body(em, tid):
        rng = random.Random(p["seed"] * 1_000_003 + tid * 7919)
        # Each thread churns allocations in its own zone; the static part
        # of the region (objects plus unowned gaps) is shared by all.
        zone = _dyn_base(tid)
        zone_size = region - dyn_off - 8

        yield em.thread_start()
        yield em.call(1)
        frames = [1]            # call site stack, main at bottom
        loop_stack = [[]]       # per frame: loop ids currently on the path
        zone_live = False
        emitted = 0
        while emitted < loads:
            r = rng.random()
            frame = frames[-1]
            stack = loop_stack[-1]
            if r < 0.05 and len(frames) < max_depth:
                frame = rng.choice(_RM_FUNC_SITES)
                yield em.call(frame)
                frames.append(frame)
                loop_stack.append([])
            elif r < 0.10 and len(frames) > 1:
                yield em.ret(frames.pop())
                loop_stack.pop()
            elif r < 0.20:
                if stack and rng.random() < 0.5:
                    k = rng.randrange(len(stack))
                    del stack[k + 1:]
                    yield em.loop(stack[k], frame)
                elif len(stack) < 4:
                    lid = loop_id_for(frame, len(stack))
                    stack.append(lid)
                    yield em.loop(lid, frame)
            elif r < 0.20 + churn:
                if zone_live:
                    yield em.free(zone)
                    zone_live = False
                else:
                    yield em.alloc(zone, zone_size)
                    zone_live = True
            else:
                off = rng.randrange(region - 8)
                addr = (base + off) if off < dyn_off \
                    else zone + (off - dyn_off)
                if rng.random() < fp_fraction:
                    if rng.random() < 0.5:
                        fp = F64
                        if rng.random() < 0.15:
                            value = f64(rng.choice(_RM_FP_POOL)) + \
                                f64(rng.choice(_RM_FP_POOL))
                        else:
                            value = f64(rng.choice(_RM_FP_POOL))
                    else:
                        fp = F32
                        if rng.random() < 0.15:
                            value = f32(rng.choice(_RM_FP_POOL[:-1])) + \
                                f32(rng.choice(_RM_FP_POOL[:-1]))
                        else:
                            value = f32(rng.choice(_RM_FP_POOL[:-1]))
                else:
                    size = rng.choice((1, 2, 4, 4, 8, 16))
                    value = bytes(rng.choice(_RM_BYTE_POOL)
                                  for _ in range(size))
                    fp = NONFP
                yield em.load(addr, value, rng.choice(_RM_LOAD_SITES), fp=fp)
                emitted += 1
        while frames:
            yield em.ret(frames.pop())

    return statics, body


SCENARIOS = {
    "adjacent_equal": (_build_adjacent_equal,
                       {"values": (1, 1, 1, 15), "reps": 1, "threads": 1}),
    "linear_search": (_build_linear_search,
                      {"n": 1000, "queries": 1000, "probe": None,
                       "threads": 1}),
    "hash_collision": (_build_hash_collision,
                       {"chain": 32, "searches": 100, "threads": 1}),
    "stencil": (_build_stencil,
                {"nx": 64, "ny": 8, "reps": 1, "threads": 1}),
    "forward_copy": (_build_forward_copy,
                     {"len": 64, "reps": 20, "threads": 1}),
    "callee_spill": (_build_callee_spill, {"reps": 100, "threads": 1}),
    "sparse_zeros": (_build_sparse_zeros,
                     {"len": 1000, "zero_density": 0.9, "layout": "block",
                      "passes": 1, "seed": 0, "threads": 1}),
    "approx_drift": (_build_approx_drift,
                     {"len": 4, "reps": 500, "step": 0.005, "threads": 1}),
    "random_mixed": (_build_random_mixed,
                     {"seed": 0, "loads": 10_000, "region_bytes": 192,
                      "max_depth": 6, "fp_fraction": 0.25, "churn": 0.02,
                      "threads": 1}),
}


def scenario_names():
    return sorted(SCENARIOS)


def _merge_params(name, params):
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; "
                          f"choose from {', '.join(scenario_names())}")
    defaults = SCENARIOS[name][1]
    merged = dict(defaults)
    for key, value in params.items():
        if key not in defaults:
            raise ConfigError(f"scenario {name} has no parameter {key!r}")
        default = defaults[key]
        try:
            if isinstance(default, tuple):
                if isinstance(value, str):
                    value = tuple(int(tok) for tok in value.split(","))
                else:
                    value = tuple(value)
            elif isinstance(default, bool):
                value = bool(value)
            elif isinstance(default, int):
                value = int(value)
            elif isinstance(default, float):
                value = float(value)
            elif default is None and isinstance(value, str):
                value = int(value)
        except (TypeError, ValueError):
            raise ConfigError(
                f"bad value {value!r} for parameter {key}") from None
        merged[key] = value
    threads = merged.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads must be a positive integer, got {threads}")
    return merged


def _interleave(streams, chunk=64):
    live = [iter(s) for s in streams]
    while live:
        still = []
        for it in live:
            n = 0
            for ev in it:
                yield ev
                n += 1
                if n == chunk:
                    still.append(it)
                    break
        live = still


def generate(scenario):
    """Events and source map for a scenario; the event sequence streams.

    Identical (name, params) produce identical traces byte for byte.
    """
    params = _merge_params(scenario.name, scenario.params)
    sm = SourceMap()
    statics, body = SCENARIOS[scenario.name][0](params, sm)
    threads = params["threads"]

    prologue = []
    if statics:
        prologue.append(TraceEvent(STATIC_IMAGE, 0, 0,
                                   objects=tuple(statics)))
    streams = [body(_Emitter(tid, start_ins=1 if tid == 0 and prologue else 0),
                    tid) for tid in range(threads)]

    def events():
        yield from prologue
        yield from _interleave(streams)

    return events(), sm


# --------------------------------------------------------------- oracle --

MAX_ORACLE_LOADS = 10 ** 6


@dataclass
class OracleProfile:
    """Ground-truth redundancy per the naive last-value maps.

    Temporal state is one {byte address: value byte} map per thread;
    spatial state is one singleton previous-value slot per (thread, object).
    Objects are keyed by registration: ("static", name) for image symbols,
    ("dynamic", ordinal) for allocations in file order.
    """

    totals: ProgramTotals = field(default_factory=ProgramTotals)
    temporal_total_instances: int = 0
    temporal_redundant_instances: int = 0
    temporal_verdicts: list = field(default_factory=list)
    objects: dict = field(default_factory=dict)
    spatial_verdicts: list = field(default_factory=list)

    def program_fraction(self):
        t = self.totals
        precise = (t.redundant_nonfp_bytes / t.total_nonfp_bytes
                   if t.total_nonfp_bytes else 0.0)
        approx = (t.redundant_fp_bytes / t.total_fp_bytes
                  if t.total_fp_bytes else 0.0)
        return precise, approx

    def spatial_instance_fraction(self):
        total = sum(c.total_instances for c in self.objects.values())
        red = sum(c.redundant_instances for c in self.objects.values())
        return red / total if total else 0.0


def _oracle_fp_equal(old, new, fp_class, epsilon):
    width = 4 if fp_class == F32 else 8
    fmt = "<f" if fp_class == F32 else "<d"
    for off in range(0, len(new), width):
        ob, nb = old[off:off + width], new[off:off + width]
        if ob == nb:
            continue
        a = struct.unpack(fmt, ob)[0]
        b = struct.unpack(fmt, nb)[0]
        if not (math.isfinite(a) and math.isfinite(b)):
            return False
        if abs(a - b) > epsilon * max(abs(a), abs(b)):
            return False
    return True


def expected_redundancy(scenario, epsilon=0.01):
    """Brute-force full-monitoring redundancy profile of a scenario.

    Refuses scenarios beyond MAX_ORACLE_LOADS loads.
    """
    events, _ = generate(scenario)
    out = OracleProfile()
    byte_maps = {}      # tid -> {addr: value byte}
    live = []           # (base, end, key) in registration order
    dyn_ordinal = 0
    prior = {}          # (tid, key) -> (value, fp_class)
    loads = 0

    for ev in events:
        kind = ev.kind
        if kind == LOAD:
            loads += 1
            if loads > MAX_ORACLE_LOADS:
                raise ConfigError(
                    f"scenario exceeds oracle limit of {MAX_ORACLE_LOADS} "
                    "loads")
            tid, addr, size, value = (ev.thread_id, ev.addr, ev.size,
                                      ev.value)
            fp_class = ev.fp_class
            approx = fp_class != NONFP
            bmap = byte_maps.get(tid)
            if bmap is None:
                bmap = byte_maps[tid] = {}

            old = bytearray(size)
            complete = True
            for i in range(size):
                b = bmap.get(addr + i)
                if b is None:
                    complete = False
                    break
                old[i] = b
            if not complete:
                redundant = False
            elif not approx:
                redundant = bytes(old) == value
            else:
                redundant = (bytes(old) == value
                             or _oracle_fp_equal(bytes(old), value, fp_class,
                                                 epsilon))
            for i in range(size):
                bmap[addr + i] = value[i]

            t = out.totals
            out.temporal_total_instances += 1
            if approx:
                t.total_fp_bytes += size
                if redundant:
                    t.redundant_fp_bytes += size
            else:
                t.total_nonfp_bytes += size
                if redundant:
                    t.redundant_nonfp_bytes += size
            if redundant:
                out.temporal_redundant_instances += 1
            out.temporal_verdicts.append((redundant, approx))

            key = None
            for b, e, k in live:
                if b <= addr < e:
                    key = k
                    break
            if key is None:
                out.spatial_verdicts.append((None, False, approx))
                continue
            row = out.objects.get(key)
            if row is None:
                row = out.objects[key] = PairCounters()
            row.total_instances += 1
            if approx:
                row.total_bytes_approx += size
            else:
                row.total_bytes_precise += size
            prev = prior.get((tid, key))
            s_red = False
            bit_eq = False
            if prev is not None and len(prev[0]) == size:
                bit_eq = prev[0] == value
                if not approx:
                    s_red = bit_eq
                else:
                    s_red = bit_eq or _oracle_fp_equal(prev[0], value,
                                                       fp_class, epsilon)
            if s_red:
                row.redundant_instances += 1
                if approx:
                    row.redundant_bytes_approx += size
                    if bit_eq:
                        row.fp_exact_instances += 1
                else:
                    row.redundant_bytes_precise += size
            prior[(tid, key)] = (value, fp_class)
            out.spatial_verdicts.append((key, s_red, approx))
        elif kind == STATIC_IMAGE:
            for name, base, size in ev.objects:
                live.append((base, base + size, ("static", name)))
        elif kind == ALLOC:
            live.append((ev.base, ev.base + ev.alloc_size,
                         ("dynamic", dyn_ordinal)))
            dyn_ordinal += 1
        elif kind == FREE:
            live = [(b, e, k) for b, e, k in live if b != ev.base]
    return out
