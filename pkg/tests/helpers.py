"""Small builders for hand-written event sequences used across tests."""

import struct

from redload.trace import (ALLOC, CALL, FREE, LOAD, LOOPHEAD, NONFP,
                           RETURN, STATIC_IMAGE, THREAD_START, SourceMap,
                           TraceEvent)


def u32(v):
    return struct.pack("<I", v & 0xFFFFFFFF)


def f64(x):
    return struct.pack("<d", x)


class Build:
    """Appends events for one thread with auto-incrementing ins_index."""

    def __init__(self, tid=0, source_map=None):
        self.tid = tid
        self.ins = 0
        self.events = []
        self.sm = source_map if source_map is not None else SourceMap()

    def _add(self, ev):
        self.events.append(ev)
        return ev

    def thread_start(self):
        ev = TraceEvent(THREAD_START, self.tid, self.ins)
        self.ins += 1
        return self._add(ev)

    def call(self, site):
        ev = TraceEvent(CALL, self.tid, self.ins, site_id=site)
        self.ins += 1
        return self._add(ev)

    def ret(self, site=0):
        ev = TraceEvent(RETURN, self.tid, self.ins, site_id=site)
        self.ins += 1
        return self._add(ev)

    def loop(self, loop_id, site=0):
        ev = TraceEvent(LOOPHEAD, self.tid, self.ins, loop_id=loop_id,
                        site_id=site)
        self.ins += 1
        return self._add(ev)

    def load(self, addr, value, site=0, fp=NONFP):
        ev = TraceEvent(LOAD, self.tid, self.ins, addr=addr, size=len(value),
                        value=bytes(value), fp_class=fp, site_id=site)
        self.ins += 1
        return self._add(ev)

    def alloc(self, base, size):
        ev = TraceEvent(ALLOC, self.tid, self.ins, base=base, alloc_size=size)
        self.ins += 1
        return self._add(ev)

    def free(self, base):
        ev = TraceEvent(FREE, self.tid, self.ins, base=base)
        self.ins += 1
        return self._add(ev)

    def static_image(self, objects):
        ev = TraceEvent(STATIC_IMAGE, self.tid, self.ins,
                        objects=tuple(objects))
        self.ins += 1
        return self._add(ev)


def walkthrough_source_map():
    """Source map for the two nested-loop walkthrough traces."""
    sm = SourceMap()
    sm.add_site(1, "main", "walk.c", 1)
    sm.add_site(2, "main", "walk.c", 6)
    sm.add_loop(11, "walk.c", 3)    # outer loop
    sm.add_loop(12, "walk.c", 4)    # inner loop
    return sm


def inner_scope_trace():
    """Nested loops where the reload happens across inner-loop iterations:
    the invariant address is re-read on the second trip of the inner loop.
    Timestamps: loop1 pass=1, loop2 pass=2, load=3, loop2 pass=4, load=5.
    """
    b = Build(source_map=walkthrough_source_map())
    b.thread_start()
    b.call(1)
    b.loop(11, 1)
    b.loop(12, 1)
    b.load(0x1000, u32(7), 2)
    b.loop(12, 1)
    b.load(0x1000, u32(7), 2)
    b.ret(1)
    return b


def outer_scope_trace():
    """Nested loops where the reload happens across outer-loop trips: the
    inner loop scans three addresses, then the outer loop restarts the scan.
    Timestamps: loop1=1, loop2=2, load=3, loop2=4, load=5, loop2=6, load=7,
    loop1=8, loop2=9, load=10.
    """
    b = Build(source_map=walkthrough_source_map())
    b.thread_start()
    b.call(1)
    b.loop(11, 1)
    for k in range(3):
        b.loop(12, 1)
        b.load(0x1000 + 4 * k, u32(40 + k), 2)
    b.loop(11, 1)
    b.loop(12, 1)
    b.load(0x1000, u32(40), 2)
    b.ret(1)
    return b
