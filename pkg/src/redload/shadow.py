"""Two-level shadow memory: one cell per application byte.

Each cell holds the value byte last loaded at that address together with
the loading context handle and timestamp. Pages of 64Ki cells are created
on first touch, so untouched address space costs nothing.
"""

from dataclasses import dataclass

PAGE_BITS = 16
PAGE_SIZE = 1 << PAGE_BITS
PAGE_MASK = PAGE_SIZE - 1


@dataclass(slots=True)
class ShadowCell:
    value: int
    ctx: int
    ts: int
    present: bool


_ABSENT = ShadowCell(0, 0, 0, False)


class _Page:
    __slots__ = ("val", "ctx", "ts", "present")

    def __init__(self):
        self.val = bytearray(PAGE_SIZE)
        self.ctx = [0] * PAGE_SIZE
        self.ts = [0] * PAGE_SIZE
        self.present = bytearray(PAGE_SIZE)


class ShadowTable:
    """Per-thread shadow memory; confined to the worker for its stream."""

    def __init__(self):
        self.pages = {}

    def _page(self, index):
        page = self.pages.get(index)
        if page is None:
            page = _Page()
            self.pages[index] = page
        return page

    def page_count(self):
        return len(self.pages)

    def read_span(self, addr, size):
        """Cells for [addr, addr+size); untouched bytes come back absent."""
        out = []
        a = addr
        end = addr + size
        while a < end:
            page = self.pages.get(a >> PAGE_BITS)
            off = a & PAGE_MASK
            n = min(end - a, PAGE_SIZE - off)
            if page is None:
                out.extend([_ABSENT] * n)
            else:
                for i in range(off, off + n):
                    if page.present[i]:
                        out.append(ShadowCell(page.val[i], page.ctx[i],
                                              page.ts[i], True))
                    else:
                        out.append(_ABSENT)
            a += n
        return out

    def write_span(self, addr, size, value, ctx, ts):
        """Mark [addr, addr+size) present with the given value bytes, all
        carrying the same ctx and ts."""
        a = addr
        end = addr + size
        vpos = 0
        while a < end:
            page = self._page(a >> PAGE_BITS)
            off = a & PAGE_MASK
            n = min(end - a, PAGE_SIZE - off)
            page.val[off:off + n] = value[vpos:vpos + n]
            page.present[off:off + n] = b"\x01" * n
            pctx = page.ctx
            pts = page.ts
            for i in range(off, off + n):
                pctx[i] = ctx
                pts[i] = ts
            a += n
            vpos += n

    def probe_update(self, addr, size, value, ctx, ts):
        """Fetch prior state for a load and install the new state in one pass.

        Returns (old_bytes, prior_ctx, prior_ts): old_bytes is None unless
        every byte of the span was present; prior_ctx/prior_ts come from the
        byte at the start address, or None when it was absent.
        """
        pidx = addr >> PAGE_BITS
        off = addr & PAGE_MASK
        if off + size <= PAGE_SIZE:
            page = self.pages.get(pidx)
            if page is None:
                page = _Page()
                self.pages[pidx] = page
                old = prior_ctx = prior_ts = None
            else:
                end = off + size
                if page.present[off] and 0 not in page.present[off:end]:
                    old = bytes(page.val[off:end])
                    prior_ctx = page.ctx[off]
                    prior_ts = page.ts[off]
                else:
                    old = None
                    if page.present[off]:
                        prior_ctx = page.ctx[off]
                        prior_ts = page.ts[off]
                    else:
                        prior_ctx = prior_ts = None
            end = off + size
            page.val[off:end] = value
            page.present[off:end] = b"\x01" * size
            pctx = page.ctx
            pts = page.ts
            for i in range(off, end):
                pctx[i] = ctx
                pts[i] = ts
            return old, prior_ctx, prior_ts
        # Page-straddling span: go through the generic paths.
        cells = self.read_span(addr, size)
        if all(c.present for c in cells):
            old = bytes(c.value for c in cells)
        else:
            old = None
        first = cells[0]
        prior_ctx = first.ctx if first.present else None
        prior_ts = first.ts if first.present else None
        self.write_span(addr, size, value, ctx, ts)
        return old, prior_ctx, prior_ts
