"""Shadow memory: read-back, per-byte metadata, page sparsity."""

import random

from redload.shadow import PAGE_SIZE, ShadowTable


def test_fresh_table_reads_absent():
    s = ShadowTable()
    cells = s.read_span(0x1000, 4)
    assert len(cells) == 4
    assert all(not c.present for c in cells)


def test_write_then_read_back():
    s = ShadowTable()
    s.write_span(0x1000, 4, bytes([1, 0, 0, 0]), ctx=7, ts=3)
    cells = s.read_span(0x1000, 4)
    assert [c.value for c in cells] == [1, 0, 0, 0]
    assert all(c.ctx == 7 and c.ts == 3 and c.present for c in cells)


def test_two_short_writes_leave_mixed_metadata():
    s = ShadowTable()
    s.write_span(0x1000, 2, b"\xaa\xbb", ctx=1, ts=1)
    s.write_span(0x1002, 2, b"\xcc\xdd", ctx=2, ts=5)
    cells = s.read_span(0x1000, 4)
    assert [c.value for c in cells] == [0xAA, 0xBB, 0xCC, 0xDD]
    assert [c.ctx for c in cells] == [1, 1, 2, 2]
    assert [c.ts for c in cells] == [1, 1, 5, 5]


def test_probe_update_matches_read_write_pair():
    rng = random.Random(9)
    a = ShadowTable()
    b = ShadowTable()
    addrs = [0x5000 + rng.randrange(64) for _ in range(400)]
    for i, addr in enumerate(addrs):
        size = rng.choice((1, 2, 4, 8))
        value = bytes(rng.randrange(3) for _ in range(size))
        cells = b.read_span(addr, size)
        if all(c.present for c in cells):
            expect_old = bytes(c.value for c in cells)
        else:
            expect_old = None
        expect_prior = ((cells[0].ctx, cells[0].ts) if cells[0].present
                        else (None, None))
        b.write_span(addr, size, value, ctx=i, ts=i + 1)

        old, pctx, pts = a.probe_update(addr, size, value, ctx=i, ts=i + 1)
        assert old == expect_old
        assert (pctx, pts) == expect_prior


def test_probe_update_across_page_boundary():
    s = ShadowTable()
    addr = PAGE_SIZE - 3
    s.write_span(addr, 8, bytes(range(8)), ctx=4, ts=2)
    old, pctx, pts = s.probe_update(addr, 8, bytes(8), ctx=5, ts=9)
    assert old == bytes(range(8))
    assert (pctx, pts) == (4, 2)
    cells = s.read_span(addr, 8)
    assert all(c.ctx == 5 and c.ts == 9 for c in cells)


def test_partial_presence_returns_no_old_bytes():
    s = ShadowTable()
    s.write_span(0x1000, 2, b"\x01\x02", ctx=1, ts=1)
    old, pctx, pts = s.probe_update(0x1000, 4, bytes(4), ctx=2, ts=2)
    assert old is None
    # Start byte was present, so the prior pair is still reported.
    assert (pctx, pts) == (1, 1)
    old, pctx, pts = s.probe_update(0x2000, 4, bytes(4), ctx=3, ts=3)
    assert old is None and pctx is None and pts is None


def test_page_sparsity():
    s = ShadowTable()
    s.write_span(0x0, 4, bytes(4), ctx=1, ts=1)
    s.write_span(10 * PAGE_SIZE + 5, 4, bytes(4), ctx=1, ts=2)
    s.write_span(10 * PAGE_SIZE + 900, 8, bytes(8), ctx=1, ts=3)
    assert s.page_count() == 2
