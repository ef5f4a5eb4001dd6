"""Context tree: interning, counter monotonicity, loop conventions."""

import random

import pytest

from redload.cct import FUNCTION, LOADSITE, LOOP, ROOT, ContextTree
from redload.errors import MalformedTraceError


def test_call_from_root():
    t = ContextTree()
    h = t.on_call(7)
    node = t.node(h)
    assert node.kind == FUNCTION and node.ident == 7
    assert node.parent is t.root


def test_repeated_loop_head_is_one_node_with_updated_pass():
    t = ContextTree()
    t.on_call(1)
    h1 = t.on_loop_head(4)
    h2 = t.on_loop_head(4)
    assert h1 == h2
    node = t.node(h1)
    # Second pass stores the second counter value.
    assert node.last_pass_ts == 2
    assert t.timestamp == 2


def test_nested_loops_across_calls_get_ordered_timestamps():
    t = ContextTree()
    t.on_call(1)            # f
    l1 = t.on_loop_head(10)
    t.on_call(2)            # g
    l2 = t.on_loop_head(20)
    path = [n.kind for n in t.path_to_root(l2)]
    assert path == [LOOP, FUNCTION, LOOP, FUNCTION, ROOT]
    assert t.node(l1).last_pass_ts < t.node(l2).last_pass_ts


def test_load_context_interns_and_counts():
    t = ContextTree()
    t.on_call(1)
    h1, ts1 = t.current_load_context(5)
    h2, ts2 = t.current_load_context(5)
    assert h1 == h2
    assert ts1 == 1         # first timestamp with no prior loops
    assert ts2 == 2
    leaf = t.node(h1)
    assert leaf.kind == LOADSITE and leaf.ident == 5


def test_paper_inner_loop_walkthrough_timestamps():
    # loop1 pass, loop2 pass, load -> T=3; second loop2 pass, load -> T=5.
    t = ContextTree()
    t.on_call(1)
    t.on_loop_head(11)
    t.on_loop_head(12)
    _, ts_old = t.current_load_context(2)
    assert ts_old == 3
    t.on_loop_head(12)
    h_new, ts_new = t.current_load_context(2)
    assert ts_new == 5
    assert t.node(t.node(h_new).parent.handle).last_pass_ts == 4


def test_paper_outer_loop_walkthrough_timestamps():
    # Three inner-loop trips then an outer pass: the second-trip load
    # lands on T=10 with loop1 at T=8 and loop2 at T=9.
    t = ContextTree()
    t.on_call(1)
    l1 = t.on_loop_head(11)
    for _ in range(3):
        t.on_loop_head(12)
        t.current_load_context(2)
    t.on_loop_head(11)
    l2 = t.on_loop_head(12)
    _, ts_new = t.current_load_context(2)
    assert ts_new == 10
    assert t.node(l1).last_pass_ts == 8
    assert t.node(l2).last_pass_ts == 9


def test_return_unwinds_past_loop_nodes():
    t = ContextTree()
    t.on_call(1)
    t.on_loop_head(4)
    t.on_call(2)
    t.on_loop_head(5)
    t.on_return()
    # Back in f's loop 4 context.
    assert t.cursor.kind == LOOP and t.cursor.ident == 4
    t.on_return()
    assert t.cursor is t.root


def test_return_with_no_frame_is_malformed():
    t = ContextTree()
    with pytest.raises(MalformedTraceError):
        t.on_return()
    t.on_call(1)
    t.on_loop_head(2)
    t.on_return()
    with pytest.raises(MalformedTraceError):
        t.on_return()


def test_sibling_loop_reheads_pop_deeper_loops():
    t = ContextTree()
    t.on_call(1)
    la = t.on_loop_head(10)
    t.on_loop_head(20)      # nested under 10 per the descent rule
    lb = t.on_loop_head(10)  # re-head of 10 pops loop 20
    assert la == lb
    assert t.cursor.handle == la


def test_same_loop_id_in_recursive_frames_stays_separate():
    t = ContextTree()
    t.on_call(1)
    outer = t.on_loop_head(10)
    t.on_call(1)
    inner = t.on_loop_head(10)
    assert outer != inner
    # The re-head matches the innermost frame's loop only.
    assert t.on_loop_head(10) == inner


def test_path_to_root_examples():
    t = ContextTree()
    assert [n.kind for n in t.path_to_root(0)] == [ROOT]
    t.on_call(1)
    t.on_loop_head(10)
    t.on_call(2)
    t.on_loop_head(20)
    h, _ = t.current_load_context(3)
    kinds = [n.kind for n in t.path_to_root(h)]
    assert kinds == [LOADSITE, LOOP, FUNCTION, LOOP, FUNCTION, ROOT]
    idents = [n.ident for n in t.path_to_root(h)][:-1]
    assert idents == [3, 20, 2, 10, 1]


def test_unknown_handle_raises():
    t = ContextTree()
    with pytest.raises(KeyError):
        t.node(99)


def test_counter_strictly_monotonic_random_walk():
    rng = random.Random(7)
    t = ContextTree()
    t.on_call(1)
    depth = 1
    seen = 0
    for _ in range(5000):
        r = rng.random()
        if r < 0.15 and depth < 8:
            t.on_call(rng.randrange(2, 6))
            depth += 1
        elif r < 0.25 and depth > 1:
            t.on_return()
            depth -= 1
        elif r < 0.55:
            t.on_loop_head(rng.randrange(10, 14))
            assert t.timestamp > seen
            seen = t.timestamp
        else:
            _, ts = t.current_load_context(rng.randrange(30, 33))
            assert ts > seen
            seen = ts


def test_interning_same_paths_share_handles():
    t = ContextTree()
    handles = []
    for _ in range(3):
        t.on_call(1)
        t.on_loop_head(10)
        h, _ = t.current_load_context(2)
        handles.append(h)
        t.on_return()
    assert len(set(handles)) == 1


def test_structural_path_excludes_root():
    t = ContextTree()
    t.on_call(1)
    t.on_loop_head(10)
    h, _ = t.current_load_context(2)
    assert t.structural_path(h) == ((FUNCTION, 1), (LOOP, 10), (LOADSITE, 2))
    assert t.structural_path(0) == ()


def test_nesting_property_inner_pass_after_outer():
    # Whenever both loops on a path have been passed since entering the
    # outer one, the inner loop's latest pass is the later one.
    t = ContextTree()
    t.on_call(1)
    rng = random.Random(3)
    outer = t.on_loop_head(10)
    inner = t.on_loop_head(20)
    for _ in range(200):
        if rng.random() < 0.4:
            t.on_loop_head(10)
            t.on_loop_head(20)
        else:
            t.on_loop_head(20)
        assert t.node(outer).last_pass_ts < t.node(inner).last_pass_ts
