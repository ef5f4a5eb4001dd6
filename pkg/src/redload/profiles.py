"""Canonical profiles: thread-independent context keys, merging, JSON.

Per-thread accumulators key rows by context handles, which only mean
something inside one thread's tree. Canonicalization rewrites every handle
into a tuple of (kind, name, file, line) frames resolved through the
source map; profiles with canonical keys can then be merged by plain
counter addition, rows matching iff old context, new context and scope all
match.
"""

import json
from dataclasses import dataclass, field

from .cct import FUNCTION, LOADSITE, LOOP
from .errors import RedloadError
from .spatial import DYNAMIC, STATIC
from .temporal import PairCounters, ProgramTotals, program_fraction

PROFILE_FORMAT = "redload-profile"
PROFILE_VERSION = 1

# Sentinel meta for merges of profiles with differing analysis settings.
META_MIXED = {"mixed": True}


def canonical_frame(kind, ident, source_map):
    if kind == FUNCTION or kind == LOADSITE:
        try:
            function, file, line = source_map.site(ident)
        except KeyError:
            raise RedloadError(f"unresolved site_id {ident}") from None
        name = function
        tag = "function" if kind == FUNCTION else "load"
    elif kind == LOOP:
        try:
            file, line = source_map.loop(ident)
        except KeyError:
            raise RedloadError(f"unresolved loop_id {ident}") from None
        name = ""
        tag = "loop"
    else:
        raise RedloadError(f"cannot canonicalize node kind {kind}")
    return (tag, name, file, line)


def canonical_path(structural_path, source_map):
    return tuple(canonical_frame(kind, ident, source_map)
                 for kind, ident in structural_path)


@dataclass(eq=True)
class Profile:
    """Whole-execution (or one thread's, pre-merge) redundancy profile."""

    totals: ProgramTotals = field(default_factory=ProgramTotals)
    temporal_pairs: dict = field(default_factory=dict)
    objects: dict = field(default_factory=dict)
    spatial_pairs: dict = field(default_factory=dict)
    thread_count: int = 0
    meta: dict | None = None


def canonicalize(worker, source_map):
    """Rewrite one thread worker's accumulators into a canonical Profile.

    `worker` carries tree, temporal and spatial detectors, and the two
    scope budgets. Raises when a handle's site or loop id is missing from
    the source map, naming the handle.
    """
    tree = worker.tree
    path_cache = {None: None}

    def path_of(handle):
        if handle in path_cache:
            return path_cache[handle]
        try:
            p = canonical_path(tree.structural_path(handle), source_map)
        except RedloadError as exc:
            raise RedloadError(f"context handle {handle}: {exc}") from None
        path_cache[handle] = p
        return p

    temporal = worker.temporal
    profile = Profile(totals=temporal.totals.copy(), thread_count=1,
                      meta=worker.meta)

    t_budget = worker.temporal_budget
    for (old_h, new_h), counters in temporal.rows.items():
        scope_h = t_budget.scope_for((old_h, new_h))
        key = (path_of(old_h), path_of(new_h), path_of(scope_h))
        row = profile.temporal_pairs.get(key)
        if row is None:
            profile.temporal_pairs[key] = counters.copy()
        else:
            row.add(counters)

    def object_key(rkey):
        kind, ident = rkey
        if kind == STATIC:
            return (STATIC, ident)
        return (DYNAMIC, canonical_path(ident, source_map))

    spatial = worker.spatial
    for rkey, counters in spatial.object_rows.items():
        key = object_key(rkey)
        row = profile.objects.get(key)
        if row is None:
            profile.objects[key] = counters.copy()
        else:
            row.add(counters)

    s_budget = worker.spatial_budget
    for (rkey, old_h, new_h), counters in spatial.pair_rows.items():
        scope_h = s_budget.scope_for((rkey, old_h, new_h))
        key = (object_key(rkey), path_of(old_h), path_of(new_h),
               path_of(scope_h))
        row = profile.spatial_pairs.get(key)
        if row is None:
            profile.spatial_pairs[key] = counters.copy()
        else:
            row.add(counters)

    return profile


def _merge_meta(a, b):
    if a == b:
        return None if a is None else dict(a)
    if a is None:
        return dict(b)
    if b is None:
        return dict(a)
    return dict(META_MIXED)


def merge(a, b):
    """Row-wise sum of two profiles; keys match iff fully equal."""
    out = Profile(totals=a.totals.copy(),
                  thread_count=a.thread_count + b.thread_count,
                  meta=_merge_meta(a.meta, b.meta))
    out.totals.add(b.totals)
    for source, target in ((a.temporal_pairs, out.temporal_pairs),
                           (b.temporal_pairs, out.temporal_pairs),
                           (a.objects, out.objects),
                           (b.objects, out.objects),
                           (a.spatial_pairs, out.spatial_pairs),
                           (b.spatial_pairs, out.spatial_pairs)):
        for key, counters in source.items():
            row = target.get(key)
            if row is None:
                target[key] = counters.copy()
            else:
                row.add(counters)
    return out


def merge_all(profiles):
    """Pairwise tree reduction; the result is independent of tree shape."""
    level = list(profiles)
    if not level:
        return Profile()
    while len(level) > 1:
        nxt = [merge(level[i], level[i + 1])
               for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


# ---------------------------------------------------------------- JSON --

def _frame_doc(frame):
    kind, name, file, line = frame
    return {"kind": kind, "name": name, "file": file, "line": line}


def _path_doc(path):
    if path is None:
        return None
    return [_frame_doc(f) for f in path]


def _counters_doc(c):
    return {
        "redundant_bytes_precise": c.redundant_bytes_precise,
        "redundant_bytes_approx": c.redundant_bytes_approx,
        "total_bytes_precise": c.total_bytes_precise,
        "total_bytes_approx": c.total_bytes_approx,
        "redundant_instances": c.redundant_instances,
        "total_instances": c.total_instances,
        "fp_exact_instances": c.fp_exact_instances,
    }


def _object_key_doc(key):
    kind, ident = key
    if kind == STATIC:
        return {"kind": STATIC, "name": ident}
    return {"kind": DYNAMIC, "context": _path_doc(ident)}


def _sorted_rows(rows, key_doc_fn):
    docs = []
    for key, counters in rows.items():
        doc = key_doc_fn(key)
        doc["counters"] = _counters_doc(counters)
        docs.append(doc)
    docs.sort(key=lambda d: json.dumps(d, sort_keys=True))
    return docs


def to_json(profile):
    precise, approx = program_fraction(profile.totals)
    return {
        "format": PROFILE_FORMAT,
        "version": PROFILE_VERSION,
        "thread_count": profile.thread_count,
        "meta": profile.meta,
        "totals": {
            "total_nonfp_bytes": profile.totals.total_nonfp_bytes,
            "total_fp_bytes": profile.totals.total_fp_bytes,
            "redundant_nonfp_bytes": profile.totals.redundant_nonfp_bytes,
            "redundant_fp_bytes": profile.totals.redundant_fp_bytes,
        },
        "program_fractions": {
            "precise": precise[0], "precise_defined": precise[1],
            "approx": approx[0], "approx_defined": approx[1],
        },
        "temporal_pairs": _sorted_rows(
            profile.temporal_pairs,
            lambda k: {"old_context": _path_doc(k[0]),
                       "new_context": _path_doc(k[1]),
                       "scope": _path_doc(k[2])}),
        "objects": _sorted_rows(
            profile.objects,
            lambda k: {"object": _object_key_doc(k)}),
        "spatial_pairs": _sorted_rows(
            profile.spatial_pairs,
            lambda k: {"object": _object_key_doc(k[0]),
                       "old_context": _path_doc(k[1]),
                       "new_context": _path_doc(k[2]),
                       "scope": _path_doc(k[3])}),
    }


def _frame_from(doc):
    return (doc["kind"], doc["name"], doc["file"], doc["line"])


def _path_from(doc):
    if doc is None:
        return None
    return tuple(_frame_from(f) for f in doc)


def _counters_from(doc):
    return PairCounters(
        redundant_bytes_precise=doc["redundant_bytes_precise"],
        redundant_bytes_approx=doc["redundant_bytes_approx"],
        total_bytes_precise=doc["total_bytes_precise"],
        total_bytes_approx=doc["total_bytes_approx"],
        redundant_instances=doc["redundant_instances"],
        total_instances=doc["total_instances"],
        fp_exact_instances=doc["fp_exact_instances"],
    )


def _object_key_from(doc):
    if doc["kind"] == STATIC:
        return (STATIC, doc["name"])
    return (DYNAMIC, _path_from(doc["context"]))


def from_json(doc):
    if doc.get("format") != PROFILE_FORMAT:
        raise RedloadError(f"not a {PROFILE_FORMAT} document")
    if doc.get("version") != PROFILE_VERSION:
        raise RedloadError(f"unsupported profile version {doc.get('version')}")
    t = doc["totals"]
    profile = Profile(
        totals=ProgramTotals(t["total_nonfp_bytes"], t["total_fp_bytes"],
                             t["redundant_nonfp_bytes"],
                             t["redundant_fp_bytes"]),
        thread_count=doc["thread_count"],
        meta=doc.get("meta"),
    )
    for row in doc["temporal_pairs"]:
        key = (_path_from(row["old_context"]), _path_from(row["new_context"]),
               _path_from(row["scope"]))
        profile.temporal_pairs[key] = _counters_from(row["counters"])
    for row in doc["objects"]:
        profile.objects[_object_key_from(row["object"])] = \
            _counters_from(row["counters"])
    for row in doc["spatial_pairs"]:
        key = (_object_key_from(row["object"]), _path_from(row["old_context"]),
               _path_from(row["new_context"]), _path_from(row["scope"]))
        profile.spatial_pairs[key] = _counters_from(row["counters"])
    return profile


def save(profile, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_json(profile), f, indent=1, sort_keys=True)
        f.write("\n")


def load(path):
    with open(path, "r", encoding="utf-8") as f:
        return from_json(json.load(f))
