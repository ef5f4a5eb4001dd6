"""Spatial redundancy detection over live data objects.

An object registry maps address ranges to static (image symbol) or dynamic
(allocation) objects; stack addresses belong to no object and are ignored.
Each thread keeps, per object, the value of its previous load on that
object and compares every new load against it. Per-object counters take
all loads that hit the object; per-object context-pair rows record the
redundancy instances.
"""

from bisect import bisect_right, insort

from .errors import MalformedTraceError
from .temporal import PairCounters, _fraction, fp_span_equal
from .trace import NONFP

STATIC = "static"
DYNAMIC = "dynamic"


class ObjectDescriptor:
    __slots__ = ("object_id", "kind", "name", "alloc_context", "base",
                 "size", "live", "report_key")

    def __init__(self, object_id, kind, name, alloc_context, base, size):
        self.object_id = object_id
        self.kind = kind
        self.name = name                    # static objects
        self.alloc_context = alloc_context  # dynamic objects: structural path
        self.base = base
        self.size = size
        self.live = True
        if kind == STATIC:
            self.report_key = (STATIC, name)
        else:
            self.report_key = (DYNAMIC, alloc_context)

    @property
    def end(self):
        return self.base + self.size


class ObjectRegistry:
    """Interval map of live objects, applied in global trace order.

    Live ranges stay pairwise disjoint; freed objects move to the archive
    with their identity intact so later reporting can still name them.
    """

    def __init__(self):
        self.bases = []         # sorted bases of live objects
        self.by_base = {}       # base -> ObjectDescriptor
        self.archive = []
        self.next_id = 1

    def _insert(self, desc):
        idx = bisect_right(self.bases, desc.base)
        if idx > 0:
            prev = self.by_base[self.bases[idx - 1]]
            if prev.end > desc.base:
                raise MalformedTraceError(
                    f"allocation [{desc.base:#x}, {desc.end:#x}) overlaps "
                    f"live object at {prev.base:#x}")
        if idx < len(self.bases):
            nxt = self.by_base[self.bases[idx]]
            if desc.end > nxt.base:
                raise MalformedTraceError(
                    f"allocation [{desc.base:#x}, {desc.end:#x}) overlaps "
                    f"live object at {nxt.base:#x}")
        insort(self.bases, desc.base)
        self.by_base[desc.base] = desc

    def on_alloc(self, base, size, alloc_context):
        desc = ObjectDescriptor(self.next_id, DYNAMIC, None, alloc_context,
                                base, size)
        self.next_id += 1
        self._insert(desc)
        return desc.object_id

    def on_free(self, base):
        desc = self.by_base.get(base)
        if desc is None or desc.kind != DYNAMIC:
            raise MalformedTraceError(f"free of {base:#x} matches no live "
                                      "dynamic object")
        desc.live = False
        del self.by_base[base]
        self.bases.remove(base)
        self.archive.append(desc)

    def on_static_image(self, objects):
        for name, base, size in objects:
            desc = ObjectDescriptor(self.next_id, STATIC, name, None,
                                    base, size)
            self.next_id += 1
            self._insert(desc)

    def lookup(self, addr):
        """The unique live object containing addr, or None."""
        idx = bisect_right(self.bases, addr)
        if idx == 0:
            return None
        desc = self.by_base[self.bases[idx - 1]]
        if addr < desc.end:
            return desc
        return None


class SpatialVerdict:
    __slots__ = ("redundant", "approx_class", "object_id")

    def __init__(self, redundant, approx_class, object_id):
        self.redundant = redundant
        self.approx_class = approx_class
        self.object_id = object_id


_NO_OBJECT = SpatialVerdict(False, False, None)


class SpatialDetector:
    """Per-thread spatial accumulator over a shared object registry."""

    def __init__(self, registry, scope_budget, epsilon):
        self.registry = registry
        self.scope_budget = scope_budget
        self.epsilon = epsilon
        self.prior = {}          # object_id -> (value, fp_class, ctx, ts)
        self.object_rows = {}    # report key -> PairCounters
        self.pair_rows = {}      # (report key, old ctx, new ctx) -> PairCounters
        self.verdicts = None     # optionally a list capturing verdicts

    def process_load(self, event, ctx, load_ts):
        desc = self.registry.lookup(event.addr)
        if desc is None:
            return _NO_OBJECT

        size = event.size
        value = event.value
        fp_class = event.fp_class
        approx_class = fp_class != NONFP

        rkey = desc.report_key
        obj_row = self.object_rows.get(rkey)
        if obj_row is None:
            obj_row = PairCounters()
            self.object_rows[rkey] = obj_row
        obj_row.total_instances += 1
        if approx_class:
            obj_row.total_bytes_approx += size
        else:
            obj_row.total_bytes_precise += size

        prev = self.prior.get(desc.object_id)
        redundant = False
        bit_equal = False
        if prev is not None:
            old_value, old_fp, old_ctx, old_ts = prev
            # Width-mixed consecutive loads are never redundant; the
            # comparison rule follows the current load's operand class.
            if len(old_value) == size:
                bit_equal = old_value == value
                if fp_class == NONFP:
                    redundant = bit_equal
                else:
                    redundant = bit_equal or fp_span_equal(
                        old_value, value, fp_class, self.epsilon)
        if redundant:
            obj_row.redundant_instances += 1
            if approx_class:
                obj_row.redundant_bytes_approx += size
                if bit_equal:
                    obj_row.fp_exact_instances += 1
            else:
                obj_row.redundant_bytes_precise += size
            pkey = (rkey, old_ctx, ctx)
            pair_row = self.pair_rows.get(pkey)
            if pair_row is None:
                pair_row = PairCounters()
                self.pair_rows[pkey] = pair_row
            pair_row.total_instances += 1
            pair_row.redundant_instances += 1
            if approx_class:
                pair_row.total_bytes_approx += size
                pair_row.redundant_bytes_approx += size
                if bit_equal:
                    pair_row.fp_exact_instances += 1
            else:
                pair_row.total_bytes_precise += size
                pair_row.redundant_bytes_precise += size
            self.scope_budget.resolve(pkey, old_ctx, old_ts, ctx, load_ts)

        self.prior[desc.object_id] = (value, fp_class, ctx, load_ts)
        return SpatialVerdict(redundant, approx_class, desc.object_id)


def object_fraction(record, object_rows):
    """Per-object redundancy fractions: this object's redundant bytes over
    the loaded bytes summed across all objects, per class."""
    total_precise = sum(r.total_bytes_precise for r in object_rows)
    total_approx = sum(r.total_bytes_approx for r in object_rows)
    return (_fraction(record.redundant_bytes_precise, total_precise),
            _fraction(record.redundant_bytes_approx, total_approx))
