"""Temporal redundancy detection over shadow memory.

A load is temporally redundant when it returns the same value as the
previous load of the same location. Non-FP loads must match on every byte;
F32/F64 loads are compared element-wise and may match approximately within
a relative epsilon. Byte and instance counters accumulate per context pair
and program-wide, partitioned by operand class: non-FP loads feed the
precise counters, FP loads the approximate ones.
"""

import math
import struct
from dataclasses import dataclass

from .trace import F32, NONFP

DEFAULT_EPSILON = 0.01


@dataclass(slots=True)
class PairCounters:
    """Counters of one accumulator row (context pair or data object)."""

    redundant_bytes_precise: int = 0
    redundant_bytes_approx: int = 0
    total_bytes_precise: int = 0
    total_bytes_approx: int = 0
    redundant_instances: int = 0
    total_instances: int = 0
    fp_exact_instances: int = 0

    def add(self, other):
        self.redundant_bytes_precise += other.redundant_bytes_precise
        self.redundant_bytes_approx += other.redundant_bytes_approx
        self.total_bytes_precise += other.total_bytes_precise
        self.total_bytes_approx += other.total_bytes_approx
        self.redundant_instances += other.redundant_instances
        self.total_instances += other.total_instances
        self.fp_exact_instances += other.fp_exact_instances

    def copy(self):
        return PairCounters(self.redundant_bytes_precise,
                            self.redundant_bytes_approx,
                            self.total_bytes_precise,
                            self.total_bytes_approx,
                            self.redundant_instances,
                            self.total_instances,
                            self.fp_exact_instances)


@dataclass(slots=True)
class ProgramTotals:
    total_nonfp_bytes: int = 0
    total_fp_bytes: int = 0
    redundant_nonfp_bytes: int = 0
    redundant_fp_bytes: int = 0

    def add(self, other):
        self.total_nonfp_bytes += other.total_nonfp_bytes
        self.total_fp_bytes += other.total_fp_bytes
        self.redundant_nonfp_bytes += other.redundant_nonfp_bytes
        self.redundant_fp_bytes += other.redundant_fp_bytes

    def copy(self):
        return ProgramTotals(self.total_nonfp_bytes, self.total_fp_bytes,
                             self.redundant_nonfp_bytes,
                             self.redundant_fp_bytes)


@dataclass(slots=True)
class LoadVerdict:
    redundant: bool
    approx_class: bool          # True for FP loads (approximate counters)
    prior: tuple | None         # (ctx handle, timestamp) of the prior load


def approx_equal(a, b, epsilon=DEFAULT_EPSILON):
    """True when bit-identical, or both finite and within a relative
    epsilon of the larger magnitude. NaN and infinities only ever match
    their exact bit patterns."""
    if math.isnan(a) or math.isnan(b):
        return struct.pack("<d", a) == struct.pack("<d", b)
    if a == b:
        return True
    if math.isinf(a) or math.isinf(b):
        return False
    return abs(a - b) <= epsilon * max(abs(a), abs(b))


_F32_ONE = struct.Struct("<f")
_F64_ONE = struct.Struct("<d")


def fp_span_equal(old, new, fp_class, epsilon):
    """Element-wise approximate comparison of two equal-length byte spans."""
    if fp_class == F32:
        width, one = 4, _F32_ONE
    else:
        width, one = 8, _F64_ONE
    for off in range(0, len(new), width):
        ob = old[off:off + width]
        nb = new[off:off + width]
        if ob == nb:
            continue
        a = one.unpack(ob)[0]
        b = one.unpack(nb)[0]
        # Not bit-identical, so NaN/Inf on either side cannot match.
        if not (math.isfinite(a) and math.isfinite(b)):
            return False
        if abs(a - b) > epsilon * max(abs(a), abs(b)):
            return False
    return True


class TemporalDetector:
    """Per-thread accumulator of temporal redundancy.

    Rows are keyed by (prior ctx handle or None, current ctx handle); the
    scope resolved for a pair attaches to its row at canonicalization time
    through the shared ScopeBudget.
    """

    def __init__(self, shadow, scope_budget, epsilon=DEFAULT_EPSILON):
        self.shadow = shadow
        self.scope_budget = scope_budget
        self.epsilon = epsilon
        self.rows = {}              # (old handle | None, new handle) -> PairCounters
        self.totals = ProgramTotals()

    def process_load(self, event, ctx, load_ts):
        size = event.size
        value = event.value
        fp_class = event.fp_class
        old, prior_ctx, prior_ts = self.shadow.probe_update(
            event.addr, size, value, ctx, load_ts)

        bit_equal = old == value
        if old is None:
            redundant = False
        elif fp_class == NONFP:
            redundant = bit_equal
        else:
            redundant = bit_equal or fp_span_equal(old, value, fp_class,
                                                   self.epsilon)

        approx_class = fp_class != NONFP
        totals = self.totals
        key = (prior_ctx, ctx)
        row = self.rows.get(key)
        if row is None:
            row = PairCounters()
            self.rows[key] = row
        row.total_instances += 1
        if approx_class:
            totals.total_fp_bytes += size
            row.total_bytes_approx += size
        else:
            totals.total_nonfp_bytes += size
            row.total_bytes_precise += size
        if redundant:
            row.redundant_instances += 1
            if approx_class:
                totals.redundant_fp_bytes += size
                row.redundant_bytes_approx += size
                if bit_equal:
                    row.fp_exact_instances += 1
            else:
                totals.redundant_nonfp_bytes += size
                row.redundant_bytes_precise += size
            self.scope_budget.resolve(key, prior_ctx, prior_ts, ctx, load_ts)

        prior = (prior_ctx, prior_ts) if prior_ctx is not None else None
        return LoadVerdict(redundant, approx_class, prior)


def _fraction(redundant, total):
    """(value, defined); zero denominators report 0 with defined=False."""
    if total == 0:
        return 0.0, False
    return redundant / total, True


def program_fraction(totals):
    """Whole-program redundancy fractions (precise, approx), each a
    (value, defined) pair."""
    return (_fraction(totals.redundant_nonfp_bytes, totals.total_nonfp_bytes),
            _fraction(totals.redundant_fp_bytes, totals.total_fp_bytes))


def pair_fraction(record, totals):
    """Per-pair redundancy fractions over the program-wide denominators."""
    return (_fraction(record.redundant_bytes_precise,
                      totals.total_nonfp_bytes),
            _fraction(record.redundant_bytes_approx, totals.total_fp_bytes))
