"""End-to-end trace analysis: demultiplex threads, run detection, merge.

Each thread of the trace gets its own context tree, shadow memory and
detectors; object lifecycle events apply globally in file order. Only load
detection is gated by the sampler: calls, returns and loop headers always
maintain the context trees so contexts stay correct when a monitoring
window reopens.
"""

from dataclasses import dataclass, field

from . import trace as tr
from .cct import ContextTree
from .errors import MalformedTraceError, TraceDecodeError
from .profiles import canonicalize, merge_all
from .sampling import SamplingConfig, is_monitored
from .scope import ScopeBudget
from .shadow import ShadowTable
from .spatial import ObjectRegistry, SpatialDetector
from .temporal import DEFAULT_EPSILON, TemporalDetector


@dataclass
class AnalysisConfig:
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    approx_epsilon: float = DEFAULT_EPSILON
    scope_budget: int = 1

    def meta(self):
        return {
            "approx_epsilon": self.approx_epsilon,
            "scope_budget": self.scope_budget,
            "sampling": {
                "enabled": self.sampling.enabled,
                "window_enable": self.sampling.window_enable,
                "window_disable": self.sampling.window_disable,
            },
        }


class ThreadWorker:
    """Analysis state confined to one thread's event stream."""

    def __init__(self, registry, config):
        self.tree = ContextTree()
        self.shadow = ShadowTable()
        self.temporal_budget = ScopeBudget(self.tree, config.scope_budget)
        self.spatial_budget = ScopeBudget(self.tree, config.scope_budget)
        self.temporal = TemporalDetector(self.shadow, self.temporal_budget,
                                         config.approx_epsilon)
        self.spatial = SpatialDetector(registry, self.spatial_budget,
                                       config.approx_epsilon)
        self.meta = config.meta()


def analyze_events(events, source_map, config=None, verdict_sink=None):
    """Run the full analysis over an event stream; returns the merged
    canonical Profile.

    `verdict_sink`, when given, receives one
    (thread_id, temporal LoadVerdict, SpatialVerdict) tuple per monitored
    load, in file order; used by oracle-equivalence tests.
    """
    if config is None:
        config = AnalysisConfig()
    registry = ObjectRegistry()
    workers = {}
    sampling = config.sampling

    position = -1
    try:
        for position, ev in enumerate(events):
            tid = ev.thread_id
            worker = workers.get(tid)
            if worker is None:
                worker = ThreadWorker(registry, config)
                workers[tid] = worker
            kind = ev.kind
            if kind == tr.LOAD:
                if not is_monitored(ev.ins_index, sampling):
                    continue
                ctx, load_ts = worker.tree.current_load_context(ev.site_id)
                tv = worker.temporal.process_load(ev, ctx, load_ts)
                sv = worker.spatial.process_load(ev, ctx, load_ts)
                if verdict_sink is not None:
                    verdict_sink((tid, tv, sv))
            elif kind == tr.CALL:
                worker.tree.on_call(ev.site_id)
            elif kind == tr.RETURN:
                worker.tree.on_return()
            elif kind == tr.LOOPHEAD:
                worker.tree.on_loop_head(ev.loop_id)
            elif kind == tr.ALLOC:
                ctx_path = worker.tree.structural_path(
                    worker.tree.cursor.handle)
                registry.on_alloc(ev.base, ev.alloc_size, ctx_path)
            elif kind == tr.FREE:
                registry.on_free(ev.base)
            elif kind == tr.STATIC_IMAGE:
                registry.on_static_image(ev.objects)
            # THREAD_START only announces the thread
    except MalformedTraceError as exc:
        raise MalformedTraceError(f"event {position}: {exc}") from None

    profiles = [canonicalize(workers[tid], source_map)
                for tid in sorted(workers)]
    return merge_all(profiles)


def sniff_format(path):
    """'binary' or 'text', by the byte after the shared LRT1 magic."""
    with open(path, "rb") as f:
        head = f.read(6)
    if head[:4] == tr.MAGIC and head[4:6] == b"\x01\x00":
        return "binary"
    if head[:5] == b"LRT1 ":
        return "text"
    raise TraceDecodeError(f"{path}: not a trace file", 0)


def analyze_path(path, config=None, verdict_sink=None):
    """Analyze a trace file (binary or text form)."""
    if sniff_format(path) == "binary":
        with open(path, "rb") as f:
            events, source_map = tr.read_trace(f)
            return analyze_events(events, source_map, config, verdict_sink)
    with open(path, "r", encoding="utf-8") as f:
        events, source_map = tr.read_text_trace(f)
    return analyze_events(events, source_map, config, verdict_sink)
