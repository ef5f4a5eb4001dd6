"""Per-thread loop-extended calling context tree.

Contexts are paths Root -> Function -> ... -> Loop -> ... -> LoadSite,
interned so equal paths share one node and one dense integer handle.
A per-thread counter ticks on every loop-header pass and every monitored
load; loop nodes remember the counter value of their latest pass, which
is what scope resolution consumes.
"""

from .errors import MalformedTraceError

ROOT = 0
FUNCTION = 1
LOOP = 2
LOADSITE = 3

NODE_KIND_NAMES = {ROOT: "root", FUNCTION: "function", LOOP: "loop",
                   LOADSITE: "load"}


class ContextNode:
    __slots__ = ("kind", "ident", "parent", "handle", "children",
                 "last_pass_ts")

    def __init__(self, kind, ident, parent, handle):
        self.kind = kind
        self.ident = ident          # site_id or loop_id; 0 for the root
        self.parent = parent        # ContextNode or None for the root
        self.handle = handle
        self.children = {}          # (kind, ident) -> ContextNode
        self.last_pass_ts = 0       # loop nodes only


class ContextTree:
    """One tree per thread stream; not safe for sharing across workers."""

    def __init__(self):
        self.root = ContextNode(ROOT, 0, None, 0)
        self.nodes = [self.root]    # handle -> node
        self.cursor = self.root
        self.timestamp = 0

    def _child(self, node, kind, ident):
        key = (kind, ident)
        child = node.children.get(key)
        if child is None:
            child = ContextNode(kind, ident, node, len(self.nodes))
            self.nodes.append(child)
            node.children[key] = child
        return child

    def on_call(self, site_id):
        self.cursor = self._child(self.cursor, FUNCTION, site_id)
        return self.cursor.handle

    def on_return(self):
        # Unwind lazily past any loop nodes still on the path, then leave
        # the innermost open frame.
        node = self.cursor
        while node.kind == LOOP:
            node = node.parent
        if node.kind != FUNCTION:
            raise MalformedTraceError("return with no open frame")
        self.cursor = node.parent
        return self.cursor.handle

    def on_loop_head(self, loop_id):
        # A pass of a loop already on the current frame's loop stack pops
        # back to it; anything else is a descent into a (possibly new)
        # nested loop node. Loops in outer frames are never popped to.
        node = self.cursor
        while node.kind == LOOP:
            if node.ident == loop_id:
                self.cursor = node
                self.timestamp += 1
                node.last_pass_ts = self.timestamp
                return node.handle
            node = node.parent
        child = self._child(self.cursor, LOOP, loop_id)
        self.timestamp += 1
        child.last_pass_ts = self.timestamp
        self.cursor = child
        return child.handle

    def current_load_context(self, site_id):
        """Handle of the load-site child under the cursor plus a fresh
        timestamp; the cursor does not move (load sites are leaves)."""
        self.timestamp += 1
        return self._child(self.cursor, LOADSITE, site_id).handle, self.timestamp

    def node(self, handle):
        try:
            return self.nodes[handle]
        except IndexError:
            raise KeyError(f"unknown context handle {handle}") from None

    def path_to_root(self, handle):
        """Node list from the handle's node (leaf first) up to the root."""
        node = self.node(handle)
        path = []
        while node is not None:
            path.append(node)
            node = node.parent
        return path

    def root_path(self, handle):
        """Node list root-first; the orientation scope search wants."""
        path = self.path_to_root(handle)
        path.reverse()
        return path

    def structural_path(self, handle):
        """(kind, ident) tuples root-first, excluding the root.

        Thread-independent identity of a context; equal paths in different
        threads' trees compare equal.
        """
        return tuple((n.kind, n.ident) for n in self.root_path(handle)[1:])
