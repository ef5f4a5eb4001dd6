"""Redundancy scope resolution.

The scope of a redundancy pair is the outermost loop, on the common
root-prefix of the two contexts, whose latest header pass happened strictly
between the two loads. When the contexts differ only the shared prefix up
to (and including) their lowest common ancestor is searched.
"""

from .cct import LOOP


def resolve_scope(tree, old_handle, t_old, new_handle, t_new):
    """Loop handle of the enclosing redundancy scope, or None.

    Both handles must come from `tree`; t_old < t_new is required. Walks
    root-to-leaf so the first qualifying loop is the outermost one.
    """
    if t_old >= t_new:
        raise ValueError(f"t_old {t_old} is not before t_new {t_new}")
    path = tree.root_path(old_handle)
    if new_handle != old_handle:
        other = tree.root_path(new_handle)
        prefix = []
        for a, b in zip(path, other):
            if a is not b:
                break
            prefix.append(a)
        path = prefix
    for node in path:
        if node.kind == LOOP and t_old < node.last_pass_ts < t_new:
            return node.handle
    return None


class ScopeBudget:
    """Caps scope traversals per pair key; the first result sticks.

    Later redundancy instances of the same pair reuse the first resolution
    even if a fresh traversal (still within the budget) would disagree.
    """

    _UNSET = object()

    def __init__(self, tree, limit=1):
        if limit < 1:
            raise ValueError("scope budget must be >= 1")
        self.tree = tree
        self.limit = limit
        self.entries = {}       # pair key -> [traversals, first scope]
        self.traversals = 0     # total resolve_scope runs, for tests

    def resolve(self, key, old_handle, t_old, new_handle, t_new):
        entry = self.entries.get(key)
        if entry is None:
            entry = [0, self._UNSET]
            self.entries[key] = entry
        if entry[0] < self.limit:
            entry[0] += 1
            self.traversals += 1
            scope = resolve_scope(self.tree, old_handle, t_old,
                                  new_handle, t_new)
            if entry[1] is self._UNSET:
                entry[1] = scope
        return entry[1] if entry[1] is not self._UNSET else None

    def scope_for(self, key):
        """Resolved scope for a pair key; None when never redundant."""
        entry = self.entries.get(key)
        if entry is None or entry[1] is self._UNSET:
            return None
        return entry[1]
