"""Overlapping group assignments."""

from __future__ import annotations

import numpy as np


class Cover:
    """Per-node affiliation maps ``{group: weight}`` with weights summing to 1."""

    def __init__(self, affiliations):
        self.affiliations = [dict(a) for a in affiliations]

    @classmethod
    def from_groups(cls, n, groups):
        """Equal-weight cover from a list of (possibly overlapping) node sets."""
        member = [[] for _ in range(n)]
        for gid, nodes in enumerate(groups):
            for v in nodes:
                member[int(v)].append(gid)
        return cls([{g: 1.0 / len(ms) for g in ms} for ms in member])

    @property
    def n(self):
        return len(self.affiliations)

    def groups(self):
        """Mapping group -> sorted member list."""
        out = {}
        for v, aff in enumerate(self.affiliations):
            for g, w in aff.items():
                if w > 0:
                    out.setdefault(g, []).append(v)
        return {g: sorted(vs) for g, vs in sorted(out.items())}

    def memberships(self, v):
        return sorted(g for g, w in self.affiliations[v].items() if w > 0)

    def max_memberships(self):
        return max((len(self.memberships(v)) for v in range(self.n)), default=0)

    def is_partition(self):
        return all(len(self.memberships(v)) == 1 for v in range(self.n))

    def to_labels(self):
        """Strongest affiliation per node (ties to the smallest group id)."""
        out = np.empty(self.n, np.int64)
        for v, aff in enumerate(self.affiliations):
            best = max(aff.values())
            out[v] = min(g for g, w in aff.items() if w == best)
        return out

    def sums(self):
        return np.array([sum(a.values()) for a in self.affiliations])

    def __repr__(self):
        return f"Cover(n={self.n}, groups={len(self.groups())})"
