"""Bitmask search tables shared by the branch-and-bound solvers.

Point subsets inside a solver run are Python int bitmasks over local
positions; ball queries resolve through per-row sorted distances and prefix
masks, so the combinatorial layers stay allocation-free.
"""

from __future__ import annotations

from bisect import bisect_right

import numpy as np

from . import kernels
from .metric import MetricSpace
from .nets import NetView


def mask_bits(mask: int):
    """Set-bit positions of ``mask``, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(positions) -> int:
    out = 0
    for p in positions:
        out |= 1 << p
    return out


class BallTable:
    """Ball/diameter queries over a fixed local point set."""

    def __init__(self, space: MetricSpace, ids, preimage_sizes=None):
        self.ids = np.asarray(sorted(int(p) for p in ids), dtype=np.int64)
        self.m = len(self.ids)
        self.pos = {int(p): i for i, p in enumerate(self.ids)}
        self.dist = np.ascontiguousarray(space.matrix()[np.ix_(self.ids, self.ids)])
        self.full_mask = (1 << self.m) - 1
        if preimage_sizes is None:
            self.preimage_sizes = [1] * self.m
        else:
            self.preimage_sizes = [int(preimage_sizes[int(p)]) for p in self.ids]
        order = np.argsort(self.dist, axis=1, kind="stable")
        self._sorted = [self.dist[i, order[i]].tolist() for i in range(self.m)]
        self._prefix: list[list[int]] = []
        for i in range(self.m):
            masks = [0]
            acc = 0
            for j in order[i]:
                acc |= 1 << int(j)
                masks.append(acc)
            self._prefix.append(masks)
        self._diam_cache: dict[int, float] = {}

    @classmethod
    def from_view(cls, view: NetView) -> "BallTable":
        sizes = {int(p): len(view.preimages[int(p)]) for p in view.net_ids}
        return cls(view.space, view.net_ids, sizes)

    def ball(self, i: int, radius: float) -> int:
        """Mask of local points within ``radius`` of local point ``i``."""
        return self._prefix[i][bisect_right(self._sorted[i], radius)]

    def indices(self, mask: int) -> np.ndarray:
        return np.fromiter(mask_bits(mask), dtype=np.int64)

    def diameter(self, mask: int) -> float:
        got = self._diam_cache.get(mask)
        if got is None:
            got = float(kernels.subset_diameter(self.dist, self.indices(mask)))
            self._diam_cache[mask] = got
        return got

    def farthest_pair(self, mask: int) -> tuple[int, int, float]:
        """Lexicographically smallest pair of local points realizing the diameter."""
        i, j, d = kernels.farthest_pair(self.dist, self.indices(mask))
        return int(i), int(j), float(d)

    def global_ids(self, mask: int) -> list[int]:
        return [int(self.ids[i]) for i in mask_bits(mask)]
