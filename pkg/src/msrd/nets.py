"""Nested power-of-two nets with budget-indexed views and preimage maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .metric import (
    Ball,
    BallSolution,
    MetricSpace,
    PartitionSolution,
    round_up_pow2,
)


@dataclass(frozen=True)
class NetLevel:
    scale: float
    ids: np.ndarray                  # net points, ascending global ids
    parent: dict[int, int] | None    # previous-level point -> its net point here


class NetHierarchy:
    """Nested nets over a point subset: level i is a 2^i-net of level i-1.

    Levels are built greedily in ascending id order (a point is admitted iff
    no already-admitted point lies strictly within the scale) and extended
    past ceil(log2(diam)) until a single point remains, so every budget can
    be answered.  Skipped points get the nearest admitted point (ties: lowest
    id) as parent.
    """

    def __init__(self, space: MetricSpace, subset):
        ids = np.asarray(sorted(subset), dtype=np.int64)
        if len(ids) == 0:
            raise ValueError("net hierarchy needs a nonempty subset")
        self.space = space
        self.ids = ids
        dist = space.matrix()
        levels = [NetLevel(1.0, ids, None)]
        current = ids
        scale = 1.0
        while len(current) > 1:
            scale *= 2.0
            admitted, parent = kernels.greedy_net_level(dist, current, scale)
            nxt = current[np.asarray(admitted, dtype=bool)]
            pmap = {int(p): int(par) for p, par in zip(current, parent)}
            levels.append(NetLevel(scale, nxt, pmap))
            current = nxt
        self.levels = levels

    def level_for_scale(self, scale: float) -> int:
        """Index of the level with the given power-of-two scale (clamped to top)."""
        if scale <= 1.0:
            return 0
        return min(int(round(math.log2(scale))), len(self.levels) - 1)

    def representative(self, point: int, level: int) -> int:
        rep = point
        for lv in self.levels[1 : level + 1]:
            rep = lv.parent[rep]
        return rep


@dataclass(frozen=True)
class NetView:
    """A single budgeted net with its preimage partition of the component."""

    space: MetricSpace
    component: np.ndarray
    budget: float
    spacing: float
    net_ids: np.ndarray
    preimages: dict[int, frozenset[int]]
    identity: bool

    def preimage_size(self, net_point: int) -> int:
        return len(self.preimages[net_point])


def build_hierarchy(space: MetricSpace, subset) -> NetHierarchy:
    return NetHierarchy(space, subset)


def net_for_budget(h: NetHierarchy, budget: float, k: int, eps: float) -> NetView:
    """Materialize the net whose spacing is eps*budget/k rounded up to a power of 2."""
    if budget <= 0 or not 0 < eps < 1 or k < 1:
        raise ValueError("need budget > 0, 0 < eps < 1, k >= 1")
    spacing = round_up_pow2(eps * budget / k)
    if spacing < 1.0 or len(h.levels) == 1:
        pre = {int(p): frozenset([int(p)]) for p in h.ids}
        return NetView(h.space, h.ids, budget, spacing, h.ids, pre, True)
    level = h.level_for_scale(spacing)
    if level == 0:
        pre = {int(p): frozenset([int(p)]) for p in h.ids}
        return NetView(h.space, h.ids, budget, spacing, h.ids, pre, True)
    buckets: dict[int, set[int]] = {int(p): set() for p in h.levels[level].ids}
    for p in h.ids:
        rep = h.representative(int(p), level)
        buckets[rep].add(int(p))
    pre = {p: frozenset(members) for p, members in buckets.items()}
    return NetView(h.space, h.ids, budget, spacing, h.levels[level].ids, pre, False)


def extend_to_component(view: NetView, sol):
    """Lift a net-level solution to the whole component via the preimage map.

    Balls grow to radius + spacing (more if a chained preimage point needs
    it); clusters become the union of their members' preimages.  Identity
    views return the solution unchanged.
    """
    net_set = {int(p) for p in view.net_ids}
    if isinstance(sol, BallSolution):
        refs = {b.center for b in sol.balls} | set(sol.outliers)
    else:
        refs = set(sol.outliers)
        for c in sol.clusters:
            refs |= c.members
    if not refs <= net_set:
        raise ValueError("solution references a point outside the net")
    if view.identity:
        return sol
    dist = view.space.matrix()

    if isinstance(sol, BallSolution):
        balls = []
        for b in sol.balls:
            covered_net = [p for p in net_set if dist[b.center, p] <= b.radius]
            claimed = sorted(set().union(*(view.preimages[p] for p in covered_net)))
            tight = max(dist[b.center, p] for p in claimed)
            balls.append(Ball(b.center, max(b.radius + view.spacing, tight)))
        outliers = set()
        for z in sorted(sol.outliers):
            outliers |= view.preimages[z]
        for b in balls:
            outliers -= {p for p in outliers if dist[b.center, p] <= b.radius}
        return BallSolution(tuple(balls), frozenset(outliers))

    clusters = []
    for c in sol.clusters:
        members = set()
        for p in sorted(c.members):
            members |= view.preimages[p]
        clusters.append(type(c)(frozenset(members), c.tag))
    outliers = set()
    for z in sorted(sol.outliers):
        outliers |= view.preimages[z]
    return PartitionSolution(tuple(clusters), frozenset(outliers))
