"""Brute-force ground-truth solvers for tiny instances.

These deliberately share no code with the production solvers: covering is
done with boolean arrays over explicit radius grids, partitions are
enumerated first-point-anchored.  Hard size guards keep them obviously
correct and fast.
"""

from __future__ import annotations

import itertools

import numpy as np

from .metric import Ball, BallSolution, Cluster, MetricSpace, PartitionSolution

MAX_ORACLE_POINTS = 12
MAX_MSD_POINTS = 10
MAX_MSD_CLUSTERS = 4
_MAX_ENUM_CENTERS = 4


class OracleSizeError(ValueError):
    """Instance exceeds the deliberate size guard of the oracles."""


def oracle_msr(
    space: MetricSpace,
    k: int,
    g: int = 0,
    alpha: float = 1.0,
    fair=None,
) -> tuple[float, BallSolution] | tuple[float, None]:
    """Optimal min-sum-radii cost plus one optimal solution.

    Exhausts center subsets times per-center radius choices times outlier
    slack.  ``fair`` (object with ``coloring`` and ``caps``) restricts the
    per-color center counts; returns ``(inf, None)`` when no feasible
    solution exists under the caps.
    """
    n = space.n
    if n > MAX_ORACLE_POINTS:
        raise OracleSizeError(f"oracle_msr handles at most {MAX_ORACLE_POINTS} points, got {n}")
    if k < 1 or g < 0 or alpha < 1:
        raise ValueError("need k >= 1, g >= 0, alpha >= 1")
    dist = space.matrix()

    zero = _zero_cost_cover(n, k, g, fair)
    if zero is not None:
        return 0.0, zero

    caps = None
    if fair is not None:
        colors = list(fair.coloring)
        caps = list(fair.caps)

    best = np.inf
    witness: BallSolution | None = None
    max_centers = min(k, n)
    if max_centers > _MAX_ENUM_CENTERS:
        raise OracleSizeError(f"oracle_msr enumerates at most {_MAX_ENUM_CENTERS} centers")
    for q in range(1, max_centers + 1):
        for centers in itertools.combinations(range(n), q):
            if caps is not None:
                used = [0] * len(caps)
                for c in centers:
                    used[colors[c]] += 1
                if any(u > cap for u, cap in zip(used, caps)):
                    continue
            cost, radii, count_ok = _best_radii(dist, centers, n - g, alpha)
            if count_ok and cost < best:
                best = cost
                balls = tuple(Ball(c, float(r)) for c, r in zip(centers, radii))
                covered: set[int] = set()
                for b in balls:
                    covered |= set(np.flatnonzero(dist[b.center] <= b.radius).tolist())
                witness = BallSolution(balls, frozenset(range(n)) - covered)
    if witness is None:
        return float("inf"), None
    return float(best), witness


def _best_radii(dist, centers, need, alpha):
    """Cheapest radius assignment for fixed centers covering >= need points."""
    rows = dist[list(centers)]
    radii = [np.unique(rows[i]) for i in range(len(centers))]
    cover = None
    cost = None
    for i, rv in enumerate(radii):
        cov_i = rows[i][None, :] <= rv[:, None]
        cost_i = rv.astype(np.float64) ** alpha
        shape = [1] * len(centers) + [dist.shape[0]]
        shape[i] = len(rv)
        cov_i = cov_i.reshape(shape)
        cost_i = cost_i.reshape(shape[:-1])
        cover = cov_i if cover is None else cover | cov_i
        cost = cost_i if cost is None else cost + cost_i
    counts = cover.sum(axis=-1)
    feasible = counts >= need
    if not feasible.any():
        return np.inf, None, False
    masked = np.where(feasible, cost, np.inf)
    flat = int(np.argmin(masked))
    pick = np.unravel_index(flat, masked.shape)
    return float(masked[pick]), [float(radii[i][pick[i]]) for i in range(len(centers))], True


def _zero_cost_cover(n, k, g, fair) -> BallSolution | None:
    """Singleton-ball cover when k (+ outliers) suffices for all points."""
    if n - g > k:
        return None
    if fair is None:
        chosen = list(range(min(k, n)))
    else:
        caps = list(fair.caps)
        used = [0] * len(caps)
        chosen = []
        for p in range(n):
            c = fair.coloring[p]
            if len(chosen) < k and used[c] < caps[c]:
                chosen.append(p)
                used[c] += 1
        if n - len(chosen) > g:
            return None
    balls = tuple(Ball(p, 0.0) for p in chosen)
    return BallSolution(balls, frozenset(range(n)) - set(chosen))


def oracle_msd(
    space: MetricSpace,
    k: int,
    g: int = 0,
    alpha: float = 1.0,
    validator=None,
) -> tuple[float, PartitionSolution] | tuple[float, None]:
    """Optimal min-sum-diameters cost plus one optimal partition.

    Enumerates every assignment of points to at most ``k`` clusters plus at
    most ``g`` outliers (first-point-anchored, so each partition appears
    once), pruning on the monotone partial cost.  ``validator`` is applied
    to every cluster of a completed candidate.
    """
    n = space.n
    if n > MAX_MSD_POINTS or k > MAX_MSD_CLUSTERS:
        raise OracleSizeError(
            f"oracle_msd handles at most {MAX_MSD_POINTS} points and {MAX_MSD_CLUSTERS} clusters"
        )
    if k < 1 or g < 0 or alpha < 1:
        raise ValueError("need k >= 1, g >= 0, alpha >= 1")
    dist = space.matrix()

    best_cost = np.inf
    best: PartitionSolution | None = None
    blocks: list[list[int]] = []
    diams: list[float] = []
    outliers: list[int] = []

    def complete():
        nonlocal best_cost, best
        if validator is not None:
            if not all(validator(frozenset(b)) for b in blocks):
                return
        cost = sum(d ** alpha for d in diams)
        if cost < best_cost:
            best_cost = cost
            best = PartitionSolution(
                tuple(Cluster(frozenset(b), None) for b in blocks),
                frozenset(outliers),
            )

    def rec(p: int, cost: float):
        nonlocal best_cost
        if cost >= best_cost:
            return
        if p == space.n:
            complete()
            return
        for i, block in enumerate(blocks):
            reach = max(dist[p, q] for q in block)
            new_diam = max(diams[i], reach)
            delta = new_diam ** alpha - diams[i] ** alpha
            old = diams[i]
            block.append(p)
            diams[i] = new_diam
            rec(p + 1, cost + delta)
            block.pop()
            diams[i] = old
        if len(blocks) < k:
            blocks.append([p])
            diams.append(0.0)
            rec(p + 1, cost)
            blocks.pop()
            diams.pop()
        if len(outliers) < g:
            outliers.append(p)
            rec(p + 1, cost)
            outliers.pop()

    rec(0, 0.0)
    if best is None:
        return float("inf"), None
    return float(best_cost), best


def oracle_kcenter(space: MetricSpace, k: int) -> float:
    """Optimal k-center max radius by exhausting center subsets."""
    n = space.n
    if n > MAX_ORACLE_POINTS:
        raise OracleSizeError(f"oracle_kcenter handles at most {MAX_ORACLE_POINTS} points")
    if k < 1:
        raise ValueError("need k >= 1")
    if k >= n:
        return 0.0
    dist = space.matrix()
    best = np.inf
    for q in range(1, min(k, n) + 1):
        for centers in itertools.combinations(range(n), q):
            radius = float(dist[list(centers)].min(axis=0).max())
            if radius < best:
                best = radius
    return float(best)
