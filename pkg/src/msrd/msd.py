"""Exact and (1+eps)-approximate min-sum-diameters solvers.

The exact solver enumerates non-decreasing candidate diameters with witness
sets of at most four points.  The approximation and the exact outlier
solver share a refinement-based recursion: partially built clusters carry
their candidate diameter, overlaps are resolved by subtracting smaller
settled clusters from larger ones, and "enlarged" clusters (actual diameter
above the candidate) are repaired by probing their two extreme points.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .decompose import decompose
from .metric import Cluster, MetricSpace, PartitionSolution
from .msr import CALIBRATION, radius_grid, solve_decomposed
from .nets import NetView, build_hierarchy, extend_to_component, net_for_budget
from .search import BallTable, mask_bits

MAX_WITNESSES = 4


@dataclass(frozen=True)
class TaggedClustering:
    """Clusters paired with the candidate diameter they were created for."""

    entries: tuple[tuple[frozenset[int], float], ...]
    outliers: frozenset[int] = frozenset()


# ---------------------------------------------------------------------------
# cluster-list utilities


def neighborhood(space: MetricSpace, clusters, target) -> list[frozenset]:
    """Clusters at most diam(target) away whose diameter is >= diam(target)."""
    t_diam = space.diameter_of(target)
    t_idx = sorted(target)
    out = []
    for c in clusters:
        if c == target:
            continue
        if space.diameter_of(c) >= t_diam and _set_distance(space, t_idx, sorted(c)) <= t_diam:
            out.append(c)
    return out


def _set_distance(space, idx_a, idx_b) -> float:
    import numpy as np

    from . import kernels

    return float(
        kernels.set_distance(
            space.matrix(),
            np.asarray(idx_a, dtype=np.int64),
            np.asarray(idx_b, dtype=np.int64),
        )
    )


def bound_neighborhoods(space: MetricSpace, clusters) -> list[frozenset]:
    """Merge any cluster with its neighborhood while it has more than 4 neighbors."""
    work = [frozenset(c) for c in clusters]
    while True:
        for i, c in enumerate(work):
            near = neighborhood(space, work, c)
            if len(near) > MAX_WITNESSES:
                merged = frozenset(set(c).union(*near))
                work = [merged if x == c else x for x in work if x not in near]
                break
        else:
            return work


def make_packed(space: MetricSpace, clusters) -> list[frozenset]:
    """Merge cluster groups (sizes 2..5) whose union diameter does not exceed
    the sum of their diameters, until none remain."""
    work = [frozenset(c) for c in clusters]
    changed = True
    while changed:
        changed = False
        diams = [space.diameter_of(c) for c in work]
        for size in range(2, min(5, len(work)) + 1):
            for combo in combinations(range(len(work)), size):
                union = frozenset(set().union(*(work[i] for i in combo)))
                if space.diameter_of(union) <= sum(diams[i] for i in combo):
                    keep = [w for i, w in enumerate(work) if i not in combo]
                    work = keep[: combo[0]] + [union] + keep[combo[0]:]
                    changed = True
                    break
            if changed:
                break
    return work


def enforce_min_cluster_distance(space: MetricSpace, clusters, delta: float) -> list[frozenset]:
    """Single-linkage merge of clusters within distance 2*delta of each other."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    work = [sorted(c) for c in clusters]
    parent = list(range(len(work)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(len(work)):
        for j in range(i + 1, len(work)):
            if _set_distance(space, work[i], work[j]) <= 2 * delta:
                parent[find(j)] = find(i)
    groups: dict[int, set] = {}
    for i, c in enumerate(work):
        groups.setdefault(find(i), set()).update(c)
    return [frozenset(groups[r]) for r in sorted(groups, key=lambda r: min(groups[r]))]


# ---------------------------------------------------------------------------
# refinement


def refine(space: MetricSpace, tagged: TaggedClustering) -> TaggedClustering:
    """Subtract settled clusters from intersecting ones with larger tags.

    A settled entry has actual diameter within its candidate diameter; rule
    applications follow ascending (tag of the subtrahend, tag of the target,
    entry indices); outliers act as candidate-diameter-0 singletons; emptied
    clusters are dropped.
    """
    universe = sorted(set().union(set(tagged.outliers), *(c for c, _r in tagged.entries)))
    pos = {p: i for i, p in enumerate(universe)}
    bt = BallTable(space, universe)
    entries = [
        (sum(1 << pos[p] for p in members), float(r)) for members, r in tagged.entries
    ]
    outs = tuple(pos[p] for p in sorted(tagged.outliers))
    refined = _refine_masks(bt, entries, outs)
    return TaggedClustering(
        tuple(
            (frozenset(universe[b] for b in mask_bits(mask)), r) for mask, r in refined
        ),
        tagged.outliers,
    )


def _refine_masks(bt: BallTable, entries, out_positions):
    """Mask-level refinement; returns the surviving (mask, tag) list in order."""
    work = [(mask, r) for mask, r in entries]
    while True:
        sources = [(r, i, mask) for i, (mask, r) in enumerate(work)]
        sources += [
            (0.0, len(work) + j, 1 << z) for j, z in enumerate(out_positions)
        ]
        sources.sort(key=lambda s: (s[0], s[1]))
        applied = False
        for r1, i1, m1 in sources:
            if bt.diameter(m1) > r1:
                continue
            for r2, i2, m2 in sorted(
                ((r, i, m) for i, (m, r) in enumerate(work) if r >= r1),
                key=lambda s: (s[0], s[1]),
            ):
                if i1 == i2 or m1 == m2 or not (m1 & m2):
                    continue
                rest = m2 & ~m1
                if rest:
                    work[i2] = (rest, r2)
                else:
                    del work[i2]
                applied = True
                break
            if applied:
                break
        if not applied:
            return work


# ---------------------------------------------------------------------------
# exact solver (witness sets over non-decreasing candidate diameters)


def exact_msd(space: MetricSpace, k: int, validator=None) -> PartitionSolution | None:
    """Optimal sum of cluster diameters with at most ``k`` clusters.

    Builds clusters in non-decreasing candidate-diameter order as
    intersections of balls around at most four witness points, restricted to
    the yet-unassigned points.  ``validator`` (a per-cluster predicate over
    global point ids) turns this into the mergeable-constraint variant;
    returns ``None`` when no valid partition exists.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    n = space.n
    bt = BallTable(space, range(n))
    values = [0.0] + sorted({float(d) for d in bt.dist[bt.dist > 0].tolist()})
    q_max = min(k, n)
    full = bt.full_mask

    best_cost = float("inf")
    best: list[int] | None = None
    if validator is None or validator(frozenset(range(n))):
        best_cost = bt.diameter(full)
        best = [full]
    fail: dict[tuple[int, int, int], float] = {}

    def rec(pending, q_left, dmin_idx, partial, partial_cost):
        nonlocal best_cost, best
        if pending == 0:
            if partial_cost < best_cost:
                best_cost = partial_cost
                best = list(partial)
            return
        if q_left == 0:
            return
        state = (pending, q_left, dmin_idx)
        available = best_cost - partial_cost
        if available <= fail.get(state, 0.0):
            return
        entry_best = best_cost
        points = list(mask_bits(pending))
        for di in range(dmin_idx, len(values)):
            diam_cap = values[di]
            if partial_cost + diam_cap >= best_cost:
                break
            seen: set[int] = set()
            for size in range(1, min(MAX_WITNESSES, len(points)) + 1):
                for witnesses in combinations(points, size):
                    cluster = pending
                    for w in witnesses:
                        cluster &= bt.ball(w, diam_cap)
                        if not cluster:
                            break
                    if not cluster or cluster in seen:
                        continue
                    seen.add(cluster)
                    actual = bt.diameter(cluster)
                    if actual > diam_cap:
                        continue
                    if validator is not None and not validator(
                        frozenset(bt.global_ids(cluster))
                    ):
                        continue
                    partial.append(cluster)
                    rec(pending & ~cluster, q_left - 1, di, partial, partial_cost + actual)
                    partial.pop()
        if best_cost == entry_best:
            fail[state] = max(fail.get(state, 0.0), available)

    rec(full, q_max, 0, [], 0.0)
    if best is None:
        return None
    return PartitionSolution(
        tuple(Cluster(frozenset(bt.global_ids(mask)), None) for mask in best)
    )


# ---------------------------------------------------------------------------
# refinement-based recursion (net subroutine and exact outlier solver)


def _refine_search(
    bt: BallTable,
    clusters_max: int,
    outlier_budget: int,
    budget: float,
    candidates_fn,
    finalize,
    seed_cost: float,
    prune_tag_sum: bool,
    initial=None,
):
    """Shared recursion: probe an uncovered point, or the two extreme points
    of the cheapest enlarged cluster, and branch over candidate clusters
    containing the probe (plus the probe-as-outlier branch)."""
    best_cost = seed_cost
    best = None
    seen: set[tuple] = set()

    def rec(Y, entries, outs, budget_left, q_left, g_left, tag_sum):
        nonlocal best_cost, best
        if prune_tag_sum and tag_sum > best_cost:
            return
        key = (Y, entries, outs, budget_left, q_left)
        if key in seen:
            return
        seen.add(key)
        refined = tuple(_refine_masks(bt, entries, outs))
        if Y == 0:
            enlarged = [
                (r, i, mask)
                for i, (mask, r) in enumerate(refined)
                if bt.diameter(mask) > r
            ]
            if not enlarged:
                got = finalize(refined, outs)
                if got is not None and got[0] < best_cost:
                    best_cost, best = got
                return
            _, _, mask = min(enlarged)
            a, b, _d = bt.farthest_pair(mask)
            probes = [a] if a == b else [a, b]
        else:
            probes = [(Y & -Y).bit_length() - 1]
        for z in probes:
            if q_left > 0:
                for cluster, tag, charge in candidates_fn(
                    z, budget_left, tag_sum, best_cost
                ):
                    rec(
                        Y & ~cluster,
                        refined + ((cluster, tag),),
                        outs,
                        budget_left - charge,
                        q_left - 1,
                        g_left,
                        tag_sum + tag,
                    )
            take = bt.preimage_sizes[z]
            if g_left >= take and z not in outs:
                rec(
                    Y & ~(1 << z),
                    refined,
                    tuple(sorted(outs + (z,))),
                    budget_left,
                    q_left,
                    g_left - take,
                    tag_sum,
                )

    y0, entries0, outs0 = initial if initial else (bt.full_mask, (), ())
    rec(y0, entries0, outs0, budget, clusters_max, outlier_budget, 0.0)
    return best_cost, best


def _net_candidates(bt: BallTable, grid):
    """Candidate (cluster, tag, budget charge) generator for net searches."""

    def candidates(z, budget_left, _tag_sum, _best):
        found: dict[tuple[int, float], float] = {}
        order: list[tuple[int, float]] = []
        for rp in grid:
            if rp > budget_left:
                break
            around = bt.ball(z, rp)
            pts = list(mask_bits(around))
            tags = sorted(
                {0.0} | {float(bt.dist[x, y]) for x in pts for y in pts if y > x}
            )
            for tag in tags:
                if tag > 2 * rp:
                    break
                pool = list(mask_bits(bt.ball(z, tag)))
                seen: set[int] = set()
                for size in range(1, min(MAX_WITNESSES, len(pool)) + 1):
                    for witnesses in combinations(pool, size):
                        cluster = bt.ball(witnesses[0], tag)
                        for w in witnesses[1:]:
                            cluster &= bt.ball(w, tag)
                            if not cluster:
                                break
                        if not cluster or cluster in seen:
                            continue
                        seen.add(cluster)
                        key = (cluster, tag)
                        if key not in found:
                            found[key] = rp
                            order.append(key)
        return [(c, t, found[(c, t)]) for c, t in order]

    return candidates


def _exact_candidates(bt: BallTable, values):
    """Candidate generator over exact pairwise distances (no net, no budget)."""

    def candidates(z, _budget_left, tag_sum, best):
        out = []
        seen_all: set[tuple[int, float]] = set()
        for tag in values:
            if tag_sum + tag > best:
                break
            pool = list(mask_bits(bt.ball(z, tag)))
            seen: set[int] = set()
            for size in range(1, min(MAX_WITNESSES, len(pool)) + 1):
                for witnesses in combinations(pool, size):
                    cluster = bt.ball(witnesses[0], tag)
                    for w in witnesses[1:]:
                        cluster &= bt.ball(w, tag)
                        if not cluster:
                            break
                    if not cluster or cluster in seen:
                        continue
                    seen.add(cluster)
                    if (cluster, tag) not in seen_all:
                        seen_all.add((cluster, tag))
                        out.append((cluster, tag, 0.0))
        return out

    return candidates


def exact_msd_outliers(
    space: MetricSpace, k: int, g: int, validator=None
) -> PartitionSolution | None:
    """Optimal min-sum-diameters allowing up to ``g`` unclustered points."""
    if k < 1 or g < 0:
        raise ValueError("need k >= 1, g >= 0")
    n = space.n
    if g >= n:
        return PartitionSolution((), frozenset(range(n)))
    bt = BallTable(space, range(n))
    values = [0.0] + sorted({float(d) for d in bt.dist[bt.dist > 0].tolist()})

    def finalize(refined, outs):
        clusters = tuple(
            Cluster(frozenset(bt.global_ids(mask)), tag) for mask, tag in refined
        )
        if validator is not None:
            if not all(validator(c.members) for c in clusters):
                return None
        cost = sum(bt.diameter(mask) for mask, _tag in refined)
        return cost, PartitionSolution(clusters, frozenset(int(bt.ids[z]) for z in outs))

    cost, sol = _refine_search(
        bt,
        min(k, n),
        g,
        float("inf"),
        _exact_candidates(bt, values),
        finalize,
        float("inf"),
        prune_tag_sum=True,
    )
    return sol


def msd_subroutine(
    view: NetView,
    uncovered,
    tagged: TaggedClustering,
    grid,
    budget_left: float,
    clusters_left: int,
    outliers_left: int = 0,
) -> PartitionSolution | None:
    """Best net-level completion of a partially built tagged clustering."""
    bt = BallTable.from_view(view)

    def finalize(refined, outs):
        clusters = tuple(
            Cluster(frozenset(bt.global_ids(mask)), tag) for mask, tag in refined
        )
        cost = sum(bt.diameter(mask) for mask, _tag in refined)
        outliers = frozenset(int(bt.ids[z]) for z in outs)
        return cost, PartitionSolution(clusters, outliers)

    entries = tuple(
        (sum(1 << bt.pos[p] for p in members), float(r)) for members, r in tagged.entries
    )
    outs = tuple(sorted(bt.pos[p] for p in tagged.outliers))
    y_mask = 0
    for p in uncovered:
        y_mask |= 1 << bt.pos[int(p)]

    _cost, best = _refine_search(
        bt, clusters_left, outliers_left, budget_left,
        _net_candidates(bt, tuple(grid)), finalize, float("inf"),
        prune_tag_sum=False, initial=(y_mask, entries, outs),
    )
    return best


# ---------------------------------------------------------------------------
# approximation


def approximate_msd(
    space: MetricSpace,
    k: int,
    eps: float,
    g: int = 0,
    validator=None,
) -> PartitionSolution | None:
    """Partition within (1+eps) of the optimal diameter sum.

    With a (mergeable, per-cluster) ``validator``, every returned cluster
    satisfies it; returns ``None`` when no valid partition exists.
    """
    if not 0 < eps <= 1 or k < 1 or g < 0:
        raise ValueError("need 0 < eps <= 1, k >= 1, g >= 0")
    variant = "mergeable-msd" if validator is not None else "msd"
    eps_eff = eps / CALIBRATION
    decomp = decompose(space, k, g, variant, 1.0, validator)
    if decomp.zero_cost:
        if validator is None:
            chosen = list(range(min(k, space.n)))
            return PartitionSolution(
                tuple(Cluster(frozenset([p]), None) for p in chosen),
                frozenset(range(space.n)) - set(chosen),
            )
        return exact_msd_outliers(space, k, g, validator)

    def finalize_factory(view, bt, _key):
        def finalize(partial, outs):
            refined = partial  # already refined by the recursion
            clusters = tuple(
                Cluster(frozenset(bt.global_ids(mask)), tag) for mask, tag in refined
            )
            outliers = frozenset(int(bt.ids[z]) for z in outs)
            ext = extend_to_component(view, PartitionSolution(clusters, outliers))
            if validator is not None:
                if not all(validator(c.members) for c in ext.clusters):
                    return None
            cost = sum(space.diameter_of(c.members) for c in ext.clusters)
            return cost, ext

        return finalize

    sol = _solve_msd_components(space, k, g, eps_eff, variant, decomp, finalize_factory)
    if sol is None:
        return None
    assert len(sol.clusters) <= k and len(sol.outliers) <= g
    assert sol.is_partition_of(space)
    return sol


def _solve_msd_components(space, k, g, eps_eff, variant, decomp, finalize_factory):
    from .msr import _plain_keys

    def run_search(bt, grid, budget, q, gp, finalize, seed):
        return _refine_search(
            bt, q, gp, budget, _net_candidates(bt, tuple(grid)),
            finalize, seed, prune_tag_sum=False,
        )

    return solve_decomposed(
        space, k, g, eps_eff, variant, 1.0,
        _plain_keys(k, g), (k, g), lambda key: key,
        finalize_factory, decomp, run_search, budget_factor=3.0,
    )
