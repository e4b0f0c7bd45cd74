"""Exact and (1+eps)-approximate min-sum-radii solvers.

The approximation decomposes the space, solves each component over a
budgeted net by recursive branch-and-bound, extends net solutions back to
the component, and merges per-component cost tables with a small dynamic
program.  The same engine serves the alpha-power and fairness variants
through the ``finalize`` hook.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .decompose import Decomposition, decompose
from .metric import (
    Ball,
    BallSolution,
    MetricSpace,
    round_up_pow2,
    solution_cost,
)
from .nets import NetView, build_hierarchy, extend_to_component, net_for_budget
from .search import BallTable, mask_bits

CALIBRATION = 8     # internal epsilon divisor; frozen by the acceptance suite
BUDGET_SLACK = 4    # extra powers of two explored around the cost bracket
RADIUS_CAP_SLACK = 4


@dataclass(frozen=True)
class MsrSearchState:
    """Arguments of one recursive cover-search call over a net."""

    uncovered: frozenset[int]
    balls: tuple[Ball, ...]
    budget_left: float
    clusters_left: int
    outliers_left: int
    radius_grid: tuple[float, ...]


@dataclass
class CostTable:
    """Best found (cost, solution) per consumption key of one component."""

    entries: dict[tuple[int, ...], tuple[float, BallSolution]]


# ---------------------------------------------------------------------------
# exact solver


def exact_msr(space: MetricSpace, k: int, g: int = 0, alpha: float = 1.0) -> BallSolution:
    """Optimal min-sum-radii by exhausting centers and per-center radii.

    Ties resolve to the lexicographically smallest (sorted center ids, then
    radii) solution.
    """
    if k < 1 or g < 0 or alpha < 1:
        raise ValueError("need k >= 1, g >= 0, alpha >= 1")
    n = space.n
    if n <= k + g:
        chosen = list(range(min(k, n)))
        return BallSolution(
            tuple(Ball(p, 0.0) for p in chosen), frozenset(range(n)) - set(chosen)
        )
    dist = space.matrix()

    best_key: tuple | None = None
    best_sol: BallSolution | None = None

    def consider(cost, centers, radii):
        nonlocal best_key, best_sol
        key = (cost, tuple(centers), tuple(radii))
        if best_key is None or key < best_key:
            covered: set[int] = set()
            for c, r in zip(centers, radii):
                covered |= {int(p) for p in range(n) if dist[c, p] <= r}
            best_key = key
            best_sol = BallSolution(
                tuple(Ball(int(c), float(r)) for c, r in zip(centers, radii)),
                frozenset(range(n)) - covered,
            )

    if k <= 2 and g == 0:
        from . import kernels

        cost, c1, r1, c2, r2 = kernels.exact_msr_two_balls(dist, k, alpha)
        if c2 < 0:
            consider(float(cost), (int(c1),), (float(r1),))
        else:
            a, b = sorted(((int(c1), float(r1)), (int(c2), float(r2))))
            consider(float(cost), (a[0], b[0]), (a[1], b[1]))
        # the kernel found the optimal cost; sweep once more in lexicographic
        # order so ties settle deterministically
        _sweep_two_ball_ties(dist, k, alpha, best_key[0], consider)
        return best_sol

    radii_menu = [sorted(set(dist[c].tolist())) for c in range(n)]

    def rec(centers, idx, cover, cost, radii):
        if best_key is not None and cost > best_key[0]:
            return
        if idx == len(centers):
            if cover.bit_count() >= n - g:
                consider(cost, centers, tuple(radii))
            return
        c = centers[idx]
        for r in radii_menu[c]:
            new_cost = cost + r ** alpha
            if best_key is not None and new_cost > best_key[0]:
                break
            got = 0
            for p in range(n):
                if dist[c, p] <= r:
                    got |= 1 << p
            radii.append(r)
            rec(centers, idx + 1, cover | got, new_cost, radii)
            radii.pop()

    for q in range(1, min(k, n) + 1):
        for centers in itertools.combinations(range(n), q):
            rec(centers, 0, 0, 0.0, [])
    return best_sol


def _sweep_two_ball_ties(dist, k, alpha, target, consider):
    n = len(dist)
    for c1 in range(n):
        ecc = float(dist[c1].max())
        if ecc ** alpha == target:
            consider(target, (c1,), (ecc,))
    if k < 2:
        return
    for c1 in range(n):
        for r1 in sorted(set(dist[c1].tolist())):
            if r1 ** alpha > target:
                break
            rest = [p for p in range(n) if dist[c1, p] > r1]
            for c2 in range(n):
                r2 = max((float(dist[c2, p]) for p in rest), default=0.0)
                if r1 ** alpha + r2 ** alpha == target:
                    (a, b) = sorted(((c1, float(r1)), (c2, r2)))
                    consider(target, (a[0], b[0]), (a[1], b[1]))


# ---------------------------------------------------------------------------
# recursive net search


def _cover_candidates(bt: BallTable, z: int, grid, budget_left: float):
    """Deduplicated, dominance-pruned candidate balls containing ``z``."""
    cands: dict[int, tuple[float, float, int]] = {}
    for rp in grid:
        if rp > budget_left:
            break
        around = bt.ball(z, 2 * rp)
        for x in mask_bits(around):
            row = bt.dist[x]
            dxz = row[z]
            for y in mask_bits(around):
                r = float(row[y])
                if dxz <= r:
                    ball = bt.ball(x, r)
                    cur = cands.get(ball)
                    if cur is None or (r, rp) < cur[:2]:
                        cands[ball] = (r, rp, x)
    ordered = sorted(cands.items(), key=lambda kv: (kv[1][0], kv[1][1], kv[1][2], kv[0]))
    kept: list[tuple[int, float, float, int]] = []
    for ball, (r, rp, x) in ordered:
        dominated = False
        for kball, _kr, krp, _kx in kept:
            if kball | ball == kball and krp <= rp:
                dominated = True
                break
        if not dominated:
            kept.append((ball, r, rp, x))
    return kept


def _msr_search(bt, clusters_max, outlier_budget, budget, grid, alpha, finalize, seed_cost):
    """Branch-and-bound cover search; returns the best finalized candidate."""
    best_cost = seed_cost
    best = None

    def rec(Y, budget_left, q_left, g_left, partial, net_cost, outs):
        nonlocal best_cost, best
        if net_cost >= best_cost:
            return
        if Y == 0:
            got = finalize(partial, outs)
            if got is not None:
                cost, payload = got
                if cost < best_cost:
                    best_cost, best = cost, payload
            return
        z = (Y & -Y).bit_length() - 1
        if q_left > 0:
            for ball, r, rp, x in _cover_candidates(bt, z, grid, budget_left):
                partial.append((x, r))
                rec(Y & ~ball, budget_left - rp, q_left - 1, g_left,
                    partial, net_cost + r ** alpha, outs)
                partial.pop()
        take = bt.preimage_sizes[z]
        if g_left >= take:
            outs.append(z)
            rec(Y & ~(1 << z), budget_left, q_left, g_left - take, partial, net_cost, outs)
            outs.pop()

    rec(bt.full_mask, budget, clusters_max, outlier_budget, [], 0.0, [])
    return best_cost, best


def msr_subroutine(view: NetView, state: MsrSearchState) -> BallSolution | None:
    """Best completion of ``state`` over the view's net points, or ``None``."""
    bt = BallTable.from_view(view)
    y_mask = 0
    for p in state.uncovered:
        y_mask |= 1 << bt.pos[int(p)]
    base_cost = sum(b.radius for b in state.balls)

    def finalize(partial, outs):
        balls = state.balls + tuple(Ball(int(bt.ids[x]), r) for x, r in partial)
        outliers = frozenset(int(bt.ids[z]) for z in outs)
        return base_cost + sum(r for _x, r in partial), BallSolution(balls, outliers)

    best_cost, best = _search_from(
        bt, y_mask, state, finalize
    )
    return best


def _search_from(bt, y_mask, state, finalize):
    best_cost = float("inf")
    best = None

    def rec(Y, budget_left, q_left, g_left, partial, net_cost, outs):
        nonlocal best_cost, best
        if net_cost >= best_cost:
            return
        if Y == 0:
            cost, payload = finalize(partial, outs)
            if cost < best_cost:
                best_cost, best = cost, payload
            return
        z = (Y & -Y).bit_length() - 1
        if q_left > 0:
            for ball, r, rp, x in _cover_candidates(bt, z, state.radius_grid, budget_left):
                partial.append((x, r))
                rec(Y & ~ball, budget_left - rp, q_left - 1, g_left,
                    partial, net_cost + r, outs)
                partial.pop()
        take = bt.preimage_sizes[z]
        if g_left >= take:
            outs.append(z)
            rec(Y & ~(1 << z), budget_left, q_left, g_left - take, partial, net_cost, outs)
            outs.pop()

    rec(y_mask, state.budget_left, state.clusters_left, state.outliers_left, [], 0.0, [])
    return best_cost, best


# ---------------------------------------------------------------------------
# component assembly


def _budget_guesses(decomp: Decomposition, k: int, variant: str, alpha: float) -> list[float]:
    lo = decomp.lower_bound
    hi = decomp.upper_bound
    r_max = decomp.max_component_diameter
    if variant == "alpha-msr":
        hi = k * hi  # window for the radii sum of the alpha-optimal solution
    if variant in ("msd", "mergeable-msd"):
        hi = 2 * round_up_pow2(min(hi, max(k - 1, 1) * r_max))
        hi = max(hi, round_up_pow2(r_max))
    lo = lo / BUDGET_SLACK
    hi = hi * BUDGET_SLACK
    out = []
    t = round_up_pow2(lo)
    if t > lo:
        t /= 2
    while t <= hi:
        out.append(t)
        t *= 2
    return out or [round_up_pow2(max(hi, 1.0))]


def radius_grid(spacing: float, r_max: float, budget: float) -> tuple[float, ...]:
    """Powers of two from the net spacing up to (a padded) min(R, T)."""
    cap = round_up_pow2(min(r_max, budget)) * RADIUS_CAP_SLACK
    vals = []
    v = spacing
    while v <= cap:
        vals.append(v)
        v *= 2
    return tuple(vals) if vals else (spacing,)


def _plain_keys(k: int, g: int):
    return [(q, gp) for q in range(1, k + 1) for gp in range(g + 1)]


def solve_decomposed(
    space: MetricSpace,
    k: int,
    g: int,
    eps_eff: float,
    variant: str,
    alpha: float,
    keys,
    caps,
    key_counts,
    finalize_factory,
    decomp: Decomposition,
    run_search=None,
    budget_factor: float = 4.0,
) -> BallSolution | PartitionSolution | None:
    """Shared per-component budget-guess loop plus the merge DP.

    ``keys`` enumerates consumption keys (cluster/outlier counts or per-color
    budgets), ``key_counts(key) -> (q, g')`` translates them for the search,
    and ``finalize_factory(view, bt, key)`` produces the complete-candidate
    hook returning ``(cost, component solution)`` or ``None``.  Budgets are
    walked largest first and a net level is searched only once, at its
    largest budget (whose candidate set subsumes the smaller ones).
    """
    if run_search is None:
        run_search = _msr_search_adapter(alpha)
    tables: list[CostTable] = []
    for comp in decomp.components:
        hierarchy = build_hierarchy(space, comp)
        table: dict[tuple, tuple[float, object]] = {}
        if len(comp) <= g:
            zero_key = tuple([0] * (len(caps) - 1) + [len(comp)])
            table[zero_key] = (0.0, _empty_solution(variant, comp))
        seen_levels: set[float] = set()
        for budget in reversed(_budget_guesses(decomp, k, variant, alpha)):
            view = net_for_budget(hierarchy, budget, k, eps_eff)
            level = max(view.spacing, 1.0)
            if level in seen_levels:
                continue
            seen_levels.add(level)
            bt = BallTable.from_view(view)
            grid = radius_grid(view.spacing, decomp.max_component_diameter, budget)
            for key in keys:
                q, gp = key_counts(key)
                if q == 0:
                    continue
                seed = min(
                    (c for other, (c, _s) in table.items()
                     if all(a <= b for a, b in zip(other, key))),
                    default=float("inf"),
                )
                cost, sol = run_search(
                    bt, grid, budget_factor * budget, q, gp,
                    finalize_factory(view, bt, key), seed,
                )
                if sol is not None:
                    cur = table.get(key)
                    if cur is None or cost < cur[0]:
                        table[key] = (cost, sol)
        tables.append(CostTable(table))
    merged = _fold_tables(tables, caps)
    if not merged:
        return None
    best_key = min(merged, key=lambda key: (merged[key][0], key))
    return merged[best_key][1]


def _msr_search_adapter(alpha: float):
    def run(bt, grid, budget, q, gp, finalize, seed):
        return _msr_search(bt, q, gp, budget, grid, alpha, finalize, seed)

    return run


def _empty_solution(variant, comp):
    if variant in ("msd", "mergeable-msd"):
        from .metric import PartitionSolution

        return PartitionSolution((), frozenset(int(p) for p in comp))
    return BallSolution((), frozenset(int(p) for p in comp))


def _fold_tables(tables: list[CostTable], caps):
    acc = dict(tables[0].entries)
    for table in tables[1:]:
        new: dict[tuple, tuple[float, object]] = {}
        for key1, (c1, s1) in sorted(acc.items()):
            for key2, (c2, s2) in sorted(table.entries.items()):
                key = tuple(a + b for a, b in zip(key1, key2))
                if any(a > cap for a, cap in zip(key, caps)):
                    continue
                cost = c1 + c2
                cur = new.get(key)
                if cur is None or cost < cur[0]:
                    new[key] = (cost, _combine(s1, s2))
        acc = new
    return acc


def _combine(a, b):
    if isinstance(a, BallSolution):
        return BallSolution(a.balls + b.balls, a.outliers | b.outliers)
    from .metric import PartitionSolution

    return PartitionSolution(a.clusters + b.clusters, a.outliers | b.outliers)


def merge_components(tables: list[CostTable], k: int, g: int):
    """Cheapest combination of per-component entries within (<= k, <= g)."""
    merged = _fold_tables(tables, (k, g))
    if not merged:
        return None
    best_key = min(merged, key=lambda key: (merged[key][0], key))
    return merged[best_key][1]


# ---------------------------------------------------------------------------
# public approximation


def degenerate_ball_solution(space: MetricSpace, k: int, g: int) -> BallSolution:
    chosen = list(range(min(k, space.n)))
    return BallSolution(
        tuple(Ball(p, 0.0) for p in chosen),
        frozenset(range(space.n)) - set(chosen),
    )


def approx_msr_family(
    space: MetricSpace, k: int, eps: float, g: int = 0, alpha: float = 1.0
) -> BallSolution:
    if not 0 < eps <= 1 or k < 1 or g < 0 or alpha < 1:
        raise ValueError("need 0 < eps <= 1, k >= 1, g >= 0, alpha >= 1")
    variant = "alpha-msr" if alpha > 1 else "msr"
    eps_eff = eps / (CALIBRATION * max(alpha, 1.0))
    decomp = decompose(space, k, g, variant, alpha)
    if decomp.zero_cost:
        return degenerate_ball_solution(space, k, g)

    def finalize_factory(view, bt, _key):
        def finalize(partial, outs):
            balls = tuple(Ball(int(bt.ids[x]), r) for x, r in partial)
            outliers = frozenset(int(bt.ids[z]) for z in outs)
            ext = extend_to_component(view, BallSolution(balls, outliers))
            return solution_cost(ext, alpha), ext

        return finalize

    sol = solve_decomposed(
        space, k, g, eps_eff, variant, alpha,
        _plain_keys(k, g), (k, g), lambda key: key,
        finalize_factory, decomp,
    )
    assert sol is not None  # a cover always exists without caps
    assert len(sol.balls) <= k and len(sol.outliers) <= g
    assert sol.covers(space)
    return sol


def approximate_msr(space: MetricSpace, k: int, eps: float, g: int = 0) -> BallSolution:
    """Feasible cover whose radii sum is within (1+eps) of optimal."""
    return approx_msr_family(space, k, eps, g, 1.0)
