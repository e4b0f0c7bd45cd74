"""Threshold decomposition into components with a cost bracket."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .metric import MetricSpace, PointId, round_up_pow2

BRACKET_CONSTANT = 64  # L = sum(diam) / (BRACKET_CONSTANT * m^2), beta its inverse


@dataclass(frozen=True)
class Decomposition:
    components: tuple[tuple[PointId, ...], ...]
    lower_bound: float          # L
    beta: float                 # cost(opt) <= beta * L
    max_component_diameter: float  # R
    psi: float                  # diam(X_i) <= psi * cost(opt)
    threshold: float
    zero_cost: bool

    @property
    def upper_bound(self) -> float:
        return self.beta * self.lower_bound


def gonzalez_kcenter(space: MetricSpace, m: int) -> tuple[list[PointId], float]:
    """Farthest-first traversal from point 0; 2-approximate m-center radius."""
    if m < 1:
        raise ValueError("need m >= 1")
    centers, radius = kernels.gonzalez_centers(space.matrix(), m)
    return [int(c) for c in centers], float(radius)


def decompose(
    space: MetricSpace,
    k: int,
    g: int = 0,
    variant: str = "msr",
    alpha: float = 1.0,
    validator=None,
) -> Decomposition:
    """Partition the space into at most k+g components no optimal cluster crosses.

    Single-linkage components at threshold (k+g) * gonzalez radius, with the
    threshold escalated (powers of two) until the components themselves admit
    a feasible cover whose cost certifies that no optimal cluster can span a
    gap.  Degenerate zero-cost instances (n <= k+g) short-circuit.
    """
    if k < 1 or g < 0:
        raise ValueError("need k >= 1, g >= 0")
    n = space.n
    m = k + g
    if n <= m:
        comps = tuple((p,) for p in range(n))
        return Decomposition(comps, 0.0, float(BRACKET_CONSTANT * m * m), 0.0,
                             float(BRACKET_CONSTANT * m * m), 0.0, True)

    dist = space.matrix()
    _, r_g = gonzalez_kcenter(space, m)
    threshold = m * r_g
    while True:
        comps = _components_at(dist, threshold)
        diams = [space.diameter_of(np.asarray(c, dtype=np.int64)) for c in comps]
        if len(comps) == 1:
            break
        feasible, cover_cost = _cover_bound(comps, diams, k, g, alpha)
        if feasible and variant == "fair-msr" and not _fair_assignable(comps, validator):
            feasible = False
        if variant == "mergeable-msd" and validator is not None and feasible:
            if not all(validator(frozenset(c)) for c in comps):
                feasible = False
        needed = cover_cost ** (1.0 / alpha) if variant == "alpha-msr" else cover_cost
        if feasible and threshold >= needed:
            break
        bump = round_up_pow2(needed) if np.isfinite(needed) and needed > 0 else 0.0
        threshold = max(2 * threshold, bump)

    total = float(sum(diams))
    denom = BRACKET_CONSTANT * m * m
    return Decomposition(
        components=tuple(tuple(int(p) for p in c) for c in comps),
        lower_bound=total / denom,
        beta=float(denom),
        max_component_diameter=float(max(diams)),
        psi=float(denom),
        threshold=float(threshold),
        zero_cost=False,
    )


def _components_at(dist: np.ndarray, threshold: float) -> list[list[int]]:
    labels = kernels.threshold_labels(dist, threshold)
    groups: dict[int, list[int]] = {}
    for p, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(p)
    return [groups[lab] for lab in sorted(groups)]


def _cover_bound(comps, diams, k, g, alpha) -> tuple[bool, float]:
    """Min cost of one-cluster-per-retained-component covers (outliers allowed).

    Feasible iff some choice of whole components to declare outliers (total
    size <= g) leaves at most k components.  Exact small knapsack.
    """
    ncomp = len(comps)
    sizes = [len(c) for c in comps]
    costs = [d ** alpha for d in diams]
    total = sum(costs)
    # removed[j][s] = max removable cost using exactly j components of total size s
    neg = -1.0
    removed = [[neg] * (g + 1) for _ in range(ncomp + 1)]
    removed[0][0] = 0.0
    for size, cost in zip(sizes, costs):
        if size > g:
            continue
        for j in range(ncomp - 1, -1, -1):
            for s in range(g - size, -1, -1):
                if removed[j][s] >= 0 and removed[j][s] + cost > removed[j + 1][s + size]:
                    removed[j + 1][s + size] = removed[j][s] + cost
    best = np.inf
    for j in range(max(0, ncomp - k), ncomp + 1):
        gain = max((removed[j][s] for s in range(g + 1)), default=neg)
        if gain >= 0:
            best = min(best, total - gain)
    return bool(np.isfinite(best)), float(best)


def _fair_assignable(comps, fair) -> bool:
    """Can each component get a ball centered at some point within the caps?"""
    if fair is None:
        return True
    caps = list(fair.caps)
    palette = [sorted({fair.coloring[p] for p in c}) for c in comps]

    def assign(i, remaining):
        if i == len(palette):
            return True
        for color in palette[i]:
            if remaining[color] > 0:
                remaining[color] -= 1
                if assign(i + 1, remaining):
                    remaining[color] += 1
                    return True
                remaining[color] += 1
        return False

    return assign(0, caps)
