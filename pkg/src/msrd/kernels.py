"""Hot numeric kernels over distance matrices.

Every kernel has a numba ``@njit`` implementation (``*_nb``) and a pure-numpy
fallback (``*_np``).  The module-level names dispatch to one or the other
according to :data:`msrd._accel.USE_NUMBA`; both variants stay importable so
tests and benchmarks can compare them.

Conventions: ``dist`` is a symmetric float64 matrix with a zero diagonal,
index arrays are int64 and sorted ascending unless noted.
"""

import numpy as np

from ._accel import USE_NUMBA, njit


# ---------------------------------------------------------------------------
# pairwise distances


@njit(cache=True)
def euclidean_matrix_nb(coords):
    n = coords.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for t in range(coords.shape[1]):
                diff = coords[i, t] - coords[j, t]
                acc += diff * diff
            d = np.sqrt(acc)
            out[i, j] = d
            out[j, i] = d
    return out


def euclidean_matrix_np(coords):
    sq = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    out = np.sqrt(sq)
    # mirror the upper triangle so the matrix is exactly symmetric
    out = np.triu(out, 1)
    out = out + out.T
    return out


# ---------------------------------------------------------------------------
# metric validation


@njit(cache=True)
def first_triangle_violation_nb(dist):
    n = dist.shape[0]
    for i in range(n):
        for j in range(n):
            dij = dist[i, j]
            for k in range(n):
                if dij > dist[i, k] + dist[k, j]:
                    return i, j, k
    return -1, -1, -1


def first_triangle_violation_np(dist):
    n = dist.shape[0]
    for i in range(n):
        # grid[j, k] = dist[i, k] + dist[k, j]
        grid = dist[i][None, :] + dist.T
        bad = np.argwhere(dist[i][:, None] > grid)
        if bad.size:
            j, k = bad[0]
            return i, int(j), int(k)
    return -1, -1, -1


# ---------------------------------------------------------------------------
# subset geometry


@njit(cache=True)
def subset_diameter_nb(dist, idx):
    best = 0.0
    for a in range(len(idx)):
        ia = idx[a]
        for b in range(a + 1, len(idx)):
            d = dist[ia, idx[b]]
            if d > best:
                best = d
    return best


def subset_diameter_np(dist, idx):
    if len(idx) < 2:
        return 0.0
    return float(dist[np.ix_(idx, idx)].max())


@njit(cache=True)
def farthest_pair_nb(dist, idx):
    # idx ascending -> first strict maximum is the lexicographically
    # smallest maximizing pair
    bi = idx[0]
    bj = idx[0]
    best = 0.0
    for a in range(len(idx)):
        ia = idx[a]
        for b in range(a + 1, len(idx)):
            d = dist[ia, idx[b]]
            if d > best:
                best = d
                bi = ia
                bj = idx[b]
    return bi, bj, best


def farthest_pair_np(dist, idx):
    if len(idx) == 1:
        return int(idx[0]), int(idx[0]), 0.0
    sub = dist[np.ix_(idx, idx)]
    sub = np.triu(sub)
    flat = int(np.argmax(sub))
    a, b = divmod(flat, len(idx))
    return int(idx[a]), int(idx[b]), float(sub[a, b])


@njit(cache=True)
def set_distance_nb(dist, idx_a, idx_b):
    best = np.inf
    for a in idx_a:
        for b in idx_b:
            d = dist[a, b]
            if d < best:
                best = d
    return best


def set_distance_np(dist, idx_a, idx_b):
    return float(dist[np.ix_(idx_a, idx_b)].min())


# ---------------------------------------------------------------------------
# farthest-first traversal


@njit(cache=True)
def gonzalez_centers_nb(dist, m):
    n = dist.shape[0]
    centers = np.empty(min(m, n), dtype=np.int64)
    centers[0] = 0
    count = 1
    mindist = dist[0].copy()
    while count < min(m, n):
        far = 0
        fd = mindist[0]
        for p in range(1, n):
            if mindist[p] > fd:
                fd = mindist[p]
                far = p
        if fd == 0.0:
            break
        centers[count] = far
        count += 1
        for p in range(n):
            if dist[far, p] < mindist[p]:
                mindist[p] = dist[far, p]
    radius = 0.0
    for p in range(n):
        if mindist[p] > radius:
            radius = mindist[p]
    return centers[:count], radius


def gonzalez_centers_np(dist, m):
    n = dist.shape[0]
    centers = [0]
    mindist = dist[0].copy()
    while len(centers) < min(m, n):
        far = int(np.argmax(mindist))
        if mindist[far] == 0.0:
            break
        centers.append(far)
        np.minimum(mindist, dist[far], out=mindist)
    return np.asarray(centers, dtype=np.int64), float(mindist.max())


# ---------------------------------------------------------------------------
# greedy net level


@njit(cache=True)
def greedy_net_level_nb(dist, ids, scale):
    n = len(ids)
    admitted = np.empty(n, dtype=np.bool_)
    parent = np.empty(n, dtype=np.int64)
    adm = np.empty(n, dtype=np.int64)
    na = 0
    for a in range(n):
        p = ids[a]
        best_d = np.inf
        best_id = -1
        for t in range(na):
            d = dist[p, adm[t]]
            if d < best_d:
                best_d = d
                best_id = adm[t]
        if best_d >= scale:
            admitted[a] = True
            parent[a] = p
            adm[na] = p
            na += 1
        else:
            admitted[a] = False
            parent[a] = best_id
    return admitted, parent


def greedy_net_level_np(dist, ids, scale):
    n = len(ids)
    admitted = np.zeros(n, dtype=np.bool_)
    parent = np.empty(n, dtype=np.int64)
    adm: list[int] = []
    for a in range(n):
        p = int(ids[a])
        if adm:
            d = dist[p, adm]
            t = int(np.argmin(d))
            if d[t] < scale:
                admitted[a] = False
                parent[a] = adm[t]
                continue
        admitted[a] = True
        parent[a] = p
        adm.append(p)
    return admitted, parent


# ---------------------------------------------------------------------------
# single-linkage threshold components


@njit(cache=True)
def threshold_labels_nb(dist, thresh):
    n = dist.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    for i in range(n):
        if labels[i] >= 0:
            continue
        labels[i] = i
        stack[0] = i
        top = 1
        while top > 0:
            top -= 1
            u = stack[top]
            for v in range(n):
                if labels[v] < 0 and dist[u, v] <= thresh:
                    labels[v] = i
                    stack[top] = v
                    top += 1
    return labels


def threshold_labels_np(dist, thresh):
    n = dist.shape[0]
    adj = dist <= thresh
    labels = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if labels[i] >= 0:
            continue
        frontier = np.zeros(n, dtype=bool)
        frontier[i] = True
        member = frontier.copy()
        while frontier.any():
            reach = adj[frontier].any(axis=0) & ~member
            member |= reach
            frontier = reach
        labels[member] = i
    return labels


# ---------------------------------------------------------------------------
# exact min-sum-radii for at most two balls (no outliers)


@njit(cache=True)
def exact_msr_two_balls_nb(dist, k, alpha):
    n = dist.shape[0]
    best = np.inf
    bc1 = 0
    br1 = 0.0
    bc2 = -1
    br2 = 0.0
    for c in range(n):
        ecc = 0.0
        for p in range(n):
            if dist[c, p] > ecc:
                ecc = dist[c, p]
        cost = ecc ** alpha
        if cost < best:
            best = cost
            bc1, br1, bc2, br2 = c, ecc, -1, 0.0
    if k >= 2:
        for c1 in range(n):
            radii = np.unique(dist[c1])
            for ri in range(len(radii)):
                r1 = radii[ri]
                base = r1 ** alpha
                if base >= best:
                    break
                for c2 in range(n):
                    r2 = 0.0
                    for p in range(n):
                        if dist[c1, p] > r1 and dist[c2, p] > r2:
                            r2 = dist[c2, p]
                    cost = base + r2 ** alpha
                    if cost < best:
                        best = cost
                        bc1, br1, bc2, br2 = c1, r1, c2, r2
    return best, bc1, br1, bc2, br2


def exact_msr_two_balls_np(dist, k, alpha):
    n = dist.shape[0]
    ecc = dist.max(axis=1)
    c = int(np.argmin(ecc ** alpha))
    best = float(ecc[c] ** alpha)
    witness = (c, float(ecc[c]), -1, 0.0)
    if k >= 2:
        for c1 in range(n):
            radii = np.unique(dist[c1])
            resid = dist[c1][None, :] > radii[:, None]          # (R, n)
            needed = np.where(resid[:, None, :], dist[None, :, :], 0.0).max(
                axis=2
            )                                                   # (R, n) per c2
            costs = radii[:, None] ** alpha + needed ** alpha
            flat = int(np.argmin(costs))
            ri, c2 = divmod(flat, n)
            if costs[ri, c2] < best:
                best = float(costs[ri, c2])
                witness = (c1, float(radii[ri]), int(c2), float(needed[ri, c2]))
    return (best, *witness)


# ---------------------------------------------------------------------------
# shortest-path metric completion


@njit(cache=True)
def floyd_warshall_nb(dist):
    n = dist.shape[0]
    for k in range(n):
        for i in range(n):
            dik = dist[i, k]
            for j in range(n):
                alt = dik + dist[k, j]
                if alt < dist[i, j]:
                    dist[i, j] = alt
    return dist


def floyd_warshall_np(dist):
    n = dist.shape[0]
    for k in range(n):
        np.minimum(dist, dist[:, k][:, None] + dist[k, :][None, :], out=dist)
    return dist


# ---------------------------------------------------------------------------
# dispatch

if USE_NUMBA:
    euclidean_matrix = euclidean_matrix_nb
    first_triangle_violation = first_triangle_violation_nb
    subset_diameter = subset_diameter_nb
    farthest_pair = farthest_pair_nb
    set_distance = set_distance_nb
    gonzalez_centers = gonzalez_centers_nb
    greedy_net_level = greedy_net_level_nb
    threshold_labels = threshold_labels_nb
    exact_msr_two_balls = exact_msr_two_balls_nb
    floyd_warshall = floyd_warshall_nb
else:
    euclidean_matrix = euclidean_matrix_np
    first_triangle_violation = first_triangle_violation_np
    subset_diameter = subset_diameter_np
    farthest_pair = farthest_pair_np
    set_distance = set_distance_np
    gonzalez_centers = gonzalez_centers_np
    greedy_net_level = greedy_net_level_np
    threshold_labels = threshold_labels_np
    exact_msr_two_balls = exact_msr_two_balls_np
    floyd_warshall = floyd_warshall_np
