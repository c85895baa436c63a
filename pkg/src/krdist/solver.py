"""Exact balanced transportation solver (network simplex, block pricing).

Solves min <C, X> over X >= 0 with fixed row sums (supply) and column sums
(demand).  Returns a basic optimal solution together with dual potentials,
so optimality can be certified by nonnegative reduced costs.

The kernel is a spanning-tree simplex: northwest-corner start, block
pricing over rows, leaving arc chosen as the first minimum-flow arc met on
the pivot cycle (deterministic).  If a long run of degenerate pivots is
detected it falls back to Bland's rule, which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        return deco


MASS_RTOL = 1e-9  # relative supply/demand balance tolerance
DUAL_RTOL = 1e-9  # reduced-cost feasibility tolerance, relative to max cost


@njit(cache=True)
def _simplex_kernel(a, b, C, block_rows, max_iter, stall_limit):  # pragma: no cover - jit
    n = a.shape[0]
    m = b.shape[0]
    N = n + m
    parent = np.full(N, -1, np.int64)
    arc_r = np.full(N, -1, np.int64)
    arc_c = np.full(N, -1, np.int64)
    fpar = np.zeros(N, np.float64)
    depth = np.zeros(N, np.int64)
    pot = np.zeros(N, np.float64)
    first_child = np.full(N, -1, np.int64)
    next_sib = np.full(N, -1, np.int64)
    prev_sib = np.full(N, -1, np.int64)

    # northwest-corner initial spanning tree (n+m-1 arcs, staircase)
    ra = a.copy()
    rb = b.copy()
    tr = np.empty(N - 1, np.int64)
    tc = np.empty(N - 1, np.int64)
    tf = np.empty(N - 1, np.float64)
    i = 0
    j = 0
    k = 0
    while True:
        f = ra[i] if ra[i] < rb[j] else rb[j]
        tr[k] = i
        tc[k] = j
        tf[k] = f
        k += 1
        ra[i] -= f
        rb[j] -= f
        if i == n - 1 and j == m - 1:
            break
        can_i = i < n - 1
        can_j = j < m - 1
        if can_i and (ra[i] <= rb[j] or not can_j):
            i += 1
        else:
            j += 1

    # tree arrays by BFS from node 0 over the staircase arcs
    deg = np.zeros(N, np.int64)
    for t in range(N - 1):
        deg[tr[t]] += 1
        deg[n + tc[t]] += 1
    adj_start = np.zeros(N + 1, np.int64)
    for v in range(N):
        adj_start[v + 1] = adj_start[v] + deg[v]
    adj_arc = np.empty(2 * (N - 1), np.int64)
    fill = adj_start[:N].copy()
    for t in range(N - 1):
        u = tr[t]
        w = n + tc[t]
        adj_arc[fill[u]] = t
        fill[u] += 1
        adj_arc[fill[w]] = t
        fill[w] += 1
    visited = np.zeros(N, np.uint8)
    stack = np.empty(N, np.int64)
    top = 0
    stack[top] = 0
    top += 1
    visited[0] = 1
    while top > 0:
        top -= 1
        v = stack[top]
        for idx in range(adj_start[v], adj_start[v + 1]):
            t = adj_arc[idx]
            u = tr[t]
            w = n + tc[t]
            other = w if v == u else u
            if visited[other]:
                continue
            visited[other] = 1
            parent[other] = v
            arc_r[other] = tr[t]
            arc_c[other] = tc[t]
            fpar[other] = tf[t]
            depth[other] = depth[v] + 1
            pot[other] = C[tr[t], tc[t]] - pot[v]
            next_sib[other] = first_child[v]
            if first_child[v] >= 0:
                prev_sib[first_child[v]] = other
            prev_sib[other] = -1
            first_child[v] = other
            stack[top] = other
            top += 1

    maxc = 0.0
    for r in range(n):
        for c in range(m):
            if C[r, c] > maxc:
                maxc = C[r, c]
    tol = 1e-11 * (1.0 + maxc)

    row_pos = 0
    iters = 0
    stall = 0
    bland = False
    while iters < max_iter:
        iters += 1
        best = -tol
        er = -1
        ec = -1
        if not bland:
            rows_scanned = 0
            while rows_scanned < n:
                rr = row_pos
                urr = pot[rr]
                for cc in range(m):
                    red = C[rr, cc] - urr - pot[n + cc]
                    if red < best:
                        best = red
                        er = rr
                        ec = cc
                row_pos += 1
                if row_pos == n:
                    row_pos = 0
                rows_scanned += 1
                if er >= 0 and rows_scanned >= block_rows:
                    break
        else:
            # Bland: first eligible arc in fixed row-major order
            for rr in range(n):
                urr = pot[rr]
                for cc in range(m):
                    if C[rr, cc] - urr - pot[n + cc] < -tol:
                        er = rr
                        ec = cc
                        break
                if er >= 0:
                    break
        if er < 0:
            return tr, tc, tf, pot, iters, 0, parent, arc_r, arc_c, fpar

        vsrc = er
        vsnk = n + ec
        # locate leaving arc: walk both sides up to the apex.  Arcs that
        # lose flow are parent arcs of sinks on the sink side and parent
        # arcs of sources on the source side.
        x = vsrc
        y = vsnk
        theta = np.inf
        lnode = -1
        dx = depth[x]
        dy = depth[y]
        while dx > dy:
            if x < n and fpar[x] < theta:
                theta = fpar[x]
                lnode = x
            x = parent[x]
            dx -= 1
        while dy > dx:
            if y >= n and fpar[y] < theta:
                theta = fpar[y]
                lnode = y
            y = parent[y]
            dy -= 1
        while x != y:
            if x < n and fpar[x] < theta:
                theta = fpar[x]
                lnode = x
            if y >= n and fpar[y] < theta:
                theta = fpar[y]
                lnode = y
            x = parent[x]
            y = parent[y]
        apex = x

        if theta > 0.0:
            stall = 0
        else:
            stall += 1
            if stall > stall_limit:
                bland = True

        x = vsrc
        while x != apex:
            if x < n:
                fpar[x] -= theta
            else:
                fpar[x] += theta
            x = parent[x]
        y = vsnk
        while y != apex:
            if y >= n:
                fpar[y] -= theta
            else:
                fpar[y] += theta
            y = parent[y]

        # which side of the cycle holds the leaving arc
        side_src = False
        x = vsrc
        while x != apex:
            if x == lnode:
                side_src = True
                break
            x = parent[x]
        enode = vsrc if side_src else vsnk
        onode = vsnk if side_src else vsrc

        # re-root the detached subtree at enode, hanging it under onode
        cur = enode
        pre = onode
        new_r = er
        new_c = ec
        new_f = theta
        while True:
            old_p = parent[cur]
            old_r = arc_r[cur]
            old_c = arc_c[cur]
            old_f = fpar[cur]
            if old_p >= 0:
                if prev_sib[cur] >= 0:
                    next_sib[prev_sib[cur]] = next_sib[cur]
                else:
                    first_child[old_p] = next_sib[cur]
                if next_sib[cur] >= 0:
                    prev_sib[next_sib[cur]] = prev_sib[cur]
            parent[cur] = pre
            arc_r[cur] = new_r
            arc_c[cur] = new_c
            fpar[cur] = new_f
            next_sib[cur] = first_child[pre]
            if first_child[pre] >= 0:
                prev_sib[first_child[pre]] = cur
            prev_sib[cur] = -1
            first_child[pre] = cur
            if cur == lnode:
                break
            pre = cur
            cur = old_p
            new_r = old_r
            new_c = old_c
            new_f = old_f

        # refresh depth and potentials on the re-hung subtree
        top = 0
        stack[top] = enode
        top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            p = parent[v]
            depth[v] = depth[p] + 1
            pot[v] = C[arc_r[v], arc_c[v]] - pot[p]
            ch = first_child[v]
            while ch >= 0:
                stack[top] = ch
                top += 1
                ch = next_sib[ch]

    return tr, tc, tf, pot, iters, 1, parent, arc_r, arc_c, fpar


@dataclass
class TransportPlan:
    """Basic solution of a balanced transportation problem.

    Triples carry strictly positive mass only; support size is at most
    n_source + n_target - 1.  Dual potentials certify optimality.
    """

    src: np.ndarray
    dst: np.ndarray
    mass: np.ndarray
    objective: float
    n_source: int
    n_target: int
    dual_source: np.ndarray | None = None
    dual_target: np.ndarray | None = None

    def dense(self):
        X = np.zeros((self.n_source, self.n_target))
        X[self.src, self.dst] = self.mass
        return X

    def row_sums(self):
        return np.bincount(self.src, weights=self.mass, minlength=self.n_source)

    def col_sums(self):
        return np.bincount(self.dst, weights=self.mass, minlength=self.n_target)


@dataclass
class DualityReport:
    primal: float
    dual: float
    gap: float
    min_reduced_cost: float


def _validate_inputs(supply, demand, cost):
    a = np.asarray(supply, dtype=float)
    b = np.asarray(demand, dtype=float)
    C = np.ascontiguousarray(cost, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or C.shape != (len(a), len(b)):
        raise ValueError("cost must be (len(supply), len(demand))")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("weights must be nonnegative")
    if not np.all(np.isfinite(C)) or np.any(C < 0):
        raise ValueError("cost entries must be finite and nonnegative")
    ta, tb = a.sum(), b.sum()
    if abs(ta - tb) > MASS_RTOL * max(ta, tb, 1.0):
        raise ValueError("unbalanced input")
    return a, b, C


def solve_balanced(supply, demand, cost) -> TransportPlan:
    """Exact optimal transport plan between equal-mass weight vectors.

    Raises ValueError on negative/NaN costs or if the supplies and demands
    differ by more than 1e-9 relative.
    """
    a, b, C = _validate_inputs(supply, demand, cost)
    n, m = C.shape
    total = a.sum()
    if total == 0.0:
        return TransportPlan(src=np.empty(0, int), dst=np.empty(0, int),
                             mass=np.empty(0), objective=0.0,
                             n_source=n, n_target=m,
                             dual_source=np.zeros(n), dual_target=np.zeros(m))
    # exact rebalance of the (within-tolerance) residual
    b = b * (total / b.sum())

    transposed = m > n
    if transposed:
        a, b, C = b, a, np.ascontiguousarray(C.T)
        n, m = m, n

    block_rows = max(1, int(round(np.sqrt(n * m) / m)))
    max_iter = 300 * (n + m) + 10_000
    out = _simplex_kernel(a, b, C, block_rows, max_iter, 20 * (n + m))
    _, _, _, pot, iters, status, parent, arc_r, arc_c, fpar = out
    if status != 0:
        raise RuntimeError(f"network simplex did not converge in {iters} pivots")

    # basis arcs live on the parent links; keep strictly positive flows
    keep = (parent >= 0) & (fpar > 0.0)
    src = arc_r[keep].astype(int)
    dst = arc_c[keep].astype(int)
    val = fpar[keep].copy()
    u = pot[:n].copy()
    v = pot[n:].copy()

    if transposed:
        src, dst = dst, src
        u, v = v, u
        n, m = m, n
    objective = float((np.asarray(cost, dtype=float)[src, dst] * val).sum())
    order = np.lexsort((dst, src))
    return TransportPlan(src=src[order], dst=dst[order], mass=val[order],
                         objective=objective, n_source=n, n_target=m,
                         dual_source=u, dual_target=v)


def verify_duality(plan: TransportPlan, supply, demand, cost) -> DualityReport:
    """Primal/dual gap report for a feasible plan.

    The dual value comes from the plan's stored potentials when present,
    otherwise from a fresh solve; for an optimal plan the gap is ~0, for a
    perturbed feasible plan it is strictly positive.
    """
    a, b, C = _validate_inputs(supply, demand, cost)
    tol = MASS_RTOL * max(a.sum(), 1.0)
    if (np.any(np.abs(plan.row_sums() - a) > tol)
            or np.any(np.abs(plan.col_sums() - b) > tol)
            or np.any(plan.mass < -tol)):
        raise ValueError("infeasible plan")
    primal = float((C[plan.src, plan.dst] * plan.mass).sum())
    if plan.dual_source is not None and plan.dual_target is not None:
        u, v = plan.dual_source, plan.dual_target
    else:
        ref = solve_balanced(a, b, C)
        u, v = ref.dual_source, ref.dual_target
    dual = float(a @ u + b @ v)
    reduced = C - u[:, None] - v[None, :]
    return DualityReport(primal=primal, dual=dual, gap=primal - dual,
                         min_reduced_cost=float(reduced.min()))
