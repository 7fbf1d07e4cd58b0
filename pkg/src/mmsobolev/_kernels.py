"""Hot loops: shortest paths, path enumeration and network simplex.

Array conventions: weight matrices are dense ``(n, n)`` float64 with ``np.inf``
marking a missing edge.  All kernels take and return numpy arrays only, so they
compile under numba in nopython mode.
"""
import numpy as np

from ._jit import kernel


# ---------------------------------------------------------------- shortest paths

def _floyd_warshall_numpy(W):
    D = W.copy()
    np.fill_diagonal(D, np.minimum(np.diag(D), 0.0))
    for k in range(D.shape[0]):
        np.minimum(D, D[:, k, None] + D[None, k, :], out=D)
    return D


@kernel(_floyd_warshall_numpy)
def floyd_warshall(W):
    """All-pairs shortest path lengths for a nonnegative weight matrix."""
    n = W.shape[0]
    D = W.copy()
    for i in range(n):
        if D[i, i] > 0.0:
            D[i, i] = 0.0
    for k in range(n):
        for i in range(n):
            dik = D[i, k]
            if dik == np.inf:
                continue
            for j in range(n):
                v = dik + D[k, j]
                if v < D[i, j]:
                    D[i, j] = v
    return D


def _hop_tables_numpy(W, init, hops):
    n = W.shape[0]
    R = np.empty((hops + 1, n))
    R[0] = init
    for h in range(1, hops + 1):
        R[h] = np.minimum(R[h - 1], (W + R[h - 1][None, :]).min(axis=1))
    return R


@kernel(_hop_tables_numpy)
def hop_tables(W, init, hops):
    """Hop-limited Bellman-Ford towards a target set.

    ``R[h, u]`` is the least value of ``sum of edge weights + init[end]`` over
    walks from ``u`` with at most ``h`` edges.  ``init`` is ``inf`` off the
    target set.
    """
    n = W.shape[0]
    R = np.empty((hops + 1, n))
    for u in range(n):
        R[0, u] = init[u]
    for h in range(1, hops + 1):
        for u in range(n):
            best = R[h - 1, u]
            for v in range(n):
                w = W[u, v]
                if w == np.inf:
                    continue
                c = w + R[h - 1, v]
                if c < best:
                    best = c
            R[h, u] = best
    return R


# -------------------------------------------------------------- path enumeration

@kernel()
def simple_paths(indptr, indices, is_source, is_target, max_edges, limit):
    """Enumerate simple paths from the source set to the target set.

    Depth-first search over a CSR adjacency (neighbours sorted ascending), so
    paths from one source come out in lexicographic order.  Returns
    ``(flat, offsets, count)``; ``count == -1`` signals that more than
    ``limit`` paths exist.
    """
    n = indptr.shape[0] - 1
    flat = np.empty(64, dtype=np.int64)
    offsets = np.zeros(17, dtype=np.int64)
    count = 0
    pos = 0
    path = np.empty(max_edges + 1, dtype=np.int64)
    cursor = np.empty(max_edges + 1, dtype=np.int64)
    on_path = np.zeros(n, dtype=np.bool_)
    for s in range(n):
        if not is_source[s]:
            continue
        depth = 0
        path[0] = s
        cursor[0] = indptr[s]
        on_path[s] = True
        emit = True
        while depth >= 0:
            if emit:
                emit = False
                if is_target[path[depth]]:
                    if count >= limit:
                        return flat[:pos], offsets[: count + 1], -1
                    need = pos + depth + 1
                    if need > flat.shape[0]:
                        grown = np.empty(max(2 * flat.shape[0], need), dtype=np.int64)
                        grown[:pos] = flat[:pos]
                        flat = grown
                    for k in range(depth + 1):
                        flat[pos + k] = path[k]
                    pos = need
                    count += 1
                    if count + 1 > offsets.shape[0]:
                        grown_o = np.zeros(2 * offsets.shape[0], dtype=np.int64)
                        grown_o[:count] = offsets[:count]
                        offsets = grown_o
                    offsets[count] = pos
            u = path[depth]
            advanced = False
            if depth < max_edges:
                while cursor[depth] < indptr[u + 1]:
                    v = indices[cursor[depth]]
                    cursor[depth] += 1
                    if not on_path[v]:
                        depth += 1
                        path[depth] = v
                        cursor[depth] = indptr[v]
                        on_path[v] = True
                        emit = True
                        advanced = True
                        break
            if not advanced:
                on_path[u] = False
                depth -= 1
    return flat[:pos], offsets[: count + 1], count


# ----------------------------------------------------------------- network simplex

@kernel()
def network_simplex(n_nodes, tails, heads, costs, supply, big_m, max_pivots):
    """Uncapacitated min-cost flow by the primal network simplex.

    ``supply[v] > 0`` marks a source, ``< 0`` a sink.  An artificial root with
    big-M arcs gives the initial strongly feasible tree; the leaving arc is
    picked by Cunningham's rule so degenerate pivots cannot cycle.  Returns
    ``(flow, potential, artificial_flow, status)`` with status 0 optimal,
    1 pivot cap hit.
    """
    m = tails.shape[0]
    root = n_nodes
    N = n_nodes + 1
    M = m + n_nodes
    tail = np.empty(M, dtype=np.int64)
    head = np.empty(M, dtype=np.int64)
    cost = np.empty(M)
    flow = np.zeros(M)
    for a in range(m):
        tail[a] = tails[a]
        head[a] = heads[a]
        cost[a] = costs[a]
    in_tree = np.zeros(M, dtype=np.bool_)
    for v in range(n_nodes):
        a = m + v
        cost[a] = big_m
        in_tree[a] = True
        if supply[v] > 0.0:
            tail[a] = v
            head[a] = root
            flow[a] = supply[v]
        else:
            tail[a] = root
            head[a] = v
            flow[a] = -supply[v]

    parent = np.empty(N, dtype=np.int64)
    parc = np.empty(N, dtype=np.int64)
    depth = np.empty(N, dtype=np.int64)
    pot = np.empty(N)
    deg = np.zeros(N + 1, dtype=np.int64)
    adj = np.empty(2 * N, dtype=np.int64)
    fill = np.empty(N, dtype=np.int64)
    queue = np.empty(N, dtype=np.int64)
    tree_arcs = np.empty(N - 1, dtype=np.int64)

    block = max(1, int(np.sqrt(m + 1.0)))
    start = 0
    status = 1
    scale = 1.0
    for a in range(m):
        if abs(costs[a]) > scale:
            scale = abs(costs[a])
    eps = 1e-12 * scale

    for pivot in range(max_pivots + 1):
        # rebuild parent pointers, depths and potentials from the tree
        k = 0
        for a in range(M):
            if in_tree[a]:
                tree_arcs[k] = a
                k += 1
        deg[:] = 0
        for i in range(N - 1):
            a = tree_arcs[i]
            deg[tail[a] + 1] += 1
            deg[head[a] + 1] += 1
        for v in range(N):
            deg[v + 1] += deg[v]
        for v in range(N):
            fill[v] = deg[v]
        for i in range(N - 1):
            a = tree_arcs[i]
            adj[fill[tail[a]]] = a
            fill[tail[a]] += 1
            adj[fill[head[a]]] = a
            fill[head[a]] += 1
        parent[root] = -1
        parc[root] = -1
        depth[root] = 0
        pot[root] = 0.0
        queue[0] = root
        qh = 0
        qt = 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            for idx in range(deg[u], deg[u + 1]):
                a = adj[idx]
                w = head[a] if tail[a] == u else tail[a]
                if a == parc[u]:
                    continue
                parent[w] = u
                parc[w] = a
                depth[w] = depth[u] + 1
                # reduced cost c + pot[tail] - pot[head] vanishes on tree arcs
                if tail[a] == u:
                    pot[w] = pot[u] + cost[a]
                else:
                    pot[w] = pot[u] - cost[a]
                queue[qt] = w
                qt += 1

        # block pricing over real arcs (artificial arcs never re-enter)
        enter = -1
        best = -eps
        scanned = 0
        a = start
        while scanned < m:
            if not in_tree[a]:
                rc = cost[a] + pot[tail[a]] - pot[head[a]]
                if rc < best:
                    best = rc
                    enter = a
            scanned += 1
            a += 1
            if a == m:
                a = 0
            if enter >= 0 and scanned % block == 0:
                break
        start = a
        if enter < 0:
            status = 0
            break
        if pivot == max_pivots:
            break

        u = tail[enter]
        v = head[enter]
        # find the apex
        x = u
        y = v
        while x != y:
            if depth[x] >= depth[y]:
                x = parent[x]
            else:
                y = parent[y]
        apex = x
        # flow goes u -> v, then v up to apex, then apex down to u
        theta = np.inf
        # v side: traverse x -> parent(x); backward when the arc points down
        x = v
        while x != apex:
            a = parc[x]
            if head[a] == x and flow[a] < theta:
                theta = flow[a]
            x = parent[x]
        x = u
        while x != apex:
            a = parc[x]
            if tail[a] == x and flow[a] < theta:
                theta = flow[a]
            x = parent[x]
        # Cunningham: last blocking arc met when walking the cycle from the apex
        leave = -1
        x = v
        while x != apex:
            a = parc[x]
            if head[a] == x and flow[a] <= theta:
                leave = a
            x = parent[x]
        if leave < 0:
            x = u
            while x != apex:
                a = parc[x]
                if tail[a] == x and flow[a] <= theta:
                    leave = a
                    break
                x = parent[x]
        # push theta around the cycle
        flow[enter] += theta
        x = v
        while x != apex:
            a = parc[x]
            if tail[a] == x:
                flow[a] += theta
            else:
                flow[a] -= theta
            x = parent[x]
        x = u
        while x != apex:
            a = parc[x]
            if head[a] == x:
                flow[a] += theta
            else:
                flow[a] -= theta
            x = parent[x]
        flow[leave] = 0.0
        in_tree[leave] = False
        in_tree[enter] = True

    art = 0.0
    for a in range(m, M):
        art += flow[a]
    return flow[:m].copy(), pot[:n_nodes].copy(), art, status
