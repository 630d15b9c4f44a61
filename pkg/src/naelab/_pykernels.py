"""Pure-Python graph kernels; reference twin of ``_ckernels.pyx``.

All functions take the half-edge adjacency ``(indptr, nbr, eid)`` produced by
:attr:`SignedMultigraph.csr` and must return exactly what the compiled
versions return.
"""
import numpy as np

CAP_EXCEEDED = -1


def count_cycles(indptr, nbr, eid, gmax, cap):
    """Counts of simple cycles of each length ``0..gmax`` (index = length).

    Cycles are rooted at their smallest vertex and walked in both
    directions, hence the final halving.  Returns ``None`` when more than
    ``cap`` DFS steps would be needed.
    """
    indptr = indptr.tolist()
    nbr = nbr.tolist()
    eid = eid.tolist()
    nv = len(indptr) - 1
    counts = [0] * (gmax + 1)
    on_path = [False] * nv
    steps = 0
    for s in range(nv):
        on_path[s] = True
        # stack frames: (vertex, next slot, incoming edge, depth)
        stack = [(s, indptr[s], -1, 0)]
        while stack:
            x, slot, inc, depth = stack[-1]
            if slot == indptr[x + 1]:
                stack.pop()
                if x != s:
                    on_path[x] = False
                continue
            stack[-1] = (x, slot + 1, inc, depth)
            y, e = nbr[slot], eid[slot]
            steps += 1
            if steps > cap:
                return None
            if y == s:
                if e != inc and depth >= 1:
                    counts[depth + 1] += 1
                continue
            if y < s or on_path[y] or depth + 2 > gmax:
                continue
            on_path[y] = True
            stack.append((y, indptr[y], e, depth + 1))
        on_path[s] = False
    return np.array(counts, dtype=np.int64) // 2


def ball_excess(indptr, nbr, eid, n_edges, centers, radius, limit, cap):
    """Cyclomatic number of each induced radius-``radius`` ball, clipped at
    ``limit + 1``; ``CAP_EXCEEDED`` where the ball needs more than ``cap``
    half-edge visits."""
    nv = len(indptr) - 1
    vstamp = np.full(nv, -1, dtype=np.int64)
    dist = np.zeros(nv, dtype=np.int64)
    estamp = np.full(n_edges, -1, dtype=np.int64)
    out = np.zeros(len(centers), dtype=np.int64)
    for t, c in enumerate(centers):
        out[t] = _one_ball(indptr, nbr, eid, int(c), radius, limit, cap,
                           t, vstamp, dist, estamp)
    return out


def _one_ball(indptr, nbr, eid, c, radius, limit, cap, stamp, vstamp, dist, estamp):
    vstamp[c] = stamp
    dist[c] = 0
    queue = [c]
    head = 0
    excess = 0
    visits = 0
    while head < len(queue):
        x = queue[head]
        head += 1
        inner = dist[x] < radius
        for slot in range(indptr[x], indptr[x + 1]):
            y, e = nbr[slot], eid[slot]
            visits += 1
            if visits > cap:
                return CAP_EXCEEDED
            if estamp[e] == stamp:
                continue
            if vstamp[y] != stamp:
                if not inner:
                    continue
                estamp[e] = stamp
                vstamp[y] = stamp
                dist[y] = dist[x] + 1
                queue.append(y)
            else:
                estamp[e] = stamp
                excess += 1
                if excess > limit:
                    return limit + 1
    return excess


def signed_ball(indptr, nbr, eid, signs, center, radius, cap):
    """BFS-tree distances and path-sign products from ``center``.

    Returns ``(vertices, distances, path_signs, excess)`` where ``excess``
    counts the non-tree edges met while scanning the ball, which is its
    cyclomatic number.  Path signs follow the BFS tree and are only
    path-independent when ``excess`` is zero.
    """
    vert = [center]
    dist = {center: 0}
    sign = {center: 1}
    used = set()
    head = 0
    visits = 0
    excess = 0
    while head < len(vert):
        x = vert[head]
        head += 1
        inner = dist[x] < radius
        for slot in range(indptr[x], indptr[x + 1]):
            y, e = int(nbr[slot]), int(eid[slot])
            visits += 1
            if visits > cap:
                return None
            if e in used:
                continue
            if y not in dist:
                if not inner:
                    continue
                used.add(e)
                dist[y] = dist[x] + 1
                sign[y] = sign[x] * int(signs[e])
                vert.append(y)
            else:
                used.add(e)
                excess += 1
    v = np.array(vert, dtype=np.int64)
    return (v, np.array([dist[i] for i in vert], dtype=np.int64),
            np.array([sign[i] for i in vert], dtype=np.int64), excess)
