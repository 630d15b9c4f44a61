# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp

ctypedef cnp.int64_t i64

CAP_EXCEEDED = -1

cdef enum:
    CAP_EXCEEDED_C = -1


def count_cycles(const i64[:] indptr, const i64[:] nbr, const i64[:] eid,
                 int gmax, long long cap):
    cdef Py_ssize_t nv = indptr.shape[0] - 1
    cdef i64[:] counts = np.zeros(gmax + 1, dtype=np.int64)
    cdef cnp.int8_t[:] on_path = np.zeros(max(nv, 1), dtype=np.int8)
    cdef i64[:] st_v = np.zeros(gmax + 1, dtype=np.int64)
    cdef i64[:] st_slot = np.zeros(gmax + 1, dtype=np.int64)
    cdef i64[:] st_inc = np.zeros(gmax + 1, dtype=np.int64)
    cdef Py_ssize_t s, top, x, slot, y, e, depth
    cdef long long steps = 0
    cdef bint overflow = False
    with nogil:
        for s in range(nv):
            on_path[s] = 1
            top = 0
            st_v[0] = s
            st_slot[0] = indptr[s]
            st_inc[0] = -1
            while top >= 0:
                x = st_v[top]
                slot = st_slot[top]
                if slot == indptr[x + 1]:
                    if x != s:
                        on_path[x] = 0
                    top -= 1
                    continue
                st_slot[top] = slot + 1
                y = nbr[slot]
                e = eid[slot]
                steps += 1
                if steps > cap:
                    overflow = True
                    break
                depth = top
                if y == s:
                    if e != st_inc[top] and depth >= 1:
                        counts[depth + 1] += 1
                    continue
                if y < s or on_path[y] or depth + 2 > gmax:
                    continue
                on_path[y] = 1
                top += 1
                st_v[top] = y
                st_slot[top] = indptr[y]
                st_inc[top] = e
            if overflow:
                break
            on_path[s] = 0
    if overflow:
        return None
    return np.asarray(counts) // 2


cdef i64 _one_ball(const i64[:] indptr, const i64[:] nbr, const i64[:] eid,
                   i64 c, i64 radius, i64 limit, long long cap, i64 stamp,
                   i64[:] vstamp, i64[:] dist, i64[:] estamp, i64[:] queue) noexcept nogil:
    cdef Py_ssize_t head = 0, tail = 1, slot, x, y, e
    cdef i64 excess = 0
    cdef long long visits = 0
    cdef bint inner
    vstamp[c] = stamp
    dist[c] = 0
    queue[0] = c
    while head < tail:
        x = queue[head]
        head += 1
        inner = dist[x] < radius
        for slot in range(indptr[x], indptr[x + 1]):
            y = nbr[slot]
            e = eid[slot]
            visits += 1
            if visits > cap:
                return CAP_EXCEEDED_C
            if estamp[e] == stamp:
                continue
            if vstamp[y] != stamp:
                if not inner:
                    continue
                estamp[e] = stamp
                vstamp[y] = stamp
                dist[y] = dist[x] + 1
                queue[tail] = y
                tail += 1
            else:
                estamp[e] = stamp
                excess += 1
                if excess > limit:
                    return limit + 1
    return excess


def ball_excess(const i64[:] indptr, const i64[:] nbr, const i64[:] eid,
                Py_ssize_t n_edges, const i64[:] centers, i64 radius, i64 limit,
                long long cap):
    cdef Py_ssize_t nv = indptr.shape[0] - 1
    cdef i64[:] vstamp = np.full(max(nv, 1), -1, dtype=np.int64)
    cdef i64[:] dist = np.zeros(max(nv, 1), dtype=np.int64)
    cdef i64[:] queue = np.zeros(max(nv, 1), dtype=np.int64)
    cdef i64[:] estamp = np.full(max(n_edges, 1), -1, dtype=np.int64)
    cdef i64[:] out = np.zeros(centers.shape[0], dtype=np.int64)
    cdef Py_ssize_t t
    with nogil:
        for t in range(centers.shape[0]):
            out[t] = _one_ball(indptr, nbr, eid, centers[t], radius, limit, cap,
                               t, vstamp, dist, estamp, queue)
    return np.asarray(out)


def signed_ball(const i64[:] indptr, const i64[:] nbr, const i64[:] eid,
                const cnp.int8_t[:] signs, i64 center, i64 radius, long long cap):
    cdef Py_ssize_t nv = indptr.shape[0] - 1
    cdef Py_ssize_t n_edges = signs.shape[0]
    cdef i64[:] vstamp = np.full(nv, -1, dtype=np.int64)
    cdef i64[:] dist = np.zeros(nv, dtype=np.int64)
    cdef i64[:] sgn = np.zeros(nv, dtype=np.int64)
    cdef i64[:] queue = np.zeros(nv, dtype=np.int64)
    cdef cnp.int8_t[:] used = np.zeros(max(n_edges, 1), dtype=np.int8)
    cdef Py_ssize_t head = 0, tail = 1, slot, x, y, e
    cdef i64 excess = 0
    cdef long long visits = 0
    cdef bint inner, overflow = False
    vstamp[center] = 0
    dist[center] = 0
    sgn[center] = 1
    queue[0] = center
    with nogil:
        while head < tail:
            x = queue[head]
            head += 1
            inner = dist[x] < radius
            for slot in range(indptr[x], indptr[x + 1]):
                y = nbr[slot]
                e = eid[slot]
                visits += 1
                if visits > cap:
                    overflow = True
                    break
                if used[e]:
                    continue
                if vstamp[y] != 0:
                    if not inner:
                        continue
                    used[e] = 1
                    vstamp[y] = 0
                    dist[y] = dist[x] + 1
                    sgn[y] = sgn[x] * signs[e]
                    queue[tail] = y
                    tail += 1
                else:
                    used[e] = 1
                    excess += 1
            if overflow:
                break
    if overflow:
        return None
    v = np.asarray(queue[:tail]).copy()
    return v, np.asarray(dist)[v], np.asarray(sgn)[v], int(excess)
