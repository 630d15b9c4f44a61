"""Random n-lifts, random signings, and local-structure statistics of lifts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from naelab import kernels
from naelab.graph import (GraphError, SignedMultigraph, complete_bipartite,
                          non_backtracking_matrix)

CYCLE_LENGTH_CAP = 8
CYCLE_STEP_CAP = 10**9
BALL_VISIT_CAP = 10**6

_LIFT_STREAM, _SIGN_STREAM = 0, 1


class ResourceError(RuntimeError):
    """An enumeration would exceed its configured budget."""


def _stream(seed: int, *key: int) -> np.random.Generator:
    # counter-based generator keyed by (seed, purpose, index): edges draw independently of order
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *key])))


@dataclass(frozen=True, eq=False)
class LiftSpec:
    """Everything needed to rebuild a (signed) lift bit-for-bit."""

    base: SignedMultigraph
    n: int
    permutations: np.ndarray  # (base edges, n)
    signs: np.ndarray  # (base edges * n,)
    seed: int

    def __post_init__(self):
        perms = np.asarray(self.permutations, dtype=np.int64)
        signs = np.asarray(self.signs, dtype=np.int8).reshape(-1)
        if self.n < 1:
            raise GraphError("lift order must be at least 1")
        if perms.shape != (self.base.edge_count, self.n):
            raise GraphError("one permutation of [n] per base edge required")
        if np.any(np.sort(perms, axis=1) != np.arange(self.n)):
            raise GraphError("permutation rows must be bijections of [n]")
        if len(signs) != self.n * self.base.edge_count or not np.all(np.abs(signs) == 1):
            raise GraphError("need one +-1 sign per lifted edge")
        object.__setattr__(self, "permutations", perms)
        object.__setattr__(self, "signs", signs)

    def build(self) -> SignedMultigraph:
        return _assemble(self.base, self.n, self.permutations, self.signs)

    def __eq__(self, other):
        return (isinstance(other, LiftSpec) and self.n == other.n and self.seed == other.seed
                and np.array_equal(self.base.edges, other.base.edges)
                and np.array_equal(self.permutations, other.permutations)
                and np.array_equal(self.signs, other.signs))


def _assemble(base, n, perms, signs) -> SignedMultigraph:
    u = base.edges[:, 0:1] * n + np.arange(n)
    v = base.edges[:, 1:2] * n + perms
    edges = np.stack([u.ravel(), v.ravel()], axis=1)
    bip = None if base.bipartition is None else tuple(n * p for p in base.bipartition)
    return SignedMultigraph(n * base.vertex_count, edges, signs, bip, base.biregular)


def random_lift(base: SignedMultigraph, n: int, seed: int):
    """Uniform random n-lift: vertex ``(v, i)`` becomes ``v * n + i`` and base
    edge ``e = (u, v)`` becomes the matching ``(u, i) -- (v, sigma_e(i))``.
    Lifted edges inherit the base signs."""
    if n < 1:
        raise GraphError("lift order must be at least 1")
    perms = np.stack([_stream(seed, _LIFT_STREAM, e).permutation(n) for e in range(base.edge_count)]) \
        if base.edge_count else np.zeros((0, n), dtype=np.int64)
    signs = np.repeat(base.signs, n)
    spec = LiftSpec(base, n, perms, signs, seed)
    return spec.build(), spec


def random_signing(g: SignedMultigraph, seed: int) -> SignedMultigraph:
    """Same topology, IID uniform +-1 labels."""
    rng = _stream(seed, _SIGN_STREAM)
    return g.with_signs(rng.choice(np.array([-1, 1], dtype=np.int8), size=g.edge_count))


def random_instance(c: int, d: int, n: int, seed: int, signed: bool = True):
    """Random (signed) n-lift of ``K_{d,c}``; returns ``(graph, spec)``."""
    lifted, spec = random_lift(complete_bipartite(c, d), n, seed)
    if signed:
        lifted = random_signing(lifted, seed)
        spec = LiftSpec(spec.base, n, spec.permutations, lifted.signs, seed)
    return lifted, spec


def nb_walk_counts(base: SignedMultigraph, kmax: int) -> np.ndarray:
    """``w_k = tr(B^k)`` for ``k = 0..kmax`` as exact integers (entries 0 and 1
    are included for indexing convenience)."""
    if kmax < 2:
        raise ValueError("kmax must be at least 2")
    B, _ = non_backtracking_matrix(base.with_signs(np.ones(base.edge_count)))
    B = B.toarray().astype(np.int64).astype(object)
    out = [len(B)]
    P = B.copy()
    for _ in range(kmax):
        out.append(int(np.trace(P)))
        P = P.dot(B)
    return np.array(out, dtype=object)


@dataclass(frozen=True)
class CycleStats:
    counts: np.ndarray  # counts[k] = Z_k, k = 0..gmax
    poisson_means: np.ndarray | None = None  # w_k / (2k)


def cycle_counts(g: SignedMultigraph, gmax: int, base: SignedMultigraph | None = None,
                 length_cap: int = CYCLE_LENGTH_CAP, step_cap: int = CYCLE_STEP_CAP) -> CycleStats:
    """Exact numbers of cycles of every length up to ``gmax``.

    Two parallel edges form a 2-cycle.  When ``base`` is given, the Poisson
    means ``w_k/(2k)`` of the lift limit are attached.
    """
    if gmax < 2:
        raise ValueError("gmax must be at least 2")
    if gmax > length_cap:
        raise ResourceError(f"cycle enumeration capped at length {length_cap}")
    counts = kernels.count_cycles(*g.csr, gmax, step_cap)
    if counts is None:
        raise ResourceError("cycle enumeration exceeded its step budget")
    means = None
    if base is not None:
        w = nb_walk_counts(base, gmax)
        means = np.array([0.0, 0.0] + [w[k] / (2 * k) for k in range(2, gmax + 1)])
    return CycleStats(counts, means)


def ball_cyclomatic(g: SignedMultigraph, radius: int, limit: int, centers=None,
                    cap: int = BALL_VISIT_CAP) -> np.ndarray:
    """Cyclomatic number of each induced radius-``radius`` ball, clipped at
    ``limit + 1``."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if centers is None:
        centers = np.arange(g.vertex_count, dtype=np.int64)
    centers = np.ascontiguousarray(centers, dtype=np.int64)
    out = kernels.ball_excess(*g.csr, g.edge_count, centers, radius, limit, cap)
    if np.any(out == kernels.CAP_EXCEEDED):
        raise ResourceError("ball enumeration exceeded its visit budget")
    return out


def bad_vertices(g: SignedMultigraph, radius: int) -> np.ndarray:
    """Vertices whose induced radius-``radius`` ball contains a cycle."""
    return np.flatnonzero(ball_cyclomatic(g, radius, 0) > 0)


def is_tangle_free(g: SignedMultigraph, ell: int) -> bool:
    """True iff every radius-``ell`` ball holds at most one independent cycle."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    return bool(np.all(ball_cyclomatic(g, ell, 1) <= 1))


def high_girth_instance(c: int, d: int, n: int, girth: int, seed: int, signed: bool = True,
                        max_rounds: int = 200, tries: int = 64):
    """Random lift of ``K_{d,c}`` repaired until its girth is at least ``girth``.

    Each round collects edges that close short cycles and re-routes each one
    by swapping two entries of its permutation, accepting a swap only when
    neither new edge closes a cycle shorter than ``girth``.  The result is no
    longer uniform over lifts; it exists to give tree-like neighbourhoods of
    a chosen radius at moderate ``n``.
    """
    if girth < 2:
        raise ValueError("girth must be at least 2")
    base = complete_bipartite(c, d)
    _, spec = random_lift(base, n, seed)
    perms = spec.permutations.copy()
    rng = _stream(seed, 2)
    radius = (girth - 1) // 2  # acyclic radius-R balls everywhere <=> no cycle of length <= 2R + 1
    signs = np.repeat(base.signs, n)
    bu, bv = base.edges[:, 0] * n, base.edges[:, 1] * n
    for _ in range(max_rounds):
        g = _assemble(base, n, perms, signs)
        bad = np.flatnonzero(ball_cyclomatic(g, radius, 0) > 0) if radius else np.zeros(0, int)
        if len(bad) == 0:
            break
        indptr, nbr, eid = g.csr
        hits = {_closing_edge(indptr, nbr, eid, int(x), radius) for x in rng.permutation(bad)[:256]}
        adj = [dict() for _ in range(g.vertex_count)]
        for k, (x, y) in enumerate(g.edges.tolist()):
            adj[x][k] = y
            adj[y][k] = x
        for k in sorted(hits):
            e, i = divmod(k, n)
            for _ in range(tries):
                j = int(rng.integers(n))
                if j == i:
                    continue
                ea, eb = e * n + i, e * n + j
                ua, ub = bu[e] + i, bu[e] + j
                va, vb = bv[e] + perms[e, i], bv[e] + perms[e, j]
                for t, x in ((ea, ua), (ea, va), (eb, ub), (eb, vb)):
                    del adj[x][t]
                ok = _far(adj, ua, vb, girth - 2) and _far(adj, ub, va, girth - 2)
                if ok:
                    perms[e, i], perms[e, j] = perms[e, j], perms[e, i]
                    va, vb = vb, va
                for t, x, y in ((ea, ua, va), (eb, ub, vb)):
                    adj[x][t] = y
                    adj[y][t] = x
                if ok:
                    break
    else:
        raise ResourceError(f"no lift of girth {girth} found in {max_rounds} rounds")
    lifted = _assemble(base, n, perms, signs)
    spec = LiftSpec(base, n, perms, signs, seed)
    if signed:
        lifted = random_signing(lifted, seed)
        spec = LiftSpec(base, n, perms, lifted.signs, seed)
    return lifted, spec


def _far(adj, x: int, y: int, depth: int) -> bool:
    """True when ``y`` is more than ``depth`` steps from ``x``; the smaller
    of the two search frontiers grows each step."""
    if x == y:
        return depth < 0
    seen = [{x}, {y}]
    front = [[x], [y]]
    for _ in range(depth):
        s = 0 if len(front[0]) <= len(front[1]) else 1
        nxt = []
        for u in front[s]:
            for w in adj[u].values():
                if w in seen[1 - s]:
                    return False
                if w not in seen[s]:
                    seen[s].add(w)
                    nxt.append(w)
        front[s] = nxt
    return True


def _closing_edge(indptr, nbr, eid, center, radius) -> int:
    """First edge found to close a cycle inside the radius-``radius`` ball."""
    dist = {center: 0}
    used = set()
    queue = [center]
    for x in queue:
        inner = dist[x] < radius
        for slot in range(indptr[x], indptr[x + 1]):
            y, e = int(nbr[slot]), int(eid[slot])
            if e in used:
                continue
            if y in dist:
                return e
            if inner:
                used.add(e)
                dist[y] = dist[x] + 1
                queue.append(y)
    raise ValueError("ball is acyclic")
