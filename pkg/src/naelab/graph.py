"""Signed multigraphs, their matrix views, and the clique (primal) expansion.

A single :class:`SignedMultigraph` carries every graph in the package: the
base graph ``K_{d,c}``, its lifts, the signed constraint/variable graph and
the signed primal graph on the variables.  Bipartite graphs keep the
constraint vertices first (``0 .. left-1``) and the variables after them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

DENSE_CAP = 2000


class GraphError(ValueError):
    """Raised when a graph violates a structural precondition."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SignedMultigraph:
    """Loopless multigraph with a +-1 label on every edge.

    Parameters
    ----------
    vertex_count : int
    edges : array_like, shape (E, 2)
        Endpoints; parallel edges are allowed and stay distinct.
    signs : array_like, shape (E,), optional
        Entries in {+1, -1}; all +1 when omitted.
    bipartition : (left, right), optional
        Part sizes, constraints on the left.
    biregular : (c, d), optional
        Declares every left vertex of degree ``c`` and every right vertex of
        degree ``d``; checked at construction.
    """

    vertex_count: int
    edges: np.ndarray
    signs: np.ndarray = None
    bipartition: tuple[int, int] | None = None
    biregular: tuple[int, int] | None = None

    def __post_init__(self):
        n = int(self.vertex_count)
        if n < 0:
            raise GraphError("vertex_count must be nonnegative")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.signs is None:
            signs = np.ones(len(edges), dtype=np.int8)
        else:
            signs = np.asarray(self.signs).astype(np.int8).reshape(-1)
        if len(signs) != len(edges):
            raise GraphError("one sign per edge required")
        if not np.all(np.abs(signs) == 1):
            raise GraphError("signs must be +1 or -1")
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise GraphError("self-loops are not allowed")
        object.__setattr__(self, "vertex_count", n)
        object.__setattr__(self, "edges", _frozen(edges))
        object.__setattr__(self, "signs", _frozen(signs))
        if self.bipartition is not None:
            left, right = (int(x) for x in self.bipartition)
            if left + right != n:
                raise GraphError("bipartition sizes must sum to vertex_count")
            side = edges < left
            if np.any(side[:, 0] == side[:, 1]):
                raise GraphError("every edge must cross the bipartition")
            object.__setattr__(self, "bipartition", (left, right))
        if self.biregular is not None:
            if self.bipartition is None:
                raise GraphError("biregular flag needs a bipartition")
            c, d = (int(x) for x in self.biregular)
            deg = self.degrees
            left = self.bipartition[0]
            if np.any(deg[:left] != c) or np.any(deg[left:] != d):
                raise GraphError(f"graph is not ({c},{d})-biregular")
            object.__setattr__(self, "biregular", (c, d))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.bincount(self.edges.ravel(), minlength=self.vertex_count)
        return _frozen(deg.astype(np.int64))

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Half-edge adjacency ``(indptr, neighbor, edge_id)``.

        Slot ``indptr[v] .. indptr[v+1]`` lists every half-edge leaving ``v``;
        parallel edges appear once per edge.
        """
        e = self.edge_count
        tails = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        heads = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eids = np.concatenate([np.arange(e), np.arange(e)])
        order = np.lexsort((eids, tails))
        indptr = np.zeros(self.vertex_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(tails, minlength=self.vertex_count), out=indptr[1:])
        return (_frozen(indptr), _frozen(heads[order].astype(np.int64)),
                _frozen(eids[order].astype(np.int64)))

    def with_signs(self, signs) -> "SignedMultigraph":
        return SignedMultigraph(self.vertex_count, self.edges, signs,
                                self.bipartition, self.biregular)

    def is_unsigned(self) -> bool:
        return bool(np.all(self.signs == 1))


def complete_bipartite(c: int, d: int) -> SignedMultigraph:
    """Unsigned ``K_{d,c}``: ``d`` constraint vertices of degree ``c`` on the
    left, ``c`` variable vertices of degree ``d`` on the right."""
    if c < 1 or d < 1:
        raise GraphError("c and d must be positive")
    edges = [(a, d + j) for a in range(d) for j in range(c)]
    return SignedMultigraph(d + c, edges, bipartition=(d, c), biregular=(c, d))


def cycle_graph(k: int) -> SignedMultigraph:
    return SignedMultigraph(k, [(i, (i + 1) % k) for i in range(k)])


def matrices(g: SignedMultigraph, sparse: bool = False):
    """Return ``(A, D, L)`` with ``A[i, j]`` the sum of edge labels between
    ``i`` and ``j`` and ``D`` counting every edge regardless of sign."""
    n = g.vertex_count
    if not sparse and n > DENSE_CAP:
        raise GraphError(f"dense matrices capped at dimension {DENSE_CAP}")
    u, v = g.edges[:, 0], g.edges[:, 1]
    w = g.signs.astype(np.float64)
    A = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
                      shape=(n, n)).tocsr()
    A.sum_duplicates()
    D = sp.diags(g.degrees.astype(np.float64)).tocsr()
    L = (D - A).tocsr()
    if sparse:
        return A, D, L
    return A.toarray(), D.toarray(), L.toarray()


def deformed_laplacian(g: SignedMultigraph, u: float, sparse: bool = False):
    """``(1 - u^2) I + u^2 D - u A``."""
    A, D, _ = matrices(g, sparse=True)
    M = sp.identity(g.vertex_count, format="csr") * (1 - u * u) + D * (u * u) - A * u
    return M.tocsr() if sparse else M.toarray()


@dataclass(frozen=True)
class DirectedEdgeIndex:
    """Arc numbering for the non-backtracking matrix.

    Edge ``e = (x, y)`` yields arc ``2e`` for ``x -> y`` and ``2e + 1`` for
    ``y -> x``, so the reversal involution is ``a ^ 1``.
    """

    tails: np.ndarray
    heads: np.ndarray
    edge_ids: np.ndarray
    slots: np.ndarray

    def __len__(self) -> int:
        return len(self.tails)

    @staticmethod
    def reverse(arc):
        return np.bitwise_xor(arc, 1)

    def index(self, u: int, v: int, slot: int = 0) -> int:
        hit = np.flatnonzero((self.tails == u) & (self.heads == v) & (self.slots == slot))
        if len(hit) != 1:
            raise KeyError((u, v, slot))
        return int(hit[0])


def directed_edges(g: SignedMultigraph) -> DirectedEdgeIndex:
    e = g.edge_count
    tails = np.empty(2 * e, dtype=np.int64)
    heads = np.empty(2 * e, dtype=np.int64)
    tails[0::2], heads[0::2] = g.edges[:, 0], g.edges[:, 1]
    tails[1::2], heads[1::2] = g.edges[:, 1], g.edges[:, 0]
    edge_ids = np.repeat(np.arange(e), 2)
    # slot = rank of this edge among the parallel edges joining the same pair
    lo = np.minimum(g.edges[:, 0], g.edges[:, 1])
    hi = np.maximum(g.edges[:, 0], g.edges[:, 1])
    order = np.lexsort((np.arange(e), hi, lo))
    slot = np.zeros(e, dtype=np.int64)
    for prev, cur in zip(order[:-1], order[1:]):
        if lo[prev] == lo[cur] and hi[prev] == hi[cur]:
            slot[cur] = slot[prev] + 1
    return DirectedEdgeIndex(tails, heads, edge_ids, np.repeat(slot, 2))


def non_backtracking_matrix(g: SignedMultigraph, sparse: bool = True):
    """Signed non-backtracking matrix over arcs.

    Entry ``[(i -> j), (j -> l)]`` equals the sign of the first arc unless the
    second arc is the reversal of the same (parallel) edge.
    """
    if g.edge_count == 0:
        raise GraphError("non-backtracking matrix needs at least one edge")
    idx = directed_edges(g)
    n_arcs = len(idx)
    indptr, _, eid = g.csr
    # arcs leaving each vertex, grouped by tail in csr order
    out_arcs = 2 * eid + (g.edges[eid, 0] != np.repeat(np.arange(g.vertex_count), np.diff(indptr)))
    counts = g.degrees[idx.heads]
    rows = np.repeat(np.arange(n_arcs), counts)
    starts = np.repeat(indptr[idx.heads], counts)
    offsets = np.arange(len(rows)) - np.repeat(np.cumsum(counts) - counts, counts)
    cols = out_arcs[starts + offsets]
    keep = cols != (rows ^ 1)
    rows, cols = rows[keep], cols[keep]
    data = g.signs[idx.edge_ids[rows]].astype(np.float64)
    B = sp.csr_matrix((data, (rows, cols)), shape=(n_arcs, n_arcs))
    if not sparse:
        if n_arcs > DENSE_CAP * 2:
            raise GraphError("dense non-backtracking matrix too large")
        B = B.toarray()
    return B, idx


def constraint_cliques(x: SignedMultigraph) -> tuple[np.ndarray, np.ndarray]:
    """Per constraint, its ``c`` variable indices (0-based among variables)
    and the signs of the incident edges."""
    if x.biregular is None:
        raise GraphError("constraint cliques need a biregular graph")
    c, _ = x.biregular
    left = x.bipartition[0]
    indptr, nbr, eid = x.csr
    nb = nbr[: indptr[left]].reshape(left, c) - left
    sg = x.signs[eid[: indptr[left]]].reshape(left, c)
    return nb, sg


def primal_graph(x: SignedMultigraph) -> SignedMultigraph:
    """Replace every constraint by a signed clique on its variables.

    Edge ``{i, j}`` coming from constraint ``a`` carries ``xi_ai * xi_aj``;
    edges are listed constraint by constraint, ``C(c, 2)`` each.
    """
    if x.biregular is None or x.bipartition is None:
        raise GraphError("primal graph needs a biregular bipartite graph")
    c, d = x.biregular
    nb, sg = constraint_cliques(x)
    pairs = np.array(list(itertools.combinations(range(c), 2)), dtype=np.int64).reshape(-1, 2)
    edges = np.stack([nb[:, pairs[:, 0]], nb[:, pairs[:, 1]]], axis=-1).reshape(-1, 2)
    signs = (sg[:, pairs[:, 0]] * sg[:, pairs[:, 1]]).reshape(-1)
    return SignedMultigraph(x.bipartition[1], edges, signs)


def evaluate_assignment(x: SignedMultigraph, values) -> tuple[float, float]:
    """Fractions of NAE constraints and of primal XOR edges satisfied.

    An XOR edge ``(u, v, xi)`` asks for ``x_u x_v = -xi``.
    """
    if x.biregular is None or x.biregular[0] != 3:
        raise GraphError("NAE evaluation requires c = 3")
    values = np.asarray(values)
    if len(values) != x.bipartition[1]:
        raise GraphError("assignment length must equal the variable count")
    nb, sg = constraint_cliques(x)
    lit = sg * values[nb]
    nae = float(np.mean(~np.all(lit == lit[:, :1], axis=1)))
    I = primal_graph(x)
    xor = float(np.mean(values[I.edges[:, 0]] * values[I.edges[:, 1]] == -I.signs))
    return nae, xor
