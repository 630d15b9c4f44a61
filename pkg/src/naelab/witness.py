"""Explicit Gaussian-wave SDP solutions on finite lifted instances.

Every variable gets a vector of coefficients over independent standard
Gaussian generators.  Variables whose neighbourhood looks like the tree
copy the truncated tree wave (weights ``gamma * sign * r^dist`` on every
generator within clique distance ``L``); all other variables get a private
generator.  The Gram matrix of these vectors is a feasible SDP point.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from naelab import kernels
from naelab.graph import GraphError, SignedMultigraph, constraint_cliques, primal_graph
from naelab.lifts import BALL_VISIT_CAP, ResourceError
from naelab.spectral import symmetric_spectrum
from naelab.tree import TreeParams, WaveParams, wave_params

GRAM_DENSE_CAP = 4000
TRIANGLE_CAP = 1 / 3


def _check_pair(instance: SignedMultigraph, source: SignedMultigraph):
    if source.biregular is None:
        raise GraphError("source must be a biregular constraint/variable graph")
    expected = primal_graph(source)
    if (instance.vertex_count != expected.vertex_count
            or not np.array_equal(instance.edges, expected.edges)
            or not np.array_equal(instance.signs, expected.signs)):
        raise GraphError("instance is not the primal graph of source")


def _visit_cap(source: SignedMultigraph) -> int:
    # a ball can never need more than every half-edge once
    return max(BALL_VISIT_CAP, 2 * source.edge_count + 1)


def classify_good_vertices(instance: SignedMultigraph, source: SignedMultigraph, L: int) -> np.ndarray:
    """Flag variables whose bipartite ``(2L + 2)``-ball in ``source`` is a tree.

    That is the clique-distance ``(L + 1)``-ball of ``instance`` once each
    constraint clique is contracted back to its constraint vertex.
    """
    if L < 0:
        raise ValueError("L must be nonnegative")
    _check_pair(instance, source)
    left = source.bipartition[0]
    centers = left + np.arange(instance.vertex_count, dtype=np.int64)
    exc = kernels.ball_excess(*source.csr, source.edge_count, centers, 2 * L + 2, 0,
                              _visit_cap(source))
    if np.any(exc == kernels.CAP_EXCEEDED):
        raise ResourceError("ball enumeration exceeded its visit budget")
    return exc == 0


def _tree_ball(source: SignedMultigraph, var: int, radius: int):
    left = source.bipartition[0]
    out = kernels.signed_ball(*source.csr, source.signs, left + var, radius, _visit_cap(source))
    if out is None:
        raise ResourceError("ball enumeration exceeded its visit budget")
    return out


def path_sign(source: SignedMultigraph, u: int, w: int, radius: int) -> int:
    """Product of edge signs on the unique ``u``-``w`` path inside the
    bipartite ``radius``-ball around variable ``u``.

    Because the clique sign is ``xi_ai * xi_aj``, this equals the product of
    primal edge signs along any clique path that follows the same
    constraints.
    """
    verts, _, signs, excess = _tree_ball(source, u, radius)
    if excess:
        raise GraphError("ball contains a cycle; path sign is not well defined")
    hit = np.flatnonzero(verts == source.bipartition[0] + w)
    if len(hit) == 0:
        raise GraphError(f"{w} is not within distance {radius} of {u}")
    return int(signs[hit[0]])


@dataclass(eq=False)
class GramWitness:
    """Coefficient map plus (optionally dense) Gram matrix.

    Column ``w`` of ``coefficients`` is the wave generator at variable ``w``;
    column ``N + v`` is the private generator of variable ``v``.
    """

    coefficients: sp.csr_matrix
    good: np.ndarray
    params: WaveParams
    instance: SignedMultigraph
    source: SignedMultigraph
    gram: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.instance.vertex_count

    def entries(self, us, vs) -> np.ndarray:
        """Gram entries for paired index arrays; the diagonal is exactly one."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        if self.gram is not None:
            return self.gram[us, vs]
        C = self.coefficients
        out = np.asarray(C[us].multiply(C[vs]).sum(axis=1)).reshape(-1)
        out[us == vs] = 1.0
        return out

    def block(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if self.gram is not None:
            return self.gram[np.ix_(idx, idx)]
        Ci = self.coefficients[idx]
        G = (Ci @ Ci.T).toarray()
        np.fill_diagonal(G, 1.0)
        return G

    def sample(self, draws: int, seed: int, vertices=None) -> np.ndarray:
        """``draws`` joint samples of ``X_v`` for ``vertices`` (default all);
        rows are draws.  Only generators feeding those vertices are drawn."""
        rows = self.coefficients if vertices is None else self.coefficients[np.asarray(vertices)]
        cols = np.unique(rows.indices)
        rng = np.random.default_rng(seed)
        Z = rng.standard_normal((draws, len(cols)))
        return np.asarray(rows[:, cols] @ Z.T).T

    def coefficient_dump(self) -> dict:
        C = self.coefficients.tocsr()
        return {str(v): [[int(C.indices[k]), float(C.data[k])]
                         for k in range(C.indptr[v], C.indptr[v + 1])]
                for v in range(C.shape[0])}


def effective_rho(rho: float, triangle_safe: bool) -> float:
    """Target edge correlation after the optional triangle-safe clamp."""
    if triangle_safe:
        return float(min(max(rho, -TRIANGLE_CAP), TRIANGLE_CAP))
    return float(rho)


def build_witness(instance: SignedMultigraph, source: SignedMultigraph, rho: float,
                  tol: float = 1e-6, triangle_safe: bool = False,
                  dense_cap: int = GRAM_DENSE_CAP, L: int | None = None) -> GramWitness:
    """Gaussian-wave vectors with edge correlation ``xi_uv * rho`` on tree-like edges.

    Parameters
    ----------
    instance, source : SignedMultigraph
        Primal 2XOR graph and the bipartite graph it came from.
    rho : float
        Target edge correlation, strictly inside ``(rho_star, rho_top)``.
    tol : float
        Truncation tolerance handed to :func:`wave_params`.
    triangle_safe : bool
        Clamp ``rho`` into ``[-1/3, 1/3]`` so triples also satisfy the
        triangle inequalities.
    L : int, optional
        Explicit truncation radius; overrides the one derived from ``tol``.
    """
    _check_pair(instance, source)
    c, d = source.biregular
    p = TreeParams(c, d)
    wp = wave_params(effective_rho(rho, triangle_safe), p, tol, L)
    good = classify_good_vertices(instance, source, wp.L)
    N = instance.vertex_count
    rows, cols, vals = [], [], []
    for v in range(N):
        if not good[v]:
            rows.append(np.array([v]))
            cols.append(np.array([N + v]))
            vals.append(np.array([1.0]))
            continue
        verts, dist, signs, _ = _tree_ball(source, v, 2 * wp.L)
        keep = dist % 2 == 0  # variables sit at even bipartite depth
        h = dist[keep] // 2
        wts = wp.gamma * signs[keep] * np.power(wp.r, h)
        nz = wts != 0
        rows.append(np.full(int(nz.sum()), v))
        cols.append(verts[keep][nz] - source.bipartition[0])
        vals.append(wts[nz])
    C = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, 2 * N))
    norms = np.sqrt(np.asarray(C.multiply(C).sum(axis=1)).reshape(-1))
    C = sp.diags(1 / norms) @ C
    C = C.tocsr()
    gram = None
    if N <= dense_cap:
        gram = (C @ C.T).toarray()
        np.fill_diagonal(gram, 1.0)
    return GramWitness(C, good, wp, instance, source, gram)


@dataclass
class WitnessReport:
    xor_value: float
    nae_value: float | None
    min_gram_eigenvalue: float | None = None
    worst_triangle_slack: float | None = None
    max_offdiag_abs: float | None = None
    good_fraction: float = 0.0
    max_diag_error: float | None = None
    rho: float | None = None
    achieved_rho: float | None = None
    L: int | None = None
    psd_mode: str | None = None  # "full" | "blocks"
    triples_checked: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def witness_objective(w: GramWitness) -> WitnessReport:
    """SDP value of the witness on the 2XOR instance and its NAE rescaling."""
    I = w.instance
    g = w.entries(I.edges[:, 0], I.edges[:, 1])
    xor = float(np.mean(0.5 - 0.5 * I.signs * g)) if I.edge_count else 0.0
    nae = 1.5 * xor if w.source.biregular[0] == 3 else None
    return WitnessReport(xor, nae, good_fraction=float(np.mean(w.good)) if len(w.good) else 0.0,
                         rho=w.params.rho, achieved_rho=w.params.achieved_rho, L=w.params.L)


def _triangle_slack(x, y, z) -> np.ndarray:
    return np.minimum.reduce([x + y + z + 1, x - y - z + 1, -x + y - z + 1, -x - y + z + 1])


def validate_witness(w: GramWitness, random_triples: int = 100_000, seed: int = 0,
                     block_size: int = 1500, blocks: int = 3) -> WitnessReport:
    """Objective plus feasibility diagnostics.

    PSD is checked on the whole Gram matrix when it is dense, otherwise on
    ``blocks`` random principal blocks.  Triangle inequalities are checked
    on every triple inside a constraint and on ``random_triples`` random
    triples.
    """
    rep = witness_objective(w)
    N = w.size
    rng = np.random.default_rng(seed)
    if w.gram is not None:
        rep.max_diag_error = float(np.max(np.abs(np.diag(w.gram) - 1.0), initial=0.0))
        rep.min_gram_eigenvalue = float(symmetric_spectrum(w.gram, "full").eigenvalues[0]) if N else None
        rep.psd_mode = "full"
        off = w.gram - np.diag(np.diag(w.gram))
        rep.max_offdiag_abs = float(np.max(np.abs(off), initial=0.0))
    else:
        rep.max_diag_error = float(np.max(np.abs(w.entries(np.arange(N), np.arange(N)) - 1.0)))
        mins = []
        for _ in range(blocks):
            idx = np.sort(rng.choice(N, size=min(block_size, N), replace=False))
            mins.append(symmetric_spectrum(w.block(idx), "full").eigenvalues[0])
        rep.min_gram_eigenvalue = float(min(mins))
        rep.psd_mode = "blocks"
    nb, _ = constraint_cliques(w.source)
    c = nb.shape[1]
    trip = np.array(list(itertools.combinations(range(c), 3)), dtype=np.int64).reshape(-1, 3)
    local = nb[:, trip].reshape(-1, 3)
    if N >= 3 and random_triples > 0:
        rnd = np.stack([rng.choice(N, size=3, replace=False) for _ in range(random_triples)]) \
            if N < 64 else _distinct_triples(rng, N, random_triples)
        allt = np.concatenate([local, rnd])
    else:
        allt = local
    x = w.entries(allt[:, 0], allt[:, 1])
    y = w.entries(allt[:, 1], allt[:, 2])
    z = w.entries(allt[:, 2], allt[:, 0])
    rep.worst_triangle_slack = float(np.min(_triangle_slack(x, y, z))) if len(allt) else None
    rep.triples_checked = int(len(allt))
    if w.gram is None:
        I = w.instance
        sampled = np.concatenate([np.abs(x), np.abs(y), np.abs(z),
                                  np.abs(w.entries(I.edges[:, 0], I.edges[:, 1]))])
        rep.max_offdiag_abs = float(np.max(sampled, initial=0.0))
    return rep


def _distinct_triples(rng, N, k) -> np.ndarray:
    t = rng.integers(0, N, size=(2 * k + 16, 3))
    ok = (t[:, 0] != t[:, 1]) & (t[:, 1] != t[:, 2]) & (t[:, 0] != t[:, 2])
    t = t[ok]
    while len(t) < k:
        t = np.concatenate([t, _distinct_triples(rng, N, k - len(t))])
    return t[:k]


def theta_bound(w: GramWitness, atol: float = 1e-9) -> float:
    """Lovasz-theta upper bound ``1 - 1/rho`` certified by an unsigned witness.

    ``rho`` is the edge correlation the witness actually realises
    (``params.achieved_rho``); every edge entry must equal it within
    ``atol``, which only happens when all vertices are tree-like.
    """
    if not w.instance.is_unsigned():
        raise GraphError("theta bound needs an all-(+1) instance")
    rho = w.params.achieved_rho
    if not rho < 0:
        raise ValueError("theta bound needs a negative edge correlation")
    I = w.instance
    g = w.entries(I.edges[:, 0], I.edges[:, 1])
    bad = np.abs(g - rho) > atol
    if np.any(bad):
        raise ValueError(f"{int(bad.sum())} edge entries differ from rho; witness is not tree-like")
    return 1 - 1 / rho
