"""Eigenvalue engines and the Ihara-Bass bridge for biregular graphs.

The non-backtracking spectrum of a (c,d)-biregular graph is read off the
singular values of its biadjacency matrix together with four roots of a
quartic per singular value; a dense nonsymmetric solve is only used as an
independent cross-check on small graphs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import linear_sum_assignment

from naelab.graph import (DENSE_CAP, GraphError, SignedMultigraph, deformed_laplacian,
                          non_backtracking_matrix)
from naelab.tree import TreeParams

NB_DENSE_CAP = 600


class EigenConvergenceError(RuntimeError):
    """Iterative eigensolver stopped early; ``best`` holds its last estimate."""

    def __init__(self, msg, best):
        super().__init__(msg)
        self.best = best


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    method: str  # "dense" | "iterative" | "ihara_bass"
    residual: float = 0.0
    dimension: int = 0
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def to_json(self) -> dict:
        ev = np.asarray(self.eigenvalues)
        if np.iscomplexobj(ev):
            vals = {"real": ev.real.tolist(), "imag": ev.imag.tolist()}
        else:
            vals = ev.tolist()
        return {"eigenvalues": vals, "method": self.method, "residual": self.residual,
                "dimension": self.dimension}


def _as_operator(m):
    return m.tocsr() if sp.issparse(m) else np.asarray(m, dtype=np.float64)


def _check_symmetric(m):
    diff = abs(m - m.T).max() if sp.issparse(m) else np.max(np.abs(m - m.T), initial=0.0)
    if diff > 1e-12:
        raise ValueError("matrix is not symmetric")


def symmetric_spectrum(m, mode: str = "full", k: int = 1, which: str = "LA",
                       tol: float = 1e-10, maxiter: int | None = None,
                       return_vectors: bool = False) -> SpectrumReport:
    """Eigenvalues of a real symmetric matrix.

    ``mode="full"`` runs a dense solve (dimension capped) and checks every
    residual; ``mode="extreme"`` returns the ``k`` eigenvalues selected by
    ``which`` ("LA" largest, "SA" smallest) from implicitly restarted Lanczos.
    """
    m = _as_operator(m)
    _check_symmetric(m)
    n = m.shape[0]
    if mode == "full" or (mode == "extreme" and n <= max(64, 4 * k)):
        if n > DENSE_CAP * 2:
            raise GraphError("dense eigensolve above the dimension cap")
        dense = m.toarray() if sp.issparse(m) else m
        w, v = np.linalg.eigh(dense)
        norm = max(float(np.max(np.abs(w), initial=0.0)), 1.0)  # spectral norm of a symmetric matrix
        res = float(np.max(np.linalg.norm(dense @ v - v * w, axis=0), initial=0.0)) / norm
        if res > 1e-8:
            raise EigenConvergenceError("dense eigensolve residual too large", w)
        if mode == "extreme":
            sel = slice(n - k, n) if which == "LA" else slice(0, k)
            w, v = w[sel], v[:, sel]
        return SpectrumReport(w, "dense", res, n, v if return_vectors else None)
    if mode != "extreme":
        raise ValueError(f"unknown mode {mode!r}")
    # fixed start vector: ARPACK's default is random, which breaks reproducibility
    v0 = np.random.default_rng(n).standard_normal(n)
    try:
        w, v = spla.eigsh(m, k=k, which=which, tol=tol, maxiter=maxiter, v0=v0,
                          ncv=min(n - 1, max(2 * k + 1, 40)))
    except spla.ArpackNoConvergence as exc:
        raise EigenConvergenceError("Lanczos did not converge", exc.eigenvalues) from exc
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    res = float(np.max(np.linalg.norm(m @ v - v * w, axis=0)))
    return SpectrumReport(w, "iterative", res, n, v if return_vectors else None)


def _biadjacency(x: SignedMultigraph) -> np.ndarray:
    if x.bipartition is None:
        raise GraphError("graph is not bipartite")
    left, right = x.bipartition
    M = np.zeros((left, right))
    np.add.at(M, (x.edges[:, 0], x.edges[:, 1] - left), x.signs)
    return M


def positive_spectrum(x: SignedMultigraph, method: str = "auto") -> np.ndarray:
    """``PS(A)``: the ``n`` singular values of the ``m x n`` biadjacency
    matrix (``m >= n``), ascending.  May contain zeros.

    ``method="svd"`` takes singular values directly; ``"gram"`` takes square
    roots of the eigenvalues of ``M^T M``, which is several times faster on
    large lifts but only accurate to about ``sqrt(machine eps)`` near zero.
    ``"auto"`` switches to ``"gram"`` above 500 variables.
    """
    if x.bipartition is None:
        raise GraphError("graph is not bipartite")
    left, right = x.bipartition
    if left < right:
        raise GraphError("expected the constraint side to be the larger part")
    if right == 0:
        return np.zeros(0)
    if method == "auto":
        method = "svd" if right <= 500 else "gram"
    M = _biadjacency(x)
    if method == "svd":
        return np.sort(sla.svdvals(M))
    if method != "gram":
        raise ValueError(f"unknown method {method!r}")
    ev = sla.eigvalsh(M.T @ M)
    return np.sort(np.sqrt(np.clip(ev, 0.0, None)))


@dataclass(frozen=True)
class QuarticRoots:
    lam: float
    roots: np.ndarray  # 4 complex


def quartic_roots(lam: float, c: int, d: int) -> QuarticRoots:
    """Roots of ``u^4 + (s_c^2 + s_d^2 - lam^2) u^2 + rho_1^2`` from the
    factorisation ``u^2 = (sqrt(alpha) +- sqrt(beta))^2 / 2``."""
    p = TreeParams(c, d)
    alpha = complex((lam * lam - p.lam_low ** 2) / 2)
    beta = complex((lam * lam - p.lam_high ** 2) / 2)
    sa, sb = np.sqrt(alpha), np.sqrt(beta)
    U = np.array([(sa + sb) ** 2 / 2, (sa - sb) ** 2 / 2])
    u = np.sqrt(U)
    return QuarticRoots(float(lam), np.concatenate([u, -u]))


def _sides(x: SignedMultigraph):
    if x.biregular is None:
        raise GraphError("Ihara-Bass spectrum needs a biregular graph")
    c, d = x.biregular
    m, n = x.bipartition
    e = x.edge_count
    if e <= m + n:
        raise GraphError("need more edges than vertices")
    return c, d, m, n, e


def b_spectrum_via_ihara_bass(x: SignedMultigraph, ps=None) -> SpectrumReport:
    """All ``2e`` non-backtracking eigenvalues of a biregular graph.

    ``ps`` may carry a precomputed :func:`positive_spectrum`.
    """
    c, d, m, n, e = _sides(x)
    if m < n:
        raise GraphError("expected the c-regular side to be the larger part")
    sc = np.sqrt(c - 1)
    parts = [np.ones(e - (m + n)), -np.ones(e - (m + n)),
             np.full(m - n, 1j * sc), np.full(m - n, -1j * sc)]
    ps = positive_spectrum(x) if ps is None else np.asarray(ps, dtype=float)
    if len(ps) != n:
        raise ValueError("ps must hold one value per variable")
    for lam in ps:
        parts.append(quartic_roots(lam, c, d).roots)
    ev = np.concatenate([np.asarray(p, dtype=complex) for p in parts])
    return SpectrumReport(ev, "ihara_bass", 0.0, 2 * e)


def b_spectrum_dense(g: SignedMultigraph) -> SpectrumReport:
    """Direct nonsymmetric eigensolve of the non-backtracking matrix."""
    if 2 * g.edge_count > NB_DENSE_CAP:
        raise GraphError(f"dense non-backtracking solve capped at dimension {NB_DENSE_CAP}")
    B, _ = non_backtracking_matrix(g, sparse=False)
    return SpectrumReport(np.linalg.eigvals(B), "dense", 0.0, len(B))


def multiset_distance(a, b) -> float:
    """Max entry error under the best one-to-one matching of two multisets."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("multisets differ in size")
    if len(a) == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def _slogdet(M):
    if sp.issparse(M):
        lu = spla.splu(M.tocsc())
        diag = np.concatenate([lu.U.diagonal()])
        sign = np.prod(np.sign(diag)) * _perm_sign(lu.perm_r) * _perm_sign(lu.perm_c)
        return float(sign), float(np.sum(np.log(np.abs(diag))))
    return np.linalg.slogdet(M)


def _perm_sign(p) -> int:
    p = np.asarray(p).copy()
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def ihara_bass_residual(g: SignedMultigraph, u: float, dense_cap: int = 1200) -> float:
    """Relative gap between ``det(I - uB)`` and
    ``det(L(u)) (1 - u^2)^(E - V)``, each from its own LU factorisation."""
    if abs(abs(u) - 1.0) < 1e-15:
        raise ValueError("u = +-1 is excluded")
    if abs(u) > 2:
        raise ValueError("|u| must be at most 2")
    B, _ = non_backtracking_matrix(g, sparse=True)
    n_arcs = B.shape[0]
    lhs_m = sp.identity(n_arcs, format="csc") - u * B
    big = n_arcs > dense_cap
    s1, l1 = _slogdet(lhs_m if big else lhs_m.toarray())
    Lu = deformed_laplacian(g, u, sparse=True)
    s2, l2 = _slogdet(Lu if big else Lu.toarray())
    k = g.edge_count - g.vertex_count
    base = 1 - u * u
    s2 *= np.sign(base) ** k
    l2 += k * np.log(abs(base))
    scale = max(l2, 0.0)
    return float(abs(s1 * np.exp(l1 - scale) - s2 * np.exp(l2 - scale)))


@dataclass(frozen=True)
class BulkCheck:
    ok: bool
    worst: float | None  # eigenvalue furthest outside the interval
    excess: float  # its distance outside (0 when inside)


def bulk_check(ps, c: int, d: int, eps: float) -> BulkCheck:
    """Is every element of ``ps`` inside ``[lam_low - eps, lam_high + eps]``?"""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    p = TreeParams(c, d)
    ps = np.asarray(ps, dtype=float)
    if len(ps) == 0:
        return BulkCheck(True, None, 0.0)
    out = np.maximum(p.lam_low - eps - ps, ps - p.lam_high - eps)
    i = int(np.argmax(out))
    return BulkCheck(bool(out[i] <= 0), float(ps[i]), float(max(out[i], 0.0)))
