"""The infinite (c,d)-biregular tree, its clique graph, and Gaussian waves on it.

Distances are measured in the clique (primal) graph unless stated
otherwise; one primal step is two steps in the bipartite tree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from naelab.graph import SignedMultigraph

BALL_VERTEX_CAP = 10**6


@dataclass(frozen=True)
class TreeParams:
    c: int
    d: int

    def __post_init__(self):
        if self.c < 2 or self.d < 2:
            raise ValueError("c and d must be at least 2")

    @property
    def s_c(self) -> float:
        return math.sqrt(self.c - 1)

    @property
    def s_d(self) -> float:
        return math.sqrt(self.d - 1)

    @property
    def rho1(self) -> float:
        return math.sqrt((self.c - 1) * (self.d - 1))

    @property
    def lam_high(self) -> float:
        return self.s_d + self.s_c

    @property
    def lam_low(self) -> float:
        return abs(self.s_d - self.s_c)

    @property
    def kappa(self) -> int:
        return (self.c - 1) * self.d

    @property
    def rho_star(self) -> float:
        """Most negative achievable edge correlation, ``1 - (1 + rho_1)^2 / kappa``."""
        return 1 - (1 + self.rho1) ** 2 / self.kappa

    @property
    def rho_top(self) -> float:
        return 1 - (1 - self.rho1) ** 2 / self.kappa


def intersection_number(h: int, j: int, k: int, p: TreeParams) -> int:
    """Number of vertices at distance ``j`` from ``u`` and ``k`` from ``v``
    when ``dist(u, v) = h`` in the clique graph of the biregular tree."""
    if min(h, j, k) < 0:
        raise ValueError("distances must be nonnegative")
    rho1_sq = (p.c - 1) * (p.d - 1)
    if h == 0:
        if j != k:
            return 0
        return 1 if j == 0 else p.kappa * rho1_sq ** (j - 1)
    t = abs(j - k)
    ell = min(j, k)
    if t > h:
        return 0
    if (h - t) % 2 == 0:
        base = (h - t) // 2
        if ell < base:
            return 0
        if ell == base:
            return 1
        if t == h:
            return rho1_sq ** ell
        return (p.c - 1) * (p.d - 2) * rho1_sq ** (ell - (h - t + 2) // 2)
    base = (h - t + 1) // 2
    if ell < base:
        return 0
    return (p.c - 2) * rho1_sq ** (ell - base)


@dataclass(frozen=True, eq=False)
class TreeBall:
    graph: SignedMultigraph  # clique graph of the ball, vertex 0 = center
    distance: np.ndarray  # clique-graph distance from the center


def ball_oracle(p: TreeParams, radius: int, cap: int = BALL_VERTEX_CAP) -> TreeBall:
    """Explicit radius-``radius`` ball of the clique graph around a variable.

    Built by growing the bipartite tree from the center (a variable has ``d``
    constraint children at the root and ``d - 1`` elsewhere, a constraint
    has ``c - 1`` variable children) and then replacing each constraint by
    the clique on its ``c`` variables.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    size = 1 + sum(intersection_number(0, l, l, p) for l in range(1, radius + 1))
    if size > cap:
        raise MemoryError(f"ball of radius {radius} has {size} vertices (cap {cap})")
    dist = [0]
    edges = []
    frontier = [0]
    for r in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for _ in range(p.d if r == 1 else p.d - 1):
                clique = [v] + list(range(len(dist), len(dist) + p.c - 1))
                dist.extend([r] * (p.c - 1))
                nxt.extend(clique[1:])
                edges.extend((a, b) for i, a in enumerate(clique) for b in clique[i + 1:])
        frontier = nxt
    g = SignedMultigraph(len(dist), np.array(edges, dtype=np.int64).reshape(-1, 2))
    return TreeBall(g, np.array(dist, dtype=np.int64))


def forward_rho(r: float, p: TreeParams) -> float:
    """Edge correlation of the infinite wave with decay ``r``."""
    return 1 - (1 - r) ** 2 / (1 + (p.c - 1) * r * r)


def rho_to_r(rho: float, p: TreeParams) -> float:
    """Invert :func:`forward_rho` on ``(-1/rho_1, 1/rho_1)`` by bracketing."""
    if not p.rho_star < rho < p.rho_top:
        raise ValueError(f"rho={rho} outside ({p.rho_star}, {p.rho_top})")
    if rho == 0:
        return 0.0
    lim = 1 / p.rho1
    return brentq(lambda r: forward_rho(r, p) - rho, -lim, lim, xtol=1e-15, rtol=1e-15, maxiter=500)


def wave_correlation(h: int, r: float, p: TreeParams) -> float:
    """Closed-form correlation at clique distance ``h``."""
    if h < 0:
        raise ValueError("h must be nonnegative")
    sc2 = p.c - 1
    return r ** h * (1 + h * (1 - r) * (1 + sc2 * r) / (1 + sc2 * r * r))


def series_correlation(h: int, r: float, p: TreeParams, L: int) -> float:
    """Truncated double sum ``gamma^2 sum_{j,k<=L} p^h_{jk} r^(j+k)`` with the
    untruncated normalisation ``gamma^2 = (1 - (rho_1 r)^2) / (1 + (s_c r)^2)``."""
    gamma2 = (1 - (p.rho1 * r) ** 2) / (1 + (p.c - 1) * r * r)
    total = 0.0
    for j in range(L + 1):
        lo, hi = max(0, j - h), min(L, j + h)
        for k in range(lo, hi + 1):
            pk = intersection_number(h, j, k, p)
            if pk:
                total += pk * r ** (j + k)
    return gamma2 * total


@dataclass(frozen=True)
class WaveParams:
    rho: float
    r: float
    gamma: float
    L: int
    tol: float
    achieved_rho: float  # edge correlation of the truncated, renormalised wave


def _truncated_sums(r: float, p: TreeParams, L: int) -> tuple[float, float]:
    """Truncated variance and edge covariance (before normalisation).

    Uses ``p^0_{ll} = kappa q^(l-1)``, ``p^1_{ll} = (c-2) q^(l-1)`` and
    ``p^1_{l,l+1} = q^l`` with ``q = rho_1^2``, folded into powers of
    ``(rho_1 r)^2`` so large ``L`` stays in floating range.
    """
    q2 = (p.rho1 * r) ** 2
    geo = np.cumsum(q2 ** np.arange(L + 1)) if L > 0 else np.array([1.0])
    s_lm1 = geo[L - 1] if L >= 1 else 0.0  # sum_{l=0}^{L-1} q2^l
    var = 1 + p.kappa * r * r * s_lm1
    edge = 2 * r * s_lm1 + (p.c - 2) * r * r * s_lm1
    return float(var), float(edge)


def truncation_radius(r: float, p: TreeParams, tol: float) -> int:
    """Smallest ``L`` with ``(rho_1 |r|)^L kappa / (1 - (rho_1 r)^2) <= tol``."""
    if r == 0:
        return 0
    q = p.rho1 * abs(r)
    if q >= 1:
        raise ValueError("|r| must be below 1/rho_1")
    pre = p.kappa / (1 - q * q)
    if pre <= tol:
        return 0
    return max(0, math.ceil(math.log(tol / pre) / math.log(q) - 1e-12))


def wave_params(rho: float, p: TreeParams, tol: float, L: int | None = None) -> WaveParams:
    """Decay, truncation radius and normalisation for a target edge
    correlation.  ``gamma`` makes the truncated variance exactly one.

    An explicit ``L`` overrides the radius derived from ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r = rho_to_r(rho, p)
    if L is None:
        L = truncation_radius(r, p, tol)
    elif L < 0:
        raise ValueError("L must be nonnegative")
    var, edge = _truncated_sums(r, p, L)
    return WaveParams(rho, r, 1 / math.sqrt(var), L, tol, edge / var)
