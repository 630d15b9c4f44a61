"""Spectral refutation certificates and the threshold curve.

For a 2XOR instance ``I`` on ``n`` variables with ``m`` signed edges the
eigenvalue certificate is ``(n / 4m) * lambda_max(L_I)``; it upper-bounds
the best satisfiable fraction.  For NAE-3SAT each constraint contributes
three XOR edges, so the NAE scale is ``3/2`` times the XOR one.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from naelab.graph import GraphError, SignedMultigraph, matrices
from naelab.spectral import EigenConvergenceError, symmetric_spectrum
from naelab.tree import TreeParams

THRESHOLD_D = 13.5
UNSAT_D = math.log(8) / math.log(4 / 3)  # first-moment bound, about 7.228
NAE_SCALE = 1.5
OPT_VARIABLE_CAP = 24


def f_threshold(d: float) -> float:
    """``9/8 - (3/8) (sqrt(d - 1) - sqrt(2))^2 / d``."""
    if d < 3:
        raise ValueError("f is defined for d >= 3")
    return 9 / 8 - 3 / 8 * (math.sqrt(d - 1) - math.sqrt(2)) ** 2 / d


def f_threshold_spectral(d: float, c: int = 3) -> float:
    """The same curve as ``(3/2) (1 + rho_1)^2 / (2 kappa)`` for ``c = 3``;
    ``d`` may be fractional here."""
    if d < 3:
        raise ValueError("f is defined for d >= 3")
    rho1 = math.sqrt((c - 1) * (d - 1))
    kappa = (c - 1) * d
    return NAE_SCALE * (1 + rho1) ** 2 / (2 * kappa)


@dataclass(frozen=True)
class Regime:
    d: float
    sdp: str  # "SDP-satisfiable whp" | "SDP-refutable whp" | "threshold"
    satisfiability: str

    @property
    def label(self) -> str:
        return f"{self.sdp}; {self.satisfiability}"

    @property
    def hardness_window(self) -> bool:
        return self.sdp == "SDP-satisfiable whp" and self.satisfiability == "unsatisfiable whp"


def classify_regime(d: float) -> Regime:
    if d < 3:
        raise ValueError("regimes are defined for d >= 3")
    if d < THRESHOLD_D:
        sdp = "SDP-satisfiable whp"
    elif d > THRESHOLD_D:
        sdp = "SDP-refutable whp"
    else:
        sdp = "threshold"
    if d > UNSAT_D:
        sat = "unsatisfiable whp"
    elif d >= 7:
        sat = "likely unsatisfiable (heuristic, unproven)"
    else:
        sat = "unknown"
    return Regime(d, sdp, sat)


@dataclass(frozen=True)
class ThresholdRow:
    d: float
    f: float
    rho_star: float
    xor_bound: float  # (1 + rho_1)^2 / (2 kappa)
    regime: str


@dataclass(frozen=True)
class ThresholdCurve:
    rows: tuple[ThresholdRow, ...]

    COLUMNS = ("d", "f", "rho_star", "xor_bound", "regime")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.COLUMNS)
        for r in self.rows:
            wr.writerow([repr(float(r.d)), repr(r.f), repr(r.rho_star), repr(r.xor_bound), r.regime])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def threshold_curve(d_values, c: int = 3) -> ThresholdCurve:
    rows = []
    for d in d_values:
        rho1 = math.sqrt((c - 1) * (d - 1))
        kappa = (c - 1) * d
        rows.append(ThresholdRow(float(d), f_threshold(d), 1 - (1 + rho1) ** 2 / kappa,
                                 (1 + rho1) ** 2 / (2 * kappa), classify_regime(d).label))
    return ThresholdCurve(tuple(rows))


@dataclass
class RefutationReport:
    lambda_max: float
    eig_xor: float
    eig_nae: float | None = None
    threshold_f: float | None = None
    refutes_nae: bool | None = None
    correction_value: float | None = None
    correction_vector_checksum: str | None = None
    iterations: int = 0
    converged: bool = True
    max_weight_sum: float = 0.0  # largest |sum(w)| over the iterates
    correction_weights: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("correction_weights")
        return out


def _lambda_max(M) -> tuple[float, np.ndarray | None, bool]:
    try:
        rep = symmetric_spectrum(M, "extreme", k=1, which="LA", tol=1e-12, return_vectors=True)
    except EigenConvergenceError as exc:
        best = np.atleast_1d(exc.best)
        return (float(np.max(best)) if len(best) else float("nan")), None, False
    return float(rep.eigenvalues[-1]), rep.eigenvectors[:, -1], True


def _scale(instance: SignedMultigraph) -> float:
    if instance.edge_count == 0:
        raise GraphError("instance has no constraints")
    return instance.vertex_count / (4 * instance.edge_count)


def _report(instance, lam, c, d, converged) -> RefutationReport:
    eig_xor = _scale(instance) * lam
    rep = RefutationReport(lam, eig_xor, converged=converged)
    if c == 3:
        rep.eig_nae = NAE_SCALE * eig_xor
        rep.refutes_nae = bool(rep.eig_nae < 1)
    if d is not None and d >= 3:
        rep.threshold_f = f_threshold(d)
    return rep


def _infer_cd(instance, c, d):
    deg = instance.degrees
    if c is not None and d is None and len(deg) and np.all(deg == deg[0]) and deg[0] % (c - 1) == 0:
        d = int(deg[0]) // (c - 1)
    return c, d


def eig_bound(instance: SignedMultigraph, normalization: str = "xor", c: int | None = None,
              d: int | None = None) -> RefutationReport:
    """Eigenvalue certificate for a 2XOR (primal) instance.

    ``normalization="nae"`` requires ``c = 3`` and fills ``eig_nae`` and
    ``refutes_nae``.  ``d`` is inferred from a regular primal graph when
    ``c`` is known.  If the eigensolver stops early the report carries the
    best estimate with ``converged=False`` and is not a certificate.
    """
    if normalization not in ("xor", "nae"):
        raise ValueError("normalization must be 'xor' or 'nae'")
    if normalization == "nae" and c != 3:
        raise GraphError("NAE normalization requires c = 3")
    c, d = _infer_cd(instance, c, d)
    _, _, L = matrices(instance, sparse=True)
    lam, _, ok = _lambda_max(L)
    rep = _report(instance, lam, c, d, ok)
    deg = instance.degrees
    if ok and len(deg) and np.all(deg == deg[0]):
        # regular case: n/(4m) = 1/(2 kappa)
        assert abs(rep.eig_xor - lam / (2 * deg[0])) <= 1e-12 * max(1.0, rep.eig_xor)
    return rep


def dual_correction_search(instance: SignedMultigraph, iterations: int = 50, c: int | None = None,
                           d: int | None = None, step0: float | None = None) -> RefutationReport:
    """Tighten the certificate with a zero-sum diagonal ``w``.

    For every +-1 vector ``x`` and every ``w`` with ``sum(w) = 0`` the
    quadratic form of ``L + diag(w)`` equals that of ``L``, so each iterate
    is again a valid bound.  Steps follow the subgradient ``v^2 - mean(v^2)``
    of ``lambda_max`` (``v`` its top eigenvector) with length ``step0 / t``;
    the smallest bound seen is returned.
    """
    if iterations < 0:
        raise ValueError("iterations must be nonnegative")
    c, d = _infer_cd(instance, c, d)
    _, _, L = matrices(instance, sparse=True)
    n = instance.vertex_count
    lam, v, ok = _lambda_max(L)
    rep = _report(instance, lam, c, d, ok)
    w = np.zeros(n)
    best_lam, best_w = lam, w.copy()
    if step0 is None:
        step0 = float(np.mean(instance.degrees)) if n else 1.0
    drift = 0.0
    for t in range(1, iterations + 1):
        if v is None:
            break
        grad = v * v
        grad -= grad.mean()
        gmax = np.max(np.abs(grad))
        if gmax == 0:
            break
        w = w - (step0 / t) * grad / gmax
        w -= w.mean()
        drift = max(drift, abs(float(w.sum())))
        lam_t, v, ok_t = _lambda_max(L + sp.diags(w))
        if not ok_t:
            break
        if lam_t < best_lam:
            best_lam, best_w = lam_t, w.copy()
    rep.correction_value = _scale(instance) * best_lam
    rep.correction_vector_checksum = hashlib.sha256(np.ascontiguousarray(best_w).tobytes()).hexdigest()
    rep.iterations = iterations
    rep.max_weight_sum = drift
    rep.correction_weights = best_w
    return rep


def exhaustive_opt(instance: SignedMultigraph) -> float:
    """Largest satisfiable fraction of XOR edges, by enumeration.

    The objective is invariant under a global flip, so the first variable
    is fixed to +1.
    """
    n = instance.vertex_count
    if n > OPT_VARIABLE_CAP:
        raise GraphError(f"exhaustive search capped at {OPT_VARIABLE_CAP} variables")
    if instance.edge_count == 0:
        raise GraphError("instance has no constraints")
    u, v = instance.edges[:, 0], instance.edges[:, 1]
    target = -instance.signs.astype(np.int8)
    best = 0
    chunk = 1 << 14
    total = 1 << max(n - 1, 0)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> np.arange(max(n - 1, 0))) & 1).astype(np.int8)
        x = np.concatenate([np.ones((len(codes), 1), dtype=np.int8), 1 - 2 * bits], axis=1)[:, :n]
        sat = (x[:, u] * x[:, v] == target).sum(axis=1)
        best = max(best, int(sat.max()))
    return best / instance.edge_count


def rho_star(c: int, d: int) -> float:
    return TreeParams(c, d).rho_star
