"""The twelve acceptance criteria at their stated tolerances and time limits.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest
from scipy.sparse.csgraph import shortest_path

from conftest import record_criterion
from naelab.experiments import ExperimentConfig, run_bordenave_trial, run_cycle_poisson
from naelab.graph import complete_bipartite, matrices, non_backtracking_matrix, primal_graph
from naelab.lifts import random_instance
from naelab.refute import dual_correction_search, eig_bound, exhaustive_opt, f_threshold
from naelab.spectral import ihara_bass_residual, multiset_distance, positive_spectrum, quartic_roots
from naelab.tree import TreeParams, ball_oracle, intersection_number, series_correlation, wave_correlation
from naelab.witness import build_witness, validate_witness


def finish(k, ok, elapsed, limit, detail):
    ok = bool(ok) and elapsed < limit
    record_criterion(k, ok, f"{detail}; {elapsed:.1f}s (limit {limit:g}s)")
    assert ok, detail


def test_criterion_01_threshold_identity():
    t0 = time.perf_counter()
    ds = np.linspace(3, 100, 5000)
    f = np.array([f_threshold(d) for d in ds])
    rho1 = np.sqrt(2 * (ds - 1))
    alt = 0.75 * (1 + rho1) ** 2 / (2 * ds)
    at = abs(f_threshold(13.5) - 1)
    gap = float(np.max(np.abs(f - alt)))
    ok = at <= 1e-12 and np.all(np.diff(f) < 0) and gap <= 1e-12
    finish(1, ok, time.perf_counter() - t0, 1, f"|f(13.5)-1|={at:.1e}, max identity gap {gap:.1e}")


def test_criterion_02_complete_bipartite_spectra():
    t0 = time.perf_counter()
    x = complete_bipartite(3, 4)
    ps = positive_spectrum(x)
    ps_err = float(np.max(np.abs(ps - [0, 0, math.sqrt(12)])))
    sc, sd, r1 = math.sqrt(2), math.sqrt(3), math.sqrt(6)
    # e - m - n = 5 copies of +-1, m - n = 1 copy of +-i s_c, then the roots for PS = {0, 0, sqrt(cd)}
    expect = [1] * 5 + [-1] * 5 + [1j * sc, -1j * sc] + [1, -1, r1, -r1] \
        + [1j * sc, -1j * sc, 1j * sd, -1j * sd] * 2
    B, _ = non_backtracking_matrix(x, sparse=False)
    assert B.shape == (24, 24)
    b_err = multiset_distance(np.linalg.eigvals(B), expect)
    finish(2, ps_err <= 1e-8 and b_err <= 1e-8, time.perf_counter() - t0, 1,
           f"PS error {ps_err:.1e}, B multiset error {b_err:.1e}")


def test_criterion_03_ihara_bass():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    pairs = [(3, 4), (3, 3), (4, 5), (3, 8)]
    for t in range(100):
        c, d = pairs[t % len(pairs)]
        n = int(rng.integers(1, 31))
        while True:
            u = float(rng.uniform(-0.9, 0.9))
            if abs(abs(u) - 1) > 1e-12:
                break
        x = random_instance(c, d, n, seed=int(rng.integers(2**63)))[0]
        worst = max(worst, ihara_bass_residual(x, u))
    finish(3, worst < 1e-8, time.perf_counter() - t0, 30, f"worst relative residual {worst:.1e} over 100 pairs")


def test_criterion_04_primal_laplacian_map():
    t0 = time.perf_counter()
    worst = 0.0
    for s in range(20):
        n = 10 + 2 * s  # up to 48
        x = random_instance(3, 4, n, seed=1000 + s)[0]
        lp = np.linalg.eigvalsh(matrices(primal_graph(x))[2])
        mapped = np.sort(12 - positive_spectrum(x) ** 2)
        worst = max(worst, float(np.max(np.abs(lp - mapped))))
    finish(4, worst <= 1e-6, time.perf_counter() - t0, 60, f"worst multiset gap {worst:.1e} over 20 lifts")


def test_criterion_05_quartic_dichotomy():
    t0 = time.perf_counter()
    bad = []
    for c, d in [(3, 4), (3, 8), (3, 14), (4, 5)]:
        p = TreeParams(c, d)
        for lam in np.linspace(0, math.sqrt(c * d), 500):
            small = np.max(np.abs(quartic_roots(lam, c, d).roots)) <= math.sqrt(p.rho1) + 1e-9
            inside = p.lam_low <= lam <= p.lam_high
            if small != inside:
                bad.append((c, d, lam))
    finish(5, not bad, time.perf_counter() - t0, 5, f"{len(bad)} grid points break the dichotomy")


def test_criterion_06_intersection_numbers():
    t0 = time.perf_counter()
    mismatches = 0
    checked = 0
    for cd in [(3, 4), (3, 8), (4, 5), (3, 14)]:
        p = TreeParams(*cd)
        ball = ball_oracle(p, 4)
        A = matrices(ball.graph, sparse=True)[0]
        dv = ball.distance
        for h in range(5):
            u = int(np.flatnonzero(dv == h)[0])
            du = shortest_path(A, unweighted=True, indices=u)
            for j in range(5):
                for k in range(5):
                    checked += 1
                    mismatches += intersection_number(h, j, k, p) != int(np.sum((dv == j) & (du == k)))
    finish(6, mismatches == 0, time.perf_counter() - t0, 60, f"{mismatches} mismatches in {checked} exact checks")


def test_criterion_07_wave_series():
    t0 = time.perf_counter()
    worst = 0.0
    worst_h1 = 0.0
    for cd in [(3, 4), (3, 8), (4, 5), (3, 14)]:
        p = TreeParams(*cd)
        for r in np.linspace(-1, 1, 12)[1:-1] / p.rho1:
            for h in range(5):
                worst = max(worst, abs(wave_correlation(h, r, p) - series_correlation(h, r, p, 60)))
            worst_h1 = max(worst_h1, abs(wave_correlation(1, r, p) - (1 - (1 - r) ** 2 / (1 + p.s_c ** 2 * r * r))))
    finish(7, worst <= 1e-6 and worst_h1 <= 1e-12, time.perf_counter() - t0, 10,
           f"series gap {worst:.1e}, h=1 gap {worst_h1:.1e}")


@pytest.mark.slow
def test_criterion_08_witness_feasibility():
    t0 = time.perf_counter()
    lines = []
    feasible = True
    hit_rates = []
    for d in (8, 13):
        hits = 0
        for s in range(20):
            x = random_instance(3, d, 2000, seed=8000 + 100 * d + s)[0]
            I = primal_graph(x)
            w = build_witness(I, x, -1 / 3, tol=1e-6, triangle_safe=True)
            rep = validate_witness(w, random_triples=100_000, seed=s)
            feasible &= (rep.max_diag_error == 0 and rep.min_gram_eigenvalue >= -1e-7
                         and rep.worst_triangle_slack >= -1e-9)
            hits += rep.nae_value >= 1 - 0.01
        hit_rates.append(hits / 20)
        lines.append(f"d={d}: L={w.params.L}, good fraction {rep.good_fraction:.2f}, "
                     f"nae {rep.nae_value:.3f}, nae>=0.99 in {hits}/20")
    ok = feasible and all(h >= 0.9 for h in hit_rates)
    finish(8, ok, time.perf_counter() - t0, 600, f"feasible={feasible}; " + "; ".join(lines))


def test_criterion_09_refutation_above_threshold():
    t0 = time.perf_counter()
    rates = {}
    for d in (14, 16):
        hits = 0
        for s in range(20):
            x = random_instance(3, d, 500, seed=9000 + 100 * d + s)[0]
            hits += eig_bound(primal_graph(x), "nae", c=3).eig_nae < 1
        rates[d] = hits / 20
    finish(9, rates[14] >= 0.95 and rates[16] == 1.0, time.perf_counter() - t0, 300,
           f"refuted d=14: {rates[14]:.0%}, d=16: {rates[16]:.0%}")


@pytest.mark.slow
def test_criterion_10_bulk_containment():
    t0 = time.perf_counter()
    signed = run_bordenave_trial(ExperimentConfig(c=3, d=4, n=500, trials=50, seed=10, eps=0.15), signed=True)
    control = run_bordenave_trial(ExperimentConfig(c=3, d=4, n=500, trials=50, seed=11, eps=0.15), signed=False)
    ok = signed.pass_fraction >= 0.95 and control.pass_fraction == 0.0
    finish(10, ok, time.perf_counter() - t0, 600,
           f"signed pass {signed.pass_fraction:.0%}, unsigned control pass {control.pass_fraction:.0%}")


@pytest.mark.slow
def test_criterion_11_cycle_poisson():
    t0 = time.perf_counter()
    r = run_cycle_poisson(ExperimentConfig(c=3, d=4, n=1000, trials=200, seed=11), 4)
    z4 = next(row for row in r["rows"] if row["k"] == 4)
    ok = abs(z4["mean"] - 18) <= 5 * z4["stderr"] and 0.8 <= z4["dispersion"] <= 1.2
    finish(11, ok, time.perf_counter() - t0, 300,
           f"mean Z_4 {z4['mean']:.2f} (stderr {z4['stderr']:.2f}), variance/mean {z4['dispersion']:.3f}")


def test_criterion_12_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(12)
    violations = 0
    shapes = [(3, 4, 2), (3, 4, 4), (3, 4, 6), (3, 3, 5), (3, 3, 6), (4, 3, 4), (3, 5, 3)]
    for t in range(50):
        c, d, n = shapes[t % len(shapes)]
        x = random_instance(c, d, n, seed=int(rng.integers(2**63)))[0]
        I = primal_graph(x)
        assert I.vertex_count <= 18
        rep = dual_correction_search(I, 30)
        violations += not (exhaustive_opt(I) <= rep.correction_value <= rep.eig_xor)
    finish(12, violations == 0, time.perf_counter() - t0, 300, f"{violations} violations in 50 instances")
