"""Shared fixtures and the one-line-per-criterion acceptance summary."""
import itertools

import numpy as np
import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(k: int, ok: bool, detail: str):
    ACCEPTANCE_LINES[k] = f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def brute_force_cycles(g, gmax):
    """Independent cycle counter: enumerate closed trails of distinct
    vertices as edge-id sequences, then divide out rotations and reversal."""
    n = g.vertex_count
    inc = [[] for _ in range(n)]
    for e, (a, b) in enumerate(g.edges.tolist()):
        inc[a].append((b, e))
        inc[b].append((a, e))
    counts = np.zeros(gmax + 1, dtype=np.int64)
    found = set()

    def walk(start, v, verts, eids):
        for w, e in inc[v]:
            if e in eids:
                continue
            if w == start and len(eids) + 1 >= 2:
                cyc = eids + [e]
                key = frozenset(cyc)
                if key not in found and len(cyc) <= gmax:
                    found.add(key)
                    counts[len(cyc)] += 1
            elif w not in verts and len(eids) + 1 < gmax:
                walk(start, w, verts | {w}, eids + [e])

    for s in range(n):
        walk(s, s, {s}, [])
    return counts


def bfs_distances(g, src):
    from collections import deque
    dist = np.full(g.vertex_count, -1)
    dist[src] = 0
    q = deque([src])
    indptr, nbr, _ = g.csr
    while q:
        x = q.popleft()
        for y in nbr[indptr[x]:indptr[x + 1]]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist


@pytest.fixture(scope="session")
def girth10_signed():
    from naelab.lifts import high_girth_instance
    return high_girth_instance(3, 4, 300, 10, seed=5)


@pytest.fixture(scope="session")
def girth10_unsigned():
    from naelab.lifts import high_girth_instance
    return high_girth_instance(3, 4, 300, 10, seed=6, signed=False)


def all_assignments(n):
    return itertools.product((-1, 1), repeat=n)
