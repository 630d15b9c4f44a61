import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_force_cycles
from naelab.graph import GraphError, SignedMultigraph, complete_bipartite, cycle_graph, matrices
from naelab.lifts import (LiftSpec, ResourceError, bad_vertices, ball_cyclomatic, cycle_counts,
                          high_girth_instance, is_tangle_free, nb_walk_counts, random_instance, random_lift,
                          random_signing)

K43 = complete_bipartite(3, 4)


def test_order_one_lift_is_base():
    g, spec = random_lift(K43, 1, seed=0)
    assert np.array_equal(g.edges, K43.edges)
    assert g.biregular == (3, 4)


def test_lift_sizes():
    g, spec = random_lift(K43, 50, seed=1)
    assert g.vertex_count == 350 and g.edge_count == 600
    assert g.bipartition == (200, 150) and g.biregular == (3, 4)
    assert spec.permutations.shape == (12, 50)


def test_lift_is_deterministic():
    a, sa = random_instance(3, 4, 40, seed=77)
    b, sb = random_instance(3, 4, 40, seed=77)
    c, _ = random_instance(3, 4, 40, seed=78)
    assert sa == sb
    assert np.array_equal(a.edges, b.edges) and np.array_equal(a.signs, b.signs)
    assert not np.array_equal(a.signs, c.signs)


def test_rejects_order_zero():
    with pytest.raises(GraphError):
        random_lift(K43, 0, seed=0)


def test_spec_validation():
    _, spec = random_instance(3, 4, 5, seed=0)
    with pytest.raises(GraphError):
        LiftSpec(K43, 5, spec.permutations[:-1], spec.signs, 0)
    bad = spec.permutations.copy()
    bad[0, 0] = bad[0, 1]
    with pytest.raises(GraphError):
        LiftSpec(K43, 5, bad, spec.signs, 0)
    with pytest.raises(GraphError):
        LiftSpec(K43, 5, spec.permutations, spec.signs[:-1], 0)
    assert LiftSpec(K43, 5, spec.permutations, spec.signs, 0).build().edge_count == 60


def test_signs_are_balanced():
    g = random_signing(random_lift(K43, 10_000, seed=3)[0], seed=3)
    assert abs(g.signs.mean()) < 0.02
    assert set(np.unique(g.signs)) == {-1, 1}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_lift_projects_onto_base(seed, n):
    g, _ = random_lift(K43, n, seed)
    proj = np.sort(g.edges // n, axis=1)
    base = np.sort(K43.edges, axis=1)
    assert sorted(map(tuple, proj.tolist())) == sorted(map(tuple, np.repeat(base, n, axis=0).tolist()))


def test_base_spectrum_contained_in_lift():
    g, _ = random_lift(K43, 3, seed=4)
    lift = np.linalg.eigvalsh(matrices(g)[0])
    for lam in np.linalg.eigvalsh(matrices(K43)[0]):
        assert np.min(np.abs(lift - lam)) < 1e-9


def test_walk_counts_k43():
    w = nb_walk_counts(K43, 6)
    assert [int(w[k]) for k in range(2, 7)] == [0, 0, 144, 0, 288]
    assert all(isinstance(x, int) for x in w)


@pytest.mark.parametrize("g,expect", [
    (SignedMultigraph(4, [(0, 1), (1, 2), (2, 3)]), [0] * 7),
    (cycle_graph(3), [0, 0, 0, 1, 0, 0, 0]),
    (SignedMultigraph(2, [(0, 1), (0, 1)]), [0, 0, 1, 0, 0, 0, 0]),
])
def test_cycle_counts_small(g, expect):
    assert cycle_counts(g, 6).counts.tolist() == expect


def test_cycle_counts_match_enumeration_on_lift():
    g, _ = random_lift(K43, 6, seed=11)
    assert np.array_equal(cycle_counts(g, 6).counts, brute_force_cycles(g, 6))


def test_poisson_means_attached():
    st_ = cycle_counts(K43, 4, base=K43)
    assert st_.poisson_means[4] == pytest.approx(18.0)


def test_cycle_caps():
    with pytest.raises(ResourceError):
        cycle_counts(K43, 9)
    with pytest.raises(ValueError):
        cycle_counts(K43, 1)
    with pytest.raises(ResourceError):
        cycle_counts(random_lift(K43, 50, 0)[0], 8, step_cap=10)


def test_bad_vertices_tree_and_triangle():
    tree = SignedMultigraph(5, [(0, 1), (1, 2), (1, 3), (3, 4)])
    assert bad_vertices(tree, 3).size == 0
    g = SignedMultigraph(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5)])
    assert bad_vertices(g, 1).tolist() == [0, 1, 2]
    assert bad_vertices(g, 2).tolist() == [0, 1, 2, 3]
    assert bad_vertices(g, 0).size == 0


def test_tangle_free():
    assert is_tangle_free(SignedMultigraph(3, [(0, 1), (1, 2)]), 5)
    assert is_tangle_free(cycle_graph(7), 10)
    bowtie = SignedMultigraph(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)])
    assert not is_tangle_free(bowtie, 1)
    assert ball_cyclomatic(bowtie, 1, 5)[0] == 2
    with pytest.raises(ValueError):
        is_tangle_free(bowtie, -1)


def test_high_girth_instance():
    g, spec = high_girth_instance(3, 4, 300, 10, seed=2)
    assert g.biregular == (3, 4)
    assert np.all(cycle_counts(g, 8).counts == 0)
    assert bad_vertices(g, 4).size == 0
    assert np.array_equal(spec.build().edges, g.edges)


def test_lift_cycle_means_small_scale():
    # Z_4 averaged over lifts approaches w_4 / 8 = 18
    z = [cycle_counts(random_lift(K43, 200, seed=s)[0], 4).counts[4] for s in range(60)]
    se = np.std(z, ddof=1) / np.sqrt(len(z))
    assert abs(np.mean(z) - 18) <= 5 * se
