from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fjlowrank.errors import ParseError, ValidationError
from fjlowrank.graph import (
    format_edge_list,
    from_edges,
    largest_connected_component,
    laplacian_matvec,
    laplacian_quadratic,
    load_edge_list,
    read_edge_list,
    write_edge_list,
)

from helpers import random_connected_graph


def bfs_components(g):
    """Components as sorted vertex lists, discovered from vertex 0 upward."""
    seen = [False] * g.n
    comps = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        queue, comp = deque([start]), []
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in g.neighbors(u)[0].tolist():
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        comps.append(sorted(comp))
    return comps


def test_path_graph():
    g = load_edge_list("0 1\n1 2")
    assert (g.n, g.m, g.W) == (3, 2, 2.0)
    assert g.is_connected


def test_symmetric_duplicates_merge_by_sum():
    g = load_edge_list("0 1 0.5\n1 0 0.5")
    assert g.m == 1 and g.W == 1.0
    assert g.neighbors(0)[1].tolist() == [1.0]
    assert g.neighbors(1)[1].tolist() == [1.0]


def test_self_loop_dropped_and_counted(caplog):
    g = load_edge_list("0 0 1.0")
    assert g.m == 0 and g.dropped_self_loops == 1
    assert "self-loop" in caplog.text


def test_comments_and_blank_lines():
    g = load_edge_list("# header\n\n0 1 2.5  # trailing\n")
    assert g.W == 2.5


@pytest.mark.parametrize("text,line", [("0 1\n0 x\n", 2), ("0 1 2 3\n", 1), ("1\n", 1), ("0 1 abc", 1)])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as exc:
        load_edge_list(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


@pytest.mark.parametrize("w", ["0", "-1.5", "nan"])
def test_nonpositive_weight_rejected(w):
    with pytest.raises(ValidationError):
        load_edge_list(f"0 1 {w}")


def test_explicit_n_checks_ids():
    assert load_edge_list("0 1", n=5).n == 5
    with pytest.raises(ValidationError):
        load_edge_list("0 7", n=5)


def test_symmetry_invariant(rng):
    g = random_connected_graph(rng, 40)
    A = g.adjacency.toarray()
    assert np.array_equal(A, A.T)
    assert np.all(np.diag(A) == 0)
    assert np.all(g.weights > 0)
    for i in range(g.n):
        nb = g.neighbors(i)[0]
        assert np.all(np.diff(nb) > 0)


def test_connectivity_flag_matches_bfs(rng):
    for _ in range(10):
        n = int(rng.integers(2, 30))
        m = int(rng.integers(0, 2 * n))
        u, v = rng.integers(0, n, m), rng.integers(0, n, m)
        g = from_edges(n, u, v)
        assert g.is_connected == (len(bfs_components(g)) == 1)
        assert g.n_components == len(bfs_components(g))


def test_lcc_connected_path_is_identity():
    g = load_edge_list("0 1\n1 2")
    sub, mapping = largest_connected_component(g)
    assert mapping.tolist() == [0, 1, 2]
    assert format_edge_list(sub) == format_edge_list(g)


def test_lcc_picks_larger_component():
    g = load_edge_list("0 1\n2 3\n3 4")
    sub, mapping = largest_connected_component(g)
    assert sub.n == 3 and sub.m == 2
    assert mapping.tolist() == [-1, -1, 0, 1, 2]


def test_lcc_tie_break_against_bfs_oracle(rng):
    for _ in range(30):
        n = int(rng.integers(4, 25))
        m = int(rng.integers(0, n))
        u, v = rng.integers(0, n, m), rng.integers(0, n, m)
        g = from_edges(n, u, v)
        comps = bfs_components(g)
        size = max(len(c) for c in comps)
        expected = min((c for c in comps if len(c) == size), key=lambda c: c[0])
        sub, mapping = largest_connected_component(g)
        assert np.flatnonzero(mapping >= 0).tolist() == expected
        assert sub.n == size and sub.is_connected


def test_lcc_tie_smallest_vertex():
    g = load_edge_list("3 4\n0 5\n1 2", n=6)
    _, mapping = largest_connected_component(g)
    assert np.flatnonzero(mapping >= 0).tolist() == [0, 5]


def test_lcc_empty_graph():
    with pytest.raises(ValidationError):
        largest_connected_component(from_edges(0, [], []))


def test_laplacian_path2():
    g = load_edge_list("0 1")
    assert laplacian_matvec(g, [1.0, -1.0]).tolist() == [2.0, -2.0]


def test_laplacian_length_mismatch():
    with pytest.raises(ValidationError):
        laplacian_matvec(load_edge_list("0 1"), [1.0, 2.0, 3.0])


def test_laplacian_matches_dense(rng):
    for n in (2, 7, 50):
        g = random_connected_graph(rng, n)
        v = rng.normal(size=n)
        assert np.allclose(laplacian_matvec(g, v), g.dense_laplacian() @ v, atol=1e-10, rtol=0)
        V = rng.normal(size=(n, 3))
        assert np.allclose(laplacian_matvec(g, V), g.dense_laplacian() @ V, atol=1e-10, rtol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**32 - 1))
def test_ones_in_null_space(n, seed):
    g = random_connected_graph(np.random.default_rng(seed), n, wlo=1e-3, whi=1e3)
    r = laplacian_matvec(g, np.ones(n))
    assert np.abs(r).max() <= 1e-12 * (1 + g.max_degree)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 200), st.integers(0, 2**32 - 1))
def test_quadratic_form_edgewise(n, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    v = rng.normal(size=n)
    dense = float(v @ g.dense_laplacian() @ v)
    assert abs(laplacian_quadratic(g, v) - dense) <= 1e-10 * abs(dense)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 80), st.integers(0, 2**32 - 1))
def test_round_trip_bit_exact(n, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n, wlo=1e-7, whi=1e7)
    h = load_edge_list(format_edge_list(g))
    assert np.array_equal(g.indptr, h.indptr)
    assert np.array_equal(g.indices, h.indices)
    assert np.array_equal(g.weights, h.weights)


def test_file_round_trip(tmp_path, rng):
    g = random_connected_graph(rng, 30)
    write_edge_list(g, tmp_path / "g.txt")
    h = read_edge_list(tmp_path / "g.txt")
    assert np.array_equal(g.weights, h.weights) and g.W == h.W


def test_graph_is_read_only(rng):
    g = random_connected_graph(rng, 5)
    with pytest.raises(ValueError):
        g.weights[0] = 3.0
