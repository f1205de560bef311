import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fjlowrank.errors import ParseError, ValidationError
from fjlowrank.fj import (
    check_opinions,
    equilibrium_exact,
    fj_step,
    format_opinions,
    indices,
    iterate,
    load_opinions,
    mean_center_rescale,
    read_opinions,
    write_opinions,
)
from fjlowrank.graph import from_edges, load_edge_list

from helpers import random_connected_graph, random_opinions

PATH2 = load_edge_list("0 1")
PATH3 = load_edge_list("0 1\n1 2")


def dense_equilibrium(g, s):
    return np.linalg.solve(np.eye(g.n) + g.dense_laplacian(), s)


def test_step_path2():
    assert fj_step(PATH2, [1.0, -1.0], [1.0, -1.0]).tolist() == [0.0, 0.0]


def test_step_zero():
    assert not np.any(fj_step(PATH3, np.zeros(3), np.zeros(3)))


def test_step_length_mismatch():
    with pytest.raises(ValidationError):
        fj_step(PATH3, np.zeros(2), np.zeros(3))


def test_iterates_to_path3_equilibrium():
    z = iterate(PATH3, [1.0, 0.0, -1.0], 10_000)
    ref = dense_equilibrium(PATH3, np.array([1.0, 0.0, -1.0]))
    assert np.allclose(ref, [0.5, 0.0, -0.5], atol=1e-15)
    assert np.abs(z - ref).max() <= 1e-6


@pytest.mark.parametrize("dense", [False, True])
def test_equilibrium_small_cases(dense):
    assert np.abs(equilibrium_exact(PATH2, [1.0, -1.0], dense=dense) - [1 / 3, -1 / 3]).max() <= 1e-12
    assert np.abs(equilibrium_exact(PATH3, [1.0, 0.0, -1.0], dense=dense) - [0.5, 0, -0.5]).max() <= 1e-12
    assert not np.any(equilibrium_exact(PATH3, np.zeros(3), dense=dense))


def test_equilibrium_rejects_disconnected():
    with pytest.raises(ValidationError):
        equilibrium_exact(from_edges(4, [0, 2], [1, 3]), np.zeros(4))


def test_indices_path2():
    s = np.array([1.0, -1.0])
    r = indices(PATH2, s, equilibrium_exact(PATH2, s))
    assert r.P == pytest.approx(2 / 9, abs=1e-14)
    assert r.D == pytest.approx(4 / 9, abs=1e-14)
    assert r.I == pytest.approx(2 / 3, abs=1e-14)


def test_indices_path3_and_zero():
    s = np.array([1.0, 0.0, -1.0])
    assert indices(PATH3, s, equilibrium_exact(PATH3, s)).I == pytest.approx(1.0, abs=1e-12)
    r = indices(PATH3, np.zeros(3), np.zeros(3))
    assert (r.P, r.D, r.I) == (0.0, 0.0, 0.0)


def test_indices_detects_non_equilibrium():
    with pytest.raises(ValidationError, match="not the equilibrium"):
        indices(PATH2, [1.0, -1.0], [1.0, -1.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 200), st.integers(0, 2**32 - 1))
def test_equilibrium_properties(n, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    s = random_opinions(rng, n)
    z = equilibrium_exact(g, s)
    assert np.abs(z - dense_equilibrium(g, s)).max() <= 1e-10
    # fixed point of the update rule
    assert np.abs(fj_step(g, s, z) - z).max() <= 1e-9
    # contraction: the inverse has spectral norm at most one
    assert np.linalg.norm(z) <= np.linalg.norm(s) + 1e-12
    r = indices(g, s, z)
    assert abs(r.I - s @ z) <= 1e-8 * abs(r.I)


def test_mean_center_rescale_examples():
    assert mean_center_rescale([0.0, 2.0]).tolist() == [-1.0, 1.0]
    assert np.allclose(mean_center_rescale([1.0, 1.0, 4.0]), [-0.5, -0.5, 1.0], atol=1e-15)
    with pytest.raises(ValidationError):
        mean_center_rescale([3.0, 3.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=100).filter(lambda x: np.ptp(x) > 1e-3))
def test_mean_center_rescale_postconditions(raw):
    s = mean_center_rescale(raw)
    assert np.abs(s).max() == 1.0
    assert abs(s.sum()) <= 1e-9 * len(s)
    check_opinions(s, centered=True)
    assert np.allclose(mean_center_rescale(s), s, atol=1e-12)


def test_opinion_io(tmp_path, rng):
    s = random_opinions(rng, 25)
    assert np.array_equal(load_opinions(format_opinions(s)), s)
    write_opinions(s, tmp_path / "s.txt")
    assert np.array_equal(read_opinions(tmp_path / "s.txt", n=25), s)
    with pytest.raises(ValidationError):
        read_opinions(tmp_path / "s.txt", n=24)
    with pytest.raises(ParseError) as exc:
        load_opinions("0.5\n# note\nfoo\n")
    assert exc.value.line == 3
    with pytest.raises(ValidationError):
        load_opinions("0.5\n1.5\n")
