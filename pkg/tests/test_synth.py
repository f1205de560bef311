import numpy as np
import pytest

from fjlowrank.errors import ValidationError
from fjlowrank.synth import (
    OPINION_DISTS,
    SynthConfig,
    chunk_interval,
    gen_graph,
    gen_opinions,
    gen_X,
    gen_Y,
    make_instance,
    opinion_chunks,
    stream,
    truncated_exponential,
)


@pytest.mark.parametrize("dist", OPINION_DISTS)
def test_opinions_centered_and_deterministic(dist):
    cfg = SynthConfig(seed=7, opinion_dist=dist)
    s = gen_opinions(500, cfg)
    assert np.array_equal(s, gen_opinions(500, cfg))
    assert abs(s.sum()) <= 1e-9 * 500
    assert np.abs(s).max() == 1.0
    assert not np.array_equal(s, gen_opinions(500, SynthConfig(seed=8, opinion_dist=dist)))


def test_polarized_is_bimodal():
    s = gen_opinions(10_000, SynthConfig(seed=1, opinion_dist="polarized"))
    tails = np.sum((s <= -0.5) | (s >= 0.5))
    middle = np.sum(np.abs(s) < 0.25)
    assert tails > middle


def test_truncated_exponential_moments():
    x = truncated_exponential(stream(3, 9), 200_000, 1.0)
    assert x.min() >= 0 and x.max() <= 1
    # mean of Exp(1) conditioned on [0, 1] is 1 - 1/(e - 1)
    assert x.mean() == pytest.approx(1 - 1 / (np.e - 1), abs=3e-3)


def test_X_rows_and_sparsity():
    cfg = SynthConfig(seed=5, k=100)
    X = gen_X(10_000, cfg)
    assert np.abs(X.sum(axis=1) - 1).max() <= 1e-12
    assert X.min() >= 0
    assert 0.05 <= np.count_nonzero(X) / X.size <= 0.60
    assert np.array_equal(X[:50], gen_X(50, cfg))  # rows come from per-row streams


def test_Y_rows_and_chunk_means():
    cfg = SynthConfig(seed=11, k=40)
    s = gen_opinions(2000, cfg)
    Y, chunks = gen_Y(2000, cfg, s, return_chunks=True)
    assert np.abs(Y.sum(axis=1) - 1).max() <= 1e-12
    assert np.array_equal(Y, gen_Y(2000, cfg, s))
    assert np.all(np.count_nonzero(Y, axis=1) <= int(np.ceil(0.02 * 2000)))
    tau = Y @ s
    for j, c in enumerate(chunks):
        lo, hi = chunk_interval(c, cfg.chunk_count)
        assert lo - 1e-9 <= tau[j] <= hi + 1e-9


def test_Y_skips_empty_chunks():
    s = np.array([-1.0, -0.9, -0.8, 0.9, 1.0, 0.8])  # nothing in the middle chunk
    _, chunks = gen_Y(6, SynthConfig(k=30), s, return_chunks=True)
    assert 1 not in chunks
    with pytest.raises(ValidationError):
        gen_Y(3, SynthConfig(k=3, chunk_weights=(0.0, 1.0, 0.0)), np.array([-1.0, 1.0, 0.9]))


def test_opinion_chunk_edges():
    assert opinion_chunks([-1.0, -1 / 3 + 1e-12, 0.0, 1.0], 3).tolist() == [0, 1, 1, 2]


def test_graph_generator():
    g = gen_graph(2000, 3)
    assert g.is_connected
    assert 4.9 * 2000 <= g.m <= 5 * 2000
    assert np.array_equal(g.indices, gen_graph(2000, 3).indices)


def test_generated_pairs_satisfy_weight_identity():
    for seed in range(3):
        inst = make_instance(300, SynthConfig(seed=seed, k=10))
        A = inst.X @ inst.Y
        assert abs(np.abs(A + A.T).sum() - 2 * 300) <= 1e-9


def test_config_validation():
    with pytest.raises(ValidationError):
        SynthConfig(opinion_dist="bimodal")
    with pytest.raises(ValidationError):
        SynthConfig(chunk_weights=(0.5, 0.5, 0.1))
    with pytest.raises(ValidationError):
        SynthConfig(per_topic_user_fraction=0)
    with pytest.raises(ValidationError):
        gen_opinions(1, SynthConfig())
    with pytest.raises(ValidationError):
        gen_X(5, SynthConfig(k=1))
