import math

import numpy as np
import pytest

import mixchar as mc
from mixchar.errors import BadParams, Disconnected, NonPositiveRate, NotStochastic, Reducible, SpecParse
from oracles import stationary


def test_from_matrix_examples():
    c = mc.from_matrix([[0, 1], [1, 0]])
    assert np.allclose(c.pi, [0.5, 0.5]) and c.reversible
    c = mc.from_matrix([[1.0]])
    assert np.allclose(c.pi, [1.0]) and c.reversible
    c = mc.from_matrix([[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])
    assert np.allclose(c.pi, [0.25, 0.5, 0.25], atol=1e-14)


def test_from_matrix_errors():
    with pytest.raises(NotStochastic):
        mc.from_matrix([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(Reducible):
        mc.from_matrix([[1, 0], [0, 1]])
    with pytest.raises(NotStochastic):
        mc.from_matrix([[1.5, -0.5], [0.5, 0.5]])


def test_nonreversible_flag():
    P = np.array([[0, 0.9, 0.1], [0.1, 0, 0.9], [0.9, 0.1, 0]])
    c = mc.from_matrix(P)
    assert not c.reversible
    assert np.allclose(c.pi, stationary(P))


def test_network_examples():
    net = mc.WeightedNetwork.from_edges([["a", "b", 1.0], ["b", "c", 1.0]])
    c = mc.from_network(net)
    assert np.allclose(c.pi, [0.25, 0.5, 0.25]) and c.reversible
    tri = mc.from_network(mc.WeightedNetwork.from_edges([[0, 1, 1], [1, 2, 1], [0, 2, 1]]))
    assert np.allclose(tri.P, (np.ones((3, 3)) - np.eye(3)) / 2)
    assert np.allclose(tri.pi, 1 / 3)
    with pytest.raises(Disconnected):
        mc.from_network(mc.WeightedNetwork.from_edges([[0, 1, 1], [2, 3, 1]]))


def test_network_always_reversible():
    for seed in range(5):
        c = mc.random_tree(9, seed=seed)
        F = c.pi[:, None] * c.P
        assert np.max(np.abs(F - F.T)) <= 1e-14


def test_families():
    assert np.allclose(np.sort(np.linalg.eigvals(mc.clique(3).P).real), [-0.5, -0.5, 1])
    assert np.allclose(np.sort(np.linalg.eigvals(mc.cycle(4).P).real), [-1, 0, 0, 1], atol=1e-12)
    ts = mc.path(2)
    assert np.allclose(mc.lazy(ts, 0.5).P, [[0.5, 0.5], [0.5, 0.5]])
    assert mc.hypercube(3).n == 8 and mc.binary_tree(2).n == 7
    with pytest.raises(BadParams):
        mc.family("cycle", {"m": 3})
    with pytest.raises(BadParams):
        mc.family("nope")


def test_rescale_rows():
    ts = mc.path(2)
    assert np.allclose(mc.rescale_rows(ts, [1, 1]).pi, ts.pi)
    r = mc.rescale_rows(ts, [2, 1])
    assert np.allclose(r.pi, [1 / 3, 2 / 3])
    with pytest.raises(NonPositiveRate):
        mc.rescale_rows(ts, [0, 1])


def test_rescale_is_time_change():
    from mixchar.hitting import survival
    c = mc.random_tree(6, seed=3)
    fast = mc.rescale_rows(c, np.full(c.n, 2.5))
    for t in np.linspace(0, 3, 7):
        assert abs(survival(fast, 0, [0, 1], t) - survival(c, 0, [0, 1], 2.5 * t)) <= 1e-10


def test_invariants_random():
    rng = np.random.default_rng(1)
    for _ in range(10):
        W = rng.random((5, 5))
        W = W + W.T
        c = mc.from_matrix(W / W.sum(1, keepdims=True))
        assert abs(c.P.sum(1) - 1).max() <= 1e-12
        assert np.abs(c.pi @ c.P - c.pi).max() <= 1e-10
        assert c.reversible and (c.pi > 0).all()


def test_spec_loading():
    c = mc.load_chain('{"type":"family","name":"cycle","params":{"n":8}}', is_text=True)
    assert c.n == 8
    c = mc.load_chain('{"type":"network","edges":[["a","b",1.0]]}', is_text=True)
    assert c.states == ("a", "b")
    c = mc.load_chain('{"type":"rescale","base":{"type":"matrix","P":[[0,1],[1,0]]},"r":[2,1]}',
                      is_text=True)
    assert np.allclose(c.pi, [1 / 3, 2 / 3])
    with pytest.raises(SpecParse) as info:
        mc.load_chain('{"type": "matrix",\n "P": [[0,1]', is_text=True)
    assert info.value.line == 2
    with pytest.raises(SpecParse):
        mc.load_chain('{"type":"matrix"}', is_text=True)


def test_clique_tau2_grows():
    from mixchar.distance import mixing_time
    vals = [mixing_time(mc.clique(n), metric="L2") for n in (4, 8, 16)]
    assert vals[0] < vals[1] < vals[2]
    assert math.isfinite(vals[2])
