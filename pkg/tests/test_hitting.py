import math

import numpy as np
import pytest
from scipy.integrate import quad

import mixchar as mc
from mixchar import hitting as H
from mixchar.spectral import restricted
from oracles import survival, survival_dist, threshold


def test_survival_examples(ts, p3):
    for t in (0.0, 0.4, 2.0):
        assert abs(H.survival(ts, 0, [0], t) - math.exp(-t)) <= 1e-12
    assert H.survival(ts, 0, [0], 1, mode="discrete") == 0.0
    mu = np.zeros(3)
    mu[:2] = restricted(p3, [0, 1]).mu[:2]
    lam = 1 - 1 / math.sqrt(2)
    for t in (0.0, 0.7, 3.0):
        assert abs(H.survival(p3, mu, [0, 1], t) - math.exp(-lam * t)) <= 1e-12
        assert abs(H.survival(p3, "mu_A", [0, 1], t) - math.exp(-lam * t)) <= 1e-12


@pytest.mark.parametrize("chain", [mc.path(5), mc.cycle(6), mc.random_tree(8, seed=1),
                                   mc.hypercube(3)], ids=lambda c: c.name)
def test_survival_matches_expm(chain):
    P = np.array(chain.P)
    for A in ([0], [0, 1], [0, 1, 2, 3]):
        for x in range(chain.n):
            curve = H.survival_curve(chain, x, A)
            for t in (0.0, 0.5, 2.0, 6.0):
                assert abs(curve(t) - survival(P, x, A, t)) <= 1e-10
            for t in (0, 1, 3, 8):
                assert abs(H.survival(chain, x, A, t, "discrete") -
                           survival(P, x, A, t, "discrete")) <= 1e-10
    pi = chain.pi
    for t in (0.3, 2.0):
        assert abs(H.survival(chain, "pi", [0, 1], t) - survival_dist(P, pi, [0, 1], t)) <= 1e-10


def test_survival_properties():
    c = mc.random_tree(8, seed=2)
    ts = np.linspace(0, 10, 101)
    s = H.survival_curve(c, 0, [0, 1, 2])(ts)
    assert s[0] == 1 and np.all(np.diff(s) <= 1e-15) and s.min() >= 0


def test_threshold_examples(ts):
    curve = H.survival_curve(ts, 0, [0])
    assert abs(H.threshold_time(curve, 0.75) - math.log(4 / 3)) <= 1e-12
    assert abs(H.threshold_time(curve, 0.125) - math.log(8)) <= 1e-12
    assert H.threshold_time(H.survival_curve(ts, 1, [0]), 0.3) == 0.0


def test_threshold_matches_oracle():
    c = mc.random_tree(7, seed=6)
    P = np.array(c.P)
    for A in ([0], [0, 1, 2]):
        for x in A:
            for target in (0.9, 0.5, 0.01):
                got = H.threshold_time(H.survival_curve(c, x, A), target)
                assert abs(got - threshold(P, x, A, target)) <= 1e-9 * max(1, got)


def test_family_thresholds_agree():
    c = mc.cycle(7)
    sets = [(0,), (0, 1), (2, 3, 4)]
    targets = np.array([0.5, 0.3, 0.1])
    T = H.family_thresholds(c, sets, targets)
    for s, A in enumerate(sets):
        for x in range(c.n):
            ref = H.threshold_time(H.survival_curve(c, x, A), targets[s])
            assert abs(T[s, x] - ref) <= 1e-9 * max(1, ref)


def test_expected_hitting_examples(ts, p3):
    assert abs(H.expected_hitting(p3, 1, [2]) - 3) <= 1e-12
    assert H.expected_hitting(p3, 0, [0]) == 0
    assert abs(H.expected_hitting(ts, 0, [1]) - 1) <= 1e-12


def test_expected_hitting_integral_oracle():
    c = mc.random_tree(6, seed=8)
    P = np.array(c.P)
    rest = [1, 2, 3, 4, 5]
    for x in (1, 3):
        m1 = quad(lambda t: survival(P, x, rest, t), 0, np.inf, limit=200)[0]
        m2 = quad(lambda t: 2 * t * survival(P, x, rest, t), 0, np.inf, limit=200)[0]
        assert abs(H.expected_hitting(c, x, [0]) - m1) <= 1e-7 * m1
        assert abs(H.expected_hitting(c, x, [0], moment=2) - m2) <= 1e-7 * m2


def test_kac(p3, ts):
    phi = H.kac_phi(p3, 1, 2)
    assert abs(phi - 1 / 3) <= 1e-12
    assert abs(phi * H.expected_hitting(p3, 1, [2]) - 1) <= 1e-12
    assert abs(H.kac_phi(ts, 0, 1) - 1) <= 1e-12
    c = mc.random_tree(7, seed=3)
    for y, z in H.tree_support_edges(c):
        for a, b in ((y, z), (z, y)):
            assert abs(H.kac_phi(c, a, b) * H.expected_hitting(c, a, [b]) - 1) <= 1e-10
