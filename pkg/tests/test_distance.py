import math

import numpy as np
import pytest

import mixchar as mc
from mixchar import distance as D
from mixchar.errors import DomainError, NotMixing
from oracles import cont_mixing, heat, int_mixing, kl, lagrange_brute, lp_dist


def test_lp_distance_examples(ts):
    assert abs(D.lp_distance(ts, 0, 0.5, 2) - math.exp(-1)) <= 1e-12
    c = mc.random_tree(6, seed=1)
    for x in range(c.n):
        assert abs(D.lp_distance(c, x, 0.0, 1) - 2 * (1 - c.pi[x])) <= 1e-12


@pytest.mark.parametrize("chain", [mc.path(5), mc.random_tree(7, seed=2), mc.hypercube(3)],
                         ids=lambda c: c.name)
def test_distance_profile_matches_expm(chain):
    P = np.array(chain.P)
    for t in (0.2, 1.0, 3.0):
        H = heat(P, t)
        for p in (1, 2, math.inf):
            prof = D.distance_profile(chain, t, p)
            ref = [lp_dist(H[x], chain.pi, p) for x in range(chain.n)]
            assert np.abs(prof - ref).max() <= 1e-10
        ent = D.distance_profile(chain, t, "entropy")
        assert np.abs(ent - [kl(H[x], chain.pi) for x in range(chain.n)]).max() <= 1e-10


def test_linf_l2_identity():
    for c in (mc.path(2), mc.cycle(5), mc.random_tree(8, seed=3)):
        for t in np.linspace(0.05, 4, 12):
            d2 = D.distance_profile(c, t, 2)
            dinf = D.distance_profile(c, 2 * t, math.inf)
            # sup_y |h_{2t}(x,y)-1| is attained at y = x for reversible chains
            assert abs(D.worst_distance(c, 2 * t, math.inf) - D.worst_distance(c, t, 2) ** 2) <= 1e-9
            assert np.all(dinf >= d2 ** 2 - 1e-9)


def test_rel_entropy(ts):
    pi = np.array([0.2, 0.3, 0.5])
    assert D.rel_entropy(pi, pi) == 0
    assert abs(D.rel_entropy([1, 0], ts.pi) - math.log(2)) <= 1e-15
    rng = np.random.default_rng(0)
    for _ in range(100):
        mu = rng.dirichlet(np.ones(3))
        l2sq = np.sum((mu - pi) ** 2 / pi)
        assert D.rel_entropy(mu, pi) <= math.log1p(l2sq) + 1e-12


def test_unsupported_norm(ts):
    from mixchar.errors import BadMode
    with pytest.raises(BadMode):
        D.lp_distance(ts, 0, 1.0, 3)


def test_mixing_time_examples(ts):
    assert abs(D.mixing_time(ts, metric="L2") - math.log(2) / 2) <= 1e-12
    assert D.mixing_time(ts, metric="L2", mode="averaged") == 1
    with pytest.raises(NotMixing):
        D.mixing_time(ts, metric="L2", mode="discrete")


@pytest.mark.parametrize("chain", [mc.path(4), mc.cycle(5), mc.random_tree(6, seed=4)],
                         ids=lambda c: c.name)
def test_mixing_times_match_oracle(chain):
    P = np.array(chain.P)
    for metric, p in (("L1", 1), ("L2", 2), ("Linf", math.inf), ("Entropy", "ent")):
        got = D.mixing_time(chain, metric=metric)
        assert abs(got - cont_mixing(P, p)) <= 1e-9 * max(1, got)
    lz = mc.lazy(chain, 0.5)
    Pl = np.array(lz.P)
    for metric, p in (("L2", 2), ("Entropy", "ent")):
        assert D.mixing_time(lz, metric=metric, mode="discrete") == int_mixing(Pl, p)
        assert D.mixing_time(lz, metric=metric, mode="averaged") == int_mixing(Pl, p, averaged=True)


def test_lagrange_examples():
    l2, ent = D.lagrange_minima(0.5, 0.5)
    assert abs(l2 - 0.5) <= 1e-15
    assert abs(ent - D.u(0.5, 0.5)) <= 1e-15 and abs(ent - 0.13081203594) <= 1e-10
    assert D.lagrange_minima(0.3, 0.0) == (0.0, 0.0)
    with pytest.raises(DomainError):
        D.lagrange_minima(1.0, 0.5)


def test_lagrange_brute_force():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(50):
        n = int(rng.integers(2, 7))
        pi = rng.dirichlet(np.ones(n))
        A = tuple(sorted(rng.choice(n, size=int(rng.integers(1, n)), replace=False)))
        delta = float(rng.uniform(0.05, 0.9))
        l2, ent = D.lagrange_minima(float(pi[list(A)].sum()), delta)
        b2, be = lagrange_brute(pi, A, delta, seed=k)
        worst = max(worst, abs(l2 - b2), abs(ent - be))
    assert worst <= 1e-5


def test_c_ent():
    c_prime, c_ent = D.derive_c_ent()
    assert abs(c_prime - 1.0328334670810855) <= 1e-9
    assert abs(c_ent - 1.16379738007219) <= 1e-9
    assert D.c_ent_condition(c_prime).min() >= -1e-9
    # a smaller constant violates the defining condition somewhere
    assert D.c_ent_condition(c_prime * 0.99).min() < 0
