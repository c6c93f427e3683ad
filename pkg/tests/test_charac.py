import math

import numpy as np
import pytest

import mixchar as mc
from mixchar import charac as C
from mixchar.errors import BadMode, DomainError
from oracles import connected_sets, restricted_gap, survival_dist, threshold
from scipy.optimize import brentq

from oracles import survival


def test_rho_family_examples(ts):
    assert abs(C.rho_family(ts, "rho").value - math.log(4 / 3)) <= 1e-12
    assert abs(C.rho_family(ts, "rho_bar").value - math.log(8)) <= 1e-12
    assert abs(C.rho_family(ts, "t_ht").value - math.log(2) / 4) <= 1e-12
    r = C.rho_family(ts, "rho")
    assert r.complete and r.label == "exact"


def _target(kind, a):
    if kind == "rho":
        return a + 0.5 * math.sqrt(a * (1 - a))
    if kind == "rho_bar":
        return a ** 3
    if kind == "rho_ent":
        return min(1.16379738007219 / abs(math.log(a)), 0.99)
    return a ** 0.25


def _stationary_threshold(P, pi, A, target):
    mu = np.zeros(len(pi))
    mu[list(A)] = pi[list(A)] / pi[list(A)].sum()
    f = lambda t: survival_dist(P, mu, A, t) - target
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    return brentq(f, 0, hi, xtol=1e-14, rtol=1e-13)


@pytest.mark.parametrize("chain", [mc.path(4), mc.cycle(5), mc.random_tree(6, seed=12),
                                   mc.star(4)], ids=lambda c: c.name)
@pytest.mark.parametrize("kind", ["rho", "rho_bar", "rho_ent", "t_ht"])
def test_rho_matches_brute_force(chain, kind):
    P = np.array(chain.P)
    pi = chain.pi
    sets = connected_sets(P, 0.5)
    if kind == "t_ht":
        ref = max(_stationary_threshold(P, pi, A, _target(kind, pi[list(A)].sum())) for A in sets)
    else:
        ref = max(threshold(P, x, A, _target(kind, pi[list(A)].sum())) for A in sets for x in A)
    got = C.rho_family(chain, kind).value
    assert abs(got - ref) <= 1e-9 * max(1, ref)


def test_kappa_examples(ts, p3):
    assert abs(C.kappa(ts).value - math.log(2)) <= 1e-12
    k = C.kappa(p3)
    assert abs(k.value - math.log(4)) <= 1e-12 and k.argmax_set == (0,)
    assert abs(C.kappa(mc.lazy(p3, 0.5), mode="discrete").value - 2) <= 1e-12
    with pytest.raises(BadMode):
        C.kappa(ts, mode="averaged")


@pytest.mark.parametrize("chain", [mc.cycle(6), mc.random_tree(8, seed=5), mc.hypercube(3)],
                         ids=lambda c: c.name)
def test_kappa_brute_force(chain):
    P = np.array(chain.P)
    ref = max(abs(math.log(chain.pi[list(A)].sum())) / restricted_gap(P, A)
              for A in connected_sets(P, 0.5))
    assert abs(C.kappa(chain).value - ref) <= 1e-10 * ref


def test_hit_eps(ts, p3):
    assert abs(C.hit_eps(ts, 0.5).value - math.log(2)) <= 1e-12
    assert C.hit_eps(ts, 1 - 1e-12).value <= 1e-9
    # large selector on P3: sets of mass >= 1/2 are complements of {a}, {b}, {c}
    P = np.array(p3.P)
    ref = 0.0
    for A in ([1, 2], [0, 2], [0, 1]):
        esc = [v for v in range(3) if v not in A]
        ref = max([ref] + [threshold(P, x, esc, 0.25) for x in esc])
    assert abs(C.hit_eps(p3, 0.25, "large").value - ref) <= 1e-10
    with pytest.raises(DomainError):
        C.hit_eps(ts, 1.5)


def test_targets():
    g, clamped = C.target_values("rho_bar", np.array([1e-120]))
    assert clamped and g[0] == C.TINY_TARGET
    with pytest.raises(BadMode):
        C.target_values("nope", np.array([0.5]))


def test_discrete_rho_on_lazy():
    c = mc.lazy(mc.path(4), 0.5)
    P = np.array(c.P)
    ref = 0
    for A in connected_sets(P, 0.5):
        a = c.pi[list(A)].sum()
        for x in A:
            t = 0

            while survival(P, x, A, t, "discrete") > _target("rho", a) * (1 + 1e-12):
                t += 1
            ref = max(ref, t)
    assert C.rho_family(c, "rho", mode="discrete").value == ref
