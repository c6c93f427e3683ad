import math

import numpy as np
import pytest

import mixchar as mc
from mixchar import logsob as L
from mixchar.spectral import spectral_gap
from oracles import ls_grid, ls_ratio, mls_ratio


def test_dirichlet_entropy(ts):
    c = mc.random_tree(6, seed=1)
    g = np.arange(6.0)
    assert abs(L.dirichlet(c, np.ones(6), g)) <= 1e-14
    assert abs(L.entropy(c, np.full(6, 3.0))) <= 1e-14
    # <(I - P) f, f>_pi by direct arithmetic: (I-P)f = (2, -2) for f = (1, -1)
    f = np.array([1.0, -1.0])
    P = np.array(ts.P)
    assert abs(L.dirichlet(ts, f) - ts.pi @ (f * (f - P @ f))) <= 1e-15
    assert abs(L.dirichlet(ts, f) - 2.0) <= 1e-15


def test_c_ls_two_state(ts):
    r = L.c_ls(ts)
    assert abs(r.c_ls - 1) <= 1e-10 and abs(r.t_ls - 1) <= 1e-10
    assert abs(r.lower - 1) <= 1e-12 and abs(r.upper - 1) <= 1e-12


@pytest.mark.parametrize("chain", [mc.two_point(0.2), mc.path(3), mc.cycle(3),
                                   mc.lazy(mc.path(3), 0.5), mc.two_point(0.05),
                                   mc.from_network(mc.WeightedNetwork.from_edges([[0, 1, 1.0], [1, 2, 3.0]]))],
                         ids=lambda c: c.name or "weighted-path")
def test_c_ls_grid_oracle(chain):
    r = L.c_ls(chain)
    assert r.lower - 1e-9 <= r.c_ls <= r.upper + 1e-9
    assert abs(r.c_ls - ls_grid(np.array(chain.P))) <= 1e-4


def test_c_ls_p3_bracket(p3):
    lo, hi = L.ls_bracket(p3)
    assert abs(lo - 1 / (2 * math.log(3))) <= 1e-12 and abs(hi - 0.5) <= 1e-12


@pytest.mark.parametrize("chain", [mc.cycle(7), mc.random_tree(8, seed=3), mc.hypercube(3),
                                   mc.star(5), mc.two_point(0.1)], ids=lambda c: c.name)
def test_c_ls_witness(chain):
    r = L.c_ls(chain)
    assert r.lower - 1e-7 <= r.c_ls <= r.upper + 1e-7
    if r.witness_kind == "optimum":
        P = np.array(chain.P)
        assert abs(ls_ratio(P, chain.pi, r.witness) - r.c_ls) <= 1e-8 * r.c_ls
        assert abs(L.ls_objective(chain, r.witness, False) - r.c_ls) <= 1e-8 * r.c_ls


def test_ls_gradient_finite_difference():
    rng = np.random.default_rng(5)
    for chain in (mc.path(5), mc.random_tree(7, seed=2), mc.cycle(4)):
        for _ in range(10):
            f = rng.uniform(0.2, 2.0, chain.n)
            val, grad = L.ls_objective(chain, f)
            h = 1e-6
            fd = np.array([(L.ls_objective(chain, f + h * e, False) -
                            L.ls_objective(chain, f - h * e, False)) / (2 * h)
                           for e in np.eye(chain.n)])
            assert np.abs(fd - grad).max() <= 1e-5 * max(1, np.abs(grad).max())
            assert abs(L.ls_objective(chain, 3.7 * f, False) - val) <= 1e-12 * val


def test_c_mls_two_state_oracle(ts):
    P = np.array(ts.P)
    s = np.concatenate([np.linspace(-60, -1e-3, 200000), np.linspace(1e-3, 60, 200000)])
    vals = [mls_ratio(P, ts.pi, np.exp([0.0, v])) for v in s[::50]]
    ref = min(min(vals), 2 * spectral_gap(ts))
    r = L.c_mls(ts)
    assert abs(r.c_mls - ref) <= 1e-4
    assert math.isfinite(L.mls_objective(ts, np.array([0.0, 1.0]), False))


def test_hyper_upper(ts):
    kappa, t_rel = math.log(2), 0.5
    v = L.hyper_upper(t_rel, 4, kappa / 2, 7)
    assert abs(v - (2 * kappa + 2 * t_rel * (1 + math.log(49)))) <= 1e-12
    assert abs(v - 6.278114659) <= 1e-8
    assert abs(L.hyper_upper(t_rel, 4, 0.3, 1) - (4 * 0.3 + 2 * t_rel)) <= 1e-15
    with pytest.raises(ValueError):
        L.hyper_upper(t_rel, 2, 0.3, 1)


def test_s_q_cross_check():
    for chain in (mc.path(2), mc.cycle(4), mc.random_tree(5, seed=1)):
        t_ls = L.c_ls(chain).t_ls
        for q in (3, 4):
            est = L.s_q(chain, q)
            assert 4 * est.s_q / math.log(q - 1) <= t_ls * (1 + 1e-3)
