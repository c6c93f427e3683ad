import csv
import math

import numpy as np
import pytest
from scipy.integrate import quad

import mixchar as mc
from mixchar import trees as T
from mixchar.errors import BadDelta, BadParams, NotATree
from oracles import survival


def test_root_examples(ts, p3):
    assert T.root_tree(p3).root == 1
    r = T.root_tree(ts)
    assert r.root == 0 and r.tie
    assert T.root_tree(mc.star(5)).root == 0
    with pytest.raises(NotATree):
        T.root_tree(mc.cycle(4))


@pytest.mark.parametrize("seed", range(6))
def test_root_invariants(seed):
    c = mc.random_tree(9, seed=seed)
    r = T.root_tree(c)
    m = r.subtree_mass
    assert abs(m[r.root] - 1) <= 1e-12
    for u in range(c.n):
        assert abs(m[u] - c.pi[u] - sum(m[ch] for ch in r.children[u])) <= 1e-12
    assert all(m[ch] <= 0.5 + 1e-12 for ch in r.children[r.root])


def test_leaf_cut_examples(p3):
    r = T.root_tree(p3)
    cut = T.leaf_cut(r, 0, 0.3)
    assert cut.x_delta == 1 and cut.D == (0,) and abs(cut.lam - 1) <= 1e-12
    cut = T.leaf_cut(r, 0, 0.2)
    assert cut.x_delta == 0 and cut.D == ()
    with pytest.raises(BadDelta):
        T.leaf_cut(r, 0, 0.5)
    with pytest.raises(BadParams):
        T.leaf_cut(r, 1, 0.2)


def test_leaf_cut_minimality():
    c = mc.random_tree(10, seed=21)
    r = T.root_tree(c)
    for x in r.leaves:
        for d in (0.01, 0.05, 0.1, 0.2, 0.3, 0.45):
            cut = T.leaf_cut(r, x, d)
            path = r.path_to_root(x)
            # exhaustive scan: first vertex on the path whose subtree has mass >= delta
            first = [y for y in path if r.subtree_mass[y] >= d][0]
            assert cut.x_delta == first
            if first != x:
                below = path[path.index(first) - 1]
                assert set(cut.D) == set(r.subtree(below))


def test_b_x_examples(p3):
    r = T.root_tree(p3)
    prof = T.b_x(r, 0, [0.25])
    assert prof.values[0] == 0.0
    thr = T._escape_threshold(p3, 0, (0,), 0.3 ** 3 / 4)
    assert abs(thr - math.log(1 / 0.00675)) <= 1e-12
    assert abs(thr - 4.998212774097738) <= 1e-12
    assert math.isinf(prof.alpha_x)


def test_b_x_sup_dominates_grid():
    c = mc.random_tree(10, seed=5)
    r = T.root_tree(c)
    fine = np.geomspace(1e-4, 0.25, 2000)
    for x in r.leaves:
        prof = T.b_x(r, x)
        dense = T.b_x(r, x, fine)
        assert prof.sup >= dense.values.max() - 1e-9
        assert prof.sup >= prof.values.max()


def test_laplace_transform_integral():
    c = mc.random_tree(7, seed=9)
    D = (0, 1, 2)
    curve_rate = min(T.survival_curve(c, 0, D).rates)
    P = np.array(c.P)
    for beta in (curve_rate / 4, curve_rate / 2):
        ref = 1 + beta * quad(lambda t: math.exp(beta * t) * survival(P, 0, D, t), 0,
                              80 / (curve_rate - beta), limit=400)[0]
        assert abs(T.laplace_transform(c, 0, D, beta) - ref) <= 1e-8 * ref
    assert T.laplace_transform(c, 0, D, curve_rate * 1.01) == math.inf


@pytest.mark.parametrize("chain", [mc.path(2), mc.path(3), mc.binary_tree(2),
                                   mc.random_tree(8, seed=4)], ids=lambda c: c.name)
def test_tree_theorem_check(chain):
    chk = T.tree_theorem_check(chain, chain.name)
    assert chk.passed, [r for r in chk.records if r.status == "fail"]
    assert max(chk.tau1, chk.t_ls / 4) <= chk.tau2 + 1e-6
    ids = {r.id for r in chk.records}
    assert "trees-lower" in ids or any(i.startswith("trees") for i in ids)


def test_robustness():
    c = mc.random_tree(8, seed=3)
    rows = T.robustness_experiment(c, 1.0, trials=3)
    assert all(r["ratio"] == 1.0 and r["tau_inf_ratio"] == 1.0 for r in rows)
    rows = T.robustness_experiment(c, 2.0, trials=4)
    assert all(0 < r["ratio"] < math.inf for r in rows)
    assert T.ratio_summary(rows)["max"] >= 1
    ts = mc.path(2)
    a = mc.distance.mixing_time(ts, metric="L2")
    b = mc.distance.mixing_time(mc.rescale_rows(ts, [2, 1]), metric="L2")
    assert 0 < a / b < math.inf
    with pytest.raises(BadParams):
        T.robustness_experiment(c, 0.5)


def test_robustness_csv(tmp_path):
    rows = T.robustness_experiment(mc.random_tree(5, seed=1), 2.0, trials=2)
    path = tmp_path / "r.csv"
    T.write_csv(rows, path)
    got = list(csv.DictReader(open(path)))
    assert len(got) == 2 and list(got[0]) == list(T.CSV_COLUMNS)
