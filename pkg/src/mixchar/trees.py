"""Weighted random walks on trees: central root, leaf cuts, b_x and the tree checks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainModel, from_network, network_of, rescale_rows, WeightedNetwork
from .charac import kappa
from .distance import mixing_time, mixing_times
from .errors import BadDelta, BadParams, NotATree
from .hitting import (family_survival, hitting_moments, kac_phi, survival_curve,
                      threshold_time, tree_support_edges)
from .logsob import c_ls
from .records import VerificationRecord, check, report
from .sets import enumerate_sets
from .spectral import DEFAULT_SEED, relaxation_times, restricted

DELTA_GRID = 64
DELTA_LO = 1e-4
TDELTA_DELTAS = (0.25, 0.125, 0.0625)
CSV_COLUMNS = ("tree_id", "seed", "M", "tau2", "tau2_pert", "ratio", "tau_inf_ratio",
               "tau_ent_ratio")


@dataclass(frozen=True, eq=False)
class RootedTree:
    chain: ChainModel
    root: int
    parent: tuple            # parent[root] = -1
    children: tuple          # tuple of tuples
    subtree_mass: np.ndarray
    tie: bool                # two central vertices existed

    @property
    def leaves(self) -> tuple:
        deg = np.zeros(self.chain.n, dtype=int)
        for v, p in enumerate(self.parent):
            if p >= 0:
                deg[v] += 1
                deg[p] += 1
        return tuple(int(v) for v in np.nonzero(deg <= 1)[0])

    def path_to_root(self, x: int) -> list[int]:
        out = [x]
        while self.parent[out[-1]] >= 0:
            out.append(self.parent[out[-1]])
        return out

    def subtree(self, u: int) -> list[int]:
        out, stack = [], [u]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(self.children[v])
        return sorted(out)


def _adjacency(chain: ChainModel) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(chain.n)]
    for a, b in tree_support_edges(chain):
        adj[a].append(b)
        adj[b].append(a)
    return adj


def _orient(adj, root, n):
    parent = [-1] * n
    order, seen = [root], {root}
    for v in order:
        for u in sorted(adj[v]):
            if u not in seen:
                seen.add(u)
                parent[u] = v
                order.append(u)
    return parent, order


def root_tree(chain: ChainModel) -> RootedTree:
    """Root a tree walk at a central vertex (smallest index on ties)."""
    chain.require_reversible("root_tree")
    adj = _adjacency(chain)
    n, pi = chain.n, chain.pi
    parent0, order0 = _orient(adj, 0, n)
    below = pi.copy()
    for v in reversed(order0[1:]):
        below[parent0[v]] += below[v]
    # heaviest component of T minus v: child subtrees or everything above v
    worst = np.empty(n)
    for v in range(n):
        comps = [below[u] for u in adj[v] if parent0[u] == v]
        if parent0[v] >= 0:
            comps.append(1.0 - below[v])
        worst[v] = max(comps) if comps else 0.0
    central = np.nonzero(worst <= 0.5 + 1e-12)[0]
    if len(central) == 0:
        raise NotATree("no central vertex found")
    root = int(central[0])
    parent, order = _orient(adj, root, n)
    mass = pi.copy()
    for v in reversed(order[1:]):
        mass[parent[v]] += mass[v]
    mass[root] = 1.0
    children = tuple(tuple(u for u in range(n) if parent[u] == v) for v in range(n))
    mass.setflags(write=False)
    return RootedTree(chain, root, tuple(parent), children, mass, len(central) > 1)


@dataclass(frozen=True)
class LeafCut:
    x: int
    delta: float
    x_delta: int
    D: tuple                 # component of x in T minus x_delta (empty if x_delta = x)
    alpha: float             # alpha(D) = lambda(D)/|log pi(D)|; nan when D is empty
    lam: float               # lambda(D); nan when D is empty


def _check_leaf(rooted: RootedTree, x) -> int:
    x = rooted.chain.index(x)
    if x not in rooted.leaves:
        raise BadParams(f"state {rooted.chain.states[x]!r} is not a leaf")
    return x


def leaf_cut(rooted: RootedTree, x, delta: float) -> LeafCut:
    if not 0 < delta < 0.5:
        raise BadDelta("delta must lie in (0, 1/2)")
    x = _check_leaf(rooted, x)
    path = rooted.path_to_root(x)
    m = rooted.subtree_mass
    k = next(i for i, y in enumerate(path) if m[y] >= delta)
    x_d = path[k]
    if k == 0:
        return LeafCut(x, float(delta), x_d, (), math.nan, math.nan)
    D = tuple(rooted.subtree(path[k - 1]))
    lam = restricted(rooted.chain, D).lam
    return LeafCut(x, float(delta), x_d, D, lam / abs(math.log(m[path[k - 1]])), lam)


def _escape_threshold(chain: ChainModel, x: int, D: tuple, target: float) -> float:
    if not D:
        return 0.0
    return threshold_time(survival_curve(chain, x, D), target)


def delta_grid() -> np.ndarray:
    return np.geomspace(DELTA_LO, 0.25, DELTA_GRID)


@dataclass(frozen=True, eq=False)
class BxProfile:
    x: int
    deltas: np.ndarray
    values: np.ndarray
    sup: float
    sup_delta: float         # breakpoint (approached from above) or grid point
    alpha_x: float


def b_x(rooted: RootedTree, x, deltas=None) -> BxProfile:
    """``b_x(delta) = min{t : P_x[T_{x_delta} > t] <= delta^3/4}`` and its supremum.

    On each interval where x_delta is constant the threshold decreases in delta,
    so the supremum over (0, 1/4] is a limit at a breakpoint delta = pi(T_c)^+.
    These breakpoints are evaluated exactly alongside the grid.
    """
    chain = rooted.chain
    x = _check_leaf(rooted, x)
    deltas = delta_grid() if deltas is None else np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0) or np.any(deltas > 0.25):
        raise BadDelta("delta grid must lie in (0, 1/4]")
    vals = np.array([_escape_threshold(chain, x, leaf_cut(rooted, x, d).D, d ** 3 / 4)
                     for d in deltas])
    j = int(np.argmax(vals))
    best, best_d = float(vals[j]), float(deltas[j])
    path = rooted.path_to_root(x)
    m = rooted.subtree_mass
    alpha_x = -math.inf
    for c in path[:-1]:
        if m[c] < 0.25:
            D = tuple(rooted.subtree(c))
            v = _escape_threshold(chain, x, D, m[c] ** 3 / 4)
            if v > best:
                best, best_d = v, float(m[c])
            lam = restricted(chain, D).lam
            alpha_x = max(alpha_x, lam / abs(math.log(m[c])))
    return BxProfile(x, deltas, vals, best, best_d, alpha_x if alpha_x > -math.inf else math.inf)


def laplace_transform(chain: ChainModel, y: int, D: tuple, beta: float) -> float:
    """``E_y[exp(beta T)]`` for the escape time T of D (needs beta < lambda(D))."""
    curve = survival_curve(chain, y, D)
    if beta >= curve.rates.min():
        return math.inf
    return float(1.0 + beta * np.sum(curve.coef / (curve.rates - beta)))


@dataclass(frozen=True, eq=False)
class TreeCheck:
    chain_id: str
    rooted: RootedTree
    tau1: float
    tau2: float
    t_ls: float
    kappa: float
    t_rel: float
    tau2_per_state: np.ndarray
    b: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status != "fail" for r in self.records)

    @property
    def worst_start_is_leaf(self) -> bool:
        return _is_leaf_worst(self.rooted, self.tau2_per_state)


def _tree_path(rooted: RootedTree, x: int, y: int) -> list[int]:
    px, py = rooted.path_to_root(x), rooted.path_to_root(y)
    common = set(px) & set(py)
    top = next(v for v in px if v in common)
    up = px[:px.index(top) + 1]
    down = py[:py.index(top)]
    return up + down[::-1]


def tree_theorem_check(chain: ChainModel, chain_id: str = "", slack: float = 1e-6,
                       seed: int = DEFAULT_SEED, max_leaves: int = 8) -> TreeCheck:
    """Lower bound of the tree sandwich plus the structural identities behind it."""
    cid = chain_id or chain.name or "tree"
    rooted = root_tree(chain)
    n, pi = chain.n, chain.pi
    t_rel, _ = relaxation_times(chain)
    tau1 = mixing_time(chain, metric="L1", mode="continuous", epsilon=0.5)
    tau2_x = mixing_times(chain, "L2", "continuous", 0.5)
    tau2 = float(tau2_x.max())
    ls = c_ls(chain, seed=seed)
    t_ls = ls.t_ls
    fam = enumerate_sets(chain, 0.5)
    kap = kappa(chain, fam).value
    recs: list[VerificationRecord] = []
    recs.append(check("trees-lower", cid, max(tau1, t_ls / 4), tau2, "trees", slack))
    denom = max(t_ls, math.sqrt(t_ls * tau1))
    recs.append(report("trees-upper-constant", cid, (tau2 - tau1) / denom, "trees",
                       "(tau2 - tau1)/max(t_LS, sqrt(t_LS tau1))"))

    # Kac identity and path decompositions from exact hitting moments
    moments = [hitting_moments(chain, [v]) for v in range(n)]
    m1 = np.array([m[0] for m in moments]).T        # m1[x, y] = E_x[T_y]
    m2 = np.array([m[1] for m in moments]).T
    kac_err = 0.0
    second = -math.inf
    for a, b in tree_support_edges(chain):
        for y, z in ((a, b), (b, a)):
            kac_err = max(kac_err, abs(kac_phi(chain, y, z) * m1[y, z] - 1.0))
    for v in range(n):
        p = rooted.parent[v]
        if p >= 0:
            second = max(second, m2[v, p] - 4 * t_rel * m1[v, p])
    recs.append(check("kac-identity", cid, kac_err, 0.0, "Kac", 1e-9))
    recs.append(check("second-moment", cid, second, 0.0, "leafisworst", 1e-8))
    var = m2 - m1 ** 2
    mean_err = var_err = 0.0
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            path = _tree_path(rooted, x, y)
            steps = list(zip(path[:-1], path[1:]))
            mean_err = max(mean_err, abs(sum(m1[u, w] for u, w in steps) - m1[x, y]))
            var_err = max(var_err, abs(sum(var[u, w] for u, w in steps) - var[x, y])
                          / max(1.0, var[x, y]))
    recs.append(check("hitting-decomposition-mean", cid, mean_err, 0.0, "trees", 1e-8))
    recs.append(check("hitting-decomposition-var", cid, var_err, 0.0, "trees", 1e-8,
                      "relative"))

    leaves = [v for v in rooted.leaves][:max_leaves]
    bx = {x: b_x(rooted, x) for x in leaves}
    alpha = 1.0 / kap if kap > 0 else math.inf
    finite = [p.alpha_x for p in bx.values() if math.isfinite(p.alpha_x)]
    if finite:
        # alpha_x >= alpha, written as -alpha_x <= -alpha
        recs.append(check("alpha-x-ge-alpha", cid, -min(finite), -alpha, "trees", 1e-9))

    # P_x[T_{A^c} > b_x + 3 kappa + 10 t_rel] < delta^3/2 on Con_delta
    fam_q = fam.restrict(0.25)
    tdelta_gap = -math.inf
    if fam_q.sets:
        for x, prof in bx.items():
            T = prof.sup + 3 * kap + 10 * t_rel
            S = family_survival(chain, fam_q.sets, T)[:, x]
            for d in TDELTA_DELTAS:
                sel = fam_q.masses <= d + 1e-12
                if sel.any():
                    tdelta_gap = max(tdelta_gap, float(S[sel].max() - d ** 3 / 2))
    recs.append(check("prop-tdelta", cid, tdelta_gap if tdelta_gap > -math.inf else 0.0,
                      0.0, "Tdelta", 1e-10))

    # large deviations and the Laplace bound on D_delta
    ld2 = ld3 = lap = -math.inf
    ld1 = ld1_first = -math.inf
    for x in leaves:
        for d in (0.25, 0.125, 0.0625, 0.03125):
            cut = leaf_cut(rooted, x, d)
            if not cut.D:
                continue
            curve = survival_curve(chain, x, cut.D)
            mu = m1[x, cut.x_delta]
            lam = cut.lam
            t2 = np.linspace(0, 2 * mu, 21)
            ld2 = max(ld2, float(np.max(curve.survival(mu + t2)
                                        - np.exp(-t2 ** 2 * lam / (8 * mu)))))
            t3 = 2 * mu * np.linspace(1, 10, 19)
            ld3 = max(ld3, float(np.max(curve.survival(mu + t3) - np.exp(-lam * t3 / 4))))
            b_d = threshold_time(curve, d ** 3 / 4)
            bound = mu + max(32 / cut.alpha, 8 * math.sqrt(mu / cut.alpha))
            ld1 = max(ld1, (b_d - tau1) / max(kap, math.sqrt(kap * tau1)))
            ld1_first = max(ld1_first, b_d - bound)
            for y in cut.D:
                z = rooted.parent[y]
                sub = tuple(rooted.subtree(y))
                for beta in (lam / 4, lam / 2):
                    lhs = laplace_transform(chain, y, sub, beta)
                    rhs = 1 + m1[y, z] * beta * (1 + 2 * beta / lam)
                    lap = max(lap, lhs - rhs)
    if ld2 > -math.inf:
        recs.append(check("LD2", cid, ld2, 0.0, "LD2", 1e-10))
        recs.append(check("LD3", cid, ld3, 0.0, "LD3", 1e-10))
        recs.append(check("LD1-explicit", cid, ld1_first, 0.0, "LD1", 1e-8))
        recs.append(check("laplace-bound", cid, lap, 0.0, "Laplace", 1e-8))
        recs.append(report("LD1-constant", cid, ld1, "LD1",
                           "(b_x(delta) - tau1)/max(kappa, sqrt(kappa tau1))"))
    recs.append(report("worst-start-is-leaf", cid, 1.0 if _is_leaf_worst(rooted, tau2_x) else 0.0,
                       "trees", "tabulated, not assumed"))
    return TreeCheck(cid, rooted, tau1, tau2, t_ls, kap, t_rel, tau2_x,
                     {x: p.sup for x, p in bx.items()}, recs)


def _is_leaf_worst(rooted: RootedTree, tau2_x: np.ndarray) -> bool:
    worst = np.nonzero(tau2_x >= tau2_x.max() * (1 - 1e-9))[0]
    return any(int(v) in rooted.leaves for v in worst)


# --- robustness under weight perturbations -----------------------------------

def perturb_weights(chain: ChainModel, M: float, rng: np.random.Generator) -> ChainModel:
    """Multiply every edge conductance by an independent log-uniform factor in [1/M, M]."""
    net = network_of(chain)
    logm = math.log(M)
    edges = tuple((u, v, w * math.exp(rng.uniform(-logm, logm))) for u, v, w in net.edges)
    return from_network(WeightedNetwork(net.vertices, edges), chain.name)


def perturb_rows(chain: ChainModel, M: float, rng: np.random.Generator) -> ChainModel:
    logm = math.log(M)
    return rescale_rows(chain, np.exp(rng.uniform(-logm, logm, chain.n)))


def _times(chain: ChainModel) -> tuple[float, float, float]:
    return tuple(mixing_time(chain, metric=m, mode="continuous", epsilon=0.5)
                 for m in ("L2", "Linf", "Entropy"))


def robustness_experiment(chain: ChainModel, M: float, trials: int = 20,
                          seed: int = DEFAULT_SEED, tree_id: str = "",
                          variant: str = "weights") -> list[dict]:
    """Ratios of mixing times before and after random perturbations (report only)."""
    if M < 1:
        raise BadParams("M must be at least 1")
    if variant not in ("weights", "rows"):
        raise BadParams("variant must be 'weights' or 'rows'")
    tid = tree_id or chain.name or "tree"
    base = _times(chain)
    rows = []
    for k in range(trials):
        row_seed = seed + k
        if M == 1:
            pert = base
        else:
            rng = np.random.default_rng(row_seed)
            other = perturb_weights(chain, M, rng) if variant == "weights" else \
                perturb_rows(chain, M, rng)
            pert = _times(other)
        rows.append({
            "tree_id": tid, "seed": row_seed, "M": float(M),
            "tau2": base[0], "tau2_pert": pert[0], "ratio": base[0] / pert[0],
            "tau_inf_ratio": base[1] / pert[1], "tau_ent_ratio": base[2] / pert[2],
        })
    return rows


def ratio_summary(rows: list[dict], key: str = "ratio") -> dict:
    vals = np.array([r[key] for r in rows])
    spread = np.maximum(vals, 1 / vals)
    return {"max": float(spread.max()), "median": float(np.median(spread))}


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{r[k]:.12g}" if isinstance(r[k], float) else r[k])
                        for k in CSV_COLUMNS})
