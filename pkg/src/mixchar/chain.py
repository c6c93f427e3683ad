"""Construction and validation of finite Markov chains.

A :class:`ChainModel` is the universal input of the toolkit.  It carries a
row-stochastic jump matrix ``P``, its stationary distribution and, for chains
produced by :func:`rescale_rows`, per-state jump rates.  With rates present the
continuous-time dynamics are generated by ``diag(rates) (P - I)``; otherwise
by ``P - I``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Hashable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    BadParams,
    Disconnected,
    NonPositiveRate,
    NotReversible,
    NotStochastic,
    Reducible,
    SpecParse,
)

ROW_SUM_TOL = 1e-12
REVERSIBILITY_TOL = 1e-12
STATIONARITY_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChainModel:
    states: tuple
    P: np.ndarray
    pi: np.ndarray
    reversible: bool
    source: str
    rates: np.ndarray | None = None
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.states)

    def index(self, state: Hashable) -> int:
        """Position of a state label (ints are accepted as positions too)."""
        try:
            return self.states.index(state)
        except ValueError:
            if isinstance(state, (int, np.integer)) and 0 <= state < self.n:
                return int(state)
            if isinstance(state, str):
                for i, s in enumerate(self.states):
                    if str(s) == state:
                        return i
            raise KeyError(f"unknown state {state!r}") from None

    @property
    def generator_form(self) -> bool:
        return self.rates is not None

    @cached_property
    def generator(self) -> np.ndarray:
        r = np.ones(self.n) if self.rates is None else self.rates
        return _frozen(r[:, None] * (self.P - np.eye(self.n)))

    @cached_property
    def Q(self) -> np.ndarray:
        """Additive symmetrization of the kernel in L2(pi).

        For generator-form chains this is ``I + (G + G*)/2`` so that the
        continuous-time rates are always ``1 - eigenvalue``.
        """
        K = np.eye(self.n) + self.generator
        flow = self.pi[:, None] * K
        return _frozen((flow + flow.T) / 2 / self.pi[:, None])

    @cached_property
    def sym_Q(self) -> np.ndarray:
        """``D^{1/2} Q D^{-1/2}``, a symmetric matrix."""
        s = np.sqrt(self.pi)
        S = s[:, None] * self.Q / s[None, :]
        return _frozen((S + S.T) / 2)

    @property
    def pi_min(self) -> float:
        return float(self.pi.min())

    def require_reversible(self, what: str = "this operation") -> None:
        if not self.reversible:
            raise NotReversible(f"{what} requires a reversible chain")

    def require_discrete(self, what: str = "this operation") -> None:
        if self.rates is not None:
            raise BadParams(f"{what} is defined for unit-rate chains only; "
                            "rescaled chains support continuous-time operations")

    def with_name(self, name: str) -> "ChainModel":
        return ChainModel(self.states, self.P, self.pi, self.reversible,
                          self.source, self.rates, name)


@dataclass(frozen=True)
class WeightedNetwork:
    vertices: tuple
    edges: tuple  # (u, v, conductance); u == v is a self-loop

    @classmethod
    def from_edges(cls, edges: Sequence[Sequence[Any]], vertices: Sequence | None = None):
        es = tuple((u, v, float(c)) for u, v, c in edges)
        if vertices is None:
            seen: dict = {}
            for u, v, _ in es:
                seen.setdefault(u, None)
                seen.setdefault(v, None)
            vertices = tuple(seen)
        return cls(tuple(vertices), es)

    def conductance_matrix(self) -> np.ndarray:
        pos = {v: i for i, v in enumerate(self.vertices)}
        C = np.zeros((len(self.vertices),) * 2)
        for u, v, c in self.edges:
            if not c > 0:
                raise BadParams(f"conductance of edge {u}-{v} must be positive")
            if u not in pos or v not in pos:
                raise BadParams(f"edge {u}-{v} uses an unknown vertex")
            i, j = pos[u], pos[v]
            C[i, j] += c
            if i != j:
                C[j, i] += c
        return C


def gth_stationary(P: np.ndarray) -> np.ndarray:
    """Stationary law by Grassmann-Taksar-Heyman elimination (no subtractions)."""
    A = np.array(P, dtype=float)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0:
            raise Reducible("chain is reducible (GTH pivot vanished)")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    x = np.zeros(n)
    x[0] = 1.0
    for k in range(1, n):
        x[k] = x[:k] @ A[:k, k]
    return x / x.sum()


def detailed_balance_defect(P: np.ndarray, pi: np.ndarray) -> float:
    flow = pi[:, None] * P
    return float(np.abs(flow - flow.T).max())


def _scc_count(P: np.ndarray) -> int:
    count, _ = connected_components(P > 0, directed=True, connection="strong")
    return int(count)


def from_matrix(P, states: Sequence | None = None, name: str = "",
                source: str = "matrix") -> ChainModel:
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise NotStochastic("P must be a non-empty square matrix")
    if not np.all(np.isfinite(P)) or (P < 0).any():
        raise NotStochastic("P must have finite non-negative entries")
    dev = np.abs(P.sum(axis=1) - 1.0)
    if dev.max() > ROW_SUM_TOL:
        row = int(dev.argmax())
        raise NotStochastic(f"row {row} sums to {P[row].sum()!r}")
    n = P.shape[0]
    if _scc_count(P) > 1:
        raise Reducible("transition graph has more than one strongly connected component")
    pi = gth_stationary(P)
    if np.abs(pi @ P - pi).max() > STATIONARITY_TOL or (pi <= 0).any():
        raise Reducible("could not compute a positive stationary distribution")
    states = tuple(range(n)) if states is None else tuple(states)
    if len(states) != n or len(set(states)) != n:
        raise BadParams("state labels must be distinct and match the matrix size")
    reversible = detailed_balance_defect(P, pi) <= REVERSIBILITY_TOL
    return ChainModel(states, _frozen(P), _frozen(pi), reversible, source, None, name)


def from_network(net: WeightedNetwork, name: str = "") -> ChainModel:
    C = net.conductance_matrix()
    n = C.shape[0]
    if n == 0:
        raise BadParams("network has no vertices")
    count, _ = connected_components(C > 0, directed=False)
    if count > 1 or (n == 1 and C[0, 0] <= 0):
        raise Disconnected("network is not connected")
    c_v = C.sum(axis=1)
    P = C / c_v[:, None]
    pi = c_v / c_v.sum()
    # rows of C/c_v can drift from 1 by an ulp; renormalize to keep the invariant
    P = P / P.sum(axis=1, keepdims=True)
    return ChainModel(tuple(net.vertices), _frozen(P), _frozen(pi), True, "network", None, name)


def network_of(chain: ChainModel) -> WeightedNetwork:
    """Conductances c(x,y) = pi(x) P(x,y) of a reversible chain."""
    chain.require_reversible("network_of")
    chain.require_discrete("network_of")
    flow = chain.pi[:, None] * chain.P
    edges = []
    for i in range(chain.n):
        for j in range(i, chain.n):
            if flow[i, j] > 0:
                edges.append((chain.states[i], chain.states[j], float(flow[i, j])))
    return WeightedNetwork(chain.states, tuple(edges))


def lazy(chain: ChainModel, a: float) -> ChainModel:
    if not 0 <= a < 1:
        raise BadParams("laziness must lie in [0, 1)")
    chain.require_discrete("lazy")
    P = a * np.eye(chain.n) + (1 - a) * chain.P
    name = f"lazy({chain.name},{a:g})" if chain.name else ""
    return from_matrix(P, chain.states, name=name, source=chain.source)


def rescale_rows(chain: ChainModel, r) -> ChainModel:
    """Multiply row x of the generator by r[x]; same jump matrix, new stationary law."""
    chain.require_reversible("rescale_rows")
    r = np.asarray(r, dtype=float)
    if r.shape != (chain.n,):
        raise BadParams(f"need one rate per state ({chain.n})")
    if not np.all(np.isfinite(r)) or (r <= 0).any():
        raise NonPositiveRate("all rates must be positive")
    rates = r if chain.rates is None else chain.rates * r
    w = chain.pi / r
    pi = w / w.sum()
    G = rates[:, None] * (chain.P - np.eye(chain.n))
    flow = pi[:, None] * G
    reversible = float(np.abs(flow - flow.T).max()) <= REVERSIBILITY_TOL
    name = f"rescaled({chain.name})" if chain.name else ""
    return ChainModel(chain.states, chain.P, _frozen(pi), reversible, "rescale",
                      _frozen(rates), name)


# --- named families ---------------------------------------------------------

def _tree_edges_net(edges, vertices=None) -> WeightedNetwork:
    return WeightedNetwork.from_edges(edges, vertices)


def cycle(n: int) -> ChainModel:
    if n < 3:
        raise BadParams("cycle needs n >= 3")
    net = _tree_edges_net([(i, (i + 1) % n, 1.0) for i in range(n)], range(n))
    return from_network(net, name=f"cycle({n})")


def path(n: int) -> ChainModel:
    if n < 2:
        raise BadParams("path needs n >= 2")
    net = _tree_edges_net([(i, i + 1, 1.0) for i in range(n - 1)], range(n))
    return from_network(net, name=f"path({n})")


def clique(n: int) -> ChainModel:
    if n < 2:
        raise BadParams("clique needs n >= 2")
    P = (np.ones((n, n)) - np.eye(n)) / (n - 1)
    return from_matrix(P, name=f"clique({n})", source="family")


def hypercube(d: int) -> ChainModel:
    if d < 1:
        raise BadParams("hypercube needs d >= 1")
    n = 2 ** d
    P = np.zeros((n, n))
    for x in range(n):
        for i in range(d):
            P[x, x ^ (1 << i)] = 1.0 / d
    states = tuple(format(x, f"0{d}b") for x in range(n))
    return from_matrix(P, states, name=f"hypercube({d})", source="family")


def binary_tree(depth: int) -> ChainModel:
    if depth < 1:
        raise BadParams("binary_tree needs depth >= 1")
    n = 2 ** (depth + 1) - 1
    net = _tree_edges_net([((c - 1) // 2, c, 1.0) for c in range(1, n)], range(n))
    return from_network(net, name=f"binary_tree({depth})")


def star(leaves: int) -> ChainModel:
    if leaves < 1:
        raise BadParams("star needs at least one leaf")
    net = _tree_edges_net([(0, i, 1.0) for i in range(1, leaves + 1)], range(leaves + 1))
    return from_network(net, name=f"star({leaves})")


def two_point(p: float) -> ChainModel:
    """Two states whose transition rows both equal (p, 1-p)."""
    if not 0 < p < 1:
        raise BadParams("two_point needs p in (0, 1)")
    P = np.array([[p, 1 - p], [p, 1 - p]])
    return from_matrix(P, name=f"two_point({p:g})", source="family")


def birth_death(up: Sequence[float], down: Sequence[float]) -> ChainModel:
    """P(i, i+1) = up[i], P(i+1, i) = down[i]; holding fills the diagonal."""
    up = np.asarray(up, dtype=float)
    down = np.asarray(down, dtype=float)
    if up.shape != down.shape or up.ndim != 1 or len(up) == 0:
        raise BadParams("up and down must be equal-length non-empty lists")
    if (up <= 0).any() or (down <= 0).any():
        raise BadParams("birth and death probabilities must be positive")
    n = len(up) + 1
    P = np.zeros((n, n))
    for i in range(n - 1):
        P[i, i + 1] = up[i]
        P[i + 1, i] = down[i]
    hold = 1 - P.sum(axis=1)
    if (hold < -ROW_SUM_TOL).any():
        raise BadParams("outgoing probabilities exceed 1")
    P[np.diag_indices(n)] = np.clip(hold, 0, None)
    return from_matrix(P, name=f"birth_death({n})", source="family")


def random_tree(n: int, seed: int = 0xC0FFEE, low: float = 0.25, high: float = 4.0) -> ChainModel:
    """Random recursive tree on n vertices, edge weights log-uniform on [low, high]."""
    if n < 2:
        raise BadParams("random_tree needs n >= 2")
    if not 0 < low <= high:
        raise BadParams("need 0 < low <= high")
    rng = np.random.default_rng(seed)
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        w = float(np.exp(rng.uniform(np.log(low), np.log(high))))
        edges.append((u, v, w))
    return from_network(_tree_edges_net(edges, range(n)), name=f"random_tree({n},{seed})")


FAMILIES = {
    "cycle": cycle,
    "path": path,
    "clique": clique,
    "hypercube": hypercube,
    "binary_tree": binary_tree,
    "star": star,
    "two_point": two_point,
    "birth_death": birth_death,
    "random_tree": random_tree,
}

# the parameter swept by ``mixchar sweep`` for each family
SIZE_PARAM = {
    "cycle": "n", "path": "n", "clique": "n", "hypercube": "d",
    "binary_tree": "depth", "star": "leaves", "random_tree": "n", "two_point": "p",
}


def family(name: str, params: dict | None = None) -> ChainModel:
    params = dict(params or {})
    if name == "lazy":
        base = params.pop("base", None)
        if base is None:
            raise BadParams("lazy needs a 'base' chain")
        base_chain = base if isinstance(base, ChainModel) else from_spec(base)
        return lazy(base_chain, float(params.pop("a", 0.5)))
    try:
        fn = FAMILIES[name]
    except KeyError:
        raise BadParams(f"unknown family {name!r}") from None
    try:
        return fn(**params)
    except TypeError as exc:
        raise BadParams(f"bad parameters for {name}: {exc}") from None


# --- chain spec files -------------------------------------------------------

def from_spec(spec: dict) -> ChainModel:
    if not isinstance(spec, dict) or "type" not in spec:
        raise SpecParse("chain spec must be an object with a 'type' field")
    kind = spec["type"]
    name = spec.get("name", "")
    try:
        if kind == "matrix":
            chain = from_matrix(spec["P"], spec.get("states"), source="matrix")
        elif kind == "network":
            net = WeightedNetwork.from_edges(spec["edges"], spec.get("vertices"))
            chain = from_network(net)
        elif kind == "family":
            chain = family(spec["name"], spec.get("params", {}))
            name = spec.get("id", chain.name)
        elif kind == "rescale":
            chain = rescale_rows(from_spec(spec["base"]), spec["r"])
        else:
            raise SpecParse(f"unknown chain spec type {kind!r}")
    except KeyError as exc:
        raise SpecParse(f"chain spec of type {kind!r} is missing field {exc}") from None
    return chain.with_name(name or chain.name or kind)


def load_chain(path_or_text: str, *, is_text: bool = False) -> ChainModel:
    text = path_or_text
    if not is_text:
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParse(f"malformed JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return from_spec(spec)
