"""Enumeration of connected state sets of small stationary mass."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse.csgraph import connected_components

from .chain import ChainModel
from .errors import CapExceeded, EmptySet

DEFAULT_CAP = 10 ** 6
MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConnectedSetFamily:
    delta: float
    sets: tuple          # tuples of sorted state indices
    complete: bool
    cap: int

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    pi: np.ndarray | None = None

    @cached_property
    def masses(self) -> np.ndarray:
        return np.array([self.pi[list(A)].sum() for A in self.sets])

    def restrict(self, delta: float) -> "ConnectedSetFamily":
        keep = tuple(A for A, m in zip(self.sets, self.masses) if m <= delta + MASS_TOL)
        return ConnectedSetFamily(delta, keep, self.complete, self.cap, self.pi)


def is_connected(chain: ChainModel, A) -> bool:
    """True iff every a in A reaches every b in A without leaving A."""
    idx = sorted({int(a) for a in A})
    if not idx:
        raise EmptySet("A must be non-empty")
    if len(idx) == 1:
        return True
    sub = chain.P[np.ix_(idx, idx)] > 0
    count, _ = connected_components(sub, directed=True, connection="strong")
    return count == 1


def support_adjacency(chain: ChainModel) -> list[list[int]]:
    S = (chain.P > 0) | (chain.P.T > 0)
    np.fill_diagonal(S, False)
    return [sorted(np.flatnonzero(S[v]).tolist()) for v in range(chain.n)]


def _ring_order(adj: list[list[int]]) -> tuple[list[int], bool] | None:
    """Vertex order if the support graph is a path or a cycle, else None."""
    n = len(adj)
    degs = [len(a) for a in adj]
    if n < 2 or max(degs) > 2:
        return None
    ends = [v for v in range(n) if degs[v] == 1]
    if len(ends) == 2:
        is_cycle = False
        start = min(ends)
    elif not ends and all(d == 2 for d in degs):
        is_cycle = True
        start = 0
    else:
        return None
    order, prev, cur = [start], -1, start
    while len(order) < n:
        nxt = [u for u in adj[cur] if u != prev]
        if not nxt:
            return None
        prev, cur = cur, nxt[0]
        if cur == start:
            return None
        order.append(cur)
    return order, is_cycle


def _intervals(order, is_cycle, pi, limit):
    n = len(order)
    if not is_cycle:
        for i in range(n):
            mass = 0.0
            for j in range(i, n):
                mass += pi[order[j]]
                if mass > limit:
                    break
                yield tuple(sorted(order[i:j + 1]))
        return
    for i in range(n):
        mass = 0.0
        for length in range(1, n):
            mass += pi[order[(i + length - 1) % n]]
            if mass > limit:
                break
            yield tuple(sorted(order[(i + k) % n] for k in range(length)))
    if pi.sum() <= limit:
        yield tuple(range(n))


def _esu(adj, pi, limit):
    """Each connected vertex set exactly once, rooted at its smallest vertex."""
    n = len(adj)
    for v in range(n):
        if pi[v] > limit:
            continue
        stack = [((v,), pi[v], [u for u in adj[v] if u > v], frozenset(adj[v]) | {v})]
        while stack:
            S, mass, ext, closed = stack.pop()
            yield S
            ext = list(ext)
            while ext:
                w = ext.pop()
                if mass + pi[w] > limit:
                    continue
                new = [u for u in adj[w] if u > v and u not in closed]
                stack.append((S + (w,), mass + pi[w], ext + new, closed | set(adj[w])))


def enumerate_sets(chain: ChainModel, delta: float = 0.5, cap: int = DEFAULT_CAP,
                   strict: bool = False) -> ConnectedSetFamily:
    """All connected sets A with pi(A) <= delta (up to ``cap`` of them)."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if cap < 1:
        raise ValueError("cap must be positive")
    adj = support_adjacency(chain)
    pi = chain.pi
    limit = delta + MASS_TOL
    ring = _ring_order(adj)
    gen = _intervals(*ring, pi, limit) if ring else _esu(adj, pi, limit)
    out = set()
    complete = True
    for S in gen:
        S = tuple(sorted(S))
        if not chain.reversible and not is_connected(chain, S):
            continue
        if S not in out and len(out) >= cap:
            complete = False
            break
        out.add(S)
    if not complete:
        if strict:
            raise CapExceeded(f"more than {cap} connected sets")
        warnings.warn(f"set enumeration stopped at cap={cap}; results are lower-bound estimates",
                      RuntimeWarning, stacklevel=2)
    ordered = tuple(sorted(out, key=lambda s: (len(s), s)))
    return ConnectedSetFamily(float(delta), ordered, complete, int(cap), chain.pi)


def brute_force_sets(chain: ChainModel, delta: float = 0.5) -> ConnectedSetFamily:
    """Reference enumeration over all 2^n subsets."""
    out = []
    for k in range(1, chain.n + 1):
        for S in itertools.combinations(range(chain.n), k):
            if chain.pi[list(S)].sum() <= delta + MASS_TOL and is_connected(chain, S):
                out.append(S)
    out.sort(key=lambda s: (len(s), s))
    return ConnectedSetFamily(float(delta), tuple(out), True, len(out) + 1, chain.pi)
