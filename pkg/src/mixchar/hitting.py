"""Exact escape-time survival curves, threshold times and hitting moments.

For a set A the survival ``S_a(t) = P_a[T_{A^c} > t]`` is a finite exponential
sum.  With ``U, theta`` the eigensystem of the symmetrized block ``Q_A``,

    S_a(t) = sum_i C[a, i] exp(-t (1 - theta_i)),
    C[a, i] = U[a, i] / sqrt(pi_a) * sum_b U[b, i] sqrt(pi_b),

and in discrete time ``exp(-t (1 - theta_i))`` becomes ``theta_i ** t``.
Families of sets are processed in batches grouped by set size so that one
stacked ``eigh`` call and one vectorized bisection handle thousands of sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse.csgraph import connected_components

from .chain import ChainModel
from .errors import BadMode, BadTime, EmptySet, NegativeTime, NotATree, Singular
from .spectral import restricted

MODES = ("continuous", "discrete")
TIE_RTOL = 1e-12
BISECT_RTOL = 1e-13
MAX_DOUBLINGS = 200


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise BadMode(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def _set_index(chain: ChainModel, A) -> tuple:
    idx = tuple(sorted({int(a) for a in A}))
    if not idx:
        raise EmptySet("set must be non-empty")
    if idx[0] < 0 or idx[-1] >= chain.n:
        raise EmptySet("set contains an unknown state")
    return idx


# --- single curves ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """``t -> P_start[T_{A^c} > t]`` as ``sum_i coef_i * decay_i(t)``."""

    A: tuple
    mode: str
    rates: np.ndarray     # 1 - theta_i (continuous decay rates)
    theta: np.ndarray     # eigenvalues of Q_A (discrete multipliers)
    coef: np.ndarray
    start_in_A: bool = True
    mass: float = 1.0     # start mass inside A, the exact value at t = 0

    def __call__(self, t) -> float | np.ndarray:
        return self.survival(t)

    def survival(self, t):
        t_arr = np.asarray(t, dtype=float)
        if (t_arr < 0).any():
            raise NegativeTime("time must be non-negative")
        if not self.start_in_A:
            return np.zeros_like(t_arr) if t_arr.ndim else 0.0
        if self.mode == "continuous":
            vals = np.exp(-np.multiply.outer(t_arr, self.rates)) @ self.coef
        else:
            if not np.all(t_arr == np.round(t_arr)):
                raise BadTime("discrete survival needs integer times")
            k = np.round(t_arr).astype(np.int64)
            vals = np.power.outer(self.theta, k).T @ self.coef if k.ndim else \
                np.power(self.theta, int(k)) @ self.coef
        vals = np.where(t_arr == 0, self.mass, np.clip(vals, 0.0, 1.0))
        return float(vals) if np.ndim(vals) == 0 else vals

    @property
    def decay_rate(self) -> float:
        """Slowest rate, i.e. ``lambda(A)``."""
        return float(self.rates.min())

    def threshold(self, target: float) -> float:
        return threshold_time(self, target)


def _start_weights(chain: ChainModel, idx: tuple, start, spec) -> tuple[np.ndarray, float]:
    """Distribution on A (as weights over idx) and its total mass."""
    pi_A = chain.pi[list(idx)]
    if isinstance(start, str):
        if start == "pi_A":
            return pi_A / pi_A.sum(), 1.0
        if start == "pi":
            return pi_A / pi_A.sum(), float(pi_A.sum())
        if start == "mu_A":
            w = spec.mu[list(idx)]
            return w / w.sum(), 1.0
        start = chain.index(start)
    if isinstance(start, (int, np.integer)):
        w = np.zeros(len(idx))
        if start in idx:
            w[idx.index(start)] = 1.0
            return w, 1.0
        return w, 0.0
    mu = np.asarray(start, dtype=float)
    if mu.shape != (chain.n,) or (mu < 0).any() or abs(mu.sum() - 1) > 1e-9:
        raise ValueError("start distribution must be a probability vector over the states")
    w = mu[list(idx)]
    mass = float(w.sum())
    return (w / mass if mass > 0 else w), mass


def survival_curve(chain: ChainModel, start, A, mode: str = "continuous") -> SurvivalCurve:
    """Build the escape-time survival curve of ``A`` from ``start``.

    ``start`` is a state, ``"pi"``, ``"pi_A"``, ``"mu_A"`` or a distribution.
    Start mass outside A survives for zero time.
    """
    _check_mode(mode)
    chain.require_reversible("survival")
    if mode == "discrete":
        chain.require_discrete("discrete survival")
    idx = _set_index(chain, A)
    if len(idx) == chain.n:
        raise EmptySet("A must be a proper subset (the chain never leaves Omega)")
    spec = restricted(chain, idx)
    w, mass = _start_weights(chain, idx, start, spec)
    sq = np.sqrt(chain.pi[list(idx)])
    U = spec.basis
    C = (U / sq[:, None]) * (sq @ U)[None, :]
    coef = mass * (w @ C)
    return SurvivalCurve(idx, mode, 1.0 - spec.theta, spec.theta.copy(), coef, mass > 0, mass)


def survival(chain: ChainModel, start, A, t, mode: str = "continuous") -> float:
    return survival_curve(chain, start, A, mode).survival(t)


def threshold_time(curve: SurvivalCurve, target: float) -> float:
    """``min{t : survival(t) <= target}``.

    Continuous curves bracket by doubling from ``t_rel(A)`` and bisect to
    ~1e-13 relative; discrete curves bracket the same way over the integers.
    """
    if not target < 1:
        raise ValueError("target must be < 1")
    if target <= 0:
        raise ValueError("target must be positive")
    if not curve.start_in_A:
        return 0.0
    S = curve.survival
    tol_target = target * (1 + TIE_RTOL)
    if S(0) <= tol_target:
        return 0.0
    discrete = curve.mode == "discrete"
    hi = max(1.0 / curve.decay_rate, 1.0)
    if discrete:
        hi = float(np.ceil(hi))
    for _ in range(MAX_DOUBLINGS):
        if S(hi) <= tol_target:
            break
        hi *= 2
    else:  # pragma: no cover - irreducible chains always escape
        raise Singular("survival never reached the target")
    lo = 0.0
    if discrete:
        lo_i, hi_i = 0, int(hi)
        while hi_i - lo_i > 1:
            mid = (lo_i + hi_i) // 2
            if S(mid) <= tol_target:
                hi_i = mid
            else:
                lo_i = mid
        return float(hi_i)
    while hi - lo > BISECT_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if S(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


# --- batched family spectra -------------------------------------------------

@dataclass(frozen=True, eq=False)
class SizeGroup:
    k: int
    set_ids: np.ndarray   # (m,) positions in the family
    idx: np.ndarray       # (m, k) state indices
    theta: np.ndarray     # (m, k) eigenvalues of Q_A, ascending
    coef: np.ndarray      # (m, k, k): coef[s, a, i] = C[a, i]
    pi_w: np.ndarray      # (m, k) pi_A weights


@dataclass(frozen=True, eq=False)
class FamilySpectra:
    """Restricted eigensystems for every set of a family."""

    n: int
    sets: tuple
    groups: tuple
    lam: np.ndarray       # lambda(A) per set
    mass: np.ndarray      # pi(A) per set


@lru_cache(maxsize=16)
def _family_spectra(chain: ChainModel, sets: tuple, with_coef: bool) -> FamilySpectra:
    by_size: dict[int, list[int]] = {}
    for s, A in enumerate(sets):
        if len(A) >= chain.n:
            raise EmptySet("the full state space has no escape time")
        by_size.setdefault(len(A), []).append(s)
    lam = np.empty(len(sets))
    groups = []
    sqrt_pi = np.sqrt(chain.pi)
    for k in sorted(by_size):
        ids = np.array(by_size[k], dtype=np.int64)
        idx = np.array([sets[s] for s in ids], dtype=np.int64).reshape(len(ids), k)
        blocks = chain.sym_Q[idx[:, :, None], idx[:, None, :]]
        if with_coef:
            theta, U = np.linalg.eigh(blocks)
            sq = sqrt_pi[idx]                                   # (m, k)
            proj = np.einsum("mb,mbi->mi", sq, U)               # (m, k)
            coef = U / sq[:, :, None] * proj[:, None, :]
        else:
            theta = np.linalg.eigvalsh(blocks)
            coef = np.empty((len(ids), 0, 0))
        lam[ids] = 1.0 - theta[:, -1]
        pw = chain.pi[idx]
        groups.append(SizeGroup(k, ids, idx, theta, coef, pw / pw.sum(axis=1, keepdims=True)))
    mass = np.array([chain.pi[list(A)].sum() for A in sets])
    return FamilySpectra(chain.n, sets, tuple(groups), lam, mass)


def family_spectra(chain: ChainModel, sets, with_coef: bool = True) -> FamilySpectra:
    sets = tuple(tuple(A) for A in sets)
    return _family_spectra(chain, sets, with_coef)


def restricted_gaps(chain: ChainModel, sets) -> np.ndarray:
    """``lambda(A)`` for every set (no eigenvectors needed)."""
    return family_spectra(chain, sets, with_coef=False).lam


def _eval(coef, theta, t, mode):
    """Survival for stacked curves: coef (..., k), theta (..., k), t (...)."""
    if mode == "continuous":
        return np.einsum("...i,...i->...", coef, np.exp(-t[..., None] * (1.0 - theta)))
    return np.einsum("...i,...i->...", coef, np.power(theta, t[..., None].astype(np.int64)))


def _batched_threshold(coef, theta, target, mode):
    """Vectorized ``min{t : S(t) <= target}`` for stacked curves.

    ``coef`` and ``theta`` have shape (..., k) and ``target`` shape (...).
    The bracket comes from ``S(t) <= sum|coef| * r^t`` with r the slowest mode.
    """
    target = np.broadcast_to(target, coef.shape[:-1]).astype(float)
    tie = target * (1 + TIE_RTOL)
    t0 = np.zeros(target.shape)
    done = _eval(coef, theta, t0, mode) <= tie
    l1 = np.abs(coef).sum(axis=-1)
    if mode == "continuous":
        slow = (1.0 - theta).min(axis=-1)
        hi = np.log(np.maximum(l1, 1.0) / target) / slow
        hi = np.maximum(hi, 1e-300) * (1 + 1e-9) + 1e-12
        lo = np.zeros(target.shape)
        hi = np.where(done, 0.0, hi)
        for _ in range(2000):
            active = (hi - lo) > BISECT_RTOL * hi
            if not active.any():
                break
            mid = 0.5 * (lo + hi)
            ok = _eval(coef, theta, mid, mode) <= target
            hi = np.where(active & ok, mid, hi)
            lo = np.where(active & ~ok, mid, lo)
        return hi
    radius = np.abs(theta).max(axis=-1)
    with np.errstate(divide="ignore"):
        bound = np.log(np.maximum(l1, 1.0) / target) / -np.log(np.maximum(radius, 1e-300))
    hi = np.ceil(np.maximum(bound, 1.0)) + 1
    # guard against rounding in the analytic bound
    while True:
        bad = ~done & (_eval(coef, theta, hi, mode) > tie)
        if not bad.any():
            break
        hi = np.where(bad, 2 * hi, hi)
    lo = np.zeros(target.shape)
    hi = np.where(done, 0.0, hi)
    while True:
        active = (hi - lo) > 1
        if not active.any():
            break
        mid = np.floor(0.5 * (lo + hi))
        ok = _eval(coef, theta, mid, mode) <= tie
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid, lo)
    return hi


def family_thresholds(chain: ChainModel, sets, targets, mode: str = "continuous") -> np.ndarray:
    """Threshold times for every (set, start state) pair.

    Returns an array of shape ``(len(sets), n)``; entry ``[s, x]`` is
    ``min{t : P_x[T_{A_s^c} > t] <= targets[s]}`` and 0 when x is not in A_s.
    """
    _check_mode(mode)
    chain.require_reversible("survival")
    if mode == "discrete":
        chain.require_discrete("discrete survival")
    fs = family_spectra(chain, sets)
    targets = np.asarray(targets, dtype=float)
    out = np.zeros((len(fs.sets), chain.n))
    for g in fs.groups:
        tg = np.repeat(targets[g.set_ids][:, None], g.k, axis=1)
        theta = np.broadcast_to(g.theta[:, None, :], g.coef.shape)
        T = _batched_threshold(g.coef, theta, tg, mode)
        out[g.set_ids[:, None], g.idx] = T
    return out


def family_thresholds_stationary(chain: ChainModel, sets, targets,
                                 mode: str = "continuous") -> np.ndarray:
    """Threshold times started from ``pi_A`` for every set."""
    _check_mode(mode)
    chain.require_reversible("survival")
    if mode == "discrete":
        chain.require_discrete("discrete survival")
    fs = family_spectra(chain, sets)
    targets = np.asarray(targets, dtype=float)
    out = np.zeros(len(fs.sets))
    for g in fs.groups:
        coef = np.einsum("ma,mai->mi", g.pi_w, g.coef)
        out[g.set_ids] = _batched_threshold(coef, g.theta, targets[g.set_ids], mode)
    return out


def family_survival(chain: ChainModel, sets, t, mode: str = "continuous",
                    start: str = "state") -> np.ndarray:
    """Survival at a single time for every set; ``(len(sets), n)`` for
    ``start="state"`` or ``(len(sets),)`` for ``start="pi_A"``."""
    fs = family_spectra(chain, sets)
    per_state = start == "state"
    out = np.zeros((len(fs.sets), chain.n)) if per_state else np.zeros(len(fs.sets))
    for g in fs.groups:
        if per_state:
            theta = np.broadcast_to(g.theta[:, None, :], g.coef.shape)
            vals = _eval(g.coef, theta, np.full(g.coef.shape[:2], float(t)), mode)
            out[g.set_ids[:, None], g.idx] = np.clip(vals, 0, 1)
        else:
            coef = np.einsum("ma,mai->mi", g.pi_w, g.coef)
            vals = _eval(coef, g.theta, np.full(len(g.set_ids), float(t)), mode)
            out[g.set_ids] = np.clip(vals, 0, 1)
    return out


# --- expected hitting times -------------------------------------------------

def _hitting_system(chain: ChainModel, B, mode: str):
    _check_mode(mode)
    idx = _set_index(chain, B)
    rest = [v for v in range(chain.n) if v not in set(idx)]
    if mode == "continuous":
        M = -chain.generator[np.ix_(rest, rest)]
    else:
        chain.require_discrete("discrete hitting times")
        M = np.eye(len(rest)) - chain.P[np.ix_(rest, rest)]
    return rest, M


def hitting_moments(chain: ChainModel, B, mode: str = "continuous") -> tuple[np.ndarray, np.ndarray]:
    """``(E_x[T_B], E_x[T_B^2])`` for every state x."""
    rest, M = _hitting_system(chain, B, mode)
    m1 = np.zeros(chain.n)
    m2 = np.zeros(chain.n)
    if not rest:
        return m1, m2
    try:
        h = np.linalg.solve(M, np.ones(len(rest)))
        if mode == "continuous":
            s = 2.0 * np.linalg.solve(M, h)
        else:
            s = np.linalg.solve(M, 2.0 * h - 1.0)
    except np.linalg.LinAlgError as exc:
        raise Singular(f"hitting system is singular: {exc}") from None
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(s))):
        raise Singular("hitting system produced non-finite values")
    m1[rest] = h
    m2[rest] = s
    return m1, m2


def expected_hitting(chain: ChainModel, start, B, mode: str = "continuous",
                     moment: int = 1) -> float:
    """``E_start[T_B^moment]`` for a state or distribution start."""
    if moment not in (1, 2):
        raise ValueError("moment must be 1 or 2")
    m1, m2 = hitting_moments(chain, B, mode)
    m = m1 if moment == 1 else m2
    if isinstance(start, str) and start == "pi":
        return float(chain.pi @ m)
    if isinstance(start, (int, np.integer, str)):
        return float(m[chain.index(start)])
    return float(np.asarray(start, dtype=float) @ m)


# --- tree flow ratio --------------------------------------------------------

def tree_support_edges(chain: ChainModel) -> list[tuple[int, int]]:
    """Undirected support edges; raises NotATree unless they form a tree."""
    S = (chain.P > 0) | (chain.P.T > 0)
    np.fill_diagonal(S, False)
    edges = [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(S)))]
    ncomp, _ = connected_components(S, directed=False)
    if len(edges) != chain.n - 1 or ncomp != 1:
        raise NotATree("transition support is not a tree")
    return edges


def subtree_below(chain: ChainModel, y: int, z: int) -> list[int]:
    """States on y's side of the tree edge {y, z}."""
    edges = tree_support_edges(chain)
    if (min(y, z), max(y, z)) not in edges:
        raise NotATree(f"{y} and {z} are not adjacent")
    adj: dict[int, list[int]] = {v: [] for v in range(chain.n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen, stack = {y}, [y]
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in seen and not (v == y and u == z):
                seen.add(u)
                stack.append(u)
    return sorted(seen)


def kac_phi(chain: ChainModel, y, z) -> float:
    """Stationary flow ratio ``pi(y) G(y, z) / pi(T_y)`` across the edge y -> z."""
    y, z = chain.index(y), chain.index(z)
    below = subtree_below(chain, y, z)
    return float(chain.pi[y] * chain.generator[y, z] / chain.pi[below].sum())
