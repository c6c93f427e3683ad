"""L_p and relative-entropy distances to stationarity and mixing times.

Distances are measured from a fixed start: ``d_{p,x}(t) = ||P_x^t - pi||_{p,pi}``
with ``||sigma||_{p,pi} = ||sigma / pi||_p``.  Three clocks are supported:
``continuous`` (heat kernel), ``discrete`` (powers of P) and ``averaged``
(``(P^t + P^{t-1}) / 2``).  All profiles are nonincreasing in t for
reversible chains, so mixing times come from bracketing plus bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .chain import ChainModel
from .errors import (
    BadMode,
    BadTime,
    DomainError,
    NegativeTime,
    NotMixing,
    SupportViolation,
)
from .spectral import decompose, relaxation_times

MODES = ("continuous", "discrete", "averaged")
METRICS = ("L1", "L2", "Linf", "Entropy")
DISCRETE_CAP = 10 ** 6
BISECT_RTOL = 1e-13


def _norm_metric(p) -> str:
    table = {1: "L1", "1": "L1", "L1": "L1", 2: "L2", "2": "L2", "L2": "L2",
             "inf": "Linf", "Linf": "Linf", math.inf: "Linf", "ent": "Entropy",
             "entropy": "Entropy", "Entropy": "Entropy"}
    try:
        return table[p]
    except (KeyError, TypeError):
        raise BadMode(f"unsupported distance {p!r}; use 1, 2, inf or entropy") from None


def _check_mode(chain: ChainModel, mode: str) -> None:
    if mode not in MODES:
        raise BadMode(f"mode must be one of {MODES}, got {mode!r}")
    chain.require_reversible("mixing distances")
    if mode != "continuous":
        chain.require_discrete(f"{mode} mixing")


def _multipliers(chain: ChainModel, t: np.ndarray, mode: str) -> np.ndarray:
    """Spectral multipliers m_i(t) per start, shape (len(t), n)."""
    dec = decompose(chain)
    lam = dec.eigenvalues
    t = np.asarray(t, dtype=float)
    if (t < 0).any():
        raise NegativeTime("time must be non-negative")
    if mode == "continuous":
        return np.exp(-np.multiply.outer(t, dec.gaps))
    lowest = 1 if mode == "averaged" else 0
    if np.any(t != np.round(t)) or np.any(t < lowest):
        raise BadTime(f"{mode} time must be an integer >= {lowest}")
    k = np.round(t).astype(np.int64)
    if mode == "discrete":
        return np.power.outer(lam, k).T
    return np.power.outer(lam, k - 1).T * (1 + lam) / 2


def _rows(chain: ChainModel, starts: np.ndarray, t: np.ndarray, mode: str) -> np.ndarray:
    """Densities ``P_x^t(y) / pi(y)`` for paired (start, time) arrays."""
    dec = decompose(chain)
    F = dec.eigenfunctions
    m = _multipliers(chain, t, mode)
    return np.einsum("ri,yi->ry", F[starts] * m, F)


def _profile(chain: ChainModel, starts: np.ndarray, t: np.ndarray, metric: str,
             mode: str) -> np.ndarray:
    pi = chain.pi
    if metric == "L2":
        F = decompose(chain).eigenfunctions
        m = _multipliers(chain, t, mode)
        sq = (F[starts, 1:] ** 2 * m[:, 1:] ** 2).sum(axis=1)
        return np.sqrt(np.maximum(sq, 0.0))
    h = _rows(chain, starts, t, mode)
    if metric == "L1":
        return np.abs(h - 1) @ pi
    if metric == "Linf":
        return np.abs(h - 1).max(axis=1)
    mu = np.clip(h, 0, None) * pi
    mu /= mu.sum(axis=1, keepdims=True)
    return np.array([rel_entropy(row, pi) for row in mu])


def lp_distance(chain: ChainModel, x, t: float, p=2, mode: str = "continuous") -> float:
    """``||P_x^t - pi||_{p,pi}`` for p in {1, 2, inf} (or "entropy")."""
    _check_mode(chain, mode)
    metric = _norm_metric(p)
    x = chain.index(x)
    return float(_profile(chain, np.array([x]), np.array([float(t)]), metric, mode)[0])


def distance_profile(chain: ChainModel, t: float, p=2, mode: str = "continuous") -> np.ndarray:
    """``d_{p,x}(t)`` for every start x."""
    _check_mode(chain, mode)
    metric = _norm_metric(p)
    xs = np.arange(chain.n)
    return _profile(chain, xs, np.full(chain.n, float(t)), metric, mode)


def worst_distance(chain: ChainModel, t: float, p=2, mode: str = "continuous") -> float:
    return float(distance_profile(chain, t, p, mode).max())


def rel_entropy(mu, pi) -> float:
    """``D(mu || pi)`` in nats, with ``0 log 0 = 0``."""
    mu = np.asarray(mu, dtype=float)
    pi = np.asarray(pi, dtype=float)
    pos = mu > 0
    if np.any(pi[pos] <= 0):
        raise SupportViolation("mu charges a state where pi vanishes")
    return float(max(np.sum(mu[pos] * np.log(mu[pos] / pi[pos])), 0.0))


# --- mixing times -----------------------------------------------------------

@dataclass(frozen=True)
class MixingQuery:
    metric: str = "L2"
    mode: str = "continuous"
    epsilon: float = 0.5
    start: object = None      # None means worst case over starts

    def __post_init__(self):
        object.__setattr__(self, "metric", _norm_metric(self.metric))
        if self.mode not in MODES:
            raise BadMode(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")


def _continuous_times(chain, starts, metric, eps, rtol=BISECT_RTOL):
    n = len(starts)
    t_rel, _ = relaxation_times(chain)
    zero = np.zeros(n)
    done = _profile(chain, starts, zero, metric, "continuous") <= eps
    hi = np.full(n, max(t_rel, 1e-3))
    for _ in range(200):
        bad = ~done & (_profile(chain, starts, hi, metric, "continuous") > eps)
        if not bad.any():
            break
        hi = np.where(bad, 2 * hi, hi)
    lo = zero.copy()
    # preflight: the profile must be nonincreasing on a grid inside the bracket
    grid = np.linspace(0, 1, 33)[:, None] * hi[None, :]
    vals = np.array([_profile(chain, starts, g, metric, "continuous") for g in grid])
    monotone = np.all(np.diff(vals, axis=0) <= 1e-12 * np.maximum(1, vals[:-1]))
    if not monotone:
        # scan the grid for the first crossing, then bisect inside that cell
        first = np.argmax(vals <= eps, axis=0)
        hi = np.where(first > 0, grid[first, np.arange(n)], hi)
        lo = np.where(first > 0, grid[np.maximum(first - 1, 0), np.arange(n)], lo)
    hi = np.where(done, 0.0, hi)
    for _ in range(400):
        active = (hi - lo) > rtol * hi
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        ok = _profile(chain, starts, mid, metric, "continuous") <= eps
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid, lo)
    return hi


def _integer_times(chain, starts, metric, mode, eps, cap):
    n = len(starts)
    lowest = 1 if mode == "averaged" else 0
    at_cap = _profile(chain, starts, np.full(n, float(cap)), metric, mode)
    if np.any(at_cap > eps):
        _, t_abs = relaxation_times(chain)
        raise NotMixing(f"{mode} {metric} distance stays above {eps} up to t={cap}",
                        t_rel_absolute=t_abs)
    lo = np.full(n, float(lowest - 1))
    hi = np.full(n, float(lowest))
    # exponential search then integer bisection; profiles are nonincreasing
    while True:
        bad = _profile(chain, starts, hi, metric, mode) > eps
        if not bad.any():
            break
        lo = np.where(bad, hi, lo)
        hi = np.where(bad, np.minimum(2 * hi + 1, cap), hi)
    while True:
        active = (hi - lo) > 1
        if not active.any():
            break
        mid = np.floor(0.5 * (lo + hi))
        mid = np.where(active, mid, hi)
        ok = _profile(chain, starts, np.maximum(mid, lowest), metric, mode) <= eps
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid, lo)
    return hi


def mixing_times(chain: ChainModel, metric="L2", mode: str = "continuous",
                 epsilon: float = 0.5, cap: int = DISCRETE_CAP,
                 rtol: float = BISECT_RTOL) -> np.ndarray:
    """Per-start mixing times ``tau_{p,x}(epsilon)`` for every state."""
    query = MixingQuery(metric, mode, epsilon)
    _check_mode(chain, mode)
    starts = np.arange(chain.n)
    if mode == "continuous":
        return _continuous_times(chain, starts, query.metric, epsilon, rtol)
    return _integer_times(chain, starts, query.metric, mode, epsilon, cap)


def mixing_time(chain: ChainModel, query: MixingQuery | None = None,
                rtol: float = BISECT_RTOL, **kw) -> float:
    """``tau_p(epsilon)``: worst case over starts unless ``query.start`` is set."""
    query = query or MixingQuery(**kw)
    _check_mode(chain, query.mode)
    if query.start is None:
        starts = np.arange(chain.n)
    else:
        starts = np.array([chain.index(query.start)])
    if query.mode == "continuous":
        times = _continuous_times(chain, starts, query.metric, query.epsilon, rtol)
    else:
        times = _integer_times(chain, starts, query.metric, query.mode, query.epsilon,
                               DISCRETE_CAP)
    return float(times.max())


# --- constrained minima and the entropy constant ----------------------------

def u(x: float, y: float) -> float:
    """Entropy of the extremal law putting extra mass y on a set of mass x.

    ``u(x,y) = [y + x(1-y)] log(1 + y(1-x)/x) + (1-y)(1-x) log(1-y)``.
    """
    a = y + x * (1 - y)
    first = a * math.log1p(y * (1 - x) / x)
    second = 0.0 if y >= 1 else (1 - y) * (1 - x) * math.log1p(-y)
    return first + second


def lagrange_minima(piA: float, delta: float) -> tuple[float, float]:
    """Minimal L2 distance and relative entropy over laws with ``mu(A) >= pi(A) + delta pi(A^c)``.

    Returns ``(delta * sqrt((1-x)/x), u(x, delta))`` with ``x = pi(A)``.
    """
    if not 0 < piA < 1:
        raise DomainError("pi(A) must lie in (0, 1)")
    if delta == 0:
        return 0.0, 0.0
    if not 0 < delta < 1:
        raise DomainError("delta must lie in [0, 1)")
    return delta * math.sqrt((1 - piA) / piA), u(piA, delta)


def _y_cap(x: float) -> float:
    return (0.99 - x) / (1 - x)


def _y_star(x: float) -> float:
    """Solution of u(x, y) = 1/2 in y (u is increasing in y there)."""
    return brentq(lambda y: u(x, y) - 0.5, 0.0, _y_cap(x), xtol=1e-15, rtol=1e-15)


def _c_grid() -> np.ndarray:
    near0 = np.logspace(-300, -1, 3000)
    body = np.linspace(0.1, 0.5, 4001)
    return np.unique(np.concatenate([near0, body]))


@lru_cache(maxsize=1)
def derive_c_ent() -> tuple[float, float]:
    """Return ``(C', C_ent)`` for the entropy characterization.

    C' is the least constant with ``u(x, min(C'/|log x|, (0.99-x)/(1-x))) >= 1/2``
    on (0, 1/2]; since u increases in y this is ``sup_x y*(x) |log x|`` where
    ``u(x, y*(x)) = 1/2``.  Then ``C_ent = sup_x (x|log x| + C'(1-x))``.
    """
    xs = _c_grid()
    need = np.array([_y_star(x) * abs(math.log(x)) for x in xs])
    i = int(np.argmax(need))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    res = minimize_scalar(lambda x: -_y_star(x) * abs(math.log(x)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-14})
    c_prime = max(float(need[i]), float(-res.fun))
    c_ent_grid = float(np.max(xs * np.abs(np.log(xs)) + c_prime * (1 - xs)))
    c_ent = max(c_ent_grid, c_prime + math.exp(-1 - c_prime))
    return c_prime, c_ent


def c_ent_condition(c_prime: float, xs=None) -> np.ndarray:
    """``u(x, min(C'/|log x|, cap(x))) - 1/2`` on a grid (all >= 0 when valid)."""
    xs = _c_grid() if xs is None else np.asarray(xs, dtype=float)
    return np.array([u(x, min(c_prime / abs(math.log(x)), _y_cap(x))) - 0.5 for x in xs])


def l2_level_bound(h: np.ndarray, pi: np.ndarray, ell: float) -> float:
    """``ell^2 + int_ell^inf 2s pi(h - 1 >= s) ds`` evaluated as a finite sum."""
    f = h - 1
    return float(ell ** 2 + pi @ np.maximum(0.0, np.where(f >= ell, f ** 2 - ell ** 2, 0.0)))
