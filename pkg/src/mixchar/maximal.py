"""Maximal functions ``f*(x) = sup_t |S_t f(x)|`` and the surprise bound.

For a reversible chain ``S_t f(x) = sum_i a_i exp(-gamma_i t)`` with
``a_i = f_i(x) <f, f_i>_pi``.  An exponential sum with m distinct rates has at
most m - 1 critical points, so the supremum is found exactly by sampling the
sign of the derivative on a log grid and bisecting every sign change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import ChainModel
from .errors import BadMode
from .spectral import CLUSTER_TOL, decompose

MODES = ("continuous", "discrete", "discrete_even")
TAIL_TOL = 1e-12
GRID = 384
CHUNK = 4096
DISCRETE_CAP = 10 ** 6


def _merge_rates(gamma: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Combine coefficients of numerically equal rates."""
    order = np.argsort(gamma, kind="stable")
    g = gamma[order]
    groups = np.concatenate([[0], np.cumsum(np.diff(g) > CLUSTER_TOL)])
    rates = np.array([g[groups == k].mean() for k in range(groups[-1] + 1)])
    merged = np.zeros((a.shape[0], len(rates)))
    np.add.at(merged.T, groups, a[:, order].T)
    return rates, merged


def sup_exp_sum(a: np.ndarray, gamma: np.ndarray, tol: float = TAIL_TOL):
    """``sup_{t >= 0} |sum_i a[b, i] exp(-gamma_i t)|`` for each row b.

    Returns ``(sup, argmax_t)``; ``argmax_t = inf`` when the limit attains it.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    rates, a = _merge_rates(np.asarray(gamma, dtype=float), a)
    zero = rates <= CLUSTER_TOL
    limit = np.abs(a[:, zero].sum(axis=1))
    best = limit.copy()
    arg = np.full(len(a), math.inf)
    if (~zero).sum() == 0:
        return best, arg
    pos = rates[~zero]
    total = np.abs(a[:, ~zero]).sum(axis=1).max()
    t_hi = max(math.log(max(total, tol) / tol), 1.0) / pos.min()
    t_lo = 1e-4 / pos.max()
    grid = np.concatenate([[0.0], np.geomspace(t_lo, max(t_hi, 2 * t_lo), GRID)])
    E = np.exp(-np.outer(grid, rates))                # (G, m)
    dE = E * -rates                                   # derivative factors
    out_sup = np.empty(len(a))
    out_arg = np.empty(len(a))
    for s in range(0, len(a), CHUNK):
        A = a[s:s + CHUNK]
        vals = A @ E.T                                # (B, G)
        ders = A @ dE.T
        j = np.argmax(np.abs(vals), axis=1)
        sup = np.abs(vals[np.arange(len(A)), j])
        targ = grid[j]
        # every sign change of the derivative brackets a critical point
        rows, cols = np.nonzero(np.sign(ders[:, :-1]) * np.sign(ders[:, 1:]) < 0)
        if len(rows):
            lo = grid[cols].copy()
            hi = grid[cols + 1].copy()
            Ar = A[rows]
            d_lo = ders[rows, cols]
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                d_mid = np.einsum("pi,pi->p", Ar, np.exp(-np.outer(mid, rates)) * -rates)
                same = np.sign(d_mid) == np.sign(d_lo)
                lo = np.where(same, mid, lo)
                d_lo = np.where(same, d_mid, d_lo)
                hi = np.where(same, hi, mid)
                if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
                    break
            tc = 0.5 * (lo + hi)
            vc = np.abs(np.einsum("pi,pi->p", Ar, np.exp(-np.outer(tc, rates))))
            order = np.argsort(vc, kind="stable")
            r_sorted, v_sorted, t_sorted = rows[order], vc[order], tc[order]
            better = v_sorted > sup[r_sorted]
            # later (larger) values overwrite earlier ones
            for r, v, t in zip(r_sorted[better], v_sorted[better], t_sorted[better]):
                if v > sup[r]:
                    sup[r], targ[r] = v, t
        out_sup[s:s + CHUNK] = sup
        out_arg[s:s + CHUNK] = targ
    lim = limit >= out_sup - tol
    out_sup = np.where(lim, limit, out_sup)
    out_arg = np.where(lim, math.inf, out_arg)
    return out_sup, out_arg


def sup_power_sum(a: np.ndarray, lam: np.ndarray, even: bool = False,
                  tol: float = TAIL_TOL, cap: int = DISCRETE_CAP):
    """``sup_k |sum_i a[b, i] lam_i^k|`` over k >= 0 (even k only if ``even``)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    lam = np.asarray(lam, dtype=float)
    unit = np.abs(lam) >= 1 - CLUSTER_TOL
    r = np.abs(lam[~unit]).max() if (~unit).any() else 0.0
    total = np.abs(a[:, ~unit]).sum(axis=1).max() if (~unit).any() else 0.0
    if r <= 0 or total <= tol:
        K = 2
    else:
        K = int(math.ceil(math.log(total / tol) / -math.log(r))) + 2
    K = min(max(K, 2), cap)
    ks = np.arange(0, K + 2, 2 if even else 1)
    best = np.zeros(len(a))
    arg = np.zeros(len(a))
    for s in range(0, len(ks), 1024):
        kk = ks[s:s + 1024]
        Pw = np.power.outer(lam, kk)                   # (m, K)
        vals = np.abs(a @ Pw)                          # (B, K)
        j = np.argmax(vals, axis=1)
        v = vals[np.arange(len(a)), j]
        upd = v > best
        best = np.where(upd, v, best)
        arg = np.where(upd, kk[j], arg)
    return best, arg


@dataclass(frozen=True, eq=False)
class MaximalProfile:
    f: np.ndarray
    f_star: np.ndarray
    argmax_time: np.ndarray
    mode: str
    tolerance: float

    def norm(self, pi: np.ndarray, p: float = 1.0) -> float:
        return float((pi @ np.abs(self.f_star) ** p) ** (1 / p))


def _coefficients(chain: ChainModel, fs: np.ndarray) -> np.ndarray:
    """Per-(function, state) spectral coefficients, shape (len(fs) * n, n)."""
    dec = decompose(chain)
    F = dec.eigenfunctions
    c = (fs * chain.pi) @ F                            # (nf, n_modes)
    return (c[:, None, :] * F[None, :, :]).reshape(-1, F.shape[1])


def maximal_functions(chain: ChainModel, fs, mode: str = "continuous") -> np.ndarray:
    """``f*`` for a stack of functions, shape (len(fs), n)."""
    if mode not in MODES:
        raise BadMode(f"mode must be one of {MODES}")
    chain.require_reversible("maximal_function")
    if mode != "continuous":
        chain.require_discrete("discrete maximal function")
    fs = np.atleast_2d(np.asarray(fs, dtype=float))
    dec = decompose(chain)
    a = _coefficients(chain, fs)
    if mode == "continuous":
        sup, _ = sup_exp_sum(a, dec.gaps)
    else:
        sup, _ = sup_power_sum(a, dec.eigenvalues, even=(mode == "discrete_even"))
    return sup.reshape(len(fs), chain.n)


def maximal_function(chain: ChainModel, f, mode: str = "continuous") -> MaximalProfile:
    if mode not in MODES:
        raise BadMode(f"mode must be one of {MODES}")
    chain.require_reversible("maximal_function")
    if mode != "continuous":
        chain.require_discrete("discrete maximal function")
    f = np.asarray(f, dtype=float)
    dec = decompose(chain)
    a = _coefficients(chain, f[None, :])
    if mode == "continuous":
        sup, arg = sup_exp_sum(a, dec.gaps)
    else:
        sup, arg = sup_power_sum(a, dec.eigenvalues, even=(mode == "discrete_even"))
    return MaximalProfile(f, sup, arg, mode, TAIL_TOL)


@dataclass(frozen=True)
class SurpriseRecord:
    A: tuple
    mass: float
    cont_l1: float          # ||f_A*||_1
    disc_half_l1: float     # ||(f_A)_*||_1 / 2 (nan when not applicable)
    bound: float            # e * max(1, |log pi(A)|)
    reverse_lhs: float      # (1 - 1/e) ||f_A*||_1 - 1

    @property
    def ok(self) -> bool:
        d = self.disc_half_l1
        return self.cont_l1 <= self.bound + 1e-8 and (math.isnan(d) or d <= self.bound + 1e-8)

    @property
    def reverse_ok(self) -> bool:
        return self.reverse_lhs <= abs(math.log(self.mass)) + 1e-8


def surprise_bound_check(chain: ChainModel, family, discrete: bool | None = None) -> list[SurpriseRecord]:
    """Check ``||f_A*||_1 <= e max(1, |log pi(A)|)`` (and the discrete half-norm)."""
    sets = [tuple(A) for A in getattr(family, "sets", family)]
    if discrete is None:
        discrete = chain.rates is None
    pi = chain.pi
    fs = np.zeros((len(sets), chain.n))
    masses = np.empty(len(sets))
    for s, A in enumerate(sets):
        masses[s] = pi[list(A)].sum()
        fs[s, list(A)] = 1.0 / masses[s]
    cont = maximal_functions(chain, fs, "continuous") @ pi if sets else np.zeros(0)
    disc = (maximal_functions(chain, fs, "discrete") @ pi / 2 if discrete and sets
            else np.full(len(sets), math.nan))
    out = []
    for s, A in enumerate(sets):
        bound = math.e * max(1.0, abs(math.log(masses[s])))
        out.append(SurpriseRecord(A, float(masses[s]), float(cont[s]), float(disc[s]), bound,
                                  float((1 - math.exp(-1)) * cont[s] - 1)))
    return out
