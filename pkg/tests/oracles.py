"""Independent reference computations used by the tests.

Everything here works from the raw transition matrix with dense linear
algebra (matrix exponentials, matrix powers, explicit linear solves, brute
force enumeration and grid searches) and shares no code with the package.
"""

from __future__ import annotations

import itertools
import math
import warnings

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq, minimize


def stationary(P):
    n = len(P)
    A = np.vstack([P.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


def heat(P, t):
    return expm(t * (P - np.eye(len(P))))


def lp_dist(row, pi, p):
    h = row / pi
    if p == math.inf:
        return float(np.max(np.abs(h - 1)))
    return float((pi @ np.abs(h - 1) ** p) ** (1 / p))


def kl(mu, pi):
    m = mu > 0
    return float(np.sum(mu[m] * np.log(mu[m] / pi[m])))


def worst(P, t, p, kernel=heat):
    pi = stationary(P)
    K = kernel(P, t)
    if p == "ent":
        return max(kl(K[x], pi) for x in range(len(P)))
    return max(lp_dist(K[x], pi, p) for x in range(len(P)))


def cont_mixing(P, p, eps=0.5):
    """Smallest t with worst distance <= eps (distance is nonincreasing in t)."""
    f = lambda t: worst(P, t, p) - eps
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    return brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-13)


def int_mixing(P, p, eps=0.5, averaged=False, cap=10_000):
    pi = stationary(P)
    M = np.eye(len(P))
    prev = None
    for t in range(cap):
        K = 0.5 * (M + prev) if averaged and prev is not None else M
        if not (averaged and t == 0):
            d = (max(kl(K[x], pi) for x in range(len(P))) if p == "ent"
                 else max(lp_dist(K[x], pi, p) for x in range(len(P))))
            if d <= eps:
                return t
        prev, M = M, M @ P
    return math.inf


def survival(P, start, A, t, mode="continuous"):
    A = list(A)
    PA = P[np.ix_(A, A)]
    if mode == "continuous":
        K = expm(t * (PA - np.eye(len(A))))
    else:
        K = np.linalg.matrix_power(PA, int(t))
    w = np.zeros(len(A))
    if start in A:
        w[A.index(start)] = 1.0
    return float(w @ K @ np.ones(len(A)))


def survival_dist(P, mu, A, t):
    A = list(A)
    K = expm(t * (P[np.ix_(A, A)] - np.eye(len(A))))
    return float(mu[A] @ K @ np.ones(len(A)))


def threshold(P, start, A, target):
    f = lambda t: survival(P, start, A, t) - target
    if f(0.0) <= 0:
        return 0.0
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    return brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-13)


def restricted_gap(P, A):
    A = list(A)
    return 1.0 - float(np.max(np.real(np.linalg.eigvals(P[np.ix_(A, A)]))))


def connected_sets(P, delta):
    """Brute force over all 2^n subsets; connectivity by search inside the set."""
    n = len(P)
    pi = stationary(P)
    S = (P > 0) | (P.T > 0)
    out = []
    for mask in range(1, 2 ** n):
        A = [i for i in range(n) if mask >> i & 1]
        if pi[A].sum() > delta + 1e-12:
            continue
        seen, stack = {A[0]}, [A[0]]
        while stack:
            v = stack.pop()
            for u in A:
                if u not in seen and S[v, u]:
                    seen.add(u)
                    stack.append(u)
        if len(seen) == len(A):
            out.append(tuple(A))
    return sorted(out)


def lagrange_brute(pi, A, delta, starts=6, seed=0):
    """Minimise ||mu - pi||_{2,pi} and D(mu||pi) over mu(A) >= pi(A) + delta pi(A^c)."""
    rng = np.random.default_rng(seed)
    n = len(pi)
    inA = np.zeros(n)
    inA[list(A)] = 1.0
    need = pi @ inA + delta * (1 - pi @ inA)
    cons = [{"type": "eq", "fun": lambda m: m.sum() - 1},
            {"type": "ineq", "fun": lambda m: m @ inA - need}]
    bounds = [(1e-12, 1)] * n
    l2 = lambda m: float(np.sqrt(np.sum((m - pi) ** 2 / pi)))
    ent = lambda m: float(np.sum(m * np.log(m / pi)))
    best = [math.inf, math.inf]
    for k in range(starts):
        x0 = rng.dirichlet(np.ones(n)) if k else pi.copy()
        for j, fun in enumerate((lambda m: l2(m) ** 2, ent)):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                r = minimize(fun, x0, method="SLSQP", bounds=bounds, constraints=cons,
                             options={"ftol": 1e-15, "maxiter": 500})
            if r.success and r.x @ inA >= need - 1e-9:
                val = math.sqrt(max(r.fun, 0)) if j == 0 else r.fun
                best[j] = min(best[j], val)
    return tuple(best)


def ls_ratio(P, pi, f):
    f = np.asarray(f, dtype=float)
    E = 0.5 * np.sum(pi[:, None] * P * (f[:, None] - f[None, :]) ** 2)
    g = f ** 2
    m = pi @ g
    ent = float(np.sum(pi[g > 0] * g[g > 0] * np.log(g[g > 0] / m)))
    return E / ent if ent > 1e-14 else math.inf


def ls_grid(P, resolution=4000):
    """Dense grid over nonnegative f on the unit sphere (n <= 3), polished locally.

    The infimum may be approached as f tends to a constant, where the ratio
    tends to half the spectral gap; that limit is included.
    """
    pi = stationary(P)
    n = len(P)
    lam = 1 - np.sort(np.real(np.linalg.eigvals(P)))[-2]
    best, arg = lam / 2, None
    if n == 2:
        for s in np.linspace(0, 1, resolution * 5)[1:-1]:
            v = ls_ratio(P, pi, [math.cos(s * math.pi / 2), math.sin(s * math.pi / 2)])
            if v < best:
                best, arg = v, np.array([s * math.pi / 2])
        par = lambda th: [math.cos(th[0]), math.sin(th[0])]
    else:
        k = int(math.sqrt(resolution * 40))
        for a in np.linspace(0, math.pi / 2, k)[1:-1]:
            for b in np.linspace(0, math.pi / 2, k)[1:-1]:
                f = [math.sin(a) * math.cos(b), math.sin(a) * math.sin(b), math.cos(a)]
                v = ls_ratio(P, pi, f)
                if v < best:
                    best, arg = v, np.array([a, b])
        par = lambda th: [math.sin(th[0]) * math.cos(th[1]), math.sin(th[0]) * math.sin(th[1]),
                          math.cos(th[0])]
    if arg is not None:
        r = minimize(lambda th: ls_ratio(P, pi, np.abs(par(th))), arg, method="Nelder-Mead",
                     options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        best = min(best, float(r.fun))
    return best


def mls_ratio(P, pi, f):
    f = np.asarray(f, dtype=float)
    E = 0.5 * np.sum(pi[:, None] * P * (f[:, None] - f[None, :]) *
                     (np.log(f)[:, None] - np.log(f)[None, :]))
    m = pi @ f
    ent = float(np.sum(pi * f * np.log(f / m)))
    return E / ent if ent > 1e-14 else math.inf


def exp_sum_sup_grid(a, gamma, t_max, points=200_001):
    t = np.linspace(0, t_max, points)
    return float(np.max(np.abs(np.exp(-np.outer(t, gamma)) @ a)))


def powerset(n):
    return itertools.chain.from_iterable(itertools.combinations(range(n), k) for k in range(1, n + 1))
