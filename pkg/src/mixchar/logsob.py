"""Dirichlet forms, entropy, the Log-Sobolev constant and hypercontractive bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from ._parallel import pmap
from .chain import ChainModel
from .errors import BracketViolation, NegativeInput
from .spectral import DEFAULT_SEED, decompose, spectral_gap, two_q_norm

BRACKET_TOL = 1e-7
MAX_SET_STARTS = 64


def dirichlet(chain: ChainModel, f, g=None) -> float:
    """``E(f, g) = <(I - Q) f, g>_pi``."""
    f = np.asarray(f, dtype=float)
    g = f if g is None else np.asarray(g, dtype=float)
    Lf = f - chain.Q @ f
    return float(chain.pi @ (Lf * g))


def entropy(chain: ChainModel, f) -> float:
    """``Ent_pi(f) = E[f log f] - E[f] log E[f]`` for f >= 0."""
    f = np.asarray(f, dtype=float)
    if (f < 0).any():
        raise NegativeInput("entropy needs a non-negative function")
    pi = chain.pi
    m = float(pi @ f)
    if m <= 0:
        return 0.0
    return max(m * float(pi @ _phi(f / m - 1)), 0.0)


def _phi(d: np.ndarray) -> np.ndarray:
    """``(1 + d) log(1 + d) - d`` without cancellation (>= 0 for d >= -1)."""
    d = np.asarray(d, dtype=float)
    out = np.empty_like(d)
    small = np.abs(d) < 1e-3
    ds = d[small]
    out[small] = ds * ds * (0.5 - ds / 6 + ds * ds / 12 - ds ** 3 / 20)
    big = ~small
    db = d[big]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = (1 + db) * np.log1p(db) - db
    out[big] = np.where(db > -1, vals, 1.0)
    return out


@lru_cache(maxsize=256)
def _weights(chain: ChainModel) -> np.ndarray:
    """Symmetric edge weights ``W = diag(pi) Q`` with zero diagonal."""
    W = chain.pi[:, None] * chain.Q
    W = (W + W.T) / 2
    np.fill_diagonal(W, 0.0)
    W.setflags(write=False)
    return W


def _form(W: np.ndarray, f: np.ndarray, g: np.ndarray) -> float:
    """``E(f, g) = 1/2 sum W_xy (f_x - f_y)(g_x - g_y)``, free of cancellation."""
    return 0.5 * float(np.sum(W * np.subtract.outer(f, f) * np.subtract.outer(g, g)))


def _square_deviation(pi: np.ndarray, f: np.ndarray) -> tuple[float, np.ndarray]:
    """``m = E[f^2]`` and ``d = f^2/m - 1`` computed from differences ``f - f_0``.

    Differences of nearby floats are exact, so d keeps full relative accuracy
    even when f is within rounding distance of a constant.
    """
    f0 = f[int(np.argmax(pi))]
    g = f - f0
    eg = float(pi @ g)
    eg2 = float(pi @ g ** 2)
    m = f0 * f0 + 2 * f0 * eg + eg2
    if m <= 0:
        return 0.0, np.zeros_like(f)
    return m, (2 * f0 * (g - eg) + (g ** 2 - eg2)) / m


def ls_objective(chain: ChainModel, f, with_grad: bool = True):
    """``E(f)/Ent(f^2)`` and its gradient.

    The entropy is evaluated as ``m * E_pi[phi(f^2/m - 1)]`` so that it stays
    accurate (relative to its size) as f approaches a constant.
    """
    pi = chain.pi
    W = _weights(chain)
    f = np.asarray(f, dtype=float)
    num = _form(W, f, f)
    m, d = _square_deviation(pi, f)
    if m <= 0:
        return (math.inf, np.zeros_like(f)) if with_grad else math.inf
    den = m * float(pi @ _phi(d))
    if den <= 0:
        return (math.inf, np.zeros_like(f)) if with_grad else math.inf
    val = num / den
    if not with_grad:
        return val
    gnum = 2 * (W.sum(axis=1) * f - W @ f)
    with np.errstate(divide="ignore", invalid="ignore"):
        gden = np.where(f != 0, 2 * pi * f * np.log1p(d), 0.0)
    return val, (gnum * den - num * gden) / den ** 2


@dataclass(frozen=True, eq=False)
class LSResult:
    c_ls: float
    lower: float
    upper: float
    witness: np.ndarray
    witness_kind: str                  # "optimum" or "limit" (near-constant direction)
    restarts: int
    best_per_start: tuple = field(repr=False, default=())
    seed: int = DEFAULT_SEED
    agreeing_starts: int = 0           # starts within 1e-6 of the best

    @property
    def t_ls(self) -> float:
        return 1.0 / self.c_ls


def ls_bracket(chain: ChainModel) -> tuple[float, float]:
    """``[lambda (1 - 2 pi_*) / log(1/pi_* - 1), lambda / 2]``."""
    lam = spectral_gap(chain)
    p = chain.pi_min
    if abs(1 - 2 * p) < 1e-12:
        lower = lam / 2
    else:
        lower = lam * (1 - 2 * p) / math.log(1 / p - 1)
    return lower, lam / 2


def _set_starts(chain: ChainModel, family_sets) -> list[np.ndarray]:
    """Perturbed indicator densities of the sets most likely to be extremal."""
    if family_sets is None:
        from .sets import enumerate_sets
        family_sets = enumerate_sets(chain, 0.5).sets
    sets = [A for A in family_sets if len(A) < chain.n]
    if len(sets) > MAX_SET_STARTS:
        from .hitting import restricted_gaps
        lam = restricted_gaps(chain, sets)
        mass = np.array([chain.pi[list(A)].sum() for A in sets])
        score = np.abs(np.log(mass)) / lam
        keep = np.argsort(-score, kind="stable")[:MAX_SET_STARTS]
        sets = [sets[i] for i in sorted(keep)]
    starts = []
    for A in sets:
        ind = np.zeros(chain.n)
        ind[list(A)] = 1.0
        mass = chain.pi[list(A)].sum()
        for floor in (1e-3, 0.3):
            starts.append(ind / math.sqrt(mass) + floor)
    return starts


def _batch_ls(W, deg, pi, F):
    """Row-wise ``E(f)/Ent(f^2)`` and gradients for a stack of functions."""
    j = int(np.argmax(pi))
    G = F - F[:, j:j + 1]          # exact differences; L kills constants
    LF = G * deg - G @ W
    num = np.einsum("sx,sx->s", G, LF)
    eg = G @ pi
    eg2 = (G * G) @ pi
    f0 = F[:, j]
    m = f0 * f0 + 2 * f0 * eg + eg2
    D = (2 * f0[:, None] * (G - eg[:, None]) + (G * G - eg2[:, None])) / m[:, None]
    den = m * (_phi(D) @ pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        gden = np.where(F != 0, 2 * pi * F * np.log1p(D), 0.0)
        val = num / den
        grad = (2 * LF * den[:, None] - num[:, None] * gden) / (den ** 2)[:, None]
    bad = ~(den > 0) | ~np.isfinite(val)
    val[bad] = np.inf
    grad[bad] = 0.0
    return val, grad


def _batch_mls(W, deg, pi, F):
    """Row-wise ``E(e^f, f)/Ent(e^f)`` and gradients."""
    F = F - F.max(axis=1, keepdims=True)
    U = np.exp(F)
    j = int(np.argmax(pi))
    G = F - F[:, j:j + 1]
    E = np.expm1(G)
    scale = np.exp(F[:, j])[:, None]
    LU = (E * deg - E @ W) * scale
    LF = G * deg - G @ W
    num = np.einsum("sx,sx->s", G, LU)
    ee = E @ pi
    m = np.exp(F[:, j]) * (1 + ee)
    D = (E - ee[:, None]) / (1 + ee)[:, None]
    den = m * (_phi(D) @ pi)
    gden = pi * U * (F - np.log(m)[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        val = num / den
        grad = ((LU + U * LF) * den[:, None] - num[:, None] * gden) / (den ** 2)[:, None]
    bad = ~(den > 0) | ~np.isfinite(val)
    val[bad] = np.inf
    grad[bad] = 0.0
    return val, grad


def _descend(batch, F, project, iters=400):
    """Projected gradient descent on all rows at once with per-row step control."""
    F = project(np.array(F, dtype=float))
    val, grad = batch(F)
    grad = np.where(np.isfinite(grad), grad, 0.0)
    step = np.ones(len(F))
    for _ in range(iters):
        gn = np.sqrt(np.sum(grad * grad, axis=1)) + 1e-300
        trial = project(F - (step / gn)[:, None] * grad * np.minimum(gn, 1.0)[:, None])
        tval, tgrad = batch(trial)
        tgrad = np.where(np.isfinite(tgrad), tgrad, 0.0)
        ok = tval < val
        F = np.where(ok[:, None], trial, F)
        val = np.where(ok, tval, val)
        grad = np.where(ok[:, None], tgrad, grad)
        step = np.where(ok, np.minimum(step * 1.5, 1e3), step * 0.3)
        if np.all(step < 1e-12):
            break
    return F, val


def _minimize_ratio(fun, batch, starts, bounds, project, polish=6):
    """Vectorized coarse descent from every start, then L-BFGS-B polishing of
    the ``polish`` best end points (distinct by value)."""
    F, vals = _descend(batch, np.array(starts), project)
    results = [(float(v), f) for v, f in zip(vals, F)]
    order, seen = [], []
    for i in np.argsort(vals, kind="stable"):
        if len(order) == polish:
            break
        if all(abs(vals[i] - v) > 1e-9 for v in seen):
            order.append(int(i))
            seen.append(vals[i])

    def run(i):
        res = minimize(fun, F[i], jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 3000})
        return float(res.fun), np.asarray(res.x)

    for i, r in zip(order, pmap(run, order)):
        if r[0] <= results[i][0]:
            results[i] = r
    return results


def _project_ls(pi):
    def project(F):
        F = np.maximum(F, 0.0)
        norm = np.sqrt((F * F) @ pi)
        return F / np.where(norm > 0, norm, 1.0)[:, None]
    return project


def _project_mls(F):
    return np.clip(F - F.max(axis=1, keepdims=True), -60, 0)


def c_ls(chain: ChainModel, family_sets=None, seed: int = DEFAULT_SEED,
         n_random: int = 64) -> LSResult:
    """Log-Sobolev constant by multi-start minimization over f >= 0."""
    chain.require_reversible("c_ls")
    lower, upper = ls_bracket(chain)
    n = chain.n
    dec = decompose(chain)
    starts = _set_starts(chain, family_sets)
    f2 = dec.eigenfunctions[:, 1]
    scale = 1.0 / np.abs(f2).max()
    for c in (0.5, 0.9, 0.99, -0.5, -0.9, -0.99):
        starts.append(1 + c * scale * f2)
    starts.append(np.abs(f2) + 1e-3)
    rng = np.random.default_rng(seed)
    starts += [rng.exponential(size=n) + 1e-3 for _ in range(n_random)]

    def fun(f):
        return ls_objective(chain, f)

    W = _weights(chain)
    deg = W.sum(axis=1)
    batch = lambda F: _batch_ls(W, deg, chain.pi, F)  # noqa: E731
    results = _minimize_ratio(fun, batch, starts, [(0, None)] * n, _project_ls(chain.pi))
    vals = np.array([v for v, _ in results])
    best = int(np.argmin(vals))
    best_val, witness = vals[best], results[best][1]
    witness = witness / math.sqrt(chain.pi @ witness ** 2)
    kind = "optimum"
    if not best_val < upper:
        # the infimum is the near-constant limit lambda/2
        best_val = upper
        witness = 1 + 1e-9 * f2 / math.sqrt(chain.pi @ f2 ** 2)
        kind = "limit"
    if best_val < lower - BRACKET_TOL:
        raise BracketViolation(f"c_LS estimate {best_val} below analytic lower bound {lower}")
    c = float(min(max(best_val, lower), upper))
    agree = int(np.sum(np.minimum(vals, upper) <= c + 1e-6))
    return LSResult(c, lower, upper, witness, kind, len(starts), tuple(vals.tolist()),
                    seed, agree)


# --- modified Log-Sobolev constant -----------------------------------------

def mls_objective(chain: ChainModel, f, with_grad: bool = True):
    """``E(e^f, f) / Ent(e^f)`` (shift invariant in f) and its gradient."""
    pi = chain.pi
    W = _weights(chain)
    f = np.asarray(f, dtype=float)
    f = f - f.max()
    u = np.exp(f)
    num = _form(W, u, f)
    # d = u/m - 1 from e = expm1(f - f_0), accurate near constants
    f0 = f[int(np.argmax(pi))]
    e = np.expm1(f - f0)
    ee = float(pi @ e)
    m = math.exp(f0) * (1 + ee)
    d = (e - ee) / (1 + ee)
    den = m * float(pi @ _phi(d))
    if den <= 0:
        return (math.inf, np.zeros_like(f)) if with_grad else math.inf
    val = num / den
    if not with_grad:
        return val
    deg = W.sum(axis=1)
    gnum = (deg * u - W @ u) + u * (deg * f - W @ f)
    gden = pi * u * (f - math.log(m))
    return val, (gnum * den - num * gden) / den ** 2


@dataclass(frozen=True, eq=False)
class MLSResult:
    c_mls: float
    witness: np.ndarray
    witness_kind: str
    restarts: int
    seed: int = DEFAULT_SEED


def c_mls(chain: ChainModel, seed: int = DEFAULT_SEED, n_random: int = 64) -> MLSResult:
    """Modified Log-Sobolev constant ``inf_f E(e^f, f)/Ent(e^f)`` (exploratory)."""
    chain.require_reversible("c_mls")
    n = chain.n
    lam = spectral_gap(chain)
    limit = 2 * lam
    dec = decompose(chain)
    f2 = dec.eigenfunctions[:, 1]
    starts = []
    for x in range(n):
        for h in (2.0, 5.0, -math.log(chain.pi[x])):
            e = np.zeros(n)
            e[x] = h
            starts.append(e)
    for c in (0.5, 1.0, 3.0, -0.5, -1.0, -3.0):
        starts.append(c * f2)
    rng = np.random.default_rng(seed)
    starts += [rng.normal(scale=2.0, size=n) for _ in range(n_random)]

    def fun(f):
        return mls_objective(chain, f)

    W = _weights(chain)
    deg = W.sum(axis=1)
    batch = lambda F: _batch_mls(W, deg, chain.pi, F)  # noqa: E731
    results = _minimize_ratio(fun, batch, starts, [(-60, 60)] * n, _project_mls)
    vals = np.array([v for v, _ in results])
    best = int(np.argmin(vals))
    if vals[best] < limit:
        return MLSResult(float(vals[best]), results[best][1], "optimum", len(starts), seed)
    return MLSResult(float(limit), 1e-9 * f2, "limit", len(starts), seed)


# --- hypercontractivity -----------------------------------------------------

def hyper_upper(t_rel: float, q: float, r_q: float, M_q: float) -> float:
    """Upper bound on t_LS from ``||S_{r_q}||_{2->q} <= M_q``."""
    if not q > 2:
        raise ValueError("q must exceed 2")
    if M_q < 1:
        raise ValueError("M_q must be at least 1 (constants have norm 1)")
    k = q / (q - 2)
    return 2 * k * r_q + 2 * t_rel * (1 + k * math.log(M_q))


@dataclass(frozen=True)
class SqEstimate:
    s_q: float
    linear_bound: float
    bisection: float
    q: float


def s_q(chain: ChainModel, q: float, seed: int = DEFAULT_SEED, n_random: int = 8,
        rtol: float = 1e-4) -> SqEstimate:
    """``inf{t : ||S_t||_{2->q} <= 1}`` estimated from below.

    Uses the near-constant bound ``log(q-1)/(2 lambda)`` together with bisection
    on the (lower-bound) norm estimate.
    """
    lam = spectral_gap(chain)
    linear = math.log(q - 1) / (2 * lam)

    def above(t):
        return two_q_norm(chain, t, q, seed=seed, n_random=n_random).value > 1 + 1e-9

    lo, hi = 0.0, max(linear, 1e-3)
    for _ in range(60):
        if not above(hi):
            break
        lo, hi = hi, 2 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if above(mid):
            lo = mid
        else:
            hi = mid
    bis = lo
    return SqEstimate(max(linear, bis), linear, bis, float(q))
