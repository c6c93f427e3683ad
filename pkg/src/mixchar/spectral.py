"""Eigendecomposition-backed semigroups and restricted spectra.

Everything here goes through the symmetric matrix ``D^{1/2} Q D^{-1/2}``.
Eigenfunctions are returned pi-orthonormal, i.e. ``F.T @ diag(pi) @ F = I``,
so for a reversible chain

    H_t(x, y) = sum_i exp(-t (1 - lam_i)) f_i(x) f_i(y) pi(y).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from ._parallel import pmap
from .chain import ChainModel
from .errors import BadTime, EmptyOrFullSet, NegativeTime, NumericalFailure

CLUSTER_TOL = 1e-11
DEFAULT_SEED = 0xC0FFEE


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray      # of Q, descending
    eigenfunctions: np.ndarray   # column i is f_i
    pi: np.ndarray

    @property
    def gaps(self) -> np.ndarray:
        """Continuous-time decay rates ``1 - lam_i``."""
        return 1.0 - self.eigenvalues

    def kernel(self, weights: np.ndarray) -> np.ndarray:
        """``sum_i w_i f_i(x) f_i(y) pi(y)`` as a matrix."""
        F = self.eigenfunctions
        return (F * weights) @ F.T * self.pi[None, :]


@lru_cache(maxsize=512)
def decompose(chain: ChainModel) -> SpectralDecomposition:
    try:
        w, U = np.linalg.eigh(chain.sym_Q)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from None
    order = np.argsort(w)[::-1]
    w, U = w[order], U[:, order]
    F = U / np.sqrt(chain.pi)[:, None]
    # top eigenvector is sqrt(pi); pin f_1 to the constant 1 exactly
    F[:, 0] = 1.0
    w[0] = 1.0
    w = np.clip(w, None, 1.0)
    if chain.rates is None:
        w = np.clip(w, -1.0, None)
    w.setflags(write=False)
    F.setflags(write=False)
    return SpectralDecomposition(w, F, chain.pi)


def _check_time(t: float) -> None:
    if t < 0:
        raise NegativeTime(f"time must be non-negative, got {t}")


def heat_matrix(chain: ChainModel, t: float) -> np.ndarray:
    """Full heat kernel ``exp(t G)`` (``G = P - I`` for unit rates)."""
    chain.require_reversible("heat_kernel")
    _check_time(t)
    dec = decompose(chain)
    H = dec.kernel(np.exp(-t * dec.gaps))
    return H


def heat_kernel(chain: ChainModel, x: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Row ``H_t(x, .)`` and its density ``h_t(x, .) = H_t(x, .) / pi``."""
    chain.require_reversible("heat_kernel")
    _check_time(t)
    dec = decompose(chain)
    F = dec.eigenfunctions
    row = (F[x] * np.exp(-t * dec.gaps)) @ F.T * chain.pi
    row = np.clip(row, 0.0, None)
    return row, row / chain.pi


def _check_int_time(t, lowest: int) -> int:
    if int(t) != t or t < lowest:
        raise BadTime(f"time must be an integer >= {lowest}, got {t}")
    return int(t)


def _int_power(lam: np.ndarray, t: int) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        out = lam ** t
    return out


def discrete_matrix(chain: ChainModel, t: int) -> np.ndarray:
    chain.require_reversible("discrete_kernel")
    chain.require_discrete("discrete_kernel")
    t = _check_int_time(t, 0)
    dec = decompose(chain)
    return dec.kernel(_int_power(dec.eigenvalues, t))


def discrete_kernel(chain: ChainModel, x: int, t: int) -> np.ndarray:
    return np.clip(discrete_matrix(chain, t)[x], 0.0, None)


def averaged_matrix(chain: ChainModel, t: int) -> np.ndarray:
    chain.require_reversible("averaged_kernel")
    chain.require_discrete("averaged_kernel")
    t = _check_int_time(t, 1)
    dec = decompose(chain)
    lam = dec.eigenvalues
    return dec.kernel(_int_power(lam, t - 1) * (1 + lam) / 2)


def averaged_kernel(chain: ChainModel, x: int, t: int) -> np.ndarray:
    return np.clip(averaged_matrix(chain, t)[x], 0.0, None)


def _inv_abs_log(v: float) -> float:
    v = abs(v)
    if v >= 1 - CLUSTER_TOL:
        return float("inf")
    if v <= CLUSTER_TOL:
        return 0.0
    return 1.0 / abs(np.log(v))


def spectral_gap(chain: ChainModel) -> float:
    dec = decompose(chain)
    if chain.n == 1:
        return float("inf")
    return float(dec.gaps[1])


def relaxation_times(chain: ChainModel) -> tuple[float, float]:
    """``(t_rel, t_rel_absolute)``; single-state chains return ``(0, 0)``."""
    dec = decompose(chain)
    if chain.n == 1:
        return 0.0, 0.0
    t_rel = 1.0 / float(dec.gaps[1])
    lam = dec.eigenvalues
    t_abs = max(_inv_abs_log(lam[1]), _inv_abs_log(lam[-1]))
    return t_rel, t_abs


@dataclass(frozen=True, eq=False)
class RestrictedSpectrum:
    A: tuple
    lam: float          # smallest eigenvalue of I - Q_A
    mu: np.ndarray      # quasi-stationary law, full length n, zero off A
    theta: np.ndarray   # eigenvalues of Q_A, ascending
    basis: np.ndarray   # orthonormal eigenvectors of the symmetrized Q_A

    @property
    def t_rel(self) -> float:
        return 1.0 / self.lam


def _as_index_set(chain: ChainModel, A) -> tuple:
    idx = tuple(sorted({int(a) for a in A}))
    if not idx or len(idx) >= chain.n:
        raise EmptyOrFullSet("A must be a proper non-empty subset")
    if idx[0] < 0 or idx[-1] >= chain.n:
        raise EmptyOrFullSet("A contains an unknown state")
    return idx


def restricted(chain: ChainModel, A) -> RestrictedSpectrum:
    idx = _as_index_set(chain, A)
    sub = chain.sym_Q[np.ix_(idx, idx)]
    theta, U = np.linalg.eigh(sub)
    top = U[:, -1]
    top = top * np.sign(top.sum())
    # left PF vector of Q_A is D^{1/2} u for the symmetrized top vector u
    left = np.sqrt(chain.pi[list(idx)]) * np.abs(top)
    mu = np.zeros(chain.n)
    mu[list(idx)] = left / left.sum()
    lam = float(1.0 - theta[-1])
    return RestrictedSpectrum(idx, lam, mu, theta, U)


# --- 2 -> q operator norms ----------------------------------------------------

@dataclass(frozen=True)
class TwoQNorm:
    value: float
    witness: np.ndarray
    t: float
    q: float
    best_per_start: tuple = field(repr=False, default=())


def semigroup_matrix(chain: ChainModel, t: float) -> np.ndarray:
    """``S_t = exp(-t (I - Q))``; equals the heat kernel for reversible chains."""
    _check_time(t)
    dec = decompose(chain)
    return dec.kernel(np.exp(-t * dec.gaps))


def lq_norm(pi: np.ndarray, f: np.ndarray, q: float) -> float:
    if np.isinf(q):
        return float(np.abs(f).max())
    return float((pi @ np.abs(f) ** q) ** (1.0 / q))


def two_q_norm(chain: ChainModel, t: float, q: float, seed: int = DEFAULT_SEED,
               n_random: int = 32) -> TwoQNorm:
    """Lower estimate of ``||S_t||_{2->q}`` by multi-start ascent over f >= 0.

    The returned value is the objective at the returned witness, so it is a
    certified lower bound on the true operator norm.
    """
    if not q > 2:
        raise ValueError("q must exceed 2")
    S = semigroup_matrix(chain, t)
    pi = chain.pi
    n = chain.n

    def neg_ratio(f):
        g = S @ f
        gq = pi @ np.abs(g) ** q
        f2 = pi @ (f * f)
        if f2 <= 0 or gq <= 0:
            return 0.0, np.zeros(n)
        nq = gq ** (1 / q)
        n2 = np.sqrt(f2)
        grad_q = S.T @ (pi * np.abs(g) ** (q - 1)) * nq ** (1 - q)
        grad_2 = pi * f / n2
        val = nq / n2
        grad = (grad_q * n2 - nq * grad_2) / f2
        return -val, -grad

    dec = decompose(chain)
    rng = np.random.default_rng(seed)
    starts = [np.eye(n)[x] / np.sqrt(pi[x]) + 1e-3 for x in range(n)]
    if n > 1:
        f2 = dec.eigenfunctions[:, 1]
        scale = 1.0 / np.abs(f2).max()
        for c in (0.5, 0.9, -0.5, -0.9):
            starts.append(np.clip(1 + c * scale * f2, 0, None) + 1e-3)
    starts += [rng.exponential(size=n) for _ in range(n_random)]

    def run(f0):
        res = minimize(neg_ratio, f0, jac=True, method="L-BFGS-B",
                       bounds=[(0, None)] * n, options={"ftol": 1e-13, "gtol": 1e-10})
        f = np.clip(res.x, 0, None)
        f = f / np.sqrt(pi @ (f * f))
        return lq_norm(pi, S @ f, q), f

    results = pmap(run, starts)
    # evaluate the raw starts too; the optimizer never makes them worse
    for f0 in starts:
        f = f0 / np.sqrt(pi @ (f0 * f0))
        results.append((lq_norm(pi, S @ f, q), f))
    values = [v for v, _ in results]
    best = int(np.argmax(values))
    return TwoQNorm(values[best], results[best][1], float(t), float(q), tuple(values))
