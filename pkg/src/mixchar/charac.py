"""Hitting-time characterizations of mixing: rho-type thresholds, kappa, t_ht, hit(eps).

Every rho-type quantity has the form

    value_x = min{t : P_x[T_{A^c} > t] <= g(pi(A)) for all A in the family}
            = max_{A containing x} threshold_x(A, g(pi(A))),

so the per-(x, A) threshold is the primitive and values are max-reductions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainModel
from .distance import derive_c_ent
from .errors import BadMode, DomainError
from .hitting import family_thresholds, family_thresholds_stationary, restricted_gaps
from .sets import ConnectedSetFamily, enumerate_sets

KINDS = ("rho", "rho_ent", "rho_bar", "rho_bar_ent", "t_ht", "hit_eps")
TINY_TARGET = 1e-300
HIT_SELECTORS = ("literal", "large")


def target_values(kind: str, masses: np.ndarray, eps: float | None = None) -> tuple[np.ndarray, bool]:
    """``g(pi(A))`` for every mass; second item flags clamped underflow."""
    a = np.asarray(masses, dtype=float)
    if kind == "rho":
        g = a + 0.5 * np.sqrt(a * (1 - a))
    elif kind == "rho_ent":
        c_ent = derive_c_ent()[1]
        g = np.minimum(c_ent / np.abs(np.log(a)), 0.99)
    elif kind == "rho_bar":
        g = a ** 3
    elif kind == "rho_bar_ent":
        g = 1.0 / (16 * math.e ** 2 * np.log(math.exp(1.5) / a) ** 3)
    elif kind == "t_ht":
        g = a ** 0.25
    elif kind == "hit_eps":
        if eps is None or not 0 < eps < 1:
            raise DomainError("hit_eps needs eps in (0, 1)")
        g = np.full(a.shape, float(eps))
    else:
        raise BadMode(f"unknown characterization {kind!r}; choose from {KINDS}")
    clamped = bool(np.any(g < TINY_TARGET))
    return np.maximum(g, TINY_TARGET), clamped


@dataclass(frozen=True)
class HittingTarget:
    kind: str
    eps: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadMode(f"unknown characterization {self.kind!r}")

    @property
    def start(self) -> str:
        return "stationary" if self.kind == "t_ht" else "state"

    def __call__(self, masses) -> np.ndarray:
        return target_values(self.kind, masses, self.eps)[0]


@dataclass(frozen=True, eq=False)
class CharacterizationReport:
    kind: str
    mode: str
    value: float
    per_state: np.ndarray | None          # None for stationary-start kinds
    argmax: tuple                         # binding set per state (or the single set)
    complete: bool
    constants: dict = field(default_factory=dict)
    clamped: bool = False
    note: str = ""

    @property
    def label(self) -> str:
        return "exact" if self.complete else "lower-bound estimate"


def _proper(chain: ChainModel, family) -> tuple[tuple, bool]:
    if isinstance(family, ConnectedSetFamily):
        sets, complete = family.sets, family.complete
    else:
        sets, complete = tuple(tuple(A) for A in family), True
    return tuple(A for A in sets if len(A) < chain.n), complete


def toolkit_constants() -> dict:
    c_prime, c_ent = derive_c_ent()
    return {"C_prime": c_prime, "C_ent": c_ent}


def rho_family(chain: ChainModel, target: HittingTarget | str,
               family: ConnectedSetFamily | None = None,
               mode: str = "continuous") -> CharacterizationReport:
    """rho, rho_ent, rho_bar, rho_bar_ent or t_ht over a set family."""
    if isinstance(target, str):
        target = HittingTarget(target)
    chain.require_reversible(target.kind)
    family = enumerate_sets(chain, 0.5) if family is None else family
    sets, complete = _proper(chain, family)
    if not complete:
        warnings.warn(f"{target.kind}: set family is incomplete; value is a lower bound",
                      RuntimeWarning, stacklevel=2)
    masses = np.array([chain.pi[list(A)].sum() for A in sets])
    g, clamped = target_values(target.kind, masses, target.eps)
    consts = toolkit_constants()
    if not sets:
        per = None if target.start == "stationary" else np.zeros(chain.n)
        return CharacterizationReport(target.kind, mode, 0.0, per, (), complete, consts, clamped)
    if target.start == "stationary":
        T = family_thresholds_stationary(chain, sets, g, mode)
        s = int(np.argmax(T))
        return CharacterizationReport(target.kind, mode, float(T[s]), None, (sets[s],),
                                      complete, consts, clamped)
    T = family_thresholds(chain, sets, g, mode)
    best = T.argmax(axis=0)
    per_state = T[best, np.arange(chain.n)]
    argmax = tuple(sets[b] for b in best)
    return CharacterizationReport(target.kind, mode, float(per_state.max()), per_state,
                                  argmax, complete, consts, clamped)


@dataclass(frozen=True, eq=False)
class KappaResult:
    value: float
    argmax_set: tuple
    alpha: np.ndarray           # alpha(A) = lambda(A)/|log pi(A)| (continuous)
    sets: tuple
    lam: np.ndarray
    mode: str
    complete: bool

    @property
    def min_lambda(self) -> float:
        return float(self.lam.min())


def kappa(chain: ChainModel, family: ConnectedSetFamily | None = None,
          mode: str = "continuous") -> KappaResult:
    """``max_A |log pi(A)| / lambda(A)``, or its discrete analogue
    ``max_A log(1/pi(A)) / log(1/beta(A))`` with ``beta = 1 - lambda(A)``."""
    if mode not in ("continuous", "discrete"):
        raise BadMode("kappa mode must be continuous or discrete")
    family = enumerate_sets(chain, 0.5) if family is None else family
    sets, complete = _proper(chain, family)
    if not sets:
        return KappaResult(0.0, (), np.zeros(0), (), np.zeros(0), mode, complete)
    lam = restricted_gaps(chain, sets)
    masses = np.array([chain.pi[list(A)].sum() for A in sets])
    logs = np.abs(np.log(masses))
    alpha = lam / logs
    if mode == "continuous":
        vals = logs / lam
    else:
        beta = np.clip(1.0 - lam, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            inv = -np.log(beta)
        vals = np.where(beta <= 0, 0.0, np.where(beta >= 1, np.inf, logs / np.where(inv > 0, inv, 1)))
    s = int(np.argmax(vals))
    return KappaResult(float(vals[s]), sets[s], alpha, sets, lam, mode, complete)


def hit_eps(chain: ChainModel, eps: float, selector: str = "literal",
            family: ConnectedSetFamily | None = None,
            mode: str = "continuous") -> CharacterizationReport:
    """``max_x min{t : P_x[T_A > t] <= eps for all selected A}``.

    ``literal``: A ranges over connected sets of mass <= 1/2.
    ``large``: A ranges over complements of those sets (mass >= 1/2).
    """
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    if selector not in HIT_SELECTORS:
        raise BadMode(f"selector must be one of {HIT_SELECTORS}")
    chain.require_reversible("hit_eps")
    family = enumerate_sets(chain, 0.5) if family is None else family
    sets, complete = _proper(chain, family)
    full = set(range(chain.n))
    # P_x[T_A > t] is survival inside A^c
    targets_sets = [tuple(sorted(full - set(A))) for A in sets] if selector == "literal" else list(sets)
    targets_sets = tuple(dict.fromkeys(S for S in targets_sets if S))
    if not targets_sets:
        return CharacterizationReport("hit_eps", mode, 0.0, np.zeros(chain.n), (), complete,
                                      {"eps": eps, "selector": selector})
    g = np.full(len(targets_sets), float(eps))
    T = family_thresholds(chain, targets_sets, g, mode)
    best = T.argmax(axis=0)
    per_state = T[best, np.arange(chain.n)]
    # report the hit set A (complement of the escape set) as the binding set
    argmax = tuple(tuple(sorted(full - set(targets_sets[b]))) for b in best)
    return CharacterizationReport("hit_eps", mode, float(per_state.max()), per_state, argmax,
                                  complete, {"eps": eps, "selector": selector},
                                  note=f"interpretation={selector}")
