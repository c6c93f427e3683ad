"""Inequality verification suites and the quantity analyzer."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import charac, distance, hitting, logsob, maximal, spectral, trees
from .chain import ChainModel
from .errors import InputError, MixcharError, NotATree, NotMixing
from .records import VerificationRecord, check, diagnostic, report
from .sets import DEFAULT_CAP, enumerate_sets

SUITES = ("core", "discrete", "trees", "all")
DEFAULT_SLACK = 1e-6
FUNCTIONAL_SAMPLES = 100
MAIN3_CONSTANT = 9 + 15 / math.log(2)
HIT_EPS = 0.25


@dataclass
class Config:
    slack: float = DEFAULT_SLACK
    seed: int = spectral.DEFAULT_SEED
    max_subsets: int = DEFAULT_CAP
    tol: float = distance.BISECT_RTOL
    samples: int = FUNCTIONAL_SAMPLES
    eps: float = HIT_EPS
    robustness_trials: int = 20


class ChainContext:
    """Lazily computed quantities of one chain, shared by all checks."""

    def __init__(self, chain: ChainModel, config: Config | None = None):
        self.chain = chain
        self.config = config or Config()
        self.id = chain.name or "chain"

    # -- spectral --
    @cached_property
    def t_rel(self) -> float:
        return spectral.relaxation_times(self.chain)[0]

    @cached_property
    def t_rel_abs(self) -> float:
        return spectral.relaxation_times(self.chain)[1]

    @cached_property
    def family(self):
        return enumerate_sets(self.chain, 0.5, self.config.max_subsets)

    # -- mixing times --
    def taus(self, metric: str, mode: str = "continuous", eps: float = 0.5) -> np.ndarray:
        key = (metric, mode, eps)
        cache = self.__dict__.setdefault("_taus", {})
        if key not in cache:
            try:
                cache[key] = distance.mixing_times(self.chain, metric, mode, eps,
                                                   rtol=self.config.tol)
            except NotMixing as exc:
                cache[key] = exc
        val = cache[key]
        if isinstance(val, Exception):
            raise val
        return val

    def tau(self, metric: str, mode: str = "continuous", eps: float = 0.5) -> float:
        return float(self.taus(metric, mode, eps).max())

    # -- characterizations --
    def charac(self, kind: str, mode: str = "continuous"):
        cache = self.__dict__.setdefault("_charac", {})
        if (kind, mode) not in cache:
            cache[kind, mode] = charac.rho_family(self.chain, kind, self.family, mode)
        return cache[kind, mode]

    def kappa(self, mode: str = "continuous"):
        cache = self.__dict__.setdefault("_kappa", {})
        if mode not in cache:
            cache[mode] = charac.kappa(self.chain, self.family, mode)
        return cache[mode]

    @cached_property
    def ls(self):
        return logsob.c_ls(self.chain, self.family.sets, seed=self.config.seed)

    @cached_property
    def mls(self):
        return logsob.c_mls(self.chain, seed=self.config.seed)

    @cached_property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.config.seed)


# --- helpers ------------------------------------------------------------------

def _worst(lhs: np.ndarray, rhs: np.ndarray) -> tuple[float, float]:
    """The (lhs, rhs) pair with the largest violation margin."""
    j = int(np.argmax(np.asarray(lhs) - np.asarray(rhs)))
    return float(lhs[j]), float(rhs[j])


def _random_distributions(rng, n: int, k: int) -> np.ndarray:
    mus = rng.dirichlet(np.full(n, 0.5), size=k)
    mus[: min(n, k)] = np.eye(n)[: min(n, k)]
    return mus


def _diag(ctx, rid, anchor, exc) -> VerificationRecord:
    return diagnostic(rid, ctx.id, anchor, f"{type(exc).__name__}: {exc}")


# --- core suite -----------------------------------------------------------------

def sandwich_records(ctx: ChainContext) -> list[VerificationRecord]:
    """The explicit-constant mixing sandwiches."""
    c, s, cid = ctx.chain, ctx.config.slack, ctx.id
    out = []
    t_rel = ctx.t_rel
    tau2_x = ctx.taus("L2")
    tau2 = float(tau2_x.max())
    rho = ctx.charac("rho")
    rho_bar = ctx.charac("rho_bar")
    rho_ent = ctx.charac("rho_ent")
    rho_bar_ent = ctx.charac("rho_bar_ent")
    tau_ent_x = ctx.taus("Entropy")
    kap = ctx.kappa()
    k = kap.value
    t_ls = ctx.ls.t_ls
    note = "" if ctx.family.complete else "incomplete set family: rho values are lower bounds"

    out.append(check("main3-lower", cid, rho.value, tau2, "main3", s, note=note))
    out.append(check("main3-upper", cid, tau2, MAIN3_CONSTANT * rho.value, "main3", s, note=note))
    out.append(check("main1-bar", cid, *_worst(tau2_x, rho_bar.per_state + 5 * t_rel), "main1", s))
    out.append(check("main1-rho", cid,
                     *_worst(tau2_x, rho.per_state + 8 * k + (5 + 6 * math.log(2)) * t_rel),
                     "main1", s))
    out.append(check("main31-lower", cid, *_worst(rho_ent.per_state, tau_ent_x), "main31", s))
    out.append(check("main31-upper", cid, *_worst(tau_ent_x, rho_bar_ent.per_state + 14 * t_rel),
                     "main31", s))
    out.append(check("kappa-tell-lower", cid, k, t_ls, "kappa=tell", s))
    out.append(check("kappa-tell-upper", cid, t_ls, 2 * (k + t_rel * (1 + math.log(49))),
                     "kappa=tell", s))
    out.append(check("kappa-tell-17", cid, t_ls, 17 * k, "kappa=tell", 0.0))
    out.append(check("com1", cid, k, 3 * rho.value, "com1", s))
    out.append(check("rhovsbarrho", cid,
                     *_worst(rho_bar.per_state, rho.per_state + 8 * k + 2 * t_rel * math.log(8)),
                     "rhovsbarrho", s))
    out.append(check("rhobarrho-lower", cid, rho.value, rho_bar.value, "rhobarrho", s))
    out.append(check("rhobarrho-upper", cid, rho_bar.value, 9 * rho.value, "rhobarrho", s))
    out.append(check("laAla", cid, t_rel * math.log(2), k, "laAla", s))
    if len(kap.lam):
        lam = 1 / t_rel
        out.append(check("laAla-gap-lower", cid, lam / 2, kap.min_lambda, "laAla", s))
        out.append(check("laAla-gap-upper", cid, kap.min_lambda, lam, "laAla", s))
    tau_e = ctx.tau("L2", eps=math.exp(-1))
    out.append(check("classic-lower", cid, t_ls / 2, tau_e, "classic", s))
    loglog = math.log(math.log(1 / c.pi_min))
    out.append(check("classic-upper", cid, tau_e, t_ls * (1 + 0.25 * loglog), "classic", s))
    out.append(report("main3-ratio", cid, tau2 / rho.value if rho.value > 0 else math.inf,
                      "main3intro", "tau2/rho"))
    return out


def spectral_records(ctx: ChainContext) -> list[VerificationRecord]:
    c, cid = ctx.chain, ctx.id
    pi = c.pi
    out = []
    ts = np.array([0.1, 0.5, 1.0, 2.0]) * ctx.t_rel
    err = 0.0
    contraction = -math.inf
    for t in ts:
        H = spectral.heat_matrix(c, t)
        d2 = np.sqrt(((H - pi) ** 2 / pi).sum(axis=1))
        H2 = spectral.heat_matrix(c, 2 * t)
        err = max(err, float(np.max(np.abs(d2 ** 2 - (np.diag(H2) / pi - 1)))))
        for sdt in (0.25, 1.0):
            Hs = spectral.heat_matrix(c, t + sdt * ctx.t_rel)
            ds = np.sqrt(((Hs - pi) ** 2 / pi).sum(axis=1))
            contraction = max(contraction, float(np.max(ds - math.exp(-sdt) * d2)))
    out.append(check("generalLp-identity", cid, err, 0.0, "generalLp", 1e-10))
    out.append(check("L2contraction", cid, contraction, 0.0, "L2contraction", 1e-10))
    # d_inf(2t) = d_2(t)^2 for the worst start
    lin = []
    for t in ts:
        a = distance.worst_distance(c, 2 * t, "inf")
        b = distance.worst_distance(c, t, 2) ** 2
        lin.append(abs(a - b) / max(b, 1e-300))
    out.append(check("L2Linfty-identity", cid, max(lin), 0.0, "L2Linfty", 1e-9, "relative"))
    # tau_1(delta) >= t_rel log(1/delta)
    gaps = []
    for d in (0.5, 0.25, 0.125):
        gaps.append((ctx.t_rel * math.log(1 / d), ctx.tau("L1", eps=d)))
    out.append(check("lowerL1rel", cid, *_worst(*map(np.array, zip(*gaps))), "lowerL1rel", 1e-7))
    # L2 level-set bound
    level = -math.inf
    for t in ts:
        H = spectral.heat_matrix(c, t)
        for x in range(c.n):
            h = H[x] / pi
            lhs = float(pi @ (h - 1) ** 2)
            for ell in (1.0, 1.5, 3.0):
                level = max(level, lhs - distance.l2_level_bound(h, pi, ell))
    out.append(check("L2calculation", cid, level, 0.0, "L2calculation", 1e-8))
    return out


def hitting_records(ctx: ChainContext) -> list[VerificationRecord]:
    c, cid = ctx.chain, ctx.id
    sets = ctx.family.sets
    if not sets:
        return []
    out = []
    fs = hitting.family_spectra(c, sets)
    ts = np.linspace(0, 4, 20) * ctx.t_rel
    dom = -math.inf
    for t in ts:
        S = hitting.family_survival(c, sets, t, start="pi_A")
        dom = max(dom, float(np.max(S - np.exp(-fs.lam * t))))
    out.append(check("stationary<quasi", cid, dom, 0.0, "stationary<quasi", 1e-10))
    sub = -math.inf
    for t in (0.5 * ctx.t_rel, ctx.t_rel, 2 * ctx.t_rel):
        base = hitting.family_survival(c, sets, t).max(axis=1)
        for m in (2, 3):
            later = hitting.family_survival(c, sets, m * t)
            sub = max(sub, float(np.max(later - (base ** m)[:, None])))
    out.append(check("submultiplicativity", cid, sub, 0.0, "rhobarrho", 1e-10))
    return out


def functional_records(ctx: ChainContext) -> list[VerificationRecord]:
    c, cid = ctx.chain, ctx.id
    pi, n = c.pi, c.n
    rng = np.random.default_rng(ctx.config.seed)
    k = ctx.config.samples
    out = []
    fs = rng.normal(size=(k, n))
    star = maximal.maximal_functions(c, fs, "continuous")
    for p in (2.0, 3.0):
        ratio = (pi @ np.abs(star.T) ** p) ** (1 / p) / (pi @ np.abs(fs.T) ** p) ** (1 / p)
        out.append(check(f"starr-L{p:g}", cid, float(ratio.max()), p / (p - 1), "ergodic1", 1e-8))
    if c.rates is None:
        dstar = maximal.maximal_functions(c, fs, "discrete")
        for p in (2.0, 3.0):
            ratio = (pi @ np.abs(dstar.T) ** p) / (pi @ np.abs(fs.T) ** p)
            out.append(check(f"starr-discrete-L{p:g}", cid, float(ratio.max()),
                             2 * (p / (p - 1)) ** p, "Starrdisc", 1e-8))
    recs = maximal.surprise_bound_check(c, ctx.family)
    if recs:
        worst = max(recs, key=lambda r: max(r.cont_l1, np.nan_to_num(r.disc_half_l1)) / r.bound)
        lhs = max(worst.cont_l1, np.nan_to_num(worst.disc_half_l1))
        out.append(check("surprise", cid, lhs, worst.bound, "surprise", 1e-8))
        rev = max(recs, key=lambda r: r.reverse_lhs - abs(math.log(r.mass)))
        out.append(check("surprise-reverse", cid, rev.reverse_lhs, abs(math.log(rev.mass)),
                         "surprise", 1e-8))
    mus = _random_distributions(rng, n, k)
    D = np.array([distance.rel_entropy(m, pi) for m in mus])
    l2sq = ((mus - pi) ** 2 / pi).sum(axis=1)
    l1 = np.abs(mus - pi).sum(axis=1)
    out.append(check("su", cid, *_worst(D, np.log1p(l2sq)), "su", 1e-10))
    out.append(check("pinsker", cid, *_worst(l1 ** 2, 2 * D), "entL1", 1e-10))
    # gradient of the LS objective against central differences
    grad_err = scale_err = 0.0
    for _ in range(20):
        f = rng.exponential(size=n) + 0.1
        val, g = logsob.ls_objective(c, f)
        h = 1e-6
        fd = np.array([(logsob.ls_objective(c, f + h * e, False)
                        - logsob.ls_objective(c, f - h * e, False)) / (2 * h)
                       for e in np.eye(n)])
        grad_err = max(grad_err, float(np.abs(fd - g).max() / max(np.abs(g).max(), 1e-12)))
        scale_err = max(scale_err, abs(logsob.ls_objective(c, 3.7 * f, False) - val))
    out.append(check("ls-gradient", cid, grad_err, 0.0, "deftl", 1e-5))
    out.append(check("ls-scale-invariance", cid, scale_err, 0.0, "deftl", 1e-10))
    return out


def logsob_records(ctx: ChainContext) -> list[VerificationRecord]:
    c, cid, s = ctx.chain, ctx.id, ctx.config.slack
    ls = ctx.ls
    out = [
        check("cls-bracket-lower", cid, ls.lower, ls.c_ls, "deftl", logsob.BRACKET_TOL),
        check("cls-bracket-upper", cid, ls.c_ls, ls.upper, "deftl", logsob.BRACKET_TOL),
    ]
    k = ctx.kappa().value
    norm = spectral.two_q_norm(c, k / 2, 4, seed=ctx.config.seed)
    out.append(check("two-to-four-norm", cid, norm.value, 7.0, "kappa=tell", 0.0,
                     note="lower-bound estimate of the operator norm"))
    bound = logsob.hyper_upper(ctx.t_rel, 4, k / 2, 7)
    out.append(check("hyper-upper", cid, ls.t_ls, bound, "hyper", s))
    mls = ctx.mls
    rho_ent = ctx.charac("rho_ent").value
    tau_ent = ctx.tau("Entropy")
    out.append(report("cmls-vs-rho-ent", cid, (1 / mls.c_mls) / rho_ent if rho_ent > 0 else math.inf,
                      "c_MLS", "(1/c_MLS)/rho_ent"))
    out.append(report("cmls-vs-tau-ent", cid, (1 / mls.c_mls) / tau_ent, "c_MLS",
                      "(1/c_MLS)/tau_ent"))
    t_ht = ctx.charac("t_ht").value
    out.append(report("t-ht-vs-t-ls", cid, t_ht / ls.t_ls, "rhorhoent", "t_ht/t_LS"))
    for sel in charac.HIT_SELECTORS:
        h = charac.hit_eps(c, ctx.config.eps, sel, ctx.family)
        out.append(report(f"hit-eps-{sel}", cid, h.value, "hit",
                          f"eps={ctx.config.eps:g}, interpretation={sel}"))
    return out


def core_suite(ctx: ChainContext) -> list[VerificationRecord]:
    out = sandwich_records(ctx)
    out += spectral_records(ctx)
    out += hitting_records(ctx)
    out += functional_records(ctx)
    out += logsob_records(ctx)
    return out


# --- discrete suite ---------------------------------------------------------------

def _psd(chain: ChainModel) -> bool:
    return float(spectral.decompose(chain).eigenvalues.min()) >= -spectral.CLUSTER_TOL


def discrete_suite(ctx: ChainContext) -> list[VerificationRecord]:
    c, cid, s = ctx.chain, ctx.id, ctx.config.slack
    if c.rates is not None:
        return [diagnostic("discrete-suite", cid, "aveL2",
                           "not applicable: chain has non-unit jump rates")]
    out = []
    pi = c.pi
    rho_d = ctx.charac("rho", "discrete")
    rho_ent_d = ctx.charac("rho_ent", "discrete")
    tau2_ave = ctx.tau("L2", "averaged")
    tau_ent_ave = ctx.tau("Entropy", "averaged")
    out.append(check("aveL2-rho", cid, rho_d.value, tau2_ave, "aveL2", s))
    out.append(check("aveL2-rho-ent", cid, rho_ent_d.value, tau_ent_ave, "aveL2", s))
    try:
        tau2_d = ctx.tau("L2", "discrete")
        lower = max(rho_d.value, ctx.t_rel_abs * math.log(2))
        out.append(check("discL2", cid, lower, tau2_d, "discL2", s))
    except NotMixing as exc:
        out.append(_diag(ctx, "discL2", "discL2", exc))
    kd = ctx.kappa("discrete").value
    out.append(check("com1-discrete", cid, kd, 3 * rho_d.value, "com1", s))
    rho = ctx.charac("rho").value
    out.append(report("rhodiscrhocts-ratio", cid, rho_d.value / rho if rho > 0 else math.inf,
                      "rhodiscrhocts", "rho_discrete/rho"))

    # averaged-chain contraction
    lam2 = 1 - 1 / ctx.t_rel
    worst = -math.inf
    for k in range(2, 7):
        Pk = spectral.discrete_matrix(c, k - 2)
        base = ((Pk - pi) ** 2 / pi).sum(axis=1)
        for kk in range(1, 7):
            A = spectral.averaged_matrix(c, k + kk)
            lhs = ((A - pi) ** 2 / pi).sum(axis=1)
            rhs = (1 / (2 * math.e * kk)) ** 2 * (base + 1) + lam2 ** (2 * kk + 2) * base
            worst = max(worst, float(np.max(lhs - rhs)))
    out.append(check("avcts", cid, worst, 0.0, "avcts", 1e-8))
    rng = np.random.default_rng(ctx.config.seed)
    mus = _random_distributions(rng, c.n, ctx.config.samples)
    base = np.sqrt(((mus - pi) ** 2 / pi).sum(axis=1))
    ave = disc = -math.inf
    for k in range(1, 13):
        # P^k (I + P)/2, the operator the contraction bound is proved for
        A = mus @ spectral.averaged_matrix(c, k + 1)
        lhs = np.sqrt(((A - pi) ** 2 / pi).sum(axis=1))
        ave = max(ave, float(np.max(lhs - base * max(math.exp(-k / ctx.t_rel),
                                                     1 / (2 * math.e * k)))))
        Pk = mus @ spectral.discrete_matrix(c, k)
        lhs = np.sqrt(((Pk - pi) ** 2 / pi).sum(axis=1))
        factor = 0.0 if ctx.t_rel_abs == 0 else math.exp(-k / ctx.t_rel_abs)
        disc = max(disc, float(np.max(lhs - base * factor)))
    out.append(check("avepoincare", cid, ave, 0.0, "avepoincare", 1e-8))
    out.append(check("discpoincare", cid, disc, 0.0, "discpoincare", 1e-8))
    if math.isfinite(ctx.t_rel_abs) and ctx.t_rel_abs > 0:
        try:
            pairs = [(ctx.t_rel_abs * math.log(1 / d), ctx.tau("L1", "discrete", d))
                     for d in (0.5, 0.25)]
            out.append(check("lowerL1rel-discrete", cid, *_worst(*map(np.array, zip(*pairs))),
                             "lowerL1rel", 1e-7))
        except NotMixing as exc:
            out.append(_diag(ctx, "lowerL1rel-discrete", "lowerL1rel", exc))
    sets = ctx.family.sets
    if sets and _psd(c):
        fs = hitting.family_spectra(c, sets)
        dom = comp = -math.inf
        for k in range(0, 51):
            S = hitting.family_survival(c, sets, k, "discrete", start="pi_A")
            dom = max(dom, float(np.max(S - (1 - fs.lam) ** k)))
        for t in range(0, 13):
            cont = hitting.family_survival(c, sets, t)
            dis = hitting.family_survival(c, sets, 4 * t, "discrete")
            comp = max(comp, float(np.max(0.25 * dis - cont)))
        out.append(check("stationary<quasi-discrete", cid, dom, 0.0, "stationary<quasi", 1e-12))
        out.append(check("rhodiscrhocts-survival", cid, comp, 0.0, "rhodiscrhocts", 1e-10))
    elif sets:
        out.append(diagnostic("stationary<quasi-discrete", cid, "stationary<quasi",
                              "skipped: kernel has negative eigenvalues (not lazy)"))
    return out


# --- tree suite -------------------------------------------------------------------

def tree_suite(ctx: ChainContext) -> list[VerificationRecord]:
    c, cid = ctx.chain, ctx.id
    try:
        tc = trees.tree_theorem_check(c, cid, ctx.config.slack, ctx.config.seed)
    except NotATree as exc:
        return [_diag(ctx, "trees", "trees", exc)]
    out = list(tc.records)
    if c.rates is None:
        rows = trees.robustness_experiment(c, 2, ctx.config.robustness_trials, ctx.config.seed, cid)
        summ = trees.ratio_summary(rows)
        out.append(report("trees2-robustness-tau2", cid, summ["max"], "trees2",
                          f"M=2, {len(rows)} trials, median {summ['median']:.6g}"))
        inf = trees.ratio_summary(rows, "tau_inf_ratio")
        out.append(report("trees2-robustness-tau-inf", cid, inf["max"], "trees2",
                          f"M=2, median {inf['median']:.6g}"))
    for M in (1, 2, 4):
        rows = trees.robustness_experiment(c, M, 5, ctx.config.seed, cid, variant="rows")
        summ = trees.ratio_summary(rows)
        out.append(report(f"laziness-M{M}", cid, summ["max"], "laziness",
                          f"row rescaling, median {summ['median']:.6g}"))
    return out


def run_suite(chain: ChainModel, suite: str = "core", config: Config | None = None
              ) -> list[VerificationRecord]:
    if suite not in SUITES:
        raise InputError(f"suite must be one of {SUITES}")
    ctx = ChainContext(chain, config)
    chain.require_reversible("verification")
    out: list[VerificationRecord] = []
    if suite in ("core", "all"):
        out += core_suite(ctx)
    if suite in ("discrete", "all"):
        out += discrete_suite(ctx)
    if suite in ("trees", "all"):
        out += tree_suite(ctx)
    return out


def failures(records) -> list[VerificationRecord]:
    return [r for r in records if r.status == "fail"]


# --- analyze -------------------------------------------------------------------------

QUANTITIES = (
    "tau1", "tau2", "tau_inf", "tau_ent", "t_rel", "t_rel_abs",
    "rho", "rho_ent", "rho_bar", "rho_bar_ent", "t_ht", "kappa", "hit_eps",
    "c_ls", "t_ls", "c_mls",
    "tau2_discrete", "tau_ent_discrete", "tau1_discrete", "tau2_ave", "tau_ent_ave",
    "rho_discrete", "rho_ent_discrete", "rho_bar_discrete", "kappa_discrete",
    "tree_root", "b_x", "alpha_x",
)


def _mix(metric, mode="continuous"):
    def fn(ctx):
        taus = ctx.taus(metric, mode)
        return {"value": float(taus.max()), "per_state": taus.tolist(), "mode": mode,
                "metric": metric}
    return fn


def _rho(kind, mode="continuous"):
    def fn(ctx):
        r = ctx.charac(kind, mode)
        out = {"value": r.value, "mode": mode, "label": r.label, "complete": r.complete,
               "clamped": r.clamped}
        if r.per_state is not None:
            out["per_state"] = r.per_state.tolist()
        out["argmax_sets"] = [[ctx.chain.states[i] for i in A] for A in r.argmax]
        return out
    return fn


def _kappa(mode):
    def fn(ctx):
        k = ctx.kappa(mode)
        return {"value": k.value, "mode": mode, "complete": k.complete,
                "argmax_set": [ctx.chain.states[i] for i in k.argmax_set],
                "min_lambda": k.min_lambda if len(k.lam) else None}
    return fn


def _c_ls(ctx):
    ls = ctx.ls
    return {"value": ls.c_ls, "t_ls": ls.t_ls, "bracket": [ls.lower, ls.upper],
            "witness_kind": ls.witness_kind, "restarts": ls.restarts,
            "agreeing_starts": ls.agreeing_starts, "seed": ls.seed}


def _t_ls(ctx):
    return {"value": ctx.ls.t_ls}


def _c_mls(ctx):
    m = ctx.mls
    return {"value": m.c_mls, "witness_kind": m.witness_kind, "restarts": m.restarts,
            "seed": m.seed}


def _hit(ctx):
    out = {}
    for sel in charac.HIT_SELECTORS:
        h = charac.hit_eps(ctx.chain, ctx.config.eps, sel, ctx.family)
        out[sel] = h.value
    return {"value": out["literal"], "eps": ctx.config.eps, "interpretations": out}


def _root(ctx):
    r = trees.root_tree(ctx.chain)
    return {"value": ctx.chain.states[r.root], "two_central_vertices": r.tie}


def _bx(ctx):
    r = trees.root_tree(ctx.chain)
    vals = {str(ctx.chain.states[x]): trees.b_x(r, x).sup for x in r.leaves}
    return {"value": max(vals.values()), "per_leaf": vals}


def _alpha(ctx):
    r = trees.root_tree(ctx.chain)
    vals = {str(ctx.chain.states[x]): trees.b_x(r, x).alpha_x for x in r.leaves}
    return {"value": min(vals.values()), "per_leaf": vals,
            "alpha": 1 / ctx.kappa().value if ctx.kappa().value > 0 else math.inf}


ANALYZERS = {
    "tau1": _mix("L1"), "tau2": _mix("L2"), "tau_inf": _mix("Linf"), "tau_ent": _mix("Entropy"),
    "t_rel": lambda ctx: {"value": ctx.t_rel},
    "t_rel_abs": lambda ctx: {"value": ctx.t_rel_abs},
    "rho": _rho("rho"), "rho_ent": _rho("rho_ent"), "rho_bar": _rho("rho_bar"),
    "rho_bar_ent": _rho("rho_bar_ent"), "t_ht": _rho("t_ht"),
    "kappa": _kappa("continuous"), "hit_eps": _hit,
    "c_ls": _c_ls, "t_ls": _t_ls, "c_mls": _c_mls,
    "tau2_discrete": _mix("L2", "discrete"), "tau_ent_discrete": _mix("Entropy", "discrete"),
    "tau1_discrete": _mix("L1", "discrete"),
    "tau2_ave": _mix("L2", "averaged"), "tau_ent_ave": _mix("Entropy", "averaged"),
    "rho_discrete": _rho("rho", "discrete"), "rho_ent_discrete": _rho("rho_ent", "discrete"),
    "rho_bar_discrete": _rho("rho_bar", "discrete"), "kappa_discrete": _kappa("discrete"),
    "tree_root": _root, "b_x": _bx, "alpha_x": _alpha,
}


def analyze(chain: ChainModel, quantities, config: Config | None = None,
            timings: bool = False) -> tuple[dict, bool]:
    """Compute the requested quantities.

    Returns ``(report, input_error)``.  Per-quantity failures are reported in
    place; ``input_error`` is true when any of them was an input error.
    """
    ctx = ChainContext(chain, config)
    unknown = [q for q in quantities if q not in ANALYZERS]
    if unknown:
        raise InputError(f"unknown quantities {unknown}; choose from {list(QUANTITIES)}")
    results = {}
    bad_input = False
    for q in quantities:
        start = time.perf_counter()
        try:
            entry = ANALYZERS[q](ctx)
        except NotMixing as exc:
            entry = {"value": None, "error": "NotMixing", "message": str(exc),
                     "t_rel_absolute": exc.t_rel_absolute}
        except InputError as exc:
            bad_input = True
            entry = {"value": None, "error": type(exc).__name__, "message": str(exc)}
        except MixcharError as exc:
            entry = {"value": None, "error": type(exc).__name__, "message": str(exc)}
        if timings:
            entry["seconds"] = time.perf_counter() - start
        results[q] = entry
    fam = ctx.__dict__.get("family")
    doc = {
        "chain": chain_summary(chain),
        "config": {"seed": ctx.config.seed, "tol": ctx.config.tol,
                   "max_subsets": ctx.config.max_subsets, "eps": ctx.config.eps},
        "constants": charac.toolkit_constants(),
        "family": None if fam is None else {"delta": fam.delta, "size": len(fam),
                                            "complete": fam.complete},
        "quantities": results,
    }
    return doc, bad_input


def chain_summary(chain: ChainModel) -> dict:
    return {"id": chain.name, "n": chain.n, "states": [str(s) for s in chain.states],
            "reversible": chain.reversible, "source": chain.source,
            "generator_form": chain.generator_form}
