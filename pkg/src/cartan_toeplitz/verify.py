"""Named verification suites.

Each suite returns a list of :class:`Check` records. Statistical verdicts
follow one fixed convention: a quantity *vanishes* when it is within
3 standard errors of zero and is *nonzero* when it is at least 5 standard
errors away; anything in between is inconclusive.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import integrate

from . import bergman as bg
from .matdomain import RngStream, TAG_HAAR, haar_unitaries, sample_domain_batch
from .montecarlo import MCConfig, cached_samples, mean_estimate
from .polyrep import (
    cached_decomposition,
    component,
    fischer_inner,
    highest_weight_vectors,
    is_closed,
    monomial_basis,
    weyl_dim,
)
from .symbols import Group, compile_symbol, invariance_check

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
SUITES = ("decomposition", "commutativity", "centralizer", "nonnormal", "disk-oracle", "intertwining",
          "reproducing", "symbols", "infrastructure")

DEFECT_TOL = 5e-2
NORMALITY_GOLDEN = 1.0
GOLDEN_REL_TOL = 0.2
NONCOMMUTING_PAIR = ("G[1,1]", "G[1,2]")


def vanishing(value: float, stderr: float) -> str:
    if stderr <= 0:
        return PASS if value == 0 else FAIL
    z = abs(value) / stderr
    return PASS if z <= 3 else FAIL if z >= 5 else INCONCLUSIVE


def witness(value: float, noise: float) -> str:
    if noise <= 0:
        return PASS if value > 0 else FAIL
    z = abs(value) / noise
    return PASS if z >= 5 else FAIL if z <= 3 else INCONCLUSIVE


def at_most(value: float, tol: float) -> str:
    return PASS if value <= tol else FAIL


def combine(verdicts) -> str:
    verdicts = list(verdicts)
    if FAIL in verdicts:
        return FAIL
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return PASS


def _f(x):
    return None if x is None else float(x)


@dataclass
class Check:
    suite: str
    criterion: int
    metric: str
    value: float
    verdict: str
    stderr_bound: float | None = None
    threshold: float | None = None
    n: int | None = None
    lam: float | None = None
    mc: dict | None = None
    component: dict | None = None
    symbol: str | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        d["lambda"] = _f(d.pop("lam"))
        d["value"] = _f(self.value)
        d["stderr_bound"] = _f(self.stderr_bound)
        d["threshold"] = _f(self.threshold)
        return d


@dataclass(frozen=True)
class SuiteParams:
    """User overrides; ``None`` keeps each suite's pinned value."""

    n: int | None = None
    dmax: int | None = None
    lam: float | None = None
    nsamples: int | None = None
    seed: int | None = None
    shards: int = 1

    def pick(self, **pinned):
        out = dict(pinned)
        for k in pinned:
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        return out


DEFAULT_SEED = 12345


def _cfg(nsamples, seed, shards) -> MCConfig:
    return MCConfig(int(nsamples), int(seed), int(shards))


def _mc(cfg: MCConfig) -> dict:
    return {"nsamples": cfg.nsamples, "seed": cfg.master_seed}


def _comp_json(c) -> dict:
    return {"mu": list(c.mu.m), "dim": c.dim}


def components_upto(n: int, dmax: int, dmin: int = 0) -> list:
    return [c for d in range(dmin, dmax + 1) for c in cached_decomposition(n, d)]


# -- exact suites -----------------------------------------------------------


def suite_decomposition(p: SuiteParams) -> list[Check]:
    if p.n is not None or p.dmax is not None:
        n = p.n or 2
        plan = [(n, p.dmax if p.dmax is not None else (4 if n <= 2 else 3))]
    else:
        plan = [(2, 4), (3, 3)]
    out = []
    for n, dmax in plan:
        for d in range(dmax + 1):
            hw = highest_weight_vectors(n, d)
            comps = cached_decomposition(n, d)
            total = sum(weyl_dim(c.mu, n) ** 2 for c in comps)
            expected = math.comb(n * n + d - 1, d)
            dims_ok = all(c.dim == weyl_dim(c.mu, n) ** 2 for c in comps)
            closed = all(is_closed(c) for c in comps)
            det = {"components": [{"mu": list(c.mu.m), "weyl_dim": c.weyl_dim, "dim": c.dim} for c in comps],
                   "hwv_count": len(hw), "dims_match": dims_ok, "closed": closed}
            out.append(Check("decomposition", 1, f"cauchy_identity[n={n},d={d}]", total,
                             PASS if total == expected and dims_ok and closed and len(hw) == len(comps) else FAIL,
                             threshold=expected, n=n, details=det))
            worst = 0.0
            for i, a in enumerate(comps):
                for b in comps[i + 1:]:
                    for pa in a.basis:
                        for pb in b.basis:
                            v = fischer_inner(pa, pb)
                            worst = max(worst, abs(complex(v)))
            out.append(Check("decomposition", 2, f"fischer_orthogonality[n={n},d={d}]", worst,
                             PASS if worst == 0 else FAIL, threshold=0.0, n=n))
    return out


# -- disk oracle ------------------------------------------------------------


def disk_norm_oracle(k: int, lam: float) -> float:
    """``||z^k||^2`` in the weighted Bergman space of the unit disk (quadrature)."""
    c = lam - 1  # normalizer of (1-|z|^2)^(lam-2) under normalized area measure
    val, _ = integrate.quad(lambda r: r ** (2 * k) * (1 - r * r) ** (lam - 2) * 2 * r, 0, 1,
                            epsabs=1e-14, epsrel=1e-12)
    return c * val


def disk_eigenvalue_oracle(k: int, lam: float) -> float:
    """Eigenvalue of the Toeplitz operator with symbol |z|^2 on z^k."""
    num, _ = integrate.quad(lambda r: r ** (2 * k + 2) * (1 - r * r) ** (lam - 2) * 2 * r, 0, 1,
                            epsabs=1e-14, epsrel=1e-12)
    den, _ = integrate.quad(lambda r: r ** (2 * k) * (1 - r * r) ** (lam - 2) * 2 * r, 0, 1,
                            epsabs=1e-14, epsrel=1e-12)
    return num / den


def suite_disk_oracle(p: SuiteParams) -> list[Check]:
    q = p.pick(lam=3.0, nsamples=200_000, seed=DEFAULT_SEED, dmax=5)
    cfg = _cfg(q["nsamples"], q["seed"], p.shards)
    sym = compile_symbol("s1^2", 1)
    out = []
    for k in range(q["dmax"] + 1):
        comp = component(1, (k,))
        B = bg.toeplitz_block(sym, comp, q["lam"], cfg)
        est, se = float(B.matrix[0, 0].real), float(B.stderr[0, 0])
        oracle = disk_eigenvalue_oracle(k, q["lam"])
        out.append(Check("disk-oracle", 3, f"eigenvalue_error[k={k}]", abs(est - oracle),
                         vanishing(abs(est - oracle), se), stderr_bound=se, n=1, lam=q["lam"], mc=_mc(cfg),
                         component=_comp_json(comp), symbol="s1^2",
                         details={"estimate": est, "oracle": oracle}))
    return out


# -- reproducing kernel -----------------------------------------------------


def suite_reproducing(p: SuiteParams) -> list[Check]:
    q = p.pick(nsamples=200_000, seed=DEFAULT_SEED, dmax=2)
    ns = [p.n] if p.n is not None else [1, 2]
    out = []
    for n in ns:
        lam = p.lam if p.lam is not None else bg.DEFAULT_LAMBDA[n]
        cfg = _cfg(q["nsamples"], q["seed"], p.shards)
        ss = cached_samples(n, cfg)
        Ws = 0.5 * sample_domain_batch(n, 5, RngStream(q["seed"], 0, TAG_HAAR + 1)).points
        polys = [m for d in range(q["dmax"] + 1) for m in monomial_basis(n, d)]
        for wi, W in enumerate(Ws):
            kern = lambda Zs, W=W: bg.kernel_batch(Zs, W, lam)
            worst, worst_se, worst_z, verdicts = 0.0, 0.0, -1.0, []
            for f in polys:
                est = bg.weighted_inner(f, kern, lam, ss, n=n)
                err = abs(est.value - f.evaluate(W))
                verdicts.append(vanishing(err, est.stderr))
                z = err / est.stderr if est.stderr else 0.0
                if z > worst_z:
                    worst, worst_se, worst_z = err, est.stderr, z
            out.append(Check("reproducing", 4, f"reproducing_error[n={n},W={wi}]", worst, combine(verdicts),
                             stderr_bound=worst_se, n=n, lam=lam, mc=_mc(cfg),
                             details={"polynomials": len(polys), "max_z": worst_z}))
    return out


# -- operator suites --------------------------------------------------------


def _n_lam(p: SuiteParams):
    n = p.n if p.n is not None else 2
    lam = p.lam if p.lam is not None else bg.DEFAULT_LAMBDA.get(n, 2 * n + 1)
    return n, lam


def suite_commutativity(p: SuiteParams) -> list[Check]:
    n, lam = _n_lam(p)
    q = p.pick(nsamples=200_000, seed=DEFAULT_SEED)
    cfg = _cfg(q["nsamples"], q["seed"], p.shards)
    out = []
    # scalar action of UU-invariant symbols
    for text in ("tr(G)", "det(G)"):
        sym = compile_symbol(text, n)
        for comp in components_upto(n, p.dmax if p.dmax is not None else 2, 1):
            B = bg.toeplitz_block(sym, comp, lam, cfg)
            v = bg.scalar_defect(B)
            out.append(Check("commutativity", 5, "scalar_defect", v, at_most(v, DEFECT_TOL),
                             stderr_bound=bg.scalar_defect_noise(B), threshold=DEFECT_TOL, n=n, lam=lam,
                             mc=_mc(cfg), component=_comp_json(comp), symbol=text,
                             details={"scalar": complex(np.trace(B.matrix) / B.dim).real}))
    # block diagonality across components
    comps = components_upto(n, p.dmax if p.dmax is not None else 3)
    for text in ("tr(G)", "G[1,2]", "H[1,2]"):
        sym = compile_symbol(text, n)
        for i, a in enumerate(comps):
            for b in comps:
                if a is b:
                    continue
                X = bg.cross_block(sym, a, b, lam, cfg)
                z = X.z_scores()
                k = np.unravel_index(int(np.argmax(z)), z.shape)
                verdicts = [vanishing(abs(X.values[ij]), X.stderr[ij]) for ij in np.ndindex(*z.shape)]
                out.append(Check("commutativity", 6, f"cross_block_max_abs[{a.mu}->{b.mu}]",
                                 abs(X.values[k]), combine(verdicts), stderr_bound=float(X.stderr[k]),
                                 n=n, lam=lam, mc=_mc(cfg), symbol=text,
                                 details={"from": list(a.mu.m), "to": list(b.mu.m), "entries": int(z.size),
                                          "max_z": float(z[k])}))
    # non-commutativity witness among left-invariant symbols
    comp = component(n, (1,) + (0,) * (n - 1))
    B1, B2 = (bg.toeplitz_block(compile_symbol(t, n), comp, lam, cfg) for t in NONCOMMUTING_PAIR)
    v, noise = bg.commutator_defect(B1, B2), bg.commutator_defect_noise(B1, B2)
    out.append(Check("commutativity", 9, "commutator_defect", v, witness(v, noise), stderr_bound=noise,
                     threshold=5 * noise, n=n, lam=lam, mc=_mc(cfg), component=_comp_json(comp),
                     symbol=" , ".join(NONCOMMUTING_PAIR)))
    return out


def suite_centralizer(p: SuiteParams) -> list[Check]:
    n, lam = _n_lam(p)
    q = p.pick(nsamples=200_000, seed=DEFAULT_SEED)
    cfg = _cfg(q["nsamples"], q["seed"], p.shards)
    a, b = compile_symbol("G[1,2]", n), compile_symbol("H[1,2]", n)
    out = []
    for comp in components_upto(n, p.dmax if p.dmax is not None else 2):
        B1, B2 = bg.toeplitz_block(a, comp, lam, cfg), bg.toeplitz_block(b, comp, lam, cfg)
        v = bg.commutator_defect(B1, B2)
        out.append(Check("centralizer", 7, "commutator_defect", v, at_most(v, DEFECT_TOL),
                         stderr_bound=bg.commutator_defect_noise(B1, B2), threshold=DEFECT_TOL, n=n, lam=lam,
                         mc=_mc(cfg), component=_comp_json(comp), symbol="G[1,2] , H[1,2]"))
    return out


def nonnormal_check(n, lam, cfg) -> tuple[float, float]:
    comp = component(n, (1,) + (0,) * (n - 1))
    B = bg.toeplitz_block(compile_symbol("G[1,2]", n), comp, lam, cfg)
    return bg.normality_defect(B), bg.normality_defect_noise(B)


def suite_nonnormal(p: SuiteParams) -> list[Check]:
    n, lam = _n_lam(p)
    q = p.pick(nsamples=400_000, seed=DEFAULT_SEED)
    cfg = _cfg(q["nsamples"], q["seed"], p.shards)
    comp = component(n, (1,) + (0,) * (n - 1))
    v, noise = nonnormal_check(n, lam, cfg)
    common = dict(n=n, lam=lam, mc=_mc(cfg), component=_comp_json(comp), symbol="G[1,2]")
    rel = abs(v - NORMALITY_GOLDEN) / NORMALITY_GOLDEN
    return [
        Check("nonnormal", 8, "normality_defect", v, witness(v, noise), stderr_bound=noise,
              threshold=5 * noise, **common),
        Check("nonnormal", 8, "normality_golden_rel_error", rel, at_most(rel, GOLDEN_REL_TOL),
              threshold=GOLDEN_REL_TOL, details={"golden": NORMALITY_GOLDEN, "value": v}, **common),
    ]


def suite_intertwining(p: SuiteParams) -> list[Check]:
    n, lam = _n_lam(p)
    q = p.pick(nsamples=200_000, seed=DEFAULT_SEED)
    cfg = _cfg(q["nsamples"], q["seed"], p.shards)
    comp = component(n, (1,) + (0,) * (n - 1))
    rng = RngStream(q["seed"], 0, TAG_HAAR)
    out = []
    for text, group, expect in (("tr(G)", Group.UUn, "small"), ("G[1,2]", Group.UnL, "small"),
                                ("G[1,2]", Group.UnR, "witness")):
        B = bg.toeplitz_block(compile_symbol(text, n), comp, lam, cfg)
        r = bg.intertwining_analysis(B, comp, group, rng, trials=20)
        if expect == "small":
            verdict, thr = at_most(r.value, DEFECT_TOL), DEFECT_TOL
        else:
            verdict, thr = witness(r.value, r.noise), 5 * r.noise
        out.append(Check("intertwining", 10, f"intertwining_defect[{group.value}]", r.value, verdict,
                         stderr_bound=r.noise, threshold=thr, n=n, lam=lam, mc=_mc(cfg),
                         component=_comp_json(comp), symbol=text, details={"trials": 20}))
    return out


# -- symbols and infrastructure -----------------------------------------------


def suite_symbols(p: SuiteParams) -> list[Check]:
    n = p.n if p.n is not None else 2
    seed = p.seed if p.seed is not None else DEFAULT_SEED
    expected = {
        "G[1,2]": {Group.UnL: True, Group.UnR: False},
        "H[1,2]": {Group.UnL: False, Group.UnR: True},
        "s1*s2" if n == 2 else "s1*s" + str(n): {Group.UUn: True, Group.UnL: True, Group.UnR: True},
    }
    out = []
    for i, (text, groups) in enumerate(expected.items()):
        sym = compile_symbol(text, n)
        for j, (g, should) in enumerate(groups.items()):
            rep = invariance_check(sym, g, RngStream(seed, 10 * i + j, TAG_HAAR + 2), 100)
            ok = rep.passed() == should
            out.append(Check("symbols", 11, f"invariance[{g.value}]", rep.max_rel_deviation, PASS if ok else FAIL,
                             threshold=1e-10, n=n, symbol=text,
                             details={"expected_invariant": should, "kind": sym.kind.value, "trials": 100}))
    return out


def suite_infrastructure(p: SuiteParams) -> list[Check]:
    n, lam = _n_lam(p)
    seed = p.seed if p.seed is not None else DEFAULT_SEED
    out = []
    comps = [component(n, (1,) + (0,) * (n - 1)), component(n, (2,) + (0,) * (n - 1))]
    small, large = 50_000, 200_000
    for comp in comps:
        s1 = np.median(bg.gram_matrix(comp, lam, _cfg(small, seed, 1)).stderr)
        s2 = np.median(bg.gram_matrix(comp, lam, _cfg(large, seed, 1)).stderr)
        ratio = float(s1 / s2) / math.sqrt(large / small)
        out.append(Check("infrastructure", 12, "stderr_scaling_ratio", ratio,
                         PASS if 1 / 1.5 <= ratio <= 1.5 else FAIL, threshold=1.5, n=n, lam=lam,
                         component=_comp_json(comp),
                         details={"median_stderr": [float(s1), float(s2)], "nsamples": [small, large]}))
    sym = compile_symbol("G[1,2]", n)
    blocks = [bg.toeplitz_block(sym, comps[1], lam, _cfg(small + 7, seed, s)) for s in (1, 3, 8)]
    same = all(np.array_equal(blocks[0].matrix, b.matrix) and np.array_equal(blocks[0].stderr, b.stderr)
               for b in blocks[1:])
    out.append(Check("infrastructure", 12, "shard_independence", 0.0 if same else 1.0, PASS if same else FAIL,
                     n=n, lam=lam, symbol="G[1,2]", details={"shards": [1, 3, 8]}))
    for m in (2, 3):
        U = haar_unitaries(m, 100_000, RngStream(seed, m, TAG_HAAR))
        est = mean_estimate(np.abs(U[:, 0, 0]) ** 2)
        err = abs(est.value - 1 / m)
        out.append(Check("infrastructure", 12, f"haar_moment[n={m}]", err, vanishing(err, est.stderr),
                         stderr_bound=est.stderr, n=m, details={"estimate": est.value.real, "expected": 1 / m}))
    return out


SUITE_FUNCS = {
    "decomposition": suite_decomposition,
    "commutativity": suite_commutativity,
    "centralizer": suite_centralizer,
    "nonnormal": suite_nonnormal,
    "disk-oracle": suite_disk_oracle,
    "intertwining": suite_intertwining,
    "reproducing": suite_reproducing,
    "symbols": suite_symbols,
    "infrastructure": suite_infrastructure,
}


def run_suite(name: str, params: SuiteParams | None = None) -> tuple[list[Check], dict]:
    """Run one suite (or ``all``); returns the checks and per-suite timings."""
    params = params or SuiteParams()
    names = SUITES if name == "all" else (name,)
    checks, timings = [], {}
    for s in names:
        if s not in SUITE_FUNCS:
            raise ValueError(f"unknown suite {s!r}")
        t0 = time.perf_counter()
        checks.extend(SUITE_FUNCS[s](params))
        timings[s] = time.perf_counter() - t0
    return checks, timings
