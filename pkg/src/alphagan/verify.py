"""Property suites run by ``alphagan verify``.

Each suite returns a :class:`SuiteResult` carrying its worst-case slack: the
smallest margin by which the checked inequalities held (negative means failed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from . import bounds, divergences as dv
from .losses import alpha_cpe, check_equilibrium_condition, f_from_margin, margin_from_cpe, sigmoid_link
from .nn import grad_check


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst_slack: float
    detail: str = ""


def identities(seed: int = 0, iters: int = 100) -> SuiteResult:
    worst = math.inf
    for P, Q in dv.dirichlet_pairs(seed, iters):
        tv = dv.tvd(P, Q)
        checks = ((abs(dv.arimoto(P, Q, 0.5) - dv.sq_hellinger(P, Q)), 1e-12),
                  (abs(dv.arimoto(P, Q, 1.0) - 2 * dv.jsd(P, Q)), 1e-9),
                  (abs(dv.arimoto(P, Q, 1e4) - tv), 1e-3),
                  (abs(dv.arimoto(P, Q, math.inf) - tv), 1e-15))
        worst = min(worst, min(tol - err for err, tol in checks))
    return SuiteResult("identities", worst >= 0, worst)


def sandwich(seed: int = 0, iters: int = 1000) -> SuiteResult:
    worst = math.inf
    pairs = dv.dirichlet_pairs(seed, math.ceil(iters / 3))
    for a in (0.25, 0.5, 1.0, 2.0, 5.0, 10.0):
        for P, Q in pairs:
            s = dv.sandwich_slack(P, Q, a)
            worst = min(worst, s.lower, s.upper)
    return SuiteResult("sandwich", worst >= -1e-12, worst)


def jsd_tvd(seed: int = 0, iters: int = 1000) -> SuiteResult:
    worst = min(dv.jsd_tvd_bound_slack(P, Q) for P, Q in dv.dirichlet_pairs(seed, math.ceil(iters / 3)))
    return SuiteResult("jsd_tvd", worst >= -1e-12, worst)


def oracle(seed: int = 0, iters: int = 50, grid_step: float = 1e-3) -> SuiteResult:
    """Brute-force inner supremum against the Arimoto closed form and the optimal discriminator."""
    rng = np.random.default_rng(seed)
    worst_val = worst_arg = 0.0
    for a in (0.5, 1.0, 2.0, 5.0):
        loss = alpha_cpe(a)
        for _ in range(iters):
            n = int(rng.integers(2, 9))
            P = dv.DiscreteDist.from_probs(rng.dirichlet(np.ones(n)))
            Q = dv.DiscreteDist.from_probs(rng.dirichlet(np.ones(n)))
            res = dv.inner_sup_bruteforce(P, Q, loss, grid_step)
            worst_val = max(worst_val, abs(res.value - (dv.arimoto(P, Q, a) + dv.value_offset(a))))
            d_star = dv.optimal_discriminator(P, Q, a).as_array()
            worst_arg = max(worst_arg, float(np.max(np.abs(res.argmax.as_array() - d_star))))
    slack = min(1e-6 - worst_val, 1e-3 - worst_arg)
    return SuiteResult("oracle", slack >= 0, slack,
                       f"max value gap {worst_val:.3g}, max argmax gap {worst_arg:.3g}")


def correspondence(seed: int = 0, iters: int = 10) -> SuiteResult:
    """f-divergence built from the margin loss equals the brute-force inner supremum."""
    rng = np.random.default_rng(seed)
    link = sigmoid_link()
    worst = 0.0
    for a in (1.0, 2.0):
        margin = margin_from_cpe(alpha_cpe(a), link)
        for _ in range(iters):
            n = int(rng.integers(2, 9))
            P = dv.DiscreteDist.from_probs(rng.dirichlet(np.ones(n)))
            Q = dv.DiscreteDist.from_probs(rng.dirichlet(np.ones(n)))
            fd = dv.f_divergence(P, Q, lambda u: f_from_margin(margin, u))
            worst = max(worst, abs(fd - dv.inner_sup_bruteforce(P, Q, alpha_cpe(a)).value))
    return SuiteResult("correspondence", worst <= 1e-4, 1e-4 - worst)


def equilibrium(seed: int = 0, iters: int = 0) -> SuiteResult:
    worst = -math.inf
    for a in (0.2, 0.5, 1.0, 2.0, 5.0, 20.0, math.inf):
        worst = max(worst, check_equilibrium_condition(alpha_cpe(a), 1001).worst_violation)
    return SuiteResult("equilibrium", worst <= 1e-12, 1e-12 - worst)


def gradcheck(seed: int = 0, iters: int = 10) -> SuiteResult:
    worst, where = 0.0, ""
    for a in (0.5, 1.0, 2.0, 20.0, math.inf):
        for s in range(seed, seed + iters):
            rep = grad_check(alpha=a, seed=s)
            if rep.max_rel_error > worst:
                worst, where = rep.max_rel_error, f"alpha={a} seed={s} {rep.worst_param}"
    return SuiteResult("gradcheck", worst <= 1e-5, 1e-5 - worst, where)


def lipschitz(seed: int = 0, iters: int = 0) -> SuiteResult:
    worst = math.inf
    for h in (1.0, 2.0, 5.0, 10.0):
        prev = math.inf
        for a in (0.2, 0.5, 1.0, 2.0, 5.0, 20.0):
            c = bounds.c_h(h, a)
            emp = bounds.lipschitz_empirical(h, a)
            worst = min(worst, c * (1 + 1e-9) - emp)
            if abs(bounds.lipschitz_maximizer(a)) <= h or a <= 1.0:
                worst = min(worst, emp - 0.99 * c)
            if a >= 1.0:
                worst = min(worst, prev - c)
                prev = c
    return SuiteResult("lipschitz", worst >= 0, worst)


def bound_calculator(seed: int = 0, iters: int = 100) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(iters):
        p = random_bound_params(rng)
        a = float(rng.choice([0.2, 0.5, 1.0, 2.0, 5.0, 20.0, math.inf]))
        cp = bounds.capacity_products(p)
        direct = bounds.estimation_bound(p, 4 * bounds.c_h(cp.Q_x, a), 4 * bounds.c_h(cp.Q_z, a))
        closed = bounds.estimation_bound_alpha(p, a)
        if not math.isfinite(direct):
            return SuiteResult("bounds", False, -math.inf, "non-finite bound")
        worst = min(worst, 1e-12 * max(1.0, abs(direct)) - abs(direct - closed))
        base = bounds.estimation_bound(p, 1.0, 1.0)
        for field in ("n", "m"):
            bigger = bounds.NetBoundParams(**{**p.__dict__, field: 2 * getattr(p, field)})
            worst = min(worst, base - bounds.estimation_bound(bigger, 1.0, 1.0))
    return SuiteResult("bounds", worst >= 0, worst)


def random_bound_params(rng: np.random.Generator) -> bounds.NetBoundParams:
    k = int(rng.integers(1, 4))
    l = int(rng.integers(1, 4))
    return bounds.NetBoundParams(
        k=k, l=l, M=tuple(rng.uniform(0.2, 1.5, k)), R=tuple(rng.uniform(0.5, 1.5, k - 1)),
        N=tuple(rng.uniform(0.2, 1.5, l)), S=tuple(rng.uniform(0.5, 1.5, l - 1)),
        B_x=float(rng.uniform(0.1, 3.0)), B_z=float(rng.uniform(0.1, 3.0)),
        n=int(rng.integers(1, 10**6)), m=int(rng.integers(1, 10**6)), delta=float(rng.uniform(0.001, 0.5)))


def equivalence(seed: int = 0, iters: int = 200) -> SuiteResult:
    """The sequence ((1+1/n)/2, (1-1/n)/2) approaches (1/2, 1/2) monotonically in every Arimoto order."""
    target = dv.DiscreteDist.from_probs([0.5, 0.5])
    worst = math.inf
    for a in (0.25, 0.5, 1.0, 2.0, 5.0, 10.0, math.inf):
        prev = math.inf
        for n in range(1, iters + 1):
            Pn = dv.DiscreteDist.from_probs([(1 + 1 / n) / 2, (1 - 1 / n) / 2])
            d = dv.arimoto(Pn, target, a)
            worst = min(worst, prev - d)
            prev = d
            if not math.isinf(a):
                tv = dv.tvd(Pn, target)
                g = dv.gamma_alpha(tv, a)
                ratio = d / g
                worst = min(worst, ratio - (1 - 1e-9), dv.gamma_alpha(1.0, a) * tv / g * (1 + 1e-9) - ratio)
    return SuiteResult("equivalence", worst >= 0, worst)


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "identities": identities,
    "sandwich": sandwich,
    "jsd_tvd": jsd_tvd,
    "oracle": oracle,
    "correspondence": correspondence,
    "equilibrium": equilibrium,
    "gradcheck": gradcheck,
    "lipschitz": lipschitz,
    "bounds": bound_calculator,
    "equivalence": equivalence,
}


def run_suites(names=None, seed: int = 0, iters=None) -> List[SuiteResult]:
    results = []
    for name in names or SUITES:
        fn = SUITES[name]
        results.append(fn(seed=seed) if iters is None else fn(seed=seed, iters=iters))
    return results
