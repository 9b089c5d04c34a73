"""Divergences between discrete distributions on integer supports.

Every divergence here is an exact finite sum under the counting measure.  Two
distributions must share a support; use :func:`align` to pad both with zeros
over the union of their supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .losses import EPS_CLAMP, CpeLoss, as_alpha

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    support: tuple
    probs: np.ndarray

    def __post_init__(self):
        support = tuple(int(s) for s in self.support)
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if len(support) != len(probs):
            raise ValueError("support and probs must have the same length")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ValueError("support labels must be unique and sorted ascending")
        if np.any(~np.isfinite(probs)) or np.any(probs < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_probs(cls, probs: Sequence[float], support: Optional[Sequence[int]] = None) -> "DiscreteDist":
        probs = np.asarray(probs, dtype=float)
        if support is None:
            support = range(len(probs))
        return cls(tuple(support), probs)

    @classmethod
    def from_mapping(cls, mapping: Dict[int, float]) -> "DiscreteDist":
        keys = sorted(mapping)
        return cls(tuple(keys), np.array([mapping[k] for k in keys], dtype=float))

    def __len__(self) -> int:
        return len(self.support)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteDist):
            return NotImplemented
        return self.support == other.support and np.array_equal(self.probs, other.probs)

    def prob(self, label: int) -> float:
        try:
            return float(self.probs[self.support.index(label)])
        except ValueError:
            return 0.0

    def as_dict(self) -> Dict[int, float]:
        return dict(zip(self.support, self.probs.tolist()))


def align(P: DiscreteDist, Q: DiscreteDist):
    """Re-express P and Q over the union of their supports, padding with zeros."""
    if P.support == Q.support:
        return P, Q
    union = tuple(sorted(set(P.support) | set(Q.support)))
    pd, qd = P.as_dict(), Q.as_dict()
    P2 = DiscreteDist(union, np.array([pd.get(k, 0.0) for k in union]))
    Q2 = DiscreteDist(union, np.array([qd.get(k, 0.0) for k in union]))
    return P2, Q2


def _arrays(P: DiscreteDist, Q: DiscreteDist):
    if P.support != Q.support:
        raise ValueError("distributions have different supports; call align() first")
    return P.probs, Q.probs


def tvd(P: DiscreteDist, Q: DiscreteDist) -> float:
    p, q = _arrays(P, Q)
    return 0.5 * float(np.abs(p - q).sum())


def _kl_to_mixture(p, m):
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / m[nz])))


def jsd(P: DiscreteDist, Q: DiscreteDist) -> float:
    """Jensen-Shannon divergence in nats; lies in [0, ln 2]."""
    p, q = _arrays(P, Q)
    m = 0.5 * (p + q)
    return 0.5 * _kl_to_mixture(p, m) + 0.5 * _kl_to_mixture(q, m)


def sq_hellinger(P: DiscreteDist, Q: DiscreteDist) -> float:
    p, q = _arrays(P, Q)
    return float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))


def _power_mean_excess(p: np.ndarray, q: np.ndarray, a: float) -> float:
    """Sum of ``(p**a + q**a) ** (1/a) - (p + q) / 2 * 2 ** (1/a)``.

    Each term is written as ``max * g(min/max)`` so large a cannot underflow, and
    terms with p == q vanish exactly.  Since the (p + q) / 2 sum to one this equals
    ``sum (p**a + q**a) ** (1/a) - 2 ** (1/a)``.
    """
    hi = np.maximum(p, q)
    lo = np.minimum(p, q)
    nz = hi > 0
    r = lo[nz] / hi[nz]
    g = np.exp(np.log1p(r ** a) / a) - 0.5 * (1.0 + r) * np.exp(np.log1p(1.0) / a)
    return float(np.sum(hi[nz] * g))


def arimoto(P: DiscreteDist, Q: DiscreteDist, alpha) -> float:
    """Arimoto divergence of order alpha.

    Equals the squared Hellinger distance at alpha = 1/2, twice the JSD at
    alpha = 1 and the total variation distance at alpha = inf.
    """
    alpha = as_alpha(alpha)
    p, q = _arrays(P, Q)
    if alpha.is_inf:
        return tvd(P, Q)
    if alpha.is_one:
        return 2.0 * jsd(P, Q)
    a = alpha.value
    return a / (a - 1.0) * _power_mean_excess(p, q, a)


def gamma_alpha(p: float, alpha) -> float:
    """Lower-bound function of the Arimoto/TVD sandwich, evaluated at TVD value ``p``."""
    alpha = as_alpha(alpha)
    if alpha.is_inf:
        raise ValueError("gamma_alpha is only defined for finite alpha")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return 0.0
    if alpha.is_one:
        lo = (1.0 - p) * math.log(1.0 - p) if p < 1.0 else 0.0
        return (1.0 + p) * math.log1p(p) + lo
    a = alpha.value
    r = (1.0 - p) / (1.0 + p)
    power_mean = (1.0 + p) * math.exp(math.log1p(r ** a) / a)
    return a / (a - 1.0) * (power_mean - 2.0 ** (1.0 / a))


class Slack(NamedTuple):
    lower: float
    upper: float


def sandwich_slack(P: DiscreteDist, Q: DiscreteDist, alpha) -> Slack:
    """Slacks of ``gamma(TV) <= Arimoto <= gamma(1) * TV``; both are nonnegative up to rounding."""
    alpha = as_alpha(alpha)
    tv = tvd(P, Q)
    d = arimoto(P, Q, alpha)
    return Slack(lower=d - gamma_alpha(tv, alpha), upper=gamma_alpha(1.0, alpha) * tv - d)


def jsd_tvd_bound_slack(P: DiscreteDist, Q: DiscreteDist) -> float:
    return LN2 * tvd(P, Q) - jsd(P, Q)


def value_offset(alpha) -> float:
    """Constant ``alpha/(alpha-1) * (2**(1/alpha) - 2)`` linking the inner supremum to the Arimoto divergence."""
    alpha = as_alpha(alpha)
    if alpha.is_inf:
        return -1.0
    if alpha.is_one:
        return -2.0 * LN2
    a = alpha.value
    return a / (a - 1.0) * (2.0 ** (1.0 / a) - 2.0)


@dataclass(frozen=True, eq=False)
class DiscriminatorProfile:
    values: Dict[int, float]

    def __post_init__(self):
        for k, v in self.values.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"discriminator value {v} at {k} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.values[k] for k in sorted(self.values)])


def optimal_discriminator(P: DiscreteDist, Q: DiscreteDist, alpha) -> DiscriminatorProfile:
    alpha = as_alpha(alpha)
    p, q = _arrays(P, Q)
    out = np.full(len(p), 0.5)
    if alpha.is_inf:
        out[p > q] = 1.0
        out[p < q] = 0.0
    else:
        a = alpha.value
        hi = np.maximum(p, q)
        nz = hi > 0
        # p^a / (p^a + q^a) with both divided by max(p, q)^a
        pa = (p[nz] / hi[nz]) ** a
        qa = (q[nz] / hi[nz]) ** a
        out[nz] = pa / (pa + qa)
    return DiscriminatorProfile(dict(zip(P.support, out.tolist())))


class InnerSup(NamedTuple):
    value: float
    argmax: DiscriminatorProfile


def inner_sup_bruteforce(P: DiscreteDist, Q: DiscreteDist, loss: CpeLoss,
                         grid_step: float = 1e-3, refine: bool = True) -> InnerSup:
    """Pointwise brute-force maximisation of ``p(x) phi(d) + q(x) psi(d)`` over ``d``.

    Summing the per-point maxima gives the inner supremum of the value function
    over all discriminators.
    """
    p, q = _arrays(P, Q)
    if len(p) > 32:
        raise ValueError("inner_sup_bruteforce supports at most 32 points")
    if not 0.0 < grid_step <= 0.1:
        raise ValueError("grid_step must lie in (0, 0.1]")
    n = int(math.ceil((1.0 - 2 * EPS_CLAMP) / grid_step)) + 1
    grid = np.linspace(EPS_CLAMP, 1.0 - EPS_CLAMP, n)
    phi_g = np.asarray(loss.phi(grid), dtype=float)
    psi_g = np.asarray(loss.psi(grid), dtype=float)

    total = 0.0
    best_d = {}
    for label, px, qx in zip(P.support, p, q):
        if px == 0.0 and qx == 0.0:
            best_d[label] = 0.5
            continue
        vals = px * phi_g + qx * psi_g
        i = int(np.argmax(vals))
        d, v = float(grid[i]), float(vals[i])
        if refine:
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
            res = minimize_scalar(lambda t: -float(px * loss.phi(t) + qx * loss.psi(t)),
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            if -res.fun > v:
                d, v = float(res.x), float(-res.fun)
        best_d[label] = d
        total += v
    return InnerSup(total, DiscriminatorProfile(best_d))


def f_divergence(P: DiscreteDist, Q: DiscreteDist, f: Callable[[float], float],
                 slope_at_infinity: Optional[float] = None) -> float:
    """``sum q f(p/q)``; points with q = 0 < p contribute ``p * lim f(u)/u``.

    Without an analytic ``slope_at_infinity`` the limit is approximated by f(1e8)/1e8.
    """
    p, q = _arrays(P, Q)
    total = 0.0
    slope = slope_at_infinity
    for px, qx in zip(p, q):
        if qx > 0:
            total += qx * f(px / qx)
        elif px > 0:
            if slope is None:
                slope = f(1e8) / 1e8
            total += px * slope
    return float(total)


def dirichlet_pairs(seed: int, count: int, sizes: Sequence[int] = (2, 8, 128)):
    """``count`` seeded pairs of Dirichlet(1) distributions for each support size."""
    rng = np.random.default_rng(seed)
    pairs = []
    for n in sizes:
        for _ in range(count):
            p = rng.dirichlet(np.ones(n))
            q = rng.dirichlet(np.ones(n))
            pairs.append((DiscreteDist.from_probs(p / p.sum()), DiscreteDist.from_probs(q / q.sum())))
    return pairs
