"""Estimation-error bound for CPE-loss GANs with norm-bounded neural networks.

The discriminator has ``k`` layers with weight-norm budgets ``M`` and activation
Lipschitz constants ``R``; the generator has ``l`` layers with budgets ``N`` and
constants ``S``.  Inputs live in balls of radius ``B_x`` (data) and ``B_z`` (noise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .losses import as_alpha


@dataclass(frozen=True)
class NetBoundParams:
    k: int
    l: int
    M: Sequence[float]
    R: Sequence[float]
    N: Sequence[float]
    S: Sequence[float]
    B_x: float
    B_z: float
    n: int
    m: int
    delta: float

    def __post_init__(self):
        if self.k < 1 or self.l < 1:
            raise ValueError("depths k and l must be at least 1")
        for name, seq, size in (("M", self.M, self.k), ("R", self.R, self.k - 1),
                                ("N", self.N, self.l), ("S", self.S, self.l - 1)):
            if len(seq) != size:
                raise ValueError(f"{name} must have {size} entries, got {len(seq)}")
            if any(not (v > 0 and math.isfinite(v)) for v in seq):
                raise ValueError(f"entries of {name} must be positive and finite")
            object.__setattr__(self, name, tuple(float(v) for v in seq))
        if not (self.B_x > 0 and self.B_z > 0):
            raise ValueError("radii B_x and B_z must be positive")
        if self.n < 1 or self.m < 1:
            raise ValueError("sample counts n and m must be at least 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class CapacityProducts:
    U_omega: float
    U_theta: float
    Q_x: float
    Q_z: float


def capacity_products(p: NetBoundParams) -> CapacityProducts:
    u_omega = p.M[-1] * math.prod(mi * ri for mi, ri in zip(p.M[:-1], p.R))
    u_theta = p.N[-1] * math.prod(nj * sj for nj, sj in zip(p.N[:-1], p.S))
    return CapacityProducts(u_omega, u_theta, u_omega * p.B_x, u_omega * u_theta * p.B_z)


def c_h(h: float, alpha) -> float:
    """Lipschitz constant of ``t -> loss_alpha(1, sigmoid(t))`` on [-h, h].

    For alpha < 1 the slope peaks at t = -h.  At alpha = 1 both branches of the
    piecewise formula apply; the h-dependent one, sigmoid(h), is the tighter and is
    returned.  alpha = inf gives 1/4, the maximal slope of the sigmoid.
    """
    alpha = as_alpha(alpha)
    if not h > 0:
        raise ValueError("h must be positive")
    if alpha.is_inf:
        return 0.25
    a = alpha.value
    if a <= 1.0:
        # log sigmoid(h) + ((a-1)/a) * log sigmoid(-h)
        return math.exp(-np.logaddexp(0.0, -h) - (a - 1.0) / a * np.logaddexp(0.0, h))
    return ((a - 1.0) / (2 * a - 1.0)) ** ((a - 1.0) / a) * a / (2 * a - 1.0)


def lipschitz_empirical(h: float, alpha, grid_points: int = 10001) -> float:
    """Largest slope of ``t -> loss_alpha(1, sigmoid(t))`` over a uniform grid of [-h, h].

    Uses the closed-form slope ``sigmoid(t) ** ((alpha-1)/alpha) * sigmoid(-t)``.
    """
    alpha = as_alpha(alpha)
    if grid_points < 1000:
        raise ValueError("grid_points must be at least 1000")
    t = np.linspace(-h, h, grid_points)
    slope = np.exp(alpha.exponent * -np.logaddexp(0.0, -t)) * expit(-t)
    return float(slope.max())


def lipschitz_maximizer(alpha) -> float:
    """Location of the largest slope over the whole real line (-inf for alpha <= 1)."""
    alpha = as_alpha(alpha)
    if alpha.is_inf:
        return 0.0
    a = alpha.value
    if a <= 1.0:
        return -math.inf
    s = (a - 1.0) / (2 * a - 1.0)
    return math.log(s / (1.0 - s))


def estimation_bound(p: NetBoundParams, L_phi: float, L_psi: float) -> float:
    """High-probability (1 - 2 delta) bound on the estimation error, natural log."""
    if not (L_phi > 0 and L_psi > 0):
        raise ValueError("Lipschitz constants must be positive")
    cp = capacity_products(p)
    k, l, n, m = p.k, p.l, p.n, p.m
    log_term = math.sqrt(math.log(1.0 / p.delta))
    return (L_phi * p.B_x * cp.U_omega * math.sqrt(3 * k) / math.sqrt(n)
            + L_psi * cp.U_omega * cp.U_theta * p.B_z * math.sqrt(3 * (k + l - 1)) / math.sqrt(m)
            + cp.U_omega * log_term * (L_phi * p.B_x / math.sqrt(2 * n)
                                       + L_psi * p.B_z * cp.U_theta / math.sqrt(2 * m)))


def estimation_bound_alpha(p: NetBoundParams, alpha) -> float:
    """The bound specialised to alpha-loss, written in terms of Q_x and Q_z."""
    cp = capacity_products(p)
    cx = c_h(cp.Q_x, alpha)
    cz = c_h(cp.Q_z, alpha)
    k, l, n, m = p.k, p.l, p.n, p.m
    return (4 * cx * cp.Q_x * math.sqrt(3 * k) / math.sqrt(n)
            + 4 * cz * cp.Q_z * math.sqrt(3 * (k + l - 1)) / math.sqrt(m)
            + 2 * math.sqrt(2 * math.log(1.0 / p.delta)) * (cx * cp.Q_x / math.sqrt(n)
                                                            + cz * cp.Q_z / math.sqrt(m)))


def toy_bound_params(n: int, m: int, delta: float = 0.05, M: float = 1.0, N: float = 1.0,
                     B_z: float = 1.0) -> NetBoundParams:
    """Single-layer parameters for the 7-bit toy setup.

    Biases are folded in by appending a constant-1 input, so the data radius is
    sqrt(7 + 1) and the noise radius becomes sqrt(B_z**2 + 1).  ``B_z`` has to be
    chosen by the caller (e.g. a high-probability quantile of ||z||) because
    Gaussian noise is unbounded.
    """
    return NetBoundParams(k=1, l=1, M=(M,), R=(), N=(N,), S=(), B_x=math.sqrt(7.0 + 1.0),
                          B_z=math.sqrt(B_z ** 2 + 1.0), n=n, m=m, delta=delta)
