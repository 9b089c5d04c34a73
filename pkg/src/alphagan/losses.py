"""CPE losses, the alpha-loss family, link functions and the margin-loss correspondence.

A CPE loss is stored as the pair ``phi(t) = -loss(1, t)`` and ``psi(t) = -loss(0, t)``,
so the GAN value function reads ``E_real[phi(D(x))] + E_gen[psi(D(x))]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import expit, logit

EPS_CLAMP = 1e-7

ArrayLike = Union[float, np.ndarray]


class NonConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class AlphaParam:
    """Order of the alpha-loss; ``math.inf`` encodes alpha = infinity."""

    value: float

    def __post_init__(self):
        try:
            v = float(self.value)
        except (TypeError, ValueError):
            raise ValueError(f"alpha must be a positive real or inf, got {self.value!r}") from None
        if math.isnan(v) or v <= 0 or v == -math.inf:
            raise ValueError(f"alpha must be a positive real or inf, got {self.value!r}")
        object.__setattr__(self, "value", v)

    @classmethod
    def infinity(cls) -> "AlphaParam":
        return cls(math.inf)

    @classmethod
    def parse(cls, text: str) -> "AlphaParam":
        text = text.strip().lower()
        if text in ("inf", "infinity", "∞"):
            return cls.infinity()
        return cls(float(text))

    @property
    def is_inf(self) -> bool:
        return self.value == math.inf

    @property
    def is_one(self) -> bool:
        return self.value == 1.0

    @property
    def exponent(self) -> float:
        """(alpha - 1) / alpha, the power applied to the predicted probability."""
        if self.is_inf:
            return 1.0
        return (self.value - 1.0) / self.value

    def __str__(self) -> str:
        return "inf" if self.is_inf else f"{self.value:g}"

    def __float__(self) -> float:
        return self.value


def as_alpha(alpha) -> AlphaParam:
    if isinstance(alpha, AlphaParam):
        return alpha
    if isinstance(alpha, str):
        return AlphaParam.parse(alpha)
    return AlphaParam(alpha)


# Core alpha-loss kernels on the probability assigned to the true label.
# They assume p is already clamped to [EPS_CLAMP, 1 - EPS_CLAMP].

def _neg_loss(alpha: AlphaParam, p: ArrayLike) -> ArrayLike:
    """phi_alpha(p) = -loss_alpha(1, p)."""
    if alpha.is_inf:
        return p - 1.0
    if alpha.is_one:
        return np.log(p)
    a = alpha.value
    return a / (a - 1.0) * np.expm1(alpha.exponent * np.log(p))


def _neg_loss_deriv(alpha: AlphaParam, p: ArrayLike) -> ArrayLike:
    """d/dp phi_alpha(p) = p ** (-1/alpha)."""
    if alpha.is_inf:
        return np.ones_like(p, dtype=float)
    return np.exp(-np.log(p) / alpha.value)


def _clamp(p):
    return np.clip(p, EPS_CLAMP, 1.0 - EPS_CLAMP)


def alpha_loss(alpha, y: int, y_hat: ArrayLike) -> ArrayLike:
    """Alpha-loss ``l_alpha(y, y_hat)``.

    alpha = 1 gives the log-loss and alpha = inf gives ``1 - prob(true label)``.
    ``y_hat`` is clamped to ``[EPS_CLAMP, 1 - EPS_CLAMP]`` unless it equals the
    label exactly, in which case the loss is 0.
    """
    alpha = as_alpha(alpha)
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    y_hat_arr = np.asarray(y_hat, dtype=float)
    if np.any(np.isnan(y_hat_arr)) or np.any(y_hat_arr < 0.0) or np.any(y_hat_arr > 1.0):
        raise ValueError("y_hat must lie in [0, 1]")
    p = y_hat_arr if y == 1 else 1.0 - y_hat_arr
    out = -_neg_loss(alpha, _clamp(p))
    out = np.where(p == 1.0, 0.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class CpeLoss:
    """A class-probability-estimation loss given by ``phi = -l(1, .)`` and ``psi = -l(0, .)``.

    ``dphi``/``dpsi`` are optional analytic derivatives; the network gradients fall
    back to central differences without them.  With ``validate`` the monotonicity
    (and, for symmetric losses, the ``psi(t) = phi(1 - t)`` identity) is checked on
    a grid at construction.
    """

    phi: Callable[[ArrayLike], ArrayLike]
    psi: Callable[[ArrayLike], ArrayLike]
    symmetric: bool = False
    dphi: Optional[Callable[[ArrayLike], ArrayLike]] = field(default=None, compare=False)
    dpsi: Optional[Callable[[ArrayLike], ArrayLike]] = field(default=None, compare=False)
    name: str = field(default="cpe", compare=False)
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if not self.validate:
            return
        t = np.linspace(EPS_CLAMP, 1.0 - EPS_CLAMP, 1001)
        phi_t = np.asarray(self.phi(t), dtype=float)
        psi_t = np.asarray(self.psi(t), dtype=float)
        if np.any(np.diff(phi_t) < -1e-12):
            raise ValueError(f"{self.name}: phi must be non-decreasing on [0, 1]")
        if np.any(np.diff(psi_t) > 1e-12):
            raise ValueError(f"{self.name}: psi must be non-increasing on [0, 1]")
        if self.symmetric:
            gap = np.max(np.abs(psi_t - np.asarray(self.phi(1.0 - t), dtype=float)))
            if gap > 1e-12:
                raise ValueError(f"{self.name}: declared symmetric but psi(t) != phi(1-t) (gap {gap:.3g})")


def alpha_cpe(alpha) -> CpeLoss:
    alpha = as_alpha(alpha)

    def phi(t):
        return _neg_loss(alpha, _clamp(np.asarray(t, dtype=float)))

    def psi(t):
        return _neg_loss(alpha, _clamp(1.0 - np.asarray(t, dtype=float)))

    def dphi(t):
        return _neg_loss_deriv(alpha, _clamp(np.asarray(t, dtype=float)))

    def dpsi(t):
        return -_neg_loss_deriv(alpha, _clamp(1.0 - np.asarray(t, dtype=float)))

    return CpeLoss(phi, psi, symmetric=True, dphi=dphi, dpsi=dpsi, name=f"alpha={alpha}")


@dataclass(frozen=True)
class EquilibriumReport:
    ok: bool
    worst_violation: float
    worst_t: float

    def __bool__(self) -> bool:
        return self.ok


def check_equilibrium_condition(loss: CpeLoss, grid_size: int = 1001) -> EquilibriumReport:
    """Check ``phi(t) + psi(t) <= phi(1/2) + psi(1/2)`` on a uniform grid.

    When it holds, the best discriminator against identical real and generated
    distributions outputs 1/2 everywhere.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    t = np.linspace(EPS_CLAMP, 1.0 - EPS_CLAMP, grid_size)
    total = np.asarray(loss.phi(t), dtype=float) + np.asarray(loss.psi(t), dtype=float)
    center = float(loss.phi(0.5) + loss.psi(0.5))
    violation = total - center
    i = int(np.argmax(violation))
    worst = float(violation[i])
    return EquilibriumReport(ok=bool(worst <= 1e-12), worst_violation=worst, worst_t=float(t[i]))


@dataclass(frozen=True)
class LinkFunction:
    forward: Callable[[ArrayLike], ArrayLike]
    inverse: Callable[[ArrayLike], ArrayLike]
    name: str = "link"


def _checked_logit(p):
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise ValueError("logit is only defined on the open interval (0, 1)")
    out = logit(arr)
    return float(out) if np.ndim(out) == 0 else out


def _sigmoid(t):
    out = expit(np.asarray(t, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def sigmoid_link() -> LinkFunction:
    return LinkFunction(forward=_sigmoid, inverse=_checked_logit, name="sigmoid")


def link_regularity_gap(link: LinkFunction, t: Optional[np.ndarray] = None) -> float:
    """Largest ``|l(-t) - (1 - l(t))|`` on a grid."""
    if t is None:
        t = np.linspace(-30.0, 30.0, 601)
    return float(np.max(np.abs(link.forward(-t) - (1.0 - link.forward(t)))))


@dataclass(frozen=True)
class MarginLoss:
    eval: Callable[[ArrayLike], ArrayLike]
    name: str = "margin"

    def __call__(self, t):
        return self.eval(t)


def logistic_margin() -> MarginLoss:
    return MarginLoss(lambda t: np.logaddexp(0.0, -np.asarray(t, dtype=float)), name="logistic")


def exponential_margin() -> MarginLoss:
    return MarginLoss(lambda t: np.exp(-np.asarray(t, dtype=float)), name="exponential")


def margin_from_cpe(loss: CpeLoss, link: LinkFunction) -> MarginLoss:
    """Margin loss ``t -> l(1, link(t)) = -phi(link(t))``."""
    if not loss.symmetric:
        raise ValueError("margin correspondence requires a symmetric CPE loss")

    def margin(t):
        return -np.asarray(loss.phi(link.forward(t)), dtype=float)

    return MarginLoss(margin, name=f"margin[{loss.name}]")


def cpe_from_margin(margin: MarginLoss, link: LinkFunction) -> CpeLoss:
    """Symmetric CPE loss with ``l(1, y) = margin(link^-1(y))`` and ``l(0, y) = l(1, 1 - y)``."""

    def phi(y):
        return -np.asarray(margin.eval(link.inverse(_clamp(np.asarray(y, dtype=float)))), dtype=float)

    def psi(y):
        return phi(1.0 - np.asarray(y, dtype=float))

    return CpeLoss(phi, psi, symmetric=True, name=f"cpe[{margin.name}]", validate=False)


@dataclass(frozen=True)
class SearchConfig:
    lo: float = -40.0
    hi: float = 40.0
    grid_points: int = 4001
    tol: float = 1e-10


def f_from_margin(margin: MarginLoss, u: float, search: SearchConfig = SearchConfig()) -> float:
    """``f(u) = -inf_t (margin(-t) + u * margin(t))`` by grid scan plus bounded refinement.

    The objective is non-convex for alpha-losses with alpha > 1, so the scan picks
    the basin and the refinement only polishes inside the neighbouring cells.
    """
    if u < 0 or math.isnan(u):
        raise ValueError(f"u must be nonnegative, got {u}")

    def objective(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(margin.eval(-t), dtype=float) + u * np.asarray(margin.eval(t), dtype=float)

    grid = np.linspace(search.lo, search.hi, search.grid_points)
    vals = objective(grid)
    i = int(np.argmin(vals))
    width = grid[1] - grid[0]
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda t: float(objective(t)), bounds=(a, b), method="bounded",
                          options={"xatol": search.tol})
    if abs(res.x - grid[i]) > width or res.fun > vals[i] + 1e-12 * max(1.0, abs(vals[i])):
        raise NonConvergenceError(
            f"refined minimum at t={res.x:.6g} ({res.fun:.6g}) left the grid cell around "
            f"t={grid[i]:.6g} ({vals[i]:.6g})")
    return -min(float(res.fun), float(vals[i]))
