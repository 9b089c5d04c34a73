"""Single affine+sigmoid layers, hand-derived GAN gradients, Adam and gradient checking.

Generator ``G(z) = sigmoid(W_g z + b_g)`` and discriminator ``D(x) = sigmoid(w_d x + b_d)``
are both :class:`AffineSigmoidNet`.  Gradients are of the value function

    V = mean_i phi(D(x_i)) + mean_j psi(D(G(z_j)))

which the discriminator ascends and the generator descends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import expit

from .losses import EPS_CLAMP, CpeLoss, alpha_cpe

SNAPSHOT_HEADER = "# affine-sigmoid-net v1"


@dataclass(frozen=True, eq=False)
class AffineSigmoidNet:
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.array(self.weight, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64).reshape(-1)
        if w.ndim != 2 or w.shape[0] != b.shape[0]:
            raise ValueError(f"inconsistent shapes: weight {w.shape}, bias {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("network parameters must be finite")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def params(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.weight, self.bias

    @classmethod
    def zeros(cls, out_dim: int, in_dim: int) -> "AffineSigmoidNet":
        return cls(np.zeros((out_dim, in_dim)), np.zeros(out_dim))

    @classmethod
    def init_uniform(cls, out_dim: int, in_dim: int, rng: np.random.Generator) -> "AffineSigmoidNet":
        """Fan-based uniform init on [-a, a], a = sqrt(6 / (in + out)); biases start at 0."""
        a = math.sqrt(6.0 / (in_dim + out_dim))
        return cls(rng.uniform(-a, a, size=(out_dim, in_dim)), np.zeros(out_dim))


def forward(net: AffineSigmoidNet, x: np.ndarray) -> np.ndarray:
    """Elementwise ``sigmoid(W x + b)``; accepts one input vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.in_dim:
        raise ValueError(f"input dimension {x.shape[-1]} does not match net input {net.in_dim}")
    return expit(x @ net.weight.T + net.bias)


@dataclass(frozen=True, eq=False)
class Batch:
    real_samples: np.ndarray
    noise_samples: np.ndarray

    def __post_init__(self):
        real = np.asarray(self.real_samples, dtype=np.float64)
        noise = np.asarray(self.noise_samples, dtype=np.float64)
        if real.ndim != 2 or noise.ndim != 2:
            raise ValueError("batch arrays must be 2-D")
        if len(real) == 0 or len(noise) == 0:
            raise ValueError("empty batch")
        if not np.all((real == 0.0) | (real == 1.0)):
            raise ValueError("real samples must be bits")
        if not np.all(np.isfinite(noise)):
            raise ValueError("noise samples must be finite")
        object.__setattr__(self, "real_samples", real)
        object.__setattr__(self, "noise_samples", noise)


def _numeric_deriv(fn, d, h=1e-6):
    return (np.asarray(fn(d + h)) - np.asarray(fn(d - h))) / (2 * h)


def _logit_grad(loss_fn, dloss_fn, d):
    """d/dz loss_fn(sigmoid(z)) at d = sigmoid(z); zero where the clamp is active."""
    deriv = dloss_fn(d) if dloss_fn is not None else _numeric_deriv(loss_fn, d)
    inside = (d > EPS_CLAMP) & (d < 1.0 - EPS_CLAMP)
    return np.where(inside, deriv * d * (1.0 - d), 0.0)


def _check_dims(D: AffineSigmoidNet, G: AffineSigmoidNet, batch: Batch):
    if D.out_dim != 1:
        raise ValueError("discriminator must have a single output")
    if G.out_dim != D.in_dim:
        raise ValueError("generator output does not match discriminator input")
    if batch.real_samples.shape[1] != D.in_dim or batch.noise_samples.shape[1] != G.in_dim:
        raise ValueError("batch dimensions do not match the networks")


def value_function(D: AffineSigmoidNet, G: AffineSigmoidNet, batch: Batch, loss: CpeLoss) -> float:
    """Empirical value function; generated samples are the raw (0, 1) generator outputs."""
    _check_dims(D, G, batch)
    d_real = forward(D, batch.real_samples)[:, 0]
    d_fake = forward(D, forward(G, batch.noise_samples))[:, 0]
    return float(np.mean(loss.phi(d_real)) + np.mean(loss.psi(d_fake)))


def disc_grads(D: AffineSigmoidNet, real: np.ndarray, fake: np.ndarray, loss: CpeLoss):
    """Gradient of V with respect to (w_d, b_d), given real rows and generated rows."""
    d_real = expit(real @ D.weight[0] + D.bias[0])
    d_fake = expit(fake @ D.weight[0] + D.bias[0])
    g_real = _logit_grad(loss.phi, loss.dphi, d_real) / len(real)
    g_fake = _logit_grad(loss.psi, loss.dpsi, d_fake) / len(fake)
    gw = g_real @ real + g_fake @ fake
    gb = g_real.sum() + g_fake.sum()
    return gw[None, :], np.array([gb])


def gen_grads(D: AffineSigmoidNet, G: AffineSigmoidNet, noise: np.ndarray, loss: CpeLoss,
              non_saturating: bool = False):
    """Gradient of the generator objective with respect to (W_g, b_g).

    The saturating objective is V itself (to be minimised).  The non-saturating
    surrogate is ``-mean phi(D(G(z)))``.
    """
    g = expit(noise @ G.weight.T + G.bias)
    d = expit(g @ D.weight[0] + D.bias[0])
    if non_saturating:
        s = -_logit_grad(loss.phi, loss.dphi, d) / len(noise)
    else:
        s = _logit_grad(loss.psi, loss.dpsi, d) / len(noise)
    delta = (s[:, None] * D.weight[0][None, :]) * g * (1.0 - g)
    return delta.T @ noise, delta.sum(axis=0)


class Grads(NamedTuple):
    disc: Tuple[np.ndarray, np.ndarray]
    gen: Tuple[np.ndarray, np.ndarray]


def grads(D: AffineSigmoidNet, G: AffineSigmoidNet, batch: Batch, loss: CpeLoss) -> Grads:
    """Exact gradients of :func:`value_function` for both players."""
    _check_dims(D, G, batch)
    fake = forward(G, batch.noise_samples)
    return Grads(disc_grads(D, batch.real_samples, fake, loss),
                 gen_grads(D, G, batch.noise_samples, loss))


@dataclass(frozen=True, eq=False)
class AdamState:
    first_moment: Tuple[np.ndarray, ...]
    second_moment: Tuple[np.ndarray, ...]
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_adam: float = 1e-8

    @classmethod
    def for_params(cls, params, learning_rate: float = 1e-3, **kw) -> "AdamState":
        return cls(tuple(np.zeros_like(p) for p in params), tuple(np.zeros_like(p) for p in params),
                   0, learning_rate, **kw)


def adam_step(params, grads, state: AdamState, maximize: bool = False):
    """One bias-corrected Adam update; ``maximize`` ascends instead of descending.

    Returns ``(new_params, new_state)``; inputs are not modified.
    """
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("params, grads and state must have the same structure")
    t = state.step_count + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}, moment {m.shape}")
        if maximize:
            g = -g
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        new_params.append(p - state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon_adam))
        new_m.append(m)
        new_v.append(v)
    return tuple(new_params), replace(state, first_moment=tuple(new_m), second_moment=tuple(new_v), step_count=t)


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    passed: bool
    worst_param: str


def grad_check(loss: Optional[CpeLoss] = None, seed: int = 0, data_dim: int = 7, noise_dim: int = 7,
               batch_size: int = 16, step: float = 1e-5, tol: float = 1e-5, floor: float = 1e-8,
               alpha=1.0) -> GradCheckReport:
    """Compare :func:`grads` against central differences of :func:`value_function`."""
    if loss is None:
        loss = alpha_cpe(alpha)
    rng = np.random.default_rng(seed)
    D = AffineSigmoidNet(rng.normal(0, 0.5, (1, data_dim)), rng.normal(0, 0.5, 1))
    G = AffineSigmoidNet(rng.normal(0, 0.5, (data_dim, noise_dim)), rng.normal(0, 0.5, data_dim))
    batch = Batch(rng.integers(0, 2, (batch_size, data_dim)).astype(float),
                  rng.standard_normal((batch_size, noise_dim)))
    analytic = grads(D, G, batch, loss)

    worst, worst_name = 0.0, ""
    for who, net, (gw, gb) in (("D", D, analytic.disc), ("G", G, analytic.gen)):
        for pname, idx_param, grad in (("weight", 0, gw), ("bias", 1, gb)):
            for idx in np.ndindex(grad.shape):
                vals = []
                for sign in (1.0, -1.0):
                    w, b = net.weight.copy(), net.bias.copy()
                    (w if idx_param == 0 else b)[idx] += sign * step
                    moved = AffineSigmoidNet(w, b)
                    vals.append(value_function(moved, G, batch, loss) if who == "D"
                                else value_function(D, moved, batch, loss))
                numeric = (vals[0] - vals[1]) / (2 * step)
                a = float(grad[idx])
                rel = abs(a - numeric) / max(abs(a), abs(numeric), floor)
                if rel > worst:
                    worst, worst_name = rel, f"{who}.{pname}{list(idx)}"
    return GradCheckReport(worst, worst <= tol, worst_name)


def save_net(net: AffineSigmoidNet, path) -> None:
    """Text snapshot: header, ``out_dim in_dim``, row-major weights, bias."""
    lines = [SNAPSHOT_HEADER, f"{net.out_dim} {net.in_dim}",
             " ".join(repr(float(v)) for v in net.weight.ravel()),
             " ".join(repr(float(v)) for v in net.bias)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_net(path) -> AffineSigmoidNet:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != SNAPSHOT_HEADER:
        raise ValueError(f"{path}: not an affine-sigmoid-net v1 snapshot")
    out_dim, in_dim = (int(v) for v in lines[1].split())
    weight = np.array([float(v) for v in lines[2].split()]).reshape(out_dim, in_dim)
    bias = np.array([float(v) for v in lines[3].split()])
    return AffineSigmoidNet(weight, bias)
