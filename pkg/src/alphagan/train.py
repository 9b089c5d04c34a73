"""Alpha-GAN training on the toy dataset, evaluation, and the (alpha, noise) sweep."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .data import (N_BITS, N_VALUES, ToyDatasetSpec, decode_many, encode_many, empirical_distribution,
                   generate_dataset, make_rng, sample_evens, threshold_bits, uniform_evens)
from .divergences import DiscreteDist, jsd, tvd
from .losses import AlphaParam, alpha_cpe, as_alpha
from .nn import AdamState, AffineSigmoidNet, adam_step, disc_grads, forward, gen_grads

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.2, 0.5, 0.7, 1.0, 4.0, 10.0, 20.0)
DEFAULT_NOISE_PCTS = (0.0, 10.0, 15.0, 20.0, 30.0)
RESULTS_HEADER = ("alpha", "noise_pct", "run", "modes", "pct_odd", "tvd", "jsd")
TRACE_HEADER = ("epoch", "mean_D_real", "mean_D_gen", "mean_D_val")


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    alpha: AlphaParam = AlphaParam(1.0)
    noise_pct: float = 0.0
    epochs: int = 2000
    batch_size: int = 256
    learning_rate: float = 0.001
    n_train: int = 25600
    n_eval_noise: int = 20000
    n_validation: int = 5000
    runs: int = 10
    seed: int = 0
    non_saturating: bool = False
    d_steps: int = 1
    g_steps: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_alpha(self.alpha))
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        for name in ("batch_size", "n_train", "n_eval_noise", "n_validation", "runs", "d_steps", "g_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.batch_size > self.n_train:
            raise ValueError("batch_size cannot exceed n_train")
        if not 0.0 <= self.noise_pct <= 100.0:
            raise ValueError("noise_pct must lie in [0, 100]")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class RunMetrics:
    modes: int
    pct_odd: float
    tvd_to_uniform: float
    jsd_to_uniform: float
    output_dist: Optional[DiscreteDist] = field(default=None, repr=False)
    # rows of (epoch, mean D(real), mean D(generated), mean D(validation))
    disc_out_history: List[Tuple[int, float, float, float]] = field(default_factory=list, repr=False)

    def row(self) -> Dict[str, float]:
        return {"modes": self.modes, "pct_odd": self.pct_odd, "tvd": self.tvd_to_uniform,
                "jsd": self.jsd_to_uniform}


@dataclass
class TrainResult:
    G: AffineSigmoidNet
    D: AffineSigmoidNet
    metrics: RunMetrics


def eval_noise_for(seed: int, n: int = 20000) -> np.ndarray:
    """The fixed evaluation noise shared by every cell and run under one root seed."""
    return make_rng(seed, "eval_noise").standard_normal((n, N_BITS))


def evaluate_generator(G: AffineSigmoidNet, eval_noise: np.ndarray,
                       reference: Optional[DiscreteDist] = None) -> RunMetrics:
    if reference is None:
        reference = uniform_evens()
    values = decode_many(threshold_bits(forward(G, eval_noise)))
    dist = empirical_distribution(values)
    evens = values[values % 2 == 0]
    return RunMetrics(
        modes=int(np.unique(evens).size),
        pct_odd=100.0 * float(np.count_nonzero(values % 2)) / len(values),
        tvd_to_uniform=tvd(dist, reference),
        jsd_to_uniform=jsd(dist, reference),
        output_dist=dist,
    )


def _mean_d(D: AffineSigmoidNet, x: np.ndarray) -> float:
    return float(expit(x @ D.weight[0] + D.bias[0]).mean())


def train_alpha_gan(config: TrainConfig, eval_noise: Optional[np.ndarray] = None,
                    trace: bool = True) -> TrainResult:
    """Train one alpha-GAN run: per batch, D ascends V then G descends it (Adam both).

    Randomness comes from named streams of ``config.seed``.  ``eval_noise`` defaults
    to the seed's own evaluation stream; sweeps pass one shared array instead.
    """
    seed = config.seed
    loss = alpha_cpe(config.alpha)
    dataset = generate_dataset(ToyDatasetSpec(config.n_train, config.noise_pct, seed), make_rng(seed, "dataset"))
    real_all = dataset.bits
    validation = encode_many(sample_evens(config.n_validation, make_rng(seed, "validation")))
    if eval_noise is None:
        eval_noise = eval_noise_for(seed, config.n_eval_noise)

    init_rng = make_rng(seed, "init")
    G = AffineSigmoidNet.init_uniform(N_BITS, N_BITS, init_rng)
    D = AffineSigmoidNet.init_uniform(1, N_BITS, init_rng)
    g_params, d_params = G.params, D.params
    g_state = AdamState.for_params(g_params, config.learning_rate)
    d_state = AdamState.for_params(d_params, config.learning_rate)

    batch_rng = make_rng(seed, "batching")
    noise_rng = make_rng(seed, "train_noise")
    n_batches = config.n_train // config.batch_size
    bs = config.batch_size
    history = []

    for epoch in range(1, config.epochs + 1):
        order = batch_rng.permutation(config.n_train)
        for k in range(n_batches):
            real = real_all[order[k * bs:(k + 1) * bs]]
            z = noise_rng.standard_normal((bs, N_BITS))
            for _ in range(config.d_steps):
                fake = expit(z @ g_params[0].T + g_params[1])
                dg = disc_grads(_Net(*d_params), real, fake, loss)
                d_params, d_state = adam_step(d_params, dg, d_state, maximize=True)
            for _ in range(config.g_steps):
                gg = gen_grads(_Net(*d_params), _Net(*g_params), z, loss, config.non_saturating)
                g_params, g_state = adam_step(g_params, gg, g_state, maximize=False)

        if not all(np.all(np.isfinite(p)) for p in (*d_params, *g_params)):
            raise TrainingDiverged(f"non-finite parameters after epoch {epoch} "
                                   f"(alpha={config.alpha}, noise={config.noise_pct}, seed={seed})")
        if trace:
            Dn = _Net(*d_params)
            fake_eval = expit(eval_noise @ g_params[0].T + g_params[1])
            history.append((epoch, _mean_d(Dn, real_all), _mean_d(Dn, fake_eval), _mean_d(Dn, validation)))

    G = AffineSigmoidNet(*g_params)
    D = AffineSigmoidNet(*d_params)
    metrics = evaluate_generator(G, eval_noise)
    metrics.disc_out_history = history
    return TrainResult(G, D, metrics)


class _Net:
    """Unchecked parameter view used inside the training loop."""

    __slots__ = ("weight", "bias")

    def __init__(self, weight, bias):
        self.weight = weight
        self.bias = bias


# --- sweep -----------------------------------------------------------------

@dataclass
class SweepRow:
    alpha: AlphaParam
    noise_pct: float
    run: int
    metrics: Optional[RunMetrics]
    error: Optional[str] = None


@dataclass
class SweepResult:
    rows: List[SweepRow]
    means: Dict[Tuple[str, float], Dict[str, float]]

    def cell_histogram(self, alpha, noise_pct: float) -> np.ndarray:
        """Output distribution over 0..127 averaged across the cell's successful runs."""
        alpha = as_alpha(alpha)
        dists = [r.metrics.output_dist.probs for r in self.rows
                 if r.alpha == alpha and r.noise_pct == noise_pct and r.metrics is not None]
        return np.mean(dists, axis=0) if dists else np.full(N_VALUES, np.nan)


def run_seed(root_seed: int, alpha: AlphaParam, noise_pct: float, run: int) -> int:
    rng = make_rng(root_seed, "run", str(alpha), repr(float(noise_pct)), run)
    return int(rng.integers(0, 2**63 - 1))


def _sweep_task(args):
    config, eval_noise = args
    try:
        return train_alpha_gan(config, eval_noise=eval_noise).metrics, None
    except TrainingDiverged as exc:
        return None, str(exc)


def aggregate(rows: Sequence[SweepRow]) -> Dict[Tuple[str, float], Dict[str, float]]:
    cells: Dict[Tuple[str, float], List[RunMetrics]] = {}
    for r in rows:
        cells.setdefault((str(r.alpha), r.noise_pct), [])
        if r.metrics is not None:
            cells[(str(r.alpha), r.noise_pct)].append(r.metrics)
    means = {}
    for key, ms in cells.items():
        if ms:
            means[key] = {k: float(np.mean([m.row()[k] for m in ms])) for k in ("modes", "pct_odd", "tvd", "jsd")}
        else:
            means[key] = {k: math.nan for k in ("modes", "pct_odd", "tvd", "jsd")}
        means[key]["n_runs"] = len(ms)
    return means


def sweep(alphas: Sequence, noise_pcts: Sequence[float], base_config: TrainConfig,
          workers: int = 1) -> SweepResult:
    """Train ``base_config.runs`` runs per (alpha, noise) cell and average per cell.

    All runs are evaluated on the same noise, drawn from ``base_config.seed``.
    A diverged run is recorded with its error and left out of the means.
    """
    if not alphas or not noise_pcts:
        raise ValueError("alphas and noise_pcts must be nonempty")
    eval_noise = eval_noise_for(base_config.seed, base_config.n_eval_noise)
    keys, tasks = [], []
    for a in map(as_alpha, alphas):
        for noise in noise_pcts:
            for run in range(base_config.runs):
                cfg = replace(base_config, alpha=a, noise_pct=float(noise),
                              seed=run_seed(base_config.seed, a, noise, run))
                keys.append((a, float(noise), run))
                tasks.append((cfg, eval_noise))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_task, tasks))
    else:
        outcomes = [_sweep_task(t) for t in tasks]
    rows = [SweepRow(a, noise, run, m, err) for (a, noise, run), (m, err) in zip(keys, outcomes)]
    for r in rows:
        if r.error:
            log.warning("run failed: %s", r.error)
    return SweepResult(rows, aggregate(rows))


# --- output files ----------------------------------------------------------

def result_records(rows: Sequence[SweepRow]) -> List[Dict[str, object]]:
    out = []
    for r in rows:
        rec = {"alpha": str(r.alpha), "noise_pct": r.noise_pct, "run": r.run}
        if r.metrics is None:
            rec.update({k: "nan" for k in ("modes", "pct_odd", "tvd", "jsd")})
        else:
            rec.update(r.metrics.row())
        out.append(rec)
    return out


def write_records(records: Sequence[Dict[str, object]], path, fmt: str = "csv",
                  header: Sequence[str] = RESULTS_HEADER) -> None:
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps([{k: rec[k] for k in header} for rec in records], indent=1) + "\n")
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for rec in records:
            w.writerow([rec[k] for k in header])


def write_histogram(probs: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        for i, p in enumerate(probs):
            fh.write(f"{i},{float(p)!r}\n")


def write_trace(history, path, fmt: str = "csv") -> None:
    records = [dict(zip(TRACE_HEADER, row)) for row in history]
    write_records(records, path, fmt, TRACE_HEADER)
