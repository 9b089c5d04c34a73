"""Command-line interface: ``alphagan {train,sweep,divergence,bounds,verify}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import bounds, divergences as dv
from .losses import AlphaParam
from .nn import save_net
from .train import (DEFAULT_ALPHAS, DEFAULT_NOISE_PCTS, SweepRow, TrainConfig, TrainingDiverged,
                    eval_noise_for, result_records, run_seed, sweep, train_alpha_gan,
                    write_histogram, write_records, write_trace)
from .verify import SUITES, run_suites

log = logging.getLogger("alphagan")


def _alpha(text: str) -> AlphaParam:
    try:
        return AlphaParam.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _alpha_list(text: str) -> List[AlphaParam]:
    return [_alpha(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> List[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _pct_list(text: str) -> List[float]:
    return [_pct(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> List[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _pos_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _pct(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 100.0:
        raise argparse.ArgumentTypeError("must lie in [0, 100]")
    return v


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=_nonneg_int, default=2000)
    p.add_argument("--batch", type=_pos_int, default=256)
    p.add_argument("--lr", type=_pos_float, default=0.001)
    p.add_argument("--runs", type=_pos_int, default=10)
    p.add_argument("--n-train", type=_pos_int, default=25600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--non-saturating", action="store_true")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alphagan", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train alpha-GAN on the 7-bit toy dataset")
    p.add_argument("--alpha", type=_alpha, default=AlphaParam(1.0))
    p.add_argument("--noise-pct", type=_pct, default=0.0)
    _add_training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train every (alpha, noise) cell and average over runs")
    p.add_argument("--alpha", type=_alpha_list, default=[AlphaParam(a) for a in DEFAULT_ALPHAS],
                   help="comma-separated alphas")
    p.add_argument("--noise-pct", type=_pct_list, default=list(DEFAULT_NOISE_PCTS),
                   help="comma-separated noise percentages")
    p.add_argument("--workers", type=_pos_int, default=1)
    _add_training_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("divergence", help="divergences between two distribution files")
    p.add_argument("first", type=Path)
    p.add_argument("second", type=Path)
    p.add_argument("--alpha", type=_alpha_list, default=_alpha_list("0.5,1,2,inf"))
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("bounds", help="estimation-error bound over alpha, n and m grids")
    p.add_argument("--alpha", type=_alpha_list, default=_alpha_list("0.5,1,2,10,inf"))
    p.add_argument("--n", type=_int_list, default=[25600])
    p.add_argument("--m", type=_int_list, default=[25600])
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--M", type=_float_list, default=[1.0], help="discriminator layer norm budgets")
    p.add_argument("--R", type=_float_list, default=[], help="discriminator activation Lipschitz constants")
    p.add_argument("--N", type=_float_list, default=[1.0], help="generator layer norm budgets")
    p.add_argument("--S", type=_float_list, default=[], help="generator activation Lipschitz constants")
    p.add_argument("--Bx", type=float, default=math.sqrt(8.0), help="data radius (toy default sqrt(7+1))")
    p.add_argument("--Bz", type=float, default=None,
                   help="noise radius; defaults to sqrt(r^2+1) with r the 99.9%% quantile of ||z||, z~N(0,I_7)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="run the numerical property suites")
    p.add_argument("--suite", action="append", choices=sorted(SUITES), default=None)
    p.add_argument("--iters", type=_pos_int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def _emit(records, header, fmt: str, out: Optional[Path]) -> None:
    if out is not None:
        write_records(records, out, fmt, header)
        return
    if fmt == "json":
        print(json.dumps([{k: r[k] for k in header} for r in records], indent=1))
    else:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        for r in records:
            w.writerow([r[k] for k in header])


def _tag(alpha: AlphaParam, noise: float) -> str:
    return f"alpha{alpha}_noise{noise:g}"


def _config_from(args, alpha: AlphaParam, noise: float) -> TrainConfig:
    return TrainConfig(alpha=alpha, noise_pct=noise, epochs=args.epochs, batch_size=args.batch,
                       learning_rate=args.lr, n_train=args.n_train, runs=args.runs, seed=args.seed,
                       non_saturating=args.non_saturating)


def cmd_train(args) -> int:
    try:
        config = _config_from(args, args.alpha, args.noise_pct)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    eval_noise = eval_noise_for(config.seed, config.n_eval_noise)
    tag = _tag(config.alpha, config.noise_pct)
    rows = []
    status = 0
    for run in range(config.runs):
        cfg = replace(config, seed=run_seed(config.seed, config.alpha, config.noise_pct, run))
        try:
            res = train_alpha_gan(cfg, eval_noise=eval_noise)
        except TrainingDiverged as exc:
            print(f"error: {exc}", file=sys.stderr)
            rows.append(SweepRow(config.alpha, config.noise_pct, run, None, str(exc)))
            status = 3
            continue
        rows.append(SweepRow(config.alpha, config.noise_pct, run, res.metrics))
        write_trace(res.metrics.disc_out_history, out / f"trace_{tag}_run{run}.{args.format}", args.format)
        save_net(res.G, out / f"G_{tag}_run{run}.txt")
        save_net(res.D, out / f"D_{tag}_run{run}.txt")
        m = res.metrics
        log.info("run %d: modes=%d pct_odd=%.2f tvd=%.4f jsd=%.4f", run, m.modes, m.pct_odd,
                 m.tvd_to_uniform, m.jsd_to_uniform)
    write_records(result_records(rows), out / f"results.{args.format}", args.format)
    ok = [r.metrics.output_dist.probs for r in rows if r.metrics is not None]
    if ok:
        write_histogram(np.mean(ok, axis=0), out / f"hist_{tag}.csv")
    return status


def cmd_sweep(args) -> int:
    try:
        base = _config_from(args, AlphaParam(1.0), 0.0)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not args.alpha or not args.noise_pct:
        print("error: --alpha and --noise-pct need at least one value", file=sys.stderr)
        return 2
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    result = sweep(args.alpha, args.noise_pct, base, workers=args.workers)
    write_records(result_records(result.rows), out / f"results.{args.format}", args.format)
    mean_header = ("alpha", "noise_pct", "n_runs", "modes", "pct_odd", "tvd", "jsd")
    means = [{"alpha": a, "noise_pct": n, **vals} for (a, n), vals in result.means.items()]
    write_records(means, out / f"means.{args.format}", args.format, mean_header)
    for a in args.alpha:
        for n in args.noise_pct:
            write_histogram(result.cell_histogram(a, n), out / f"hist_{_tag(a, n)}.csv")
    return 0 if all(r.error is None for r in result.rows) else 3


def read_distribution(path: Path) -> dv.DiscreteDist:
    """Parse ``integer,probability`` lines; totals within 1e-9 of 1 are renormalised."""
    mapping = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            key, val = line.split(",")
            k, v = int(key), float(val)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: expected 'integer,probability', got {line!r}") from None
        if k in mapping:
            raise ValueError(f"{path}:{lineno}: duplicate label {k}")
        if not (v >= 0 and math.isfinite(v)):
            raise ValueError(f"{path}:{lineno}: invalid probability {val!r}")
        mapping[k] = v
    if not mapping:
        raise ValueError(f"{path}: no entries")
    total = sum(mapping.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"{path}: probabilities sum to {total!r}, not 1")
    return dv.DiscreteDist.from_mapping({k: v / total for k, v in mapping.items()})


def divergence_records(P: dv.DiscreteDist, Q: dv.DiscreteDist, alphas: Sequence[AlphaParam]):
    P, Q = dv.align(P, Q)
    base = {"tvd": dv.tvd(P, Q), "jsd": dv.jsd(P, Q), "sq_hellinger": dv.sq_hellinger(P, Q),
            "jsd_tvd_slack": dv.jsd_tvd_bound_slack(P, Q)}
    records = []
    for a in alphas:
        rec = {"alpha": str(a), **base, "arimoto": dv.arimoto(P, Q, a)}
        if a.is_inf:
            rec["lower_slack"] = rec["upper_slack"] = ""
        else:
            s = dv.sandwich_slack(P, Q, a)
            rec["lower_slack"], rec["upper_slack"] = s.lower, s.upper
        records.append(rec)
    return records


DIVERGENCE_HEADER = ("alpha", "tvd", "jsd", "sq_hellinger", "arimoto", "lower_slack", "upper_slack",
                     "jsd_tvd_slack")


def cmd_divergence(args) -> int:
    try:
        P = read_distribution(args.first)
        Q = read_distribution(args.second)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(divergence_records(P, Q, args.alpha), DIVERGENCE_HEADER, args.format, args.out)
    return 0


BOUNDS_HEADER = ("alpha", "n", "m", "C_Qx", "C_Qz", "bound")


def default_noise_radius(dim: int = 7, quantile: float = 0.999) -> float:
    from scipy.stats import chi2
    return math.sqrt(chi2.ppf(quantile, dim))


def cmd_bounds(args) -> int:
    bz = args.Bz if args.Bz is not None else math.sqrt(default_noise_radius() ** 2 + 1.0)
    records = []
    try:
        for a in args.alpha:
            for n in args.n:
                for m in args.m:
                    p = bounds.NetBoundParams(k=len(args.M), l=len(args.N), M=args.M, R=args.R, N=args.N,
                                              S=args.S, B_x=args.Bx, B_z=bz, n=n, m=m, delta=args.delta)
                    cp = bounds.capacity_products(p)
                    records.append({"alpha": str(a), "n": n, "m": m, "C_Qx": bounds.c_h(cp.Q_x, a),
                                    "C_Qz": bounds.c_h(cp.Q_z, a), "bound": bounds.estimation_bound_alpha(p, a)})
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(records, BOUNDS_HEADER, args.format, args.out)
    return 0


def cmd_verify(args) -> int:
    results = run_suites(args.suite, seed=args.seed, iters=args.iters)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extra = f"  ({r.detail})" if r.detail else ""
        print(f"{status}  {r.name:<15} worst slack {r.worst_slack:+.3e}{extra}")
    return 0 if all(r.passed for r in results) else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
