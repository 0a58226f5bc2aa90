"""Command-line entry point: ``grangerseq <subcommand> ...``.

Sample text is whitespace-separated with one time index per line; column one
is x (the series tested for being caused) and column two is y (the candidate
cause).  Pair files for ``windowed`` follow the cause-effect-pairs layout
instead (cause first), see ``--swap``.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .blockdetect import block_test
from .errors import ConfigError, GrangerSeqError
from .harness import emit, ingest_pair, run_roc, run_windowed
from .model import NoiseConfig, VarModel, chi2_dof, second_order_stats
from .samples import iter_pairs, read_pairs, write_pairs
from .seqdetect import SeqConfig, SequentialDetector, thresholds
from .simulate import corrupt, generate
from .stats import predicted_pd, threshold_for_pfa

log = logging.getLogger("grangerseq")


def load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def _model_from(args: argparse.Namespace, cfg: dict[str, Any]) -> VarModel:
    if "K" in cfg:
        return VarModel.from_dict(cfg)
    a = getattr(args, "coupling", None)
    field = getattr(args, "field", None) or cfg.get("field", "complex")
    return VarModel.toy(0.25 if a is None else a, field=field if field in ("real", "complex") else "complex")


def _noise_from(args: argparse.Namespace, cfg: dict[str, Any], model: VarModel) -> NoiseConfig:
    snr = getattr(args, "snr_db", None)
    if snr is not None:
        return NoiseConfig.from_snr(model, snr)
    return NoiseConfig.from_dict(cfg, model)


def _open_in(path: str):
    return sys.stdin if path == "-" else open(path, encoding="utf-8")


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    model = _model_from(args, cfg)
    path = generate(model, args.samples, args.seed, args.burn_in)
    if not args.clean:
        path = corrupt(path, _noise_from(args, cfg, model), np.random.SeedSequence(args.seed).spawn(1)[0])
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8")
    try:
        write_pairs(out, path.first, path.second)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _field_arg(args: argparse.Namespace, *arrays: np.ndarray) -> str:
    if args.field:
        return args.field
    return "complex" if any(np.iscomplexobj(a) for a in arrays) else "real"


def cmd_block_test(args: argparse.Namespace) -> int:
    with _open_in(args.input) as fh:
        x, y = read_pairs(fh)
    field = _field_arg(args, x, y)
    K = args.order
    dof = chi2_dof(K, field)
    lam = args.threshold if args.threshold is not None else threshold_for_pfa(K, args.pfa, dof=dof)
    sigma: Any = "plugin"
    if args.sigma == "oracle":
        cfg = load_config(args.config)
        if "K" not in cfg:
            raise ConfigError("--sigma oracle needs --config with the model (keys K, a_uu, a_uv, a_vv, ...)")
        model = VarModel.from_dict(cfg)
        sigma = second_order_stats(model, NoiseConfig.from_dict(cfg, model))
    N = args.window or len(x)
    starts = range(0, len(x) - N + 1, N) if args.window else [0]
    for s in starts:
        T, est = block_test(x[s : s + N], y[s : s + N], K, N, sigma, field)
        rec = {"start": s, "N": N, "K": K, "dof": dof, "T_N": T, "threshold": lam,
               "decision": "causal" if T > lam else "noncausal"}
        print(json.dumps(rec))
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    dof = chi2_dof(args.order, args.field)
    for alpha in args.pfa:
        lam = threshold_for_pfa(args.order, alpha, dof=dof)
        rec: dict[str, Any] = {"K": args.order, "dof": dof, "alpha": alpha, "lambda": lam}
        if args.kappa is not None:
            rec["kappa"] = args.kappa
            rec["p_d"] = predicted_pd(args.order, args.kappa, lam, dof=dof)
        print(json.dumps(rec))
    return 0


def cmd_sequential(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    oracle = None
    if args.sigma == "oracle":
        if "K" not in cfg:
            raise ConfigError("--sigma oracle needs --config with the model")
        model = VarModel.from_dict(cfg)
        oracle = second_order_stats(model, NoiseConfig.from_dict(cfg, model))
    fh = _open_in(args.input)
    try:
        pairs = iter_pairs(fh, args.input)
        first = next(pairs, None)
        if first is None:
            raise GrangerSeqError("no samples on input")
        field = args.field or ("complex" if isinstance(first[1], complex) or isinstance(first[2], complex) else "real")
        config = SeqConfig(K=args.order, mu=args.mu, delta=args.delta, alpha=args.alpha, beta=args.beta,
                           n_max=args.nmax, sigma_mode=args.sigma, field=field, oracle=oracle, warmup=args.warmup)
        det = SequentialDetector(config)
        print("n\tT\tlambda0\tlambda1\tverdict")
        for _, a, b in itertools.chain([first], pairs):
            T, decision = det.step(a, b)
            if det.n >= config.n_min:
                lam0, lam1 = thresholds(det.n, config)
            else:
                lam0 = lam1 = math.nan
            print(f"{det.n}\t{T:.10g}\t{lam0:.10g}\t{lam1:.10g}\t{decision.verdict.value}", flush=args.flush)
            if det.decided:
                break
    finally:
        if fh is not sys.stdin:
            fh.close()
    return 0


def cmd_roc(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    model = _model_from(args, cfg)
    snr = args.snr_db if args.snr_db is not None else cfg.get("snr_x_db")
    curves = []
    for N in args.N:
        curve = run_roc(model, snr, N, args.trials, args.seed, sigma_mode=args.sigma, workers=args.workers)
        log.info("N=%d kappa=%.6g empirical AUC=%.4f", N, curve.meta["kappa"], curve.auc())
        curves.append(curve)
    emit(curves, args.out, args.format)
    return 0


def cmd_windowed(args: argparse.Namespace) -> int:
    x, y = ingest_pair(args.input, swap=args.swap)
    results = []
    for snr in args.snr_db:
        res = run_windowed(x, y, args.order, args.window, snr, args.trials, seed=args.seed)
        log.info("SNR=%g dB windows=%d AUC=%.4f", snr, res.n_windows, res.auc())
        results.append(res)
    emit(results, args.out, args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grangerseq", description="Granger causality detection with block and sequential tests.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="emit a two-column sample path (x y)")
    s.add_argument("--config", help="JSON model/noise configuration")
    s.add_argument("--coupling", type=float, help="toy-model coupling a when no --config model is given")
    s.add_argument("--field", choices=("real", "complex"))
    s.add_argument("-n", "--samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=int, default=None)
    s.add_argument("--snr-db", type=float, default=None, help="per-series SNR; overrides config noise")
    s.add_argument("--clean", action="store_true", help="emit u, v without measurement noise")
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("block-test", parents=[common], help="block statistic T_N on two-column samples")
    b.add_argument("input", help="sample file or - for stdin")
    b.add_argument("--order", "-K", type=int, default=1)
    b.add_argument("--window", "-N", type=int, default=None, help="test consecutive windows of N samples")
    g = b.add_mutually_exclusive_group()
    g.add_argument("--threshold", type=float)
    g.add_argument("--pfa", type=float, default=0.1)
    b.add_argument("--sigma", choices=("plugin", "oracle"), default="plugin")
    b.add_argument("--config", help="model configuration for --sigma oracle")
    b.add_argument("--field", choices=("real", "complex"), help="default: inferred from the data")
    b.set_defaults(func=cmd_block_test)

    c = sub.add_parser("calibrate", parents=[common], help="threshold for a false-alarm level and predicted P_d")
    c.add_argument("--order", "-K", type=int, default=1)
    c.add_argument("--pfa", type=float, nargs="+", default=[0.1])
    c.add_argument("--kappa", type=float, help="noncentrality of the statistic")
    c.add_argument("--field", choices=("real", "complex"), default="complex")
    c.set_defaults(func=cmd_calibrate)

    q = sub.add_parser("sequential", parents=[common], help="run the sequential detector over streaming samples")
    q.add_argument("input", nargs="?", default="-")
    q.add_argument("--order", "-K", type=int, default=1)
    q.add_argument("--mu", type=float, default=1.0)
    q.add_argument("--delta", type=float, default=1e-3)
    q.add_argument("--alpha", type=float, default=0.1)
    q.add_argument("--beta", type=float, default=0.05)
    q.add_argument("--nmax", type=int, default=2000)
    q.add_argument("--warmup", type=int, default=None, help="first n allowed to decide (default 20K)")
    q.add_argument("--sigma", choices=("plugin", "oracle"), default="plugin")
    q.add_argument("--config", help="model configuration for --sigma oracle")
    q.add_argument("--field", choices=("real", "complex"))
    q.add_argument("--flush", action="store_true", help="flush after every line")
    q.set_defaults(func=cmd_sequential)

    r = sub.add_parser("roc", parents=[common], help="Monte Carlo ROC for a model (default: toy VAR-1, a=0.25)")
    r.add_argument("--config")
    r.add_argument("--coupling", type=float)
    r.add_argument("--field", choices=("real", "complex"))
    r.add_argument("--snr-db", type=float, default=None)
    r.add_argument("-N", type=int, nargs="+", default=[25, 100, 400])
    r.add_argument("--trials", type=int, default=10_000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--sigma", choices=("plugin", "oracle"), default="oracle")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    r.add_argument("-o", "--out", required=True)
    r.set_defaults(func=cmd_roc)

    w = sub.add_parser("windowed", parents=[common], help="windowed detection on a cause-effect pair file")
    w.add_argument("input", help="two columns: cause effect")
    w.add_argument("--swap", action="store_true", help="file lists the effect first")
    w.add_argument("--order", "-K", type=int, default=1)
    w.add_argument("--window", "-N", type=int, default=50)
    w.add_argument("--snr-db", type=float, nargs="+", default=[20.0])
    w.add_argument("--trials", type=int, default=20, help="noise realisations per SNR")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    w.add_argument("-o", "--out", required=True)
    w.set_defaults(func=cmd_windowed)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. a sequential detector that already decided)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (GrangerSeqError, ValueError, ArithmeticError, OSError) as exc:
        print(f"grangerseq {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
