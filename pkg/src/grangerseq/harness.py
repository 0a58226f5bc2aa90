"""Experiment drivers: Monte Carlo ROC, windowed real-data detection, sequential trials.

All randomness flows from a master seed through ``numpy.random.SeedSequence``
children, one per trial, so results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .blockdetect import block_test
from .model import NoiseConfig, VarModel, chi2_dof, chi2_scale, second_order_stats
from .samples import read_pairs
from .seqdetect import SeqConfig, SequentialDetector, Verdict
from .simulate import corrupt, generate
from .stats import tail_probability, threshold_for_pfa

DEFAULT_PFA_GRID = (0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)


def threshold_grid_for(dof: int, pfa_grid: Sequence[float] = DEFAULT_PFA_GRID) -> np.ndarray:
    """Thresholds whose central chi-squared(dof) tail hits each target P_fa, decreasing."""
    lams = [threshold_for_pfa(1, a, dof=dof) for a in pfa_grid]
    return np.array(sorted(lams, reverse=True))


def _exceedance(stats: np.ndarray, lams: np.ndarray) -> np.ndarray:
    return (stats[None, :] > lams[:, None]).mean(axis=1) if stats.size else np.full(lams.shape, np.nan)


def trapezoid_auc(p_fa: Sequence[float], p_d: Sequence[float]) -> float:
    """Area under the (P_fa, P_d) polyline closed with the (0,0) and (1,1) corners."""
    pts = sorted(zip(p_fa, p_d))
    xs = np.array([0.0] + [p[0] for p in pts] + [1.0])
    ys = np.array([0.0] + [p[1] for p in pts] + [1.0])
    return float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2.0))


@dataclass(frozen=True)
class RocPoint:
    lam: float
    p_fa_empirical: float
    p_d_empirical: float
    p_fa_theory: float
    p_d_theory: float


@dataclass(eq=False)
class RocCurve:
    points: list[RocPoint]
    meta: dict[str, Any]
    t_null: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    t_alt: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    COLUMNS = ("lambda", "p_fa_empirical", "p_d_empirical", "p_fa_theory", "p_d_theory",
               "N", "K", "snr_db", "trials", "master_seed", "sigma_mode")

    def rows(self) -> list[dict[str, Any]]:
        meta = [self.meta.get(k) for k in self.COLUMNS[5:]]
        return [dict(zip(self.COLUMNS, (p.lam, p.p_fa_empirical, p.p_d_empirical, p.p_fa_theory, p.p_d_theory, *meta)))
                for p in self.points]

    def pd_at_pfa(self, pfa_grid: Sequence[float]) -> np.ndarray:
        """Empirical P_d at thresholds set from the empirical null quantiles."""
        lams = np.quantile(self.t_null, 1.0 - np.asarray(pfa_grid, dtype=float), method="higher")
        return _exceedance(self.t_alt, np.asarray(lams))

    def auc(self) -> float:
        return trapezoid_auc([p.p_fa_empirical for p in self.points], [p.p_d_empirical for p in self.points])


def _trial_seeds(master_seed: int, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(trials)


def _map(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _chunks(items: list, n: int) -> list[list]:
    size = max(1, math.ceil(len(items) / n))
    return [items[i : i + size] for i in range(0, len(items), size)]


def _roc_chunk(job: tuple) -> tuple[list[float], list[float]]:
    model_h1, model_h0, noise, N, sigma_mode, seeds = job
    oracle1 = second_order_stats(model_h1, noise) if sigma_mode == "oracle" else "plugin"
    oracle0 = second_order_stats(model_h0, noise) if sigma_mode == "oracle" else "plugin"
    t1, t0 = [], []
    for ss in seeds:
        s_path1, s_noise1, s_path0, s_noise0 = ss.spawn(4)
        obs = corrupt(generate(model_h1, N, s_path1), noise, s_noise1)
        t1.append(block_test(obs.x, obs.y, model_h1.K, N, oracle1, model_h1.field)[0])
        obs = corrupt(generate(model_h0, N, s_path0), noise, s_noise0)
        t0.append(block_test(obs.x, obs.y, model_h0.K, N, oracle0, model_h0.field)[0])
    return t1, t0


def run_roc(
    model: VarModel,
    snr_db: float | None,
    N: int,
    trials: int,
    seed: int,
    threshold_grid: Sequence[float] | None = None,
    sigma_mode: str = "oracle",
    workers: int = 1,
) -> RocCurve:
    """Monte Carlo ROC of the block statistic against its chi-squared theory.

    H1 trials use ``model``; H0 trials use the same model with the coupling
    removed and the same absolute noise variances.  Oracle mode whitens each
    trial with the true statistics of the model that generated it.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if sigma_mode not in ("oracle", "plugin"):
        raise ValueError(f"sigma_mode must be 'oracle' or 'plugin', got {sigma_mode!r}")
    noise = NoiseConfig.from_snr(model, snr_db) if snr_db is not None else NoiseConfig()
    dof = chi2_dof(model.K, model.field)
    lams = threshold_grid_for(dof) if threshold_grid is None else np.sort(np.asarray(threshold_grid, float))[::-1]
    if lams.size == 0:
        raise ValueError("threshold grid is empty")

    seeds = _trial_seeds(seed, trials)
    jobs = [(model, model.null(), noise, N, sigma_mode, chunk) for chunk in _chunks(seeds, max(workers, 1) * 4)]
    t1: list[float] = []
    t0: list[float] = []
    for a, b in _map(_roc_chunk, jobs, workers):
        t1.extend(a)
        t0.extend(b)
    t_alt, t_null = np.array(t1), np.array(t0)

    kappa_T = chi2_scale(model.field) * second_order_stats(model, noise).kappa(N)
    pfa_e, pd_e = _exceedance(t_null, lams), _exceedance(t_alt, lams)
    points = [
        RocPoint(float(l), float(fa), float(d), tail_probability(dof, 0.0, float(l)), tail_probability(dof, kappa_T, float(l)))
        for l, fa, d in zip(lams, pfa_e, pd_e)
    ]
    meta = {"N": N, "K": model.K, "snr_db": snr_db, "trials": trials, "master_seed": seed,
            "sigma_mode": sigma_mode, "kappa": kappa_T, "field": model.field}
    return RocCurve(points, meta, t_null, t_alt)


def ingest_pair(path: str | os.PathLike, swap: bool = False, demean: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Load a cause-effect pair file as ``(x, y)`` with x the effect and y the candidate cause.

    Files list the cause in column one and the effect in column two; ``swap``
    reverses that.  Both series are made zero-mean.
    """
    cause, effect = read_pairs(path)
    if swap:
        cause, effect = effect, cause
    x = np.real(effect).astype(float)
    y = np.real(cause).astype(float)
    if demean:
        x = x - x.mean()
        y = y - y.mean()
    return x, y


@dataclass(eq=False)
class WindowedResult:
    N: int
    K: int
    snr_db: float
    n_windows: int
    trials_noise: int
    thresholds: np.ndarray
    p_d: np.ndarray
    p_fa: np.ndarray
    master_seed: int

    COLUMNS = ("lambda", "p_fa", "p_d", "N", "K", "snr_db", "n_windows", "trials_noise", "master_seed")

    def rows(self) -> list[dict[str, Any]]:
        meta = (self.N, self.K, self.snr_db, self.n_windows, self.trials_noise, self.master_seed)
        return [dict(zip(self.COLUMNS, (float(l), float(fa), float(d), *meta)))
                for l, fa, d in zip(self.thresholds, self.p_fa, self.p_d)]

    def auc(self) -> float:
        return trapezoid_auc(self.p_fa, self.p_d)


def window_starts(length: int, K: int, N: int) -> list[int]:
    """Non-overlapping window offsets, consecutive from sample K+1 (index K)."""
    usable = length - K
    return [K + i * N for i in range(max(usable, 0) // N)]


def run_windowed(
    x: np.ndarray,
    y: np.ndarray,
    K: int,
    N: int,
    snr_db: float,
    trials_noise: int = 20,
    threshold_grid: Sequence[float] | None = None,
    seed: int = 0,
) -> WindowedResult:
    """Detection on real data: AWGN at ``snr_db`` is injected, T_N computed per window.

    P_d counts windows of the noisy data whose statistic exceeds each
    threshold; P_fa applies the same pipeline to the injected noise alone.
    Counts are averaged over windows and ``trials_noise`` noise draws.  The
    noise draws for a given seed are the same at every SNR, only rescaled.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if N < 2 * K + 2:
        raise ValueError(f"window N={N} too small for order K={K}; need N >= {2 * K + 2}")
    length = min(x.shape[0], y.shape[0])
    if length < 2 * N:
        raise ValueError(f"series length {length} must be at least 2N = {2 * N}")
    dof = chi2_dof(K, "real")
    lams = threshold_grid_for(dof) if threshold_grid is None else np.sort(np.asarray(threshold_grid, float))[::-1]
    sx = math.sqrt(np.var(x[:length]) * 10.0 ** (-snr_db / 10.0))
    sy = math.sqrt(np.var(y[:length]) * 10.0 ** (-snr_db / 10.0))
    starts = window_starts(length, K, N)

    det = np.zeros(lams.shape)
    fa = np.zeros(lams.shape)
    for ss in _trial_seeds(seed, trials_noise):
        rng = np.random.default_rng(ss)
        nu_x = sx * rng.standard_normal(length)
        nu_y = sy * rng.standard_normal(length)
        xn, yn = x[:length] + nu_x, y[:length] + nu_y
        for s in starts:
            w = slice(s, s + N)
            t_d = block_test(xn[w], yn[w], K, N, "plugin", "real")[0]
            t_f = block_test(nu_x[w], nu_y[w], K, N, "plugin", "real")[0]
            det += t_d > lams
            fa += t_f > lams
    total = len(starts) * trials_noise
    return WindowedResult(N, K, snr_db, len(starts), trials_noise, lams, det / total, fa / total, seed)


@dataclass(frozen=True)
class SequentialSummary:
    trials: int
    causal: int
    noncausal: int
    undecided: int
    decision_times: tuple[int, ...]
    master_seed: int

    @property
    def causal_fraction(self) -> float:
        return self.causal / self.trials


def run_sequential(
    model: VarModel,
    config: SeqConfig,
    trials: int,
    seed: int,
    snr_db: float | None = None,
) -> SequentialSummary:
    """Run the sequential detector on independent seeded paths of ``model``."""
    noise = NoiseConfig.from_snr(model, snr_db) if snr_db is not None else NoiseConfig()
    counts = {Verdict.CAUSAL: 0, Verdict.NONCAUSAL: 0, Verdict.CONTINUE: 0}
    times = []
    for ss in _trial_seeds(seed, trials):
        s_path, s_noise = ss.spawn(2)
        obs = corrupt(generate(model, config.n_max, s_path), noise, s_noise)
        d = SequentialDetector(config).run(obs.x, obs.y)
        counts[d.verdict] += 1
        times.append(d.n_decided if d.n_decided is not None else -1)
    return SequentialSummary(trials, counts[Verdict.CAUSAL], counts[Verdict.NONCAUSAL],
                             counts[Verdict.CONTINUE], tuple(times), seed)


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit(results: RocCurve | WindowedResult | Iterable[RocCurve | WindowedResult], path: str | os.PathLike,
         fmt: str = "csv", columns: Sequence[str] | None = None) -> None:
    """Write result rows as CSV (with header) or JSON lines.

    Floats are written with ``repr`` so a read-back reproduces them exactly.
    An empty result list with known ``columns`` yields a header-only CSV.
    """
    if isinstance(results, (RocCurve, WindowedResult)):
        results = [results]
    results = list(results)
    if columns is None:
        columns = results[0].COLUMNS if results else RocCurve.COLUMNS
    rows = [r for res in results for r in res.rows()]
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"format must be 'csv' or 'jsonl', got {fmt!r}")
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    else:
        for row in rows:
            buf.write(json.dumps({c: row.get(c) for c in columns}) + "\n")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write results to {os.fspath(path)!r}: {exc.strerror or exc}") from exc


def read_roc_csv(path: str | os.PathLike) -> list[RocCurve]:
    """Inverse of ``emit`` for ROC CSV files, grouped by (N, snr_db)."""
    groups: dict[tuple, RocCurve] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            meta = {
                "N": int(row["N"]),
                "K": int(row["K"]),
                "snr_db": float(row["snr_db"]) if row["snr_db"] else None,
                "trials": int(row["trials"]),
                "master_seed": int(row["master_seed"]),
                "sigma_mode": row["sigma_mode"],
            }
            key = (meta["N"], meta["snr_db"], meta["sigma_mode"])
            curve = groups.setdefault(key, RocCurve([], meta))
            curve.points.append(RocPoint(*(float(row[c]) for c in RocCurve.COLUMNS[:5])))
    return list(groups.values())
