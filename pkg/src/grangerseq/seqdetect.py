"""Sequential causality detector driven by recursive least squares.

Each incoming pair (x[n], y[n]) updates the weight estimate with one RLS step
(prior error, gain, inverse-covariance update, weight update), after which
the statistic T[n] is compared with a lower and an upper threshold.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from enum import Enum
from typing import Iterable, Iterator, Literal

import numpy as np

from .blockdetect import whitened_quadratic
from .errors import ConfigError, DetectorStateError
from .model import Field, SecondOrderStats, chi2_dof, chi2_scale
from .stats import threshold_for_pfa


class Verdict(str, Enum):
    CAUSAL = "causal"
    NONCAUSAL = "noncausal"
    CONTINUE = "continue"


class Status(str, Enum):
    UNDECIDED = "undecided"
    DETECTED_CAUSAL = "detected_causal"
    DECLARED_NONCAUSAL = "declared_noncausal"


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    n_decided: int | None = None
    T_at_decision: float | None = None


@dataclass(frozen=True, eq=False)
class SeqConfig:
    """Detector settings.

    ``delta`` sets the initial regularization ``Phi[0] = delta * I``, so the
    inverse starts at ``I / delta``; a tiny delta gives near-exact LS.
    """

    K: int = 1
    mu: float = 1.0
    delta: float = 1e-3
    alpha: float = 0.1
    beta: float = 0.05
    n_max: int = 2000
    sigma_mode: Literal["plugin", "oracle"] = "plugin"
    field: Field = "complex"
    oracle: SecondOrderStats | None = None
    warmup: int | None = None

    def __post_init__(self) -> None:
        if int(self.K) != self.K or self.K < 1:
            raise ConfigError(f"K must be a positive integer, got {self.K!r}")
        if not (0.0 < self.mu <= 1.0):
            raise ConfigError(f"forgetting factor mu must lie in (0, 1], got {self.mu}")
        if not (self.delta > 0.0 and math.isfinite(self.delta)):
            raise ConfigError(f"delta must be finite and > 0, got {self.delta}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (0.0 < self.beta < 1.0):
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if self.field not in ("real", "complex"):
            raise ConfigError(f"field must be 'real' or 'complex', got {self.field!r}")
        if self.sigma_mode not in ("plugin", "oracle"):
            raise ConfigError(f"sigma_mode must be 'plugin' or 'oracle', got {self.sigma_mode!r}")
        if self.sigma_mode == "oracle":
            if self.oracle is None:
                raise ConfigError("sigma_mode='oracle' requires the model's SecondOrderStats")
            if self.oracle.K != self.K:
                raise ConfigError(f"oracle statistics have K={self.oracle.K}, detector has K={self.K}")
        if self.warmup is not None and self.warmup < 3 * self.K + 1:
            raise ConfigError(f"warmup must be >= 3K+1 = {3 * self.K + 1} so the residual power is defined")
        if self.n_max <= self.n_min:
            raise ConfigError(f"n_max={self.n_max} must exceed the warm-up length n_min={self.n_min}")
        lam0, lam1 = self.lambda0, self.lambda1
        if not lam0 < lam1:
            raise ConfigError(f"lower threshold {lam0:.6g} must be below upper threshold {lam1:.6g} (beta={self.beta}, alpha={self.alpha})")

    @property
    def n_min(self) -> int:
        """First sample index at which a verdict may be issued (default 20K)."""
        return 20 * self.K if self.warmup is None else int(self.warmup)

    @property
    def dof(self) -> int:
        return chi2_dof(self.K, self.field)

    @cached_property
    def lambda1(self) -> float:
        return threshold_for_pfa(self.K, self.alpha, self.dof)

    @cached_property
    def lambda0(self) -> float:
        return threshold_for_pfa(self.K, 1.0 - self.beta, self.dof)


def thresholds(n: int, config: SeqConfig) -> tuple[float, float]:
    """``(lambda0[n], lambda1[n])``: constant chi-squared quantiles at beta and 1-alpha.

    From ``n_max`` on both collapse to the block threshold for ``alpha`` so an
    undecided run is forced to a verdict.
    """
    if n < config.n_min:
        raise ValueError(f"thresholds are defined for n >= n_min={config.n_min}, got {n}")
    lam1 = config.lambda1
    if n >= config.n_max:
        return lam1, lam1
    return config.lambda0, lam1


class RlsEstimator:
    """Exponentially weighted RLS predictor of x[n] from the K-deep past of x and y.

    Maintains the weights, the inverse covariance ``P = Phi^{-1}``, ``Phi``
    and ``psi`` themselves, and the weighted LS residual energy.  With
    ``mu == 1`` and a negligible ``delta`` the weights equal the batch LS
    solution over the same rows.
    """

    def __init__(self, K: int, mu: float = 1.0, delta: float = 1e-3, field: Field = "complex"):
        self.K = K
        self.mu = mu
        self.field = field
        # extended precision: the first downdates cancel terms of size 1/delta
        dtype = np.clongdouble if field == "complex" else np.longdouble
        self._dtype = dtype
        self.n = 0
        self.rows = 0
        self._w = np.zeros(2 * K, dtype=dtype)
        self._P = np.eye(2 * K, dtype=dtype) / dtype(delta)
        self._Phi = dtype(delta) * np.eye(2 * K, dtype=dtype)
        self._psi = np.zeros(2 * K, dtype=dtype)
        self._energy = np.longdouble(0.0)
        self._hist_x: deque = deque(maxlen=K)
        self._hist_y: deque = deque(maxlen=K)

    def _out(self, arr: np.ndarray) -> np.ndarray:
        return arr.astype(complex if self.field == "complex" else float)

    @property
    def w_hat(self) -> np.ndarray:
        return self._out(self._w)

    @property
    def P(self) -> np.ndarray:
        return self._out(self._P)

    @property
    def Phi(self) -> np.ndarray:
        return self._out(self._Phi)

    @property
    def psi(self) -> np.ndarray:
        return self._out(self._psi)

    @property
    def residual_energy(self) -> float:
        return float(self._energy)

    @property
    def w_x(self) -> np.ndarray:
        return self.w_hat[: self.K]

    @property
    def w_y(self) -> np.ndarray:
        return self.w_hat[self.K :]

    @property
    def effective_rows(self) -> float:
        """Exponentially weighted row count; equals ``rows`` when mu == 1."""
        if self.mu == 1.0:
            return float(self.rows)
        return (1.0 - self.mu**self.rows) / (1.0 - self.mu)

    @property
    def sigma2_phi_run(self) -> float:
        """Weighted residual power with 2K degrees of freedom removed."""
        denom = self.effective_rows - 2 * self.K
        if denom <= 0:
            return math.nan
        return self.residual_energy / denom

    def _regressor(self) -> np.ndarray:
        # history deques hold oldest..newest; regressors run newest..oldest
        return np.concatenate([np.asarray(self._hist_x)[::-1], np.asarray(self._hist_y)[::-1]]).astype(self._dtype)

    def _update(self, x_n, z: np.ndarray) -> None:
        mu = self.mu
        w, P = self._w, self._P
        err = x_n - np.sum(w.conj() * z)
        Pz = P @ z
        denom = mu + np.real(np.sum(z.conj() * Pz))
        if not (denom > 0 and np.isfinite(denom)):
            raise DetectorStateError(f"RLS gain denominator is {float(denom)!r} at n={self.n}; inverse covariance lost definiteness")
        g = Pz / denom
        P = (P - np.outer(g, Pz.conj())) / mu
        self._P = (P + P.conj().T) / 2
        self._w = w + g * np.conj(err)
        self._Phi = mu * self._Phi + np.outer(z, z.conj())
        self._psi = mu * self._psi + z * np.conj(x_n)
        err_post = x_n - np.sum(self._w.conj() * z)
        self._energy = mu * self._energy + np.real(err * np.conj(err_post))
        self.rows += 1

    def push(self, x_n: complex, y_n: complex) -> None:
        """Absorb one sample pair; the first K pairs only fill the history."""
        if not (np.isfinite(x_n) and np.isfinite(y_n)):
            raise ValueError(f"non-finite sample at n={self.n + 1}: x={x_n!r}, y={y_n!r}")
        if self.field == "real":
            if np.imag(x_n) != 0 or np.imag(y_n) != 0:
                raise ValueError("complex sample fed to a real-field detector")
            x_n, y_n = np.real(x_n), np.real(y_n)
        x_n, y_n = self._dtype(x_n), self._dtype(y_n)
        self.n += 1
        if len(self._hist_x) == self.K:
            self._update(x_n, self._regressor())
        self._hist_x.append(x_n)
        self._hist_y.append(y_n)


class SequentialDetector:
    """RLS estimate plus the three-way decision rule; one ``step`` at a time per instance."""

    def __init__(self, config: SeqConfig):
        self.config = config
        self.rls = RlsEstimator(config.K, config.mu, config.delta, config.field)
        self.status = Status.UNDECIDED
        self.T = 0.0
        self.decision = Decision(Verdict.CONTINUE)

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def n(self) -> int:
        return self.rls.n

    @property
    def w_hat(self) -> np.ndarray:
        return self.rls.w_hat

    @property
    def P(self) -> np.ndarray:
        return self.rls.P

    @property
    def decided(self) -> bool:
        return self.status is not Status.UNDECIDED

    def statistic(self) -> float:
        """Current T[n]; 0 for zero weights, NaN while the residual power is undefined."""
        rls, cfg = self.rls, self.config
        w_y = rls.w_y
        if not np.any(w_y):
            return 0.0
        n_eff = rls.effective_rows
        if cfg.sigma_mode == "oracle":
            Sigma, s2 = cfg.oracle.Sigma, cfg.oracle.sigma2_phi
        else:
            s2 = rls.sigma2_phi_run
            if not math.isfinite(s2):
                return math.nan
            # P ~ Phi^{-1} unnormalized, so the normalized plug-in Sigma is n_eff * P_yy
            Sigma = n_eff * rls.P[self.K :, self.K :]
        if s2 <= 0:
            return math.inf
        return chi2_scale(cfg.field) * n_eff / s2 * whitened_quadratic(w_y, Sigma)

    def step(self, x_n: complex, y_n: complex) -> tuple[float, Decision]:
        """Consume one sample pair; a decided detector ignores further input."""
        if self.decided:
            return self.T, self.decision
        self.rls.push(x_n, y_n)
        n = self.rls.n
        self.T = self.statistic()
        if n < self.config.n_min:
            self.decision = Decision(Verdict.CONTINUE)
            return self.T, self.decision
        lam0, lam1 = thresholds(n, self.config)
        if self.T > lam1:
            self.status = Status.DETECTED_CAUSAL
            self.decision = Decision(Verdict.CAUSAL, n, self.T)
        elif self.T < lam0 or (n >= self.config.n_max and not self.T > lam1):
            self.status = Status.DECLARED_NONCAUSAL
            self.decision = Decision(Verdict.NONCAUSAL, n, self.T)
        else:
            self.decision = Decision(Verdict.CONTINUE)
        return self.T, self.decision

    def run(self, x: Iterable[complex], y: Iterable[complex]) -> Decision:
        """Feed samples until a verdict (or the input ends) and return the decision."""
        for x_n, y_n in zip(x, y):
            _, d = self.step(x_n, y_n)
            if d.verdict is not Verdict.CONTINUE:
                break
        return self.decision

    def trace(self, x: Iterable[complex], y: Iterable[complex]) -> Iterator[tuple[int, float, float, float, Verdict]]:
        """Per-sample ``(n, T, lambda0, lambda1, verdict)`` rows, stopping after a verdict."""
        for x_n, y_n in zip(x, y):
            T, d = self.step(x_n, y_n)
            if self.n >= self.config.n_min:
                lam0, lam1 = thresholds(self.n, self.config)
            else:
                lam0, lam1 = math.nan, math.nan
            yield self.n, T, lam0, lam1, d.verdict
            if d.verdict is not Verdict.CONTINUE:
                return


def new(config: SeqConfig) -> SequentialDetector:
    return SequentialDetector(config)
