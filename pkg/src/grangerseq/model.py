"""Ground-truth bivariate VAR-K model and its exact second-order statistics.

The generative model is

    u[n] = a_uu^H u_K[n-1] + a_uv^H v_K[n-1] + eta_u[n]
    v[n] = a_vv^H v_K[n-1] + eta_v[n]

with ``u_K[n] = [u[n], ..., u[n-K+1]]`` and unidirectional coupling (v never
depends on u).  Observations are ``x = u + nu_x`` and ``y = v + nu_y`` with
white measurement noise.  Everything here is a pure function of the model and
noise configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from typing import Any, Literal, Mapping

import numpy as np
from scipy import linalg

from .errors import ModelError, NumericalError

Field = Literal["real", "complex"]

_COND_LIMIT = 1e12


def chi2_scale(field: Field) -> float:
    """Factor that makes each whitened real dimension unit-variance under H0.

    Circularly-symmetric complex data with total variance one carry 1/2 per
    real dimension, hence the factor 2.
    """
    return 2.0 if field == "complex" else 1.0


def chi2_dof(K: int, field: Field) -> int:
    """Degrees of freedom of the block statistic: 2K (complex) or K (real)."""
    return 2 * K if field == "complex" else K


def _as_coeffs(values: Any, K: int, name: str, field: Field) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=complex))
    if arr.ndim != 1 or arr.shape[0] != K:
        raise ModelError(f"{name} must have length K={K}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{name} contains non-finite values")
    if field == "real":
        if np.any(arr.imag != 0):
            raise ModelError(f"{name} must be real for a real-field model")
        return arr.real.copy()
    return arr


def spectral_radius(coeffs: np.ndarray) -> float:
    """Spectral radius of the companion matrix of an AR coefficient vector."""
    K = coeffs.shape[0]
    comp = np.zeros((K, K), dtype=complex)
    comp[0, :] = np.conj(coeffs)
    comp[1:, :-1] = np.eye(K - 1)
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


@dataclass(frozen=True, eq=False)
class VarModel:
    """Bivariate AR-K process where v drives u and never the reverse.

    Coefficients follow the conjugated convention ``u[n] = sum_k conj(a_k) u[n-k] + ...``
    so that MMSE weights recover them directly.
    """

    K: int
    a_uu: np.ndarray
    a_uv: np.ndarray
    a_vv: np.ndarray
    sigma2_eta_u: float = 1.0
    sigma2_eta_v: float = 1.0
    field: Field = "complex"

    def __post_init__(self) -> None:
        if int(self.K) != self.K or self.K < 1:
            raise ModelError(f"order K must be a positive integer, got {self.K!r}")
        if self.field not in ("real", "complex"):
            raise ModelError(f"field must be 'real' or 'complex', got {self.field!r}")
        object.__setattr__(self, "K", int(self.K))
        for name in ("a_uu", "a_uv", "a_vv"):
            object.__setattr__(self, name, _as_coeffs(getattr(self, name), self.K, name, self.field))
        for name in ("sigma2_eta_u", "sigma2_eta_v"):
            val = float(getattr(self, name))
            if not np.isfinite(val) or val <= 0:
                raise ModelError(f"{name} must be finite and > 0, got {val}")
            object.__setattr__(self, name, val)
        for name in ("a_uu", "a_vv"):
            rho = spectral_radius(getattr(self, name))
            if rho >= 1.0:
                raise ModelError(f"{name} is unstable: companion spectral radius {rho:.6g} >= 1")

    @classmethod
    def toy(cls, a: float = 0.25, field: Field = "complex") -> "VarModel":
        """VAR-1 example ``u[n] = a v[n-1] + eta_u[n]``, ``v[n] = eta_v[n]``, unit variances."""
        return cls(K=1, a_uu=[0.0], a_uv=[a], a_vv=[0.0], field=field)

    @classmethod
    def from_dict(cls, cfg: Mapping[str, Any]) -> "VarModel":
        try:
            K = int(cfg["K"])
        except KeyError as exc:
            raise ModelError("model configuration requires key 'K'") from exc
        zeros = [0.0] * K
        return cls(
            K=K,
            a_uu=_parse_coeffs(cfg.get("a_uu", zeros)),
            a_uv=_parse_coeffs(cfg.get("a_uv", zeros)),
            a_vv=_parse_coeffs(cfg.get("a_vv", zeros)),
            sigma2_eta_u=float(cfg.get("sigma2_eta_u", 1.0)),
            sigma2_eta_v=float(cfg.get("sigma2_eta_v", 1.0)),
            field=cfg.get("field", "complex"),
        )

    def null(self) -> "VarModel":
        """Same model with the cross coupling removed (the H0 counterpart)."""
        return replace(self, a_uv=np.zeros_like(self.a_uv))

    @property
    def is_coupled(self) -> bool:
        return bool(np.any(self.a_uv != 0))

    def companion(self) -> tuple[np.ndarray, np.ndarray]:
        """State transition F and innovation covariance Q for s[n] = [u_K[n]; v_K[n]]."""
        K = self.K
        F = np.zeros((2 * K, 2 * K), dtype=complex)
        F[0, :K] = np.conj(self.a_uu)
        F[0, K:] = np.conj(self.a_uv)
        F[K, K:] = np.conj(self.a_vv)
        for blk in (0, K):
            F[blk + 1 : blk + K, blk : blk + K - 1] = np.eye(K - 1)
        Q = np.zeros((2 * K, 2 * K), dtype=complex)
        Q[0, 0] = self.sigma2_eta_u
        Q[K, K] = self.sigma2_eta_v
        return F, Q


def _parse_coeffs(values: Any) -> list[complex]:
    out = []
    items = values if isinstance(values, (list, tuple)) else np.atleast_1d(values)
    for v in items:
        if isinstance(v, str):
            out.append(complex(v.replace(" ", "")))
        elif isinstance(v, (list, tuple)) and len(v) == 2:
            out.append(complex(float(v[0]), float(v[1])))
        else:
            out.append(complex(v))
    return out


@dataclass(frozen=True)
class NoiseConfig:
    """Additive white measurement-noise variances for x and y."""

    sigma2_nu_x: float = 0.0
    sigma2_nu_y: float = 0.0

    def __post_init__(self) -> None:
        for name in ("sigma2_nu_x", "sigma2_nu_y"):
            val = float(getattr(self, name))
            if not np.isfinite(val) or val < 0:
                raise ModelError(f"{name} must be finite and >= 0, got {val}")
            object.__setattr__(self, name, val)

    @classmethod
    def from_snr(
        cls,
        model: VarModel,
        snr_x_db: float | None,
        snr_y_db: float | None = None,
    ) -> "NoiseConfig":
        """Noise variances giving per-series SNR (signal/noise power, dB).

        ``snr_y_db`` defaults to ``snr_x_db``; ``None`` for both means noiseless.
        The signal power is the theoretical stationary variance of u or v.
        """
        if snr_y_db is None:
            snr_y_db = snr_x_db
        corr = theoretical_correlations(model, cls(), lag_max=model.K)
        sx = 0.0 if snr_x_db is None else snr_to_noise_variance(corr.r_uu[0].real, snr_x_db)
        sy = 0.0 if snr_y_db is None else snr_to_noise_variance(corr.r_vv[0].real, snr_y_db)
        return cls(sx, sy)

    @classmethod
    def from_dict(cls, cfg: Mapping[str, Any], model: VarModel) -> "NoiseConfig":
        snr_x = cfg.get("snr_x_db")
        snr_y = cfg.get("snr_y_db")
        sx = float(cfg.get("sigma2_nu_x", 0.0))
        sy = float(cfg.get("sigma2_nu_y", 0.0))
        if snr_x is not None and "sigma2_nu_x" in cfg:
            raise ModelError("give either snr_x_db or sigma2_nu_x, not both")
        if snr_y is not None and "sigma2_nu_y" in cfg:
            raise ModelError("give either snr_y_db or sigma2_nu_y, not both")
        if snr_x is not None or snr_y is not None:
            corr = theoretical_correlations(model, cls(), lag_max=model.K)
            if snr_x is not None:
                sx = snr_to_noise_variance(corr.r_uu[0].real, float(snr_x))
            if snr_y is not None:
                sy = snr_to_noise_variance(corr.r_vv[0].real, float(snr_y))
        return cls(sx, sy)


def snr_to_noise_variance(signal_variance: float, snr_db: float) -> float:
    return float(signal_variance) * 10.0 ** (-float(snr_db) / 10.0)


@dataclass(frozen=True, eq=False)
class Correlations:
    """Clean-process correlation sequences for lags 0..lag_max.

    ``r_ab[t] = E[a[n] conj(b[n-t])]``; negative lags follow from
    ``r_ab[-t] = conj(r_ba[t])``.
    """

    r_uu: np.ndarray
    r_uv: np.ndarray
    r_vu: np.ndarray
    r_vv: np.ndarray
    sigma2_nu_x: float
    sigma2_nu_y: float

    @property
    def lag_max(self) -> int:
        return self.r_uu.shape[0] - 1

    def at(self, name: str, tau: int) -> complex:
        """Correlation at any integer lag within +-lag_max."""
        if tau >= 0:
            return complex(getattr(self, name)[tau])
        mirror = {"r_uu": "r_uu", "r_vv": "r_vv", "r_uv": "r_vu", "r_vu": "r_uv"}[name]
        return complex(np.conj(getattr(self, mirror)[-tau]))

    @property
    def r_xx0(self) -> float:
        return float(self.r_uu[0].real) + self.sigma2_nu_x

    @property
    def r_yy0(self) -> float:
        return float(self.r_vv[0].real) + self.sigma2_nu_y


def _state_covariance(model: VarModel) -> np.ndarray:
    F, Q = model.companion()
    try:
        P0 = linalg.solve_discrete_lyapunov(F, Q)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"stationary covariance system is singular: {exc}") from exc
    if not np.all(np.isfinite(P0)):
        raise NumericalError("stationary covariance system returned non-finite values")
    return 0.5 * (P0 + P0.conj().T)


def theoretical_correlations(model: VarModel, noise: NoiseConfig, lag_max: int) -> Correlations:
    """Exact correlation sequences of the model for lags 0..lag_max.

    Lags 0..K-1 come from the stationary state covariance (the joint
    Yule-Walker system); larger lags are extended with the AR recursions.
    """
    K = model.K
    if lag_max < K:
        raise ValueError(f"lag_max must be >= K={K}, got {lag_max}")
    P0 = _state_covariance(model)
    r_uu = np.zeros(lag_max + 1, dtype=complex)
    r_uv = np.zeros_like(r_uu)
    r_vu = np.zeros_like(r_uu)
    r_vv = np.zeros_like(r_uu)
    r_uu[:K] = P0[0, :K]
    r_uv[:K] = P0[0, K:]
    r_vu[:K] = P0[K, :K]
    r_vv[:K] = P0[K, K:]
    cu, cx, cv = np.conj(model.a_uu), np.conj(model.a_uv), np.conj(model.a_vv)
    for tau in range(K, lag_max + 1):
        back = slice(tau - 1, tau - K - 1 if tau - K - 1 >= 0 else None, -1)
        r_uu[tau] = cu @ r_uu[back] + cx @ r_vu[back]
        r_uv[tau] = cu @ r_uv[back] + cx @ r_vv[back]
        r_vu[tau] = cv @ r_vu[back]
        r_vv[tau] = cv @ r_vv[back]
    r_uu[0] = r_uu[0].real
    r_vv[0] = r_vv[0].real
    if model.field == "real":
        r_uu, r_uv, r_vu, r_vv = (r.real.astype(complex) for r in (r_uu, r_uv, r_vu, r_vv))
    return Correlations(r_uu, r_uv, r_vu, r_vv, noise.sigma2_nu_x, noise.sigma2_nu_y)


def joint_covariance(model: VarModel, noise: NoiseConfig) -> tuple[np.ndarray, np.ndarray]:
    """Noise-inclusive regressor covariance R_full and cross vector p.

    R_full = E[z z^H] with z[n] = [x_K[n-1]; y_K[n-1]], and p = E[z x*[n]].
    """
    K = model.K
    corr = theoretical_correlations(model, noise, lag_max=K)
    P0 = _state_covariance(model)
    R = P0.copy()
    R[np.arange(K), np.arange(K)] += noise.sigma2_nu_x
    R[np.arange(K, 2 * K), np.arange(K, 2 * K)] += noise.sigma2_nu_y
    p = np.conj(np.concatenate([corr.r_uu[1 : K + 1], corr.r_uv[1 : K + 1]]))
    if model.field == "real":
        R, p = R.real.astype(complex), p.real.astype(complex)
    return 0.5 * (R + R.conj().T), p


def _hermitian_solve(R: np.ndarray, b: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(R)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise NumericalError(f"covariance matrix is numerically singular (condition number {cond:.3g})")
    return linalg.solve(R, b, assume_a="her")


def mmse_weights(model: VarModel, noise: NoiseConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """MMSE one-step predictor of x from the past of x and y.

    Returns ``(w_x, w_y, sigma2_phi)``.  The prediction-error variance is
    computed from the solved normal equations, ``r_xx[0] - p^H w``.
    """
    K = model.K
    R, p = joint_covariance(model, noise)
    w = _hermitian_solve(R, p)
    r_xx0 = float(np.real(R[0, 0]))
    sigma2_phi = float(np.real(r_xx0 - np.vdot(p, w)))
    if model.field == "real":
        w = w.real
    return w[:K].copy(), w[K:].copy(), sigma2_phi


def reduced_mmse_variance(model: VarModel, noise: NoiseConfig) -> float:
    """Prediction-error variance of x from its own past only."""
    K = model.K
    R, p = joint_covariance(model, noise)
    w = _hermitian_solve(R[:K, :K], p[:K])
    return float(np.real(R[0, 0] - np.vdot(p[:K], w)))


def closed_form_sigma2_phi(model: VarModel, noise: NoiseConfig) -> float:
    """Innovation-plus-noise shortcut ``sigma2_eta_v + sigma2_nu_y``.

    Kept only as a cross-check against the computed value; it coincides with
    ``mmse_weights(...)[2]`` only in special cases (e.g. noiseless with equal
    innovation variances).
    """
    return model.sigma2_eta_v + noise.sigma2_nu_y


def error_covariance(R: np.ndarray, K: int) -> np.ndarray:
    """Lower-right K x K block of R^{-1}, i.e. (R_yy - R_yx R_xx^{-1} R_xy)^{-1}.

    This is the shape of the LS error covariance of the y-coefficients.
    """
    R = np.asarray(R)
    if R.shape != (2 * K, 2 * K):
        raise ValueError(f"expected a {2 * K}x{2 * K} matrix, got {R.shape}")
    Rxx, Rxy = R[:K, :K], R[:K, K:]
    Ryx, Ryy = R[K:, :K], R[K:, K:]
    schur = Ryy - Ryx @ _hermitian_solve(Rxx, Rxy)
    schur = 0.5 * (schur + schur.conj().T)
    Sigma = _hermitian_solve(schur, np.eye(K, dtype=schur.dtype))
    return 0.5 * (Sigma + Sigma.conj().T)


@dataclass(frozen=True, eq=False)
class SecondOrderStats:
    """Exact statistics the detector would use if it knew the model."""

    K: int
    field: Field
    corr: Correlations
    R_full: np.ndarray
    p: np.ndarray
    w_x: np.ndarray
    w_y: np.ndarray
    sigma2_phi: float
    Sigma: np.ndarray
    _c: float = dc_field(init=False, repr=False)

    def __post_init__(self) -> None:
        q = np.real(np.vdot(self.w_y, np.linalg.solve(self.Sigma, self.w_y)))
        object.__setattr__(self, "_c", max(float(q), 0.0) / self.sigma2_phi)

    @property
    def lag_max(self) -> int:
        return self.corr.lag_max

    def kappa(self, N: int) -> float:
        return noncentrality(self, N)


def second_order_stats(model: VarModel, noise: NoiseConfig | None = None, lag_max: int | None = None) -> SecondOrderStats:
    noise = noise or NoiseConfig()
    corr = theoretical_correlations(model, noise, lag_max=max(lag_max or 0, model.K))
    R, p = joint_covariance(model, noise)
    w_x, w_y, s2 = mmse_weights(model, noise)
    Sigma = error_covariance(R, model.K)
    if model.field == "real":
        Sigma = Sigma.real
    return SecondOrderStats(model.K, model.field, corr, R, p, w_x, w_y, s2, Sigma)


def noncentrality(stats: SecondOrderStats, N: int) -> float:
    """``kappa = (N-K)/sigma2_phi * w_y^H Sigma^{-1} w_y``.

    This is the squared norm of the whitened mean; the block statistic, which
    carries the field scale factor, has noncentrality ``chi2_scale * kappa``.
    """
    if N <= stats.K:
        raise ValueError(f"N must exceed K={stats.K}, got {N}")
    return (N - stats.K) * stats._c
