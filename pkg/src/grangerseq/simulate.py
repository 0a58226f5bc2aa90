"""Seeded sample paths of the VAR-K model and measurement-noise injection."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from .model import Field, NoiseConfig, VarModel, snr_to_noise_variance, theoretical_correlations


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Two aligned sequences: clean (u, v) or observed (x, y)."""

    first: np.ndarray
    second: np.ndarray
    field: Field
    seed: int | None = None
    burn_in: int = 0
    noisy: bool = False

    def __post_init__(self) -> None:
        if self.first.shape != self.second.shape or self.first.ndim != 1:
            raise ValueError("path sequences must be 1-D and of equal length")

    def __len__(self) -> int:
        return self.first.shape[0]

    @property
    def u(self) -> np.ndarray:
        return self.first

    @property
    def v(self) -> np.ndarray:
        return self.second

    @property
    def x(self) -> np.ndarray:
        return self.first

    @property
    def y(self) -> np.ndarray:
        return self.second


def white_noise(rng: np.random.Generator, n: int, variance: float, field: Field) -> np.ndarray:
    """Zero-mean white Gaussian noise; complex draws are circularly symmetric."""
    if field == "complex":
        scale = np.sqrt(variance / 2.0)
        return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return np.sqrt(variance) * rng.standard_normal(n)


def default_burn_in(K: int) -> int:
    return 100 * K


def generate(model: VarModel, n_samples: int, seed: int | np.random.SeedSequence, burn_in: int | None = None) -> SamplePath:
    """Iterate the model from a zero state and drop the first ``burn_in`` samples.

    v is an AR-K filter of its innovations; u is an AR-K filter of its
    innovation plus the lagged v contribution.
    """
    if n_samples <= 0:
        raise ValueError(f"n_samples must be > 0, got {n_samples}")
    burn_in = default_burn_in(model.K) if burn_in is None else int(burn_in)
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    rng = np.random.default_rng(seed)
    total = n_samples + burn_in
    eta_u = white_noise(rng, total, model.sigma2_eta_u, model.field)
    eta_v = white_noise(rng, total, model.sigma2_eta_v, model.field)

    den_u = np.concatenate([[1.0], -np.conj(model.a_uu)])
    den_v = np.concatenate([[1.0], -np.conj(model.a_vv)])
    v = signal.lfilter([1.0], den_v, eta_v)
    drive = eta_u + signal.lfilter(np.concatenate([[0.0], np.conj(model.a_uv)]), [1.0], v)
    u = signal.lfilter([1.0], den_u, drive)
    if model.field == "real":
        u, v = u.real, v.real
    seed_tag = seed if isinstance(seed, (int, np.integer)) else None
    return SamplePath(u[burn_in:].copy(), v[burn_in:].copy(), model.field, seed_tag, burn_in)


def corrupt(path: SamplePath, noise: NoiseConfig, seed: int | np.random.SeedSequence) -> SamplePath:
    """Add independent white noise: ``x = u + nu_x``, ``y = v + nu_y``."""
    rng = np.random.default_rng(seed)
    n = len(path)
    nu_x = white_noise(rng, n, noise.sigma2_nu_x, path.field)
    nu_y = white_noise(rng, n, noise.sigma2_nu_y, path.field)
    x = path.first if noise.sigma2_nu_x == 0.0 else path.first + nu_x
    y = path.second if noise.sigma2_nu_y == 0.0 else path.second + nu_y
    return replace(path, first=x, second=y, noisy=True)


def noise_for_snr(model: VarModel, snr_x_db: float | None, snr_y_db: float | None = None) -> NoiseConfig:
    """Noise variances realising a per-series SNR, using theoretical signal powers."""
    return NoiseConfig.from_snr(model, snr_x_db, snr_y_db)


def corrupt_snr(path: SamplePath, model: VarModel, snr_db: float, seed: int | np.random.SeedSequence) -> SamplePath:
    return corrupt(path, noise_for_snr(model, snr_db), seed)


def signal_variances(model: VarModel) -> tuple[float, float]:
    corr = theoretical_correlations(model, NoiseConfig(), lag_max=model.K)
    return float(corr.r_uu[0].real), float(corr.r_vv[0].real)


__all__ = [
    "SamplePath",
    "corrupt",
    "corrupt_snr",
    "default_burn_in",
    "generate",
    "noise_for_snr",
    "signal_variances",
    "snr_to_noise_variance",
    "white_noise",
]
