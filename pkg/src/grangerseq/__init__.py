"""Granger causality detection for noisy bivariate time series.

Block test on N samples (``blockdetect``) and an RLS-driven sequential test
(``seqdetect``), with exact model statistics (``model``), simulation
(``simulate``), Marcum-Q tail probabilities (``stats``) and Monte Carlo
experiment drivers (``harness``).
"""

__version__ = "0.1.0"

from .blockdetect import BlockEstimate, block_test, estimate, gci, test_statistic
from .model import NoiseConfig, SecondOrderStats, VarModel, mmse_weights, noncentrality, second_order_stats
from .seqdetect import Decision, RlsEstimator, SeqConfig, SequentialDetector, Verdict, thresholds
from .simulate import SamplePath, corrupt, generate
from .stats import marcum_q, noncentral_chi2_sf, predicted_pd, threshold_for_pfa

__all__ = [
    "BlockEstimate",
    "Decision",
    "NoiseConfig",
    "RlsEstimator",
    "SamplePath",
    "SecondOrderStats",
    "SeqConfig",
    "SequentialDetector",
    "VarModel",
    "Verdict",
    "block_test",
    "corrupt",
    "estimate",
    "gci",
    "generate",
    "marcum_q",
    "mmse_weights",
    "noncentral_chi2_sf",
    "noncentrality",
    "predicted_pd",
    "second_order_stats",
    "test_statistic",
    "threshold_for_pfa",
    "thresholds",
]
