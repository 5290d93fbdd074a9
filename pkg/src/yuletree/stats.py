"""Goodness-of-fit tests and intervals used by the experiments.

Thin wrappers over ``scipy.stats`` that return a uniform :class:`StatReport`
carrying the seed and sample size, so a failing check can be replayed.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

P_THRESHOLD = 1e-3
THREE_SIGMA = 0.9973002039367398


class StatError(ValueError):
    """Inputs unsuitable for the requested test."""


@dataclass
class StatReport:
    name: str
    statistic: float
    p_value: Optional[float] = None
    ci: Optional[tuple] = None
    threshold: float = P_THRESHOLD
    passed: Optional[bool] = None
    n: int = 0
    seed: Optional[int] = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.p_value is not None:
            if not 0.0 <= self.p_value <= 1.0:
                raise ValueError(f"p-value {self.p_value} outside [0, 1]")
            if self.passed is None:
                self.passed = self.p_value > self.threshold

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        bits = [f"{status} {self.name}", f"stat={self.statistic:.6g}"]
        if self.p_value is not None:
            bits.append(f"p={self.p_value:.4g}")
        if self.ci is not None:
            bits.append(f"ci=[{self.ci[0]:.6g}, {self.ci[1]:.6g}]")
        bits.append(f"n={self.n}")
        if self.seed is not None:
            bits.append(f"seed={self.seed}")
        bits.extend(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in self.details.items())
        return " ".join(bits)


def ks_two_sample(a, b, name="ks2", seed=None, threshold=P_THRESHOLD):
    """Two-sided two-sample KS test with the asymptotic Kolmogorov p-value."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if len(a) < 100 or len(b) < 100:
        raise StatError("KS test needs at least 100 values per sample")
    res = stats.ks_2samp(a, b, method="asymp")
    return StatReport(name, float(res.statistic), float(min(1.0, res.pvalue)),
                      threshold=threshold, n=len(a) + len(b), seed=seed)


def ks_one_sample(a, cdf, name="ks1", seed=None, threshold=P_THRESHOLD):
    a = np.asarray(a, float)
    if len(a) < 100:
        raise StatError("KS test needs at least 100 values")
    res = stats.kstest(a, cdf, method="asymp")
    return StatReport(name, float(res.statistic), float(min(1.0, res.pvalue)),
                      threshold=threshold, n=len(a), seed=seed)


def pooled_bins(pmf, k_max, n, min_expected=5.0):
    """Largest ``K <= k_max`` such that bins ``1..K-1`` and the pooled tail
    ``>= K`` all expect at least ``min_expected`` counts."""
    ks = np.arange(1, k_max + 1)
    e = n * np.asarray(pmf(ks), float)
    for K in range(k_max, 1, -1):
        tail = n - e[:K - 1].sum()
        if e[:K - 1].min() >= min_expected and tail >= min_expected:
            return K
    return 1


def chi_square_counts(values, pmf, k_max=None, name="chi2", seed=None,
                      threshold=P_THRESHOLD, min_expected=5.0):
    """Chi-square test of positive integer ``values`` against ``pmf`` on
    ``{1, 2, ...}``, with the tail pooled so every bin expects ``min_expected``."""
    values = np.asarray(values, np.int64)
    n = len(values)
    if n == 0 or values.min() < 1:
        raise StatError("need a non-empty sample of positive integers")
    k_max = int(values.max()) + 1 if k_max is None else int(k_max)
    K = pooled_bins(pmf, k_max, n, min_expected)
    if K < 2:
        raise StatError("sample too small for a chi-square test")
    ks = np.arange(1, K)
    expected = n * np.asarray(pmf(ks), float)
    expected = np.append(expected, n - expected.sum())
    observed = np.append(np.bincount(values, minlength=K)[1:K], (values >= K).sum())
    res = stats.chisquare(observed, expected)
    return StatReport(name, float(res.statistic), float(res.pvalue), threshold=threshold,
                      n=n, seed=seed, details={"bins": K})


def wilson_interval(successes, n, confidence=THREE_SIGMA):
    if n < 1:
        raise StatError("need n >= 1")
    ci = stats.binomtest(int(successes), int(n)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def binomial_se(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def within_binomial(successes, n, target, name="binomial", seed=None, confidence=THREE_SIGMA):
    """Whether ``target`` lies in the Wilson interval of ``successes / n``."""
    lo, hi = wilson_interval(successes, n, confidence)
    return StatReport(name, successes / n, ci=(lo, hi), passed=lo <= target <= hi,
                      n=n, seed=seed, details={"target": float(target)})


def mean_within(sample, target, rel_tol, name="mean"):
    sample = np.asarray(sample, float)
    m = float(sample.mean())
    se = float(sample.std(ddof=1) / math.sqrt(len(sample)))
    return StatReport(name, m, passed=abs(m - target) <= rel_tol * abs(target), n=len(sample),
                      details={"target": float(target), "se": se, "rel_err": abs(m - target) / abs(target)})
