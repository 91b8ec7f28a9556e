# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Empirical distributions and the goodness-of-fit tests of the experiments."""
from __future__ import annotations

import dataclasses
import logging
import typing

import numpy as np
import pandas as pd
from scipy import stats

log = logging.getLogger(__name__)

MIN_EXPECTED_PER_CELL = 5


class EmptyDistributionError(ValueError):
    """Raised when a distribution without samples is constructed or compared."""


class SparseCellsError(ValueError):
    """Raised when a chi-square cell would expect fewer than 5 counts."""


@dataclasses.dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    samples: np.ndarray
    # optional non-negative importance weights, aligned with `samples`
    weights: np.ndarray | None = None
    metadata: dict[str, typing.Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).ravel()
        if samples.size == 0:
            raise EmptyDistributionError("empirical distribution without samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        order = np.argsort(samples, kind="stable")
        object.__setattr__(self, "samples", samples[order])

        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=float).ravel()
            if weights.shape != samples.shape:
                raise ValueError(
                    f"{weights.size} weights given for {samples.size} samples"
                )
            if np.any(weights < 0) or weights.sum() <= 0:
                raise ValueError("weights must be non-negative with a positive sum")
            object.__setattr__(self, "weights", weights[order])

    def __len__(self) -> int:
        return self.samples.size

    @property
    def probabilities(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.samples.size, 1.0 / self.samples.size)
        return self.weights / self.weights.sum()

    def cdf(self, x) -> np.ndarray:
        cumulative = np.concatenate([[0.0], np.cumsum(self.probabilities)])
        return cumulative[np.searchsorted(self.samples, x, side="right")]

    def quantile(self, q):
        if self.weights is None:
            return np.quantile(self.samples, q)
        cumulative = np.cumsum(self.probabilities)
        idx = np.searchsorted(cumulative, np.asarray(q) * cumulative[-1], side="left")
        return self.samples[np.minimum(idx, self.samples.size - 1)]

    def mean(self) -> float:
        return float(np.sum(self.probabilities * self.samples))

    def std_error(self) -> float:
        """Standard error of :meth:`mean`, using the effective sample size for
        weighted distributions."""
        p = self.probabilities
        variance = float(np.sum(p * (self.samples - self.mean()) ** 2))
        effective_n = 1.0 / float(np.sum(p * p))
        return float(np.sqrt(variance / max(effective_n - 1, 1.0)))

    def histogram(self, bins: int = 50, range=None) -> pd.DataFrame:
        counts, edges = np.histogram(
            self.samples, bins=bins, range=range, weights=self.weights
        )
        total = counts.sum()
        return pd.DataFrame(
            {
                "bin_left": edges[:-1],
                "bin_right": edges[1:],
                "count": counts,
                "cum_fraction": np.cumsum(counts) / total if total else 0.0,
            }
        )


def _as_distribution(dist) -> EmpiricalDistribution:
    if isinstance(dist, EmpiricalDistribution):
        return dist
    return EmpiricalDistribution(np.asarray(dist, dtype=float))


def ks_distance(a, b) -> float:
    """Sup-norm distance between two empirical CDFs."""
    a = _as_distribution(a)
    b = _as_distribution(b)
    if a.weights is None and b.weights is None:
        return float(stats.ks_2samp(a.samples, b.samples).statistic)
    # both CDFs are step functions that only jump at sample points
    knots = np.union1d(a.samples, b.samples)
    return float(np.max(np.abs(a.cdf(knots) - b.cdf(knots))))


def chi_square_uniform(samples, bins_per_dim: int = 20) -> float:
    """p-value of Pearson's test of uniformity on ``[0, 1)^d`` for d in {1, 2}."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    ndim = samples.shape[1]
    if ndim not in (1, 2):
        raise ValueError(f"only 1D and 2D uniformity tests are supported, got d={ndim}")
    if np.any(samples < 0) or np.any(samples >= 1):
        raise ValueError("samples must lie in [0, 1)")

    ncells = bins_per_dim**ndim
    expected = len(samples) / ncells
    if expected < MIN_EXPECTED_PER_CELL:
        raise SparseCellsError(
            f"{len(samples)} samples in {ncells} cells gives {expected:.2f} expected "
            f"per cell (need >= {MIN_EXPECTED_PER_CELL})"
        )
    counts, _ = np.histogramdd(samples, bins=bins_per_dim, range=[(0.0, 1.0)] * ndim)
    result = stats.chisquare(counts.ravel())
    log.debug(f"chi-square statistic={result.statistic:.3f}, p={result.pvalue:.3g}")
    return float(result.pvalue)


def empirical_moment(dist, p: float) -> float:
    """``E|X|^p`` under the (weighted) empirical measure."""
    if p <= 0:
        raise ValueError(f"moment order must be positive, got p={p}")
    dist = _as_distribution(dist)
    return float(np.sum(dist.probabilities * np.abs(dist.samples) ** p))


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("the number of trials must be positive")
    ci = stats.binomtest(int(k), int(n)).proportion_ci(
        confidence_level=confidence, method="wilson"
    )
    return float(ci.low), float(ci.high)
