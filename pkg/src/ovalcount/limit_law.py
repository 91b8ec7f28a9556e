# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""The random series describing the limit law of the normalized counting error.

The basic building block is

.. math::

    \\phi(\\theta) = \\sum_{m \\ge 1} m^{-3/2} \\cos(2 \\pi m \\theta - 3\\pi/4)
                 = \\mathrm{Re}(e^{-3\\pi i/4} \\mathrm{Li}_{3/2}(e^{2\\pi i\\theta}))

which is evaluated either as a truncated sum (``m_max`` terms) or exactly,
through the expansion of the polylogarithm around ``theta = 0``.
"""
from __future__ import annotations

import dataclasses
import functools
import logging
import math
import typing
from collections.abc import Callable

import numpy as np
import pandas as pd
from scipy import special

from ovalcount import geometry, lattice, parallel
from ovalcount.geometry import CurvatureWeight, OvalCurve
from ovalcount.lattice import ReducedBasis
from ovalcount.log import Timer
from ovalcount.stats import EmpiricalDistribution

log = logging.getLogger(__name__)

ZETA_3_2 = float(special.zeta(1.5))
# zeta(1/2) lies outside the domain of scipy.special.zeta
ZETA_1_2 = -1.4603545088095868
PHI_AT_ZERO = -math.sqrt(0.5) * ZETA_3_2

MIN_MOMENT_SAMPLES = 1000
# maximal first minimum of a unimodular lattice, (4/3)^(1/4)
MAX_FIRST_MINIMUM = (4 / 3) ** 0.25

_POLYLOG_TERMS = 64
_M_CHUNK = 2048


class InsufficientDataError(ValueError):
    """Raised when moment diagnostics are requested for too few samples."""


def tail_bound(m_max: int | None) -> float:
    """Upper bound of ``sum_{m > m_max} m^-3/2`` (integral test)."""
    if m_max is None:
        return 0.0
    return 2.0 / math.sqrt(m_max)


def certified_m_max(tolerance: float, rho_max: float) -> int:
    """Smallest ``m_max`` with ``rho_max zeta(3/2) tail_bound(m_max) <= tolerance``."""
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    return max(1, math.ceil((2 * rho_max * ZETA_3_2 / tolerance) ** 2))


@functools.cache
def _polylog_coefficients() -> np.ndarray:
    """Coefficients ``zeta(3/2 - k) / k!`` of the regular part of Li_{3/2}(e^mu)."""
    k = np.arange(_POLYLOG_TERMS, dtype=float)
    s = 1.5 - k
    coeffs = np.empty(_POLYLOG_TERMS)
    coeffs[0] = ZETA_3_2
    coeffs[1] = ZETA_1_2
    # functional equation, zeta(s) = 2^s pi^(s-1) sin(pi s/2) Gamma(1-s) zeta(1-s)
    kk, ss = k[2:], s[2:]
    coeffs[2:] = (
        np.exp(ss * np.log(2 * np.pi) - np.log(np.pi))
        * np.sin(np.pi * ss / 2)
        * special.zeta(kk - 0.5)
        * np.exp(special.gammaln(kk - 0.5) - special.gammaln(kk + 1))
    )
    return coeffs


def _phi_exact(theta: np.ndarray) -> np.ndarray:
    wrapped = theta - np.floor(theta + 0.5)
    mu = 2j * np.pi * wrapped
    singular = -2 * math.sqrt(math.pi) * np.sqrt(-mu)
    regular = np.polynomial.polynomial.polyval(mu, _polylog_coefficients())
    return np.real(np.exp(-0.75j * np.pi) * (singular + regular))


def _phi_truncated(theta: np.ndarray, m_max: int) -> np.ndarray:
    flat = theta.ravel()
    out = np.zeros(flat.shape)
    for start in range(1, m_max + 1, _M_CHUNK):
        m = np.arange(start, min(start + _M_CHUNK, m_max + 1), dtype=float)
        phase = np.mod(np.outer(flat, m), 1.0)
        out += np.cos(2 * np.pi * phase - 0.75 * np.pi) @ m**-1.5
    return out.reshape(theta.shape)


def phi(theta, m_max: int | None = None):
    """``sum_{m=1}^{m_max} m^-3/2 cos(2 pi m theta - 3 pi / 4)``.

    ``m_max=None`` evaluates the full series; otherwise the truncation error is
    at most :func:`tail_bound`.
    """
    theta = np.asarray(theta, dtype=float)
    if m_max is None:
        values = _phi_exact(theta)
    else:
        if m_max < 1:
            raise ValueError(f"m_max must be positive, got {m_max}")
        values = _phi_truncated(theta, int(m_max))
    return float(values) if theta.ndim == 0 else values


def _shift(v, alpha) -> np.ndarray:
    return np.asarray(v, dtype=float) @ np.asarray(alpha, dtype=float)


def phi_alpha(theta, v, alpha, m_max: int | None = None):
    """``phi`` with every harmonic shifted by ``2 pi m <alpha, v>``."""
    theta = np.asarray(theta, dtype=float)
    return phi(np.mod(theta + _shift(v, alpha), 1.0), m_max)


def phi_gamma2(
    curve: OvalCurve,
    theta1,
    theta2,
    v,
    alpha=(0.0, 0.0),
    m_max: int | None = None,
    weight: CurvatureWeight = CurvatureWeight.RADIUS,
):
    """Two-phase series attached to the pair ``v, -v`` of a (translated) curve."""
    v = np.asarray(v, dtype=float)
    shift = _shift(v, alpha)
    plus = geometry.curvature_amplitude(curve, v, weight)
    minus = geometry.curvature_amplitude(curve, -v, weight)
    return plus * phi(np.mod(np.asarray(theta1) + shift, 1.0), m_max) + minus * phi(
        np.mod(np.asarray(theta2) - shift, 1.0), m_max
    )


@dataclasses.dataclass
class LimitConfig:
    A: float = 40.0
    n_theta: int = 1
    n_lattice: int = 10_000
    seed: int = 0
    # None evaluates phi without truncation
    m_max: int | None = None
    condition_min_norm: float | None = None
    weight: CurvatureWeight = CurvatureWeight.RADIUS
    # importance weight sigma(basis) of a lattice; must be picklable for workers > 1
    lattice_weight: Callable[[np.ndarray], float] | None = None
    workers: int = 1

    def __post_init__(self):
        if self.A <= 0:
            raise ValueError(f"A must be positive, got {self.A}")
        if self.n_theta < 1 or self.n_lattice < 1:
            raise ValueError(
                f"n_theta and n_lattice must be positive, got {self.n_theta} and "
                f"{self.n_lattice}"
            )
        if self.m_max is not None and self.m_max < 1:
            raise ValueError(f"m_max must be positive, got {self.m_max}")
        if self.condition_min_norm is not None and not (
            0 < self.condition_min_norm < MAX_FIRST_MINIMUM
        ):
            raise ValueError(
                f"condition_min_norm must lie in (0, {MAX_FIRST_MINIMUM:.4f}), got "
                f"{self.condition_min_norm}"
            )
        self.weight = CurvatureWeight(self.weight)

    @classmethod
    def from_tolerance(
        cls, curve: OvalCurve, tolerance: float, **kwargs
    ) -> LimitConfig:
        _, rho_max = curve.curvature_bounds
        return cls(m_max=certified_m_max(tolerance, rho_max), **kwargs)

    def echo(self) -> dict[str, typing.Any]:
        d = dataclasses.asdict(self)
        d["weight"] = self.weight.value
        if self.lattice_weight is not None:
            d["lattice_weight"] = getattr(
                self.lattice_weight, "__name__", repr(self.lattice_weight)
            )
        return d


def sample_limit_series_batch(
    curve: OvalCurve,
    rb: ReducedBasis,
    alpha,
    cfg: LimitConfig,
    rng: np.random.Generator,
    n: int,
) -> np.ndarray:
    """``n`` draws of the truncated series over ``Pi_A`` of the reduced basis ``rb``.

    Each primitive index gets a fresh uniform phase per draw. For symmetric
    curves both members of the pair ``e, -e`` share that phase; otherwise
    they get independent phases.
    """
    primitive = lattice.enumerate_primitive(rb, cfg.A)
    if not len(primitive):
        return np.zeros(n)

    v = primitive.vectors
    coef = primitive.norms**-1.5 / np.pi
    plus = geometry.curvature_amplitude(curve, v, cfg.weight)
    minus = geometry.curvature_amplitude(curve, -v, cfg.weight)
    shift = _shift(v, alpha)

    theta1 = rng.random((n, len(primitive)))
    theta2 = theta1 if curve.symmetry_flag else rng.random((n, len(primitive)))
    terms = plus * phi(np.mod(theta1 + shift, 1.0), cfg.m_max) + minus * phi(
        np.mod(theta2 - shift, 1.0), cfg.m_max
    )
    return terms @ coef


def sample_limit_series(
    curve: OvalCurve,
    rb: ReducedBasis,
    alpha,
    cfg: LimitConfig,
    rng: np.random.Generator,
) -> float:
    return float(sample_limit_series_batch(curve, rb, alpha, cfg, rng, 1)[0])


def _limit_sample(
    rng: np.random.Generator,
    index: int,
    curve: OvalCurve,
    alpha,
    cfg: LimitConfig,
) -> tuple[np.ndarray, float]:
    L, _ = lattice.sample_generic(rng, cfg.condition_min_norm)
    # the series runs over the dual lattice, which has the same law as L
    rb = lattice.reduce(lattice.dual(L))
    values = sample_limit_series_batch(curve, rb, alpha, cfg, rng, cfg.n_theta)
    weight = 1.0 if cfg.lattice_weight is None else float(cfg.lattice_weight(L.basis))
    return values, weight


def estimate_cdf(curve: OvalCurve, alpha, cfg: LimitConfig) -> EmpiricalDistribution:
    """Monte Carlo distribution of the limit series over Haar lattices."""
    with Timer(log.info, f"limit series: {cfg.n_lattice} lattices x {cfg.n_theta}"):
        results = parallel.map_seeded(
            _limit_sample,
            cfg.seed,
            cfg.n_lattice,
            workers=cfg.workers,
            curve=curve,
            alpha=tuple(float(a) for a in alpha),
            cfg=cfg,
        )
    samples = np.concatenate([values for values, _ in results])
    weights = None
    if cfg.lattice_weight is not None:
        weights = np.repeat([w for _, w in results], cfg.n_theta)
    metadata = {
        "kind": "limit",
        "config": cfg.echo(),
        "curve": {"preset": curve.preset, "coeffs": curve.coeffs},
        "alpha": [float(a) for a in alpha],
        "symmetric": curve.symmetry_flag,
    }
    return EmpiricalDistribution(samples, weights=weights, metadata=metadata)


def _weighted_moment(values, probabilities, p):
    return float(np.sum(probabilities * np.abs(values) ** p) / np.sum(probabilities))


def tail_slope(dist: EmpiricalDistribution, fraction: float = 0.1) -> float:
    """Least-squares slope of ``log P(|S| > x)`` against ``log x`` over the
    largest ``fraction`` of the order statistics."""
    magnitudes = np.abs(dist.samples)
    order = np.argsort(magnitudes)[::-1]
    x = magnitudes[order]
    survival = np.cumsum(dist.probabilities[order])
    ntail = max(10, int(fraction * len(x)))
    x, survival = x[:ntail], survival[:ntail]
    keep = x > 0
    slope, _ = np.polyfit(np.log(x[keep]), np.log(survival[keep]), 1)
    return float(slope)


@dataclasses.dataclass
class MomentReport:
    sizes: list[int]
    # order -> E|S|^p on the nested sub-samples
    estimates: dict[float, list[float]]
    stable: dict[float, bool]
    increasing: dict[float, bool]
    tail_slope: float

    def as_frame(self) -> pd.DataFrame:
        rows = [
            {"order": p, "size": n, "moment": value}
            for p, values in self.estimates.items()
            for n, value in zip(self.sizes, values)
        ]
        return pd.DataFrame(rows)


def moment_diagnostics(
    dist: EmpiricalDistribution,
    orders,
    seed: int = 0,
    rel_spread: float = 0.1,
) -> MomentReport:
    """Moments ``E|S|^p`` on nested sub-samples of sizes n/4, n/2 and n.

    A moment is *stable* when the largest of the three estimates exceeds the
    smallest by at most ``rel_spread``. Nested sub-samples are taken from a
    seeded permutation of the samples.
    """
    n = len(dist)
    if n < MIN_MOMENT_SAMPLES:
        raise InsufficientDataError(
            f"moment diagnostics need at least {MIN_MOMENT_SAMPLES} samples, got {n}"
        )
    orders = [float(p) for p in orders]
    if any(not 0 < p < 3 for p in orders):
        raise ValueError(f"moment orders must lie in (0, 3), got {orders}")

    perm = np.random.default_rng(seed).permutation(n)
    values = dist.samples[perm]
    probabilities = dist.probabilities[perm]
    sizes = [n // 4, n // 2, n]

    estimates, stable, increasing = {}, {}, {}
    for p in orders:
        moments = [
            _weighted_moment(values[:size], probabilities[:size], p) for size in sizes
        ]
        estimates[p] = moments
        stable[p] = max(moments) <= (1 + rel_spread) * min(moments)
        increasing[p] = bool(np.all(np.diff(moments) > 0))
        log.debug(f"E|S|^{p:g} on {sizes}: {moments}")

    return MomentReport(
        sizes=sizes,
        estimates=estimates,
        stable=stable,
        increasing=increasing,
        tail_slope=tail_slope(dist),
    )
