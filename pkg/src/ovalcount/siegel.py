# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Siegel transforms and Monte Carlo checks of the mean-value formulas.

For a compactly supported f on the plane and a Haar-random unimodular lattice:

* the mean of the sum of f over all nonzero lattice vectors is ``int f``,
* the mean of the sum over primitive vectors is ``int f / zeta(2)``,
* ``P(|L|_1 < eps) = 3 eps^2 / pi`` for ``eps`` below ``sqrt(3)/2``: then at
  most one pair ``+-l`` of primitive vectors fits into the ball.
"""
from __future__ import annotations

import dataclasses
import enum
import logging
import math
import typing

import numpy as np
import pandas as pd

from ovalcount import lattice, parallel, stats
from ovalcount.log import Timer

log = logging.getLogger(__name__)

ZETA_2 = math.pi**2 / 6
MIN_SAMPLES = 1000

_CHUNK = 1000
_BALL_CHUNK = 100_000


class TestFunctionError(ValueError):
    """Raised for unsupported test functions."""

    __test__ = False


class TestFunctionKind(enum.Enum):
    __test__ = False

    RADIAL_INDICATOR = "radial-indicator"
    RADIAL_SMOOTH = "radial-smooth"
    ANNULUS = "annulus"


class SiegelMode(enum.Enum):
    ALL_NONZERO = "all-nonzero"
    PRIMITIVE = "primitive"


@dataclasses.dataclass(frozen=True)
class TestFunction:
    """Radial, non-negative test function supported in the ball of ``radius``.

    ``radial-smooth`` equals 1 up to ``radius - width`` and decays to 0 at
    ``radius`` with a cos^2 ramp.
    """

    __test__ = False

    kind: TestFunctionKind
    radius: float
    inner_radius: float = 0.0
    width: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", TestFunctionKind(self.kind))
        except ValueError as exc:
            msg = f"unknown test function kind {self.kind!r}"
            raise TestFunctionError(msg) from exc
        if self.radius <= 0:
            raise TestFunctionError(f"radius must be positive, got {self.radius}")
        if self.scale <= 0:
            raise TestFunctionError(
                f"only positive multiples of a test function are supported, got "
                f"scale={self.scale}"
            )
        if self.kind is TestFunctionKind.ANNULUS and not (
            0 <= self.inner_radius < self.radius
        ):
            raise TestFunctionError(
                f"annulus needs 0 <= inner_radius < radius, got {self.inner_radius}"
            )
        if self.kind is TestFunctionKind.RADIAL_SMOOTH and not (
            0 < self.width <= self.radius
        ):
            raise TestFunctionError(
                f"smoothing width must lie in (0, radius], got {self.width}"
            )

    @classmethod
    def ball(cls, radius: float, scale: float = 1.0) -> TestFunction:
        return cls(TestFunctionKind.RADIAL_INDICATOR, radius, scale=scale)

    def scaled(self, factor: float) -> TestFunction:
        return dataclasses.replace(self, scale=self.scale * factor)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        if self.kind is TestFunctionKind.RADIAL_INDICATOR:
            values = (r <= self.radius).astype(float)
        elif self.kind is TestFunctionKind.ANNULUS:
            values = ((r > self.inner_radius) & (r <= self.radius)).astype(float)
        else:
            start = self.radius - self.width
            ramp = np.cos(0.5 * np.pi * (r - start) / self.width) ** 2
            values = np.where(r <= start, 1.0, np.where(r <= self.radius, ramp, 0.0))
        return self.scale * values

    @property
    def integral(self) -> float:
        """``int f`` over the plane."""
        R = self.radius
        if self.kind is TestFunctionKind.RADIAL_INDICATOR:
            return self.scale * math.pi * R * R
        if self.kind is TestFunctionKind.ANNULUS:
            return self.scale * math.pi * (R * R - self.inner_radius**2)
        a, w = R - self.width, self.width
        ramp = a * w / 2 + w * w / 4 - w * w / math.pi**2
        return self.scale * (math.pi * a * a + 2 * math.pi * ramp)

    @property
    def integral_squared(self) -> float:
        """``int f^2`` over the plane."""
        if self.kind is not TestFunctionKind.RADIAL_SMOOTH:
            return self.scale * self.integral
        a, w = self.radius - self.width, self.width
        ramp = 3 * a * w / 8 + 3 * w * w / 16 - w * w / math.pi**2
        return self.scale**2 * (math.pi * a * a + 2 * math.pi * ramp)


def siegel_transform(
    f: TestFunction,
    L: lattice.UnimodularLattice,
    mode: SiegelMode | str = SiegelMode.ALL_NONZERO,
) -> float:
    """Sum of ``f`` over the nonzero (or primitive) vectors of ``L``."""
    mode = SiegelMode(mode)
    vectors = lattice.lattice_vectors(
        L, f.radius, primitive=mode is SiegelMode.PRIMITIVE
    )
    if not len(vectors):
        return 0.0
    return math.fsum(f(vectors))


def predicted_mean(f: TestFunction, mode: SiegelMode | str) -> float:
    if SiegelMode(mode) is SiegelMode.PRIMITIVE:
        return f.integral / ZETA_2
    return f.integral


@dataclasses.dataclass
class SiegelReport:
    formula: str
    mode: str
    n: int
    predicted: float
    estimate: float
    std_error: float
    z: float
    verdict: bool
    extra: dict[str, typing.Any] = dataclasses.field(default_factory=dict)

    def to_dict(self) -> dict[str, typing.Any]:
        return dataclasses.asdict(self)


def _siegel_chunk(
    rng: np.random.Generator,
    index: int,
    f: TestFunction,
    mode: SiegelMode,
    n_total: int,
) -> np.ndarray:
    size = min(_CHUNK, n_total - index * _CHUNK)
    bases = lattice.sample_haar_batch(rng, size)
    return np.array(
        [siegel_transform(f, lattice.UnimodularLattice(b), mode) for b in bases]
    )


def _siegel_values(
    f: TestFunction, n_samples: int, seed: int, mode: SiegelMode, workers: int
) -> np.ndarray:
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    nchunks = -(-n_samples // _CHUNK)
    with Timer(log.info, f"Siegel transform of {n_samples} Haar lattices"):
        chunks = parallel.map_seeded(
            _siegel_chunk, seed, nchunks, workers=workers, f=f, mode=mode, n_total=n_samples
        )
    return np.concatenate(chunks)


def _z_score(estimate: float, predicted: float, std_error: float) -> float:
    if std_error > 0:
        return (estimate - predicted) / std_error
    if estimate == predicted:
        return 0.0
    return math.copysign(math.inf, estimate - predicted)


def validate_mean(
    f: TestFunction,
    n_samples: int,
    seed: int,
    mode: SiegelMode | str = SiegelMode.PRIMITIVE,
    workers: int = 1,
) -> SiegelReport:
    mode = SiegelMode(mode)
    values = _siegel_values(f, n_samples, seed, mode, workers)
    predicted = predicted_mean(f, mode)
    estimate = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(len(values)))
    z = _z_score(estimate, predicted, std_error)
    log.info(
        f"Siegel mean ({mode.value}): {estimate:.5f} +- {std_error:.5f}, "
        f"predicted {predicted:.5f} (z={z:.2f})"
    )
    return SiegelReport(
        formula="mean-value",
        mode=mode.value,
        n=len(values),
        predicted=predicted,
        estimate=estimate,
        std_error=std_error,
        z=z,
        verdict=abs(z) < 3,
        extra={"seed": seed, "test_function": _describe(f)},
    )


@dataclasses.dataclass
class VarianceReport:
    radius: float
    n: int
    second_moment: float
    std_error: float
    integral: float
    integral_squared: float
    # (E[S^2] - c2 (int f)^2) / int f^2
    implied_constant: float

    def to_dict(self) -> dict[str, typing.Any]:
        return dataclasses.asdict(self)


def validate_variance(
    f: TestFunction, n_samples: int, seed: int, workers: int = 1
) -> VarianceReport:
    """Estimate the constant of the second-moment bound for primitive sums.

    ``E[S(f)^2] <= C int f^2 + zeta(2)^-2 (int f)^2`` for even f. Every
    :class:`TestFunction` kind is radial, hence even; other callables are
    rejected.
    """
    if not isinstance(f, TestFunction):
        raise TestFunctionError(
            f"the second-moment bound needs an even radial TestFunction, got "
            f"{type(f).__name__}"
        )
    values = _siegel_values(f, n_samples, seed, SiegelMode.PRIMITIVE, workers)
    squares = values**2
    second_moment = float(squares.mean())
    c2 = ZETA_2**-2
    implied = (second_moment - c2 * f.integral**2) / f.integral_squared
    return VarianceReport(
        radius=f.radius,
        n=len(values),
        second_moment=second_moment,
        std_error=float(squares.std(ddof=1) / math.sqrt(len(values))),
        integral=f.integral,
        integral_squared=f.integral_squared,
        implied_constant=float(implied),
    )


@dataclasses.dataclass
class VarianceFamily:
    reports: list[VarianceReport]

    @property
    def spread(self) -> float:
        """Ratio of the largest to the smallest implied constant."""
        constants = [r.implied_constant for r in self.reports]
        return max(constants) / min(constants)

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.reports])


def variance_family(
    radii, n_samples: int, seed: int, workers: int = 1
) -> VarianceFamily:
    """Implied second-moment constants for ball indicators of shrinking radius."""
    return VarianceFamily(
        [
            validate_variance(TestFunction.ball(r), n_samples, seed, workers)
            for r in radii
        ]
    )


@dataclasses.dataclass
class SmallBallReport:
    n: int
    table: pd.DataFrame

    @property
    def ratio_spread(self) -> float:
        """Largest relative deviation of ``P / eps^2`` between two radii."""
        ratios = self.table["ratio"].to_numpy()
        return float(ratios.max() / ratios.min() - 1)

    def to_dict(self) -> dict[str, typing.Any]:
        return {
            "n": self.n,
            "ratio_spread": self.ratio_spread,
            "rows": self.table.to_dict(orient="records"),
        }


def _first_minima_chunk(
    rng: np.random.Generator, index: int, n_total: int
) -> np.ndarray:
    size = min(_BALL_CHUNK, n_total - index * _BALL_CHUNK)
    first, _ = lattice.successive_minima(lattice.sample_haar_batch(rng, size))
    return first


def small_ball_probability(
    epsilons,
    n_samples: int,
    seed: int,
    confidence: float = 0.95,
    workers: int = 1,
) -> SmallBallReport:
    """Empirical ``P(|L|_1 < eps)`` with Wilson intervals and ``P / eps^2``."""
    epsilons = [float(e) for e in epsilons]
    if any(not 0 < e < 1 for e in epsilons):
        raise ValueError(f"every eps must lie in (0, 1), got {epsilons}")
    nchunks = -(-n_samples // _BALL_CHUNK)
    with Timer(log.info, f"first minima of {n_samples} Haar lattices"):
        first = np.concatenate(
            parallel.map_seeded(
                _first_minima_chunk, seed, nchunks, workers=workers, n_total=n_samples
            )
        )

    rows = []
    for eps in epsilons:
        hits = int((first < eps).sum())
        low, high = stats.wilson_interval(hits, n_samples, confidence)
        rows.append(
            {
                "eps": eps,
                "hits": hits,
                "probability": hits / n_samples,
                "ci_low": low,
                "ci_high": high,
                "ratio": hits / n_samples / eps**2,
                "predicted": 3 * eps**2 / math.pi,
            }
        )
    return SmallBallReport(n=n_samples, table=pd.DataFrame(rows))


def _describe(f: TestFunction) -> dict[str, typing.Any]:
    d = dataclasses.asdict(f)
    d["kind"] = f.kind.value
    return d
