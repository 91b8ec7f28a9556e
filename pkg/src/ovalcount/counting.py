# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Lattice points in dilated, translated ovals and the Gaussian-regularized count.

The regularized count replaces the indicator of ``t Omega`` by its convolution
``chi`` with the normalized Gaussian kernel

.. math::

    \\lambda(x; t) = \\frac{t^2}{4\\pi} \\exp(-\\tfrac{t^2}{4} \\lVert x \\rVert^2)

whose Fourier transform is ``exp(-|xi|^2 / t^2)``. ``chi`` is evaluated in
polar coordinates around the origin, where the radial integral has a closed
form, leaving an angular integral for adaptive quadrature.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import typing
from collections.abc import Iterator

import numpy as np
from scipy import integrate, special

from ovalcount import geometry, lattice
from ovalcount.geometry import OvalCurve
from ovalcount.lattice import UnimodularLattice
from ovalcount.log import Timer

log = logging.getLogger(__name__)

DEFAULT_COUNT_CAP = 10**9
TRUNCATION_EPS = 1e-12
QUAD_EPSABS = 1e-8

_CHUNK = 1 << 20


class CountCapExceededError(RuntimeError):
    """Raised when more candidate points than the configured cap would be tested."""


class QuadratureError(RuntimeError):
    """Raised when the angular quadrature of the regularized indicator fails."""


@dataclasses.dataclass
class ErrorSample:
    t: float
    alpha: tuple[float, float]
    count: int
    error: float
    normalized: float
    approximants: dict[str, float] = dataclasses.field(default_factory=dict)
    seed: int | None = None
    index: int | None = None

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"negative lattice point count {self.count}")

    def to_record(self) -> dict[str, typing.Any]:
        return {
            "seed": self.seed,
            "index": self.index,
            "t": self.t,
            "alpha": list(self.alpha),
            "count": self.count,
            "error": self.error,
            "normalized": self.normalized,
            "approximants": dict(self.approximants),
        }


def _index_box(E: np.ndarray, corners: np.ndarray) -> tuple[range, range]:
    k = corners @ np.linalg.inv(E).T
    lo = np.floor(k.min(axis=0)).astype(int)
    hi = np.ceil(k.max(axis=0)).astype(int)
    return range(lo[0], hi[0] + 1), range(lo[1], hi[1] + 1)


def _candidates(
    curve: OvalCurve,
    L: UnimodularLattice,
    scale: float,
    alpha: np.ndarray,
    cap: int,
) -> Iterator[np.ndarray]:
    """Lattice points of the parallelogram cover of ``scale Omega + alpha``,
    relative to ``alpha``, in chunks."""
    # a reduced basis keeps the cover close to the bounding box
    E = lattice.gauss_reduce(L.basis)
    right, up, left, down = curve.h(np.array([0, 0.5, 1, 1.5]) * np.pi)
    xlo, xhi = alpha[0] - scale * left, alpha[0] + scale * right
    ylo, yhi = alpha[1] - scale * down, alpha[1] + scale * up
    corners = np.array([[xlo, ylo], [xlo, yhi], [xhi, ylo], [xhi, yhi]])
    range1, range2 = _index_box(E, corners)

    ncandidates = len(range1) * len(range2)
    if ncandidates > cap:
        raise CountCapExceededError(
            f"{ncandidates:.3e} candidate points exceed the cap {cap:.3e} "
            f"(scale={scale:g})"
        )

    k2 = np.arange(range2.start, range2.stop)
    rows = max(1, _CHUNK // len(k2))
    for start in range(range1.start, range1.stop, rows):
        k1 = np.arange(start, min(start + rows, range1.stop))
        kk1, kk2 = np.meshgrid(k1, k2, indexing="ij")
        k = np.column_stack([kk1.ravel(), kk2.ravel()])
        yield k @ E.T - alpha


def _gauge_interval(
    curve: OvalCurve, rel: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper bounds of the gauge of each point."""
    if curve.is_circle:
        g = np.hypot(rel[:, 0], rel[:, 1]) / curve.c0
        return g, g
    table = geometry.polar_table(curve)
    g = table.gauge_estimate(rel)
    return g * (1 - table.margin), g * (1 + table.margin)


def _count_inside(curve: OvalCurve, rel: np.ndarray, t: float) -> int:
    threshold = t * (1 + geometry.BOUNDARY_TOL)
    lower, upper = _gauge_interval(curve, rel)
    inside = upper <= threshold
    ambiguous = ~inside & (lower <= threshold)
    count = int(inside.sum())
    if ambiguous.any():
        exact = np.asarray(geometry.gauge(curve, rel[ambiguous]))
        count += int((exact <= threshold).sum())
    return count


def count_points(
    curve: OvalCurve,
    L: UnimodularLattice,
    t: float,
    alpha=(0.0, 0.0),
    cap: int = DEFAULT_COUNT_CAP,
) -> int:
    """Number of lattice points in ``t Omega + alpha``."""
    if t <= 0:
        raise ValueError(f"dilation must be positive, got t={t}")
    alpha = np.asarray(alpha, dtype=float)
    return sum(
        _count_inside(curve, rel, t) for rel in _candidates(curve, L, t, alpha, cap)
    )


def error_normalized(
    curve: OvalCurve,
    L: UnimodularLattice,
    t: float,
    alpha=(0.0, 0.0),
    cap: int = DEFAULT_COUNT_CAP,
) -> ErrorSample:
    count = count_points(curve, L, t, alpha, cap)
    error = count - t * t * geometry.area(curve)
    return ErrorSample(
        t=float(t),
        alpha=(float(alpha[0]), float(alpha[1])),
        count=count,
        error=error,
        normalized=error / math.sqrt(t),
    )


def truncation_radius(t: float, eps: float = TRUNCATION_EPS) -> float:
    """Distance from ``t gamma`` beyond which points are counted by their indicator."""
    return 10 / t * math.sqrt(4 * math.pi * math.log(1 / eps))


def _mass_radius(t: float, eps: float) -> float:
    # the kernel puts mass <= eps outside this radius
    return 2 / t * math.sqrt(math.log(1 / eps))


def _radial_integral(
    x: np.ndarray, phi: np.ndarray, R: np.ndarray, b: float
) -> np.ndarray:
    """``int_0^R lambda(x - r e(phi)) r dr`` for a kernel with exponent ``b``."""
    cos, sin = np.cos(phi), np.sin(phi)
    p = x[:, 0] * cos + x[:, 1] * sin
    q2 = np.maximum(x[:, 0] ** 2 + x[:, 1] ** 2 - p * p, 0.0)
    sqrt_b = math.sqrt(b)
    transverse = np.exp(-b * q2)
    ends = (np.exp(-b * p * p) - np.exp(-b * (R - p) ** 2)) / (2 * np.pi)
    middle = 0.5 * p * sqrt_b / math.sqrt(math.pi) * (
        special.erf(sqrt_b * (R - p)) + special.erf(sqrt_b * p)
    )
    return transverse * (ends + middle)


def chi_regularized(
    curve: OvalCurve,
    points,
    t: float,
    eps: float = TRUNCATION_EPS,
    epsabs: float = QUAD_EPSABS,
) -> np.ndarray:
    """Convolution of the indicator of ``t Omega`` with the Gaussian kernel.

    The angular integral is restricted to the directions in which the kernel
    centred at each point has mass above ``eps``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(points) == 0:
        return np.zeros(0)
    b = t * t / 4
    norms = np.hypot(points[:, 0], points[:, 1])
    ratio = np.divide(
        _mass_radius(t, eps), norms, out=np.full(norms.shape, 2.0), where=norms > 0
    )
    center = np.where(ratio < 1, np.arctan2(points[:, 1], points[:, 0]), np.pi)
    half = np.where(ratio < 1, np.arcsin(np.minimum(ratio, 1.0)), np.pi)

    def integrand(s):
        phi = center + half * s
        R = t * np.asarray(geometry.polar_radius(curve, phi))
        return half * _radial_integral(points, phi, R, b)

    values, error, info = integrate.quad_vec(
        integrand, -1.0, 1.0, epsabs=epsabs, epsrel=0.0, norm="max", full_output=True
    )
    if not info.success:
        raise QuadratureError(
            f"regularized indicator quadrature failed for {len(points)} points: "
            f"status={info.status}, error estimate={error:.3e}, "
            f"neval={info.neval} ({info.message})"
        )
    log.debug(f"chi quadrature: {len(points)} points, {info.neval} evaluations")
    return np.clip(values, 0.0, 1.0)


def regularization_bound(curve: OvalCurve, x, t: float) -> float:
    """``exp(-(t^2/4) dist(x, t gamma)^2)``, a bound of ``|chi - indicator|``."""
    d = geometry.boundary_distance(curve, x, t)
    return math.exp(-t * t / 4 * d * d)


def count_regularized(
    curve: OvalCurve,
    L: UnimodularLattice,
    t: float,
    eps: float = TRUNCATION_EPS,
    cap: int = DEFAULT_COUNT_CAP,
) -> float:
    """Sum of the regularized indicator over all lattice points.

    Points farther than :func:`truncation_radius` from ``t gamma`` contribute
    their indicator value; the others are integrated.
    """
    if t <= 0:
        raise ValueError(f"dilation must be positive, got t={t}")
    band = truncation_radius(t, eps)
    h_min, _ = curve.support_bounds
    # |g - t| h_min <= dist(x, t gamma) where g is the gauge of x
    band_gauge = band / h_min
    origin = np.zeros(2)

    inside = 0
    near: list[np.ndarray] = []
    with Timer(log.debug, f"regularized count at t={t:g}"):
        for rel in _candidates(curve, L, t + band_gauge, origin, cap):
            lower, upper = _gauge_interval(curve, rel)
            far_inside = upper < t - band_gauge
            far_outside = lower > t + band_gauge
            inside += int(far_inside.sum())
            near.append(rel[~far_inside & ~far_outside])

        near_points = np.concatenate(near) if near else np.empty((0, 2))
        chi = chi_regularized(curve, near_points, t, eps)
    log.debug(f"{len(near_points)} lattice points within the band of t={t:g}")
    return math.fsum([float(inside), *chi])


def f_poisson(
    curve: OvalCurve,
    L: UnimodularLattice,
    t: float,
    eps: float = TRUNCATION_EPS,
    cap: int = DEFAULT_COUNT_CAP,
) -> float:
    """``(N_reg - Area(t Omega)) / sqrt(t)``."""
    regularized = count_regularized(curve, L, t, eps, cap)
    return (regularized - t * t * geometry.area(curve)) / math.sqrt(t)
