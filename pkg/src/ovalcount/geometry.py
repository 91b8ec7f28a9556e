# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Strictly convex analytic ovals stored through their support function.

The support function is a trigonometric polynomial

.. math::

    h(\\theta) = c_0 + \\sum_{n=1}^{N} a_n \\cos n\\theta + b_n \\sin n\\theta

so that h, h' and h'' are exact. All convex-geometry quantities follow from it:

* ``Y(xi) = |xi| h(arg xi)`` (homogeneous support function),
* ``x(xi) = h u + h' u_perp`` (boundary point with outer normal ``u``),
* ``rho(xi) = h + h''`` (curvature radius at ``x(xi)``),
* ``Gamma(phi)`` (polar radius), obtained by inverting ``theta -> arg x(theta)``.

The curve is anchored at the origin, which must be an interior point.
Translations are never baked into a curve; callers subtract them.
"""
from __future__ import annotations

import dataclasses
import enum
import functools
import logging
import math
from collections.abc import Callable

import numpy as np
from scipy import optimize

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
BOUNDARY_TOL = 1e-12
UNIMODULAR_TOL = 1e-12
FIT_TOL = 1e-10

# number of angles evaluated at once by the trigonometric series
_CHUNK = 1 << 14
_POLAR_MAX_ITER = 100


class DegenerateVectorError(ValueError):
    """Raised when a direction-dependent quantity is evaluated at 0."""


class InvalidCurveError(ValueError):
    """Raised when coefficients do not describe a strictly convex oval around 0."""


class NonUnimodularError(ValueError):
    """Raised when a transformation matrix does not have determinant 1."""


class CurvatureWeight(enum.Enum):
    """Amplitude attached to a direction in the Fourier-side series.

    ``RADIUS`` uses the curvature radius itself, as written in the limit
    series. ``SQRT_RADIUS`` uses its square root, which is the amplitude of the
    stationary-phase expansion of the Fourier transform of the indicator.
    Both coincide on curves of constant curvature radius 1.
    """

    RADIUS = "radius"
    SQRT_RADIUS = "sqrt-radius"


def trig_series(c0: float, a, b, theta, deriv: int = 0) -> np.ndarray:
    """Evaluate the ``deriv``-th derivative of ``c0 + sum a_n cos + b_n sin``."""
    theta = np.asarray(theta, dtype=float)
    flat = theta.ravel()
    out = np.full(flat.shape, c0 if deriv == 0 else 0.0)
    if len(a) == 0:
        return out.reshape(theta.shape)

    n = np.arange(1, len(a) + 1, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # d^k/dtheta^k (a cos + b sin) cycles with period 4 in k
    cos_coef, sin_coef = [(a, b), (b, -a), (-a, -b), (-b, a)][deriv % 4]
    scale = n**deriv
    cos_coef = cos_coef * scale
    sin_coef = sin_coef * scale

    for start in range(0, flat.size, _CHUNK):
        angles = np.outer(flat[start : start + _CHUNK], n)
        out[start : start + _CHUNK] += (
            np.cos(angles) @ cos_coef + np.sin(angles) @ sin_coef
        )
    return out.reshape(theta.shape)


@dataclasses.dataclass(frozen=True)
class OvalCurve:
    c0: float
    a: tuple[float, ...] = ()
    b: tuple[float, ...] = ()
    # size of the angle grid used by the validity checks
    grid_resolution: int = 1024
    preset: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if len(self.a) != len(self.b):
            raise InvalidCurveError(
                f"cos and sin coefficient lengths differ ({len(self.a)} != "
                f"{len(self.b)})"
            )
        if self.grid_resolution < 8:
            raise InvalidCurveError(
                f"grid_resolution must be at least 8, got {self.grid_resolution}"
            )
        if not all(math.isfinite(x) for x in (self.c0, *self.a, *self.b)):
            raise InvalidCurveError("support coefficients must be finite")

        theta = self.grid
        h = self.h(theta)
        if h.min() <= 0:
            raise InvalidCurveError(
                f"the origin is not interior: min h = {h.min():.3e} at "
                f"theta = {theta[h.argmin()]:.6f}"
            )
        rho = h + self.h(theta, deriv=2)
        if rho.min() <= 0:
            raise InvalidCurveError(
                f"curve is not strictly convex: min(h + h'') = {rho.min():.3e} at "
                f"theta = {theta[rho.argmin()]:.6f}"
            )

    @classmethod
    def from_coeffs(
        cls, coeffs, grid_resolution: int = 1024, preset: str = "custom"
    ) -> OvalCurve:
        """Create a curve from the flat list ``[c0, a1, b1, a2, b2, ...]``."""
        coeffs = [float(c) for c in coeffs]
        if not coeffs or len(coeffs) % 2 != 1:
            raise InvalidCurveError(
                f"expected [c0, a1, b1, ...] with an odd length, got {len(coeffs)}"
            )
        return cls(
            c0=coeffs[0],
            a=tuple(coeffs[1::2]),
            b=tuple(coeffs[2::2]),
            grid_resolution=grid_resolution,
            preset=preset,
        )

    @property
    def coeffs(self) -> list[float]:
        flat = [self.c0]
        for an, bn in zip(self.a, self.b):
            flat.extend((an, bn))
        return flat

    @property
    def order(self) -> int:
        return len(self.a)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 2 * np.pi, self.grid_resolution, endpoint=False)

    def h(self, theta, deriv: int = 0) -> np.ndarray:
        """Evaluate the ``deriv``-th derivative of the support function."""
        return trig_series(self.c0, self.a, self.b, theta, deriv)

    @functools.cached_property
    def symmetry_flag(self) -> bool:
        theta = self.grid
        return bool(np.abs(self.h(theta + np.pi) - self.h(theta)).max() < SYMMETRY_TOL)

    @functools.cached_property
    def is_circle(self) -> bool:
        return not any(self.a) and not any(self.b)

    @functools.cached_property
    def curvature_bounds(self) -> tuple[float, float]:
        theta = self.grid
        rho = self.h(theta) + self.h(theta, deriv=2)
        return float(rho.min()), float(rho.max())

    @functools.cached_property
    def support_bounds(self) -> tuple[float, float]:
        h = self.h(self.grid)
        return float(h.min()), float(h.max())


def disk(radius: float = 1.0, grid_resolution: int = 1024) -> OvalCurve:
    return OvalCurve(c0=radius, grid_resolution=grid_resolution, preset="disk")


def ellipse(
    a: float, b: float, grid_resolution: int = 1024, tol: float = FIT_TOL
) -> OvalCurve:
    """Axis-parallel ellipse with semi-axes ``a`` (x) and ``b`` (y), fitted to
    the Fourier basis with a residual below ``tol``."""
    if a <= 0 or b <= 0:
        raise InvalidCurveError(f"semi-axes must be positive, got a={a}, b={b}")

    def support(theta):
        return np.sqrt((a * np.cos(theta)) ** 2 + (b * np.sin(theta)) ** 2)

    curve = fit_support_function(
        support,
        grid_resolution=grid_resolution,
        tol=tol,
        preset=f"ellipse({a:g},{b:g})",
    )
    log.debug(f"ellipse({a:g},{b:g}) fitted with {curve.order} harmonics")
    return curve


def fit_support_function(
    func: Callable[[np.ndarray], np.ndarray],
    grid_resolution: int = 1024,
    tol: float = FIT_TOL,
    preset: str = "custom",
    max_samples: int = 1 << 16,
) -> OvalCurve:
    """Fit a 2pi-periodic support function by a trigonometric polynomial.

    The number of samples is doubled until the residual on the staggered grid
    is below ``tol`` and all harmonics above ``nsamples / 8`` are at round-off
    level.
    """
    nsamples = 64
    while nsamples <= max_samples:
        theta = 2 * np.pi * np.arange(nsamples) / nsamples
        values = np.asarray(func(theta), dtype=float)
        spectrum = np.fft.rfft(values) / nsamples

        c0 = spectrum[0].real
        # the Nyquist harmonic can't be split into cos and sin parts
        a = 2 * spectrum[1 : nsamples // 2].real
        b = -2 * spectrum[1 : nsamples // 2].imag
        magnitudes = np.hypot(a, b)
        scale = max(abs(c0), 1.0)

        significant = np.nonzero(magnitudes > 1e-15 * scale)[0]
        order = int(significant[-1]) + 1 if significant.size else 0
        resolved = magnitudes[nsamples // 8 :].max(initial=0.0) < 1e-13 * scale

        trial = functools.partial(trig_series, c0, a[:order], b[:order])
        staggered = theta + np.pi / nsamples
        residual = np.abs(np.asarray(func(staggered)) - trial(staggered)).max()
        if resolved and residual < tol:
            return OvalCurve(
                c0=c0,
                a=tuple(a[:order]),
                b=tuple(b[:order]),
                grid_resolution=grid_resolution,
                preset=preset,
            )
        nsamples *= 2

    raise InvalidCurveError(
        f"support function fit did not reach tol={tol:g} with {max_samples} samples"
    )


def _as_vectors(xi) -> tuple[np.ndarray, np.ndarray, bool]:
    """Return (angles, norms, is_scalar) of an array of planar vectors."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 2:
        raise ValueError(f"expected vectors with 2 coordinates, got shape {xi.shape}")
    norms = np.hypot(xi[..., 0], xi[..., 1])
    if np.any(norms == 0):
        raise DegenerateVectorError("direction of the zero vector is undefined")
    angles = np.arctan2(xi[..., 1], xi[..., 0])
    return angles, norms, xi.ndim == 1


def _out(values: np.ndarray, is_scalar: bool):
    return float(values) if is_scalar else values


def support_value(curve: OvalCurve, theta):
    theta = np.asarray(theta, dtype=float)
    return _out(curve.h(theta), theta.ndim == 0)


def y_gamma(curve: OvalCurve, xi):
    """Homogeneous support function ``Y(xi) = |xi| h(arg xi)``."""
    angles, norms, is_scalar = _as_vectors(xi)
    return _out(norms * curve.h(angles), is_scalar)


def support_point(curve: OvalCurve, xi) -> np.ndarray:
    """Boundary point whose outer normal is ``xi / |xi|``."""
    angles, _, _ = _as_vectors(xi)
    return _boundary_at(curve, angles)


def _boundary_at(curve: OvalCurve, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    h = curve.h(theta)
    h1 = curve.h(theta, deriv=1)
    cos, sin = np.cos(theta), np.sin(theta)
    return np.stack([h * cos - h1 * sin, h * sin + h1 * cos], axis=-1)


def boundary_points(curve: OvalCurve, n: int) -> np.ndarray:
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return _boundary_at(curve, theta)


def curvature_radius(curve: OvalCurve, xi):
    """Curvature radius ``h + h''`` of the curve at ``support_point(xi)``."""
    angles, _, is_scalar = _as_vectors(xi)
    return _out(curve.h(angles) + curve.h(angles, deriv=2), is_scalar)


def curvature_amplitude(
    curve: OvalCurve, xi, weight: CurvatureWeight = CurvatureWeight.RADIUS
):
    rho = curvature_radius(curve, xi)
    if weight is CurvatureWeight.SQRT_RADIUS:
        return np.sqrt(rho) if isinstance(rho, np.ndarray) else math.sqrt(rho)
    return rho


def _boundary_parameter(curve: OvalCurve, phi: np.ndarray) -> np.ndarray:
    """Solve ``arg x(theta) = phi`` for theta.

    ``theta + arctan(h'/h)`` is strictly increasing and differs from theta by
    less than pi/2, so the root is bracketed by ``phi -+ pi/2``. Newton steps
    that leave the bracket are replaced by bisection.
    """
    if curve.is_circle:
        return phi.copy()

    lo = phi - np.pi / 2
    hi = phi + np.pi / 2
    theta = phi.copy()
    tol = 1e-15 * np.maximum(1.0, np.abs(phi))
    for _ in range(_POLAR_MAX_ITER):
        h = curve.h(theta)
        h1 = curve.h(theta, deriv=1)
        h2 = curve.h(theta, deriv=2)
        residual = theta + np.arctan(h1 / h) - phi
        too_large = residual > 0
        hi = np.where(too_large, theta, hi)
        lo = np.where(too_large, lo, theta)

        slope = h * (h + h2) / (h * h + h1 * h1)
        candidate = theta - residual / slope
        bisect = (candidate <= lo) | (candidate >= hi) | ~np.isfinite(candidate)
        candidate = np.where(bisect, 0.5 * (lo + hi), candidate)

        converged = np.abs(candidate - theta) <= tol
        theta = candidate
        if converged.all():
            break
    else:
        log.debug("polar radius inversion hit the iteration limit")
    return theta


def polar_radius(curve: OvalCurve, phi):
    """Distance from the origin to the curve along the direction ``phi``."""
    phi = np.asarray(phi, dtype=float)
    if curve.is_circle:
        return _out(np.full(phi.shape, curve.c0), phi.ndim == 0)
    theta = _boundary_parameter(curve, phi.ravel())
    gamma = np.hypot(curve.h(theta), curve.h(theta, deriv=1))
    return _out(gamma.reshape(phi.shape), phi.ndim == 0)


def gauge(curve: OvalCurve, x):
    """``r(x) = |x| / Gamma(arg x)``: the smallest t with ``x`` in ``t Omega``."""
    x = np.asarray(x, dtype=float)
    norms = np.hypot(x[..., 0], x[..., 1])
    angles = np.arctan2(x[..., 1], x[..., 0])
    gamma = np.asarray(polar_radius(curve, angles))
    values = np.where(norms > 0, norms / gamma, 0.0)
    return _out(values, x.ndim == 1)


def contains(curve: OvalCurve, point, t: float, alpha=(0.0, 0.0)):
    """Membership of ``point`` in ``t Omega + alpha``; the boundary is inside."""
    if t <= 0:
        raise ValueError(f"dilation must be positive, got t={t}")
    point = np.asarray(point, dtype=float)
    relative = point - np.asarray(alpha, dtype=float)
    inside = np.asarray(gauge(curve, relative)) <= t * (1 + BOUNDARY_TOL)
    return bool(inside) if point.ndim == 1 else inside


def area(curve: OvalCurve) -> float:
    """``(1/2) int (h^2 - h'^2) dtheta`` computed from the coefficients."""
    n = np.arange(1, curve.order + 1, dtype=float)
    power = np.asarray(curve.a) ** 2 + np.asarray(curve.b) ** 2
    return float(np.pi * curve.c0**2 + 0.5 * np.pi * np.sum((1 - n**2) * power))


def transform(curve: OvalCurve, D) -> OvalCurve:
    """Image ``D gamma`` of the curve under ``D`` in SL2(R).

    The support function of the image is ``xi -> Y(D^T xi)``; it is re-fitted
    on the unit circle.
    """
    D = np.asarray(D, dtype=float)
    if D.shape != (2, 2):
        raise NonUnimodularError(f"expected a 2x2 matrix, got shape {D.shape}")
    det = float(np.linalg.det(D))
    if abs(det - 1) >= UNIMODULAR_TOL:
        raise NonUnimodularError(f"det(D) = {det!r} is not 1")

    def support(theta):
        directions = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return y_gamma(curve, directions @ D)

    return fit_support_function(support, grid_resolution=curve.grid_resolution)


def boundary_distance(curve: OvalCurve, x, t: float) -> float:
    """Euclidean distance from ``x`` to the dilated curve ``t gamma``."""
    x = np.asarray(x, dtype=float)
    theta = curve.grid
    d2 = np.sum((t * _boundary_at(curve, theta) - x) ** 2, axis=-1)
    best = int(d2.argmin())
    step = 2 * np.pi / curve.grid_resolution

    def objective(th):
        return float(np.sum((t * _boundary_at(curve, th) - x) ** 2))

    res = optimize.minimize_scalar(
        objective,
        bounds=(theta[best] - step, theta[best] + step),
        method="bounded",
        options={"xatol": 1e-13},
    )
    return math.sqrt(min(res.fun, d2[best]))


@dataclasses.dataclass(frozen=True)
class PolarTable:
    """Tabulated polar radius with a certified relative interpolation error.

    Used to classify large point clouds; points whose gauge is within
    ``margin`` of a threshold must be rechecked with :func:`gauge`.
    """

    phi: np.ndarray
    gamma: np.ndarray
    margin: float

    def gauge_estimate(self, x: np.ndarray) -> np.ndarray:
        norms = np.hypot(x[..., 0], x[..., 1])
        angles = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * np.pi)
        return norms / np.interp(angles, self.phi, self.gamma)


@functools.lru_cache(maxsize=32)
def polar_table(curve: OvalCurve, size: int = 8192) -> PolarTable:
    phi = np.linspace(0.0, 2 * np.pi, size + 1)
    gamma = np.asarray(polar_radius(curve, phi))
    if curve.is_circle:
        return PolarTable(phi=phi, gamma=gamma, margin=0.0)

    midpoints = 0.5 * (phi[1:] + phi[:-1])
    exact = np.asarray(polar_radius(curve, midpoints))
    interpolated = np.interp(midpoints, phi, gamma)
    worst = float(np.max(np.abs(interpolated - exact) / exact))
    return PolarTable(phi=phi, gamma=gamma, margin=8 * worst + 1e-13)
