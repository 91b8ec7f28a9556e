# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Fourier-side approximants of the normalized counting error.

All sums run over the dual lattice. The ``m``-series attached to a direction
``l`` collapses into a single evaluation of :func:`ovalcount.limit_law.phi`,
since ``sum_m m^-3/2 cos(2 pi m s - 3 pi/4) = phi(frac(s))``.
"""
from __future__ import annotations

import dataclasses
import logging
import math

import numpy as np

from ovalcount import counting, geometry, lattice, limit_law
from ovalcount.geometry import CurvatureWeight, OvalCurve
from ovalcount.lattice import PrimitiveIndex, ReducedBasis, UnimodularLattice

log = logging.getLogger(__name__)


@dataclasses.dataclass
class ApproximantConfig:
    A: float
    # None sums the m-series exactly
    m_max: int | None = None
    tolerance: float | None = None
    weight: CurvatureWeight = CurvatureWeight.RADIUS

    def __post_init__(self):
        if self.A <= 0:
            raise ValueError(f"A must be positive, got {self.A}")
        if self.m_max is not None and self.m_max < 1:
            raise ValueError(f"m_max must be positive, got {self.m_max}")
        self.weight = CurvatureWeight(self.weight)

    @classmethod
    def from_tolerance(
        cls,
        curve: OvalCurve,
        A: float,
        tolerance: float,
        weight: CurvatureWeight = CurvatureWeight.RADIUS,
    ) -> ApproximantConfig:
        """Choose ``m_max`` so that ``amp_max * zeta(3/2) * tail <= tolerance``."""
        m_max = limit_law.certified_m_max(tolerance, amplitude_max(curve, weight))
        return cls(A=A, m_max=m_max, tolerance=tolerance, weight=weight)


def amplitude_max(curve: OvalCurve, weight: CurvatureWeight) -> float:
    _, rho_max = curve.curvature_bounds
    return math.sqrt(rho_max) if weight is CurvatureWeight.SQRT_RADIUS else rho_max


def _frac(x):
    return np.mod(x, 1.0)


def nu(curve: OvalCurve, l, t: float, weight: CurvatureWeight = CurvatureWeight.RADIUS):
    """``amp(l) cos(2 pi t Y(l) - 3 pi / 4)``."""
    amp = geometry.curvature_amplitude(curve, l, weight)
    phase = _frac(t * np.asarray(geometry.y_gamma(curve, l)))
    value = amp * np.cos(2 * np.pi * phase - 0.75 * np.pi)
    return float(value) if np.ndim(value) == 0 else value


def h_A(
    curve: OvalCurve,
    L: UnimodularLattice,
    t: float,
    cfg: ApproximantConfig,
    use_symmetry: bool | None = None,
) -> float:
    """``(1/2pi) sum_{0 < |l| <= A} |l|^-3/2 (nu(l) + nu(-l))`` over the dual lattice.

    For symmetric curves ``nu(-l) = nu(l)`` and the sum is evaluated as
    ``(1/pi) sum |l|^-3/2 nu(l)``; ``use_symmetry`` overrides that choice.
    """
    if use_symmetry is None:
        use_symmetry = curve.symmetry_flag
    vectors = lattice.lattice_vectors(lattice.dual(L), cfg.A)
    if not len(vectors):
        return 0.0
    coef = np.hypot(vectors[:, 0], vectors[:, 1]) ** -1.5
    if use_symmetry:
        terms = coef * nu(curve, vectors, t, cfg.weight) / np.pi
    else:
        terms = (
            coef
            * (nu(curve, vectors, t, cfg.weight) + nu(curve, -vectors, t, cfg.weight))
            / (2 * np.pi)
        )
    return math.fsum(terms)


def _prime_dual(L: UnimodularLattice, A: float) -> lattice.PrimitiveVectors:
    return lattice.enumerate_primitive(lattice.reduce(lattice.dual(L)), A)


def s_A_prime(
    curve: OvalCurve,
    L: UnimodularLattice,
    t: float,
    alpha,
    cfg: ApproximantConfig,
) -> float:
    """Sum over primitive dual vectors ``l`` with ``|l| <= A`` of

    ``(1/pi) |l|^-3/2 [amp(l) phi(tY(l) + <a,l>) + amp(-l) phi(tY(-l) - <a,l>)]``

    where only one representative of each pair ``l, -l`` is enumerated.
    """
    primitive = _prime_dual(L, cfg.A)
    if not len(primitive):
        return 0.0
    v = primitive.vectors
    shift = v @ np.asarray(alpha, dtype=float)
    plus = geometry.curvature_amplitude(curve, v, cfg.weight)
    minus = geometry.curvature_amplitude(curve, -v, cfg.weight)
    phase_plus = _frac(t * np.asarray(geometry.y_gamma(curve, v)) + shift)
    phase_minus = _frac(t * np.asarray(geometry.y_gamma(curve, -v)) - shift)
    terms = plus * limit_law.phi(phase_plus, cfg.m_max) + minus * limit_law.phi(
        phase_minus, cfg.m_max
    )
    return math.fsum(primitive.norms**-1.5 * terms / np.pi)


def truncation_bound(
    curve: OvalCurve, L: UnimodularLattice, cfg: ApproximantConfig
) -> float:
    """Certified bound of the ``m``-truncation error of :func:`s_A_prime`."""
    if cfg.m_max is None:
        return 0.0
    primitive = _prime_dual(L, cfg.A)
    weight_sum = math.fsum(primitive.norms**-1.5) if len(primitive) else 0.0
    return (
        2 / np.pi * amplitude_max(curve, cfg.weight) * weight_sum
        * limit_law.tail_bound(cfg.m_max)
    )


def delta_A_prime(
    curve: OvalCurve,
    L: UnimodularLattice,
    t: float,
    cfg: ApproximantConfig,
    alpha=(0.0, 0.0),
    cap: int = counting.DEFAULT_COUNT_CAP,
) -> float:
    """``|R(t Omega + alpha, L) / sqrt(t) - S_A,prime|``."""
    sample = counting.error_normalized(curve, L, t, alpha, cap)
    return abs(sample.normalized - s_A_prime(curve, L, t, alpha, cfg))


def delta_A(
    curve: OvalCurve,
    L: UnimodularLattice,
    t: float,
    cfg: ApproximantConfig,
    cap: int = counting.DEFAULT_COUNT_CAP,
) -> float:
    """``|R(t Omega, L) / sqrt(t) - H_A|``."""
    sample = counting.error_normalized(curve, L, t, cap=cap)
    return abs(sample.normalized - h_A(curve, L, t, cfg))


def multiplicity_gap(
    curve: OvalCurve, L: UnimodularLattice, t: float, cfg: ApproximantConfig
) -> float:
    """``|S_A,prime - H_A|``: the error made by summing every multiple of a
    primitive vector instead of cutting all vectors at ``A``."""
    return abs(s_A_prime(curve, L, t, (0.0, 0.0), cfg) - h_A(curve, L, t, cfg))


def _vector(rb: ReducedBasis, k) -> np.ndarray:
    k1, k2 = k
    return k1 * rb.e1 + k2 * rb.e2


def theta_k(
    curve: OvalCurve,
    rb: ReducedBasis,
    k: PrimitiveIndex,
    t: float,
    mirrored: bool = False,
) -> float:
    """``t Y(k1 e1 + k2 e2) mod 1``, or the phase of ``-v`` when ``mirrored``."""
    v = _vector(rb, k)
    if mirrored:
        v = -v
    return float(_frac(t * geometry.y_gamma(curve, v)))


def theta_many(curve: OvalCurve, rb: ReducedBasis, indices, t: float) -> np.ndarray:
    """Phases ``(theta_k, theta_-k)`` for a stack of indices, shape (n, 2)."""
    k = np.atleast_2d(np.asarray(indices, dtype=float))
    v = k @ rb.matrix.T
    plus = _frac(t * np.asarray(geometry.y_gamma(curve, v)))
    minus = _frac(t * np.asarray(geometry.y_gamma(curve, -v)))
    return np.column_stack([plus, minus])


def w_k(curve: OvalCurve, rb: ReducedBasis, k) -> float:
    """Derivative of ``h -> Y(delta(1 + h) v)`` at ``h = 0`` for ``v = k1 e1 + k2 e2``.

    Uses ``grad Y = x_gamma``, so that ``W_k = <s(v), x_gamma(v)>`` with the
    reflection ``s(x, y) = (x, -y)``.
    """
    v = _vector(rb, k)
    reflected = np.array([v[0], -v[1]])
    return float(reflected @ geometry.support_point(curve, v))
