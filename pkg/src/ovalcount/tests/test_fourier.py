# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Unit tests of the fourier.py module."""
import math

import numpy as np
import pytest

from ovalcount import counting, fourier, geometry, lattice, limit_law
from ovalcount.fourier import ApproximantConfig
from ovalcount.geometry import CurvatureWeight, OvalCurve
from ovalcount.lattice import PrimitiveIndex, UnimodularLattice


@pytest.fixture
def custom():
    return OvalCurve.from_coeffs([1.0, 0.0, 0.0, 0.05, 0.02, 0.02, 0.0])


@pytest.fixture
def haar():
    L, _ = lattice.sample_generic(np.random.default_rng(17), min_norm=0.6)
    return L


def test_approximant_config():
    with pytest.raises(ValueError):
        ApproximantConfig(A=-1.0)
    with pytest.raises(ValueError):
        ApproximantConfig(A=1.0, m_max=0)

    ell = geometry.ellipse(2, 1)
    cfg = ApproximantConfig.from_tolerance(
        ell, 10.0, 1e-2, weight=CurvatureWeight.SQRT_RADIUS
    )
    # max curvature radius of the ellipse is a^2 / b = 4
    assert fourier.amplitude_max(ell, CurvatureWeight.SQRT_RADIUS) == pytest.approx(
        2.0, rel=1e-6
    )
    assert cfg.m_max == limit_law.certified_m_max(
        1e-2, fourier.amplitude_max(ell, CurvatureWeight.SQRT_RADIUS)
    )
    assert cfg.tolerance == 1e-2


def test_nu_disk():
    l = np.array([[3.0, 4.0], [1.0, 0.0]])
    t = 1.37
    expected = np.cos(2 * np.pi * t * np.array([5.0, 1.0]) - 0.75 * np.pi)
    np.testing.assert_allclose(fourier.nu(geometry.disk(), l, t), expected, atol=1e-12)
    assert isinstance(fourier.nu(geometry.disk(), l[0], t), float)


def test_first_shell_standard_disk():
    # only (+-1, 0) and (0, +-1) lie below A; the single harmonic m = 1 is kept
    L = UnimodularLattice.standard()
    disk = geometry.disk()
    t = 2.3
    expected = 4 / np.pi * math.cos(2 * np.pi * t - 0.75 * np.pi)
    cfg = ApproximantConfig(A=1.2, m_max=1)
    assert fourier.h_A(disk, L, t, cfg) == pytest.approx(expected, abs=1e-12)
    assert fourier.h_A(disk, L, t, cfg, use_symmetry=False) == pytest.approx(
        expected, abs=1e-12
    )
    assert fourier.s_A_prime(disk, L, t, (0.0, 0.0), cfg) == pytest.approx(
        expected, abs=1e-12
    )


def test_h_A_symmetry_shortcut(haar):
    ell = geometry.ellipse(2, 1)
    cfg = ApproximantConfig(A=12.0)
    assert fourier.h_A(ell, haar, 7.3, cfg) == pytest.approx(
        fourier.h_A(ell, haar, 7.3, cfg, use_symmetry=False), abs=1e-9
    )


def test_h_A_below_first_minimum(haar):
    assert fourier.h_A(geometry.disk(), haar, 3.0, ApproximantConfig(A=0.1)) == 0.0
    assert (
        fourier.s_A_prime(geometry.disk(), haar, 3.0, (0, 0), ApproximantConfig(A=0.1))
        == 0.0
    )


@pytest.mark.parametrize("alpha", [(0.0, 0.0), (0.31, 0.77)])
def test_s_A_prime_truncation(custom, haar, alpha):
    exact = fourier.s_A_prime(custom, haar, 20.0, alpha, ApproximantConfig(A=8.0))
    for m_max in (50, 2000):
        cfg = ApproximantConfig(A=8.0, m_max=m_max)
        truncated = fourier.s_A_prime(custom, haar, 20.0, alpha, cfg)
        assert abs(truncated - exact) <= fourier.truncation_bound(custom, haar, cfg)
    assert fourier.truncation_bound(custom, haar, ApproximantConfig(A=8.0)) == 0.0


def test_s_A_prime_translation_is_periodic(custom, haar):
    cfg = ApproximantConfig(A=6.0)
    alpha = np.array([0.3, -0.2])
    shifted = alpha + haar.points([2, -1])
    assert fourier.s_A_prime(custom, haar, 9.0, alpha, cfg) == pytest.approx(
        fourier.s_A_prime(custom, haar, 9.0, shifted, cfg), abs=1e-9
    )


def test_multiplicity_gap_first_shell():
    # no multiple of a primitive vector lies below A and only m = 1 is kept
    L = UnimodularLattice.standard()
    cfg = ApproximantConfig(A=1.2, m_max=1)
    assert fourier.multiplicity_gap(geometry.disk(), L, 2.3, cfg) == pytest.approx(
        0.0, abs=1e-12
    )


def test_delta_A(custom, haar):
    cfg = ApproximantConfig(A=5.0)
    t = 11.0
    sample = counting.error_normalized(custom, haar, t, (0.1, 0.2))
    approximant = fourier.s_A_prime(custom, haar, t, (0.1, 0.2), cfg)
    expected = abs(sample.normalized - approximant)
    assert fourier.delta_A_prime(custom, haar, t, cfg, (0.1, 0.2)) == pytest.approx(
        expected, rel=1e-14
    )
    plain = counting.error_normalized(custom, haar, t)
    assert fourier.delta_A(custom, haar, t, cfg) == pytest.approx(
        abs(plain.normalized - fourier.h_A(custom, haar, t, cfg)), rel=1e-14
    )


def test_theta(custom, haar):
    rb = lattice.reduce(haar)
    indices = [PrimitiveIndex(1, 0), PrimitiveIndex(1, 1), PrimitiveIndex(2, -3)]
    phases = fourier.theta_many(custom, rb, indices, 31.5)
    assert phases.shape == (3, 2)
    assert np.all((phases >= 0) & (phases < 1))
    for k, (plus, minus) in zip(indices, phases):
        assert fourier.theta_k(custom, rb, k, 31.5) == pytest.approx(plus, abs=1e-12)
        assert fourier.theta_k(custom, rb, k, 31.5, mirrored=True) == pytest.approx(
            minus, abs=1e-12
        )


def test_w_k_disk(haar):
    rb = lattice.reduce(haar)
    v = 2 * rb.e1 + rb.e2
    expected = (v[0] ** 2 - v[1] ** 2) / math.hypot(*v)
    assert fourier.w_k(geometry.disk(), rb, (2, 1)) == pytest.approx(expected)


@pytest.mark.parametrize("k", [(1, 0), (1, 1), (2, -1)])
def test_w_k_is_the_geodesic_derivative(custom, k):
    # orthogonal basis with norms 1/1.3 and 1.3: reduction is stable for |h| <= 0.01
    c, s = math.cos(0.4), math.sin(0.4)
    rotation = np.array([[c, -s], [s, c]])
    L = UnimodularLattice(rotation @ np.diag([1.3, 1 / 1.3]))
    rb = lattice.reduce(L)
    assert rb.generic
    v = k[0] * rb.e1 + k[1] * rb.e2
    w = fourier.w_k(custom, rb, k)

    hs = np.array([1e-2, 1e-3, 1e-4])
    residuals = []
    for h in hs:
        flowed = lattice.reduce(lattice.geodesic_apply(L, 1 + h))
        v_h = k[0] * flowed.e1 + k[1] * flowed.e2
        residuals.append(
            abs(geometry.y_gamma(custom, v_h) - geometry.y_gamma(custom, v) - h * w)
        )
    slope, _ = np.polyfit(np.log(hs), np.log(residuals), 1)
    assert 1.8 <= slope <= 2.2
