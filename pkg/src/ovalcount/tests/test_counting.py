# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Unit tests of the counting.py module."""
import logging
import math

import numpy as np
import pytest
from scipy import special

from ovalcount import counting, geometry, lattice
from ovalcount.counting import CountCapExceededError, ErrorSample
from ovalcount.geometry import OvalCurve
from ovalcount.lattice import UnimodularLattice

log = logging.getLogger(__name__)


@pytest.fixture
def custom():
    return OvalCurve.from_coeffs([1.0, 0.0, 0.0, 0.05, 0.02, 0.02, 0.0])


def brute_force_count(curve, L, t, alpha):
    _, h_max = curve.support_bounds
    R = t * h_max + math.hypot(*alpha) + 1
    points = np.vstack([np.zeros((1, 2)), lattice.lattice_vectors(L, R)])
    return int(np.sum(geometry.contains(curve, points, t, alpha)))


@pytest.mark.parametrize(
    "t, expected",
    [(1.0, 5), (2.0, 13), (5.0, 81), (10.0, 317)],
)
def test_count_standard_disk(t, expected):
    # the boundary belongs to the disk: 3^2 + 4^2 = 5^2, 6^2 + 8^2 = 10^2
    L = UnimodularLattice.standard()
    assert counting.count_points(geometry.disk(), L, t) == expected


def test_error_normalized_standard_disk():
    L = UnimodularLattice.standard()
    sample = counting.error_normalized(geometry.disk(), L, 2.0)
    assert sample.count == 13
    assert sample.error == pytest.approx(13 - 4 * math.pi, rel=1e-14)
    assert sample.normalized == pytest.approx(0.3066, abs=1e-4)
    assert sample.alpha == (0.0, 0.0)


def test_count_translated():
    L = UnimodularLattice.standard()
    assert counting.count_points(geometry.disk(), L, 1.0, alpha=(0.5, 0.5)) == 4


@pytest.mark.parametrize("alpha", [(0.0, 0.0), (0.37, -1.21)])
def test_count_matches_brute_force(custom, alpha):
    rng = np.random.default_rng(21)
    for _ in range(5):
        L, _ = lattice.sample_generic(rng, min_norm=0.5)
        for t in (3.7, 12.3):
            assert counting.count_points(custom, L, t, alpha) == brute_force_count(
                custom, L, t, alpha
            )


def test_count_ellipse_matches_brute_force():
    ell = geometry.ellipse(2, 1)
    L = lattice.sample_haar(np.random.default_rng(8))
    assert counting.count_points(ell, L, 9.1) == brute_force_count(
        ell, L, 9.1, (0.0, 0.0)
    )


def test_count_is_basis_independent(custom):
    rng = np.random.default_rng(3)
    L = lattice.sample_haar(rng)
    other = UnimodularLattice(L.basis @ lattice.random_sl2z(rng, steps=3))
    assert counting.count_points(custom, L, 15.0, (0.2, 0.1)) == counting.count_points(
        custom, other, 15.0, (0.2, 0.1)
    )


def test_count_cap():
    L = UnimodularLattice.standard()
    with pytest.raises(CountCapExceededError):
        counting.count_points(geometry.disk(), L, 5.0, cap=10)
    with pytest.raises(ValueError):
        counting.count_points(geometry.disk(), L, 0.0)


def test_error_sample():
    sample = ErrorSample(t=2.0, alpha=(0.0, 0.5), count=3, error=0.1, normalized=0.07)
    record = sample.to_record()
    assert record["alpha"] == [0.0, 0.5]
    assert set(record) == {
        "seed",
        "index",
        "t",
        "alpha",
        "count",
        "error",
        "normalized",
        "approximants",
    }
    with pytest.raises(ValueError):
        ErrorSample(t=1.0, alpha=(0.0, 0.0), count=-1, error=0.0, normalized=0.0)


def test_chi_regularized_limits():
    disk = geometry.disk()
    t = 10.0
    points = np.array([[0.0, 0.0], [3.0, 4.0], [30.0, 0.0], [0.0, -12.0]])
    chi = counting.chi_regularized(disk, points, t)
    np.testing.assert_allclose(chi, [1.0, 1.0, 0.0, 0.0], atol=1e-6)

    # the kernel is symmetric, so a straight boundary would split it in half
    boundary = counting.chi_regularized(disk, [[t, 0.0]], t)[0]
    assert boundary == pytest.approx(0.5, abs=0.05)
    assert counting.chi_regularized(disk, np.empty((0, 2)), t).shape == (0,)


@pytest.mark.parametrize("distance", [0.2, 0.5, 1.0])
def test_regularization_bound(custom, distance):
    t = 10.0
    # walk inwards along the normal of the boundary point with normal (1, 0)
    x = t * geometry.support_point(custom, [1.0, 0.0]) - np.array([distance, 0.0])
    bound = counting.regularization_bound(custom, x, t)
    assert bound <= math.exp(-t * t / 4 * distance * distance) * (1 + 1e-6)
    chi = counting.chi_regularized(custom, x, t)[0]
    assert abs(chi - 1.0) <= bound + 1e-7


def test_count_regularized_poisson_oracle():
    # N_reg = sum over the dual lattice of the Fourier transform of the disk
    # indicator damped by the kernel transform exp(-4 pi^2 |l|^2 / t^2)
    t = 5.0
    k = np.arange(-8, 9)
    l1, l2 = np.meshgrid(k, k)
    norms = np.hypot(l1, l2).ravel()
    norms = norms[norms > 0]
    terms = t * special.j1(2 * np.pi * t * norms) / norms
    terms *= np.exp(-4 * np.pi**2 * norms**2 / t**2)
    expected = math.pi * t * t + math.fsum(terms)

    L = UnimodularLattice.standard()
    assert counting.count_regularized(geometry.disk(), L, t) == pytest.approx(
        expected, abs=1e-4
    )
    assert counting.f_poisson(geometry.disk(), L, t) == pytest.approx(
        (expected - math.pi * t * t) / math.sqrt(t), abs=1e-4
    )


def test_truncation_radius():
    assert counting.truncation_radius(10.0) == pytest.approx(
        math.sqrt(4 * math.pi * math.log(1e12)), rel=1e-14
    )
    assert counting.truncation_radius(20.0) == pytest.approx(
        counting.truncation_radius(10.0) / 2
    )
