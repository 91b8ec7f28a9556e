# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""The regularized count approaches the exact count.

The gap ``|R(t Omega, L) / sqrt(t) - F(t, L)|`` between the normalized
counting error and its Gaussian-regularized version decays at least like
``t^(-1/4)``.
"""
import logging
import math
from collections import namedtuple

import numpy as np
import pytest

from ovalcount import counting, geometry, lattice
from ovalcount.log import Timer

log = logging.getLogger(__name__)

T_VALUES = [50.0, 100.0, 200.0, 400.0]


@pytest.fixture
def system():
    curve = geometry.disk()
    rng = np.random.default_rng(2023)
    # typical lattices, bounded away from the cusp
    lattices = [lattice.sample_generic(rng, min_norm=0.6)[0] for _ in range(8)]

    fixture_locals = locals()
    return namedtuple("System", list(fixture_locals.keys()))(**fixture_locals)


def regularization_gap(curve, L, t):
    exact = counting.error_normalized(curve, L, t).normalized
    return abs(exact - counting.f_poisson(curve, L, t))


@pytest.mark.slow
def test_regularization_decay(system):
    gaps = []
    for t in T_VALUES:
        with Timer(log.info, f"regularization gap at t={t:g}"):
            values = [regularization_gap(system.curve, L, t) for L in system.lattices]
        log.info(f"t={t:g}: mean gap {np.mean(values):.4e} ({values})")
        gaps.append(np.mean(values))

    slope, _ = np.polyfit(np.log(T_VALUES), np.log(gaps), 1)
    log.info(f"log-log slope of the regularization gap: {slope:.3f}")
    assert slope <= -0.2


def test_regularized_count_within_pointwise_bounds(system):
    # every lattice point changes the count by at most its regularization bound
    t = 20.0
    L = system.lattices[0]
    exact = counting.count_points(system.curve, L, t)
    regularized = counting.count_regularized(system.curve, L, t)

    band = counting.truncation_radius(t)
    points = lattice.lattice_vectors(L, t + band + 1)
    bounds = [counting.regularization_bound(system.curve, x, t) for x in points]
    total = math.fsum(bounds) + 1e-6
    log.info(f"N={exact}, N_reg={regularized:.6f}, sum of bounds={total:.4f}")
    assert abs(regularized - exact) <= total
