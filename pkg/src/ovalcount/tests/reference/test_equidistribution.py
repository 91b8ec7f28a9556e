# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""For large t the phases theta_k(t, L) of distinct primitive directions are
jointly equidistributed modulo one over Haar-random lattices."""
import logging
from collections import namedtuple

import numpy as np
import pytest

from ovalcount import fourier, geometry, lattice, stats
from ovalcount.lattice import PrimitiveIndex
from ovalcount.log import Timer

log = logging.getLogger(__name__)


@pytest.fixture(scope="module", params=["disk", "custom"])
def system(request):
    if request.param == "disk":
        curve = geometry.disk()
    else:
        curve = geometry.OvalCurve.from_coeffs([1.0, 0.0, 0.0, 0.05, 0.02, 0.02, 0.0])
    t = 1e4
    n_lattices = 10_000
    indices = [PrimitiveIndex(1, 0), PrimitiveIndex(1, 1)]

    rng = np.random.default_rng(99)
    with Timer(log.info, f"phases of {n_lattices} lattices"):
        phases = np.array(
            [
                fourier.theta_many(curve, lattice.sample_generic(rng)[1], indices, t)
                for _ in range(n_lattices)
            ]
        )

    fixture_locals = locals()
    return namedtuple("System", list(fixture_locals.keys()))(**fixture_locals)


@pytest.mark.slow
def test_single_phase_is_uniform(system):
    p_value = stats.chi_square_uniform(system.phases[:, 0, 0], bins_per_dim=20)
    log.info(f"{system.curve.preset}: p = {p_value:.4f}")
    assert p_value > 1e-3


@pytest.mark.slow
def test_phase_pair_is_uniform(system):
    pair = system.phases[:, :, 0]
    p_value = stats.chi_square_uniform(pair, bins_per_dim=5)
    log.info(f"{system.curve.preset}: joint p = {p_value:.4f}")
    assert p_value > 1e-3


@pytest.mark.slow
def test_mirrored_phase_is_uniform(system):
    p_value = stats.chi_square_uniform(system.phases[:, 0, 1], bins_per_dim=20)
    assert p_value > 1e-3
