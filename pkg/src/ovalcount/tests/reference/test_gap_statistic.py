# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""The prime-direction approximant S_A' captures the normalized counting
error better as the cutoff A and the dilation t grow together."""
import logging

import numpy as np
import pytest

from ovalcount import fourier, geometry, lattice, parallel
from ovalcount.fourier import ApproximantConfig
from ovalcount.geometry import CurvatureWeight

log = logging.getLogger(__name__)

N_LATTICES = 500
THRESHOLD = 0.5


def gap_worker(rng, index, pairs):
    L, _ = lattice.sample_generic(rng)
    curve = geometry.disk()
    return [
        fourier.delta_A_prime(
            curve, L, t, ApproximantConfig(A=A, weight=CurvatureWeight.SQRT_RADIUS)
        )
        for A, t in pairs
    ]


@pytest.mark.slow
def test_gap_tail_decreases():
    pairs = [(5.0, 50.0), (30.0, 500.0)]
    deltas = np.array(parallel.map_seeded(gap_worker, 7, N_LATTICES, pairs=pairs))
    tails = (deltas >= THRESHOLD).mean(axis=0)
    for (A, t), tail, median in zip(pairs, tails, np.median(deltas, axis=0)):
        log.info(f"A={A:g}, t={t:g}: P(delta >= {THRESHOLD}) = {tail:.4f}")
        log.info(f"A={A:g}, t={t:g}: median delta {median:.4f}")
    assert tails[1] < tails[0]
    assert np.median(deltas[:, 1]) < np.median(deltas[:, 0])
