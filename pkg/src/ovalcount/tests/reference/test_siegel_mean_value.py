# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Monte Carlo checks of the Siegel mean value formula, the second moment
bound of primitive sums and the small-ball law of the first minimum over
Haar-random unimodular lattices."""
import logging
import math

import pytest

from ovalcount import siegel
from ovalcount.siegel import SiegelMode, TestFunction, TestFunctionKind

log = logging.getLogger(__name__)

N_SAMPLES = 100_000
WORKERS = 4


@pytest.mark.slow
@pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
def test_primitive_mean(radius):
    f = TestFunction.ball(radius)
    report = siegel.validate_mean(f, N_SAMPLES, seed=1, workers=WORKERS)
    log.info(f"R={radius}: {report}")
    assert report.predicted == pytest.approx(6 / math.pi * radius**2)
    assert abs(report.z) < 3
    assert report.verdict


@pytest.mark.slow
@pytest.mark.parametrize(
    "f",
    [
        TestFunction.ball(1.0),
        TestFunction(TestFunctionKind.RADIAL_SMOOTH, 1.5, width=0.5),
        TestFunction(TestFunctionKind.ANNULUS, 1.5, inner_radius=0.5),
    ],
)
def test_all_nonzero_mean(f):
    report = siegel.validate_mean(
        f, N_SAMPLES, seed=2, mode=SiegelMode.ALL_NONZERO, workers=WORKERS
    )
    log.info(f"{f.kind.value}: {report}")
    assert report.predicted == pytest.approx(f.integral)
    assert abs(report.z) < 3


@pytest.mark.slow
def test_variance_constant_is_bounded():
    family = siegel.variance_family([0.1, 0.2, 0.4], N_SAMPLES, seed=3, workers=WORKERS)
    for report in family.reports:
        log.info(f"R={report.radius}: C={report.implied_constant:.4f}")
    assert family.spread <= 4


@pytest.mark.slow
def test_small_ball_scaling():
    report = siegel.small_ball_probability(
        [0.05, 0.1, 0.2], 1_000_000, seed=4, confidence=0.999, workers=WORKERS
    )
    log.info(f"\n{report.table}")
    assert report.ratio_spread < 0.15
    table = report.table
    assert all(table["ci_low"] <= table["predicted"])
    assert all(table["predicted"] <= table["ci_high"])
