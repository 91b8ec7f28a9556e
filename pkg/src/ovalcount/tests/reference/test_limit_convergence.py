# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""The normalized counting error R(t Omega + alpha, L) / sqrt(t) over
Haar-random lattices converges in law to the limit series.

Both sides are produced by the experiment runner, so this also checks the
plumbing of the ``count``, ``limit`` and ``converge`` subcommands.
"""
import logging

import pytest

from ovalcount import cli, fileio
from ovalcount.cli import ExperimentConfig

log = logging.getLogger(__name__)

N_SAMPLES = 10_000
WORKERS = 4


@pytest.mark.slow
@pytest.mark.parametrize(
    "curve, alpha",
    [
        ("disk", (0.0, 0.0)),
        ("ellipse(2,1)", (0.0, 0.0)),
        ("disk", (0.3, 0.7)),
    ],
)
def test_ks_distance_to_limit_law(tmp_path, curve, alpha):
    cfg = ExperimentConfig(
        command="converge",
        curve=curve,
        t=[50.0, 500.0],
        A=[40.0],
        alpha=alpha,
        n_lattice=N_SAMPLES,
        seed=5,
        workers=WORKERS,
        out=str(tmp_path),
    )
    report = cli.run_converge(cfg)
    log.info(f"{curve}, alpha={alpha}: {report['ks']}")
    assert report["ks"]["500"] < 0.05

    # the stored outputs reproduce the report
    again = cli.run_converge(
        ExperimentConfig(
            **{
                **cfg.echo(),
                "counts": str(tmp_path / "count.jsonl"),
                "limit_file": str(tmp_path / "limit.dist"),
                "out": str(tmp_path / "rerun"),
            }
        )
    )
    assert again["ks"] == report["ks"]
    assert fileio.read_report(tmp_path / "converge.json")["ks"] == report["ks"]


@pytest.mark.slow
def test_ks_distance_decreases_for_disk(tmp_path):
    cfg = ExperimentConfig(
        command="converge",
        t=[50.0, 500.0],
        n_lattice=N_SAMPLES,
        seed=6,
        workers=WORKERS,
        out=str(tmp_path),
    )
    report = cli.run_converge(cfg)
    assert report["ks"]["500"] < report["ks"]["50"]
