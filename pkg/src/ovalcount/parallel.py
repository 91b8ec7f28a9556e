# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Seeded Monte Carlo loops that give identical results for any worker count."""
from __future__ import annotations

import functools
import logging
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from typing import Any, TypeVar

import numpy as np

log = logging.getLogger(__name__)

T = TypeVar("T")


def sample_rng(root_seed: int, index: int) -> np.random.Generator:
    """Generator of the ``index``-th sample; independent of scheduling."""
    return np.random.default_rng([root_seed, index])


def _call_seeded(fn: Callable[..., T], root_seed: int, kwargs: dict, index: int) -> T:
    return fn(sample_rng(root_seed, index), index, **kwargs)


def map_seeded(
    fn: Callable[..., T],
    root_seed: int,
    n: int,
    workers: int = 1,
    **kwargs: Any,
) -> list[T]:
    """Evaluate ``fn(rng, index, **kwargs)`` for ``index`` in ``range(n)``.

    ``fn`` must be a module-level function when ``workers > 1``. The results
    are returned in index order.
    """
    task = functools.partial(_call_seeded, fn, root_seed, kwargs)
    if workers <= 1 or n <= 1:
        return [task(i) for i in range(n)]

    chunksize = max(1, n // (8 * workers))
    log.debug(f"running {n} samples on {workers} workers (chunksize={chunksize})")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(task, range(n), chunksize=chunksize))
