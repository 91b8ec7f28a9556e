# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Reading and writing curves, lattices, sample streams and reports.

Floats are always written with ``repr`` (directly or through JSON), which
round-trips them exactly.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import logging
import re
import typing
from collections.abc import Iterable
from pathlib import Path

import numpy as np
import pandas as pd

from ovalcount import geometry
from ovalcount.geometry import OvalCurve
from ovalcount.lattice import UnimodularLattice
from ovalcount.stats import EmpiricalDistribution

log = logging.getLogger(__name__)

_ELLIPSE_RE = re.compile(r"^ellipse\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)$")


def to_builtin(obj):
    """``json.dumps`` hook for numpy values, enums and dataclasses."""
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    if callable(obj):
        return getattr(obj, "__name__", repr(obj))
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def dumps(obj) -> str:
    return json.dumps(obj, default=to_builtin, sort_keys=True)


def curve_to_dict(curve: OvalCurve) -> dict[str, typing.Any]:
    return {
        "preset": curve.preset,
        "coeffs": [repr(c) for c in curve.coeffs],
        "grid_resolution": curve.grid_resolution,
    }


def curve_from_dict(d: dict[str, typing.Any]) -> OvalCurve:
    return OvalCurve.from_coeffs(
        [float(c) for c in d["coeffs"]],
        grid_resolution=int(d.get("grid_resolution", 1024)),
        preset=d.get("preset", "custom"),
    )


def write_curve(path: Path | str, curve: OvalCurve) -> None:
    Path(path).write_text(json.dumps(curve_to_dict(curve), indent=2) + "\n")


def read_curve(path: Path | str) -> OvalCurve:
    return curve_from_dict(json.loads(Path(path).read_text()))


def resolve_curve(spec: str) -> OvalCurve:
    """Curve from a preset name (``disk``, ``ellipse(a,b)``) or a curve file."""
    spec = spec.strip()
    if spec == "disk":
        return geometry.disk()
    match = _ELLIPSE_RE.match(spec)
    if match:
        return geometry.ellipse(float(match.group(1)), float(match.group(2)))
    path = Path(spec)
    if not path.is_file():
        raise FileNotFoundError(f"{spec!r} is neither a curve preset nor a curve file")
    return read_curve(path)


def write_lattice(path: Path | str, L: UnimodularLattice) -> None:
    """Four decimal strings, row-major."""
    Path(path).write_text(" ".join(repr(float(x)) for x in L.basis.ravel()) + "\n")


def read_lattice(path: Path | str) -> UnimodularLattice:
    values = [float(x) for x in Path(path).read_text().split()]
    if len(values) != 4:
        raise ValueError(f"{path}: expected 4 matrix entries, got {len(values)}")
    return UnimodularLattice(np.reshape(values, (2, 2)))


def write_jsonl(path: Path | str, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w") as fh:
        for record in records:
            fh.write(dumps(record) + "\n")
            n += 1
    log.debug(f"wrote {n} records to {path}")
    return n


def read_jsonl(path: Path | str) -> list[dict[str, typing.Any]]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_distribution(path: Path | str, dist: EmpiricalDistribution) -> None:
    """JSON header lines prefixed by ``#`` followed by one sorted value per line.

    Weighted distributions carry the weight as a second column.
    """
    header = {"n": len(dist), "weighted": dist.weights is not None, **dist.metadata}
    with open(path, "w") as fh:
        fh.write("# " + dumps(header) + "\n")
        if dist.weights is None:
            fh.writelines(f"{float(x)!r}\n" for x in dist.samples)
        else:
            fh.writelines(
                f"{float(x)!r} {float(w)!r}\n"
                for x, w in zip(dist.samples, dist.weights)
            )


def read_distribution(path: Path | str) -> EmpiricalDistribution:
    metadata: dict[str, typing.Any] = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                metadata.update(json.loads(line[1:]))
            elif line.strip():
                rows.append([float(x) for x in line.split()])
    weighted = bool(metadata.pop("weighted", False))
    metadata.pop("n", None)
    data = np.array(rows, dtype=float).reshape(len(rows), -1)
    return EmpiricalDistribution(
        data[:, 0], weights=data[:, 1] if weighted else None, metadata=metadata
    )


def write_histogram(
    path: Path | str, dist: EmpiricalDistribution, bins: int = 50
) -> pd.DataFrame:
    table = dist.histogram(bins=bins)
    table.to_csv(path, index=False)
    return table


def write_report(path: Path | str, report: dict[str, typing.Any]) -> None:
    Path(path).write_text(
        json.dumps(report, default=to_builtin, indent=2, sort_keys=True) + "\n"
    )


def read_report(path: Path | str) -> dict[str, typing.Any]:
    return json.loads(Path(path).read_text())
