# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Experiment runner.

Every subcommand writes machine-readable results into ``--out``; each output
file embeds the full experiment configuration. Sample ``i`` always uses the
generator seeded with ``(seed, i)``, so outputs do not depend on ``--workers``.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
import typing
from pathlib import Path

import numpy as np
import pandas as pd

from ovalcount import counting, fileio, fourier, lattice, limit_law, parallel, siegel
from ovalcount.counting import CountCapExceededError, ErrorSample
from ovalcount.geometry import CurvatureWeight, InvalidCurveError, OvalCurve
from ovalcount.lattice import NonUnimodularLatticeError, UnimodularLattice
from ovalcount.log import Timer, setuplogging
from ovalcount.stats import (
    EmpiricalDistribution,
    SparseCellsError,
    chi_square_uniform,
    ks_distance,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3

EQUIDIST_INDICES = [(1, 0), (1, 1)]


class ConfigError(ValueError):
    """Raised for inconsistent or invalid experiment settings."""


@dataclasses.dataclass
class ExperimentConfig:
    command: str
    curve: str = "disk"
    t: list[float] = dataclasses.field(default_factory=lambda: [100.0])
    A: list[float] = dataclasses.field(default_factory=lambda: [40.0])
    # None evaluates the m-series exactly
    tolerance: float | None = None
    alpha: tuple[float, float] = (0.0, 0.0)
    n_lattice: int = 1000
    n_theta: int = 1
    seed: int = 0
    condition_min_norm: float | None = None
    workers: int = 1
    out: str = "results"
    fixed_lattice: str | None = None
    weight: str = CurvatureWeight.SQRT_RADIUS.value
    count_cap: int = counting.DEFAULT_COUNT_CAP
    approximants: bool = False
    counts: str | None = None
    limit_file: str | None = None
    orders: list[float] = dataclasses.field(default_factory=lambda: [1.2, 2.0])
    thresholds: list[float] = dataclasses.field(
        default_factory=lambda: [0.1, 0.25, 0.5, 1.0]
    )
    radii: list[float] = dataclasses.field(default_factory=lambda: [0.5, 1.0, 2.0])
    variance_radii: list[float] = dataclasses.field(
        default_factory=lambda: [0.1, 0.2, 0.4]
    )
    epsilons: list[float] = dataclasses.field(default_factory=lambda: [0.05, 0.1, 0.2])
    n_small_ball: int | None = None
    bins: int = 20
    bins_2d: int = 5

    def __post_init__(self):
        self.alpha = tuple(float(a) for a in self.alpha)
        if len(self.alpha) != 2:
            raise ConfigError(f"alpha needs two coordinates, got {self.alpha}")
        if self.n_lattice < 0 or self.n_theta < 1:
            raise ConfigError("--n-lattice must be >= 0 and --n-theta >= 1")
        if self.workers < 1:
            raise ConfigError(f"--workers must be positive, got {self.workers}")
        if not self.t or any(t <= 0 for t in self.t):
            raise ConfigError(f"--t must list positive values: {self.t}")
        if any(b <= a for a, b in zip(self.t, self.t[1:])) and self.command != "gap":
            raise ConfigError(f"--t must be ascending: {self.t}")
        if not self.A or any(A <= 0 for A in self.A):
            raise ConfigError(f"--A must list positive values: {self.A}")
        if self.tolerance is not None and self.tolerance <= 0:
            raise ConfigError(f"--tolerance must be positive, got {self.tolerance}")
        if self.condition_min_norm is not None and not (
            0 < self.condition_min_norm < limit_law.MAX_FIRST_MINIMUM
        ):
            raise ConfigError(
                f"--condition-min-norm must lie in (0, "
                f"{limit_law.MAX_FIRST_MINIMUM:.4f}), got {self.condition_min_norm}"
            )
        try:
            CurvatureWeight(self.weight)
        except ValueError as exc:
            raise ConfigError(f"unknown curvature weight {self.weight!r}") from exc
        if self.count_cap < 1:
            raise ConfigError(f"--count-cap must be positive, got {self.count_cap}")

    @property
    def curvature_weight(self) -> CurvatureWeight:
        return CurvatureWeight(self.weight)

    def echo(self) -> dict[str, typing.Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_echo(cls, d: dict[str, typing.Any]) -> ExperimentConfig:
        fields = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in fields})


def _load_curve(cfg: ExperimentConfig) -> OvalCurve:
    try:
        return fileio.resolve_curve(cfg.curve)
    except (FileNotFoundError, InvalidCurveError, KeyError, ValueError) as exc:
        raise ConfigError(f"invalid --curve {cfg.curve!r}: {exc}") from exc


def _load_fixed_basis(cfg: ExperimentConfig) -> np.ndarray | None:
    if cfg.fixed_lattice is None:
        return None
    try:
        return fileio.read_lattice(cfg.fixed_lattice).basis
    except (OSError, ValueError, NonUnimodularLatticeError) as exc:
        msg = f"invalid --fixed-lattice {cfg.fixed_lattice!r}: {exc}"
        raise ConfigError(msg) from exc


def _lattice_for(
    rng: np.random.Generator, cfg: ExperimentConfig, basis: np.ndarray | None
) -> UnimodularLattice:
    if basis is not None:
        return UnimodularLattice(basis)
    L, _ = lattice.sample_generic(rng, cfg.condition_min_norm)
    return L


def _approximant_config(
    curve: OvalCurve, cfg: ExperimentConfig, A: float
) -> fourier.ApproximantConfig:
    if cfg.tolerance is None:
        return fourier.ApproximantConfig(A=A, weight=cfg.curvature_weight)
    return fourier.ApproximantConfig.from_tolerance(
        curve, A, cfg.tolerance, weight=cfg.curvature_weight
    )


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


@dataclasses.dataclass
class CountRun:
    samples: list[ErrorSample]
    skipped: int


def _count_worker(
    rng: np.random.Generator,
    index: int,
    curve: OvalCurve,
    cfg: ExperimentConfig,
    basis: np.ndarray | None,
) -> tuple[list[ErrorSample], int]:
    L = _lattice_for(rng, cfg, basis)
    samples, skipped = [], 0
    for t in cfg.t:
        try:
            sample = counting.error_normalized(curve, L, t, cfg.alpha, cfg.count_cap)
        except CountCapExceededError as exc:
            log.warning(f"sample {index}: skipping t={t:g}: {exc}")
            skipped += 1
            continue
        sample.seed, sample.index = cfg.seed, index
        if cfg.approximants:
            acfg = _approximant_config(curve, cfg, cfg.A[0])
            sample.approximants = {
                "s_A_prime": fourier.s_A_prime(curve, L, t, cfg.alpha, acfg),
                "h_A": fourier.h_A(curve, L, t, acfg),
            }
        samples.append(sample)
    return samples, skipped


def run_count(cfg: ExperimentConfig) -> CountRun:
    """Normalized counting errors over lattices, for every ``t`` of the grid."""
    curve = _load_curve(cfg)
    basis = _load_fixed_basis(cfg)
    with Timer(log.info, f"count: {cfg.n_lattice} lattices, t={cfg.t}"):
        results = parallel.map_seeded(
            _count_worker,
            cfg.seed,
            cfg.n_lattice,
            workers=cfg.workers,
            curve=curve,
            cfg=cfg,
            basis=basis,
        )
    run = CountRun(
        samples=[s for samples, _ in results for s in samples],
        skipped=sum(skipped for _, skipped in results),
    )
    out = _out_dir(cfg)
    fileio.write_jsonl(
        out / "count.jsonl",
        [{"config": cfg.echo()}, *(s.to_record() for s in run.samples)],
    )
    if run.skipped:
        log.warning(f"{run.skipped} samples skipped because of the count cap")
    return run


def read_count_samples(path: Path | str) -> list[ErrorSample]:
    samples = []
    for record in fileio.read_jsonl(path):
        if "config" in record:
            continue
        record["alpha"] = tuple(record["alpha"])
        samples.append(ErrorSample(**record))
    return samples


def _gap_pairs(cfg: ExperimentConfig) -> list[tuple[float, float]]:
    A, t = cfg.A, cfg.t
    if len(A) == 1:
        A = A * len(t)
    if len(t) == 1:
        t = t * len(A)
    if len(A) != len(t):
        raise ConfigError(f"--A and --t must have equal lengths for gap: {A} vs {t}")
    return list(zip(A, t))


def _gap_worker(
    rng: np.random.Generator,
    index: int,
    curve: OvalCurve,
    cfg: ExperimentConfig,
    pairs: list[tuple[float, float]],
    basis: np.ndarray | None,
) -> list[dict[str, typing.Any]]:
    L = _lattice_for(rng, cfg, basis)
    errors: dict[float, ErrorSample] = {}
    records = []
    for A, t in pairs:
        if t not in errors:
            try:
                errors[t] = counting.error_normalized(
                    curve, L, t, cfg.alpha, cfg.count_cap
                )
            except CountCapExceededError as exc:
                log.warning(f"sample {index}: skipping t={t:g}: {exc}")
                continue
        acfg = _approximant_config(curve, cfg, A)
        s = fourier.s_A_prime(curve, L, t, cfg.alpha, acfg)
        normalized = errors[t].normalized
        records.append(
            {
                "seed": cfg.seed,
                "index": index,
                "A": A,
                "m_max": acfg.m_max,
                "t": t,
                "delta": abs(normalized - s),
                "s_A_prime": s,
                "normalized_error": normalized,
            }
        )
    return records


def run_gap(cfg: ExperimentConfig) -> dict[str, typing.Any]:
    """Tail probabilities of ``|R/sqrt(t) - S_A,prime|`` for each ``(A, t)`` pair."""
    curve = _load_curve(cfg)
    basis = _load_fixed_basis(cfg)
    pairs = _gap_pairs(cfg)
    with Timer(log.info, f"gap: {cfg.n_lattice} lattices, (A, t) = {pairs}"):
        results = parallel.map_seeded(
            _gap_worker,
            cfg.seed,
            cfg.n_lattice,
            workers=cfg.workers,
            curve=curve,
            cfg=cfg,
            pairs=pairs,
            basis=basis,
        )
    records = [r for rs in results for r in rs]
    out = _out_dir(cfg)
    fileio.write_jsonl(out / "gap.jsonl", [{"config": cfg.echo()}, *records])

    frame = pd.DataFrame(records, columns=["A", "t", "delta"])
    rows = []
    for A, t in pairs:
        deltas = frame.loc[(frame["A"] == A) & (frame["t"] == t), "delta"].to_numpy()
        row = {"A": A, "t": t, "n": len(deltas)}
        row["median"] = float(np.median(deltas)) if len(deltas) else math.nan
        for x in cfg.thresholds:
            tail = float((deltas >= x).mean()) if len(deltas) else math.nan
            row[f"P(delta>={x:g})"] = tail
        rows.append(row)
    monotone = {}
    for x in cfg.thresholds:
        tails = [row[f"P(delta>={x:g})"] for row in rows]
        monotone[f"{x:g}"] = all(b <= a for a, b in zip(tails, tails[1:]))
    report = {"config": cfg.echo(), "pairs": rows, "non_increasing": monotone}
    fileio.write_report(out / "gap.json", report)
    return report


def _limit_config(curve: OvalCurve, cfg: ExperimentConfig) -> limit_law.LimitConfig:
    kwargs = dict(
        A=cfg.A[0],
        n_theta=cfg.n_theta,
        n_lattice=cfg.n_lattice,
        seed=cfg.seed,
        condition_min_norm=cfg.condition_min_norm,
        weight=cfg.curvature_weight,
        workers=cfg.workers,
    )
    try:
        if cfg.tolerance is None:
            return limit_law.LimitConfig(**kwargs)
        return limit_law.LimitConfig.from_tolerance(curve, cfg.tolerance, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def run_limit(cfg: ExperimentConfig) -> EmpiricalDistribution:
    """Sample the limit series; write the distribution, a histogram and moments."""
    curve = _load_curve(cfg)
    dist = limit_law.estimate_cdf(curve, cfg.alpha, _limit_config(curve, cfg))
    dist.metadata["experiment"] = cfg.echo()

    out = _out_dir(cfg)
    fileio.write_distribution(out / "limit.dist", dist)
    fileio.write_histogram(out / "limit_hist.csv", dist)
    report: dict[str, typing.Any] = {
        "config": cfg.echo(),
        "n": len(dist),
        "mean": dist.mean(),
        "std_error": dist.std_error(),
        "median": float(dist.quantile(0.5)),
    }
    try:
        moments = limit_law.moment_diagnostics(dist, cfg.orders, seed=cfg.seed)
    except limit_law.InsufficientDataError as exc:
        log.warning(f"moment diagnostics skipped: {exc}")
    else:
        report["moments"] = {
            "sizes": moments.sizes,
            "estimates": {f"{p:g}": v for p, v in moments.estimates.items()},
            "stable": {f"{p:g}": v for p, v in moments.stable.items()},
            "increasing": {f"{p:g}": v for p, v in moments.increasing.items()},
            "tail_slope": moments.tail_slope,
        }
    fileio.write_report(out / "limit.json", report)
    return dist


def run_converge(cfg: ExperimentConfig) -> dict[str, typing.Any]:
    """KS distance between the counting errors at each ``t`` and the limit law."""
    if cfg.counts is not None:
        samples = read_count_samples(cfg.counts)
    else:
        samples = run_count(cfg).samples
    if cfg.limit_file is not None:
        limit = fileio.read_distribution(cfg.limit_file)
    else:
        limit = run_limit(cfg)

    distances = {}
    for t in cfg.t:
        values = [s.normalized for s in samples if s.t == t]
        if not values:
            raise ConfigError(f"no counting samples at t={t:g}")
        distances[f"{t:g}"] = ks_distance(EmpiricalDistribution(values), limit)
        log.info(f"KS distance at t={t:g}: {distances[f'{t:g}']:.4f}")
    sequence = list(distances.values())
    report = {
        "config": cfg.echo(),
        "ks": distances,
        "decreasing": all(b < a for a, b in zip(sequence, sequence[1:])),
    }
    fileio.write_report(_out_dir(cfg) / "converge.json", report)
    return report


def run_siegel(cfg: ExperimentConfig) -> dict[str, typing.Any]:
    """Mean value, second moment and small-ball checks over Haar lattices."""
    n = cfg.n_lattice
    try:
        means = [
            siegel.validate_mean(
                siegel.TestFunction.ball(R), n, cfg.seed, mode, workers=cfg.workers
            ).to_dict()
            for mode in siegel.SiegelMode
            for R in cfg.radii
        ]
        family = siegel.variance_family(cfg.variance_radii, n, cfg.seed, cfg.workers)
        small_ball = siegel.small_ball_probability(
            cfg.epsilons, cfg.n_small_ball or n, cfg.seed, workers=cfg.workers
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = {
        "config": cfg.echo(),
        "mean_value": means,
        "variance": {
            "reports": [r.to_dict() for r in family.reports],
            "spread": family.spread,
        },
        "small_ball": small_ball.to_dict(),
    }
    fileio.write_report(_out_dir(cfg) / "siegel.json", report)
    return report


def _equidist_worker(
    rng: np.random.Generator,
    index: int,
    curve: OvalCurve,
    cfg: ExperimentConfig,
    t: float,
    basis: np.ndarray | None,
) -> np.ndarray:
    L = _lattice_for(rng, cfg, basis)
    rb = lattice.reduce(L)
    return fourier.theta_many(curve, rb, EQUIDIST_INDICES, t)[:, 0]


def run_equidist(cfg: ExperimentConfig) -> dict[str, typing.Any]:
    """Uniformity of the phases ``theta_k`` at the largest ``t`` of the grid."""
    curve = _load_curve(cfg)
    basis = _load_fixed_basis(cfg)
    t = cfg.t[-1]
    if cfg.n_lattice == 0:
        raise ConfigError("equidistribution needs --n-lattice > 0")
    phases = np.array(
        parallel.map_seeded(
            _equidist_worker,
            cfg.seed,
            cfg.n_lattice,
            workers=cfg.workers,
            curve=curve,
            cfg=cfg,
            t=t,
            basis=basis,
        )
    )
    try:
        p_single = chi_square_uniform(phases[:, 0], cfg.bins)
        p_joint = chi_square_uniform(phases, cfg.bins_2d)
    except SparseCellsError as exc:
        raise ConfigError(str(exc)) from exc
    report = {
        "config": cfg.echo(),
        "t": t,
        "indices": EQUIDIST_INDICES,
        "p_value": p_single,
        "p_value_joint": p_joint,
        "uniform": p_single > 1e-3,
        "jointly_uniform": p_joint > 1e-3,
    }
    fileio.write_report(_out_dir(cfg) / "equidist.json", report)
    return report


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        msg = f"expected a comma separated list: {text!r}"
        raise argparse.ArgumentTypeError(msg) from exc


def _vec2(text: str) -> tuple[float, float]:
    values = _float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two values x,y: {text!r}")
    return values[0], values[1]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--curve", default="disk", help="disk, ellipse(a,b) or a curve file"
    )
    common.add_argument(
        "--t", type=_float_list, default=[100.0], help="comma separated t grid"
    )
    common.add_argument(
        "--A", type=_float_list, default=[40.0], help="comma separated cutoffs"
    )
    common.add_argument(
        "--tolerance",
        type=float,
        default=None,
        help="m-series tolerance (default: sum the series exactly)",
    )
    common.add_argument(
        "--alpha", type=_vec2, default=(0.0, 0.0), help="translation x,y"
    )
    common.add_argument("--n-lattice", type=int, default=1000)
    common.add_argument("--n-theta", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--condition-min-norm", type=float, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default="results")
    common.add_argument("--fixed-lattice", default=None, help="lattice dump file")
    common.add_argument(
        "--weight",
        choices=[w.value for w in CurvatureWeight],
        default=CurvatureWeight.SQRT_RADIUS.value,
        help="curvature amplitude of the Fourier-side series",
    )
    common.add_argument("--count-cap", type=int, default=counting.DEFAULT_COUNT_CAP)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="ovalcount",
        description="Lattice point counting errors of ovals over random lattices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    count = sub.add_parser("count", parents=[common], help="normalized counting errors")
    count.add_argument("--approximants", action="store_true")
    gap = sub.add_parser("gap", parents=[common], help="tail of the approximant gap")
    gap.add_argument("--thresholds", type=_float_list, default=[0.1, 0.25, 0.5, 1.0])
    limit = sub.add_parser("limit", parents=[common], help="sample the limit law")
    limit.add_argument("--orders", type=_float_list, default=[1.2, 2.0])
    converge = sub.add_parser("converge", parents=[common], help="KS to the limit law")
    converge.add_argument("--counts", default=None, help="count.jsonl of a count run")
    converge.add_argument("--limit-file", default=None, help="limit.dist file")
    converge.add_argument("--orders", type=_float_list, default=[1.2, 2.0])
    sieg = sub.add_parser("siegel", parents=[common], help="Siegel mean value checks")
    sieg.add_argument("--radii", type=_float_list, default=[0.5, 1.0, 2.0])
    sieg.add_argument("--variance-radii", type=_float_list, default=[0.1, 0.2, 0.4])
    sieg.add_argument("--epsilons", type=_float_list, default=[0.05, 0.1, 0.2])
    sieg.add_argument("--n-small-ball", type=int, default=None)
    equi = sub.add_parser("equidist", parents=[common], help="uniformity of the phases")
    equi.add_argument("--bins", type=int, default=20)
    equi.add_argument("--bins-2d", type=int, default=5)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    return ExperimentConfig(**values)


COMMANDS: dict[str, typing.Callable[[ExperimentConfig], typing.Any]] = {
    "count": run_count,
    "gap": run_gap,
    "limit": run_limit,
    "converge": run_converge,
    "siegel": run_siegel,
    "equidist": run_equidist,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setuplogging(logging.DEBUG if args.verbose else logging.INFO)
    try:
        cfg = config_from_args(args)
        with Timer(log.info, f"ovalcount {cfg.command}"):
            result = COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        log.error(f"configuration error: {exc}")
        return EXIT_CONFIG
    except CountCapExceededError as exc:
        log.error(f"resource cap exceeded: {exc}")
        return EXIT_CAP
    if isinstance(result, CountRun) and result.skipped:
        return EXIT_CAP
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
