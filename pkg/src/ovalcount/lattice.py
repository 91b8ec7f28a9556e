# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Unimodular lattices in the plane.

A lattice is stored through a basis matrix whose *columns* are the basis
vectors. Random lattices are drawn from the Haar probability measure on
SL2(R)/SL2(Z) using the Iwasawa coordinates of the modular fundamental domain.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import typing
from collections.abc import Iterator

import numpy as np

log = logging.getLogger(__name__)

DET_TOL = 1e-10
# relative tolerance below which two norms are considered equal in `reduce`
TIE_TOL = 1e-12

_MAX_GAUSS_STEPS = 10_000


class NonUnimodularLatticeError(ValueError):
    """Raised when a basis matrix does not have determinant 1."""


@dataclasses.dataclass(frozen=True, eq=False)
class UnimodularLattice:
    basis: np.ndarray

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        if basis.shape != (2, 2):
            raise NonUnimodularLatticeError(
                f"expected a 2x2 basis matrix, got shape {basis.shape}"
            )
        det = float(np.linalg.det(basis))
        if not abs(det - 1) < DET_TOL:
            raise NonUnimodularLatticeError(f"det(basis) = {det!r} is not 1")
        basis.flags.writeable = False
        object.__setattr__(self, "basis", basis)

    @classmethod
    def standard(cls) -> UnimodularLattice:
        return cls(np.eye(2))

    def points(self, k) -> np.ndarray:
        """Lattice vectors ``k1 b1 + k2 b2`` for integer rows ``k``."""
        return np.asarray(k, dtype=float) @ self.basis.T


class PrimitiveIndex(typing.NamedTuple):
    k1: int
    k2: int


@dataclasses.dataclass(frozen=True, eq=False)
class ReducedBasis:
    """The successive-minima basis ``(e1(L), e2(L))`` of a lattice.

    ``generic`` is False when the pair is not uniquely defined (equal minima,
    or a vanishing first coordinate); a deterministic choice is still made.
    """

    e1: np.ndarray
    e2: np.ndarray
    generic: bool = True

    @property
    def norm1(self) -> float:
        return float(np.hypot(*self.e1))

    @property
    def norm2(self) -> float:
        return float(np.hypot(*self.e2))

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.e1, self.e2])


@dataclasses.dataclass(frozen=True, eq=False)
class PrimitiveVectors:
    """Primitive indices ``k`` (rows) and the matching vectors ``k1 e1 + k2 e2``."""

    indices: np.ndarray
    vectors: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[tuple[PrimitiveIndex, np.ndarray]]:
        for (k1, k2), v in zip(self.indices, self.vectors):
            yield PrimitiveIndex(int(k1), int(k2)), v

    @property
    def norms(self) -> np.ndarray:
        return np.hypot(self.vectors[:, 0], self.vectors[:, 1])


def gauss_reduce_batch(bases: np.ndarray) -> np.ndarray:
    """Lagrange-Gauss reduction of a stack of bases with shape (n, 2, 2).

    The returned columns satisfy ``|b1| <= |b2|`` and
    ``|<b1, b2>| <= |b1|^2 / 2``, so b1 is a shortest nonzero vector and b2 is
    a shortest vector independent of b1.
    """
    bases = np.asarray(bases, dtype=float)
    b1 = bases[:, :, 0].copy()
    b2 = bases[:, :, 1].copy()

    def swap(mask):
        tmp = b1[mask].copy()
        b1[mask] = b2[mask]
        b2[mask] = tmp

    swap(np.einsum("ij,ij->i", b1, b1) > np.einsum("ij,ij->i", b2, b2))
    active = np.ones(len(bases), dtype=bool)
    for _ in range(_MAX_GAUSS_STEPS):
        n1 = np.einsum("ij,ij->i", b1, b1)
        mu = np.rint(np.einsum("ij,ij->i", b1, b2) / n1)
        b2[active] -= mu[active, None] * b1[active]
        n2 = np.einsum("ij,ij->i", b2, b2)
        active &= n2 < n1
        if not active.any():
            break
        swap(active)
    else:
        raise RuntimeError("Lagrange-Gauss reduction did not terminate")
    return np.stack([b1, b2], axis=-1)


def gauss_reduce(basis) -> np.ndarray:
    return gauss_reduce_batch(np.asarray(basis, dtype=float)[None])[0]


def successive_minima(bases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second successive minima of a stack of bases."""
    reduced = gauss_reduce_batch(bases)
    norms = np.hypot(reduced[:, 0, :], reduced[:, 1, :])
    return norms[:, 0], norms[:, 1]


def _normalize_sign(v: np.ndarray) -> np.ndarray:
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        return -v
    return v


def reduce(L: UnimodularLattice) -> ReducedBasis:
    """Return ``(e1(L), e2(L))`` with positive first coordinates.

    Ties are broken by taking the candidate with the smallest polar angle in
    ``(-pi/2, pi/2]``; such lattices are flagged as non-generic.
    """
    reduced = gauss_reduce(L.basis)
    b1, b2 = reduced[:, 0], reduced[:, 1]
    candidates = [_normalize_sign(v) for v in (b1, b2, b1 + b2, b1 - b2)]
    norms = np.array([np.hypot(*v) for v in candidates])
    angles = np.array([math.atan2(v[1], v[0]) for v in candidates])

    # the four candidates are pairwise independent
    def pick(ranked):
        shortest = norms[ranked].min()
        tied = ranked[norms[ranked] <= shortest * (1 + TIE_TOL)]
        return tied[np.argmin(angles[tied])], len(tied) > 1

    i1, tie1 = pick(np.arange(4))
    i2, tie2 = pick(np.delete(np.arange(4), i1))
    e1, e2 = candidates[i1], candidates[i2]

    generic = not (tie1 or tie2 or e1[0] == 0 or e2[0] == 0)
    if not generic:
        log.debug(f"non-generic reduced basis e1={e1}, e2={e2}")
    return ReducedBasis(e1=e1, e2=e2, generic=generic)


def dual(L: UnimodularLattice) -> UnimodularLattice:
    return UnimodularLattice(np.linalg.inv(L.basis).T)


def geodesic_apply(L: UnimodularLattice, lam: float) -> UnimodularLattice:
    """Apply the diagonal flow ``diag(lam, 1/lam)`` to the lattice."""
    if lam <= 0:
        raise ValueError(f"geodesic parameter must be positive, got {lam}")
    return UnimodularLattice(np.diag([lam, 1 / lam]) @ L.basis)


def _index_bounds(E: np.ndarray, radius: float) -> np.ndarray:
    # |k_i| = |<row_i(E^-1), v>| <= |row_i(E^-1)| |v|
    rows = np.linalg.norm(np.linalg.inv(E), axis=1)
    return np.ceil(radius * rows).astype(int)


def enumerate_primitive(rb: ReducedBasis, A: float) -> PrimitiveVectors:
    """All ``k`` in the half-plane of primitive indices with ``|k1 e1 + k2 e2| <= A``.

    The half-plane convention is ``k1 > 0, gcd(k1, k2) = 1`` together with
    ``k = (0, 1)``; the output is in lexicographic order of ``k``.
    """
    if A <= 0:
        raise ValueError(f"cutoff must be positive, got A={A}")
    E = rb.matrix
    bound1, bound2 = _index_bounds(E, A)
    k1, k2 = np.meshgrid(
        np.arange(0, bound1 + 1), np.arange(-bound2, bound2 + 1), indexing="ij"
    )
    k1 = k1.ravel()
    k2 = k2.ravel()
    keep = ((k1 > 0) & (np.gcd(k1, k2) == 1)) | ((k1 == 0) & (k2 == 1))
    indices = np.column_stack([k1[keep], k2[keep]])
    vectors = indices @ E.T
    inside = np.hypot(vectors[:, 0], vectors[:, 1]) <= A
    return PrimitiveVectors(indices=indices[inside], vectors=vectors[inside])


def lattice_vectors(
    L: UnimodularLattice, R: float, primitive: bool = False
) -> np.ndarray:
    """All nonzero (or only primitive) lattice vectors with norm at most ``R``."""
    if R <= 0:
        return np.empty((0, 2))
    E = gauss_reduce(L.basis)
    bound1, bound2 = _index_bounds(E, R)
    k1, k2 = np.meshgrid(
        np.arange(-bound1, bound1 + 1), np.arange(-bound2, bound2 + 1), indexing="ij"
    )
    k1 = k1.ravel()
    k2 = k2.ravel()
    keep = np.gcd(k1, k2) == 1 if primitive else (k1 != 0) | (k2 != 0)
    vectors = np.column_stack([k1[keep], k2[keep]]) @ E.T
    return vectors[np.hypot(vectors[:, 0], vectors[:, 1]) <= R]


def sample_iwasawa(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``(x, y)`` from ``dx dy / y^2`` on the modular fundamental domain.

    Proposals come from ``|x| <= 1/2, y >= sqrt(3)/2`` with density
    proportional to ``y^-2``; points below the unit circle are rejected.
    """
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    remaining = n
    while remaining > 0:
        batch = max(16, int(1.15 * remaining))
        y = (math.sqrt(3) / 2) / (1.0 - rng.random(batch))
        x = rng.random(batch) - 0.5
        accept = x * x + y * y >= 1
        xs.append(x[accept][:remaining])
        ys.append(y[accept][:remaining])
        remaining -= len(xs[-1])
    return np.concatenate(xs), np.concatenate(ys)


def sample_haar_batch(rng: np.random.Generator, n: int) -> np.ndarray:
    """Return ``n`` Haar-random unimodular bases with shape (n, 2, 2).

    Each basis is ``R(theta) [[1/sqrt(y), x/sqrt(y)], [0, sqrt(y)]]``; the
    ratio of its columns is ``x + iy`` and it is already Gauss-reduced, so
    ``|L|_1 = 1 / sqrt(y)``.
    """
    x, y = sample_iwasawa(rng, n)
    theta = rng.random(n) * 2 * np.pi
    sqrt_y = np.sqrt(y)
    upper = np.zeros((n, 2, 2))
    upper[:, 0, 0] = 1 / sqrt_y
    upper[:, 0, 1] = x / sqrt_y
    upper[:, 1, 1] = sqrt_y
    cos, sin = np.cos(theta), np.sin(theta)
    rotation = np.stack(
        [np.stack([cos, -sin], axis=-1), np.stack([sin, cos], axis=-1)], axis=1
    )
    return rotation @ upper


def sample_haar(rng: np.random.Generator) -> UnimodularLattice:
    return UnimodularLattice(sample_haar_batch(rng, 1)[0])


def sample_generic(
    rng: np.random.Generator, min_norm: float | None = None, max_tries: int = 10_000
) -> tuple[UnimodularLattice, ReducedBasis]:
    """Haar lattice with a generic reduced basis, optionally conditioned on
    ``|L|_1 >= min_norm`` by rejection."""
    for _ in range(max_tries):
        L = sample_haar(rng)
        rb = reduce(L)
        if not rb.generic:
            log.warning("resampling a non-generic Haar lattice")
            continue
        if min_norm is not None and rb.norm1 < min_norm:
            continue
        return L, rb
    raise RuntimeError(
        f"no acceptable lattice after {max_tries} draws (min_norm={min_norm})"
    )


def random_sl2z(rng: np.random.Generator, steps: int = 6) -> np.ndarray:
    """A random integer matrix of determinant 1 (word in S and T^k)."""
    U = np.eye(2, dtype=np.int64)
    S = np.array([[0, -1], [1, 0]], dtype=np.int64)
    for _ in range(steps):
        k = int(rng.integers(-3, 4))
        U = U @ np.array([[1, k], [0, 1]], dtype=np.int64) @ S
    return U
