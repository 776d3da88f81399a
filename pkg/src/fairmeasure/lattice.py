"""Finite adapted path lattices.

A lattice is the product path space {0..b-1}^K over the time grid
{0, 1/K, ..., 1}.  Paths are enumerated lexicographically by their branch
digits, so the partition of paths sharing a prefix of length k consists of
contiguous index ranges of size b^(K-k).  All measures, densities and
processes in this package are path-indexed arrays aligned to that order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import EquivalenceViolationError, ParameterError, SizeBudgetError

DEFAULT_PATH_BUDGET = 1 << 20
NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class AdaptedLattice:
    """Product path space with the prefix filtration on [0, 1].

    branching: number of children per node (size of the one-step alphabet).
    depth:     number of time steps K; the grid spacing is dt = 1/K.
    """

    branching: int
    depth: int

    def __post_init__(self):
        if int(self.branching) != self.branching or self.branching < 2:
            raise ParameterError(f"branching must be an integer >= 2, got {self.branching}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ParameterError(f"depth must be an integer >= 1, got {self.depth}")

    @property
    def n_paths(self) -> int:
        return self.branching ** self.depth

    @property
    def dt(self) -> float:
        return 1.0 / self.depth

    @cached_property
    def digits(self) -> np.ndarray:
        """(n_paths, depth) array of branch digits, lexicographic path order."""
        b, K = self.branching, self.depth
        idx = np.arange(self.n_paths)
        cols = [(idx // b ** (K - 1 - j)) % b for j in range(K)]
        out = np.stack(cols, axis=1).astype(np.int64)
        out.setflags(write=False)
        return out

    def block_size(self, k: int) -> int:
        self._check_time(k)
        return self.branching ** (self.depth - k)

    def n_blocks(self, k: int) -> int:
        self._check_time(k)
        return self.branching ** k

    def partition(self, k: int) -> list[range]:
        """Blocks of paths sharing a digit prefix of length k, as index ranges."""
        bs = self.block_size(k)
        return [range(j * bs, (j + 1) * bs) for j in range(self.n_blocks(k))]

    def block_index(self, k: int) -> np.ndarray:
        """For each path, the index of its partition(k) block."""
        bs = self.block_size(k)
        return np.arange(self.n_paths) // bs

    def path_label(self, idx: int) -> str:
        """Base-b digit string of a path (serialization order)."""
        if self.branching > 10:
            raise ParameterError("digit-string labels support branching <= 10")
        return "".join(str(d) for d in self.digits[idx])

    def labels(self) -> list[str]:
        return [self.path_label(i) for i in range(self.n_paths)]

    def _check_time(self, k: int) -> None:
        if not 0 <= k <= self.depth:
            raise ParameterError(f"time index {k} outside 0..{self.depth}")


def build_lattice(b: int, K: int, path_budget: int = DEFAULT_PATH_BUDGET) -> AdaptedLattice:
    """Construct the lattice with b branches per node and K steps.

    Rejects lattices whose path count b^K exceeds ``path_budget``.
    """
    if int(b) != b or b < 2:
        raise ParameterError(f"b must be an integer >= 2, got {b}")
    if int(K) != K or K < 1:
        raise ParameterError(f"K must be an integer >= 1, got {K}")
    if b ** K > path_budget:
        raise SizeBudgetError(f"lattice would have {b}^{K} paths, budget is {path_budget}")
    return AdaptedLattice(int(b), int(K))


@dataclass(frozen=True, eq=False)
class Measure:
    """Probability weights on paths; must sum to 1 within 1e-12."""

    lattice: AdaptedLattice
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.shape != (self.lattice.n_paths,):
            raise ParameterError(
                f"weights shape {w.shape} does not match {self.lattice.n_paths} paths")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ParameterError("weights must be finite and nonnegative")
        if abs(float(w.sum()) - 1.0) > NORMALIZATION_TOL:
            raise ParameterError(f"weights sum to {w.sum()!r}, not 1 within {NORMALIZATION_TOL}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def density(self) -> "Density":
        """Radon-Nikodym derivative against the uniform base measure."""
        return Density(self.lattice, self.weights * self.lattice.n_paths)


@dataclass(frozen=True, eq=False)
class Density:
    """Path density F = dQ/dmu against the uniform base measure mu."""

    lattice: AdaptedLattice
    values: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.values, dtype=float).copy()
        if f.shape != (self.lattice.n_paths,):
            raise ParameterError(
                f"density shape {f.shape} does not match {self.lattice.n_paths} paths")
        if np.any(f < 0.0) or not np.all(np.isfinite(f)):
            raise ParameterError("density must be finite and nonnegative")
        if abs(float(f.mean()) - 1.0) > NORMALIZATION_TOL:
            raise ParameterError("density does not integrate to 1 against the base measure")
        f.setflags(write=False)
        object.__setattr__(self, "values", f)

    def measure(self) -> Measure:
        return Measure(self.lattice, self.values / self.lattice.n_paths)


def uniform_measure(lattice: AdaptedLattice) -> Measure:
    """The normalized counting measure: weight b^-K on every path."""
    P = lattice.n_paths
    return Measure(lattice, np.full(P, 1.0 / P))


@dataclass(frozen=True, eq=False)
class LatticeProcess:
    """Adapted process with n exchanges of d components each.

    values has shape (K+1, n_paths, n*d); component i*d+j is dimension j of
    exchange i.  Adaptedness (values at time k identical across each
    partition(k) block) is validated exactly on construction.
    """

    lattice: AdaptedLattice
    n: int
    d: int
    values: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ParameterError("need n >= 1 exchanges and d >= 1 components")
        v = np.asarray(self.values, dtype=float).copy()
        expected = (self.lattice.depth + 1, self.lattice.n_paths, self.n * self.d)
        if v.shape != expected:
            raise ParameterError(f"values shape {v.shape}, expected {expected}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("process values must be finite")
        violation = find_adaptedness_violation(self.lattice, v)
        if violation is not None:
            k, blk = violation
            raise ParameterError(f"process not adapted: time {k}, block {blk} is not constant")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_components(self) -> int:
        return self.n * self.d

    def exchange(self, i: int) -> np.ndarray:
        """(K+1, n_paths, d) view of exchange i."""
        if not 0 <= i < self.n:
            raise ParameterError(f"exchange index {i} outside 0..{self.n - 1}")
        return self.values[:, :, i * self.d:(i + 1) * self.d]

    def scaled(self, factor: float) -> "LatticeProcess":
        return LatticeProcess(self.lattice, self.n, self.d, self.values * factor)


def find_adaptedness_violation(lattice: AdaptedLattice, values: np.ndarray):
    """Return (k, block index) of the first non-constant block, or None.

    Uses exact equality: adapted processes built in this package repeat the
    identical float per block, and serialized ones round-trip bit-exactly.
    """
    for k in range(lattice.depth + 1):
        nblk = lattice.n_blocks(k)
        blocks = values[k].reshape(nblk, lattice.block_size(k), -1)
        ok = np.all(blocks == blocks[:, :1, :], axis=(1, 2))
        if not np.all(ok):
            return k, int(np.argmin(ok))
    return None


def _as_columns(x: np.ndarray, n_paths: int):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape != (n_paths,):
            raise ParameterError(f"vector length {x.shape[0]} does not match {n_paths} paths")
        return x[:, None], True
    if x.ndim == 2 and x.shape[0] == n_paths:
        return x, False
    raise ParameterError(f"expected ({n_paths},) or ({n_paths}, m) array, got shape {x.shape}")


def _cond_exp_weights(lat: AdaptedLattice, X: np.ndarray, k: int, w: np.ndarray):
    """Blockwise weighted average over partition(k); X is (n_paths, m).

    Returns the path-expanded averages and the per-block zero-weight flags.
    Weights need not be normalized.
    """
    nblk, bs = lat.n_blocks(k), lat.block_size(k)
    Xb = X.reshape(nblk, bs, X.shape[1])
    wb = w.reshape(nblk, bs)
    W = wb.sum(axis=1)
    zero = W <= 0.0
    num = np.einsum("nb,nbm->nm", wb, Xb)
    avg = num / np.where(zero, 1.0, W)[:, None]
    const = np.all(Xb == Xb[:, :1, :], axis=1)
    avg = np.where(const, Xb[:, 0, :], avg)
    avg[zero] = 0.0
    return np.repeat(avg, bs, axis=0), zero


def cond_exp(x: np.ndarray, k: int, Q: Measure, *, return_zero_blocks: bool = False):
    """Conditional expectation of x given the time-k prefix information, under Q.

    Per block B of partition(k) the result is sum_B(x*q) / sum_B(q), repeated
    across the block.  Blocks of total weight zero yield 0 (request
    ``return_zero_blocks`` for the per-block flags); this zero convention
    takes precedence over everything else.  On positive-weight blocks where x
    is constant, the constant is passed through unchanged, so inputs already
    measurable at level k come back exactly.

    Accepts a path vector or an (n_paths, m) array (columnwise).
    """
    lat = Q.lattice
    lat._check_time(k)
    X, was_vector = _as_columns(x, lat.n_paths)
    out, zero = _cond_exp_weights(lat, X, k, Q.weights)
    if was_vector:
        out = out[:, 0]
    if return_zero_blocks:
        return out, zero
    return out


def cond_exp_reweighted(x: np.ndarray, F: Density, k: int, base: Measure):
    """Conditional expectation of x at time k under the measure F d(base).

    Computed as the ratio cond_exp(F*x) / cond_exp(F) under the base measure,
    which equals the conditional expectation under the reweighted measure.
    Blocks of zero base weight yield 0; a vanishing denominator on a block of
    positive base weight means F is not equivalent to the base there and
    raises :class:`EquivalenceViolationError`.
    """
    lat = base.lattice
    if F.lattice != lat:
        raise ParameterError("density and base measure live on different lattices")
    X, was_vector = _as_columns(x, lat.n_paths)
    num = cond_exp(F.values[:, None] * X, k, base)
    den, zero = cond_exp(F.values, k, base, return_zero_blocks=True)
    zero_paths = np.repeat(zero, lat.block_size(k))
    bad = (den <= 0.0) & ~zero_paths
    if np.any(bad):
        blk = int(np.argmax(bad)) // lat.block_size(k)
        raise EquivalenceViolationError(
            f"density has zero conditional mass on positive-weight block {blk} at time {k}")
    out = np.where(zero_paths[:, None], 0.0,
                   num / np.where(den > 0.0, den, 1.0)[:, None])
    if was_vector:
        out = out[:, 0]
    return out


def expectation(Q: Measure, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(Q.weights @ x)


def covariance(Q: Measure, x: np.ndarray, y: np.ndarray) -> float:
    """Cov_Q(x, y) = E_Q[xy] - E_Q[x] E_Q[y] for scalar path vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ParameterError("covariance takes scalar path vectors")
    return expectation(Q, x * y) - expectation(Q, x) * expectation(Q, y)


def abs_product_mean(Q: Measure, x: np.ndarray, y: np.ndarray) -> float:
    """E_Q[|x*y|] for scalar path vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ParameterError("abs_product_mean takes scalar path vectors")
    return expectation(Q, np.abs(x * y))


# -- branch duplication (embedding into a finer lattice) ----------------------

def _coarse_path_index(fine: AdaptedLattice, coarse: AdaptedLattice, copies: int) -> np.ndarray:
    digits = fine.digits // copies
    powers = coarse.branching ** np.arange(coarse.depth - 1, -1, -1)
    return digits @ powers


def duplicate_branches(process: LatticeProcess, copies: int = 2) -> LatticeProcess:
    """Embed a process into the lattice where every branch is split into
    ``copies`` identical children; values are copied along the embedding."""
    if int(copies) != copies or copies < 2:
        raise ParameterError(f"copies must be an integer >= 2, got {copies}")
    lat = process.lattice
    fine = AdaptedLattice(lat.branching * copies, lat.depth)
    idx = _coarse_path_index(fine, lat, copies)
    return LatticeProcess(fine, process.n, process.d, process.values[:, idx, :])


def lift_measure(Q: Measure, copies: int = 2) -> Measure:
    """Lift a measure along the branch-duplication embedding: each coarse
    path's weight is split evenly over its copies^K fine images, so every
    blockwise average (hence every functional built from them) is preserved."""
    if int(copies) != copies or copies < 2:
        raise ParameterError(f"copies must be an integer >= 2, got {copies}")
    lat = Q.lattice
    fine = AdaptedLattice(lat.branching * copies, lat.depth)
    idx = _coarse_path_index(fine, lat, copies)
    return Measure(fine, Q.weights[idx] / float(copies ** lat.depth))


__all__ = [
    "AdaptedLattice", "Measure", "Density", "LatticeProcess",
    "DEFAULT_PATH_BUDGET", "NORMALIZATION_TOL",
    "build_lattice", "uniform_measure", "cond_exp", "cond_exp_reweighted",
    "expectation", "covariance", "abs_product_mean",
    "find_adaptedness_violation", "duplicate_branches", "lift_measure",
]
