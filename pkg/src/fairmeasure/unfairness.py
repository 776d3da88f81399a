"""Unfairness functionals: how far a process is from being a martingale.

Two notions are implemented, both vanishing exactly on martingales:

* ``unfairness_m`` -- the incomplete-market notion: the L^p-aggregated
  deviation of the process from its own conditional expectations, summed
  over all ordered time pairs.  Its p-th root is 1-homogeneous and, at
  p = 2, comes from the inner product ``inner_product_m``.
* ``unfairness_n`` -- the complete-market notion: the expected absolute
  drift rate, normalized by the current level.  Invariant under scaling
  the process by positive constants.

On a finite lattice the drift rate in ``unfairness_n`` is a one-step
forward difference quotient and always exists; the +infinity convention
for processes without a drift derivative belongs to the continuum limit
only and never arises here.  Likewise every lattice process has finite
unfairness, so the space carrying the p = 2 inner product is simply the
set of all lattice processes; no membership check is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ParameterError
from .lattice import LatticeProcess, Measure, cond_exp
from .lattice import _cond_exp_weights

__all__ = [
    "UnfairnessConfig", "MartingaleCheck",
    "unfairness_m", "unfairness_n", "inner_product_m", "is_martingale",
]


@dataclass(frozen=True)
class UnfairnessConfig:
    """Exponent p > 0 and whether to keep the identically-zero diagonal term."""

    p: float = 2.0
    include_diagonal: bool = True

    def __post_init__(self):
        if not self.p > 0:
            raise ParameterError(f"exponent p must be > 0, got {self.p}")


class MartingaleCheck(NamedTuple):
    ok: bool
    max_deviation: float


def _check_same_lattice(Q: Measure, g: LatticeProcess) -> None:
    if Q.lattice != g.lattice:
        raise ParameterError("measure and process live on different lattices")


def _exchange_norms(dev: np.ndarray, n: int, d: int) -> np.ndarray:
    """Euclidean norm over the d components of each exchange: (P, M) -> (P, n)."""
    if d == 1:
        return np.abs(dev)
    return np.sqrt((dev.reshape(dev.shape[0], n, d) ** 2).sum(axis=2))


def _m_raw(q: np.ndarray, g: LatticeProcess, p: float, include_diagonal: bool) -> float:
    """Value of the m-functional on a raw weight vector (no normalization check).

    The solver differentiates through this with perturbed, slightly
    unnormalized weights; the public wrapper validates a proper Measure.
    """
    lat = g.lattice
    dt = lat.dt
    offset = 0 if include_diagonal else 1
    total = 0.0
    for k in range(lat.depth):
        for l in range(k + offset, lat.depth + 1):
            avg, _ = _cond_exp_weights(lat, g.values[l], k, q)
            nrm = _exchange_norms(g.values[k] - avg, g.n, g.d)
            total += dt * dt * float(q @ (nrm ** p).sum(axis=1))
    return total


def unfairness_m(Q: Measure, g: LatticeProcess,
                 cfg: UnfairnessConfig = UnfairnessConfig()) -> float:
    """L^p deviation of g from its conditional expectations under Q.

    Discretizes the double time integral as a left-endpoint sum over the
    earlier time k and a sum over later times l >= k, each weighted dt; the
    l = k term vanishes identically.  Per exchange the deviation is measured
    in the Euclidean norm over its d components.  Nonnegative, and zero
    exactly when g is a Q-martingale on the lattice.
    """
    _check_same_lattice(Q, g)
    return _m_raw(Q.weights, g, cfg.p, cfg.include_diagonal)


def _n_raw(q: np.ndarray, g: LatticeProcess) -> float:
    """Value of the n-functional on a raw weight vector (no normalization check)."""
    lat = g.lattice
    dt = lat.dt
    total = 0.0
    for k in range(lat.depth):
        cur = g.values[k]
        if np.any(cur <= 0.0):
            raise DomainError(f"drift rate needs strictly positive values at time {k}")
        avg, _ = _cond_exp_weights(lat, g.values[k + 1], k, q)
        drift = (avg - cur) / (dt * cur)
        total += dt * float(q @ np.abs(drift).sum(axis=1))
    return total


def unfairness_n(Q: Measure, g: LatticeProcess) -> float:
    """Expected absolute one-step drift rate of g under Q.

    Componentwise |E_Q[g(k+1)|F_k] - g(k)| / (dt * g(k)), averaged under Q
    and summed over the time grid with weight dt.  Requires g > 0 wherever
    the normalization divides.  Unchanged when g is scaled by a positive
    constant, and zero exactly for Q-martingales.
    """
    _check_same_lattice(Q, g)
    return _n_raw(Q.weights, g)


def inner_product_m(Q: Measure, x: LatticeProcess, y: LatticeProcess) -> float:
    """The bilinear form polarizing unfairness_m at p = 2.

    Pairs the deviation vectors of x and y from their conditional
    expectations over all ordered time pairs; <x, x> equals
    unfairness_m(Q, x, p=2), and the form vanishes whenever either argument
    is a Q-martingale.
    """
    _check_same_lattice(Q, x)
    _check_same_lattice(Q, y)
    if (x.n, x.d) != (y.n, y.d):
        raise ParameterError("processes have different exchange layouts")
    lat = x.lattice
    dt = lat.dt
    total = 0.0
    for k in range(lat.depth):
        for l in range(k, lat.depth + 1):
            dev_x = x.values[k] - cond_exp(x.values[l], k, Q)
            dev_y = y.values[k] - cond_exp(y.values[l], k, Q)
            total += dt * dt * float(Q.weights @ (dev_x * dev_y).sum(axis=1))
    return total


def is_martingale(Q: Measure, x: LatticeProcess, tol: float = 1e-9) -> MartingaleCheck:
    """One-step martingale test: max |x(k) - E_Q[x(k+1)|F_k]| <= tol.

    The one-step check suffices by the tower property of conditional
    expectations.  Returns the verdict and the largest deviation found
    (over times, paths and components).
    """
    _check_same_lattice(Q, x)
    worst = 0.0
    for k in range(x.lattice.depth):
        dev = np.abs(x.values[k] - cond_exp(x.values[k + 1], k, Q))
        worst = max(worst, float(dev.max()))
    return MartingaleCheck(ok=worst <= tol, max_deviation=worst)
