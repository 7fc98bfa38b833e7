"""Exact computations on one realization of the random Cayley tree.

Branches are indexed (i, j): generation 1 <= i <= n, branch 0 <= j <= d^i - 1
left to right.  A walk is (j_1, ..., j_n) with d*j_i <= j_{i+1} <= d*j_i+d-1;
the leaf index j_n alone determines the whole walk.

Energies are never materialized as a tree: each branch energy is a pure hash
of (master_seed, i, j), so the sweeps below regenerate whole generations as
vectorized batches.  All combining is done in the log domain (log-sum-exp),
which keeps beta up to ~50 from underflowing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .model import EnergyDistribution
from .rng import ENERGY_STREAM, uniforms

# An energy function maps a generation index i to the d^i branch energies of
# that generation, in branch-index order.
EnergyFn = Callable[[int], np.ndarray]


@dataclass(frozen=True)
class TreeShape:
    """Full balanced tree: branching ratio d, depth n generations."""

    d: int
    n: int

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError("TreeShape: need d >= 1 and n >= 1")
        total = sum(self.d**i for i in range(1, self.n + 1))
        if total >= 1 << 63:
            raise ValueError("TreeShape: branch count does not fit in 64 bits")

    @property
    def num_branches(self) -> int:
        return sum(self.d**i for i in range(1, self.n + 1))

    @property
    def num_walks(self) -> int:
        return self.d**self.n


def validate_walk(steps, shape: TreeShape) -> np.ndarray:
    """Check the parent-child index constraint and return the walk array."""
    w = np.asarray(steps, dtype=np.int64)
    if w.shape != (shape.n,):
        raise ValueError(f"walk must have {shape.n} steps")
    if not (0 <= w[0] <= shape.d - 1):
        raise ValueError("walk: first step out of range")
    for i in range(shape.n - 1):
        if not (shape.d * w[i] <= w[i + 1] <= shape.d * w[i] + shape.d - 1):
            raise ValueError(f"walk: step {i + 2} is not a child of step {i + 1}")
    return w


def walk_from_leaf(leaf: int, shape: TreeShape) -> np.ndarray:
    """The unique walk ending at the given leaf index."""
    if not (0 <= leaf < shape.num_walks):
        raise ValueError("leaf index out of range")
    w = np.empty(shape.n, dtype=np.int64)
    j = leaf
    for i in range(shape.n - 1, -1, -1):
        w[i] = j
        j //= shape.d
    return w


@dataclass(frozen=True)
class BranchEnergyOracle:
    """Deterministic lazy branch energies: energy(i, j) is a pure function of
    (master_seed, i, j); distinct branches get independent draws from
    energy_dist via inverse-transform sampling of a hashed uniform."""

    master_seed: int
    energy_dist: EnergyDistribution
    shape: TreeShape

    def _check(self, i: int, j) -> None:
        if not (1 <= i <= self.shape.n):
            raise ValueError(f"generation {i} out of range 1..{self.shape.n}")
        j = np.asarray(j)
        if np.any(j < 0) or np.any(j >= self.shape.d**i):
            raise ValueError(f"branch index out of range for generation {i}")

    def energy(self, i: int, j: int) -> float:
        self._check(i, j)
        u = uniforms(self.master_seed, ENERGY_STREAM, i, j)
        return float(self.energy_dist.sample(u))

    def generation_energies(self, i: int) -> np.ndarray:
        """All d^i branch energies of generation i, vectorized."""
        if not (1 <= i <= self.shape.n):
            raise ValueError(f"generation {i} out of range 1..{self.shape.n}")
        j = np.arange(self.shape.d**i, dtype=np.uint64)
        return self.energy_dist.sample(uniforms(self.master_seed, ENERGY_STREAM, i, j))


def branch_energy(oracle: BranchEnergyOracle, i: int, j: int) -> float:
    return oracle.energy(i, j)


# ---------------------------------------------------------------------------
# generic bottom-up sweeps over a full balanced tree


def tree_log_partition(energy_fn: EnergyFn, d: int, n: int, beta: float) -> float:
    """ln Z = ln sum over walks of exp(-beta * path energy)."""
    if beta <= 0:
        raise ValueError("beta must be > 0")
    v = None
    for i in range(n, 0, -1):
        t = -beta * energy_fn(i)
        if v is not None:
            t = t + v
        v = logsumexp(t.reshape(-1, d), axis=1)
    return float(v[0])


def tree_log_partition_and_mean_energy(
    energy_fn: EnergyFn, d: int, n: int, beta: float
) -> tuple[float, float]:
    """(ln Z, Boltzmann-averaged path energy), one pass.

    Propagates per-subtree (log partition, weighted mean energy) pairs up
    the tree; the mean combines children with their softmax weights.
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    v = None
    m = None
    for i in range(n, 0, -1):
        e = energy_fn(i)
        a = -beta * e
        me = e
        if v is not None:
            a = a + v
            me = me + m
        a = a.reshape(-1, d)
        v_new = logsumexp(a, axis=1)
        w = np.exp(a - v_new[:, None])
        m = (w * me.reshape(-1, d)).sum(axis=1)
        v = v_new
    return float(v[0]), float(m[0])


def tree_ground_state(energy_fn: EnergyFn, d: int, n: int) -> tuple[np.ndarray, float]:
    """(argmin walk, min total path energy); ties go to the lexicographically
    smallest index sequence (argmin takes the first minimum at every node,
    which composes to the lexicographic rule top-down)."""
    g = None
    choices = []
    for i in range(n, 0, -1):
        t = energy_fn(i)
        if g is not None:
            t = t + g
        t = t.reshape(-1, d)
        c = np.argmin(t, axis=1)
        g = t[np.arange(t.shape[0]), c]
        choices.append(c)
    choices.reverse()
    walk = np.empty(n, dtype=np.int64)
    j = 0
    for i in range(n):
        j = d * j + int(choices[i][j])
        walk[i] = j
    return walk, float(g[0])


# ---------------------------------------------------------------------------
# oracle-facing operations


def log_partition_function(oracle: BranchEnergyOracle, beta: float) -> float:
    return tree_log_partition(oracle.generation_energies, oracle.shape.d, oracle.shape.n, beta)


def free_energy_per_step(oracle: BranchEnergyOracle, beta: float) -> float:
    """f_n(beta) = ln Z_n(beta) / (n beta); sign convention without the
    leading minus, so larger is `better' (lower distortion is -f)."""
    return log_partition_function(oracle, beta) / (oracle.shape.n * beta)


def internal_energy(oracle: BranchEnergyOracle, beta: float) -> float:
    """Boltzmann-averaged total path energy <E> = -d/dbeta ln Z."""
    _, mean_e = tree_log_partition_and_mean_energy(
        oracle.generation_energies, oracle.shape.d, oracle.shape.n, beta
    )
    return mean_e


def ground_state(oracle: BranchEnergyOracle) -> tuple[np.ndarray, float]:
    """Minimum-energy walk and its total energy."""
    return tree_ground_state(oracle.generation_energies, oracle.shape.d, oracle.shape.n)


@dataclass(frozen=True)
class MonteCarloStats:
    mean: float
    std: float
    values: np.ndarray


def monte_carlo_free_energy(
    shape: TreeShape,
    energy_dist: EnergyDistribution,
    beta: float,
    trials: int,
    master_seed: int,
) -> MonteCarloStats:
    """Independent disorder realizations of f_n(beta).

    Trial t runs on a child seed derived from (master_seed, t), so trials are
    independent and the aggregate is insensitive to execution order.
    """
    from .rng import TRIAL_STREAM, derive_seed

    if trials < 1:
        raise ValueError("trials must be >= 1")
    values = np.empty(trials)
    for t in range(trials):
        oracle = BranchEnergyOracle(derive_seed(master_seed, TRIAL_STREAM, t), energy_dist, shape)
        values[t] = free_energy_per_step(oracle, beta)
    std = float(values.std(ddof=1)) if trials > 1 else 0.0
    return MonteCarloStats(mean=float(values.mean()), std=std, values=values)
