"""Sources, distortion matrices, coding distributions, branch-energy laws.

Alphabets are index sets 0..|X|-1 and 0..|Y|-1; any labeling lives outside
the library.  All types are immutable after construction and all operations
are pure, so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, ndtri

PROB_TOL = 1e-12
# Distortion values closer than this are treated as a single atom when
# building induced energy distributions; avoids spurious symmetry failures
# from floating-point representations of equal rational entries.
VALUE_MERGE_TOL = 1e-9


class SymmetryError(ValueError):
    """The coding distribution / distortion pair violates the symmetry
    hypothesis required by the achievability theorem."""


def _validated_pmf(probs, what: str) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{what}: need a nonempty 1-d probability vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError(f"{what}: probabilities must be finite and >= 0")
    s = p.sum()
    if abs(s - 1.0) > PROB_TOL:
        raise ValueError(f"{what}: probabilities sum to {s!r}, not 1")
    p = p / s  # renormalize exactly once
    p.flags.writeable = False
    return p


@dataclass(frozen=True)
class SourceModel:
    """Discrete memoryless source over the index alphabet 0..|X|-1."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _validated_pmf(self.probs, "SourceModel"))

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Inverse-transform letters from uniforms in (0,1)."""
        return np.searchsorted(np.cumsum(self.probs), np.asarray(u), side="right").astype(np.int64)


@dataclass(frozen=True)
class CodingDistribution:
    """Random-coding output distribution Q over the reproduction alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _validated_pmf(self.probs, "CodingDistribution"))

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    def sample(self, u: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.cumsum(self.probs), np.asarray(u), side="right").astype(np.int64)


@dataclass(frozen=True)
class DistortionMatrix:
    """Per-letter distortions rho(x, y) >= 0, shape (|X|, |Y|)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.size == 0:
            raise ValueError("DistortionMatrix: need a nonempty 2-d array")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("DistortionMatrix: entries must be finite and >= 0")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @classmethod
    def hamming(cls, k: int) -> "DistortionMatrix":
        return cls(1.0 - np.eye(k))


def _merge_atoms(values, probs, tol: float = VALUE_MERGE_TOL):
    """Sort atoms by value and merge those within tol; drop zero-mass atoms."""
    values = np.asarray(values, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    keep = probs > 0
    values, probs = values[keep], probs[keep]
    order = np.argsort(values, kind="stable")
    values, probs = values[order], probs[order]
    out_v, out_p = [], []
    for v, p in zip(values, probs):
        if out_v and v - out_v[-1] <= tol:
            # accumulate mass; keep the first representative value
            out_p[-1] += p
        else:
            out_v.append(v)
            out_p.append(p)
    return np.array(out_v), np.array(out_p)


@dataclass(frozen=True)
class EnergyDistribution:
    """Law of a single branch energy: finite discrete pmf or Gaussian.

    The log-MGF ln E{exp(-beta * eps)} is finite for all beta >= 0 in both
    variants, which is all the limit theory needs.
    """

    kind: str  # "discrete" | "gaussian"
    values: np.ndarray | None = None
    probs: np.ndarray | None = None
    mean_param: float = 0.0
    std_param: float = 0.0

    @classmethod
    def discrete(cls, values, probs, merge_tol: float = VALUE_MERGE_TOL) -> "EnergyDistribution":
        p = _validated_pmf(probs, "EnergyDistribution")
        v = np.asarray(values, dtype=np.float64)
        if v.shape != p.shape:
            raise ValueError("EnergyDistribution: values and probs must align")
        if not np.all(np.isfinite(v)):
            raise ValueError("EnergyDistribution: values must be finite")
        v, p = _merge_atoms(v, p, merge_tol)
        v.flags.writeable = False
        p.flags.writeable = False
        return cls(kind="discrete", values=v, probs=p)

    @classmethod
    def gaussian(cls, mean: float, std: float) -> "EnergyDistribution":
        if not (std > 0):
            raise ValueError("EnergyDistribution: Gaussian std must be > 0")
        return cls(kind="gaussian", mean_param=float(mean), std_param=float(std))

    @classmethod
    def point_mass(cls, value: float) -> "EnergyDistribution":
        return cls.discrete([value], [1.0])

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Inverse-transform draws from uniforms in (0,1)."""
        u = np.asarray(u)
        if self.kind == "discrete":
            idx = np.searchsorted(np.cumsum(self.probs), u, side="right")
            return self.values[np.minimum(idx, self.values.size - 1)]
        return self.mean_param + self.std_param * ndtri(u)

    def log_mgf(self, beta: float) -> float:
        """ln E{exp(-beta * eps)}, in closed form for the Gaussian variant."""
        if self.kind == "discrete":
            return float(logsumexp(-beta * self.values, b=self.probs))
        return -beta * self.mean_param + 0.5 * beta * beta * self.std_param**2

    def log_mgf_prime(self, beta: float) -> float:
        """d/dbeta of ln E{exp(-beta * eps)} = -E{eps e^{-beta eps}} / M."""
        if self.kind == "discrete":
            a = -beta * self.values + np.log(self.probs)
            w = np.exp(a - a.max())
            return float(-(self.values * w).sum() / w.sum())
        return -self.mean_param + beta * self.std_param**2

    @property
    def support_min(self) -> float:
        if self.kind == "discrete":
            return float(self.values[0])
        return -np.inf

    @property
    def support_max(self) -> float:
        if self.kind == "discrete":
            return float(self.values[-1])
        return np.inf

    @property
    def mean(self) -> float:
        if self.kind == "discrete":
            return float(self.values @ self.probs)
        return self.mean_param


@dataclass(frozen=True)
class SymmetryReport:
    symmetric: bool
    detail: str = ""
    offending_rows: tuple | None = None

    def __bool__(self) -> bool:
        return self.symmetric


def induced_energy_distribution(
    Q: CodingDistribution, rho: DistortionMatrix, x: int
) -> EnergyDistribution:
    """Distribution of rho(x, Y) with Y ~ Q, duplicate values merged.

    These are exactly the branch energies of the tree-code partition
    function; under symmetry the result does not depend on x.
    """
    if Q.alphabet_size != rho.cols:
        raise ValueError("coding distribution and distortion matrix disagree on |Y|")
    if not (0 <= x < rho.rows):
        raise ValueError(f"source letter {x} out of range")
    return EnergyDistribution.discrete(rho.values[x], Q.probs)


def check_symmetry(
    Q: CodingDistribution, rho: DistortionMatrix, tol: float = VALUE_MERGE_TOL
) -> SymmetryReport:
    """Does rho(x, Y), Y ~ Q, have the same law for every source letter x?

    Compares the merged value->mass maps of each row against row 0; values
    within tol of each other count as the same atom and masses must agree
    within tol.  This is the hypothesis under which the tree-code ensemble
    meets the distortion-rate function.
    """
    if Q.alphabet_size != rho.cols:
        raise ValueError("coding distribution and distortion matrix disagree on |Y|")
    ref_v, ref_p = _merge_atoms(rho.values[0], Q.probs, tol)
    for x in range(1, rho.rows):
        v, p = _merge_atoms(rho.values[x], Q.probs, tol)
        if v.size != ref_v.size:
            return SymmetryReport(
                False,
                f"rows 0 and {x} induce {ref_v.size} vs {v.size} distinct distortion values",
                (0, x),
            )
        dv = np.abs(v - ref_v)
        dp = np.abs(p - ref_p)
        if np.any(dv > tol) or np.any(dp > tol):
            k = int(np.argmax(np.maximum(dv / max(tol, 1e-300), dp)))
            return SymmetryReport(
                False,
                f"rows 0 and {x} disagree at atom {k}: "
                f"value {ref_v[k]:.6g} mass {ref_p[k]:.6g} vs "
                f"value {v[k]:.6g} mass {p[k]:.6g}",
                (0, x),
            )
    return SymmetryReport(True, "induced distortion law identical across source letters")
