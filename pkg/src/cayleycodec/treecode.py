"""Random tree-code ensemble: lazy codebooks, encoders, bit packing, decoder.

The codebook is a Cayley tree whose branch (t, j) carries an i.i.d.
reproduction letter drawn under Q; encoding a source n-tuple means finding
the walk minimizing the summed per-letter distortion, which is exactly the
ground state of a directed polymer whose branch energies are
rho(x_t, Y_branch).  The walk is shipped as raw branch indices, log2(d)
bits each, and the decoder replays it one symbol per step.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import dprm
from .dprm import TreeShape, tree_ground_state, validate_walk
from .model import (
    CodingDistribution,
    DistortionMatrix,
    SourceModel,
    SymmetryError,
    check_symmetry,
)
from .rng import CODEBOOK_STREAM, SOURCE_STREAM, TRIAL_STREAM, derive_seed, uniforms

_MAGIC = b"CAYCODE1"
_HEADER = struct.Struct(">8sIIQ")  # magic, d, n, master_seed: 24 bytes
HEADER_SIZE = _HEADER.size


@dataclass(frozen=True)
class TreeCode:
    """Deterministic lazily-materialized random codebook tree.

    The symbol on branch (t, j_1..j_t) is a pure function of
    (master_seed, t, j_t); since the last absolute index encodes the whole
    path, it doubles as the branch key.
    """

    master_seed: int
    coding_dist: CodingDistribution
    shape: TreeShape

    def _symbols_at(self, t: int, j) -> np.ndarray:
        u = uniforms(self.master_seed, CODEBOOK_STREAM, t, j)
        return self.coding_dist.sample(u)

    def generation_symbols(self, t: int) -> np.ndarray:
        """All d^t reproduction letters of generation t, vectorized."""
        if not (1 <= t <= self.shape.n):
            raise ValueError(f"generation {t} out of range 1..{self.shape.n}")
        return self._symbols_at(t, np.arange(self.shape.d**t, dtype=np.uint64))


def _path_to_index(path) -> int:
    path = np.asarray(path, dtype=np.int64)
    if path.ndim == 0:
        return int(path)
    return int(path[-1])


def codeword_symbol(code: TreeCode, t: int, path) -> int:
    """Reproduction letter on the branch reached by (j_1..j_t); accepts the
    absolute index j_t alone, since it determines the path."""
    if not (1 <= t <= code.shape.n):
        raise ValueError(f"time {t} out of range 1..{code.shape.n}")
    j = _path_to_index(path)
    if not (0 <= j < code.shape.d**t):
        raise ValueError(f"branch index {j} out of range for generation {t}")
    return int(code._symbols_at(t, j))


@dataclass(frozen=True)
class EncodingResult:
    walk: np.ndarray
    total_distortion: float
    per_symbol: np.ndarray

    @property
    def per_symbol_mean(self) -> float:
        return float(self.per_symbol.mean())


def _check_source_tuple(code: TreeCode, x, rho: DistortionMatrix) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (code.shape.n,):
        raise ValueError(f"source tuple must have length n={code.shape.n}")
    if np.any(x < 0) or np.any(x >= rho.rows):
        raise ValueError("source letter out of range for the distortion matrix")
    if code.coding_dist.alphabet_size != rho.cols:
        raise ValueError("code and distortion matrix disagree on |Y|")
    return x


def _result_from_walk(code: TreeCode, x: np.ndarray, rho: DistortionMatrix, walk: np.ndarray) -> EncodingResult:
    per = np.array(
        [rho.values[x[t - 1], codeword_symbol(code, t, int(walk[t - 1]))] for t in range(1, code.shape.n + 1)]
    )
    return EncodingResult(walk=walk, total_distortion=float(per.sum()), per_symbol=per)


def encode_exact(code: TreeCode, x, rho: DistortionMatrix) -> EncodingResult:
    """Globally minimum-distortion walk (ties: lexicographically smallest).

    This is the ground state of the induced directed-polymer instance; the
    identification is exact, including the tie-break rule.
    """
    x = _check_source_tuple(code, x, rho)

    def energy_fn(t: int) -> np.ndarray:
        return rho.values[x[t - 1]][code.generation_symbols(t)]

    walk, _ = tree_ground_state(energy_fn, code.shape.d, code.shape.n)
    return _result_from_walk(code, x, rho, walk)


def _beam_pass(code: TreeCode, x: np.ndarray, rho: DistortionMatrix, M: int) -> tuple[int, float]:
    """One M-algorithm sweep; returns (best leaf index, its distortion)."""
    d, n = code.shape.d, code.shape.n
    surv_idx = np.zeros(1, dtype=np.int64)  # node indices at generation t-1
    surv_dist = np.zeros(1)
    for t in range(1, n + 1):
        cand = (d * surv_idx[:, None] + np.arange(d, dtype=np.int64)).ravel()
        e = rho.values[x[t - 1]][code._symbols_at(t, cand.astype(np.uint64))]
        dist = np.repeat(surv_dist, d) + e
        # absolute index order == lexicographic order on the full path
        order = np.lexsort((cand, dist))[:M]
        surv_idx, surv_dist = cand[order], dist[order]
    return int(surv_idx[0]), float(surv_dist[0])


def encode_beam(code: TreeCode, x, rho: DistortionMatrix, M: int) -> EncodingResult:
    """Beam-search encoder: keep the best M partial paths per generation,
    ranked by partial distortion, ties by lexicographic path.

    A single fixed-width sweep is not monotone in M (a wider beam can evict
    the narrow beam's eventual winner), so the result is the best leaf over
    sweeps of every width 1..M, which makes distortion nonincreasing in M by
    construction.  Distortion is >= the exact encoder's; equal once
    M >= d^(n-1), where the widest sweep is exhaustive.
    """
    if M < 1:
        raise ValueError("beam width M must be >= 1")
    x = _check_source_tuple(code, x, rho)
    max_useful = code.shape.d ** (code.shape.n - 1)
    best_leaf, best_dist = None, math.inf
    for width in range(1, min(M, max_useful) + 1):
        leaf, dist = _beam_pass(code, x, rho, width)
        if dist < best_dist - 1e-15 or (abs(dist - best_dist) <= 1e-15 and leaf < best_leaf):
            best_leaf, best_dist = leaf, dist
    walk = dprm.walk_from_leaf(best_leaf, code.shape)
    return _result_from_walk(code, x, rho, walk)


# ---------------------------------------------------------------------------
# fixed-rate bit packing


@dataclass(frozen=True)
class Bitstream:
    """Packed walk indices: n symbols at branching d, MSB-first within each
    byte, final partial byte zero-padded."""

    data: bytes
    n: int
    d: int

    @property
    def num_bits(self) -> int:
        if self.d & (self.d - 1) == 0:
            return self.n * (self.d.bit_length() - 1)
        return (self.d**self.n - 1).bit_length()


def _relative_indices(walk: np.ndarray, d: int) -> np.ndarray:
    prev = np.concatenate(([0], walk[:-1]))
    return walk - d * prev


def pack(walk, d: int) -> Bitstream:
    """Walk -> bits.  Power-of-two d: each relative child index as log2(d)
    raw bits.  Otherwise the relative indices form a base-d integer packed
    into ceil(n*log2(d)) bits."""
    walk = np.asarray(walk, dtype=np.int64)
    n = walk.size
    shape = TreeShape(d=d, n=n)
    validate_walk(walk, shape)
    rel = _relative_indices(walk, d)
    if d & (d - 1) == 0:
        k = d.bit_length() - 1
        nbits = n * k
        value = 0
        for r in rel:
            value = (value << k) | int(r)
    else:
        nbits = (d**n - 1).bit_length()
        value = 0
        for r in rel:
            value = value * d + int(r)
    nbytes = (nbits + 7) // 8
    value <<= nbytes * 8 - nbits  # left-align: MSB-first, zero pad at the end
    return Bitstream(data=value.to_bytes(nbytes, "big"), n=n, d=d)


def unpack(stream: Bitstream) -> np.ndarray:
    """Bits -> walk (absolute branch indices); exact inverse of pack."""
    return np.fromiter(_iter_walk(stream), dtype=np.int64, count=stream.n)


def _iter_walk(stream: Bitstream):
    """Yield absolute walk indices one step at a time.

    For power-of-two d each step consumes its own log2(d) bits, so step t is
    known before the bits of step t+1; for other d the whole base-d integer
    must be read first.
    """
    n, d = stream.n, stream.d
    nbits = stream.num_bits
    if len(stream.data) != (nbits + 7) // 8:
        raise ValueError(
            f"bitstream has {len(stream.data)} bytes, expected {(nbits + 7) // 8} for (d={d}, n={n})"
        )
    value = int.from_bytes(stream.data, "big") >> (len(stream.data) * 8 - nbits)
    j = 0
    if d & (d - 1) == 0:
        k = d.bit_length() - 1
        for t in range(1, n + 1):
            r = (value >> (nbits - k * t)) & (d - 1)
            j = d * j + r
            yield j
    else:
        rel = []
        for _ in range(n):
            value, r = divmod(value, d)
            rel.append(r)
        for r in reversed(rel):
            j = d * j + r
            yield j


def decode_incremental(code: TreeCode, stream: Bitstream):
    """Delayless sequential decoder: yields reproduction symbol t as soon as
    the walk prefix (j_1..j_t) is recovered."""
    if (stream.d, stream.n) != (code.shape.d, code.shape.n):
        raise ValueError("bitstream (d, n) does not match the code")
    for t, j in enumerate(_iter_walk(stream), start=1):
        yield codeword_symbol(code, t, j)


def decode_sequential(code: TreeCode, stream: Bitstream) -> np.ndarray:
    """The full reproduction n-tuple from the incremental decoder."""
    return np.fromiter(decode_incremental(code, stream), dtype=np.int64, count=stream.n)


def reproduction(code: TreeCode, walk) -> np.ndarray:
    """Reproduction symbols along a walk, recomputed straight from the tree."""
    walk = validate_walk(walk, code.shape)
    return np.array([codeword_symbol(code, t, int(walk[t - 1])) for t in range(1, code.shape.n + 1)])


def write_bitstream(path, code: TreeCode, stream: Bitstream) -> None:
    """File layout: 24-byte header (magic, d, n, master_seed) then payload."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, stream.d, stream.n, code.master_seed & ((1 << 64) - 1)))
        fh.write(stream.data)


def read_bitstream(path) -> tuple[int, int, int, Bitstream]:
    """Returns (d, n, master_seed, bitstream)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER_SIZE:
        raise ValueError("bitstream file truncated before header end")
    magic, d, n, seed = _HEADER.unpack(raw[:HEADER_SIZE])
    if magic != _MAGIC:
        raise ValueError("not a tree-code bitstream file")
    return d, n, seed, Bitstream(data=raw[HEADER_SIZE:], n=n, d=d)


# ---------------------------------------------------------------------------
# ensemble simulation


@dataclass(frozen=True)
class EnsembleStats:
    per_trial_mean_distortion: np.ndarray
    mean: float
    std: float
    d0: float
    d0_degenerate: bool
    gap: float  # mean - d0
    n: int
    d: int
    trials: int
    fixed_sequence: bool


def simulate_ensemble(
    source: SourceModel,
    Q: CodingDistribution,
    rho: DistortionMatrix,
    d: int,
    n: int,
    trials: int,
    master_seed: int,
    fixed_sequence: bool = False,
) -> EnsembleStats:
    """Monte-Carlo distortion of the exact encoder over independent codes.

    Each trial draws a fresh code; the source n-tuple is redrawn per trial
    unless fixed_sequence is set, in which case one sequence is held across
    code redraws (the faithful test of the per-individual-sequence claim).
    Refuses non-symmetric instances: the theorem's hypothesis fails there.
    """
    from .theory import d0_of_r

    report = check_symmetry(Q, rho)
    if not report:
        raise SymmetryError(report.detail)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    shape = TreeShape(d=d, n=n)
    d0 = d0_of_r(Q, rho, math.log(d))
    per_trial = np.empty(trials)
    for t in range(trials):
        src_key = 0 if fixed_sequence else t
        x = source.sample(uniforms(master_seed, SOURCE_STREAM, src_key, np.arange(n, dtype=np.uint64)))
        code = TreeCode(derive_seed(master_seed, TRIAL_STREAM, t), Q, shape)
        per_trial[t] = encode_exact(code, x, rho).per_symbol_mean
    std = float(per_trial.std(ddof=1)) if trials > 1 else 0.0
    mean = float(per_trial.mean())
    return EnsembleStats(
        per_trial_mean_distortion=per_trial,
        mean=mean,
        std=std,
        d0=d0.value,
        d0_degenerate=d0.degenerate,
        gap=mean - d0.value,
        n=n,
        d=d,
        trials=trials,
        fixed_sequence=fixed_sequence,
    )
