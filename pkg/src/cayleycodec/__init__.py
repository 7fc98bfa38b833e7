"""Directed-polymer free energies on Cayley trees and the random tree-code
ensemble that meets the distortion-rate function under symmetry."""

from .dprm import (
    BranchEnergyOracle,
    MonteCarloStats,
    TreeShape,
    branch_energy,
    free_energy_per_step,
    ground_state,
    internal_energy,
    log_partition_function,
    monte_carlo_free_energy,
    validate_walk,
    walk_from_leaf,
)
from .model import (
    CodingDistribution,
    DistortionMatrix,
    EnergyDistribution,
    SourceModel,
    SymmetryError,
    SymmetryReport,
    check_symmetry,
    induced_energy_distribution,
)
from .rd import RDPoint, TheoremReport, blahut_arimoto, rd_point_parametric, verify_d0_equals_d
from .theory import D0Result, FreeEnergyLimit, beta_c, d0_of_r, f_limit, log_mgf, phi
from .treecode import (
    Bitstream,
    EncodingResult,
    EnsembleStats,
    TreeCode,
    codeword_symbol,
    decode_incremental,
    decode_sequential,
    encode_beam,
    encode_exact,
    pack,
    read_bitstream,
    reproduction,
    simulate_ensemble,
    unpack,
    write_bitstream,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
