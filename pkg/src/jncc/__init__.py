"""Binary joint network-channel codes for multi-source relay networks.

Construction (cyclic and random transmission sets, triangular MARC
sub-blocks, progressive-edge-growth point-to-point codes), analytic
diversity metrics with exhaustive erasure verification, sum-product and
peeling decoders, and Monte Carlo outage/word-error simulation.
"""

from .bounds import MiEstimator, MiTable, bpsk_mi, capture_llr_density, \
    mi_from_density, outage_curve
from .channel import ChannelConfig, FadingRealization, bec_transmit, \
    draw_realization, transmit
from .codes import DegreeDistributions, JnccCode, PointToPointCode, assemble, \
    build_p2p_code, encode
from .decoder import BpConfig, DecodeResult, bp_decode, layered_decode, peel_decode
from .diversity import DiversityReport, analyze_topology, d_m, d_max, \
    min_n_for_full_diversity, t_min, verify_bec_diversity
from .gf2 import Gf2Matrix, SolveOutcome, gaussian_solve, peel_solve, rank
from .harness import ExperimentSpec, run_bound_sweep, run_wer_sweep
from .kernels import BACKEND
from .topology import NetworkTopology, algorithm1_transmission_sets, \
    coding_matrix, random_transmission_sets, restrict_to_unerased

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BpConfig", "ChannelConfig", "DecodeResult",
    "DegreeDistributions", "DiversityReport", "ExperimentSpec",
    "FadingRealization", "Gf2Matrix", "JnccCode", "MiEstimator", "MiTable",
    "NetworkTopology", "PointToPointCode", "SolveOutcome",
    "algorithm1_transmission_sets", "analyze_topology", "assemble",
    "bec_transmit", "bp_decode", "bpsk_mi", "build_p2p_code",
    "capture_llr_density", "coding_matrix", "d_m", "d_max",
    "draw_realization", "encode", "gaussian_solve", "layered_decode",
    "mi_from_density", "min_n_for_full_diversity", "outage_curve",
    "peel_decode", "peel_solve", "random_transmission_sets", "rank",
    "restrict_to_unerased", "run_bound_sweep", "run_wer_sweep", "t_min",
    "transmit", "verify_bec_diversity",
]
