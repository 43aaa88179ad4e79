"""Cooperative distributed sparse channel estimation for massive MIMO
downlinks: greedy recovery kernels, a weighted-voting cooperation protocol,
and a reproducible Monte Carlo experiment harness."""

from .errors import ConfigurationError, ProtocolError
from .signal_model import (ArrayConfig, ChannelRealization, Dictionary,
                           JointSparsityProfile, SparseVector,
                           build_dictionary, channel_from_paths,
                           channel_from_sparse, gscm_channel, sample_profile,
                           sample_sparse_vectors, steering_vector)
from .measurement import MeasurementSet, PilotMatrix, measure, sample_pilots
from .recovery import (RecoveryResult, SupportEstimate,
                       least_squares_on_support, omp, somp)
from .distributed import (NetworkTopology, ProtocolTrace, RoundRecord,
                          WeightTable, index_bits, majority_vote, run_diomp,
                          run_wdiomp, transmission_cost, update_weights,
                          vote_scores, weighted_vote, write_trace_records)

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig", "ChannelRealization", "ConfigurationError", "Dictionary",
    "JointSparsityProfile", "MeasurementSet", "NetworkTopology",
    "PilotMatrix", "ProtocolError", "ProtocolTrace", "RecoveryResult",
    "RoundRecord", "SparseVector", "SupportEstimate", "WeightTable",
    "build_dictionary", "channel_from_paths", "channel_from_sparse",
    "gscm_channel", "index_bits", "least_squares_on_support", "majority_vote",
    "measure", "omp", "run_diomp", "run_wdiomp", "sample_pilots",
    "sample_profile", "sample_sparse_vectors", "somp", "steering_vector",
    "transmission_cost", "update_weights", "vote_scores", "weighted_vote",
    "write_trace_records",
]
