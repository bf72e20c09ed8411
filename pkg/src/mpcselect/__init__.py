"""Three-party secure computation runtime for oblivious filter feature selection."""

from .errors import (EncodingRangeError, HandshakeError, IngestionError,
                     IntegrityError, MpcError, RandomnessError,
                     TransportError, UsageError)
from .ring import (FixedPointParams, decode, decode_array, encode,
                   encode_array, ring_add, ring_mul, ring_sub, to_signed)
from .sharing import (SCALE_FIXED, SCALE_INT, PairwiseSeeds, SharedArray,
                      ZeroSharingKeys, derive_pairwise_seeds,
                      public_share_array, reconstruct_array, share_array,
                      zero_share)
from .estimator import SecureGiniSelector
from .protocols import (SelectionResult, expected_rounds, filter_selection,
                        gini_feature_selection, mean_split_gini_scores,
                        plaintext_filter_lowest, plaintext_mean_split_gini,
                        plaintext_score_matrix)
from .runner import loopback_sessions, run_parties, tcp_sessions
from .session import ProtocolSession
from .transport import (CostCounters, Mesh, PartyEndpoint, connect_tcp_mesh,
                        loopback_mesh)

__version__ = "0.1.0"
