import numpy as np
import pytest

from mpcselect.ring import FixedPointParams
from mpcselect.runner import loopback_sessions, run_parties
from mpcselect.sharing import reconstruct_array


@pytest.fixture
def fp():
    return FixedPointParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def trio(fp):
    """Run a worker at three loopback parties, return per-party results."""

    def run(worker, fp_override=None, seeds=None, **kwargs):
        sessions = loopback_sessions(fp_override or fp,
                                     **({"seeds": seeds} if seeds else {}),
                                     **kwargs)
        results = run_parties(worker, sessions)
        return results, sessions

    return run


def opened(results):
    """Reconstruct a per-party dict of SharedArrays."""
    return reconstruct_array(results[1], results[2], results[3])
