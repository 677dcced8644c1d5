import hypothesis
import numpy as np
import scipy.optimize

hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.load_profile("ci")


def match_multisets(a, b) -> float:
    """Max pairing distance between two complex multisets (Hungarian matching)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    assert len(a) == len(b), f"multiset sizes differ: {len(a)} vs {len(b)}"
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
