import numpy as np
import pytest

from optcurve.function_zoo import (
    huber_counterexample,
    make_counterexample,
    paper_square,
    quadratic,
    random_convex_1d,
    random_log_sum_exp,
    random_quadratic,
)


def smooth_members():
    """Convex finite-L catalogue members used across the suite."""
    return [
        paper_square(),
        huber_counterexample(),
        make_counterexample(4.0),
        make_counterexample(0.25),
        quadratic(np.diag([1.0, 4.0]), [0.5, -1.0]),
        random_quadratic(3, 3),
        random_log_sum_exp(0, 4, 2),
        random_log_sum_exp(5, 3, 3),
        random_convex_1d(0, 4),
        random_convex_1d(7, 2),
        random_convex_1d(11, 6),
    ]


SMOOTH = smooth_members()


@pytest.fixture(params=SMOOTH, ids=lambda f: f.function_id)
def member(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
