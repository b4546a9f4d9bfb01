import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cavsim import fixed_window_run, load_bundled, run


@pytest.fixture(scope="session")
def case1_result():
    return run(load_bundled("case1"))


@pytest.fixture(scope="session")
def case2_result():
    return run(load_bundled("case2"))


@pytest.fixture(scope="session")
def mm1_result():
    return run(load_bundled("mm1"))


@pytest.fixture(scope="session")
def case1_pinned15():
    return fixed_window_run(load_bundled("case1"), 15, collect_trace=True)


def adjustments(result, user):
    """(time, direction, w_used) rows for one user."""
    return [
        (r.time, r.event, r.w_used)
        for r in result.trace
        if r.user == user and r.event in ("increase", "decrease")
    ]
