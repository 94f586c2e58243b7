import math

import numpy as np
import pytest
from hypothesis import settings

from wdistill.canonical import apply_unitaries, w_canonical_state
from wdistill.state import ThreeQubitState, make_state, random_local_unitary

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

S3 = 1 / math.sqrt(3)
S2 = 1 / math.sqrt(2)


def amps_from(mapping):
    v = np.zeros(8, dtype=complex)
    for label, amp in mapping.items():
        v[int(label, 2)] = amp
    return v


@pytest.fixture
def w_state():
    return make_state(amps_from({"001": 1, "010": 1, "100": 1}))


@pytest.fixture
def ghz_state():
    return make_state(amps_from({"000": 1, "111": 1}))


@pytest.fixture
def asym_state():
    # heavy amplitude on party 3
    return make_state(amps_from({"001": S2, "010": 0.5, "100": 0.5}))


def rotated(state, rng):
    """Random local-unitary image of ``state``."""
    us = [random_local_unitary(rng) for _ in range(3)]
    return ThreeQubitState(apply_unitaries(state, *us))


def random_w_state(rng, low=0.1):
    v = rng.uniform(low, 1.0, size=4)
    return rotated(w_canonical_state(v / np.linalg.norm(v)), rng)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
