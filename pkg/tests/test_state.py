import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import S2, S3, amps_from
from wdistill.errors import ZeroBranch, ZeroVector
from wdistill.state import (
    TriangularPovm,
    apply_local,
    fidelity,
    is_valid_element,
    make_state,
    max_gram_eigenvalue,
    povm_expression,
    povm_valid,
    random_local_unitary,
    random_povm_element,
    random_state,
    random_triangular_povm,
    rank_eps,
    reduced_density,
)

finite = st.floats(-10, 10, allow_nan=False)


def test_make_state_already_normalized():
    s = make_state([1, 0, 0, 0, 0, 0, 0, 0])
    assert s["000"] == 1
    assert s.norm_factor == 1.0


def test_make_state_w_example():
    s = make_state([0, 1, 1, 0, 1, 0, 0, 0])
    for label in ("001", "010", "100"):
        assert s[label] == pytest.approx(S3, abs=1e-15)
    assert s.norm_factor == pytest.approx(S3, abs=1e-15)


def test_make_state_rejects_zero_and_bad_length():
    with pytest.raises(ZeroVector):
        make_state(np.zeros(8))
    with pytest.raises(ValueError):
        make_state(np.ones(7))
    with pytest.raises(ValueError):
        make_state([math.nan] + [0] * 7)


@given(st.lists(st.tuples(finite, finite), min_size=8, max_size=8))
def test_make_state_normalizes(pairs):
    raw = np.array([complex(a, b) for a, b in pairs])
    if np.linalg.norm(raw) < 1e-6:
        return
    s = make_state(raw)
    assert np.linalg.norm(s.amps) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(s.amps / s.norm_factor, raw, atol=1e-9)


def test_state_is_immutable():
    s = make_state([1, 0, 0, 0, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        s.amps[0] = 2


def test_apply_identity(w_state):
    out, p = apply_local(w_state, np.eye(2), np.eye(2), np.eye(2))
    assert p == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(out.amps, w_state.amps)


def test_apply_local_teleportation_filter():
    # canonical frame of the symmetric W state
    w = make_state(amps_from({"000": S3, "101": S3, "110": S3}))
    A = np.diag([1.0, S2])
    out, p = apply_local(w, A, np.eye(2), np.eye(2))
    assert p == pytest.approx(2 / 3, abs=1e-15)
    target = make_state(amps_from({"000": S2, "101": 0.5, "110": 0.5}))
    assert fidelity(out, target) == pytest.approx(1.0, abs=1e-15)


def test_apply_local_zero_branch():
    s = make_state([1, 0, 0, 0, 0, 0, 0, 0])
    with pytest.raises(ZeroBranch):
        apply_local(s, np.diag([0.0, 1.0]), np.eye(2), np.eye(2))


def test_apply_local_accepts_triangular_elements(w_state):
    A = TriangularPovm(1, 0.5, 0.2, 0.7)
    out1, p1 = apply_local(w_state, A, np.eye(2), np.eye(2))
    out2, p2 = apply_local(w_state, A.matrix(), np.eye(2), np.eye(2))
    assert p1 == p2
    np.testing.assert_array_equal(out1.amps, out2.amps)


def test_triangular_shapes():
    np.testing.assert_array_equal(TriangularPovm(1, 1, 2, 3).matrix(), [[1, 0], [2, 3]])
    np.testing.assert_array_equal(TriangularPovm(3, 1, 2, 3).matrix(), [[1, 2], [0, 3]])
    with pytest.raises(ValueError):
        TriangularPovm(4, 1, 0, 1)
    assert TriangularPovm.identity(2).is_identity()


@pytest.mark.parametrize(
    "abd, valid, expr",
    [((1, 0, 1), True, 2.0), ((1, 0, 0), True, 2.0), ((1, 0.1, 1), False, None)],
)
def test_povm_valid_examples(abd, valid, expr):
    op = TriangularPovm(2, *abd)
    assert povm_valid(op) is valid
    if expr is not None:
        assert povm_expression(op) == expr


def test_povm_valid_matches_eigenvalue_verdict():
    rng = np.random.default_rng(11)
    ops = rng.uniform(-1.3, 1.3, size=(100_000, 3))
    a, b, d = ops.T
    expr = a * a + b * b + d * d + np.sqrt(((a - d) ** 2 + b * b) * ((a + d) ** 2 + b * b))
    m = np.zeros((ops.shape[0], 2, 2))
    m[:, 0, 0], m[:, 0, 1], m[:, 1, 1] = a, b, d
    top = np.linalg.eigvalsh(np.transpose(m, (0, 2, 1)) @ m)[:, -1]
    # keep clear of the boundary, where both verdicts are rounding-limited
    clear = np.abs(top - 1) > 1e-9
    assert np.array_equal((expr <= 2 + 1e-10)[clear], (top <= 1 + 1e-10)[clear])
    for row in ops[:200]:
        op = TriangularPovm(1, *row)
        assert povm_valid(op) == (max_gram_eigenvalue(op) <= 1 + 1e-10)


def test_reduced_density_examples(w_state):
    s = make_state([1, 0, 0, 0, 0, 0, 0, 0])
    for party in (1, 2, 3):
        np.testing.assert_allclose(reduced_density(s, party), np.diag([1, 0]))
    ev = np.linalg.eigvalsh(reduced_density(w_state, 1))
    np.testing.assert_allclose(ev, [1 / 3, 2 / 3], atol=1e-15)
    with pytest.raises(ValueError):
        reduced_density(s, 0)


@pytest.mark.parametrize("seed", range(20))
def test_reduced_density_is_a_density_matrix(seed):
    s = random_state(seed)
    for party in (1, 2, 3):
        rho = reduced_density(s, party)
        ev = np.linalg.eigvalsh(rho)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert ev.min() >= -1e-12 and ev.max() <= 1 + 1e-12


def test_reduced_density_party_labels():
    # |0> (x) |+> (x) |1>
    s = make_state(amps_from({"001": 1, "011": 1}))
    np.testing.assert_allclose(reduced_density(s, 1), np.diag([1, 0]), atol=1e-15)
    np.testing.assert_allclose(reduced_density(s, 2), np.full((2, 2), 0.5), atol=1e-15)
    np.testing.assert_allclose(reduced_density(s, 3), np.diag([0, 1]), atol=1e-15)


def test_rank_eps():
    assert rank_eps(np.diag([1, 0])) == 1
    assert rank_eps(np.diag([2 / 3, 1 / 3])) == 2
    assert rank_eps(np.diag([1 - 5e-9, 5e-9]), 1e-8) == 1
    with pytest.raises(ValueError):
        rank_eps(np.eye(2), 0)


def test_random_generators_are_deterministic():
    assert np.array_equal(random_state(5).amps, random_state(5).amps)
    assert np.array_equal(random_local_unitary(5, 1), random_local_unitary(5, 1))
    assert random_triangular_povm(5, 2) == random_triangular_povm(5, 2)
    assert np.array_equal(random_povm_element(5), random_povm_element(5))
    assert not np.array_equal(random_state(5).amps, random_state(6).amps)


@pytest.mark.parametrize("seed", range(50))
def test_random_generators_are_valid(seed):
    u = random_local_unitary(seed)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-12)
    for party in (1, 2, 3):
        assert povm_valid(random_triangular_povm(seed, party))
    assert is_valid_element(random_povm_element(seed))
