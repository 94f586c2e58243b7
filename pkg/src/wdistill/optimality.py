"""Independent checks of the distillation optimum.

* :func:`oracle_max` searches the whole one-successful-branch parameter
  space (party 2 included) with random restarts and derivative-free
  coordinate descent, scoring candidates by dense matrix application.
* :func:`two_outcome_split_test` checks ``P(psi) >= p1 P(psi1) + p2 P(psi2)``
  for a two-outcome measurement on party 1.
* :func:`reduce_general_povm` maps an arbitrary complex first-party element
  onto the real lower-triangular one with the same effect on a canonical
  state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .canonical import EntanglementClass, WCanonicalForm, classify, w_canonical_state, w_canonicalize
from .distill import TargetKind, maximize
from .errors import DegenerateOperator, InvalidElement
from .state import ThreeQubitState, TriangularPovm, is_valid_element

__all__ = [
    "GeneralPovm",
    "SplitTestRecord",
    "OptimalityReport",
    "oracle_max",
    "optimal_probability",
    "positive_completion",
    "two_outcome_split_test",
    "reduce_general_povm",
    "random_general_povm",
]

PENALTY = 1e6
STEP_START = 0.25
STEP_STOP = 1e-9
MAX_EVALS = 50_000
SPLIT_TOL = 1e-8
LOWER = 1e-6
IMPROVE_TOL = 1e-15


# -- brute-force oracle --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OptimalityReport:
    lam: tuple[float, float, float, float]
    target: TargetKind
    p_closed: float
    p_oracle: float
    gap: float
    restarts: int
    seed: int
    infeasible_restarts: int = 0
    best_entries: tuple[float, ...] = ()
    party2_deviation: float = float("nan")
    evaluations: int = 0

    @property
    def party2_passive(self) -> bool:
        return self.party2_deviation <= 1e-4


def _osbp_elements(x, s2, s3, lam, target: TargetKind):
    """Elements on the OSBP manifold for free parameters ``x = (a2, d2, a3)``.

    Returns the nine entries (each shaped like ``x[:, 0]``) and a constraint
    violation measure that is zero on the feasible set.
    """
    l0, l1, l2, l3 = lam
    a2, d2, a3 = x[:, 0], x[:, 1], x[:, 2]
    b2 = s2 * np.sqrt(np.maximum((1 - a2 * a2) * (1 - d2 * d2), 0.0))
    # equal |101> and |110> magnitudes
    d3 = l3 * d2 * a3 / (l2 * a2)
    viol = np.maximum(d3 - 1.0, 0.0)
    b3 = s3 * np.sqrt(np.maximum((1 - a3 * a3) * (1 - d3 * d3), 0.0))
    # |000> equal to ratio * |110|
    kappa = l0 * a2 / (target.ratio * l3 * d2)
    # |100> annihilation: l0 c1 / d1 = -G
    G = l1 + l2 * b3 / a3 + l3 * b2 / a2
    s1 = np.where(G > 0, -1.0, 1.0)
    lin = l0 * l0 * (1 + kappa * kappa) + kappa * kappa * G * G
    disc = np.maximum(lin * lin - 4 * l0**4 * kappa * kappa, 0.0)
    u = 2 * l0 * l0 / (lin + np.sqrt(disc))  # smaller root, largest feasible a1
    a1 = np.sqrt(u)
    d1 = kappa * a1
    c1 = s1 * np.sqrt(np.maximum((1 - u) * (1 - d1 * d1), 0.0))
    return (a1, c1, d1, a2, b2, d2, a3, b3, d3), viol


def _dense_score(entries, psi, target: TargetKind):
    """Success probability and target mismatch via explicit operator products."""
    a1, c1, d1, a2, b2, d2, a3, b3, d3 = entries
    n = a1.shape[0]
    A = np.zeros((n, 2, 2))
    B = np.zeros((n, 2, 2))
    C = np.zeros((n, 2, 2))
    A[:, 0, 0], A[:, 1, 0], A[:, 1, 1] = a1, c1, d1
    B[:, 0, 0], B[:, 0, 1], B[:, 1, 1] = a2, b2, d2
    C[:, 0, 0], C[:, 0, 1], C[:, 1, 1] = a3, b3, d3
    t = np.matmul(psi.reshape(4, 2), C.transpose(0, 2, 1))  # (n, ab, k)
    t = np.matmul(B[:, None], t.reshape(n, 2, 2, 2))  # (n, a, j, k)
    out = np.matmul(A, t.reshape(n, 2, 4)).reshape(n, 8)
    prob = np.einsum("ni,ni->n", out, out)
    mag = np.abs(out)
    mismatch = (
        np.abs(mag[:, 0b000] - target.ratio * mag[:, 0b101])
        + np.abs(mag[:, 0b101] - mag[:, 0b110])
        + mag[:, 0b100]
        + mag[:, [0b001, 0b010, 0b011, 0b111]].sum(axis=1)
    )
    return prob, mismatch


def oracle_max(lam, target: TargetKind, restarts: int = 1000, seed: int = 0) -> OptimalityReport:
    """Random-restart search for the best OSBP success probability.

    Each restart starts from a random feasible point and runs coordinate
    descent with shrinking steps on ``P - 1e6 * violation``.  Restarts are
    advanced together as one vectorized batch; the result does not depend
    on their order and ties go to the lowest restart index.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    lam = lam.lambdas if isinstance(lam, WCanonicalForm) else tuple(float(v) for v in lam)
    psi = w_canonical_state(lam).tensor().real
    rng = np.random.default_rng(seed)

    n = restarts
    x = rng.uniform(LOWER, 1.0, size=(n, 3))
    s2 = rng.choice([-1.0, 1.0], size=n)
    s3 = rng.choice([-1.0, 1.0], size=n)

    def objective(pts, idx=slice(None)):
        entries, viol = _osbp_elements(pts, s2[idx], s3[idx], lam, target)
        prob, mismatch = _dense_score(entries, psi, target)
        return prob - PENALTY * (viol + mismatch), viol

    # redraw infeasible starting points a bounded number of times
    _, viol = objective(x)
    for _ in range(50):
        bad = viol > 0
        if not bad.any():
            break
        x[bad] = rng.uniform(LOWER, 1.0, size=(int(bad.sum()), 3))
        _, viol = objective(x)
    infeasible_start = viol > 0

    f, _ = objective(x)
    step = np.full(n, STEP_START)
    evals = 1
    while evals < MAX_EVALS:
        active = np.flatnonzero(step >= STEP_STOP)
        if active.size == 0:
            break
        xa, fa = x[active], f[active]
        improved = np.zeros(active.size, dtype=bool)
        for i in range(3):
            for sign in (1.0, -1.0):
                trial = xa.copy()
                trial[:, i] = np.clip(trial[:, i] + sign * step[active], LOWER, 1.0)
                ft, _ = objective(trial, active)
                evals += 1
                better = ft > fa + IMPROVE_TOL
                xa[better] = trial[better]
                fa[better] = ft[better]
                improved |= better
        x[active], f[active] = xa, fa
        step[active] = np.where(improved, step[active], step[active] / 2)

    entries, viol = _osbp_elements(x, s2, s3, lam, target)
    prob, mismatch = _dense_score(entries, psi, target)
    feasible = (viol <= 1e-12) & (mismatch <= 1e-9) & ~infeasible_start
    if not feasible.any():
        raise RuntimeError("oracle found no feasible point")
    score = np.where(feasible, prob, -np.inf)
    best = int(np.argmax(score))
    best_entries = tuple(float(e[best]) for e in entries)
    a2, b2, d2 = best_entries[3:6]
    p_closed = maximize(lam, target).p_star
    p_oracle = float(prob[best])
    return OptimalityReport(
        lam=lam,
        target=target,
        p_closed=p_closed,
        p_oracle=p_oracle,
        gap=p_oracle - p_closed,
        restarts=restarts,
        seed=seed,
        infeasible_restarts=int((~feasible).sum()),
        best_entries=best_entries,
        party2_deviation=max(abs(a2 - 1), abs(b2), abs(d2 - 1)),
        evaluations=evals,
    )


# -- two-outcome split test ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class SplitTestRecord:
    A1: np.ndarray
    A2: np.ndarray
    p1: float
    p2: float
    P_parent: float
    P1: float
    P2: float
    lhs: float
    rhs: float
    holds: bool


def optimal_probability(state: ThreeQubitState, target: TargetKind) -> float:
    """Optimal OSBP success probability; zero for inputs outside the W class."""
    if classify(state) is not EntanglementClass.W:
        return 0.0
    return maximize(w_canonicalize(state), target).p_star


def positive_completion(A1) -> np.ndarray:
    """Positive square root of ``I - A1^dag A1``."""
    A1 = np.asarray(A1, dtype=complex)
    m = np.eye(2) - A1.conj().T @ A1
    m = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.conj().T


def _branch(state: ThreeQubitState, op) -> tuple[float, ThreeQubitState | None]:
    out = np.einsum("ia,abc->ibc", op, state.tensor()).reshape(8)
    p = float(np.vdot(out, out).real)
    if p < 1e-14:
        return p, None
    return p, ThreeQubitState(out / math.sqrt(p))


def two_outcome_split_test(
    state: ThreeQubitState,
    A1,
    target: TargetKind,
    A2=None,
    parent_probability: float | None = None,
) -> SplitTestRecord:
    """Compare the single-branch optimum with the average after splitting party 1.

    ``A2`` defaults to :func:`positive_completion`; any other completion
    with the same ``A2^dag A2`` gives the same record.
    """
    A1 = np.asarray(A1, dtype=complex)
    if A1.shape != (2, 2) or not is_valid_element(A1):
        raise InvalidElement("A1 is not a valid measurement element")
    A2 = positive_completion(A1) if A2 is None else np.asarray(A2, dtype=complex)
    lhs = optimal_probability(state, target) if parent_probability is None else parent_probability
    p1, s1 = _branch(state, A1)
    p2, s2 = _branch(state, A2)
    P1 = optimal_probability(s1, target) if s1 is not None else 0.0
    P2 = optimal_probability(s2, target) if s2 is not None else 0.0
    rhs = p1 * P1 + p2 * P2
    return SplitTestRecord(A1, A2, p1, p2, lhs, P1, P2, lhs, rhs, bool(rhs <= lhs + SPLIT_TOL))


# -- general element reduction ---------------------------------------------


@dataclass(frozen=True)
class GeneralPovm:
    """``e^{i t1} a|0><0| + e^{i t2} b|0><1| + e^{i t3} c|1><0| + e^{i t4} d|1><1|``."""

    a: float
    b: float
    c: float
    d: float
    theta: tuple[float, float, float, float] = field(default=(0.0, 0.0, 0.0, 0.0))

    def matrix(self) -> np.ndarray:
        t1, t2, t3, t4 = self.theta
        return np.array(
            [
                [self.a * np.exp(1j * t1), self.b * np.exp(1j * t2)],
                [self.c * np.exp(1j * t3), self.d * np.exp(1j * t4)],
            ]
        )


def random_general_povm(seed) -> GeneralPovm:
    rng = np.random.default_rng(seed)
    a, b, c, d = rng.uniform(0, 1, size=4)
    theta = tuple(rng.uniform(0, 2 * np.pi, size=4))
    g = GeneralPovm(a, b, c, d, theta)
    m = g.matrix()
    top = np.linalg.eigvalsh(m.conj().T @ m)[-1]
    scale = math.sqrt(rng.uniform(1e-2, 1.0) / top)
    return GeneralPovm(a * scale, b * scale, c * scale, d * scale, theta)


def reduce_general_povm(Aprime: GeneralPovm, lam) -> TriangularPovm:
    """Real lower-triangular element equivalent to ``Aprime`` on the canonical state."""
    l0, l1 = (lam.lambdas if isinstance(lam, WCanonicalForm) else lam)[:2]
    a, b, c, d = Aprime.a, Aprime.b, Aprime.c, Aprime.d
    t1, t2, t3, t4 = Aprime.theta
    norm2 = b * b + d * d
    if norm2 <= 1e-14:
        raise DegenerateOperator("b^2 + d^2 vanishes")
    n = math.sqrt(norm2)
    diag0 = abs(np.exp(1j * (t1 + t4)) * a * d - np.exp(1j * (t2 + t3)) * b * c) / n
    z = np.exp(1j * (t1 - t2)) * a * b + np.exp(1j * (t3 - t4)) * c * d
    off = abs(z / n + l1 * n / l0) - l1 * n / l0
    return TriangularPovm(1, float(diag0), float(off), n)
