"""Three-qubit pure states, local operators and measurement probabilities.

Amplitudes are stored in the basis order ``i*4 + j*2 + k`` for ``|ijk>``,
party 1 being the leftmost label.  Local operators are plain 2x2 complex
numpy arrays; the real triangular measurement elements used throughout the
distillation code get their own small type, :class:`TriangularPovm`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidElement, ZeroBranch, ZeroVector

__all__ = [
    "POVM_TOL",
    "ThreeQubitState",
    "TriangularPovm",
    "PovmTriple",
    "make_state",
    "basis_index",
    "apply_local",
    "povm_expression",
    "povm_valid",
    "max_gram_eigenvalue",
    "is_valid_element",
    "reduced_density",
    "rank_eps",
    "fidelity",
    "random_state",
    "random_local_unitary",
    "random_triangular_povm",
    "random_povm_element",
]

POVM_TOL = 1e-10
ZERO_NORM = 1e-14
IDENTITY = np.eye(2, dtype=complex)


def basis_index(i: int, j: int, k: int) -> int:
    return 4 * i + 2 * j + k


@dataclass(frozen=True, eq=False)
class ThreeQubitState:
    """Normalized three-qubit pure state.

    ``norm_factor`` is the factor that was applied to the raw amplitudes to
    normalize them (1 for input that was already normalized).
    """

    amps: np.ndarray
    norm_factor: float = 1.0

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(8)
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    def tensor(self) -> np.ndarray:
        """Amplitudes as a (2, 2, 2) array indexed by party labels."""
        return self.amps.reshape(2, 2, 2)

    def __getitem__(self, label: str) -> complex:
        i, j, k = (int(ch) for ch in label)
        return complex(self.amps[basis_index(i, j, k)])

    def overlap(self, other: ThreeQubitState) -> complex:
        return complex(np.vdot(self.amps, other.amps))


def make_state(raw) -> ThreeQubitState:
    """Normalize eight raw amplitudes into a :class:`ThreeQubitState`."""
    raw = np.asarray(raw, dtype=complex).reshape(-1)
    if raw.shape != (8,):
        raise ValueError(f"expected 8 amplitudes, got {raw.size}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("amplitudes must be finite")
    norm = float(np.linalg.norm(raw))
    if norm < ZERO_NORM:
        raise ZeroVector("state vector has zero norm")
    factor = 1.0 / norm
    return ThreeQubitState(raw * factor, factor)


def _as_operator(op) -> np.ndarray:
    if isinstance(op, TriangularPovm):
        return op.matrix()
    m = np.asarray(op, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"local operator must be 2x2, got shape {m.shape}")
    return m


def apply_local(state: ThreeQubitState, A, B, C) -> tuple[ThreeQubitState, float]:
    """Apply ``A (x) B (x) C`` and renormalize.

    Returns the post-measurement state and the branch probability
    ``<psi| A^dag A (x) B^dag B (x) C^dag C |psi>``.
    """
    a, b, c = (_as_operator(op) for op in (A, B, C))
    out = np.einsum("ia,jb,kc,abc->ijk", a, b, c, state.tensor()).reshape(8)
    prob = float(np.vdot(out, out).real)
    if prob < ZERO_NORM:
        raise ZeroBranch(f"branch probability {prob:.3e} is zero")
    return ThreeQubitState(out / np.sqrt(prob)), prob


@dataclass(frozen=True)
class TriangularPovm:
    """Real triangular local measurement element.

    Party 1 elements are lower triangular, ``a|0><0| + off|1><0| + d|1><1|``;
    parties 2 and 3 are upper triangular, ``a|0><0| + off|0><1| + d|1><1|``.
    """

    party: int
    a: float
    off: float
    d: float

    def __post_init__(self):
        if self.party not in (1, 2, 3):
            raise ValueError(f"party must be 1, 2 or 3, got {self.party}")

    def matrix(self) -> np.ndarray:
        if self.party == 1:
            return np.array([[self.a, 0.0], [self.off, self.d]], dtype=complex)
        return np.array([[self.a, self.off], [0.0, self.d]], dtype=complex)

    @classmethod
    def identity(cls, party: int) -> TriangularPovm:
        return cls(party, 1.0, 0.0, 1.0)

    def is_identity(self, tol: float = 1e-12) -> bool:
        return abs(self.a - 1) <= tol and abs(self.off) <= tol and abs(self.d - 1) <= tol


@dataclass(frozen=True)
class PovmTriple:
    A: TriangularPovm
    B: TriangularPovm
    C: TriangularPovm

    def __iter__(self):
        return iter((self.A, self.B, self.C))

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.A.matrix(), self.B.matrix(), self.C.matrix()


def povm_expression(op: TriangularPovm) -> float:
    """Left-hand side of the closed-form validity inequality (valid iff <= 2)."""
    a, b, d = op.a, op.off, op.d
    return a * a + b * b + d * d + np.sqrt(((a - d) ** 2 + b * b) * ((a + d) ** 2 + b * b))


def povm_valid(op: TriangularPovm, tol: float = POVM_TOL) -> bool:
    return bool(povm_expression(op) <= 2.0 + tol)


def max_gram_eigenvalue(m) -> float:
    m = _as_operator(m)
    return float(np.linalg.eigvalsh(m.conj().T @ m)[-1])


def is_valid_element(m, tol: float = POVM_TOL) -> bool:
    return max_gram_eigenvalue(m) <= 1.0 + tol


def reduced_density(state: ThreeQubitState, party: int) -> np.ndarray:
    """Single-party reduced density matrix."""
    if party not in (1, 2, 3):
        raise ValueError(f"party must be 1, 2 or 3, got {party}")
    t = np.moveaxis(state.tensor(), party - 1, 0).reshape(2, 4)
    rho = t @ t.conj().T
    return (rho + rho.conj().T) / 2


def rank_eps(m, eps: float = 1e-8) -> int:
    if eps <= 0:
        raise ValueError("eps must be positive")
    return int(np.sum(np.linalg.eigvalsh(np.asarray(m)) > eps))


def fidelity(s1: ThreeQubitState, s2: ThreeQubitState) -> float:
    """Squared overlap; insensitive to global phase."""
    return abs(s1.overlap(s2)) ** 2


def random_state(seed) -> ThreeQubitState:
    """Haar-random state from normalized complex Gaussian amplitudes."""
    rng = np.random.default_rng(seed)
    return make_state(rng.standard_normal(8) + 1j * rng.standard_normal(8))


def random_local_unitary(seed, party: int | None = None) -> np.ndarray:
    """Haar-random 2x2 unitary.  ``party`` only labels the call site."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_triangular_povm(seed, party: int) -> TriangularPovm:
    """Random real triangular element rescaled into the valid region.

    The largest Gram eigenvalue of the result is uniform on [1e-3, 1].
    """
    rng = np.random.default_rng(seed)
    a, d = rng.uniform(0.0, 1.0, size=2)
    off = rng.uniform(-1.0, 1.0)
    op = TriangularPovm(party, a, off, d)
    scale = np.sqrt(rng.uniform(1e-3, 1.0) / max_gram_eigenvalue(op))
    return TriangularPovm(party, a * scale, off * scale, d * scale)


def random_povm_element(seed) -> np.ndarray:
    """Random complex 2x2 element with largest Gram eigenvalue uniform on [1e-3, 1]."""
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    target = rng.uniform(1e-3, 1.0)
    m = m * np.sqrt(target / max_gram_eigenvalue(m))
    if not is_valid_element(m):
        raise InvalidElement("rescaling failed")
    return m
