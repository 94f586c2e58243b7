"""Local-unitary canonical forms and SLOCC classification of three-qubit states.

The generic canonical form is

    l0|000> + l1 e^{i phi}|100> + l2|101> + l3|110> + l4|111>,  l_i >= 0,

reached by choosing the first party's basis so that the |0>-slice ``T0'`` of
the state becomes singular, then diagonalizing that slice with unitaries on
parties 2 and 3.  W-class states (``l4 = 0``) additionally have their
parties permuted so that ``l0 >= l2 >= l3``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateState, NotWClass
from .state import ThreeQubitState, make_state, rank_eps, reduced_density

__all__ = [
    "TANGLE_THRESHOLD",
    "RANK_THRESHOLD",
    "EntanglementClass",
    "CanonicalForm",
    "WCanonicalForm",
    "PERMUTATIONS",
    "t_matrices",
    "from_t_matrices",
    "pencil_coefficients",
    "canonicalize",
    "three_tangle",
    "tangle",
    "local_ranks",
    "classify",
    "w_canonicalize",
    "w_canonical_state",
    "random_w_lambdas",
    "permute_parties",
    "compose_perms",
    "invert_perm",
    "apply_unitaries",
]

TANGLE_THRESHOLD = 1e-8
RANK_THRESHOLD = 1e-8
DOUBLE_ROOT_TOL = 1e-10
COLLAPSE_TOL = 1e-12
CLAMP = 1e-12

# new party k is old party perm[k - 1]; identity first, then lexicographic
PERMUTATIONS: tuple[tuple[int, int, int], ...] = tuple(itertools.permutations((1, 2, 3)))
IDENTITY_PERM = (1, 2, 3)


class EntanglementClass(enum.Enum):
    GHZ = "GHZ"
    W = "W"
    BISEPARABLE_P1 = "BiseparableP1"
    BISEPARABLE_P2 = "BiseparableP2"
    BISEPARABLE_P3 = "BiseparableP3"
    PRODUCT = "Product"


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """Canonical coefficients plus the local unitaries realizing them.

    ``U1 (x) U2 (x) U3`` applied to the input state gives :meth:`vector`.
    """

    lambdas: tuple[float, float, float, float, float]
    phi: float
    U1: np.ndarray
    U2: np.ndarray
    U3: np.ndarray
    double_root: bool = False

    def __getattr__(self, name):
        if name.startswith("lambda") and name[6:].isdigit():
            return self.lambdas[int(name[6:])]
        raise AttributeError(name)

    def vector(self) -> np.ndarray:
        l0, l1, l2, l3, l4 = self.lambdas
        v = np.zeros(8, dtype=complex)
        v[0b000] = l0
        v[0b100] = l1 * np.exp(1j * self.phi)
        v[0b101] = l2
        v[0b110] = l3
        v[0b111] = l4
        return v

    @property
    def unitaries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.U1, self.U2, self.U3


@dataclass(frozen=True, eq=False)
class WCanonicalForm:
    """Ordered W-class canonical form ``l0|000> + l1|100> + l2|101> + l3|110>``.

    The input is first relabelled by ``perm`` (see :func:`permute_parties`)
    and then rotated by ``U1 (x) U2 (x) U3``.  ``residual`` is the size of
    the dropped |111> coefficient.
    """

    lambdas: tuple[float, float, float, float]
    perm: tuple[int, int, int]
    U1: np.ndarray
    U2: np.ndarray
    U3: np.ndarray
    residual: float = 0.0

    def __getattr__(self, name):
        if name.startswith("lambda") and name[6:].isdigit():
            return self.lambdas[int(name[6:])]
        raise AttributeError(name)

    @property
    def unitaries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.U1, self.U2, self.U3

    def vector(self) -> np.ndarray:
        return w_canonical_state(self.lambdas).amps.copy()

    def to_frame(self, state: ThreeQubitState) -> np.ndarray:
        """Amplitudes of ``state`` in this form's canonical frame."""
        return apply_unitaries(permute_parties(state, self.perm), *self.unitaries)

    @classmethod
    def from_lambdas(cls, lambdas) -> WCanonicalForm:
        """Form for a state that is already in ordered canonical form."""
        lam = tuple(float(x) for x in lambdas)
        if len(lam) != 4:
            raise ValueError("need four coefficients (l0, l1, l2, l3)")
        eye = np.eye(2, dtype=complex)
        return cls(lam, IDENTITY_PERM, eye, eye.copy(), eye.copy())


def t_matrices(state: ThreeQubitState) -> tuple[np.ndarray, np.ndarray]:
    """Slices ``T0[j, k] = <0jk|psi>`` and ``T1[j, k] = <1jk|psi>``."""
    t = state.tensor()
    return t[0].copy(), t[1].copy()


def from_t_matrices(T0, T1) -> np.ndarray:
    return np.concatenate([np.asarray(T0).reshape(4), np.asarray(T1).reshape(4)]).astype(complex)


def apply_unitaries(state: ThreeQubitState, U1, U2, U3) -> np.ndarray:
    return np.einsum("ia,jb,kc,abc->ijk", U1, U2, U3, state.tensor()).reshape(8)


def pencil_coefficients(T0, T1) -> tuple[complex, complex, complex]:
    """Coefficients of ``det(u T0 + v T1) = A u^2 + B u v + C v^2``."""
    A = T0[0, 0] * T0[1, 1] - T0[0, 1] * T0[1, 0]
    C = T1[0, 0] * T1[1, 1] - T1[0, 1] * T1[1, 0]
    B = T0[0, 0] * T1[1, 1] + T1[0, 0] * T0[1, 1] - T0[0, 1] * T1[1, 0] - T1[0, 1] * T0[1, 0]
    return complex(A), complex(B), complex(C)


def _pencil_roots(A: complex, B: complex, C: complex) -> tuple[list[np.ndarray], bool]:
    """Projective roots (u, v) of ``A u^2 + B u v + C v^2``.

    Roots are returned as unit vectors; ``u = 0`` or ``v = 0`` (a root at
    infinity of the ratio) come out naturally from the homogeneous form.
    """
    if max(abs(A), abs(B), abs(C)) < COLLAPSE_TOL:
        raise DegenerateState("determinant pencil vanishes identically")
    disc = B * B - 4 * A * C
    if abs(disc) <= DOUBLE_ROOT_TOL:
        cands = [np.array([-B, 2 * A]), np.array([2 * C, -B])]
        root = max(cands, key=np.linalg.norm)
        return [root / np.linalg.norm(root)], True
    sd = np.sqrt(disc)
    if (np.conj(B) * sd).real < 0:
        sd = -sd
    q = -(B + sd) / 2
    roots = [np.array([q, A]), np.array([C, q])]
    return [r / np.linalg.norm(r) for r in roots], False


def _form_from_root(T0, T1, root, double_root: bool) -> CanonicalForm:
    u00, u01 = root
    U1 = np.array([[u00, u01], [-np.conj(u01), np.conj(u00)]], dtype=complex)
    T0p = u00 * T0 + u01 * T1
    T1p = -np.conj(u01) * T0 + np.conj(u00) * T1
    W, s, Vh = np.linalg.svd(T0p)
    if s[0] < COLLAPSE_TOL:
        raise DegenerateState("first-party slice vanishes after the basis change")
    U2 = W.conj().T
    U3 = Vh.conj()
    T1pp = U2 @ T1p @ U3.T
    x, p, q, r = T1pp[0, 0], T1pp[0, 1], T1pp[1, 0], T1pp[1, 1]

    if double_root:
        # l4 vanishes, so the |100> phase can be absorbed as well
        gamma = -np.angle(x)
        beta = -np.angle(p) - gamma
        alpha = -np.angle(q) - gamma
        phi = 0.0
    else:
        gamma = np.angle(r) - np.angle(p) - np.angle(q)
        beta = -np.angle(p) - gamma
        alpha = -np.angle(q) - gamma
        phi = float(np.mod(np.angle(x) + gamma, 2 * np.pi)) if abs(x) > CLAMP else 0.0

    U1 = np.diag([1.0, np.exp(1j * gamma)]) @ U1
    U2 = np.diag([1.0, np.exp(1j * alpha)]) @ U2
    U3 = np.diag([1.0, np.exp(1j * beta)]) @ U3
    lam = tuple(0.0 if v < CLAMP else float(v) for v in (s[0], abs(x), abs(p), abs(q), abs(r)))
    return CanonicalForm(lam, phi, U1, U2, U3, double_root)


def canonicalize(state: ThreeQubitState) -> list[CanonicalForm]:
    """All canonical forms of ``state``: two for GHZ-class input, one for W class.

    Raises :class:`DegenerateState` when the construction collapses, which
    happens for product and biseparable states.
    """
    T0, T1 = t_matrices(state)
    roots, double = _pencil_roots(*pencil_coefficients(T0, T1))
    forms = [_form_from_root(T0, T1, r, double) for r in roots]
    forms.sort(key=lambda f: -f.lambdas[0])
    return forms


def three_tangle(cf: CanonicalForm) -> float:
    """``l0 * l4``; this is the unsquared convention."""
    return cf.lambdas[0] * cf.lambdas[4]


def tangle(state: ThreeQubitState) -> float:
    """Largest l0 * l4 over the canonical forms of ``state``; zero if degenerate."""
    try:
        return max(three_tangle(f) for f in canonicalize(state))
    except DegenerateState:
        return 0.0


def local_ranks(state: ThreeQubitState, eps: float = RANK_THRESHOLD) -> tuple[int, int, int]:
    return tuple(rank_eps(reduced_density(state, p), eps) for p in (1, 2, 3))


def classify(state: ThreeQubitState) -> EntanglementClass:
    if tangle(state) > TANGLE_THRESHOLD:
        return EntanglementClass.GHZ
    ranks = local_ranks(state)
    if all(r == 2 for r in ranks):
        return EntanglementClass.W
    if all(r == 1 for r in ranks):
        return EntanglementClass.PRODUCT
    return EntanglementClass(f"BiseparableP{ranks.index(1) + 1}")


def permute_parties(state: ThreeQubitState, perm) -> ThreeQubitState:
    """Relabel parties: new party ``k`` is old party ``perm[k - 1]``."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != [1, 2, 3]:
        raise ValueError(f"not a permutation of (1, 2, 3): {perm}")
    t = np.transpose(state.tensor(), [p - 1 for p in perm])
    return ThreeQubitState(t.reshape(8), state.norm_factor)


def compose_perms(first, second) -> tuple[int, int, int]:
    """Permutation equal to applying ``first`` and then ``second``."""
    return tuple(first[s - 1] for s in second)


def invert_perm(perm) -> tuple[int, int, int]:
    inv = [0, 0, 0]
    for k, p in enumerate(perm, start=1):
        inv[p - 1] = k
    return tuple(inv)


def w_canonical_state(lambdas) -> ThreeQubitState:
    l0, l1, l2, l3 = lambdas
    v = np.zeros(8, dtype=complex)
    v[0b000], v[0b100], v[0b101], v[0b110] = l0, l1, l2, l3
    return make_state(v)


def random_w_lambdas(seed, low: float = 0.1) -> tuple[float, float, float, float]:
    """Ordered W coefficients with every component bounded away from zero.

    Components are drawn uniformly from ``[low, 1]`` before normalizing, so
    the result stays comfortably inside the W class.
    """
    rng = np.random.default_rng(seed)
    v = rng.uniform(low, 1.0, size=4)
    return w_canonicalize(w_canonical_state(v / np.linalg.norm(v))).lambdas


def _ordering_perm(form: CanonicalForm) -> tuple[int, int, int]:
    # l0 belongs to party 1, l3 to party 2, l2 to party 3
    weight = {1: form.lambdas[0], 2: form.lambdas[3], 3: form.lambdas[2]}
    for perm in PERMUTATIONS:
        w1, w2, w3 = (weight[p] for p in perm)
        if w1 >= w3 - CLAMP and w3 >= w2 - CLAMP:
            return perm
    raise AssertionError("unreachable: some permutation sorts three numbers")


def w_canonicalize(state: ThreeQubitState) -> WCanonicalForm:
    """Ordered W canonical form (``l0 >= l2 >= l3``) of a W-class state."""
    cls = classify(state)
    if cls is not EntanglementClass.W:
        raise NotWClass(f"state is {cls.value}, not W class")
    form = canonicalize(state)[0]
    perm = _ordering_perm(form)
    if perm != IDENTITY_PERM:
        form = canonicalize(permute_parties(state, perm))[0]
    l0, l1, l2, l3, l4 = form.lambdas
    # noise-level violations of the ordering are snapped away
    l2 = min(l2, l0)
    l3 = min(l3, l2)
    return WCanonicalForm((l0, l1, l2, l3), perm, form.U1, form.U2, form.U3, l4)
