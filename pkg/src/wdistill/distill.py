"""Optimal single-copy distillation of W states from W-class states.

Both targets are reached by a one-successful-branch protocol (OSBP): every
local element saturates ``det(I - X^dag X) = 0`` and party 2 stays passive.
In the canonical frame of the input

    l0|000> + l1|100> + l2|101> + l3|110>,   l0 >= l2 >= l3,

the target coefficient ratios fix ``d1`` and ``d3`` as functions of ``a1``
and ``y = a3**2``, and the annihilation of the |100> coefficient fixes
``a1``.  The success probability is ``w * l0**2 * a1**2 * y`` with weight
``w = 2`` (asymmetric target) or ``w = 3`` (symmetric target).

Two independent routes evaluate the optimum curve ``P(y)``: the closed-form
expression in :func:`asym_curve_closed` / :func:`sym_curve_closed`, and the
root-finding construction in :func:`curve_constructive`.  Maximization runs
on the constructive curve.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .canonical import WCanonicalForm, w_canonicalize
from .errors import ConstructionMismatch, DomainError, NoRoot, OutOfRange, PreconditionError
from .state import (
    PovmTriple,
    ThreeQubitState,
    TriangularPovm,
    apply_local,
    povm_valid,
)

__all__ = [
    "TargetKind",
    "KReading",
    "AsymCurveTerms",
    "SymCurveTerms",
    "CurvePoint",
    "MaxResult",
    "DistillationPlan",
    "ProbabilityCurve",
    "asym_curve_terms",
    "sym_curve_terms",
    "asym_curve_closed",
    "sym_curve_closed",
    "curve_closed",
    "curve_constructive",
    "constructive_curve_values",
    "maximize",
    "build_plan",
    "special_case_lambda1_zero",
    "sample_curve",
]

SCAN_POINTS = 1024
GOLDEN_TOL = 1e-10
RESIDUAL_TOL = 1e-12
VALIDATION_TOL = 1e-9
RADICAND_TOL = 1e-10
LAMBDA1_ZERO = 1e-12


class TargetKind(enum.Enum):
    ASYMMETRIC = "asym"
    SYMMETRIC = "sym"

    @property
    def ratio(self) -> float:
        """Ratio of the |000> coefficient to the |101> and |110> ones."""
        return math.sqrt(2.0) if self is TargetKind.ASYMMETRIC else 1.0

    @property
    def weight(self) -> float:
        return 2.0 if self is TargetKind.ASYMMETRIC else 3.0

    @property
    def target_lambdas(self) -> tuple[float, float, float, float]:
        if self is TargetKind.ASYMMETRIC:
            return (1 / math.sqrt(2.0), 0.0, 0.5, 0.5)
        s = 1 / math.sqrt(3.0)
        return (s, 0.0, s, s)


class KReading(enum.Enum):
    """How to read the closed-form P(y) expressions.

    ``AS_PRINTED``: radicand ``l2 - l3**2 y`` with the uncorrected K-linear signs.
    ``SQUARED``: radicand ``l2**2 - l3**2 y``, uncorrected K-linear signs.
    ``CORRECTED``: squared radicand, and the ``l3`` K-linear terms of L (R)
    carry the sign that makes ``L + M`` equal the squared prefactor minus
    ``8 l0^2 l3^2 y^2`` (``4 l0^2 l3^2 y^2`` for the symmetric target).
    """

    AS_PRINTED = "as-printed"
    SQUARED = "squared"
    CORRECTED = "corrected"


@dataclass(frozen=True)
class AsymCurveTerms:
    K: float
    L: float
    M: float


@dataclass(frozen=True)
class SymCurveTerms:
    Q: float
    R: float
    S: float


@dataclass(frozen=True)
class CurvePoint:
    a1: float
    povms: PovmTriple
    p: float
    residual: float


@dataclass(frozen=True)
class MaxResult:
    y_star: float
    p_star: float

    def __iter__(self):
        return iter((self.y_star, self.p_star))


@dataclass(frozen=True)
class ProbabilityCurve:
    target: TargetKind
    samples: tuple[tuple[float, float], ...]
    omitted: int = 0

    @property
    def y(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def p(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])


@dataclass(frozen=True, eq=False)
class DistillationPlan:
    """Optimal protocol for one input state.

    ``povms`` act in the canonical frame; ``composed_ops`` are indexed by the
    parties of the raw input and already include the frame change.
    """

    target: TargetKind
    lambdas: WCanonicalForm
    y_star: float
    p_star: float
    povms: PovmTriple
    composed_ops: tuple[np.ndarray, np.ndarray, np.ndarray]
    predicted_output: ThreeQubitState
    prob_error: float
    target_error: float


def _lams(lam) -> tuple[float, float, float, float]:
    if isinstance(lam, WCanonicalForm):
        return lam.lambdas
    l0, l1, l2, l3 = (float(x) for x in lam)
    return l0, l1, l2, l3


def _check_y(y: float) -> float:
    y = float(y)
    if not 0.0 < y <= 1.0:
        raise OutOfRange(f"y must lie in (0, 1], got {y}")
    return y


def _check_lams(l0, l2, l3):
    if min(l0, l2, l3) <= 0:
        raise PreconditionError("W-class coefficients need l0, l2, l3 > 0")


def _k_term(l1, l2, l3, y, variant: KReading) -> float:
    inner = (l2 if variant is KReading.AS_PRINTED else l2 * l2) - l3 * l3 * y
    radicand = y * (1 - y) * inner
    if radicand < -RADICAND_TOL:
        raise DomainError(f"negative radicand {radicand:.3e} in K")
    return l1 * math.sqrt(max(radicand, 0.0))


def asym_curve_terms(lam, y: float, variant: KReading = KReading.CORRECTED) -> AsymCurveTerms:
    l0, l1, l2, l3 = _lams(lam)
    _check_lams(l0, l2, l3)
    y = _check_y(y)
    K = _k_term(l1, l2, l3, y, variant)
    sign = 1.0 if variant is KReading.CORRECTED else -1.0
    L = (
        l2**4 * (1 - y) ** 2
        + l0**4 * y**2
        + l1**4 * y**2
        - 2 * l1**2 * l3**2 * y**2
        + l3**4 * y**2
        + 6 * l1**2 * l3**2 * y**3
        + 2 * l3**4 * y**3
        + l3**4 * y**4
        - 4 * y * (l1**2 + sign * (l3**2 + l3**2 * y)) * K
    )
    M = 2 * l2**2 * (1 - y) * (
        l0**2 * y + 3 * l1**2 * y + l3**2 * y + l3**2 * y**2 - 2 * K
    ) + 2 * l0**2 * (l1**2 * y**2 + l3**2 * (y - 3) * y**2 - 2 * y * K)
    return AsymCurveTerms(K, L, M)


def sym_curve_terms(lam, y: float, variant: KReading = KReading.CORRECTED) -> SymCurveTerms:
    l0, l1, l2, l3 = _lams(lam)
    _check_lams(l0, l2, l3)
    y = _check_y(y)
    Q = _k_term(l1, l2, l3, y, variant)
    sign = -1.0 if variant is KReading.CORRECTED else 1.0
    R = (
        l2**4 * (1 - y) ** 2
        + l0**4 * y**2
        + l1**4 * y**2
        - 4 * l1**2 * l3**2 * y**2
        + 6 * l1**2 * l3**2 * y**3
        + l3**4 * y**4
        - 4 * l1**2 * y * Q
        + sign * 4 * l3**2 * y**2 * Q
    )
    S = 2 * l2**2 * (1 - y) * (l0**2 * y + 3 * l1**2 * y + l3**2 * y**2 - 2 * Q) + l0**2 * (
        2 * l1**2 * y**2 + 2 * l3**2 * (y - 2) * y**2 - 4 * y * Q
    )
    return SymCurveTerms(Q, R, S)


def _sqrt_clamped(x: float, what: str) -> float:
    if x < -RADICAND_TOL:
        raise DomainError(f"{what} = {x:.3e} is negative")
    return math.sqrt(max(x, 0.0))


def asym_curve_closed(lam, y: float, variant: KReading = KReading.CORRECTED) -> float:
    """Closed-form optimal probability of the asymmetric target at ``y = a3**2``."""
    l0, l1, l2, l3 = _lams(lam)
    t = asym_curve_terms((l0, l1, l2, l3), y, variant)
    root = _sqrt_clamped(t.L + t.M, "L + M")
    return (
        l2**2 + l0**2 * y + l1**2 * y - l2**2 * y + l3**2 * y + l3**2 * y**2 - 2 * t.K - root
    )


def sym_curve_closed(lam, y: float, variant: KReading = KReading.CORRECTED) -> float:
    """Closed-form optimal probability of the symmetric target at ``y = a3**2``."""
    l0, l1, l2, l3 = _lams(lam)
    t = sym_curve_terms((l0, l1, l2, l3), y, variant)
    root = _sqrt_clamped(t.R + t.S, "R + S")
    return 1.5 * (l2**2 + l0**2 * y + l1**2 * y - l2**2 * y + l3**2 * y**2 - 2 * t.Q - root)


def curve_closed(lam, y: float, target: TargetKind, variant: KReading = KReading.CORRECTED) -> float:
    if target is TargetKind.ASYMMETRIC:
        return asym_curve_closed(lam, y, variant)
    return sym_curve_closed(lam, y, variant)


# -- constructive route ------------------------------------------------------
#
# With a1 = a1max * cos(theta) the off-diagonal c1 = s * sin(theta) *
# sqrt(1 - m**2 cos(theta)**2) is smooth at theta = 0, so bisection in theta
# reaches residuals at rounding level even when the root sits at a1max.


def _geometry(l0, l2, l3, y, target: TargetKind):
    k = l0 / (target.ratio * l3)  # d1 = k * a1
    a1max = min(1.0, 1.0 / k)
    m = min(k, 1.0 / k)
    a3 = np.sqrt(y)
    d3 = l3 * a3 / l2
    b3 = -np.sqrt(np.maximum((1 - y) * (1 - d3 * d3), 0.0))
    return k, a1max, m, a3, d3, b3


def _residual(theta, s, l0, l1, l2, k, a1max, m, a3, b3):
    ct = np.cos(theta)
    a1 = a1max * ct
    d1 = k * a1
    c1 = s * np.sin(theta) * np.sqrt(np.maximum(1 - m * m * ct * ct, 0.0))
    return (l0 * c1 + l1 * d1) * a3 + l2 * d1 * b3, a1, c1, d1


def constructive_curve_values(lam, y, target: TargetKind, iters: int = 64):
    """Vectorized constructive P(y); returns ``(p, a1, residual)`` arrays."""
    l0, l1, l2, l3 = _lams(lam)
    _check_lams(l0, l2, l3)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    k, a1max, m, a3, d3, b3 = _geometry(l0, l2, l3, y, target)
    # sign of c1: at a1max the residual is d1 a3 (l1 - g); choose the branch
    # whose residual changes sign on (0, a1max]
    r_top = (l1 * k * a1max) * a3 + l2 * k * a1max * b3
    s = np.where(r_top <= 0, 1.0, -1.0)
    lo = np.zeros_like(y)  # theta = 0, a1 = a1max
    hi = np.full_like(y, np.pi / 2)  # a1 = 0, residual = s * l0 * a3
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        r, *_ = _residual(mid, s, l0, l1, l2, k, a1max, m, a3, b3)
        # residual has the sign of s at theta = pi/2
        move_hi = (r * s) > 0
        hi = np.where(move_hi, mid, hi)
        lo = np.where(move_hi, lo, mid)
    r_lo, a1, *_ = _residual(lo, s, l0, l1, l2, k, a1max, m, a3, b3)
    exact_top = r_top == 0
    a1 = np.where(exact_top, a1max, a1)
    r_lo = np.where(exact_top, 0.0, r_lo)
    p = target.weight * l0 * l0 * a1 * a1 * y
    return p, a1, r_lo


def _scalar_root(l0, l1, l2, l3, y, target: TargetKind):
    """Scalar twin of :func:`constructive_curve_values` (pure ``math``)."""
    k = l0 / (target.ratio * l3)
    a1max = min(1.0, 1.0 / k)
    m = min(k, 1.0 / k)
    a3 = math.sqrt(y)
    d3 = l3 * a3 / l2
    b3 = -math.sqrt(max((1 - y) * (1 - d3 * d3), 0.0))
    r_top = (l1 * k * a1max) * a3 + l2 * k * a1max * b3
    s = 1.0 if r_top <= 0 else -1.0

    def residual(theta):
        ct = math.cos(theta)
        a1 = a1max * ct
        d1 = k * a1
        c1 = s * math.sin(theta) * math.sqrt(max(1 - m * m * ct * ct, 0.0))
        return (l0 * c1 + l1 * d1) * a3 + l2 * d1 * b3, a1, c1, d1

    if r_top == 0:
        theta = 0.0
    else:
        lo, hi = 0.0, math.pi / 2
        if residual(hi)[0] * s <= 0 or not math.isfinite(r_top):
            raise NoRoot(f"annihilation condition has no root at y={y}")
        while True:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if residual(mid)[0] * s > 0:
                hi = mid
            else:
                lo = mid
        theta = lo
    r, a1, c1, d1 = residual(theta)
    return a1, c1, d1, a3, b3, d3, r


def curve_constructive(lam, y: float, target: TargetKind) -> CurvePoint:
    """Construct the OSBP elements at ``y = a3**2`` and their success probability.

    Party 2 is fixed to the identity; ``b3 <= 0`` and the sign of ``c1`` is
    whichever admits a root of the |100> annihilation condition.
    """
    l0, l1, l2, l3 = _lams(lam)
    _check_lams(l0, l2, l3)
    y = _check_y(y)
    a1, c1, d1, a3, b3, d3, r = _scalar_root(l0, l1, l2, l3, y, target)
    if abs(r) > RESIDUAL_TOL:
        raise NoRoot(f"residual {r:.3e} above tolerance at y={y}")
    povms = PovmTriple(
        TriangularPovm(1, a1, c1, d1),
        TriangularPovm.identity(2),
        TriangularPovm(3, a3, b3, d3),
    )
    p = target.weight * l0 * l0 * a1 * a1 * y
    return CurvePoint(a1, povms, p, r)


def _p_scalar(l0, l1, l2, l3, y, target) -> float:
    a1 = _scalar_root(l0, l1, l2, l3, y, target)[0]
    return target.weight * l0 * l0 * a1 * a1 * y


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1) / 2
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def maximize(lam, target: TargetKind) -> MaxResult:
    """Maximize the constructive curve over ``y`` in (0, 1].

    A dense scan locates the best bracket, golden-section search refines it,
    and the endpoint ``y = 1`` is always a candidate.
    """
    l0, l1, l2, l3 = _lams(lam)
    _check_lams(l0, l2, l3)
    ys = np.arange(1, SCAN_POINTS + 1) / SCAN_POINTS
    ps, _, _ = constructive_curve_values((l0, l1, l2, l3), ys, target, iters=40)
    i = int(np.argmax(ps))
    lo = ys[i - 1] if i > 0 else ys[0] / 2
    hi = ys[i + 1] if i + 1 < SCAN_POINTS else 1.0

    def f(y):
        return _p_scalar(l0, l1, l2, l3, y, target)

    y_gs, p_gs = _golden_max(f, lo, hi, GOLDEN_TOL)
    p_one = f(1.0)
    if p_one >= p_gs:
        return MaxResult(1.0, float(p_one))
    return MaxResult(float(y_gs), float(p_gs))


def special_case_lambda1_zero(lam, target: TargetKind) -> tuple[float, PovmTriple]:
    """Closed-form optimum and elements when ``l1 = 0`` (attained at ``y = 1``)."""
    l0, l1, l2, l3 = _lams(lam)
    _check_lams(l0, l2, l3)
    if l1 >= LAMBDA1_ZERO:
        raise PreconditionError(f"l1 = {l1:.3e} is not zero")
    C = TriangularPovm(3, 1.0, 0.0, l3 / l2)
    B = TriangularPovm.identity(2)
    if target is TargetKind.ASYMMETRIC:
        p = l0**2 + 2 * l3**2 - abs(l0**2 - 2 * l3**2)
        if math.sqrt(2) * l3 <= l0:
            A = TriangularPovm(1, math.sqrt(2) * l3 / l0, 0.0, 1.0)
        else:
            A = TriangularPovm(1, 1.0, 0.0, l0 / (math.sqrt(2) * l3))
    else:
        p = 3 * l3**2
        A = TriangularPovm(1, l3 / l0, 0.0, 1.0)
    return p, PovmTriple(A, B, C)


def sample_curve(lam, target: TargetKind, n: int) -> ProbabilityCurve:
    """Constructive P(y) at ``y = i/n`` for ``i = 1..n``."""
    if n < 2:
        raise ValueError("need at least two samples")
    l0, l1, l2, l3 = _lams(lam)
    samples, omitted = [], 0
    for i in range(1, n + 1):
        y = i / n
        try:
            samples.append((y, curve_constructive((l0, l1, l2, l3), y, target).p))
        except NoRoot:
            omitted += 1
    return ProbabilityCurve(target, tuple(samples), omitted)


def compose_ops(form: WCanonicalForm, povms: PovmTriple) -> tuple[np.ndarray, ...]:
    """Frame-changed elements indexed by the raw input's parties."""
    ops = [None, None, None]
    for k, (X, U) in enumerate(zip(povms.matrices(), form.unitaries)):
        ops[form.perm[k] - 1] = X @ U
    return tuple(ops)


def build_plan(state: ThreeQubitState, target: TargetKind) -> DistillationPlan:
    form = w_canonicalize(state)
    y_star, p_star = maximize(form, target)
    point = curve_constructive(form, y_star, target)
    if not all(povm_valid(op) for op in point.povms):
        raise ConstructionMismatch("constructed element violates the validity bound")
    ops = compose_ops(form, point.povms)
    out, prob = apply_local(state, *ops)
    prob_error = abs(prob - p_star)
    try:
        got = w_canonicalize(out).lambdas
    except Exception as exc:  # noqa: BLE001 - any failure here is a construction bug
        raise ConstructionMismatch(f"output is not a W-class state: {exc}") from exc
    target_error = float(np.max(np.abs(np.subtract(got, target.target_lambdas))))
    if prob_error > VALIDATION_TOL or target_error > VALIDATION_TOL:
        raise ConstructionMismatch(
            f"validation failed: prob_error={prob_error:.3e}, target_error={target_error:.3e}"
        )
    return DistillationPlan(
        target, form, y_star, p_star, point.povms, ops, out, prob_error, target_error
    )
