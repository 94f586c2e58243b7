"""Compare the closed-form P(y) readings against the constructive curve and the oracle.

Every reading of :class:`~wdistill.distill.KReading` is evaluated on a
uniform ``y`` grid for a batch of random W-class coefficient vectors.  The
constructive curve is the pointwise reference; the oracle maximum is the
reference for the optimum itself.  The reading with the smallest worst-case
pointwise error is adopted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .canonical import random_w_lambdas
from .distill import (
    KReading,
    TargetKind,
    _golden_max,
    constructive_curve_values,
    curve_closed,
    maximize,
)
from .errors import DomainError
from .optimality import oracle_max

__all__ = ["InstanceResult", "AdjudicationResult", "adjudicate"]

GRID_POINTS = 512
AGREE_TOL = 1e-9
ORACLE_TOL = 1e-6


@dataclass(frozen=True)
class InstanceResult:
    lam: tuple[float, float, float, float]
    target: TargetKind
    p_constructive: float
    y_star: float
    p_oracle: float
    # per reading: worst pointwise error, refined maximum, domain-error count
    max_error: dict
    reading_max: dict
    domain_errors: dict


@dataclass(frozen=True)
class AdjudicationResult:
    seed: int
    restarts: int
    grid_points: int
    instances: tuple[InstanceResult, ...] = field(default_factory=tuple)

    def worst_error(self, reading: KReading) -> float:
        return max(r.max_error[reading] for r in self.instances)

    def domain_error_count(self, reading: KReading) -> int:
        return sum(r.domain_errors[reading] for r in self.instances)

    def agreeing(self, reading: KReading) -> int:
        return sum(
            r.max_error[reading] <= AGREE_TOL and r.domain_errors[reading] == 0
            for r in self.instances
        )

    def oracle_exceeds(self, reading: KReading) -> int:
        """Instances where the oracle beats the reading's maximum."""
        return sum(r.p_oracle > r.reading_max[reading] + ORACLE_TOL for r in self.instances)

    @property
    def adopted(self) -> KReading:
        return min(KReading, key=lambda k: (self.domain_error_count(k) > 0, self.worst_error(k)))

    @property
    def max_oracle_gap(self) -> float:
        return max(r.p_oracle - r.p_constructive for r in self.instances)

    def to_markdown(self) -> str:
        n = len(self.instances)
        lines = [
            "# Closed-form reading adjudication",
            "",
            f"Generated by `wdistill adjudicate --lambdas {len(self.instances) // 2} --seed {self.seed} --restarts {self.restarts}`.",
            "",
            f"{n} instances ({n // 2} random W-class coefficient vectors, both targets), "
            f"closed forms evaluated on y = i/{self.grid_points}, i = 1..{self.grid_points}. "
            "Pointwise reference: constructive curve. Optimum reference: brute-force oracle "
            f"with {self.restarts} restarts.",
            "",
            "| reading | worst pointwise error | instances agreeing (<= 1e-9) "
            "| domain errors | oracle above the reading's maximum (> 1e-6) |",
            "|---|---|---|---|---|",
        ]
        for k in KReading:
            lines.append(
                f"| {k.value} | {self.worst_error(k):.3e} | {self.agreeing(k)}/{n} "
                f"| {self.domain_error_count(k)} | {self.oracle_exceeds(k)}/{n} |"
            )
        lines += [
            "",
            f"Largest oracle excess over the constructive maximum: {self.max_oracle_gap:.3e}.",
            "",
            f"**Adopted reading: `{self.adopted.value}`** (no domain errors and the smallest "
            "worst-case deviation from the constructive curve).",
            "",
            "## Instances",
            "",
            "| # | target | l0 | l1 | l2 | l3 | y* | P constructive | P oracle "
            + "".join(f"| err {k.value} " for k in KReading)
            + "|",
            "|---|---|---|---|---|---|---|---|---" + "|---" * len(KReading) + "|",
        ]
        for i, r in enumerate(self.instances):
            l0, l1, l2, l3 = r.lam
            errs = "".join(
                f"| {r.max_error[k]:.2e}" + (f" ({r.domain_errors[k]} dom)" if r.domain_errors[k] else "")
                + " "
                for k in KReading
            )
            lines.append(
                f"| {i} | {r.target.value} | {l0:.6f} | {l1:.6f} | {l2:.6f} | {l3:.6f} "
                f"| {r.y_star:.6f} | {r.p_constructive:.12f} | {r.p_oracle:.12f} {errs}|"
            )
        return "\n".join(lines) + "\n"


def _refined_max(lam, target, reading, ys, vals) -> float:
    i = int(np.nanargmax(vals))
    lo = ys[i - 1] if i > 0 else ys[0] / 2
    hi = ys[min(i + 1, ys.size - 1)]

    def f(y):
        try:
            return curve_closed(lam, y, target, reading)
        except DomainError:
            return -math.inf

    return max(float(vals[i]), _golden_max(f, lo, hi, 1e-12)[1])


def _instance(lam, target: TargetKind, ys: np.ndarray, restarts: int, seed: int) -> InstanceResult:
    ref, _, _ = constructive_curve_values(lam, ys, target)
    y_star, p_star = maximize(lam, target)
    p_oracle = oracle_max(lam, target, restarts=restarts, seed=seed).p_oracle
    max_error, reading_max, domain = {}, {}, {}
    for k in KReading:
        vals = np.full(ys.size, math.nan)
        for j, y in enumerate(ys):
            try:
                vals[j] = curve_closed(lam, float(y), target, k)
            except DomainError:
                pass
        ok = ~np.isnan(vals)
        domain[k] = int((~ok).sum())
        max_error[k] = float(np.max(np.abs(vals[ok] - ref[ok]))) if ok.any() else math.inf
        reading_max[k] = _refined_max(lam, target, k, ys, vals) if ok.any() else -math.inf
    return InstanceResult(
        tuple(lam), target, p_star, y_star, p_oracle, max_error, reading_max, domain
    )


def adjudicate(
    n_lambdas: int = 25, seed: int = 0, restarts: int = 200, grid_points: int = GRID_POINTS
) -> AdjudicationResult:
    """Run the comparison on ``n_lambdas`` random vectors times both targets."""
    rng = np.random.default_rng(seed)
    ys = np.arange(1, grid_points + 1) / grid_points
    rows = []
    for i in range(n_lambdas):
        lam = random_w_lambdas(rng)
        for target in TargetKind:
            rows.append(_instance(lam, target, ys, restarts, seed + i))
    return AdjudicationResult(seed, restarts, grid_points, tuple(rows))
