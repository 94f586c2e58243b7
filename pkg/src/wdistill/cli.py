"""Command-line interface: JSON in, JSON/CSV/Markdown out.

Input states are JSON documents ``{"amps": [[re, im], ...8 pairs], "label": ...}``
in basis order ``i*4 + j*2 + k``, read from a file path or standard input.

Exit codes: 0 success, 2 malformed input, 3 degenerate state, 4 wrong
entanglement class, 5 internal consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adjudication import adjudicate
from .canonical import canonicalize, classify, local_ranks, tangle, w_canonicalize
from .distill import TargetKind, build_plan, sample_curve
from .errors import (
    DegenerateState,
    NotWClass,
    PreconditionError,
    WDistillError,
    ZeroBranch,
    ZeroVector,
)
from .optimality import optimal_probability, oracle_max, two_outcome_split_test
from .state import ThreeQubitState, make_state, random_povm_element

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_DEGENERATE = 3
EXIT_CLASS = 4
EXIT_INTERNAL = 5

CI_ENV = "WDISTILL_CI"
DEFAULT_SEED = 0


class SchemaError(ValueError):
    pass


# -- documents -------------------------------------------------------------


def _finite(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise SchemaError(f"{where}: expected a finite number, got {x!r}")
    return float(x)


def parse_state_document(doc) -> tuple[ThreeQubitState, str | None]:
    if not isinstance(doc, dict) or "amps" not in doc:
        raise SchemaError('state document must be an object with an "amps" field')
    amps = doc["amps"]
    if not isinstance(amps, list) or len(amps) != 8:
        n = len(amps) if isinstance(amps, list) else type(amps).__name__
        raise SchemaError(f'"amps" must hold exactly 8 entries, got {n}')
    raw = []
    for i, pair in enumerate(amps):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(f"amps[{i}] must be a [re, im] pair")
        raw.append(complex(_finite(pair[0], f"amps[{i}][0]"), _finite(pair[1], f"amps[{i}][1]")))
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise SchemaError('"label" must be a string')
    return make_state(raw), label


def state_document(state: ThreeQubitState, label: str | None = None) -> dict:
    doc = {"amps": [[float(a.real), float(a.imag)] for a in state.amps]}
    if label is not None:
        doc["label"] = label
    return doc


def _complex_matrix(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _parse_complex_matrix(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


@dataclass(frozen=True)
class PlanDocument:
    target: str
    lambdas: tuple[float, float, float, float]
    perm: str
    y_star: float
    p_star: float
    povms: tuple
    composed_ops: tuple
    prob_error: float
    target_error: float

    @classmethod
    def from_plan(cls, plan) -> PlanDocument:
        povms = tuple(
            tuple(tuple(float(v.real) for v in row) for row in m) for m in plan.povms.matrices()
        )
        ops = tuple(
            tuple(tuple((float(z.real), float(z.imag)) for z in row) for row in m)
            for m in plan.composed_ops
        )
        return cls(
            plan.target.value,
            tuple(float(x) for x in plan.lambdas.lambdas),
            "".join(str(p) for p in plan.lambdas.perm),
            float(plan.y_star),
            float(plan.p_star),
            povms,
            ops,
            float(plan.prob_error),
            float(plan.target_error),
        )

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "lambdas": list(self.lambdas),
            "perm": self.perm,
            "y_star": self.y_star,
            "p_star": self.p_star,
            "povms": [[list(row) for row in m] for m in self.povms],
            "composed_ops": [[[list(z) for z in row] for row in m] for m in self.composed_ops],
            "validation": {"prob_error": self.prob_error, "target_error": self.target_error},
        }

    @classmethod
    def from_dict(cls, d: dict) -> PlanDocument:
        return cls(
            d["target"],
            tuple(d["lambdas"]),
            d["perm"],
            d["y_star"],
            d["p_star"],
            tuple(tuple(tuple(row) for row in m) for m in d["povms"]),
            tuple(tuple(tuple(tuple(z) for z in row) for row in m) for m in d["composed_ops"]),
            d["validation"]["prob_error"],
            d["validation"]["target_error"],
        )

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> PlanDocument:
        return cls.from_dict(json.loads(text))

    def operators(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(_parse_complex_matrix(m) for m in self.composed_ops)


def dumps(doc) -> str:
    # json writes floats with repr: shortest text that round-trips exactly
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


# -- commands --------------------------------------------------------------


def _read_input(path: str | None) -> tuple[ThreeQubitState, str | None]:
    try:
        text = sys.stdin.read() if path in (None, "-") else Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read input: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return parse_state_document(doc)


def _seed(args) -> int:
    if args.seed is None:
        if os.environ.get(CI_ENV, "") not in ("", "0"):
            raise SchemaError(f"--seed is required when {CI_ENV} is set")
        return DEFAULT_SEED
    return args.seed


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_canonicalize(args) -> int:
    state, label = _read_input(args.input)
    forms = []
    for f in canonicalize(state):
        forms.append(
            {
                "lambdas": [float(x) for x in f.lambdas],
                "phi": float(f.phi),
                "double_root": bool(f.double_root),
                "unitaries": [_complex_matrix(u) for u in f.unitaries],
            }
        )
    _emit(args, dumps({"label": label, "forms": forms}))
    return EXIT_OK


def cmd_classify(args) -> int:
    state, label = _read_input(args.input)
    doc = {
        "label": label,
        "class": classify(state).value,
        "tangle": float(tangle(state)),
        "ranks": list(local_ranks(state)),
    }
    _emit(args, dumps(doc))
    return EXIT_OK


def cmd_distill(args) -> int:
    state, _ = _read_input(args.input)
    plan = build_plan(state, TargetKind(args.target))
    _emit(args, PlanDocument.from_plan(plan).to_json())
    return EXIT_OK


def curve_csv(curve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["y", "p"])
    for y, p in curve.samples:
        writer.writerow([f"{y:.12g}", f"{p:.12g}"])
    return buf.getvalue()


def cmd_curve(args) -> int:
    state, _ = _read_input(args.input)
    curve = sample_curve(w_canonicalize(state), TargetKind(args.target), args.samples)
    if curve.omitted:
        print(f"warning: {curve.omitted} samples had no root and were omitted", file=sys.stderr)
    _emit(args, curve_csv(curve))
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = _seed(args)
    state, label = _read_input(args.input)
    form = w_canonicalize(state)
    rep = oracle_max(form, TargetKind(args.target), restarts=args.restarts, seed=seed)
    doc = {
        "label": label,
        "target": rep.target.value,
        "lambdas": list(rep.lam),
        "perm": "".join(str(p) for p in form.perm),
        "p_closed": rep.p_closed,
        "p_oracle": rep.p_oracle,
        "gap": rep.gap,
        "restarts": rep.restarts,
        "seed": rep.seed,
        "infeasible_restarts": rep.infeasible_restarts,
        "evaluations": rep.evaluations,
        "best_entries": list(rep.best_entries),
        "party2_deviation": rep.party2_deviation,
        "party2_passive": rep.party2_passive,
    }
    _emit(args, dumps(doc))
    return EXIT_OK


def cmd_split_test(args) -> int:
    seed = _seed(args)
    state, label = _read_input(args.input)
    target = TargetKind(args.target)
    w_canonicalize(state)  # class precondition
    parent = optimal_probability(state, target)
    rng = np.random.default_rng(seed)
    holds, worst, worst_trial = 0, -math.inf, None
    for t in range(args.trials):
        rec = two_outcome_split_test(state, random_povm_element(rng), target, parent_probability=parent)
        holds += rec.holds
        if rec.rhs - rec.lhs > worst:
            worst, worst_trial = rec.rhs - rec.lhs, (t, rec)
    t, rec = worst_trial
    doc = {
        "label": label,
        "target": target.value,
        "seed": seed,
        "trials": args.trials,
        "holds": holds,
        "violations": args.trials - holds,
        "P_parent": parent,
        "max_excess": worst,
        "worst": {
            "trial": t,
            "A1": _complex_matrix(rec.A1),
            "p1": rec.p1,
            "p2": rec.p2,
            "P1": rec.P1,
            "P2": rec.P2,
            "rhs": rec.rhs,
        },
    }
    _emit(args, dumps(doc))
    return EXIT_OK if holds == args.trials else EXIT_INTERNAL


def cmd_adjudicate(args) -> int:
    seed = _seed(args)
    result = adjudicate(args.lambdas, seed=seed, restarts=args.restarts)
    _emit(args, result.to_markdown())
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wdistill", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def with_input(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("input", nargs="?", default="-", help="state JSON file, '-' for stdin")
        sp.add_argument("--out", help="write output here instead of stdout")
        return sp

    def with_target(sp, default=None):
        sp.add_argument(
            "--target", choices=[t.value for t in TargetKind], default=default,
            required=default is None,
        )

    with_input("canonicalize", "canonical forms and frame unitaries").set_defaults(func=cmd_canonicalize)
    with_input("classify", "SLOCC class, tangle and local ranks").set_defaults(func=cmd_classify)

    sp = with_input("distill", "optimal distillation plan")
    with_target(sp)
    sp.set_defaults(func=cmd_distill)

    sp = with_input("curve", "sampled P(y) as CSV")
    with_target(sp)
    sp.add_argument("--samples", type=int, default=100)
    sp.set_defaults(func=cmd_curve)

    sp = with_input("verify", "brute-force oracle check of the optimum")
    with_target(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--restarts", type=int, default=1000)
    sp.set_defaults(func=cmd_verify)

    sp = with_input("split-test", "random two-outcome splits on party 1")
    with_target(sp, default="sym")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_split_test)

    sp = sub.add_parser("adjudicate", help="closed-form reading comparison report (Markdown)")
    sp.add_argument("--lambdas", type=int, default=25, help="random vectors; each runs both targets")
    sp.add_argument("--restarts", type=int, default=200)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_adjudicate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WDistillError as exc:
        return _fail(exc, _code_for(exc))
    except ValueError as exc:
        return _fail(exc, EXIT_SCHEMA)
    except Exception as exc:  # noqa: BLE001 - anything else is our bug
        return _fail(exc, EXIT_INTERNAL)


def _code_for(exc: Exception) -> int:
    if isinstance(exc, (ZeroVector, DegenerateState, ZeroBranch)):
        return EXIT_DEGENERATE
    if isinstance(exc, (NotWClass, PreconditionError)):
        return EXIT_CLASS
    return EXIT_INTERNAL


def _fail(exc: Exception, code: int) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return code
