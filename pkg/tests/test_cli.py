import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from conftest import S2, S3
from wdistill.cli import PlanDocument, main, parse_state_document, state_document
from wdistill.distill import TargetKind, sample_curve
from wdistill.state import apply_local, make_state


def doc_for(mapping, label=None):
    amps = [[0.0, 0.0] for _ in range(8)]
    for key, amp in mapping.items():
        amps[int(key, 2)] = [amp, 0.0]
    d = {"amps": amps}
    if label:
        d["label"] = label
    return d


W_DOC = doc_for({"001": S3, "010": S3, "100": S3}, "W")
GHZ_DOC = doc_for({"000": S2, "111": S2}, "GHZ")
ASYM_TARGET_DOC = doc_for({"000": S2, "101": 0.5, "110": 0.5})
LAMBDA1_ZERO_DOC = doc_for({"000": 0.8, "101": 0.5, "110": math.sqrt(0.11)})


@pytest.fixture
def write(tmp_path):
    def _write(doc, name="state.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)

    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_canonicalize_w(capsys, write):
    code, out, _ = run(capsys, "canonicalize", write(W_DOC))
    assert code == 0
    forms = json.loads(out)["forms"]
    assert len(forms) == 1
    np.testing.assert_allclose(forms[0]["lambdas"], [S3, 0, S3, S3, 0], atol=1e-12)


def test_canonicalize_ghz_two_forms(capsys, write):
    code, out, _ = run(capsys, "canonicalize", write(GHZ_DOC))
    assert code == 0 and len(json.loads(out)["forms"]) == 2


def test_schema_errors(capsys, write):
    bad = {"amps": [[0, 0]] * 7}
    assert run(capsys, "canonicalize", write(bad))[0] == 2
    assert run(capsys, "classify", write({"amps": [[0, "x"]] * 8}))[0] == 2
    assert run(capsys, "classify", write({"amps": [[0, 0, 0]] * 8}))[0] == 2
    assert run(capsys, "classify", write({"nope": 1}))[0] == 2
    assert run(capsys, "classify", write({**W_DOC, "label": 3}))[0] == 2


def test_zero_vector_exit_code(capsys, write):
    assert run(capsys, "canonicalize", write({"amps": [[0, 0]] * 8}))[0] == 3


def test_classify_examples(capsys, write):
    _, out, _ = run(capsys, "classify", write(W_DOC))
    d = json.loads(out)
    assert d["class"] == "W" and d["ranks"] == [2, 2, 2] and d["label"] == "W"
    _, out, _ = run(capsys, "classify", write(GHZ_DOC))
    assert json.loads(out)["class"] == "GHZ"
    _, out, _ = run(capsys, "classify", write(doc_for({"000": 1.0})))
    d = json.loads(out)
    assert d["class"] == "Product" and d["ranks"] == [1, 1, 1]


def test_distill_teleportation(capsys, write):
    code, out, _ = run(capsys, "distill", write(W_DOC), "--target", "asym")
    assert code == 0
    plan = PlanDocument.from_json(out)
    assert plan.p_star == pytest.approx(2 / 3, abs=1e-9)
    # the serialized operators still do the job
    state = make_state([complex(*z) for z in W_DOC["amps"]])
    _, prob = apply_local(state, *plan.operators())
    assert prob == pytest.approx(2 / 3, abs=1e-9)


def test_distill_self_and_ghz(capsys, write):
    _, out, _ = run(capsys, "distill", write(ASYM_TARGET_DOC), "--target", "asym")
    assert json.loads(out)["p_star"] == pytest.approx(1.0, abs=1e-10)
    assert run(capsys, "distill", write(GHZ_DOC), "--target", "asym")[0] == 4


def test_plan_document_round_trip(capsys, write):
    _, out, _ = run(capsys, "distill", write(LAMBDA1_ZERO_DOC), "--target", "sym")
    doc = PlanDocument.from_json(out)
    assert doc.to_json() == out
    assert PlanDocument.from_json(doc.to_json()) == doc
    assert set(json.loads(out)) == {
        "target", "lambdas", "perm", "y_star", "p_star", "povms", "composed_ops", "validation"
    }


def test_state_document_round_trip():
    state, label = parse_state_document(W_DOC)
    again, label2 = parse_state_document(json.loads(json.dumps(state_document(state, label))))
    assert np.array_equal(state.amps, again.amps) and label == label2


def test_curve_two_samples(capsys, write, tmp_path):
    out_path = tmp_path / "curve.csv"
    code, _, _ = run(
        capsys, "curve", write(LAMBDA1_ZERO_DOC), "--target", "asym", "--samples", "2",
        "--out", str(out_path),
    )
    assert code == 0
    text = out_path.read_text()
    assert text.endswith("\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["y", "p"]
    assert [float(r[0]) for r in rows[1:]] == [0.5, 1.0]


def test_curve_matches_memory(capsys, write):
    _, out, _ = run(capsys, "curve", write(LAMBDA1_ZERO_DOC), "--target", "sym", "--samples", "40")
    rows = list(csv.DictReader(io.StringIO(out)))
    ys = np.array([float(r["y"]) for r in rows])
    ps = np.array([float(r["p"]) for r in rows])
    assert ys[np.argmax(ps)] == 1.0
    mem = sample_curve((0.8, 0.0, 0.5, math.sqrt(0.11)), TargetKind.SYMMETRIC, 40)
    np.testing.assert_allclose(ps, mem.p, rtol=1e-11, atol=0)
    np.testing.assert_allclose(ys, mem.y, rtol=1e-11, atol=0)


def test_verify_w(capsys, write):
    code, out, _ = run(capsys, "verify", write(W_DOC), "--target", "asym", "--seed", "0")
    assert code == 0
    d = json.loads(out)
    assert d["gap"] <= 1e-6 and d["restarts"] == 1000


def test_verify_is_byte_identical(capsys, write):
    path = write(doc_for({"000": 0.6, "100": 0.5, "101": 0.5, "110": math.sqrt(0.14)}))
    _, a, _ = run(capsys, "verify", path, "--target", "sym", "--seed", "5", "--restarts", "50")
    _, b, _ = run(capsys, "verify", path, "--target", "sym", "--seed", "5", "--restarts", "50")
    assert a == b


def test_split_test_w(capsys, write):
    code, out, _ = run(capsys, "split-test", write(W_DOC), "--trials", "1000", "--seed", "1")
    d = json.loads(out)
    assert code == 0
    assert d["holds"] == 1000 and d["violations"] == 0


def test_ci_mode_requires_seed(capsys, write, monkeypatch):
    monkeypatch.setenv("WDISTILL_CI", "1")
    assert run(capsys, "split-test", write(W_DOC), "--trials", "2")[0] == 2
    assert run(capsys, "split-test", write(W_DOC), "--trials", "2", "--seed", "3")[0] == 0
    monkeypatch.delenv("WDISTILL_CI")
    assert run(capsys, "split-test", write(W_DOC), "--trials", "2")[0] == 0


def test_stdin_and_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "wdistill", "classify"],
        input=json.dumps(W_DOC), capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0
    assert json.loads(res.stdout)["class"] == "W"
    res = subprocess.run(
        [sys.executable, "-m", "wdistill", "classify", "-"],
        input="not json", capture_output=True, text=True, check=False,
    )
    assert res.returncode == 2


def test_adjudicate_small(capsys):
    code, out, _ = run(capsys, "adjudicate", "--lambdas", "1", "--restarts", "20", "--seed", "0")
    assert code == 0
    assert "Adopted reading: `corrected`" in out
