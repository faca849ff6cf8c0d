import json
import shutil
from pathlib import Path

import pytest

from icheck.cli import main

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


@pytest.fixture
def ws(tmp_path):
    def copy(name):
        dst = tmp_path / name
        shutil.copytree(SAMPLES / name, dst)
        return dst

    return copy


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simplify_pre(capsys):
    d = SAMPLES / "reviews"
    code, out, _ = run(capsys, "simplify", "--ic", d / "ic.dl", "--update", d / "update.dl", "--kind", "pre")
    assert code == 0
    assert out == (SAMPLES / "reviews" / "sigma_sorted.dl").read_text()


def test_simplify_plain_pre_swap(capsys):
    d = SAMPLES / "swap"
    code, out, _ = run(capsys, "simplify", "--ic", d / "ic.dl", "--update", d / "update.dl", "--kind", "plain-pre")
    assert (code, out) == (0, ":- q(a), p(b).\n")


def test_simplify_plain_post_empty_update(capsys, tmp_path):
    (tmp_path / "u.dl").write_text("% nothing\n")
    d = SAMPLES / "reviews"
    code, out, _ = run(capsys, "simplify", "--ic", d / "ic.dl", "--update", tmp_path / "u.dl", "--kind", "plain-post")
    assert code == 0
    assert out == ":- rev(S,R), sub(S,A), pub(P,R), pub(P,A).\n:- rev(S,R), sub(S,R).\n"


def test_check_pre_gate_rejects_coauthor(capsys, ws):
    d = ws("reviews")
    db = d / "db_coauthors.dl"
    before = db.read_bytes()
    code, out, _ = run(capsys, "check", "--db", db, "--ic", d / "ic.dl", "--update", d / "update.dl", "--mode", "pre")
    assert code == 1
    assert "violated: :- pub(P,b), pub(P,a)." in out
    assert db.read_bytes() == before


def test_check_pre_gate_accepts_and_writes(capsys, ws, tmp_path):
    d = ws("reviews")
    report = tmp_path / "r.json"
    code, out, _ = run(
        capsys, "check", "--db", d / "db.dl", "--ic", d / "ic.dl", "--update", d / "update.dl", "--report", report
    )
    assert code == 0
    text = (d / "db.dl").read_text()
    assert "sub(c,a)." in text and "rev(c,b)." in text
    rep = json.loads(report.read_text())
    assert rep["decision"] == "accepted" and rep["mode"] == "pre-gate"
    assert list(rep) == sorted(rep)
    assert rep["cost"]["retrievals_test"] <= rep["cost"]["retrievals_original"]


def test_check_post_rollback_restores(capsys, ws):
    d = ws("swap")
    before = (d / "db.dl").read_bytes()
    code, out, _ = run(capsys, "check", "--db", d / "db.dl", "--ic", d / "ic.dl", "--update", d / "update.dl", "--mode", "post")
    assert code == 1
    assert "rolled back" in out
    assert (d / "db.dl").read_bytes() == before


@pytest.mark.parametrize("mode", ["pre", "post"])
def test_irrelevant_update_is_accepted(capsys, tmp_path, mode):
    (tmp_path / "db.dl").write_text("q(a).\n")
    (tmp_path / "ic.dl").write_text(":- p(a).\n")
    (tmp_path / "u.dl").write_text("+q(b).\n")
    code, _, _ = run(capsys, "check", "--db", tmp_path / "db.dl", "--ic", tmp_path / "ic.dl", "--update", tmp_path / "u.dl", "--mode", mode)
    assert code == 0
    assert "q(b)." in (tmp_path / "db.dl").read_text()


def test_inconsistent_initial_state_is_refused(capsys, tmp_path):
    (tmp_path / "db.dl").write_text("p(a).\n")
    (tmp_path / "ic.dl").write_text(":- p(a).\n")
    (tmp_path / "u.dl").write_text("+q(b).\n")
    code, _, err = run(capsys, "check", "--db", tmp_path / "db.dl", "--ic", tmp_path / "ic.dl", "--update", tmp_path / "u.dl")
    assert code == 2
    assert "refusing" in err and ":- p(a)." in err
    assert (tmp_path / "db.dl").read_text() == "p(a).\n"


def test_parameterized_update_with_binding(capsys, tmp_path):
    (tmp_path / "db.dl").write_text("p(a).\n")
    (tmp_path / "ic.dl").write_text(":- p(X), q(X).\n")
    (tmp_path / "u.dl").write_text("+q($x).\n")
    args = ["check", "--db", tmp_path / "db.dl", "--ic", tmp_path / "ic.dl", "--update", tmp_path / "u.dl"]
    assert run(capsys, *args, "--bind", "x=a")[0] == 1
    assert run(capsys, *args, "--bind", "x=b")[0] == 0
    assert run(capsys, *args)[0] == 2


def test_arity_clash_across_files(capsys, tmp_path):
    (tmp_path / "db.dl").write_text("p(a).\n")
    (tmp_path / "ic.dl").write_text(":- p(a, b).\n")
    (tmp_path / "u.dl").write_text("+q(b).\n")
    code, _, err = run(capsys, "check", "--db", tmp_path / "db.dl", "--ic", tmp_path / "ic.dl", "--update", tmp_path / "u.dl")
    assert code == 2 and "arit" in err


def test_parse_error_exit_code(capsys, tmp_path):
    (tmp_path / "ic.dl").write_text(":- p(a\n")
    code, _, err = run(capsys, "simplify", "--ic", tmp_path / "ic.dl", "--update", SAMPLES / "swap" / "update.dl")
    assert code == 2 and "line 1" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "simplify", "--ic", "/nonexistent.dl", "--update", SAMPLES / "swap" / "update.dl")
    assert code == 2


def test_verify_post_refuted_with_workspace_witness(capsys, tmp_path):
    d = SAMPLES / "swap"
    report = tmp_path / "v.json"
    code, out, _ = run(
        capsys, "verify", "--db", d / "db.dl", "--ic", d / "ic.dl", "--update", d / "update.dl",
        "--candidate", d / "sigma.dl", "--claim", "post", "--report", report,
    )
    assert code == 1
    assert "witness D = {p(a), p(b), q(a)}" in out
    rep = json.loads(report.read_text())
    assert rep["witness"] == ["p(a)", "p(b)", "q(a)"] and rep["witness_from_workspace"]


def test_verify_post_refuted_by_enumeration(capsys):
    d = SAMPLES / "swap"
    code, out, _ = run(capsys, "verify", "--ic", d / "ic.dl", "--update", d / "update.dl", "--candidate", d / "sigma.dl", "--claim", "post")
    assert code == 1 and "witness D = {p(b), q(a)}" in out


def test_verify_certifications(capsys):
    d = SAMPLES / "insert"
    code, out, _ = run(capsys, "verify", "--ic", d / "ic.dl", "--update", d / "update.dl", "--candidate", d / "sigma.dl", "--claim", "pre", "--universe", "a")
    assert code == 0 and "certified-on-space" in out
    code, out, _ = run(capsys, "verify", "--ic", d / "ic.dl", "--update", d / "update.dl", "--candidate", d / "ic.dl", "--claim", "plain-post")
    assert code == 0
    s = SAMPLES / "swap"
    code, _, _ = run(capsys, "verify", "--ic", s / "ic.dl", "--update", s / "update.dl", "--candidate", s / "ic.dl", "--claim", "plain-post")
    assert code == 0


def test_verify_budget_exit_code(capsys, monkeypatch):
    d = SAMPLES / "reviews"
    args = ["verify", "--ic", d / "ic.dl", "--update", d / "update.dl", "--candidate", d / "sigma.dl", "--claim", "pre"]
    code, _, err = run(capsys, *args, "--universe", "a,b,c,d")
    assert code == 3 and "budget" in err
    # flag wins over the environment
    monkeypatch.setenv("ICHECK_BUDGET", str(1 << 30))
    code, _, _ = run(capsys, *args, "--universe", "a,b,c,d", "--budget", "100")
    assert code == 3


def test_verify_sampled(capsys):
    d = SAMPLES / "reviews"
    code, out, _ = run(
        capsys, "verify", "--ic", d / "ic.dl", "--update", d / "update.dl", "--candidate", d / "sigma.dl",
        "--claim", "pre", "--universe", "a,b,c,d,p1,p2", "--sample", "20000", "--seed", "3",
    )
    assert code == 0 and "sampled (seed 3)" in out


def test_idempotent_command(capsys):
    d = SAMPLES / "swap"
    code, out, _ = run(capsys, "idempotent", "--ic", d / "ic.dl", "--update", d / "update.dl", "--universe", "a")
    assert code == 1 and "{p(a)}" in out
    d = SAMPLES / "insert"
    code, out, _ = run(capsys, "idempotent", "--ic", d / "ic.dl", "--update", d / "update.dl")
    assert code == 0 and "by-construction" in out


def test_table_command(capsys, tmp_path):
    report = tmp_path / "t.json"
    code, out, _ = run(capsys, "table", "--pairs", "8", "--report", report)
    assert code == 0
    rep = json.loads(report.read_text())
    assert rep["matches_expected"]
    assert rep["rows"][0] == "Pre <= Post"
    assert rep["answers"]["any"] == ["no", "no", "yes", "yes", "no"]
    assert rep["answers"]["idempotent"] == ["no", "no", "yes", "yes", "yes"]


def test_table_degenerate(capsys):
    code, out, _ = run(capsys, "table", "--pairs", "4", "--kinds", "empty", "--no-witnesses")
    assert code == 0 and "degenerate" in out


def test_modes_agree_on_fact_deltas(capsys, tmp_path):
    import random

    from icheck.oracle.generate import random_case

    rng = random.Random(11)
    seen = 0
    for i in range(40):
        case = random_case(rng, "delta", max_hb=6)
        dbs = [frozenset(a for a in case.space.atoms if rng.random() < 0.4) for _ in range(3)]
        for j, fs in enumerate(dbs):
            base = tmp_path / f"{i}_{j}"
            base.mkdir()
            (base / "ic.dl").write_text(str(case.gamma))
            (base / "u.dl").write_text(str(case.update))
            text = "".join(f"{f}.\n" for f in sorted(map(str, fs)))
            codes = []
            for mode in ("pre", "post"):
                (base / "db.dl").write_text(text)
                codes.append(main(["check", "--db", str(base / "db.dl"), "--ic", str(base / "ic.dl"), "--update", str(base / "u.dl"), "--mode", mode]))
                if codes[-1] == 1:
                    assert (base / "db.dl").read_text() == text
            capsys.readouterr()
            if codes[0] == 2:
                # inconsistent old state: both modes refuse
                assert codes[1] == 2
                continue
            seen += 1
            assert codes[0] == codes[1]
    assert seen > 20


def test_idempotent_without_constraints(capsys):
    code, out, _ = run(capsys, "idempotent", "--update", SAMPLES / "reviews" / "update.dl")
    assert code == 0
    code, _, err = run(capsys, "idempotent", "--update", SAMPLES / "swap" / "update.dl")
    assert code == 2 and "arity" in err
