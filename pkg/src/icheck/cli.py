"""Command line: ``icheck check|simplify|verify|table|idempotent``.

Every command prints a human report on stdout.  ``--report FILE``
additionally writes one JSON document (sorted keys, two-space indent)
describing the run.  Exit codes: 0 accepted or certified, 1 rejected or
refuted, 2 input error, 3 budget or resource error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import engine, simplifier
from .errors import IcheckError, ResourceError
from .logic import Const, IntegrityTheory, ground_params
from .oracle import ROWS, EnumerationSpace, Premise, Sample, build_suite, check_post_test, check_pre_test, run_table
from .oracle.space import default_budget
from .syntax import parse_database, parse_theory, parse_update
from .updates import Update, instantiate, is_idempotent
from .updates import apply as apply_update

EXIT_OK, EXIT_REJECTED, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3

MODES = {"pre": "pre-gate", "pre-gate": "pre-gate", "post": "post-rollback", "post-rollback": "post-rollback"}
KINDS = ("pre", "post", "plain-pre", "plain-post")


class InputError(Exception):
    pass


@dataclass
class Workspace:
    db_path: Optional[Path]
    ic_path: Optional[Path]
    update_path: Optional[Path]
    db: Optional[engine.Database]
    gamma: IntegrityTheory
    update: Update
    raw_db: Optional[bytes]
    vocabulary: dict


def _read(path: Optional[str], what: str) -> Optional[tuple[Path, bytes]]:
    if path is None:
        return None
    p = Path(path)
    try:
        return p, p.read_bytes()
    except OSError as e:
        raise InputError(f"cannot read {what} file {path}: {e.strerror}") from None


def _decode(raw: bytes, path: Path) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8") from None


def _with_file(path: Path, fn, text: str):
    try:
        return fn(text)
    except IcheckError as e:
        if isinstance(e, ResourceError):
            raise
        raise InputError(f"{path}: {e}") from None


def load_workspace(args, need_db: bool = False, need_update: bool = True, need_ic: bool = True) -> Workspace:
    got_db = _read(args.db, "database")
    got_ic = _read(args.ic, "constraint")
    got_u = _read(getattr(args, "update", None), "update")
    if need_db and got_db is None:
        raise InputError("--db is required")
    if got_ic is None and need_ic:
        raise InputError("--ic is required")
    if need_update and got_u is None:
        raise InputError("--update is required")
    db = None
    if got_db:
        db = _with_file(got_db[0], parse_database, _decode(got_db[1], got_db[0]))
    gamma = IntegrityTheory()
    if got_ic:
        gamma = _with_file(got_ic[0], parse_theory, _decode(got_ic[1], got_ic[0]))
    u = Update()
    if got_u:
        u = _with_file(got_u[0], parse_update, _decode(got_u[1], got_u[0]))
    sigs = list(gamma.signatures()) + list(u.signatures())
    if db is not None:
        sigs += list(db.vocabulary.items())
    vocab = engine.check_arities(sigs, "across the input files")
    if db is not None:
        bad = sorted(p for p in u.predicates if p in db.intensional)
        if bad:
            raise InputError(f"update touches intensional predicates {bad}")
        db = engine.Database(db.facts, db.rules, frozenset(vocab.items()))
    return Workspace(
        got_db[0] if got_db else None,
        got_ic[0] if got_ic else None,
        got_u[0] if got_u else None,
        db,
        gamma,
        u,
        got_db[1] if got_db else None,
        vocab,
    )


def _binding(text: Optional[str]) -> dict:
    out = {}
    for part in filter(None, (text or "").split(",")):
        name, eq, value = part.partition("=")
        if not eq:
            raise InputError(f"bad binding {part!r}; expected name=constant")
        out[name.strip().lstrip("$")] = Const(value.strip())
    return out


def _budget(args) -> int:
    return args.budget if getattr(args, "budget", None) is not None else default_budget()


def _theory_text(t: IntegrityTheory) -> str:
    return "".join(f"{d}\n" for d in t)


def _generate(ws: Workspace, kind: str) -> simplifier.Test:
    rules = ws.db.rules if ws.db is not None else ()
    if kind == "pre":
        return simplifier.optimized_pre_test(ws.gamma, ws.update, rules)
    if kind == "post":
        return simplifier.optimized_post_test(ws.gamma, ws.update, rules)
    if kind == "plain-pre":
        return simplifier.plain_pre_test(ws.gamma, ws.update, rules)
    return simplifier.plain_post_test(ws.gamma, ws.update, db_rules=rules)


# -- commands --------------------------------------------------------------


def cmd_check(args) -> tuple[int, dict]:
    ws = load_workspace(args, need_db=True)
    mode = MODES[args.mode]
    binding = _binding(args.bind)
    u = instantiate(ws.update, binding) if ws.update.parameters else ws.update
    db = ws.db
    if not engine.holds(db, ws.gamma):
        bad = next(d for d in ws.gamma if not engine.holds(db, IntegrityTheory([d])))
        raise InputError(
            f"refusing to check: the initial database violates {bad}; "
            "tests are only meaningful for a consistent old state"
        )
    gen = _generate(ws, "pre" if mode == "pre-gate" else "post")
    t = ground_params(gen.theory, binding) if binding else gen.theory
    test = simplifier.Test(t, gen.state, gen.plain, u, ws.gamma)
    new = apply_update(u, db)
    started = time.perf_counter()
    if mode == "pre-gate":
        meter = engine.RetrievalMeter()
        ok = engine.holds(db, t, meter)
        if ok:
            ws.db_path.write_text(str(new), encoding="utf-8")
        cost = simplifier.cost_compare(test, ws.gamma, db, gamma_db=new)
    else:
        ws.db_path.write_text(str(new), encoding="utf-8")
        try:
            meter = engine.RetrievalMeter()
            ok = engine.holds(new, t, meter)
        except BaseException:
            ws.db_path.write_bytes(ws.raw_db)
            raise
        if not ok:
            ws.db_path.write_bytes(ws.raw_db)
        cost = simplifier.cost_compare(test, ws.gamma, new)
    elapsed = time.perf_counter() - started
    decision = "accepted" if ok else "rejected"
    violated = [str(d) for d in t if not engine.holds(db if mode == "pre-gate" else new, IntegrityTheory([d]))]
    print(f"decision: {decision} ({mode})")
    print(f"test ({test.kind}, evaluated on the {'old' if mode == 'pre-gate' else 'new'} state):")
    for d in t:
        print(f"  {d}")
    for v in violated:
        print(f"violated: {v}")
    print(
        f"retrievals: test {cost.retrievals_test}, full constraints {cost.retrievals_original}"
        f" (ratio {cost.retrieval_ratio:.4f})"
    )
    if not ok:
        print(f"database file {ws.db_path} left unchanged" if mode == "pre-gate" else f"rolled back {ws.db_path}")
    report = {
        "command": "check",
        "decision": decision,
        "mode": mode,
        "test": {"kind": test.kind, "denials": [str(d) for d in t]},
        "violated": violated,
        "cost": {
            "retrievals_test": cost.retrievals_test,
            "retrievals_original": cost.retrievals_original,
            "literal_count_test": cost.literal_count_test,
            "literal_count_original": cost.literal_count_original,
            "retrieval_ratio": cost.retrieval_ratio,
        },
        "seconds": round(elapsed, 6),
    }
    return (EXIT_OK if ok else EXIT_REJECTED), report


def cmd_simplify(args) -> tuple[int, dict]:
    ws = load_workspace(args)
    test = _generate(ws, args.kind)
    sys.stdout.write(_theory_text(test.theory))
    return EXIT_OK, {
        "command": "simplify",
        "kind": test.kind,
        "denials": [str(d) for d in test.theory],
    }


def _universe(args, ws: Workspace, extra: IntegrityTheory) -> list:
    if args.universe:
        names = [c.strip() for c in args.universe.split(",") if c.strip()]
        if not names:
            raise InputError("--universe is empty")
        return names
    consts = set()
    for t in (ws.gamma, extra):
        for d in t:
            for lit in d.body:
                consts |= {a.name for a in lit.atom.args if isinstance(a, Const)}
    for s in ws.update.steps:
        for a in getattr(s, "insertions", frozenset()) | getattr(s, "deletions", frozenset()):
            consts |= {x.name for x in a.args if isinstance(x, Const)}
    if ws.db is not None:
        for f in ws.db.facts:
            consts |= {x.name for x in f.args}
    return sorted(consts) or ["a"]


def cmd_verify(args) -> tuple[int, dict]:
    ws = load_workspace(args)
    got = _read(args.candidate, "candidate")
    cand = _with_file(got[0], parse_theory, _decode(got[1], got[0]))
    vocab = engine.check_arities(
        list(ws.vocabulary.items()) + list(cand.signatures()), "across the input and candidate files"
    )
    rules = ws.db.rules if ws.db is not None else ()
    space = EnumerationSpace(_universe(args, ws, cand), vocab, rules, budget=_budget(args))
    check = check_pre_test if args.claim in ("pre", "plain-pre") else check_post_test
    premise = Premise.ALL if args.claim.startswith("plain") else Premise.CONSISTENT
    sample = Sample(args.sample, args.seed, args.density) if args.sample else None
    verdict = None
    given = False
    if ws.db is not None:
        # the workspace database is tried first: if it refutes the claim it
        # is the most useful witness to show
        v = check(cand, ws.gamma, ws.update, space, premise, databases=[ws.db.facts])
        if v.refuted:
            verdict, given = v, True
    if verdict is None:
        verdict = check(cand, ws.gamma, ws.update, space, premise, sample=sample, jobs=args.jobs)
    print(f"claim: candidate is a {args.claim}-test ({premise.value})")
    print(verdict.summary())
    report = {
        "command": "verify",
        "claim": args.claim,
        "premise": premise.value,
        "status": verdict.status.value,
        "space": verdict.space,
        "checked": verdict.checked,
        "witness": sorted(map(str, verdict.witness.facts)) if verdict.witness is not None else None,
        "witness_from_workspace": given,
        "values": verdict.values,
        "binding": verdict.binding,
    }
    return (EXIT_REJECTED if verdict.refuted else EXIT_OK), report


def cmd_table(args) -> tuple[int, dict]:
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    suite = build_suite(args.pairs, args.seed, kinds, include_witnesses=not args.no_witnesses, max_hb=args.max_hb)
    table = run_table(suite)
    print(table.render())
    witnesses = {}
    for column in ("any", "idempotent"):
        for row in ROWS:
            rep = table.reports[(column, row)]
            if rep.witness is not None:
                line = rep.witness.describe()
                print(f"{column}: {row.label}: {line}")
                witnesses[f"{column}:{row.label}"] = line
            if rep.degenerate:
                print(f"{column}: {row.label}: degenerate (every update in the suite is the identity)")
    report = {
        "command": "table",
        "pairs": len(suite),
        "rows": [r.label for r in ROWS],
        "answers": {c: list(table.answers(c)) for c in ("any", "idempotent")},
        "matches_expected": table.matches_expected(),
        "witnesses": witnesses,
    }
    return EXIT_OK, report


def cmd_idempotent(args) -> tuple[int, dict]:
    ws = load_workspace(args, need_ic=False)
    unknown = sorted(p for p in ws.update.predicates if p not in ws.vocabulary)
    if unknown:
        raise InputError(f"arity of {', '.join(unknown)} is unknown; pass --ic or --db mentioning them")
    space = EnumerationSpace(_universe(args, ws, IntegrityTheory()), ws.vocabulary, budget=_budget(args))
    verdict = is_idempotent(ws.update, space.universe, space.vocabulary, _budget(args))
    print(verdict.summary())
    return (EXIT_REJECTED if verdict.refuted else EXIT_OK), {
        "command": "idempotent",
        "status": verdict.status.value,
        "witness": sorted(map(str, verdict.witness.facts)) if verdict.witness is not None else None,
    }


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="icheck", description="Integrity checking with pre- and post-tests.")
    sub = ap.add_subparsers(dest="command", required=True)

    def files(p, update=True):
        p.add_argument("--db", help="database file (facts and rules)")
        p.add_argument("--ic", help="constraint file (denials)")
        if update:
            p.add_argument("--update", help="update file (+fact. -fact. swap p q.)")
        p.add_argument("--report", help="write a JSON report to this file")

    def oracle(p):
        p.add_argument("--universe", help="constants of the enumerated space, comma separated")
        p.add_argument("--budget", type=int, help="maximum number of databases to enumerate")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("check", help="apply an update guarded by a pre- or post-test")
    files(p)
    p.add_argument("--mode", choices=sorted(MODES), default="pre")
    p.add_argument("--bind", help="parameter values, e.g. x=a,y=b")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("simplify", help="print a generated test")
    files(p)
    p.add_argument("--kind", choices=KINDS, default="pre")
    p.set_defaults(run=cmd_simplify)

    p = sub.add_parser("verify", help="certify or refute a candidate test on a bounded space")
    files(p)
    oracle(p)
    p.add_argument("--candidate", required=True, help="theory file holding the candidate test")
    p.add_argument("--claim", choices=KINDS, default="pre")
    p.add_argument("--sample", type=int, help="check this many seeded random databases instead of all")
    p.add_argument("--density", type=float, default=0.1, help="probability of each fact in a sampled database")
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("table", help="containment matrix between the four classes of tests")
    p.add_argument("--pairs", type=int, default=24, help="random (constraints, update) pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kinds", default="delta,swap,map,mixed", help="update kinds: delta, swap, map, mixed, empty")
    p.add_argument("--max-hb", type=int, default=8, help="largest Herbrand base of a random pair")
    p.add_argument("--no-witnesses", action="store_true", help="leave out the two fixed witness pairs")
    p.add_argument("--budget", type=int)
    p.add_argument("--report", help="write a JSON report to this file")
    p.set_defaults(run=cmd_table)

    p = sub.add_parser("idempotent", help="decide whether applying the update twice equals once")
    files(p)
    oracle(p)
    p.set_defaults(run=cmd_idempotent)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    budget = getattr(args, "budget", None)
    old_env = os.environ.get("ICHECK_BUDGET")
    if budget is not None:
        os.environ["ICHECK_BUDGET"] = str(budget)
    try:
        code, report = args.run(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (IcheckError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        if budget is not None:
            if old_env is None:
                os.environ.pop("ICHECK_BUDGET", None)
            else:
                os.environ["ICHECK_BUDGET"] = old_env
    if getattr(args, "report", None):
        Path(args.report).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
