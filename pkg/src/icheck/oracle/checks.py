"""Brute-force certification of test claims over a finite space.

Every check walks the databases of an :class:`EnumerationSpace` in
increasing bitmask order (or a seeded random sample of them) and stops
at the first database that breaks the claimed biconditional.  That
database is the witness, so witnesses are deterministic and minimal in
enumeration order.
"""

from __future__ import annotations

import enum
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .. import engine
from ..errors import MalformedProgramError, SamplingError
from ..logic import Atom, Denial, IntegrityTheory, Literal, ground_params
from ..updates import Update, _coerce
from ..updates import apply as apply_update
from ..updates import instantiate
from .space import CHUNK, EnumerationSpace, Evaluator, Frame, compile_update, sample_rows


# a sampled check gives up after drawing this many databases per requested one
MAX_DRAW_FACTOR = 20


class Status(enum.Enum):
    BY_CONSTRUCTION = "certified-by-construction"
    CERTIFIED = "certified-on-space"
    REFUTED = "refuted"


class Premise(enum.Enum):
    ALL = "all-databases"
    CONSISTENT = "consistent-only"


@dataclass(frozen=True)
class Sample:
    """Seeded random sub-space: ``count`` databases that meet the premise."""

    count: int
    seed: int = 0
    density: float = 0.5
    batch: int = 1 << 15


@dataclass
class Claim:
    """What was checked, kept so a witness can be replayed through the engine."""

    kind: str  # pre | post | equivalent | idempotent
    gamma: Optional[IntegrityTheory] = None
    candidate: Optional[IntegrityTheory] = None
    update: Optional[Update] = None
    premise: Premise = Premise.ALL

    def evaluate(self, db: engine.Database) -> dict[str, bool]:
        """Truth values of the claim's ingredients at ``db``, via the engine."""
        if self.kind == "idempotent":
            once = apply_update(self.update, db)
            twice = apply_update(self.update, once)
            return {"D^U == (D^U)^U": once.facts == twice.facts}
        if self.kind == "equivalent":
            if self.update is None:
                return {"D |= T1": engine.holds(db, self.gamma), "D |= T2": engine.holds(db, self.candidate)}
            new = apply_update(self.update, db)
            return {"D^U |= T1": engine.holds(new, self.gamma), "D^U |= T2": engine.holds(new, self.candidate)}
        new = apply_update(self.update, db)
        return {
            "D |= Gamma": engine.holds(db, self.gamma),
            "D^U |= Gamma": engine.holds(new, self.gamma),
            "D |= T": engine.holds(db, self.candidate),
            "D^U |= T": engine.holds(new, self.candidate),
        }


@dataclass
class Verdict:
    status: Status
    witness: Optional[engine.Database] = None
    detail: str = ""
    values: dict = field(default_factory=dict)
    checked: int = 0
    space: str = ""
    binding: dict = field(default_factory=dict)
    claim: Optional[Claim] = None

    @property
    def certified(self) -> bool:
        return self.status is not Status.REFUTED

    @property
    def refuted(self) -> bool:
        return self.status is Status.REFUTED

    def replay(self) -> dict[str, bool]:
        """Re-evaluate the witness with the datalog engine."""
        if self.witness is None or self.claim is None:
            raise ValueError("nothing to replay: verdict has no witness")
        claim = self.claim
        if self.binding:
            claim = _bind_claim(claim, self.binding)
        return claim.evaluate(self.witness)

    def witness_text(self) -> str:
        if self.witness is None:
            return ""
        facts = sorted(map(str, self.witness.facts))
        return "{" + ", ".join(facts) + "}"

    def summary(self) -> str:
        s = self.status.value
        if self.space:
            s += f" ({self.space}; {self.checked} databases)"
        if self.refuted:
            s += f"; witness D = {self.witness_text()}"
            if self.binding:
                s += " with " + ", ".join(f"${k}={v}" for k, v in sorted(self.binding.items()))
            if self.detail:
                s += f": {self.detail}"
        return s


def _bind_claim(claim: Claim, binding: dict) -> Claim:
    return Claim(
        claim.kind,
        None if claim.gamma is None else ground_params(claim.gamma, binding),
        None if claim.candidate is None else ground_params(claim.candidate, binding),
        None if claim.update is None else instantiate(claim.update, binding),
        claim.premise,
    )


def _sym(ok: bool) -> str:
    return "|=" if ok else "|/="


def _pre_post_detail(values: dict, test_state: str, name: str) -> str:
    old_g, new_g = values["D |= Gamma"], values["D^U |= Gamma"]
    state = "D" if test_state == "pre" else "D^U"
    t = values[f"{state} |= T"]
    parts = [f"D {_sym(old_g)} Gamma", f"D^U {_sym(new_g)} Gamma", f"{state} {_sym(t)} {name}"]
    return ", ".join(parts)


# -- scanning ------------------------------------------------------------

Judge = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def _scan(space: EnumerationSpace, frame: Frame, judge: Judge, sample: Optional[Sample], jobs: int, databases=None):
    """Find the first bad database; returns (row or None, index, considered).

    ``databases`` replaces the enumeration by an explicit list of fact
    sets, checked in the given order.
    """
    if databases is not None:
        dbs = [frame.row_of(getattr(d, "facts", d)) for d in databases]
        if not dbs:
            return None, None, 0
        rows = np.vstack(dbs)
        inside, bad = judge(rows)
        bad = bad & inside
        if bad.any():
            i = int(np.argmax(bad))
            return rows[i], i, int(inside[: i + 1].sum())
        return None, None, int(inside.sum())
    if sample is not None:
        considered = 0
        rng_seed = sample.seed
        batch_no = 0
        while considered < sample.count:
            rows = sample_rows(space, frame, sample.batch, rng_seed + batch_no, sample.density)
            batch_no += 1
            inside, bad = judge(rows)
            csum = np.cumsum(inside)
            limit = sample.count - considered
            take = csum <= limit
            bad = bad & inside & take
            if bad.any():
                i = int(np.argmax(bad))
                return rows[i], None, considered + int(csum[i])
            considered += int(min(csum[-1] if len(csum) else 0, limit))
            drawn = batch_no * sample.batch
            if considered < sample.count and drawn >= MAX_DRAW_FACTOR * sample.count + 8 * sample.batch:
                raise SamplingError(considered, drawn)
        return None, None, considered

    space.require_budget()
    total = space.size
    bounds = [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]

    def run(bound):
        lo, hi = bound
        rows = frame.rows(np.arange(lo, hi, dtype=np.uint64))
        inside, bad = judge(rows)
        bad = bad & inside
        if bad.any():
            i = int(np.argmax(bad))
            return lo + i, rows[i], int(inside[: i + 1].sum())
        return None, None, int(inside.sum())

    considered = 0
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(run, bounds))
    else:
        results = []
        for b in bounds:
            r = run(b)
            results.append(r)
            if r[0] is not None:
                break
    for idx, row, n in results:
        considered += n
        if idx is not None:
            return row, idx, considered
    return None, None, considered


def _bindings(space: EnumerationSpace, params) -> list[dict]:
    params = sorted(params, key=lambda p: p.name)
    if not params:
        return [{}]
    return [
        {p.name: c for p, c in zip(params, combo)}
        for combo in itertools.product(space.universe, repeat=len(params))
    ]


def _admissible(updates, binding) -> bool:
    """False when the binding makes an insertion collide with a deletion."""
    try:
        for u in updates:
            instantiate(u, binding)
    except MalformedProgramError:
        return False
    return True


def _over_bindings(space, objs, run_one):
    """Run a ground check for every parameter binding; first refutation wins."""
    params = set()
    for o in objs:
        if o is not None:
            params |= set(o.parameters)
    total = 0
    last = None
    updates = [o for o in objs if isinstance(o, Update)]
    for b in _bindings(space, params):
        if b and not _admissible(updates, b):
            continue
        v = run_one(b)
        total += v.checked
        if b:
            v.binding = {k: c.name for k, c in b.items()}
        if v.refuted:
            v.checked = total
            return v
        last = v
    if last is None:
        return Verdict(Status.CERTIFIED, detail="no admissible parameter binding", space=space.describe())
    last.checked = total
    last.binding = {}
    return last


class _TheoryParams:
    def __init__(self, t: IntegrityTheory):
        self.parameters = t.parameters()


def _pre_post(kind: str, candidate, gamma, u, space, premise, sample, jobs, databases=None) -> Verdict:
    u = _coerce(u)
    premise = Premise(premise)

    def one(binding):
        uu = instantiate(u, binding) if binding else u
        g = ground_params(gamma, binding) if binding else gamma
        c = ground_params(candidate, binding) if binding else candidate
        frame = Frame(space, [uu])
        ev = Evaluator(frame)
        upd = compile_update(uu, frame)

        def judge(rows):
            new = upd(rows)
            old_g = ev.holds(g, rows)
            new_g = ev.holds(g, new)
            t = ev.holds(c, rows if kind == "pre" else new)
            inside = old_g if premise is Premise.CONSISTENT else np.ones(len(rows), dtype=bool)
            return inside, new_g != t

        row, _, n = _scan(space, frame, judge, sample, jobs, databases)
        claim = Claim(kind, gamma, candidate, u, premise)
        label = space.describe()
        if databases is not None:
            label += ", given databases only"
        elif sample:
            label += f", sampled (seed {sample.seed})"
        if row is None:
            return Verdict(Status.CERTIFIED, checked=n, space=label, claim=claim)
        facts = frame.facts(row)
        witness = space.database(facts)
        r1 = row.reshape(1, -1)
        r2 = upd(r1)
        values = {
            "D |= Gamma": bool(ev.holds(g, r1)[0]),
            "D^U |= Gamma": bool(ev.holds(g, r2)[0]),
            "D |= T": bool(ev.holds(c, r1)[0]),
            "D^U |= T": bool(ev.holds(c, r2)[0]),
        }
        name = "Sigma" if kind == "pre" else "Upsilon"
        return Verdict(
            Status.REFUTED, witness, _pre_post_detail(values, kind, name), values, n, label, claim=claim
        )

    return _over_bindings(space, [u, _TheoryParams(gamma), _TheoryParams(candidate)], one)


def check_pre_test(sigma, gamma, u, space: EnumerationSpace, premise=Premise.CONSISTENT, sample=None, jobs=1, databases=None) -> Verdict:
    """``D^U |= gamma`` iff ``D |= sigma`` for every database in the space meeting the premise."""
    return _pre_post("pre", sigma, gamma, u, space, premise, sample, jobs, databases)


def check_post_test(upsilon, gamma, u, space: EnumerationSpace, premise=Premise.CONSISTENT, sample=None, jobs=1, databases=None) -> Verdict:
    """``D^U |= gamma`` iff ``D^U |= upsilon`` for every database in the space meeting the premise."""
    return _pre_post("post", upsilon, gamma, u, space, premise, sample, jobs, databases)


def equivalence(
    t1, t2, space: EnumerationSpace, sample=None, jobs=1, within: Optional[IntegrityTheory] = None, after=None
) -> Verdict:
    """``t1`` and ``t2`` agree on every database of the space (or those satisfying ``within``).

    With an update ``after``, both theories are compared on D^U while
    ``within`` is still read on D, so the old state is the one filtered.
    """
    u = None if after is None else _coerce(after)

    def one(binding):
        a = ground_params(t1, binding) if binding else t1
        b = ground_params(t2, binding) if binding else t2
        w = None if within is None else (ground_params(within, binding) if binding else within)
        uu = None if u is None else (instantiate(u, binding) if binding else u)
        frame = Frame(space, [uu] if uu is not None else [])
        ev = Evaluator(frame)
        upd = None if uu is None else compile_update(uu, frame)

        def judge(rows):
            inside = ev.holds(w, rows) if w is not None else np.ones(len(rows), dtype=bool)
            at = rows if upd is None else upd(rows)
            return inside, ev.holds(a, at) != ev.holds(b, at)

        row, _, n = _scan(space, frame, judge, sample, jobs)
        claim = Claim("equivalent", t1, t2, u)
        label = space.describe() + (f", sampled (seed {sample.seed})" if sample else "")
        if row is None:
            return Verdict(Status.CERTIFIED, checked=n, space=label, claim=claim)
        r = row.reshape(1, -1)
        at = r if upd is None else upd(r)
        values = {"D |= T1": bool(ev.holds(a, at)[0]), "D |= T2": bool(ev.holds(b, at)[0])}
        if upd is not None:
            values = {k.replace("D ", "D^U "): v for k, v in values.items()}
        where = "D" if upd is None else "D^U"
        detail = f"{where} {_sym(list(values.values())[0])} T1 but {where} {_sym(list(values.values())[1])} T2"
        return Verdict(Status.REFUTED, space.database(frame.facts(row)), detail, values, n, label, claim=claim)

    objs = [_TheoryParams(t1), _TheoryParams(t2)] + ([_TheoryParams(within)] if within is not None else [])
    if u is not None:
        objs.append(u)
    return _over_bindings(space, objs, one)


def check_idempotent(u, space: EnumerationSpace, jobs=1) -> Verdict:
    """``D^U == (D^U)^U`` for every database of the space."""
    u = _coerce(u)

    def one(binding):
        uu = instantiate(u, binding) if binding else u
        frame = Frame(space, [uu])
        upd = compile_update(uu, frame)

        def judge(rows):
            once = upd(rows)
            twice = upd(once)
            return np.ones(len(rows), dtype=bool), np.any(once != twice, axis=1)

        row, _, n = _scan(space, frame, judge, None, jobs)
        claim = Claim("idempotent", update=u)
        if row is None:
            return Verdict(Status.CERTIFIED, checked=n, space=space.describe(), claim=claim)
        r = row.reshape(1, -1)
        once = upd(r)
        twice = upd(once)
        detail = (
            f"D^U = {_fmt(frame.facts(once[0]))} but (D^U)^U = {_fmt(frame.facts(twice[0]))}"
        )
        return Verdict(
            Status.REFUTED, space.database(frame.facts(row)), detail, {"D^U == (D^U)^U": False}, n,
            space.describe(), claim=claim,
        )

    return _over_bindings(space, [u], one)


def _fmt(facts) -> str:
    return "{" + ", ".join(sorted(map(str, facts))) + "}"


def derive_plain_pre_test(gamma: IntegrityTheory, u, space: EnumerationSpace) -> IntegrityTheory:
    """Plain pre-test read off the space: one denial per database whose update violates ``gamma``.

    Each denial is the full description of one such database: its facts
    positively and every other atom of the space negatively.
    """
    u = _coerce(u)
    if u.parameters or gamma.parameters():
        raise ValueError("derive_plain_pre_test needs a ground update and theory")
    space.require_budget()
    frame = Frame(space, [u])
    ev = Evaluator(frame)
    upd = compile_update(u, frame)
    bad_idx = []
    for lo in range(0, space.size, CHUNK):
        hi = min(lo + CHUNK, space.size)
        rows = frame.rows(np.arange(lo, hi, dtype=np.uint64))
        bad = ~ev.holds(gamma, upd(rows))
        bad_idx.extend(int(i) + lo for i in np.flatnonzero(bad))
    denials = []
    atoms = space.atoms
    for idx in bad_idx:
        body = tuple(Literal(a, bool(idx >> i & 1)) for i, a in enumerate(atoms))
        # positive literals first keeps the printed form readable
        body = tuple(l for l in body if l.positive) + tuple(l for l in body if not l.positive)
        denials.append(Denial(body))
    return IntegrityTheory(denials)
