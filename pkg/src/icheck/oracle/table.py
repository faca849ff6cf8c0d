"""Containment matrix between the four classes of tests.

For each (theory, update) pair of a suite, a handful of candidate
theories are classified as pre-test, post-test, plain pre-test and plain
post-test by the oracle.  A row ``X <= Y`` is answered *no* as soon as
some candidate lies in X but not in Y, and that refutation is kept as a
replayable witness; otherwise the row is *yes on the suite*.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .. import simplifier
from ..logic import IntegrityTheory
from ..syntax import parse_update, theory
from ..updates import Update, is_idempotent
from .checks import Premise, Verdict, check_post_test, check_pre_test
from .generate import random_case, random_theory
from .space import EnumerationSpace


class Family(enum.Enum):
    PRE = "Pre"
    POST = "Post"
    PRE0 = "Pre0"
    POST0 = "Post0"


class Row(enum.Enum):
    PRE_IN_POST = (Family.PRE, Family.POST)
    POST_IN_PRE = (Family.POST, Family.PRE)
    PRE0_IN_PRE = (Family.PRE0, Family.PRE)
    POST0_IN_POST = (Family.POST0, Family.POST)
    PRE0_IN_POST = (Family.PRE0, Family.POST)

    @property
    def label(self) -> str:
        a, b = self.value
        return f"{a.value} <= {b.value}"


ROWS = tuple(Row)

# the matrix to reproduce: any update / idempotent updates
EXPECTED = {
    "any": ("no", "no", "yes", "yes", "no"),
    "idempotent": ("no", "no", "yes", "yes", "yes"),
}


@dataclass
class Pair:
    label: str
    gamma: IntegrityTheory
    update: Update
    space: EnumerationSpace
    candidates: list = field(default_factory=list)  # (name, theory)
    _idem: Optional[bool] = None
    _member: dict = field(default_factory=dict)

    @property
    def idempotent(self) -> bool:
        if self._idem is None:
            self._idem = is_idempotent(self.update, self.space.universe, self.space.vocabulary).certified
        return self._idem

    def membership(self, name: str, cls: Family) -> Verdict:
        key = (name, cls)
        v = self._member.get(key)
        if v is None:
            t = dict(self.candidates)[name]
            premise = Premise.ALL if cls in (Family.PRE0, Family.POST0) else Premise.CONSISTENT
            check = check_pre_test if cls in (Family.PRE, Family.PRE0) else check_post_test
            v = check(t, self.gamma, self.update, self.space, premise)
            self._member[key] = v
        return v


@dataclass
class Witness:
    pair: Pair
    candidate: str
    theory: IntegrityTheory
    member_of: Family
    refuted_in: Family
    verdict: Verdict

    def replay(self) -> dict[str, bool]:
        return self.verdict.replay()

    def describe(self) -> str:
        return (
            f"[{self.pair.label}] candidate {self.candidate} {{{' '.join(map(str, self.theory))}}} "
            f"is in {self.member_of.value} but not in {self.refuted_in.value}: {self.verdict.summary()}"
        )


@dataclass
class RowReport:
    row: Row
    column: str
    answer: str  # yes | no | n/a
    pairs: int
    candidates: int
    witness: Optional[Witness] = None
    degenerate: bool = False


def table_row_check(row: Row, suite: Iterable[Pair], column: str = "any") -> RowReport:
    """Answer one row over the suite; ``column`` is ``any`` or ``idempotent``."""
    left, right = row.value
    pairs = [p for p in suite if column == "any" or p.idempotent]
    n_cand = 0
    for p in pairs:
        for name, t in p.candidates:
            n_cand += 1
            if not p.membership(name, left).certified:
                continue
            v = p.membership(name, right)
            if v.refuted:
                return RowReport(row, column, "no", len(pairs), n_cand, Witness(p, name, t, left, right, v))
    answer = "yes" if pairs else "n/a"
    degenerate = bool(pairs) and all(p.update.is_identity() for p in pairs)
    return RowReport(row, column, answer, len(pairs), n_cand, None, degenerate)


def witness_pairs() -> list[Pair]:
    """The fixed witnesses: the relation swap and the single insertion."""
    g2 = theory(":- p(a), q(b).")
    swap = Update.swap("p", "q")
    swap_pair = Pair(
        "swap p q",
        g2,
        swap,
        EnumerationSpace("ab", {"p": 1, "q": 1}),
        [("sigma", theory(":- q(a), p(b).")), ("upsilon", g2)],
    )
    g3 = theory(":- p(a).")
    ins = parse_update("+p(a).")
    insertion = Pair(
        "insert p(a)",
        g3,
        ins,
        EnumerationSpace("a", {"p": 1}),
        [("sigma", theory(":- not p(a).")), ("upsilon", g3)],
    )
    return [swap_pair, insertion]


def generated_candidates(gamma, u, rng: random.Random, space: EnumerationSpace) -> list:
    out = [
        ("gamma", gamma),
        ("plain-pre", simplifier.plain_pre_test(gamma, u).theory),
        ("optimized-pre", simplifier.optimized_pre_test(gamma, u).theory),
        ("optimized-post", simplifier.optimized_post_test(gamma, u).theory),
        ("plain-post", simplifier.plain_post_test(gamma, u, via_pre=True).theory),
        ("false", theory(":- true.")),
    ]
    for i in range(2):
        out.append((f"random-{i}", random_theory(rng, space.universe, space.vocabulary)))
    return out


def build_suite(n_pairs: int = 24, seed: int = 0, kinds=("delta", "swap", "map", "mixed"), include_witnesses: bool = True, max_hb: int = 8) -> list[Pair]:
    rng = random.Random(seed)
    suite = witness_pairs() if include_witnesses else []
    for i in range(n_pairs):
        case = random_case(rng, kinds[i % len(kinds)], max_hb)
        cands = generated_candidates(case.gamma, case.update, rng, case.space)
        label = f"random #{i} ({case.kind})"
        suite.append(Pair(label, case.gamma, case.update, case.space, cands))
    return suite


@dataclass
class Table:
    reports: dict  # (column, row) -> RowReport

    def answers(self, column: str) -> tuple[str, ...]:
        return tuple(self.reports[(column, r)].answer for r in ROWS)

    def matches_expected(self) -> bool:
        return all(self.answers(c) == EXPECTED[c] for c in EXPECTED)

    def render(self) -> str:
        lines = [f"{'':18}{'any U':>8}{'U idempotent':>15}"]
        for r in ROWS:
            a = self.reports[("any", r)]
            b = self.reports[("idempotent", r)]
            lines.append(f"{r.label + '?':18}{_cell(a):>8}{_cell(b):>15}")
        return "\n".join(lines)


def _cell(rep: RowReport) -> str:
    return rep.answer + ("*" if rep.degenerate else "")


def run_table(suite: list[Pair]) -> Table:
    reports = {}
    for column in ("any", "idempotent"):
        for r in ROWS:
            reports[(column, r)] = table_row_check(r, suite, column)
    return Table(reports)
