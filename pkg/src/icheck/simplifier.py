"""Simplified integrity tests for a given update.

Plain pre-tests are computed by regression: every extensional literal
of a denial is rewritten into the old-state condition that makes it true
in the new state, and the result is distributed back into denials.
Optimized pre-tests drop the regressed denials already implied by the
old state being consistent.  Optimized post-tests instantiate each
denial with the facts an update introduces, so only the new facts
and their neighbours are read.

Intensional predicates are eliminated first by unfolding their
(non-recursive) definitions.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

import networkx as nx

from .engine import Database, RetrievalMeter, dependency_graph, holds
from .errors import (
    SimplificationLimitError,
    UnsupportedNegationError,
    UnsupportedRecursionError,
    UnsupportedUpdateError,
)
from .logic import (
    Atom,
    Comparison,
    Const,
    Denial,
    FreshNames,
    IntegrityTheory,
    Literal,
    Param,
    Rule,
    Substitution,
    Var,
    match_terms,
    rename_apart,
)
from .updates import FactDelta, RelationMap, Update, _coerce

DEFAULT_MAX_DENIALS = 256


class State(enum.Enum):
    PRE = "pre"
    POST = "post"


@dataclass(frozen=True)
class Test:
    """A theory to evaluate in ``state`` instead of checking ``of_theory`` after ``for_update``.

    ``plain`` tests are valid for every old state; the others assume the
    old state satisfies ``of_theory``.
    """

    theory: IntegrityTheory
    state: State
    plain: bool
    for_update: Update
    of_theory: IntegrityTheory

    @property
    def kind(self) -> str:
        return ("plain-" if self.plain else "") + self.state.value


@dataclass(frozen=True)
class CostReport:
    retrievals_test: int
    retrievals_original: int
    literal_count_test: int
    literal_count_original: int

    @property
    def retrieval_ratio(self) -> float:
        if self.retrievals_original == 0:
            return 0.0 if self.retrievals_test == 0 else float("inf")
        return self.retrievals_test / self.retrievals_original


# -- equation solving -----------------------------------------------------


def _solve(pairs, s: Substitution, conds: list) -> Optional[Substitution]:
    """Solve term equations; parameters that cannot be unified become ``=`` conditions."""
    for a, b in pairs:
        a, b = s.apply_term(a), s.apply_term(b)
        if a == b:
            continue
        if isinstance(a, Var) and isinstance(b, Var):
            key, val = (a, b) if a.name < b.name else (b, a)
            s = s.bind(key, val)
        elif isinstance(a, Var):
            s = s.bind(a, b)
        elif isinstance(b, Var):
            s = s.bind(b, a)
        elif isinstance(a, Const) and isinstance(b, Const):
            return None
        else:
            conds.append(Comparison(a, b, equal=True))
    return s


@dataclass(frozen=True)
class _Part:
    """One disjunct of a rewritten literal: literals, equations, disequalities."""

    lits: tuple = ()
    eqs: tuple = ()
    neqs: tuple = ()


_TRUE = _Part()


def _not_equal_tuple(t, s) -> Optional[list]:
    """Disjuncts of ``t != s`` as single-condition parts; None when it is false."""
    out = []
    for a, b in zip(t, s):
        c = Comparison(a, b)
        v = c.decide()
        if v is True:
            return [_TRUE]
        if v is None:
            out.append(_Part(neqs=(c,)))
    return out or None


def _all_unequal(t, tuples) -> Optional[list]:
    """DNF of ``t`` differing from every tuple in ``tuples``; None if unsatisfiable."""
    factors = []
    for s in tuples:
        alts = _not_equal_tuple(t, s)
        if alts is None:
            return None
        if alts != [_TRUE]:
            factors.append(alts)
    out = []
    for combo in itertools.product(*factors):
        out.append(_Part(neqs=tuple(c for p in combo for c in p.neqs)))
    return out


def _merge(parts) -> _Part:
    return _Part(
        tuple(l for p in parts for l in p.lits),
        tuple(e for p in parts for e in p.eqs),
        tuple(c for p in parts for c in p.neqs),
    )


def _regress_literal(lit: Literal, delta: FactDelta) -> list[_Part]:
    """Old-state disjuncts equivalent to ``lit`` holding after ``delta``."""
    a = lit.atom
    ins = sorted((x.args for x in delta.insertions if x.pred == a.pred), key=str)
    dels = sorted((x.args for x in delta.deletions if x.pred == a.pred), key=str)
    if not ins and not dels:
        return [_Part(lits=(lit,))]
    out: list[_Part] = []
    if lit.positive:
        # p(t) and t not deleted, or t inserted
        keep = _all_unequal(a.args, dels)
        if keep is not None:
            out += [_merge([_Part(lits=(lit,)), k]) for k in keep]
        out += [_Part(eqs=tuple(zip(a.args, s))) for s in ins]
    else:
        # (not p(t) or t deleted) and t not inserted
        fresh = _all_unequal(a.args, ins)
        if fresh is None:
            return []
        base = [_Part(lits=(lit,))] + [_Part(eqs=tuple(zip(a.args, s))) for s in dels]
        out += [_merge([b, f]) for b in base for f in fresh]
    return out


def _finish(lits, conds, s: Substitution) -> Optional[Denial]:
    """Apply ``s``; decide ground conditions; drop contradictory bodies."""
    body: list[Literal] = []
    seen = set()
    for l in lits:
        l = l.substitute(s)
        if l in seen:
            continue
        if l.negate() in seen:
            return None
        seen.add(l)
        body.append(l)
    out_conds: list[Comparison] = []
    for c in conds:
        c = c.substitute(s)
        v = c.decide()
        if v is False:
            return None
        if v is None and c not in out_conds:
            out_conds.append(c)
    for c in out_conds:
        # x = y together with x != y
        if Comparison(c.left, c.right, not c.equal) in out_conds:
            return None
    return Denial(tuple(body), tuple(out_conds))


def _combine(d: Denial, per_literal: list[list[_Part]], cap: int, produced: list) -> list[Denial]:
    out = []
    for combo in itertools.product(*per_literal):
        part = _merge(combo)
        conds = list(d.conditions) + list(part.neqs)
        s = _solve(part.eqs, Substitution(), conds)
        if s is None:
            continue
        nd = _finish(part.lits, conds, s)
        if nd is None:
            continue
        out.append(nd)
        produced[0] += 1
        if produced[0] > cap:
            raise SimplificationLimitError(produced[0], cap)
    return out


def regress_denial(d: Denial, step, cap: int = DEFAULT_MAX_DENIALS) -> list[Denial]:
    """Denials over the old state jointly equivalent to ``d`` after ``step``."""
    if isinstance(step, RelationMap):
        m = step.as_dict()
        body = tuple(Literal(Atom(m.get(l.atom.pred, l.atom.pred), l.atom.args), l.positive) for l in d.body)
        return [Denial(body, d.conditions)]
    if not isinstance(step, FactDelta):
        raise UnsupportedUpdateError(f"cannot regress through {type(step).__name__}")
    per = [_regress_literal(l, step) for l in d.body]
    return _combine(d, per, cap, [0])


# -- unfolding views ------------------------------------------------------


def _check_nonrecursive(preds: Iterable[str], rules: tuple) -> None:
    g = dependency_graph(rules)
    reach = set()
    for p in preds:
        if p in g:
            reach.add(p)
            reach |= nx.descendants(g, p)
    sub = g.subgraph(reach)
    try:
        cycle = nx.find_cycle(sub)
    except nx.NetworkXNoCycle:
        return
    raise UnsupportedRecursionError([e[0] for e in cycle] + [cycle[-1][1]])


def _unify_prefer(pairs, fresh: set, s: Substitution, conds: list) -> Optional[Substitution]:
    """Unify rule-head terms with call terms, binding fresh variables first."""
    for a, b in pairs:
        a, b = s.apply_term(a), s.apply_term(b)
        if a == b:
            continue
        if isinstance(a, Var) and a in fresh:
            s = s.bind(a, b)
        elif isinstance(b, Var) and b in fresh:
            s = s.bind(b, a)
        else:
            s2 = _solve([(a, b)], s, conds)
            if s2 is None:
                return None
            s = s2
    return s


def _negated_view(lit: Literal, rules: list[Rule], names: FreshNames) -> list[list[_Part]]:
    """``not p(t)`` as a conjunction (over rules) of disjunctions of parts."""
    factors = []
    for r in rules:
        body_vars = {v for l in r.body for v in l.variables()}
        if not body_vars <= set(r.head.variables()):
            raise UnsupportedNegationError(
                f"cannot negate {lit.atom}: rule {r} has variables outside its head"
            )
        r = rename_apart(r, names)
        fresh = r.variables()
        eq_conds: list[Comparison] = []
        s = _unify_prefer(zip(r.head.args, lit.atom.args), fresh, Substitution(), eq_conds)
        if s is None:
            continue
        alts = []
        trivially_true = False
        # bindings of caller variables are equalities the rule needs
        for v, t in s.items():
            if v not in fresh:
                c = Comparison(v, t)
                dv = c.decide()
                if dv is True:
                    trivially_true = True
                elif dv is None:
                    alts.append(_Part(neqs=(c,)))
        for c in eq_conds:
            neg = Comparison(c.left, c.right, not c.equal)
            alts.append(_Part(neqs=(neg,)))
        for l in r.body:
            alts.append(_Part(lits=(l.substitute(s).negate(),)))
        if trivially_true:
            continue
        factors.append(alts)
    return factors


def unfold(d: Denial, rules: tuple, cap: int = DEFAULT_MAX_DENIALS) -> list[Denial]:
    """Rewrite ``d`` into denials over extensional predicates only."""
    by_head: dict[str, list[Rule]] = {}
    for r in rules:
        by_head.setdefault(r.head.pred, []).append(r)
    if not any(l.atom.pred in by_head for l in d.body):
        return [d]
    _check_nonrecursive(d.predicates(), rules)
    names = FreshNames(v.name for v in d.variables())
    for r in rules:
        names.taken.update(v.name for v in r.variables())
    done: list[Denial] = []
    work = [d]
    while work:
        cur = work.pop()
        idx = next((i for i, l in enumerate(cur.body) if l.atom.pred in by_head), None)
        if idx is None:
            done.append(cur)
            if len(done) > cap:
                raise SimplificationLimitError(len(done), cap)
            continue
        lit = cur.body[idx]
        before, after = cur.body[:idx], cur.body[idx + 1:]
        if lit.positive:
            for r in by_head[lit.atom.pred]:
                r = rename_apart(r, names)
                conds = list(cur.conditions)
                s = _unify_prefer(zip(r.head.args, lit.atom.args), r.variables(), Substitution(), conds)
                if s is None:
                    continue
                nd = _finish(before + r.body + after, conds, s)
                if nd is not None:
                    work.append(nd)
        else:
            factors = _negated_view(lit, by_head[lit.atom.pred], names)
            rest = Denial(before + after, cur.conditions)
            per = [[_Part(lits=(l,))] for l in rest.body] + factors
            work.extend(_combine(rest, per, cap, [0]))
    return done


# -- subsumption ----------------------------------------------------------


def subsumes(d1: Denial, d2: Denial) -> bool:
    """Clause subsumption: some instance of ``d1``'s body is contained in ``d2``'s.

    Variables of ``d2`` are treated as constants.  A denial that subsumes
    another is violated whenever the other one is.
    """
    lits1 = sorted(d1.body, key=lambda l: -len(l.atom.args))
    by_key: dict = {}
    for l in d2.body:
        by_key.setdefault((l.atom.pred, l.positive), []).append(l)
    conds2 = set(d2.conditions)

    def conds_ok(theta) -> bool:
        # theta is a one-way match, possibly a renaming like {Y: Z, Z: Y},
        # so it is applied simultaneously rather than as a solved substitution
        for c in d1.conditions:
            c = Comparison(theta.get(c.left, c.left), theta.get(c.right, c.right), c.equal)
            if c.decide() is True:
                continue
            if c not in conds2:
                return False
        return True

    def go(i, theta) -> bool:
        if i == len(lits1):
            return conds_ok(theta)
        l = lits1[i]
        for cand in by_key.get((l.atom.pred, l.positive), ()):
            th = match_terms(l.atom.args, cand.atom.args, theta)
            if th is not None and go(i + 1, th):
                return True
        return False

    return go(0, {})


def remove_subsumed(denials: Iterable[Denial]) -> list[Denial]:
    order = sorted(set(denials), key=lambda d: (d.literal_count(), str(d)))
    kept: list[Denial] = []
    for d in order:
        if any(subsumes(k, d) for k in kept):
            continue
        kept = [k for k in kept if not subsumes(d, k)]
        kept.append(d)
    return kept


# -- tests ----------------------------------------------------------------


def _rules_of(db_rules) -> tuple:
    if db_rules is None:
        return ()
    if isinstance(db_rules, Database):
        return db_rules.rules
    return tuple(db_rules)


def _unfold_theory(gamma: IntegrityTheory, rules, cap) -> list[Denial]:
    out = []
    for d in gamma:
        out.extend(unfold(d, rules, cap))
    return out


def regress(gamma: IntegrityTheory, u, db_rules=None, max_denials: int = DEFAULT_MAX_DENIALS) -> IntegrityTheory:
    """Theory that holds in D exactly when ``gamma`` holds in D^U."""
    u = _coerce(u)
    rules = _rules_of(db_rules)
    out: list[Denial] = []
    for d in _unfold_theory(gamma, rules, max_denials):
        current = [d]
        for step in reversed(u.steps):
            nxt: list[Denial] = []
            for c in current:
                nxt.extend(regress_denial(c, step, max_denials))
            current = remove_subsumed(nxt)
            if len(current) > max_denials:
                raise SimplificationLimitError(len(current), max_denials)
        out.extend(current)
    return IntegrityTheory(remove_subsumed(out))


def plain_pre_test(gamma, u, db_rules=None, max_denials: int = DEFAULT_MAX_DENIALS) -> Test:
    u = _coerce(u)
    return Test(regress(gamma, u, db_rules, max_denials), State.PRE, True, u, gamma)


def optimized_pre_test(gamma, u, db_rules=None, max_denials: int = DEFAULT_MAX_DENIALS) -> Test:
    """Plain pre-test minus the denials any consistent old state already satisfies."""
    u = _coerce(u)
    rules = _rules_of(db_rules)
    plain = regress(gamma, u, rules, max_denials)
    originals = _unfold_theory(gamma, rules, max_denials)
    kept = [d for d in plain if not any(subsumes(g, d) for g in originals)]
    return Test(IntegrityTheory(kept), State.PRE, False, u, gamma)


def plain_post_test(gamma, u, via_pre: bool = False, db_rules=None, max_denials: int = DEFAULT_MAX_DENIALS) -> Test:
    """``gamma`` itself; with ``via_pre`` and a fact-delta update, the plain pre-test.

    A plain pre-test only doubles as a plain post-test when the update is
    idempotent, which fact deltas are by construction; other updates fall
    back to ``gamma``.
    """
    u = _coerce(u)
    if via_pre and u.is_fact_delta():
        return Test(regress(gamma, u, db_rules, max_denials), State.POST, True, u, gamma)
    return Test(gamma, State.POST, True, u, gamma)


def _introduced(d: Denial, delta: FactDelta) -> list[Denial]:
    out = []
    for i, lit in enumerate(d.body):
        pool = delta.insertions if lit.positive else delta.deletions
        for fact in sorted(pool, key=str):
            if fact.pred != lit.atom.pred:
                continue
            conds = list(d.conditions)
            s = _solve(zip(lit.atom.args, fact.args), Substitution(), conds)
            if s is None:
                continue
            nd = _finish(d.body[:i] + d.body[i + 1:], conds, s)
            if nd is not None:
                out.append(nd)
    return out


def optimized_post_test(gamma, u, db_rules=None, max_denials: int = DEFAULT_MAX_DENIALS) -> Test:
    """Instances of each denial through a fact the update made true.

    A new violation needs a literal that changed truth value: a positive
    literal matching an inserted fact or a negative one matching a
    deleted fact.  That literal is true after the update and is dropped.
    Updates other than a single fact delta get ``gamma`` back.
    """
    u = _coerce(u)
    if not u.is_fact_delta() or len(u.steps) > 1:
        return Test(gamma, State.POST, False, u, gamma)
    delta = u.as_fact_delta()
    rules = _rules_of(db_rules)
    out: list[Denial] = []
    for d in _unfold_theory(gamma, rules, max_denials):
        got = _introduced(d, delta)
        if len(got) > max_denials:
            raise SimplificationLimitError(len(got), max_denials)
        out.extend(got)
    return Test(IntegrityTheory(remove_subsumed(out)), State.POST, False, u, gamma)


def cost_compare(t: Test, gamma: IntegrityTheory, db, gamma_db=None) -> CostReport:
    """Fact retrievals and literal counts of ``t`` against ``gamma``.

    ``db`` is the state ``t`` is meant for; ``gamma`` is evaluated on
    ``gamma_db`` when given (usually the updated state), else on ``db``.
    """
    m_test, m_orig = RetrievalMeter(), RetrievalMeter()
    holds(db, t.theory, m_test)
    holds(db if gamma_db is None else gamma_db, gamma, m_orig)
    return CostReport(m_test.count, m_orig.count, t.theory.literal_count(), gamma.literal_count())
