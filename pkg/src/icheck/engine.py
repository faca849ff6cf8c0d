"""Stratified datalog: standard model, consistency checking, retrieval counting.

Models are built bottom-up, one stratum at a time, with semi-naive
iteration.  Denials are evaluated against the finished model by an
index-driven nested-loop join.  Every stored extensional fact handed out
by a lookup is counted on a :class:`RetrievalMeter`; derived facts are
free.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

import networkx as nx

from .errors import (
    InstantiationRequiredError,
    MalformedProgramError,
    NotStratifiableError,
    VocabularyError,
)
from .logic import Atom, Comparison, Const, Denial, IntegrityTheory, Literal, Param, Rule, Var


def check_arities(signatures: Iterable[tuple[str, int]], where: str = "") -> dict[str, int]:
    seen: dict[str, int] = {}
    for pred, n in signatures:
        old = seen.setdefault(pred, n)
        if old != n:
            suffix = f" in {where}" if where else ""
            raise MalformedProgramError(f"predicate {pred} used with arities {old} and {n}{suffix}")
    return seen


@dataclass(frozen=True)
class Database:
    """Ground facts plus rules, and optionally declared signatures.

    ``schema`` lets a database declare predicates that currently have
    no facts, so that constraints over them are not vocabulary errors.
    """

    facts: frozenset = field(default_factory=frozenset)
    rules: tuple = ()
    schema: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "facts", frozenset(self.facts))
        object.__setattr__(self, "rules", tuple(self.rules))
        schema = self.schema.items() if isinstance(self.schema, Mapping) else self.schema
        object.__setattr__(self, "schema", frozenset(schema))
        for f in self.facts:
            if not f.is_fact():
                raise MalformedProgramError(f"fact {f} is not ground")
        heads = {r.head.pred for r in self.rules}
        clash = heads & {f.pred for f in self.facts}
        if clash:
            raise MalformedProgramError(
                f"predicates {sorted(clash)} are both extensional and intensional"
            )
        check_arities(self._signatures())

    def _signatures(self):
        yield from self.schema
        for f in self.facts:
            yield f.signature
        for r in self.rules:
            yield r.head.signature
            for lit in r.body:
                yield lit.atom.signature

    @property
    def vocabulary(self) -> dict[str, int]:
        return check_arities(self._signatures())

    @property
    def intensional(self) -> frozenset[str]:
        return frozenset(r.head.pred for r in self.rules)

    @property
    def extensional(self) -> frozenset[str]:
        return frozenset(p for p in self.vocabulary if p not in self.intensional)

    def with_facts(self, facts) -> "Database":
        return Database(facts, self.rules, self.schema)

    def __str__(self):
        lines = sorted(f"{f}." for f in self.facts)
        lines += [str(r) for r in self.rules]
        return "".join(l + "\n" for l in lines)


class RetrievalMeter:
    """Thread-safe count of extensional facts read."""

    def __init__(self):
        self._n = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._n

    def add(self, n: int):
        if n:
            with self._lock:
                self._n += n

    def __repr__(self):
        return f"RetrievalMeter({self._n})"


class Relation:
    """Tuple set with lazily built hash indexes over bound argument positions."""

    __slots__ = ("tuples", "counted", "_index", "_lock")

    def __init__(self, tuples=(), counted=False):
        self.tuples = set(tuples)
        self.counted = counted
        self._index: dict = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.tuples)

    def __contains__(self, t):
        return t in self.tuples

    def add(self, t) -> bool:
        if t in self.tuples:
            return False
        self.tuples.add(t)
        for positions, idx in self._index.items():
            idx.setdefault(tuple(t[i] for i in positions), []).append(t)
        return True

    def _get_index(self, positions):
        idx = self._index.get(positions)
        if idx is None:
            with self._lock:
                idx = self._index.get(positions)
                if idx is None:
                    idx = {}
                    for t in self.tuples:
                        idx.setdefault(tuple(t[i] for i in positions), []).append(t)
                    self._index[positions] = idx
        return idx

    def lookup(self, pattern: tuple, meter: Optional[RetrievalMeter]) -> list:
        """Stored tuples agreeing with ``pattern`` where it is not None."""
        positions = tuple(i for i, x in enumerate(pattern) if x is not None)
        if len(positions) == len(pattern):
            out = [pattern] if pattern in self.tuples else []
        elif not positions:
            out = list(self.tuples)
        else:
            out = self._get_index(positions).get(tuple(pattern[i] for i in positions), [])
        if self.counted and meter is not None:
            meter.add(len(out))
        return out


class Model:
    """Standard model of a database.

    ``retrievals`` is the number of extensional facts read while building
    it (zero for rule-free databases).
    """

    def __init__(self, db: Database, relations: dict[str, Relation], retrievals: int):
        self.db = db
        self.relations = relations
        self.retrievals = retrievals

    @property
    def true_atoms(self) -> frozenset[Atom]:
        return frozenset(
            Atom(p, t) for p, rel in self.relations.items() for t in rel.tuples
        )

    def relation(self, pred: str) -> Relation:
        rel = self.relations.get(pred)
        if rel is None:
            raise VocabularyError(f"unknown predicate {pred}")
        return rel

    def __contains__(self, atom: Atom):
        rel = self.relations.get(atom.pred)
        return rel is not None and atom.args in rel


# -- stratification -------------------------------------------------------


def dependency_graph(rules: Iterable[Rule], preds: Iterable[str] = ()) -> nx.DiGraph:
    """Edge ``p -> q`` when a rule for p uses q; ``neg`` marks negative use."""
    g = nx.DiGraph()
    g.add_nodes_from(preds)
    for r in rules:
        g.add_node(r.head.pred)
        for lit in r.body:
            q = lit.atom.pred
            if g.has_edge(r.head.pred, q):
                g[r.head.pred][q]["neg"] |= not lit.positive
            else:
                g.add_edge(r.head.pred, q, neg=not lit.positive)
    return g


def stratify(db: Database) -> list[frozenset[str]]:
    """Partition predicates into strata, lowest first.

    Positive dependencies stay within or below a stratum, negative ones
    point strictly below.  Each predicate gets the lowest possible level.
    """
    g = dependency_graph(db.rules, db.vocabulary)
    for p, q, neg in g.edges(data="neg"):
        if neg and nx.has_path(g, q, p):
            cycle = [p] + nx.shortest_path(g, q, p)
            raise NotStratifiableError(cycle)
    cond = nx.condensation(g)
    level: dict[int, int] = {}
    for c in reversed(list(nx.topological_sort(cond))):
        lv = 0
        for p in cond.nodes[c]["members"]:
            for q in g.successors(p):
                dq = cond.graph["mapping"][q]
                if dq == c:
                    continue
                lv = max(lv, level[dq] + (1 if g[p][q]["neg"] else 0))
        level[c] = lv
    if not level:
        return []
    strata: list[set[str]] = [set() for _ in range(max(level.values()) + 1)]
    for c, lv in level.items():
        strata[lv].update(cond.nodes[c]["members"])
    return [frozenset(s) for s in strata if s]


# -- joins ----------------------------------------------------------------


def _resolve(t, env):
    if isinstance(t, Var):
        return env.get(t)
    if isinstance(t, Param):
        raise InstantiationRequiredError(f"parameter {t} must be instantiated before evaluation")
    return t


def _pattern(atom: Atom, env) -> tuple:
    return tuple(_resolve(t, env) for t in atom.args)


def _is_ready(goal, env) -> bool:
    if isinstance(goal, Comparison):
        terms = (goal.left, goal.right)
    else:
        terms = goal.atom.args
    return all(not isinstance(t, Var) or t in env for t in terms)


def _pick(goals, env) -> int:
    """Next goal: any ready filter first, else the most bound positive literal."""
    best, best_score = -1, -1
    for i, (g, _) in enumerate(goals):
        if isinstance(g, Comparison) or not g.positive:
            if _is_ready(g, env):
                return i
            continue
        score = sum(1 for t in g.atom.args if not isinstance(t, Var) or t in env)
        if score == len(g.atom.args):
            return i
        if score > best_score:
            best, best_score = i, score
    return best


def solve(goals: list, env: dict, meter: Optional[RetrievalMeter]) -> Iterator[dict]:
    """Enumerate extensions of ``env`` satisfying all ``goals``.

    ``goals`` is a list of ``(goal, relation)`` pairs; comparisons carry
    ``None`` as relation.
    """
    if not goals:
        yield env
        return
    i = _pick(goals, env)
    if i < 0:
        raise MalformedProgramError("unsafe goal list: a variable is never bound")
    goal, rel = goals[i]
    rest = goals[:i] + goals[i + 1:]
    if isinstance(goal, Comparison):
        l, r = _resolve(goal.left, env), _resolve(goal.right, env)
        if (l == r) == goal.equal:
            yield from solve(rest, env, meter)
        return
    pat = _pattern(goal.atom, env)
    if not goal.positive:
        if not rel.lookup(pat, meter):
            yield from solve(rest, env, meter)
        return
    args = goal.atom.args
    for tup in rel.lookup(pat, meter):
        new = env
        ok = True
        for t, c in zip(args, tup):
            if isinstance(t, Var):
                old = new.get(t)
                if old is None:
                    if new is env:
                        new = dict(env)
                    new[t] = c
                elif old != c:
                    ok = False
                    break
        if ok:
            yield from solve(rest, new, meter)


# -- model construction ---------------------------------------------------


def _relations_for(db: Database) -> dict[str, Relation]:
    rels: dict[str, Relation] = {}
    for p in db.vocabulary:
        rels[p] = Relation(counted=p not in db.intensional)
    for f in db.facts:
        rels[f.pred].tuples.add(f.args)
    return rels


def _fire(rule: Rule, rels, meter, delta_pos=None, delta=None):
    goals = []
    for j, lit in enumerate(rule.body):
        rel = delta if j == delta_pos else rels[lit.atom.pred]
        goals.append((lit, rel))
    for env in solve(goals, {}, meter):
        yield tuple(env[t] if isinstance(t, Var) else t for t in rule.head.args)


def standard_model(db: Database, meter: Optional[RetrievalMeter] = None) -> Model:
    own = RetrievalMeter()
    rels = _relations_for(db)
    for stratum in stratify(db):
        rules = [r for r in db.rules if r.head.pred in stratum]
        if not rules:
            continue
        # first round: everything from scratch
        delta: dict[str, set] = {p: set() for p in stratum}
        for r in rules:
            for t in _fire(r, rels, own):
                if t not in rels[r.head.pred]:
                    delta[r.head.pred].add(t)
        for p, ts in delta.items():
            for t in ts:
                rels[p].add(t)
        while any(delta.values()):
            drel = {p: Relation(ts) for p, ts in delta.items()}
            new: dict[str, set] = {p: set() for p in stratum}
            for r in rules:
                for j, lit in enumerate(r.body):
                    if lit.positive and lit.atom.pred in stratum and delta[lit.atom.pred]:
                        for t in _fire(r, rels, own, j, drel[lit.atom.pred]):
                            if t not in rels[r.head.pred]:
                                new[r.head.pred].add(t)
            for p, ts in new.items():
                for t in ts:
                    rels[p].add(t)
            delta = new
    if meter is not None:
        meter.add(own.count)
    return Model(db, rels, own.count)


def naive_model(db: Database) -> frozenset[Atom]:
    """Reference fixpoint by brute-force grounding over the active domain.

    Deliberately shares nothing with :func:`standard_model` except the
    stratification; used for differential testing.
    """
    domain = sorted(
        {t for f in db.facts for t in f.args}
        | {t for r in db.rules for lit in (r.head, *(l.atom for l in r.body)) for t in lit.args if isinstance(t, Const)},
        key=lambda c: c.name,
    )
    true = set(db.facts)
    for stratum in stratify(db):
        rules = [r for r in db.rules if r.head.pred in stratum]
        changed = True
        while changed:
            changed = False
            for r in rules:
                vs = sorted(r.variables(), key=lambda v: v.name)
                for combo in itertools.product(domain, repeat=len(vs)):
                    s = dict(zip(vs, combo))
                    ground = [
                        (Atom(l.atom.pred, tuple(s.get(t, t) for t in l.atom.args)), l.positive)
                        for l in r.body
                    ]
                    if all((a in true) == pos for a, pos in ground):
                        h = Atom(r.head.pred, tuple(s.get(t, t) for t in r.head.args))
                        if h not in true:
                            true.add(h)
                            changed = True
    return frozenset(true)


# -- constraint checking --------------------------------------------------


def _as_model(db, meter) -> Model:
    return db if isinstance(db, Model) else standard_model(db, meter)


def _goals(model: Model, d: Denial) -> list:
    vocab = model.db.vocabulary
    goals = []
    for lit in d.body:
        a = lit.atom
        if a.pred not in vocab:
            raise VocabularyError(f"constraint {d} uses unknown predicate {a.pred}")
        if vocab[a.pred] != a.arity:
            raise MalformedProgramError(
                f"constraint {d} uses {a.pred}/{a.arity} but the database has {a.pred}/{vocab[a.pred]}"
            )
        goals.append((lit, model.relations[a.pred]))
    goals.extend((c, None) for c in d.conditions)
    return goals


def violates(model: Model, d: Denial, meter: Optional[RetrievalMeter] = None) -> bool:
    for _ in solve(_goals(model, d), {}, meter):
        return True
    return False


def holds(db, theory: IntegrityTheory, meter: Optional[RetrievalMeter] = None) -> bool:
    """``db |= theory``: no denial body is satisfiable in the standard model.

    ``db`` may be a :class:`Database` or an already built :class:`Model`.
    Stops at the first violated denial, in printed order.
    """
    model = _as_model(db, meter)
    for d in theory:
        if violates(model, d, meter):
            return False
    return True


def count_retrievals(db, theory: IntegrityTheory) -> tuple[bool, int]:
    meter = RetrievalMeter()
    return holds(db, theory, meter), meter.count


def violated_instances(db, d: Denial, meter: Optional[RetrievalMeter] = None) -> frozenset[tuple]:
    """All ground instances of the body of ``d`` true in the model."""
    model = _as_model(db, meter)
    out = set()
    for env in solve(_goals(model, d), {}, meter):
        out.add(tuple(
            Literal(Atom(l.atom.pred, tuple(env.get(t, t) for t in l.atom.args)), l.positive)
            for l in d.body
        ))
    return frozenset(out)
