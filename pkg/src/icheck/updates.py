"""Updates as mappings from databases to databases.

Three shapes cover everything used here: a fact delta (delete, then
insert), a relation map (each target predicate takes the old contents of
its source), and a sequence of those.  Rules are never touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .engine import Database, check_arities
from .errors import InstantiationRequiredError, MalformedProgramError, MissingBindingError
from .logic import Atom, Const, Param


def _subst_params(atom: Atom, binding: Mapping) -> Atom:
    args = []
    for t in atom.args:
        if isinstance(t, Param):
            if t not in binding and t.name not in binding:
                raise MissingBindingError(f"no value for parameter {t}")
            v = binding[t] if t in binding else binding[t.name]
            args.append(v if isinstance(v, Const) else Const(v))
        else:
            args.append(t)
    return Atom(atom.pred, tuple(args))


@dataclass(frozen=True)
class FactDelta:
    insertions: frozenset = field(default_factory=frozenset)
    deletions: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "insertions", frozenset(self.insertions))
        object.__setattr__(self, "deletions", frozenset(self.deletions))
        for a in self.insertions | self.deletions:
            if not a.is_ground():
                raise MalformedProgramError(f"update atom {a} contains a variable")
        both = self.insertions & self.deletions
        if both:
            raise MalformedProgramError(f"{sorted(map(str, both))[0]} is both inserted and deleted")
        check_arities(a.signature for a in self.insertions | self.deletions)

    @property
    def parameters(self) -> frozenset[Param]:
        return frozenset(p for a in self.insertions | self.deletions for p in a.parameters())

    @property
    def predicates(self) -> frozenset[str]:
        return frozenset(a.pred for a in self.insertions | self.deletions)

    def is_identity(self) -> bool:
        return not self.insertions and not self.deletions

    def apply_facts(self, facts: frozenset) -> frozenset:
        if self.parameters:
            raise InstantiationRequiredError("parameterized update must be instantiated before it is applied")
        return (facts - self.deletions) | self.insertions

    def instantiate(self, binding) -> "FactDelta":
        return FactDelta(
            {_subst_params(a, binding) for a in self.insertions},
            {_subst_params(a, binding) for a in self.deletions},
        )

    def then(self, other: "FactDelta") -> "FactDelta":
        """Single delta equivalent to ``self`` followed by ``other`` (ground only)."""
        ins = (self.insertions - other.deletions) | other.insertions
        dels = (self.deletions | other.deletions) - ins
        return FactDelta(ins, dels)

    def __str__(self):
        lines = sorted(f"-{a}." for a in self.deletions) + sorted(f"+{a}." for a in self.insertions)
        return "".join(l + "\n" for l in lines)


@dataclass(frozen=True)
class RelationMap:
    """``target -> source``: the new extension of target is the old one of source."""

    mapping: tuple = ()

    def __init__(self, mapping: Union[Mapping[str, str], Iterable[tuple[str, str]]] = ()):
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        m = {}
        for t, s in items:
            if t in m and m[t] != s:
                raise MalformedProgramError(f"predicate {t} mapped twice")
            if t != s:
                m[t] = s
        object.__setattr__(self, "mapping", tuple(sorted(m.items())))

    @classmethod
    def swap(cls, p: str, q: str) -> "RelationMap":
        return cls({p: q, q: p})

    def as_dict(self) -> dict[str, str]:
        return dict(self.mapping)

    @property
    def parameters(self) -> frozenset:
        return frozenset()

    @property
    def predicates(self) -> frozenset[str]:
        return frozenset(x for pair in self.mapping for x in pair)

    def is_identity(self) -> bool:
        return not self.mapping

    def is_permutation(self) -> bool:
        m = self.as_dict()
        return set(m) == set(m.values())

    def source(self, pred: str) -> str:
        return self.as_dict().get(pred, pred)

    def apply_facts(self, facts: frozenset) -> frozenset:
        m = self.as_dict()
        if not m:
            return facts
        by_pred: dict[str, list] = {}
        for f in facts:
            by_pred.setdefault(f.pred, []).append(f)
        out = [f for f in facts if f.pred not in m]
        for target, src in m.items():
            out.extend(Atom(target, f.args) for f in by_pred.get(src, ()))
        return frozenset(out)

    def then(self, other: "RelationMap") -> "RelationMap":
        a, b = self.as_dict(), other.as_dict()
        keys = set(a) | set(b)
        return RelationMap({p: a.get(b.get(p, p), b.get(p, p)) for p in keys})

    def instantiate(self, binding) -> "RelationMap":
        return self

    def transpositions(self) -> list[tuple[str, str]]:
        """Swaps whose sequential application equals this map (permutations only)."""
        if not self.is_permutation():
            raise ValueError(f"relation map {self.mapping} is not a permutation and has no swap form")
        target = self.as_dict()
        # selection sort on the arrangement produces the swaps in reverse
        current = {p: p for p in target}
        swaps = []
        for p in sorted(target):
            if current[p] != target[p]:
                q = next(x for x in sorted(current) if current[x] == target[p])
                current[p], current[q] = current[q], current[p]
                swaps.append((p, q))
        for seq in (swaps, swaps[::-1]):
            acc = RelationMap()
            for p, q in seq:
                acc = acc.then(RelationMap.swap(p, q))
            if acc == self:
                return seq
        raise AssertionError("swap decomposition failed")  # pragma: no cover

    def __str__(self):
        return "".join(f"swap {p} {q}.\n" for p, q in self.transpositions())


Step = Union[FactDelta, RelationMap]


@dataclass(frozen=True)
class Update:
    """Sequence of steps applied left to right, kept in normal form.

    Identity steps are dropped and adjacent steps of the same kind are
    merged whenever that is sound (parameterized deltas are left alone).
    """

    steps: tuple = ()

    def __init__(self, steps: Iterable[Step] = ()):
        out: list[Step] = []
        for s in steps:
            if isinstance(s, Update):
                pending = list(s.steps)
            else:
                pending = [s]
            for st in pending:
                if st.is_identity():
                    continue
                if out and type(out[-1]) is type(st):
                    prev = out[-1]
                    if isinstance(st, RelationMap):
                        merged = prev.then(st)
                        out.pop()
                        if not merged.is_identity():
                            out.append(merged)
                        continue
                    if not prev.parameters and not st.parameters:
                        merged = prev.then(st)
                        out.pop()
                        if not merged.is_identity():
                            out.append(merged)
                        continue
                out.append(st)
        object.__setattr__(self, "steps", tuple(out))

    @classmethod
    def insert(cls, *atoms: Atom) -> "Update":
        return cls([FactDelta(insertions=atoms)])

    @classmethod
    def delete(cls, *atoms: Atom) -> "Update":
        return cls([FactDelta(deletions=atoms)])

    @classmethod
    def swap(cls, p: str, q: str) -> "Update":
        return cls([RelationMap.swap(p, q)])

    @property
    def parameters(self) -> frozenset[Param]:
        return frozenset(p for s in self.steps for p in s.parameters)

    @property
    def predicates(self) -> frozenset[str]:
        return frozenset(p for s in self.steps for p in s.predicates)

    def signatures(self) -> set[tuple[str, int]]:
        return {a.signature for s in self.steps if isinstance(s, FactDelta) for a in s.insertions | s.deletions}

    def is_identity(self) -> bool:
        return not self.steps

    def is_fact_delta(self) -> bool:
        return all(isinstance(s, FactDelta) for s in self.steps)

    def as_fact_delta(self) -> FactDelta:
        """The single delta this update amounts to (requires at most one step)."""
        if not self.is_fact_delta() or len(self.steps) > 1:
            raise ValueError("update is not a single fact delta")
        return self.steps[0] if self.steps else FactDelta()

    def then(self, other: "Update") -> "Update":
        return Update(self.steps + other.steps)

    def __str__(self):
        return "".join(str(s) for s in self.steps)


def _coerce(u) -> Update:
    return u if isinstance(u, Update) else Update([u])


def apply(u, db: Database) -> Database:
    """``D^U``; rules and declared schema are kept."""
    u = _coerce(u)
    vocab = db.vocabulary
    facts = db.facts
    for s in u.steps:
        if isinstance(s, RelationMap):
            for t, src in s.mapping:
                for p in (t, src):
                    if p in db.intensional:
                        raise MalformedProgramError(f"relation map touches intensional predicate {p}")
                if t in vocab and src in vocab and vocab[t] != vocab[src]:
                    raise MalformedProgramError(f"cannot map {src}/{vocab[src]} onto {t}/{vocab[t]}")
        else:
            for a in s.insertions | s.deletions:
                if a.pred in db.intensional:
                    raise MalformedProgramError(f"update touches intensional predicate {a.pred}")
        facts = s.apply_facts(facts)
    return Database(facts, db.rules, db.schema | frozenset(u.signatures()))


def instantiate(u, binding: Mapping) -> Update:
    """Ground a parameterized update; distinct parameters may get equal values."""
    u = _coerce(u)
    missing = [p for p in u.parameters if p not in binding and p.name not in binding]
    if missing:
        raise MissingBindingError(f"no value for parameter {sorted(map(str, missing))[0]}")
    return Update([s.instantiate(binding) for s in u.steps])


def is_idempotent(u, universe=None, vocabulary=None, budget=None):
    """Decide ``D^U == (D^U)^U``.

    Fact deltas are idempotent by construction.  Anything else is
    decided by enumerating the databases over ``universe`` and
    ``vocabulary``; that verdict only covers the enumerated space.
    """
    from .oracle import EnumerationSpace, Status, Verdict, check_idempotent

    u = _coerce(u)
    if u.is_fact_delta():
        return Verdict(Status.BY_CONSTRUCTION, detail="fact deltas are idempotent")
    if not universe or vocabulary is None:
        raise ValueError("a universe and a vocabulary are needed to decide idempotence of relation maps")
    return check_idempotent(u, EnumerationSpace(universe, vocabulary, budget=budget))
