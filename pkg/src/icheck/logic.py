"""Terms, atoms, literals, clauses and unification.

Everything here is an immutable value.  The textual form produced by
``str()`` is the canonical syntax accepted by :mod:`icheck.syntax`.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import MalformedProgramError

_LOWER = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")
_UPPER = re.compile(r"[A-Z][a-zA-Z0-9_]*\Z")
_PARAM = re.compile(r"[a-zA-Z0-9_]+\Z")


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __post_init__(self):
        if not _UPPER.match(self.name):
            raise MalformedProgramError(f"bad variable name {self.name!r}")

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    name: str

    def __post_init__(self):
        if not _LOWER.match(self.name):
            raise MalformedProgramError(f"bad constant name {self.name!r}")

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Param:
    """Placeholder constant of an update pattern, written ``$name``."""

    name: str

    def __post_init__(self):
        if not _PARAM.match(self.name):
            raise MalformedProgramError(f"bad parameter name {self.name!r}")

    def __str__(self):
        return "$" + self.name


Term = Union[Var, Const, Param]

_KIND_ORDER = {Var: 0, Const: 1, Param: 2}


def term_key(t: Term):
    return (_KIND_ORDER[type(t)], t.name)


def is_ground(t: Term) -> bool:
    """Ground means variable-free; parameters count as ground."""
    return not isinstance(t, Var)


@dataclass(frozen=True, slots=True)
class Atom:
    pred: str
    args: tuple = ()

    def __post_init__(self):
        if not _LOWER.match(self.pred):
            raise MalformedProgramError(f"bad predicate name {self.pred!r}")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> tuple[str, int]:
        return (self.pred, len(self.args))

    def variables(self) -> Iterator[Var]:
        return (t for t in self.args if isinstance(t, Var))

    def parameters(self) -> Iterator[Param]:
        return (t for t in self.args if isinstance(t, Param))

    def is_ground(self) -> bool:
        return all(is_ground(t) for t in self.args)

    def is_fact(self) -> bool:
        """Ground and parameter-free."""
        return all(isinstance(t, Const) for t in self.args)

    def substitute(self, s: "Substitution") -> "Atom":
        if not s:
            return self
        return Atom(self.pred, tuple(s.get(t, t) if isinstance(t, Var) else t for t in self.args))

    def key(self):
        return (self.pred, tuple(term_key(t) for t in self.args))

    def __str__(self):
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(map(str, self.args))})"


@dataclass(frozen=True, slots=True)
class Literal:
    atom: Atom
    positive: bool = True

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def substitute(self, s: "Substitution") -> "Literal":
        return Literal(self.atom.substitute(s), self.positive) if s else self

    def variables(self) -> Iterator[Var]:
        return self.atom.variables()

    def __str__(self):
        return str(self.atom) if self.positive else f"not {self.atom}"


@dataclass(frozen=True, slots=True)
class Comparison:
    """Side condition ``left != right`` (or ``left = right`` when ``equal``).

    Equalities only arise for update parameters, whose identity with a
    constant is unknown at simplification time.
    """

    left: Term
    right: Term
    equal: bool = False

    def __post_init__(self):
        # canonical orientation: variables first, then by name
        if term_key(self.right) < term_key(self.left):
            l, r = self.right, self.left
            object.__setattr__(self, "left", l)
            object.__setattr__(self, "right", r)

    def substitute(self, s: "Substitution") -> "Comparison":
        if not s:
            return self
        return Comparison(s.apply_term(self.left), s.apply_term(self.right), self.equal)

    def variables(self) -> Iterator[Var]:
        return (t for t in (self.left, self.right) if isinstance(t, Var))

    def decide(self) -> Optional[bool]:
        """Truth value when it is decidable without a database, else None.

        Distinct constants are distinct; anything involving a variable or
        a parameter is undecided unless both sides are identical.
        """
        if self.left == self.right:
            return self.equal
        if isinstance(self.left, Const) and isinstance(self.right, Const):
            return not self.equal
        return None

    def __str__(self):
        op = "=" if self.equal else "!="
        return f"{self.left} {op} {self.right}"


def _literal_list(xs) -> str:
    return ", ".join(map(str, xs))


@dataclass(frozen=True, slots=True)
class Rule:
    head: Atom
    body: tuple = ()

    def __post_init__(self):
        if not isinstance(self.body, tuple):
            object.__setattr__(self, "body", tuple(self.body))
        bound = {v for lit in self.body if lit.positive for v in lit.variables()}
        loose = [v for v in self.head.variables() if v not in bound]
        loose += [v for lit in self.body if not lit.positive for v in lit.variables() if v not in bound]
        if loose:
            raise MalformedProgramError(f"unsafe rule {self}: {loose[0]} not bound positively")
        if any(isinstance(t, Param) for t in self.head.args) or any(
            any(True for _ in lit.atom.parameters()) for lit in self.body
        ):
            raise MalformedProgramError(f"rule {self} mentions an update parameter")

    def variables(self) -> set[Var]:
        out = set(self.head.variables())
        for lit in self.body:
            out.update(lit.variables())
        return out

    def substitute(self, s: "Substitution") -> "Rule":
        return Rule(self.head.substitute(s), tuple(l.substitute(s) for l in self.body))

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {_literal_list(self.body)}."


@dataclass(frozen=True, slots=True)
class Denial:
    """Headless clause ``:- body, conditions.``; violated iff the body is satisfiable.

    The empty body stands for ``true`` so ``Denial(())`` is the constraint
    that is violated in every database.
    """

    body: tuple = ()
    conditions: tuple = ()

    def __post_init__(self):
        if not isinstance(self.body, tuple):
            object.__setattr__(self, "body", tuple(self.body))
        if not isinstance(self.conditions, tuple):
            object.__setattr__(self, "conditions", tuple(self.conditions))
        bound = {v for lit in self.body if lit.positive for v in lit.variables()}
        for lit in self.body:
            if not lit.positive:
                for v in lit.variables():
                    if v not in bound:
                        raise MalformedProgramError(f"unsafe denial {self}: {v} only occurs negatively")
        for c in self.conditions:
            for v in c.variables():
                if v not in bound:
                    raise MalformedProgramError(f"unsafe denial {self}: {v} only occurs in a side condition")

    def variables(self) -> set[Var]:
        out: set[Var] = set()
        for lit in self.body:
            out.update(lit.variables())
        return out

    def parameters(self) -> set[Param]:
        out = {p for lit in self.body for p in lit.atom.parameters()}
        for c in self.conditions:
            out.update(t for t in (c.left, c.right) if isinstance(t, Param))
        return out

    def predicates(self) -> set[str]:
        return {lit.atom.pred for lit in self.body}

    def substitute(self, s: "Substitution") -> "Denial":
        if not s:
            return self
        return Denial(
            tuple(l.substitute(s) for l in self.body),
            tuple(c.substitute(s) for c in self.conditions),
        )

    def literal_count(self) -> int:
        return len(self.body) + len(self.conditions)

    def __str__(self):
        parts = list(self.body) + list(self.conditions)
        if not parts:
            return ":- true."
        return f":- {_literal_list(parts)}."


FALSE_DENIAL = Denial(())


@dataclass(frozen=True)
class IntegrityTheory:
    """Finite set of denials; iteration follows the printed lexicographic order."""

    denials: frozenset = field(default_factory=frozenset)

    def __init__(self, denials: Iterable[Denial] = ()):
        object.__setattr__(self, "denials", frozenset(denials))

    def __iter__(self) -> Iterator[Denial]:
        return iter(sorted(self.denials, key=str))

    def __len__(self):
        return len(self.denials)

    def __bool__(self):
        return bool(self.denials)

    def __or__(self, other: "IntegrityTheory") -> "IntegrityTheory":
        return IntegrityTheory(self.denials | other.denials)

    def predicates(self) -> set[str]:
        return {p for d in self.denials for p in d.predicates()}

    def parameters(self) -> set[Param]:
        return {p for d in self.denials for p in d.parameters()}

    def signatures(self) -> set[tuple[str, int]]:
        return {lit.atom.signature for d in self.denials for lit in d.body}

    def literal_count(self) -> int:
        return sum(d.literal_count() for d in self.denials)

    def substitute(self, s: "Substitution") -> "IntegrityTheory":
        return IntegrityTheory(d.substitute(s) for d in self.denials)

    def __str__(self):
        return "".join(f"{d}\n" for d in self)


class Substitution(Mapping):
    """Finite idempotent map from variables to terms."""

    __slots__ = ("_b",)

    def __init__(self, bindings: Mapping[Var, Term] | None = None):
        b = dict(bindings or {})
        for v, t in b.items():
            if not isinstance(v, Var):
                raise TypeError(f"substitution key {v!r} is not a variable")
            if t == v:
                raise ValueError(f"trivial binding {v} -> {t}")
            if isinstance(t, Var) and t in b:
                raise ValueError("bindings are not in solved form")
        self._b = b

    def __getitem__(self, v):
        return self._b[v]

    def __iter__(self):
        return iter(self._b)

    def __len__(self):
        return len(self._b)

    def __hash__(self):
        return hash(frozenset(self._b.items()))

    def __eq__(self, other):
        if isinstance(other, Substitution):
            return self._b == other._b
        return NotImplemented

    def apply_term(self, t: Term) -> Term:
        return self._b.get(t, t) if isinstance(t, Var) else t

    def bind(self, v: Var, t: Term) -> "Substitution":
        """Extend with ``v -> t`` (both already resolved) keeping solved form."""
        b = {k: (t if x == v else x) for k, x in self._b.items()}
        b[v] = t
        return Substitution(b)

    def compose(self, other: "Substitution") -> "Substitution":
        """``other`` applied after ``self``."""
        b = {}
        for k, x in self._b.items():
            y = other.apply_term(x)
            if y != k:
                b[k] = y
        for k, x in other._b.items():
            if k not in self._b:
                b[k] = x
        return Substitution(b)

    def __repr__(self):
        inner = ", ".join(f"{k}->{v}" for k, v in sorted(self._b.items(), key=lambda kv: kv[0].name))
        return "{" + inner + "}"


EMPTY = Substitution()


def apply_subst(s: Substitution, x):
    """Apply ``s`` to a term, atom, literal, comparison, rule, denial or theory."""
    if isinstance(x, (Var, Const, Param)):
        return s.apply_term(x)
    return x.substitute(s)


def _walk(s: Substitution, t: Term) -> Term:
    return s.apply_term(t)


def unify_terms(pairs: Iterable[tuple[Term, Term]], s: Substitution = EMPTY) -> Optional[Substitution]:
    """Most general unifier of a list of term equations, or None.

    Constants and parameters only unify with themselves.  When two
    variables meet, the lexicographically earlier one becomes the key.
    """
    for a, b in pairs:
        a, b = _walk(s, a), _walk(s, b)
        if a == b:
            continue
        if isinstance(a, Var) and isinstance(b, Var):
            key, val = (a, b) if a.name < b.name else (b, a)
            s = s.bind(key, val)
        elif isinstance(a, Var):
            s = s.bind(a, b)
        elif isinstance(b, Var):
            s = s.bind(b, a)
        else:
            return None
    return s


def unify(a: Atom, b: Atom, s: Substitution = EMPTY) -> Optional[Substitution]:
    if a.pred != b.pred:
        return None
    if a.arity != b.arity:
        raise MalformedProgramError(
            f"predicate {a.pred} used with arities {a.arity} and {b.arity}"
        )
    return unify_terms(zip(a.args, b.args), s)


def match_terms(pattern: Iterable[Term], target: Iterable[Term], s: Mapping | None = None) -> Optional[dict]:
    """One-way matching: bind pattern variables so pattern equals target.

    Target variables are treated as frozen constants.
    """
    out = dict(s or {})
    for p, t in zip(pattern, target):
        if isinstance(p, Var):
            old = out.get(p)
            if old is None:
                out[p] = t
            elif old != t:
                return None
        elif p != t:
            return None
    return out


class FreshNames:
    """Generator of variable names not occurring in a given set."""

    def __init__(self, taken: Iterable[str] = ()):
        self.taken = set(taken)
        self._n = itertools.count(1)

    def var(self, base: str = "V") -> Var:
        base = base.split("_")[0] or "V"
        while True:
            name = f"{base}_{next(self._n)}"
            if name not in self.taken:
                self.taken.add(name)
                return Var(name)


def rename_apart(rule: Rule, fresh: FreshNames) -> Rule:
    s = Substitution({v: fresh.var(v.name) for v in sorted(rule.variables(), key=lambda v: v.name)})
    return rule.substitute(s)


def theory_equivalent_on(t1: IntegrityTheory, t2: IntegrityTheory, universe, vocabulary, budget=None) -> bool:
    """Bounded logical equivalence of two theories over rule-free databases.

    Delegates to the enumeration oracle; see :func:`icheck.oracle.equivalence`.
    """
    from .oracle import EnumerationSpace, equivalence

    space = EnumerationSpace(universe, vocabulary, budget=budget)
    return equivalence(t1, t2, space).certified


def ground_params(x, binding: Mapping):
    """Replace parameters by constants in an atom, literal, denial or theory.

    ``binding`` maps :class:`Param` (or its name) to :class:`Const` (or a name).
    """

    def term(t):
        if not isinstance(t, Param):
            return t
        v = binding[t] if t in binding else binding[t.name]
        return v if isinstance(v, Const) else Const(v)

    if isinstance(x, Atom):
        return Atom(x.pred, tuple(term(t) for t in x.args))
    if isinstance(x, Literal):
        return Literal(ground_params(x.atom, binding), x.positive)
    if isinstance(x, Comparison):
        return Comparison(term(x.left), term(x.right), x.equal)
    if isinstance(x, Denial):
        conds = (ground_params(c, binding) for c in x.conditions)
        # conditions that became true are dropped; false ones are kept
        return Denial(
            tuple(ground_params(l, binding) for l in x.body),
            tuple(c for c in conds if c.decide() is not True),
        )
    if isinstance(x, IntegrityTheory):
        out = (ground_params(d, binding) for d in x.denials)
        return IntegrityTheory(d for d in out if not any(c.decide() is False for c in d.conditions))
    raise TypeError(f"cannot ground parameters of {type(x).__name__}")
