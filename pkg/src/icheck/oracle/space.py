"""Finite database spaces and their bitset encoding.

A space is a finite universe of constants and a set of extensional
predicate signatures; its databases are all subsets of the Herbrand
base (or of a chosen sub-base).  Databases are rows of 64-bit words,
bit ``i`` standing for the i-th tracked atom of a :class:`Frame`.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from .. import kernels
from ..engine import Database, holds
from ..errors import BudgetExceededError, InstantiationRequiredError, MalformedProgramError, VocabularyError
from ..logic import Atom, Const, IntegrityTheory, Param, Var
from ..updates import FactDelta, RelationMap, Update, _coerce

DEFAULT_BUDGET = 1 << 20
CHUNK = 1 << 14


def default_budget() -> int:
    env = os.environ.get("ICHECK_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def parse_vocabulary(vocabulary) -> dict[str, int]:
    """Accept ``{"p": 1}``, ``[("p", 1)]`` or ``["p/1"]``."""
    if isinstance(vocabulary, Mapping):
        items = vocabulary.items()
    else:
        items = []
        for v in vocabulary:
            if isinstance(v, str):
                name, _, n = v.partition("/")
                items.append((name, int(n or 0)))
            else:
                items.append(tuple(v))
    out: dict[str, int] = {}
    for p, n in items:
        if out.setdefault(p, int(n)) != int(n):
            raise MalformedProgramError(f"predicate {p} declared with two arities")
    return out


def _const(c) -> Const:
    return c if isinstance(c, Const) else Const(str(c))


class EnumerationSpace:
    """All rule-sharing databases over ``universe`` and ``vocabulary``.

    ``atoms`` restricts the enumerated facts to a sub-base; ``budget`` is
    the largest number of databases a single enumeration may visit.
    """

    def __init__(self, universe: Iterable, vocabulary, rules=(), budget: Optional[int] = None, atoms=None):
        self.universe = tuple(sorted({_const(c) for c in universe}, key=lambda c: c.name))
        if not self.universe:
            raise ValueError("universe must be nonempty")
        self.vocabulary = parse_vocabulary(vocabulary)
        self.rules = tuple(rules)
        heads = {r.head.pred for r in self.rules}
        self.extensional = {p: n for p, n in self.vocabulary.items() if p not in heads}
        self.budget = default_budget() if budget is None else int(budget)
        if atoms is None:
            self.atoms = self.herbrand_base()
        else:
            self.atoms = tuple(sorted(set(atoms), key=_atom_key))
            for a in self.atoms:
                if a.pred not in self.extensional or a.arity != self.extensional[a.pred]:
                    raise VocabularyError(f"sub-base atom {a} is not over the space vocabulary")

    def herbrand_base(self) -> tuple[Atom, ...]:
        out = []
        for p in sorted(self.extensional):
            for args in itertools.product(self.universe, repeat=self.extensional[p]):
                out.append(Atom(p, args))
        return tuple(out)

    @property
    def size(self) -> int:
        return 1 << len(self.atoms)

    def require_budget(self, needed: Optional[int] = None):
        needed = self.size if needed is None else needed
        if needed > self.budget:
            raise BudgetExceededError(needed, self.budget)

    @property
    def schema(self) -> frozenset:
        return frozenset(self.vocabulary.items())

    def database(self, facts) -> Database:
        return Database(facts, self.rules, self.schema)

    def describe(self) -> str:
        sig = ",".join(f"{p}/{n}" for p, n in sorted(self.vocabulary.items()))
        uni = ",".join(c.name for c in self.universe)
        sub = "" if self.atoms == self.herbrand_base() else f", sub-base of {len(self.atoms)} atoms"
        return f"universe {{{uni}}}, vocabulary {{{sig}}}{sub}"

    def __repr__(self):
        return f"EnumerationSpace({self.describe()})"


def _atom_key(a: Atom):
    return (a.pred, tuple(t.name for t in a.args))


class Frame:
    """Tracked atoms for a space and a set of updates.

    The space's atoms come first (enumeration bit i is frame bit i); atoms
    only reachable through an update follow.
    """

    def __init__(self, space: EnumerationSpace, updates: Iterable = ()):
        self.space = space
        atoms = list(space.atoms)
        index = {a: i for i, a in enumerate(atoms)}

        def track(a: Atom):
            if a not in index:
                if a.pred not in space.extensional:
                    raise VocabularyError(f"update atom {a} is not over the space vocabulary")
                index[a] = len(atoms)
                atoms.append(a)

        steps = [s for u in updates for s in _coerce(u).steps]
        for s in steps:
            if s.parameters:
                raise InstantiationRequiredError("updates must be ground inside the oracle")
            if isinstance(s, FactDelta):
                for a in sorted(s.insertions | s.deletions, key=_atom_key):
                    track(a)
            else:
                for t, src in s.mapping:
                    for p in (t, src):
                        if p not in space.extensional:
                            raise VocabularyError(f"relation map predicate {p} is not extensional in the space")
                    if space.extensional[t] != space.extensional[src]:
                        raise MalformedProgramError(f"cannot map {src} onto {t}: arities differ")
        maps = [s.as_dict() for s in steps if isinstance(s, RelationMap)]
        changed = bool(maps)
        while changed:
            changed = False
            for m in maps:
                for a in list(atoms):
                    for t, src in m.items():
                        if a.pred == t and Atom(src, a.args) not in index:
                            track(Atom(src, a.args))
                            changed = True
                        if a.pred == src and Atom(t, a.args) not in index:
                            track(Atom(t, a.args))
                            changed = True
        self.atoms = tuple(atoms)
        self.index = index
        self.words = max(1, (len(atoms) + 63) // 64)
        self.free = np.arange(len(space.atoms), dtype=np.int64)

    def __len__(self):
        return len(self.atoms)

    def mask(self, atoms: Iterable[Atom]) -> int:
        m = 0
        for a in atoms:
            i = self.index.get(a)
            if i is None:
                raise VocabularyError(f"atom {a} is outside the enumerated space")
            m |= 1 << i
        return m

    def words_of(self, m: int) -> np.ndarray:
        return np.array([(m >> (64 * w)) & 0xFFFFFFFFFFFFFFFF for w in range(self.words)], dtype=np.uint64)

    def rows(self, indices: np.ndarray) -> np.ndarray:
        if self.words == 1:
            # free atoms occupy the low bits, so the index is the row
            return np.ascontiguousarray(indices, dtype=np.uint64).reshape(-1, 1).copy()
        return kernels.expand(np.ascontiguousarray(indices, dtype=np.uint64), self.free, self.words)

    def row_of(self, facts: Iterable[Atom]) -> np.ndarray:
        return self.words_of(self.mask(facts)).reshape(1, -1)

    def facts(self, row) -> frozenset[Atom]:
        out = []
        for w, word in enumerate(np.asarray(row, dtype=np.uint64).ravel()):
            word = int(word)
            while word:
                low = word & -word
                out.append(self.atoms[64 * w + low.bit_length() - 1])
                word ^= low
        return frozenset(out)


@dataclass
class CompiledUpdate:
    ops: list

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        for kind, a, b in self.ops:
            if kind == "delta":
                rows = (rows & ~b) | a
            else:
                rows = kernels.permute(np.ascontiguousarray(rows), a)
        return rows


def compile_update(u, frame: Frame) -> CompiledUpdate:
    ops = []
    for s in _coerce(u).steps:
        if isinstance(s, FactDelta):
            ops.append(("delta", frame.words_of(frame.mask(s.insertions)), frame.words_of(frame.mask(s.deletions))))
        else:
            m = s.as_dict()
            src = np.array(
                [frame.index[Atom(m.get(a.pred, a.pred), a.args)] for a in frame.atoms], dtype=np.int64
            )
            ops.append(("perm", src, None))
    return CompiledUpdate(ops)


MINTERM_GROUP = 32


class CompiledTheory:
    """Ground conjunctions whose satisfaction means the theory is violated.

    Large groups of conjunctions fixing the same set of atoms (typical of
    enumeration-derived theories) are matched by hashing instead of by
    the kernel.
    """

    def __init__(self, conjunctions: set[tuple[int, int]], frame: Frame):
        self.frame = frame
        groups: dict[int, list[int]] = {}
        for pos, neg in conjunctions:
            groups.setdefault(pos | neg, []).append(pos)
        general = []
        self.exact: list[tuple[int, np.ndarray]] = []
        for cover, poss in sorted(groups.items()):
            if frame.words == 1 and len(poss) >= MINTERM_GROUP:
                self.exact.append((cover, np.array(sorted(poss), dtype=np.uint64)))
            else:
                general.extend((p, cover & ~p) for p in poss)
        general.sort()
        w = frame.words
        self.pos = np.zeros((len(general), w), dtype=np.uint64)
        self.neg = np.zeros((len(general), w), dtype=np.uint64)
        for i, (p, n) in enumerate(general):
            self.pos[i] = frame.words_of(p)
            self.neg[i] = frame.words_of(n)
        self.always_violated = (0, 0) in conjunctions

    def violated(self, rows: np.ndarray) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=np.uint64)
        if self.always_violated:
            return np.ones(rows.shape[0], dtype=bool)
        out = np.zeros(rows.shape[0], dtype=bool)
        if len(self.pos):
            out |= kernels.violations(rows, self.pos, self.neg).astype(bool)
        for cover, poss in self.exact:
            out |= np.isin(rows[:, 0] & np.uint64(cover), poss)
        return out


def ground_conjunctions(theory: IntegrityTheory, frame: Frame) -> set[tuple[int, int]]:
    """All ground instances of every denial body over the space universe.

    A positive atom the frame never tracks is false in every database of
    the space, so its instance is dropped; a negative one is true and
    the literal is dropped.
    """
    space = frame.space
    index = frame.index
    out: set[tuple[int, int]] = set()
    for d in theory:
        for lit in d.body:
            a = lit.atom
            if a.pred not in space.vocabulary:
                raise VocabularyError(f"constraint {d} uses unknown predicate {a.pred}")
            if a.arity != space.vocabulary[a.pred]:
                raise MalformedProgramError(f"constraint {d} uses {a.pred}/{a.arity}")
        if d.parameters():
            raise InstantiationRequiredError(f"constraint {d} has uninstantiated parameters")
        vs = sorted(d.variables(), key=lambda v: v.name)
        for combo in itertools.product(space.universe, repeat=len(vs)):
            env = dict(zip(vs, combo))

            def val(t):
                return env[t] if isinstance(t, Var) else t

            ok = True
            for c in d.conditions:
                if (val(c.left) == val(c.right)) != c.equal:
                    ok = False
                    break
            if not ok:
                continue
            pos = neg = 0
            for lit in d.body:
                g = Atom(lit.atom.pred, tuple(val(t) for t in lit.atom.args))
                i = index.get(g)
                if lit.positive:
                    if i is None:
                        ok = False
                        break
                    pos |= 1 << i
                elif i is not None:
                    neg |= 1 << i
            if ok and not pos & neg:
                out.add((pos, neg))
    return out


class Evaluator:
    """Satisfaction of theories on rows of a frame.

    Rule-free spaces use the compiled conjunctions; spaces with rules go
    through the datalog engine one database at a time.
    """

    def __init__(self, frame: Frame):
        self.frame = frame
        self._cache: dict = {}

    def compile(self, theory: IntegrityTheory) -> Optional[CompiledTheory]:
        if self.frame.space.rules:
            return None
        key = theory
        ct = self._cache.get(key)
        if ct is None:
            ct = CompiledTheory(ground_conjunctions(theory, self.frame), self.frame)
            self._cache[key] = ct
        return ct

    def holds(self, theory: IntegrityTheory, rows: np.ndarray) -> np.ndarray:
        ct = self.compile(theory)
        if ct is not None:
            return ~ct.violated(rows)
        space = self.frame.space
        return np.array(
            [holds(space.database(self.frame.facts(r)), theory) for r in rows], dtype=bool
        )


def sample_rows(space: EnumerationSpace, frame: Frame, count: int, seed: int, density: float) -> np.ndarray:
    """``count`` random databases over the space atoms, each fact present with ``density``."""
    rng = np.random.default_rng(seed)
    n = len(space.atoms)
    bits = rng.random((count, n)) < density
    rows = np.zeros((count, frame.words), dtype=np.uint64)
    for b in range(n):
        rows[:, b >> 6] |= bits[:, b].astype(np.uint64) << np.uint64(b & 63)
    return rows
