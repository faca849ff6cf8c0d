"""Seeded random theories, updates and stratified programs for suites."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..engine import Database
from ..logic import Atom, Comparison, Const, Denial, IntegrityTheory, Literal, Rule, Var
from ..updates import FactDelta, RelationMap, Update
from .space import EnumerationSpace

CONSTANTS = ("a", "b", "c")
PREDICATES = ("p", "q", "r")
VARIABLES = ("X", "Y", "Z")


@dataclass
class Case:
    gamma: IntegrityTheory
    update: Update
    space: EnumerationSpace
    kind: str


def random_signature(rng: random.Random, max_hb: int = 12) -> tuple[tuple[Const, ...], dict[str, int]]:
    while True:
        consts = tuple(Const(c) for c in CONSTANTS[: rng.randint(1, 3)])
        preds = PREDICATES[: rng.randint(1, 3)]
        vocab = {p: rng.choice((1, 1, 2)) for p in preds}
        hb = sum(len(consts) ** n for n in vocab.values())
        if hb <= max_hb:
            return consts, vocab


def _args(rng, n, consts, pool, p_const):
    out = []
    for _ in range(n):
        if pool and rng.random() >= p_const:
            out.append(rng.choice(pool))
        else:
            out.append(rng.choice(consts))
    return tuple(out)


def random_denial(rng: random.Random, consts, vocab: dict[str, int]) -> Denial:
    preds = sorted(vocab)
    vars_ = [Var(v) for v in VARIABLES[: rng.randint(1, 3)]]
    pos = []
    for _ in range(rng.randint(1, 2)):
        p = rng.choice(preds)
        pos.append(Literal(Atom(p, _args(rng, vocab[p], consts, vars_, 0.35))))
    bound = sorted({v for l in pos for v in l.variables()}, key=lambda v: v.name)
    neg = []
    for _ in range(rng.choice((0, 0, 1, 1, 2))):
        p = rng.choice(preds)
        neg.append(Literal(Atom(p, _args(rng, vocab[p], consts, bound, 0.4)), False))
    conds = []
    if bound and rng.random() < 0.2:
        v = rng.choice(bound)
        other = rng.choice(list(consts) + bound)
        if other != v:
            conds.append(Comparison(v, other))
    body = pos + neg
    rng.shuffle(body)
    return Denial(tuple(body), tuple(conds))


def random_theory(rng: random.Random, consts, vocab, max_denials: int = 3) -> IntegrityTheory:
    return IntegrityTheory(random_denial(rng, consts, vocab) for _ in range(rng.randint(1, max_denials)))


def random_delta(rng: random.Random, consts, vocab) -> FactDelta:
    preds = sorted(vocab)
    ins, dels = set(), set()
    for _ in range(rng.randint(1, 3)):
        p = rng.choice(preds)
        a = Atom(p, tuple(rng.choice(consts) for _ in range(vocab[p])))
        if a in ins or a in dels:
            continue
        (ins if rng.random() < 0.6 else dels).add(a)
    return FactDelta(ins, dels)


def _same_arity_pairs(vocab):
    ps = sorted(vocab)
    return [(p, q) for i, p in enumerate(ps) for q in ps[i + 1:] if vocab[p] == vocab[q]]


def random_update(rng: random.Random, consts, vocab, kind: str) -> Update:
    """``kind``: delta, swap, map (one relation copied over another), mixed or empty."""
    if kind == "empty":
        return Update()
    pairs = _same_arity_pairs(vocab)
    if kind == "delta" or not pairs:
        return Update([random_delta(rng, consts, vocab)])
    p, q = rng.choice(pairs)
    if kind == "swap":
        return Update.swap(p, q)
    if kind == "map":
        return Update([RelationMap({p: q} if rng.random() < 0.5 else {q: p})])
    steps = [random_delta(rng, consts, vocab), RelationMap.swap(p, q)]
    rng.shuffle(steps)
    return Update(steps)


def random_case(rng: random.Random, kind: str, max_hb: int = 12) -> Case:
    consts, vocab = random_signature(rng, max_hb)
    gamma = random_theory(rng, consts, vocab)
    u = random_update(rng, consts, vocab, kind)
    return Case(gamma, u, EnumerationSpace(consts, vocab), kind)


def random_cases(n: int, seed: int = 0, kinds=("delta", "swap", "map", "mixed"), max_hb: int = 12) -> list[Case]:
    rng = random.Random(seed)
    return [random_case(rng, kinds[i % len(kinds)], max_hb) for i in range(n)]


def random_program(rng: random.Random, max_rules: int = 8, max_strata: int = 3) -> Database:
    """Safe stratified program: negation only reaches strictly lower levels."""
    consts = [Const(c) for c in ("a", "b", "c", "d")[: rng.randint(2, 4)]]
    ext = {p: rng.choice((1, 2)) for p in ("e", "f")}
    levels = [dict(ext)]
    # extensional predicates form the bottom stratum
    n_strata = rng.randint(1, max_strata - 1)
    names = iter(("s", "t", "u", "v", "w", "x"))
    for _ in range(n_strata):
        levels.append({next(names): rng.choice((1, 2)) for _ in range(rng.randint(1, 2))})
    arity = {p: n for lv in levels for p, n in lv.items()}
    rules = []
    for lv in range(1, len(levels)):
        for head in levels[lv]:
            for _ in range(rng.randint(1, 2)):
                if len(rules) >= max_rules:
                    break
                rules.append(_random_rule(rng, head, arity, levels, lv, consts))
    facts = set()
    for p, n in ext.items():
        for _ in range(rng.randint(0, 6)):
            facts.add(Atom(p, tuple(rng.choice(consts) for _ in range(n))))
    return Database(facts, rules, frozenset(arity.items()))


def _random_rule(rng, head, arity, levels, lv, consts) -> Rule:
    vars_ = [Var(v) for v in VARIABLES]
    below = [p for l in levels[:lv] for p in l]
    same_or_below = below + list(levels[lv])
    pos = []
    for _ in range(rng.randint(1, 3)):
        p = rng.choice(same_or_below)
        pos.append(Literal(Atom(p, _args(rng, arity[p], consts, vars_, 0.2))))
    bound = sorted({v for l in pos for v in l.variables()}, key=lambda v: v.name)
    if not bound:
        bound_terms = list(consts)
    else:
        bound_terms = bound
    neg = []
    if rng.random() < 0.5:
        p = rng.choice(below)
        neg.append(Literal(Atom(p, tuple(rng.choice(bound_terms) for _ in range(arity[p]))), False))
    head_args = tuple(rng.choice(bound_terms) for _ in range(arity[head]))
    return Rule(Atom(head, head_args), tuple(pos + neg))
