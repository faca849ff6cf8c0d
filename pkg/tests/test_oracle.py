import itertools
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from icheck import engine
from icheck.engine import Database
from icheck.errors import BudgetExceededError, MalformedProgramError, VocabularyError
from icheck.logic import IntegrityTheory
from icheck.oracle import (
    EnumerationSpace,
    Evaluator,
    Frame,
    Premise,
    Sample,
    Status,
    check_idempotent,
    check_post_test,
    check_pre_test,
    derive_plain_pre_test,
    equivalence,
)
from icheck.oracle.generate import random_case, random_theory
from icheck.simplifier import plain_pre_test
from icheck.syntax import facts, parse_database, parse_update, theory
from icheck.updates import Update

G2 = theory(":- p(a), q(b).")
S2 = theory(":- q(a), p(b).")
SWAP = Update.swap("p", "q")
PQ = EnumerationSpace("ab", {"p": 1, "q": 1})
D2 = facts("p(a)", "p(b)", "q(a)")

G3 = theory(":- p(a).")
S3 = theory(":- not p(a).")
INS = parse_update("+p(a).")
PA = EnumerationSpace("a", {"p": 1})


def _all_dbs(space):
    atoms = space.atoms
    for bits in itertools.product((0, 1), repeat=len(atoms)):
        yield Database(frozenset(a for a, b in zip(atoms, bits) if b), space.rules, space.schema)


# -- the fixed witnesses ---------------------------------------------------


def test_swap_pre_and_post():
    assert check_pre_test(S2, G2, SWAP, PQ).status is Status.CERTIFIED
    v = check_post_test(S2, G2, SWAP, PQ)
    assert v.refuted
    assert v.replay() == v.values
    assert v.values["D |= Gamma"] and not v.values["D^U |= Gamma"] and v.values["D^U |= T"]
    assert check_post_test(G2, G2, SWAP, PQ).certified
    assert check_pre_test(G2, G2, SWAP, PQ).refuted


def test_swap_witness_is_lexicographically_first():
    # {p(b), q(a)} comes before the larger {p(a), p(b), q(a)} in bitmask order
    v = check_post_test(S2, G2, SWAP, PQ)
    assert v.witness.facts == facts("p(b)", "q(a)")


def test_given_database_refutes():
    v = check_post_test(S2, G2, SWAP, PQ, databases=[D2])
    assert v.refuted and v.witness.facts == D2
    assert v.replay() == {"D |= Gamma": True, "D^U |= Gamma": False, "D |= T": False, "D^U |= T": True}
    v = check_pre_test(G2, G2, SWAP, PQ, databases=[D2])
    assert v.refuted and v.witness.facts == D2
    assert "D |= Sigma" in v.detail and "D^U |/= Gamma" in v.detail
    assert check_pre_test(S2, G2, SWAP, PQ, databases=[D2]).certified


def test_given_database_outside_space():
    with pytest.raises(VocabularyError):
        check_pre_test(S2, G2, SWAP, PQ, databases=[facts("p(c)")])


def test_insertion_witnesses():
    assert check_pre_test(S3, G3, INS, PA).certified
    v = check_post_test(S3, G3, INS, PA)
    assert v.refuted and v.witness.facts == frozenset()
    assert v.replay() == {"D |= Gamma": True, "D^U |= Gamma": False, "D |= T": False, "D^U |= T": True}
    assert check_post_test(G3, G3, INS, PA, Premise.ALL).certified
    v = check_pre_test(G3, G3, INS, PA)
    assert v.refuted and v.witness.facts == frozenset()
    assert v.replay()["D |= T"] and not v.replay()["D^U |= Gamma"]


def test_false_is_a_post_test_but_not_equivalent():
    assert check_post_test(theory(":- true."), G3, INS, PA).certified
    v = equivalence(G3, theory(":- true."), PA)
    assert v.refuted and v.witness.facts == frozenset()


def test_identity_update():
    assert check_pre_test(G2, G2, Update(), PQ, Premise.ALL).certified
    assert check_pre_test(G2, G2, parse_update(""), PQ, Premise.ALL).certified


def test_derive_examples():
    assert equivalence(derive_plain_pre_test(G3, INS, PA), theory(":- true."), PA).certified
    assert equivalence(derive_plain_pre_test(G3, parse_update("-p(a)."), PA), IntegrityTheory(), PA).certified
    assert equivalence(derive_plain_pre_test(G2, SWAP, PQ), S2, PQ).certified


def test_idempotence_witness():
    v = check_idempotent(SWAP, EnumerationSpace("a", {"p": 1, "q": 1}))
    assert v.refuted and v.witness.facts == facts("p(a)")
    assert "D^U = {q(a)}" in v.detail


# -- invariants --------------------------------------------------------------


def test_space_count():
    space = EnumerationSpace("ab", {"p": 1, "r": 2})
    assert len(space.herbrand_base()) == 6
    assert space.size == 64
    v = equivalence(G3, G3, space)
    assert v.checked == 64


def test_budget_is_enforced_before_iteration():
    space = EnumerationSpace("abc", {"p": 2, "q": 2}, budget=1000)
    with pytest.raises(BudgetExceededError) as e:
        check_pre_test(S2, G2, SWAP, space)
    assert e.value.needed == 2**18 and e.value.budget == 1000


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("ICHECK_BUDGET", "16")
    with pytest.raises(BudgetExceededError):
        equivalence(G3, G3, EnumerationSpace("abc", {"p": 1, "q": 1}))


@given(st.integers(0, 10**6))
def test_consistency_filter_counts(seed):
    case = random_case(random.Random(seed), "delta", max_hb=8)
    v = check_pre_test(case.gamma, case.gamma, Update(), case.space, Premise.CONSISTENT)
    expected = sum(engine.holds(d, case.gamma) for d in _all_dbs(case.space))
    assert v.certified and v.checked == expected


@given(st.integers(0, 10**6))
def test_kernel_evaluation_matches_engine(seed):
    rng = random.Random(seed)
    case = random_case(rng, rng.choice(["delta", "swap", "mixed"]), max_hb=8)
    frame = Frame(case.space, [case.update])
    ev = Evaluator(frame)
    rows = frame.rows(np.arange(case.space.size, dtype=np.uint64))
    got = ev.holds(case.gamma, rows)
    for row, ok in zip(rows, got):
        assert engine.holds(case.space.database(frame.facts(row)), case.gamma) == bool(ok)


@given(st.integers(0, 10**6))
def test_refutations_replay(seed):
    rng = random.Random(seed)
    case = random_case(rng, rng.choice(["delta", "swap", "map", "mixed"]), max_hb=8)
    cand = random_theory(rng, case.space.universe, case.space.vocabulary)
    for check in (check_pre_test, check_post_test):
        for premise in Premise:
            v = check(cand, case.gamma, case.update, case.space, premise)
            if v.refuted:
                assert v.replay() == v.values
    v = equivalence(cand, case.gamma, case.space)
    if v.refuted:
        assert v.replay() == v.values


@given(st.integers(0, 10**6))
def test_derived_pre_test_is_a_plain_pre_test(seed):
    rng = random.Random(seed)
    case = random_case(rng, rng.choice(["delta", "swap", "map", "mixed"]), max_hb=7)
    derived = derive_plain_pre_test(case.gamma, case.update, case.space)
    assert check_pre_test(derived, case.gamma, case.update, case.space, Premise.ALL).certified
    regressed = plain_pre_test(case.gamma, case.update).theory
    assert equivalence(derived, regressed, case.space).certified


@given(st.integers(0, 10**6))
def test_refutation_survives_larger_universe(seed):
    rng = random.Random(seed)
    case = random_case(rng, rng.choice(["delta", "swap"]), max_hb=6)
    cand = random_theory(rng, case.space.universe, case.space.vocabulary)
    v = check_pre_test(cand, case.gamma, case.update, case.space)
    names = [c.name for c in case.space.universe]
    bigger = EnumerationSpace(names + ["z"], case.space.vocabulary, budget=1 << 20)
    if bigger.size > 1 << 14:
        return
    w = check_pre_test(cand, case.gamma, case.update, bigger)
    if v.refuted:
        assert w.refuted
        # the small witness is itself a witness in the bigger space
        assert check_pre_test(cand, case.gamma, case.update, bigger, databases=[v.witness.facts]).refuted


@given(st.integers(0, 10**6))
def test_partitioned_runs_match_sequential(seed):
    rng = random.Random(seed)
    case = random_case(rng, rng.choice(["delta", "swap", "mixed"]), max_hb=16)
    cand = random_theory(rng, case.space.universe, case.space.vocabulary)
    a = check_post_test(cand, case.gamma, case.update, case.space, jobs=1)
    b = check_post_test(cand, case.gamma, case.update, case.space, jobs=4)
    assert a.status == b.status and a.checked == b.checked
    assert (a.witness is None) == (b.witness is None)
    if a.witness is not None:
        assert a.witness.facts == b.witness.facts


def test_sampling_is_seeded():
    big = EnumerationSpace("abcdefghijklmnopqrst", {"p": 1, "q": 1})
    a = equivalence(G2, S2, big, sample=Sample(5000, seed=7, density=0.1))
    b = equivalence(G2, S2, big, sample=Sample(5000, seed=7, density=0.1))
    assert a.refuted and a.witness.facts == b.witness.facts and a.checked == b.checked
    ok = equivalence(G2, G2, big, sample=Sample(5000, seed=7))
    assert ok.certified and ok.checked == 5000


def test_sampled_premise_counts_only_consistent_databases():
    big = EnumerationSpace("abcdefghijklmnopqrst", {"p": 1, "q": 1})
    v = check_pre_test(G2, G2, Update(), big, sample=Sample(3000, seed=1, density=0.3))
    assert v.certified and v.checked == 3000


def test_parameters_are_enumerated():
    g = theory(":- p(X), q(X).")
    u = parse_update("+q($x).")
    good = theory(":- p(X), q(X).", ":- p($x).")
    bad = theory(":- p(X), q(X).")
    assert check_pre_test(good, g, u, PQ, Premise.ALL).certified
    v = check_pre_test(bad, g, u, PQ, Premise.ALL)
    assert v.refuted and v.binding == {"x": "a"}
    assert v.replay() == v.values


def test_spaces_with_rules():
    rules = parse_database("s(X) :- p(X), not q(X).").rules
    space = EnumerationSpace("ab", {"p": 1, "q": 1}, rules)
    g = theory(":- s(a).")
    u = parse_update("-q(a).")
    pre = plain_pre_test(g, u, rules).theory
    assert pre == theory(":- p(a).")
    assert check_pre_test(pre, g, u, space, Premise.ALL).certified
    assert check_pre_test(g, g, u, space, Premise.ALL).refuted


def test_theory_over_wrong_arity_is_an_error():
    with pytest.raises(MalformedProgramError):
        equivalence(G2, S2, EnumerationSpace("ab", {"p": 2, "q": 2}))


def test_colliding_bindings_are_skipped():
    u = parse_update("+p($x).\n-p($y).")
    v = check_pre_test(IntegrityTheory(), IntegrityTheory(), u, EnumerationSpace("ab", {"p": 1}), Premise.ALL)
    assert v.certified
    assert v.checked == 2 * 4  # only x != y bindings, over four databases each


def test_hopeless_sampling_is_a_resource_error():
    from icheck.errors import SamplingError

    g = theory(":- p(X).")
    big = EnumerationSpace("abcdefghijklmnopqrst", {"p": 1})
    with pytest.raises(SamplingError):
        check_pre_test(g, g, Update(), big, sample=Sample(100, seed=0, density=0.9, batch=256))


def test_equivalence_after_an_update():
    # on D^U the swap turns S2 into G2's mirror, so they disagree somewhere
    v = equivalence(S2, G2, PQ, after=SWAP)
    assert v.refuted and v.replay() == v.values
    assert set(v.values) == {"D^U |= T1", "D^U |= T2"}
    assert equivalence(G3, theory(":- true."), PA, after=INS).certified
