import random
import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from icheck import engine
from icheck.engine import Database, RetrievalMeter, holds, naive_model, standard_model, stratify, violated_instances
from icheck.errors import MalformedProgramError, NotStratifiableError, VocabularyError
from icheck.logic import IntegrityTheory, Literal
from icheck.oracle.generate import random_program
from icheck.syntax import facts, parse_atom, parse_database, parse_denial, theory


def test_stratify_examples():
    db = parse_database("r(X) :- p(X), not q(X).")
    assert stratify(db) == [frozenset({"p", "q"}), frozenset({"r"})]
    assert stratify(parse_database("p(a). q(b).")) == [frozenset({"p", "q"})]
    with pytest.raises(NotStratifiableError) as e:
        stratify(parse_database("p(X) :- q(X), not p(X)."))
    assert "p" in e.value.cycle


def test_negative_cycle_through_two_predicates():
    db = parse_database("p(X) :- e(X), not q(X).\nq(X) :- e(X), p(X).")
    with pytest.raises(NotStratifiableError) as e:
        standard_model(db)
    assert set(e.value.cycle) >= {"p", "q"}


def test_positive_recursion_stays_in_one_stratum():
    db = parse_database("t(X,Y) :- e(X,Y).\nt(X,Y) :- e(X,Z), t(Z,Y).\nr(X) :- e(X,Y), not t(Y,X).")
    strata = stratify(db)
    assert strata[-1] == frozenset({"r"})
    assert any("t" in s for s in strata[:-1])


def test_standard_model_examples():
    m = standard_model(parse_database("p(a).\nq(X) :- p(X)."))
    assert m.true_atoms == facts("p(a)", "q(a)")
    d = facts("p(a)", "p(b)", "q(a)")
    assert standard_model(Database(d)).true_atoms == d
    tc = parse_database("e(a,b). e(b,c).\nt(X,Y) :- e(X,Y).\nt(X,Y) :- e(X,Z), t(Z,Y).")
    m = standard_model(tc)
    assert parse_atom("t(a,c)") in m.true_atoms
    assert m.true_atoms == naive_model(tc)
    assert m.true_atoms == facts("e(a,b)", "e(b,c)", "t(a,b)", "t(b,c)", "t(a,c)")


def test_model_extensional_part_is_the_fact_set():
    db = parse_database("e(a). e(b). f(b).\ns(X) :- e(X), not f(X).")
    m = standard_model(db)
    assert {x for x in m.true_atoms if x.pred in ("e", "f")} == db.facts
    assert parse_atom("s(a)") in m.true_atoms and parse_atom("s(b)") not in m.true_atoms


def test_holds_examples():
    g = theory(":- p(a), q(b).")
    assert holds(Database(facts("p(a)", "p(b)", "q(a)")), g)
    assert not holds(Database(facts("q(a)", "q(b)", "p(a)")), g)
    assert holds(Database(facts("p(a)")), IntegrityTheory())


def test_holds_unknown_predicate():
    with pytest.raises(VocabularyError):
        holds(Database(facts("p(a)")), theory(":- zz(a)."))
    with pytest.raises(MalformedProgramError):
        holds(Database(facts("p(a)")), theory(":- p(a, b)."))


def test_schema_declares_empty_relations():
    db = Database(facts("p(a)"), (), {"q": 1})
    assert holds(db, theory(":- q(X)."))


def test_side_conditions_are_evaluated():
    db = Database(facts("p(a)", "p(b)"))
    assert not holds(db, theory(":- p(X), X != a."))
    assert holds(db, theory(":- p(X), X != a, X != b."))


def test_violated_instances_examples():
    assert violated_instances(Database(facts("p(a)")), parse_denial(":- p(X).")) == {(Literal(parse_atom("p(a)")),)}
    assert violated_instances(Database((), (), {"p": 1}), parse_denial(":- p(a).")) == frozenset()
    assert violated_instances(Database(facts("p(a)")), parse_denial(":- not p(a).")) == frozenset()


def test_violated_instances_enumerates_everything():
    db = Database(facts("e(a,b)", "e(b,c)", "e(c,a)"))
    got = violated_instances(db, parse_denial(":- e(X,Y), e(Y,Z)."))
    assert len(got) == 3


def test_retrievals_count_stored_facts_only():
    db = parse_database("e(a). e(b).\ns(X) :- e(X).")
    ok, n = engine.count_retrievals(db, theory(":- s(c)."))
    assert ok
    # evaluating s reads both e facts; the lookup of s(c) reads no stored fact
    assert n == 2
    ok, n = engine.count_retrievals(Database(facts("p(a)")), theory(":- p(b)."))
    assert ok and n == 0
    ok, n = engine.count_retrievals(Database(facts("p(a)")), theory(":- p(a)."))
    assert not ok and n == 1


def test_retrievals_zero_for_empty_theory():
    assert engine.count_retrievals(Database(facts("p(a)", "p(b)")), IntegrityTheory()) == (True, 0)


def test_concurrent_holds_on_one_model():
    db = Database(frozenset(parse_atom(f"e(c{i},c{i + 1})") for i in range(200)))
    m = standard_model(db)
    t = theory(":- e(X,Y), e(Y,X).")
    results = []

    def work():
        meter = RetrievalMeter()
        results.append((holds(m, t, meter), meter.count))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert len(set(results)) == 1 and results[0][0]


# -- properties ---------------------------------------------------------------


@given(st.integers(0, 10**6))
def test_semi_naive_equals_naive(seed):
    db = random_program(random.Random(seed))
    assert standard_model(db).true_atoms == naive_model(db)


@given(st.integers(0, 10**6), st.data())
def test_monotone_for_positive_programs(seed, data):
    rng = random.Random(seed)
    db = random_program(rng)
    rules = tuple(r for r in db.rules if all(l.positive for l in r.body))
    consts = sorted({c for f in db.facts for c in f.args}, key=str) or [parse_atom("e(a)").args[0]]
    base = Database(db.facts, rules, db.schema)
    n = db.vocabulary["e"]
    extra = parse_atom("e(" + ",".join(data.draw(st.sampled_from([c.name for c in consts])) for _ in range(n)) + ")")
    bigger = Database(db.facts | {extra}, rules, db.schema)
    assert standard_model(base).true_atoms <= standard_model(bigger).true_atoms


DENIALS = [":- p(a).", ":- p(X), q(X).", ":- q(X), not p(X).", ":- p(X), X != a.", ":- true.", ":- r(X)."]


@given(
    st.sets(st.sampled_from(["p(a)", "p(b)", "q(a)", "q(b)", "r(b)"])),
    st.lists(st.sampled_from(DENIALS), max_size=3),
    st.lists(st.sampled_from(DENIALS), max_size=3),
)
def test_holds_is_conjunctive(fs, g1, g2):
    db = Database(facts(*fs), (), {"p": 1, "q": 1, "r": 1})
    t1, t2 = theory(*g1), theory(*g2)
    assert holds(db, t1 | t2) == (holds(db, t1) and holds(db, t2))


@given(
    st.sets(st.sampled_from(["p(a)", "p(b)", "q(a)", "q(b)", "r(b)"])),
    st.lists(st.sampled_from(DENIALS), max_size=3),
    st.lists(st.sampled_from(DENIALS), max_size=3),
)
def test_retrievals_are_additive(fs, g1, g2):
    db = Database(facts(*fs), (), {"p": 1, "q": 1, "r": 1})
    m = RetrievalMeter()
    holds(db, theory(*g1), m)
    first = m.count
    holds(db, theory(*g2), m)
    _, n1 = engine.count_retrievals(db, theory(*g1))
    _, n2 = engine.count_retrievals(db, theory(*g2))
    assert first == n1 and m.count == n1 + n2
