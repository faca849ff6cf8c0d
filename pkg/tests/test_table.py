import pytest

from icheck.oracle import EXPECTED, ROWS, Row, build_suite, run_table, table_row_check
from icheck.oracle.table import Family, witness_pairs


@pytest.fixture(scope="module")
def table():
    return run_table(build_suite(24, seed=0))


def test_default_suite_reproduces_the_matrix(table):
    assert table.answers("any") == EXPECTED["any"]
    assert table.answers("idempotent") == EXPECTED["idempotent"]
    assert table.matches_expected()


def test_every_no_has_a_replayable_witness(table):
    for (column, row), rep in table.reports.items():
        if rep.answer == "no":
            w = rep.witness
            assert w is not None
            assert w.pair.membership(w.candidate, w.member_of).certified
            assert w.verdict.refuted
            assert w.replay() == w.verdict.values
        else:
            assert rep.witness is None and rep.candidates > 0


def test_fixed_witnesses_back_the_no_rows(table):
    rep = table.reports[("any", Row.PRE_IN_POST)]
    assert rep.witness.pair.label == "swap p q" and rep.witness.candidate == "sigma"
    rep = table.reports[("idempotent", Row.POST_IN_PRE)]
    assert rep.witness.pair.label == "insert p(a)" and rep.witness.candidate == "upsilon"
    assert rep.witness.verdict.witness.facts == frozenset()


def test_idempotent_column_only_uses_idempotent_pairs():
    suite = build_suite(12, seed=3)
    rep = table_row_check(Row.PRE0_IN_POST, suite, "idempotent")
    assert rep.answer == "yes"
    assert rep.pairs == sum(p.idempotent for p in suite) < len(suite)


def test_empty_updates_are_degenerate():
    t = run_table(build_suite(6, seed=1, kinds=("empty",), include_witnesses=False))
    for rep in t.reports.values():
        assert rep.answer == "yes" and rep.degenerate
    assert "yes*" in t.render()


def test_swaps_only():
    suite = build_suite(8, seed=2, kinds=("swap",))
    rep = table_row_check(Row.PRE0_IN_POST, suite, "any")
    assert rep.answer == "no"
    assert rep.witness.pair.label == "swap p q"
    assert rep.witness.member_of is Family.PRE0 and rep.witness.refuted_in is Family.POST


def test_witness_pairs_membership():
    swap_pair, ins = witness_pairs()
    assert not swap_pair.idempotent and ins.idempotent
    assert swap_pair.membership("sigma", Family.PRE).certified
    assert swap_pair.membership("sigma", Family.PRE0).certified
    assert swap_pair.membership("sigma", Family.POST).refuted
    assert ins.membership("upsilon", Family.POST0).certified
    assert ins.membership("upsilon", Family.PRE).refuted


def test_render_lists_all_rows(table):
    text = table.render()
    for r in ROWS:
        assert r.label in text
