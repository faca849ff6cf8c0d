"""Brute-force oracle: enumerate every database of a bounded space."""

from .checks import (
    Claim,
    Premise,
    Sample,
    Status,
    Verdict,
    check_idempotent,
    check_post_test,
    check_pre_test,
    derive_plain_pre_test,
    equivalence,
)
from .space import DEFAULT_BUDGET, EnumerationSpace, Evaluator, Frame, default_budget
from .table import EXPECTED, ROWS, Pair, Row, RowReport, Table, Family, build_suite, run_table, table_row_check

__all__ = [
    "Claim", "Premise", "Sample", "Status", "Verdict",
    "check_idempotent", "check_post_test", "check_pre_test", "derive_plain_pre_test", "equivalence",
    "DEFAULT_BUDGET", "EnumerationSpace", "Evaluator", "Frame", "default_budget",
    "EXPECTED", "ROWS", "Pair", "Row", "RowReport", "Table", "Family", "build_suite", "run_table", "table_row_check",
]
