"""Integrity checking for deductive databases.

Denial constraints, a stratified datalog engine, updates made of fact
deltas and relation maps, a simplifier producing pre- and post-tests,
and a brute-force oracle that certifies those tests on a bounded space.
"""

from .engine import Database, holds, standard_model, stratify, violated_instances
from .errors import IcheckError
from .logic import Atom, Comparison, Const, Denial, IntegrityTheory, Literal, Param, Rule, Var
from .simplifier import (
    State,
    Test,
    cost_compare,
    optimized_post_test,
    optimized_pre_test,
    plain_post_test,
    plain_pre_test,
)
from .syntax import facts, parse_database, parse_theory, parse_update, theory
from .updates import FactDelta, RelationMap, Update, apply, instantiate, is_idempotent

__version__ = "0.1.0"
