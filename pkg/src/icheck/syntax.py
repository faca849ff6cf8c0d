"""Reader for the clause syntax used by database, constraint and update files.

    p(a).                    fact
    h(X) :- p(X), not q(X).  rule
    :- p(X), q(X), X != a.   denial (``:- true.`` is the always-violated one)
    +p(a).  -p(a).           insertion, deletion
    swap p q.                exchange the contents of two relations
    $x                       update parameter
    % ...                    comment to end of line

Printing is ``str()`` on the parsed objects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .engine import Database, check_arities
from .errors import MalformedProgramError
from .logic import Atom, Comparison, Const, Denial, IntegrityTheory, Literal, Param, Rule, Var
from .updates import FactDelta, RelationMap, Update

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<neq>!=)
  | (?P<if>:-)
  | (?P<param>\$[a-zA-Z0-9_]+)
  | (?P<lower>[a-z][a-zA-Z0-9_]*)
  | (?P<upper>[A-Z][a-zA-Z0-9_]*)
  | (?P<punct>[(),.=+\-])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int


def tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line = 0, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise MalformedProgramError(f"line {line}: unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind if kind != "punct" else m.group(), m.group(), line))
        line += m.group().count("\n")
        pos = m.end()
    # end of input is reported on the last line that had a token
    toks.append(_Tok("eof", "", toks[-1].line if toks else 1))
    return toks


@dataclass
class Program:
    facts: list = field(default_factory=list)
    rules: list = field(default_factory=list)
    denials: list = field(default_factory=list)
    update_steps: list = field(default_factory=list)

    def signatures(self):
        for f in self.facts:
            yield f.signature
        for r in self.rules:
            yield r.head.signature
            yield from (l.atom.signature for l in r.body)
        for d in self.denials:
            yield from (l.atom.signature for l in d.body)
        for s in self.update_steps:
            if isinstance(s, FactDelta):
                yield from (a.signature for a in s.insertions | s.deletions)


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg):
        raise MalformedProgramError(f"line {self.tok.line}: {msg} (at {self.tok.text or 'end of input'!r})")

    def take(self, kind) -> _Tok:
        if self.tok.kind != kind:
            self.fail(f"expected {kind}")
        t = self.tok
        self.i += 1
        return t

    def term(self):
        t = self.tok
        if t.kind == "upper":
            self.i += 1
            return Var(t.text)
        if t.kind == "lower":
            self.i += 1
            return Const(t.text)
        if t.kind == "param":
            self.i += 1
            return Param(t.text[1:])
        self.fail("expected a term")

    def atom(self) -> Atom:
        pred = self.take("lower").text
        args = []
        if self.tok.kind == "(":
            self.i += 1
            args.append(self.term())
            while self.tok.kind == ",":
                self.i += 1
                args.append(self.term())
            self.take(")")
        return Atom(pred, tuple(args))

    def body_item(self):
        t = self.tok
        if t.kind == "lower" and t.text == "not" and self.peek().kind == "lower":
            self.i += 1
            return Literal(self.atom(), False)
        if t.kind == "lower" and t.text == "true" and self.peek().kind in (",", "."):
            self.i += 1
            return None
        if t.kind in ("upper", "param") or (
            t.kind == "lower" and self.peek().kind in ("neq", "=")
        ):
            left = self.term()
            op = self.tok.kind
            if op not in ("neq", "="):
                self.fail("expected != or =")
            self.i += 1
            return Comparison(left, self.term(), equal=(op == "="))
        return Literal(self.atom(), True)

    def body(self):
        items = [self.body_item()]
        while self.tok.kind == ",":
            self.i += 1
            items.append(self.body_item())
        return [x for x in items if x is not None]

    def program(self) -> Program:
        prog = Program()
        delta_ins: list = []
        delta_del: list = []

        def flush():
            if delta_ins or delta_del:
                prog.update_steps.append(FactDelta(delta_ins, delta_del))
                delta_ins.clear()
                delta_del.clear()

        while self.tok.kind != "eof":
            t = self.tok
            line = t.line
            try:
                if t.kind in ("+", "-"):
                    self.i += 1
                    a = self.atom()
                    (delta_ins if t.kind == "+" else delta_del).append(a)
                    self.take(".")
                    continue
                if t.kind == "lower" and t.text == "swap" and self.peek().kind == "lower" and self.peek(2).kind == "lower":
                    self.i += 1
                    p, q = self.take("lower").text, self.take("lower").text
                    self.take(".")
                    flush()
                    prog.update_steps.append(RelationMap.swap(p, q))
                    continue
                if t.kind == "if":
                    self.i += 1
                    items = self.body()
                    self.take(".")
                    lits = tuple(x for x in items if isinstance(x, Literal))
                    conds = tuple(x for x in items if isinstance(x, Comparison))
                    prog.denials.append(Denial(lits, conds))
                    continue
                head = self.atom()
                if self.tok.kind == "if":
                    self.i += 1
                    items = self.body()
                    if any(isinstance(x, Comparison) for x in items):
                        self.fail("comparisons are only allowed in denials")
                    self.take(".")
                    prog.rules.append(Rule(head, tuple(items)))
                else:
                    self.take(".")
                    if not head.is_fact():
                        raise MalformedProgramError(f"fact {head} is not ground")
                    prog.facts.append(head)
            except MalformedProgramError as e:
                if str(e).startswith("line "):
                    raise
                raise MalformedProgramError(f"line {line}: {e}") from None
        flush()
        check_arities(prog.signatures())
        return prog


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def _only(prog: Program, allowed: set[str], what: str):
    present = {
        "facts": bool(prog.facts),
        "rules": bool(prog.rules),
        "denials": bool(prog.denials),
        "updates": bool(prog.update_steps),
    }
    bad = [k for k, v in present.items() if v and k not in allowed]
    if bad:
        raise MalformedProgramError(f"{what} may not contain {', '.join(bad)}")


def parse_database(text: str) -> Database:
    prog = parse_program(text)
    _only(prog, {"facts", "rules"}, "a database file")
    return Database(prog.facts, prog.rules)


def parse_theory(text: str) -> IntegrityTheory:
    prog = parse_program(text)
    _only(prog, {"denials"}, "a constraint file")
    return IntegrityTheory(prog.denials)


def parse_update(text: str) -> Update:
    prog = parse_program(text)
    _only(prog, {"updates"}, "an update file")
    return Update(prog.update_steps)


def parse_denial(text: str) -> Denial:
    (d,) = parse_theory(text).denials
    return d


def parse_atom(text: str) -> Atom:
    p = _Parser(text)
    a = p.atom()
    if p.tok.kind == ".":
        p.i += 1
    if p.tok.kind != "eof":
        p.fail("trailing input")
    return a


def parse_rule(text: str) -> Rule:
    prog = parse_program(text)
    (r,) = prog.rules
    return r


def theory(*denials: str) -> IntegrityTheory:
    """Convenience: ``theory(":- p(a).", ":- q(X).")``."""
    return parse_theory("\n".join(denials))


def facts(*atoms: str) -> frozenset[Atom]:
    return frozenset(parse_atom(a) for a in atoms)
