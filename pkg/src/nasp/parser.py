"""Recursive-descent parser for the surface language and for query formulas.

Statements end with ``.``; ``%`` starts a line comment. ``:-`` introduces
rule bodies and constraints, ``:~`` weak constraints, ``-`` classical
negation, ``not`` default negation, ``lo..hi`` integer ranges, and
``{a; b} = 1`` exactly-one choices. ``nn`` is reserved for neural
declarations.
"""

from __future__ import annotations

import re

from .formula import AtomRef, Formula, FTrue, FFalse, And, Or, Not
from .lang import (
    Arith,
    Atom,
    BodyElem,
    ChoiceElement,
    ChoiceRule,
    Comparison,
    Const,
    CountAggregate,
    Int,
    Literal,
    NeuralRule,
    NormalRule,
    Program,
    Range,
    Term,
    Var,
    WeakConstraint,
)


class ParseError(Exception):
    """Syntax error with a source location."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""
    (?P<WS>\s+)
  | (?P<COMMENT>%[^\n]*)
  | (?P<COUNT>\#count\b)
  | (?P<IDENT>[a-z][A-Za-z0-9_]*)
  | (?P<VAR>[A-Z][A-Za-z0-9_]*)
  | (?P<INT>\d+)
  | (?P<OP>:-|:~|\.\.|!=|<=|>=|[.,;:()\[\]{}=<>+\-*])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[tuple[str, str, int, int]]:
    """Return (kind, text, line, col) tokens; raises ParseError on junk."""
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("WS", "COMMENT"):
            tokens.append((kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers ----------------------------------------------------

    def peek(self, offset: int = 0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def at(self, kind: str, value: str | None = None) -> bool:
        k, v, _, _ = self.peek()
        return k == kind and (value is None or v == value)

    def at_op(self, value: str) -> bool:
        return self.at("OP", value)

    def advance(self):
        tok = self.tokens[self.i]
        if tok[0] != "EOF":
            self.i += 1
        return tok

    def expect(self, kind: str, value: str | None = None):
        k, v, line, col = self.peek()
        if k != kind or (value is not None and v != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, found {v or k!r}", line, col)
        return self.advance()

    def error(self, message: str):
        _, v, line, col = self.peek()
        raise ParseError(message, line, col)

    # -- terms ------------------------------------------------------------

    def parse_term(self) -> Term:
        term = self.parse_additive()
        if self.at_op(".."):
            self.advance()
            hi = self.parse_additive()
            return Range(term, hi)
        return term

    def parse_additive(self) -> Term:
        left = self.parse_multiplicative()
        while self.at_op("+") or self.at_op("-"):
            op = self.advance()[1]
            right = self.parse_multiplicative()
            left = Arith(op, left, right)
        return left

    def parse_multiplicative(self) -> Term:
        left = self.parse_primary_term()
        while self.at_op("*"):
            self.advance()
            right = self.parse_primary_term()
            left = Arith("*", left, right)
        return left

    def parse_primary_term(self) -> Term:
        k, v, line, col = self.peek()
        if k == "INT":
            self.advance()
            return Int(int(v))
        if k == "VAR":
            self.advance()
            return Var(v)
        if k == "IDENT":
            self.advance()
            return Const(v)
        if k == "OP" and v == "-":
            self.advance()
            inner = self.parse_primary_term()
            if isinstance(inner, Int):
                return Int(-inner.value)
            return Arith("-", Int(0), inner)
        if k == "OP" and v == "(":
            self.advance()
            term = self.parse_term()
            self.expect("OP", ")")
            return term
        raise ParseError(f"expected a term, found {v or k!r}", line, col)

    # -- atoms and body elements -------------------------------------------

    def parse_atom(self, strong_neg: bool = False) -> Atom:
        name = self.expect("IDENT")[1]
        args: tuple[Term, ...] = ()
        if self.at_op("("):
            self.advance()
            items = [self.parse_term()]
            while self.at_op(","):
                self.advance()
                items.append(self.parse_term())
            self.expect("OP", ")")
            args = tuple(items)
        return Atom(name, args, strong_neg=strong_neg)

    def parse_body_element(self) -> BodyElem:
        k, v, _, _ = self.peek()
        if k == "IDENT" and v == "not":
            self.advance()
            elem = self.parse_body_element()
            if not isinstance(elem, Literal) or elem.negated:
                self.error("'not' must be followed by an atom")
            return Literal(elem.atom, negated=True)
        if k == "COUNT":
            return self.parse_aggregate()
        if k == "OP" and v == "-":
            # classical negation when an identifier follows, arithmetic otherwise
            nk, _, _, _ = self.peek(1)
            if nk == "IDENT":
                self.advance()
                atom = self.parse_atom(strong_neg=True)
                return self.maybe_equality(atom)
            return self.parse_comparison_from(self.parse_term())
        if k == "IDENT":
            atom = self.parse_atom()
            if not atom.args and self.is_comparison_op():
                # bare constant compared to a term: a = 3, a != X
                return self.parse_comparison_from(Const(atom.pred))
            if atom.args and self.is_comparison_op() and not self.at_op("="):
                self.error("comparisons cannot apply to an atom with arguments")
            return self.maybe_equality(atom)
        # anything else must start a term comparison
        return self.parse_comparison_from(self.parse_term())

    def maybe_equality(self, atom: Atom) -> Literal:
        if atom.args and self.at_op("="):
            self.advance()
            value = self.parse_term()
            atom = Atom(atom.pred, atom.args, value=value, strong_neg=atom.strong_neg)
        return Literal(atom)

    _COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")

    def is_comparison_op(self) -> bool:
        k, v, _, _ = self.peek()
        return k == "OP" and v in self._COMPARISON_OPS

    def parse_comparison_from(self, left: Term) -> Comparison:
        if not self.is_comparison_op():
            self.error("expected a comparison operator")
        op = self.advance()[1]
        right = self.parse_term()
        return Comparison(op, left, right)

    def parse_aggregate(self) -> CountAggregate:
        self.expect("COUNT")
        self.expect("OP", "{")
        terms = [self.parse_term()]
        while self.at_op(","):
            self.advance()
            terms.append(self.parse_term())
        self.expect("OP", ":")
        condition = self.parse_atom()
        condition = self.maybe_equality(condition).atom
        self.expect("OP", "}")
        if not self.is_comparison_op():
            self.error("expected a comparison after #count{...}")
        op = self.advance()[1]
        bound = self.parse_term()
        return CountAggregate(tuple(terms), condition, op, bound)

    def parse_body(self) -> tuple[BodyElem, ...]:
        elems = [self.parse_body_element()]
        while self.at_op(","):
            self.advance()
            elems.append(self.parse_body_element())
        return tuple(elems)

    # -- statements ---------------------------------------------------------

    def parse_statement(self):
        k, v, line, col = self.peek()
        if k == "OP" and v == "{":
            return self.parse_choice(line, col)
        if k == "OP" and v == ":-":
            self.advance()
            body: tuple[BodyElem, ...] = ()
            if not self.at_op("."):
                body = self.parse_body()
            self.expect("OP", ".")
            return NormalRule(None, body, line, col)
        if k == "OP" and v == ":~":
            return self.parse_weak(line, col)
        if k == "IDENT" and v == "nn" and self.peek(1)[1] == "(":
            return self.parse_neural(line, col)
        # fact or rule
        head_elem = self.parse_body_element()
        if not isinstance(head_elem, Literal) or head_elem.negated:
            self.error("a rule head must be an atom")
        head = head_elem.atom
        body = ()
        if self.at_op(":-"):
            self.advance()
            body = self.parse_body()
        self.expect("OP", ".")
        return NormalRule(head, body, line, col)

    def parse_choice(self, line: int, col: int) -> ChoiceRule:
        self.expect("OP", "{")
        elements = [self.parse_choice_element()]
        while self.at_op(";"):
            self.advance()
            elements.append(self.parse_choice_element())
        self.expect("OP", "}")
        self.expect("OP", "=")
        bound = self.expect("INT")
        if bound[1] != "1":
            raise ParseError("only {...} = 1 choices are supported", bound[2], bound[3])
        self.expect("OP", ".")
        return ChoiceRule(tuple(elements), line, col)

    def parse_choice_element(self) -> ChoiceElement:
        atom = self.parse_atom()
        atom = self.maybe_equality(atom).atom
        condition: tuple[BodyElem, ...] = ()
        if self.at_op(":"):
            self.advance()
            condition = self.parse_body()
        return ChoiceElement(atom, condition)

    def parse_weak(self, line: int, col: int) -> WeakConstraint:
        self.expect("OP", ":~")
        body = self.parse_body()
        self.expect("OP", ".")
        self.expect("OP", "[")
        weight = self.parse_term()
        terms = []
        while self.at_op(","):
            self.advance()
            terms.append(self.parse_term())
        self.expect("OP", "]")
        return WeakConstraint(body, weight, tuple(terms), line, col)

    def parse_neural(self, line: int, col: int) -> NeuralRule:
        self.expect("IDENT", "nn")
        self.expect("OP", "(")
        model = self.expect("IDENT")[1]
        self.expect("OP", "(")
        events_tok = self.expect("INT")
        events = int(events_tok[1])
        pointer = []
        while self.at_op(","):
            self.advance()
            pointer.append(self.parse_term())
        self.expect("OP", ")")
        self.expect("OP", ",")
        self.expect("OP", "[")
        values = [self.parse_term()]
        while self.at_op(","):
            self.advance()
            values.append(self.parse_term())
        self.expect("OP", "]")
        self.expect("OP", ")")
        body: tuple[BodyElem, ...] = ()
        if self.at_op(":-"):
            self.advance()
            body = self.parse_body()
        self.expect("OP", ".")
        seen = set()
        for v in values:
            if v in seen:
                raise ParseError(f"duplicate value {v} in neural declaration", line, col)
            seen.add(v)
        return NeuralRule(model, events, tuple(pointer), tuple(values), body, line, col)

    def parse_program(self) -> Program:
        statements = []
        while not self.at("EOF"):
            statements.append(self.parse_statement())
        return Program(tuple(statements))

    # -- formulas -----------------------------------------------------------

    def parse_formula(self) -> Formula:
        left = self.parse_formula_conj()
        while self.at_op(";"):
            self.advance()
            left = Or(left, self.parse_formula_conj())
        return left

    def parse_formula_conj(self) -> Formula:
        left = self.parse_formula_unary()
        while self.at_op(","):
            self.advance()
            left = And(left, self.parse_formula_unary())
        return left

    def parse_formula_unary(self) -> Formula:
        k, v, _, _ = self.peek()
        if k == "IDENT" and v == "not":
            self.advance()
            return Not(self.parse_formula_unary())
        if k == "OP" and v == "(":
            self.advance()
            inner = self.parse_formula()
            self.expect("OP", ")")
            return inner
        if k == "IDENT" and v == "true" and self.peek(1)[1] not in ("(", "="):
            self.advance()
            return FTrue()
        if k == "IDENT" and v == "false" and self.peek(1)[1] not in ("(", "="):
            self.advance()
            return FFalse()
        if k == "OP" and v == "-":
            self.advance()
            atom = self.parse_atom(strong_neg=True)
        elif k == "IDENT":
            atom = self.parse_atom()
        else:
            self.error("expected an atom, 'not', '(', 'true' or 'false'")
        atom = self.maybe_equality(atom).atom
        return AtomRef(atom)


def parse_program(text: str) -> Program:
    """Parse program text into an AST; raises ParseError with a location."""
    return _Parser(text).parse_program()


def parse_formula(text: str) -> Formula:
    """Parse a ground query/observation formula (',' = and, ';' = or, 'not')."""
    parser = _Parser(text)
    formula = parser.parse_formula()
    if not parser.at("EOF"):
        parser.error("trailing input after formula")
    return formula


def parse_ground_atom(text: str) -> Atom:
    """Parse a single ground atom, e.g. for marginal queries."""
    parser = _Parser(text)
    formula = parser.parse_formula()
    if not parser.at("EOF") or not isinstance(formula, AtomRef):
        raise ParseError("expected a single atom", 1, 1)
    return formula.atom
