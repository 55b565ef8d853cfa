"""Abstract syntax for the rule language with neural atoms.

A program is a sequence of statements: facts and rules, integrity
constraints, exactly-one choice rules, weak constraints, and neural
declarations of the form ``nn(m(e, t...), [v1, ..., vn])`` which attach an
e-row categorical classifier named ``m`` to the input pointed to by ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field


# --------------------------------------------------------------------------
# Terms


@dataclass(frozen=True, slots=True)
class Const:
    """Symbolic constant (lowercase-leading identifier)."""

    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Int:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True, slots=True)
class Var:
    """Variable (uppercase-leading identifier)."""

    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Range:
    """Interval term ``lo..hi``; expands to each integer in [lo, hi]."""

    lo: "Term"
    hi: "Term"

    def __str__(self):
        return f"{self.lo}..{self.hi}"


@dataclass(frozen=True, slots=True)
class Arith:
    """Integer arithmetic over +, - and *."""

    op: str
    left: "Term"
    right: "Term"

    def __str__(self):
        left = f"({self.left})" if isinstance(self.left, Arith) else str(self.left)
        right = f"({self.right})" if isinstance(self.right, (Arith, Range)) else str(self.right)
        return f"{left}{self.op}{right}"


Term = Const | Int | Var | Range | Arith


# --------------------------------------------------------------------------
# Atoms, literals and body elements


@dataclass(frozen=True, slots=True)
class Atom:
    """Predicate applied to terms.

    ``value`` is set for equality atoms ``pred(args) = value`` (the form the
    neural declarations induce); ``strong_neg`` marks classical negation
    ``-pred(args)``, which is treated as a separate atom linked to its twin
    by an implicit integrity constraint.
    """

    pred: str
    args: tuple[Term, ...] = ()
    value: Term | None = None
    strong_neg: bool = False

    def __str__(self):
        s = "-" if self.strong_neg else ""
        s += self.pred
        if self.args:
            s += "(" + ", ".join(str(a) for a in self.args) + ")"
        if self.value is not None:
            s += f" = {self.value}"
        return s


@dataclass(frozen=True, slots=True)
class Literal:
    """Atom under optional default negation (``not``)."""

    atom: Atom
    negated: bool = False

    def __str__(self):
        return ("not " if self.negated else "") + str(self.atom)


@dataclass(frozen=True, slots=True)
class Comparison:
    """Built-in relation between two terms, decided during grounding.

    ``Var = expr`` and ``Var = lo..hi`` additionally bind the variable.
    """

    op: str  # one of = != < <= > >=
    left: Term
    right: Term

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True, slots=True)
class CountAggregate:
    """``#count{t1, ..., tk : condition} REL bound`` - constraint bodies only."""

    terms: tuple[Term, ...]
    condition: Atom
    op: str
    bound: Term

    def __str__(self):
        terms = ", ".join(str(t) for t in self.terms)
        return f"#count{{{terms} : {self.condition}}} {self.op} {self.bound}"


BodyElem = Literal | Comparison | CountAggregate


def body_to_str(body: tuple[BodyElem, ...]) -> str:
    return ", ".join(str(e) for e in body)


# --------------------------------------------------------------------------
# Statements


@dataclass(frozen=True, slots=True)
class NormalRule:
    """Fact (empty body), rule, or integrity constraint (no head)."""

    head: Atom | None
    body: tuple[BodyElem, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    @property
    def is_fact(self) -> bool:
        return self.head is not None and not self.body

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    def __str__(self):
        if self.head is None:
            return f":- {body_to_str(self.body)}." if self.body else ":- ."
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {body_to_str(self.body)}."


@dataclass(frozen=True, slots=True)
class ChoiceElement:
    atom: Atom
    condition: tuple[BodyElem, ...] = ()

    def __str__(self):
        if self.condition:
            return f"{self.atom} : {body_to_str(self.condition)}"
        return str(self.atom)


@dataclass(frozen=True, slots=True)
class ChoiceRule:
    """``{a1; ...; ak} = 1`` - exactly one of the instantiated atoms holds."""

    elements: tuple[ChoiceElement, ...]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def __str__(self):
        return "{" + "; ".join(str(e) for e in self.elements) + "} = 1."


@dataclass(frozen=True, slots=True)
class WeakConstraint:
    """``:~ body. [w, t1, ..., tk]`` - soft constraint with integer penalty."""

    body: tuple[BodyElem, ...]
    weight: Term
    terms: tuple[Term, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def __str__(self):
        tail = ", ".join(str(t) for t in (self.weight,) + self.terms)
        return f":~ {body_to_str(self.body)}. [{tail}]"


@dataclass(frozen=True, slots=True)
class NeuralRule:
    """``nn(m(e, t...), [v1, ..., vn]) [:- body]``.

    Declares that classifier ``m`` applied to the input bound to pointer
    ``t`` yields ``e`` categorical distributions over the listed values.
    The optional body is instantiated over facts at grounding time.
    """

    model: str
    events: int
    pointer: tuple[Term, ...]
    values: tuple[Term, ...]
    body: tuple[BodyElem, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def __str__(self):
        head_args = ", ".join([str(self.events)] + [str(t) for t in self.pointer])
        vals = ", ".join(str(v) for v in self.values)
        s = f"nn({self.model}({head_args}), [{vals}])"
        if self.body:
            s += f" :- {body_to_str(self.body)}"
        return s + "."


Statement = NormalRule | ChoiceRule | WeakConstraint | NeuralRule


@dataclass(slots=True)
class Program:
    """Parsed program: plain statements plus neural declarations, in source order."""

    statements: tuple[Statement, ...] = ()

    @property
    def rules(self) -> list[NormalRule | ChoiceRule | WeakConstraint]:
        return [s for s in self.statements if not isinstance(s, NeuralRule)]

    @property
    def neural(self) -> list[NeuralRule]:
        return [s for s in self.statements if isinstance(s, NeuralRule)]

    def __str__(self):
        return program_to_text(self)


def program_to_text(program: Program) -> str:
    """Render a program in the concrete syntax; parses back to an equal AST."""
    return "".join(str(s) + "\n" for s in program.statements)


# --------------------------------------------------------------------------
# Shared helpers


def term_variables(term: Term) -> set[str]:
    if isinstance(term, Var):
        return {term.name}
    if isinstance(term, Range):
        return term_variables(term.lo) | term_variables(term.hi)
    if isinstance(term, Arith):
        return term_variables(term.left) | term_variables(term.right)
    return set()


def atom_variables(atom: Atom) -> set[str]:
    out: set[str] = set()
    for a in atom.args:
        out |= term_variables(a)
    if atom.value is not None:
        out |= term_variables(atom.value)
    return out


def elem_variables(elem: BodyElem) -> set[str]:
    if isinstance(elem, Literal):
        return atom_variables(elem.atom)
    if isinstance(elem, Comparison):
        return term_variables(elem.left) | term_variables(elem.right)
    out = atom_variables(elem.condition) | term_variables(elem.bound)
    for t in elem.terms:
        out |= term_variables(t)
    return out
