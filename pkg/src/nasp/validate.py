"""Static checks: safety, head restrictions, aggregate placement.

Also owns the recognition of neural value atoms. A declaration
``nn(m(e, t1..tk), [v1..vn])`` induces atoms written in any of three ways:

* ``m_i(t1..tk) = v``     (event index in the predicate name)
* ``m(t1..tk) = v``       (only when e = 1)
* ``m(i, t1..tk, v)``     (event index and value as extra arguments)

All three resolve to the same internal atom.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lang import (
    Atom,
    BodyElem,
    ChoiceRule,
    Comparison,
    CountAggregate,
    Int,
    Literal,
    NeuralRule,
    NormalRule,
    Program,
    Term,
    Var,
    WeakConstraint,
    atom_variables,
    term_variables,
)


@dataclass(frozen=True, slots=True)
class Diagnostic:
    message: str
    line: int = 0
    col: int = 0

    def __str__(self):
        return f"{self.line}:{self.col}: {self.message}"


@dataclass(frozen=True, slots=True)
class NeuralSignature:
    model: str
    events: int
    values: tuple[Term, ...]
    pointer_arity: int

    @property
    def n(self) -> int:
        return len(self.values)


def neural_signatures(program: Program) -> dict[str, NeuralSignature]:
    """Collect one signature per model id; conflicting declarations lose."""
    sigs: dict[str, NeuralSignature] = {}
    for decl in program.neural:
        sig = NeuralSignature(decl.model, decl.events, decl.values, len(decl.pointer))
        sigs.setdefault(decl.model, sig)
    return sigs


@dataclass(frozen=True, slots=True)
class SigmaShape:
    """A syntactic reference to a neural value atom."""

    model: str
    event: Term
    pointer: tuple[Term, ...]
    value: Term


def classify_sigma(atom: Atom, sigs: dict[str, NeuralSignature]) -> SigmaShape | None:
    """Return the neural-atom reading of ``atom``, or None if it is ordinary."""
    if atom.strong_neg:
        return None
    if atom.value is not None:
        if atom.pred in sigs and len(atom.args) == sigs[atom.pred].pointer_arity:
            return SigmaShape(atom.pred, Int(1), atom.args, atom.value)
        if "_" in atom.pred:
            base, _, suffix = atom.pred.rpartition("_")
            if suffix.isdigit() and base in sigs and len(atom.args) == sigs[base].pointer_arity:
                return SigmaShape(base, Int(int(suffix)), atom.args, atom.value)
        return None
    if atom.pred in sigs and len(atom.args) == sigs[atom.pred].pointer_arity + 2:
        k = sigs[atom.pred].pointer_arity
        return SigmaShape(atom.pred, atom.args[0], atom.args[1 : k + 1], atom.args[k + 1])
    return None


# --------------------------------------------------------------------------
# Safety


def _binds(elem: BodyElem, bound: set[str]) -> bool:
    """Apply one binding step; returns True if new variables were bound."""
    if isinstance(elem, Literal) and not elem.negated:
        new = atom_variables(elem.atom) - bound
        bound |= new
        return bool(new)
    if isinstance(elem, Comparison) and elem.op == "=":
        for var_side, expr_side in ((elem.left, elem.right), (elem.right, elem.left)):
            if (
                isinstance(var_side, Var)
                and var_side.name not in bound
                and term_variables(expr_side) <= bound
            ):
                bound.add(var_side.name)
                return True
    return False


def bound_variables(body: tuple[BodyElem, ...]) -> set[str]:
    """Variables bound by positive literals and binding equalities."""
    bound: set[str] = set()
    changed = True
    while changed:
        changed = False
        for elem in body:
            if _binds(elem, bound):
                changed = True
    return bound


def _needed_variables(body: tuple[BodyElem, ...]) -> set[str]:
    need: set[str] = set()
    for elem in body:
        if isinstance(elem, Literal):
            need |= atom_variables(elem.atom)
        elif isinstance(elem, Comparison):
            need |= term_variables(elem.left) | term_variables(elem.right)
        else:
            need |= term_variables(elem.bound)
    return need


def _check_safety(body, head_vars: set[str], extra_needed: set[str], line, col, out, where=""):
    bound = bound_variables(body)
    suffix = f" in {where}" if where else ""
    for elem in body:
        if isinstance(elem, CountAggregate):
            cond_vars = atom_variables(elem.condition)
            for t in elem.terms:
                loose = term_variables(t) - cond_vars - bound
                for v in sorted(loose):
                    out.append(Diagnostic(f"aggregate term variable {v} not bound{suffix}", line, col))
    unsafe = (head_vars | _needed_variables(body) | extra_needed) - bound
    for v in sorted(unsafe):
        out.append(Diagnostic(f"unsafe variable {v}{suffix}", line, col))


# --------------------------------------------------------------------------
# Program validation


def validate(program: Program) -> list[Diagnostic]:
    """Return diagnostics; an empty list means the program is well-formed."""
    out: list[Diagnostic] = []
    sigs = neural_signatures(program)

    for decl in program.neural:
        first = sigs[decl.model]
        mine = NeuralSignature(decl.model, decl.events, decl.values, len(decl.pointer))
        if mine != first:
            out.append(
                Diagnostic(
                    f"neural declarations for {decl.model} disagree on shape or values",
                    decl.line,
                    decl.col,
                )
            )
        if decl.events < 1:
            out.append(Diagnostic(f"{decl.model}: event count must be >= 1", decl.line, decl.col))
        if len(decl.values) < 2:
            out.append(Diagnostic(f"{decl.model}: at least two values required", decl.line, decl.col))
        for v in decl.values:
            if term_variables(v):
                out.append(Diagnostic(f"{decl.model}: values must be ground", decl.line, decl.col))
        for elem in decl.body:
            if isinstance(elem, Literal) and elem.negated:
                out.append(
                    Diagnostic("neural declaration bodies must be negation-free", decl.line, decl.col)
                )
            elif isinstance(elem, CountAggregate):
                out.append(
                    Diagnostic("aggregates may only appear in constraint bodies", decl.line, decl.col)
                )
            elif isinstance(elem, Literal) and classify_sigma(elem.atom, sigs):
                out.append(
                    Diagnostic(
                        "neural declaration bodies cannot refer to neural atoms", decl.line, decl.col
                    )
                )
        ptr_vars = set()
        for t in decl.pointer:
            ptr_vars |= term_variables(t)
        _check_safety(decl.body, ptr_vars, set(), decl.line, decl.col, out, where="neural declaration")

    for stmt in program.rules:
        if isinstance(stmt, NormalRule):
            _validate_normal(stmt, sigs, out)
        elif isinstance(stmt, ChoiceRule):
            _validate_choice(stmt, sigs, out)
        elif isinstance(stmt, WeakConstraint):
            _validate_weak(stmt, sigs, out)
    return out


def _check_body_atoms(body, sigs, line, col, out, in_constraint: bool):
    for elem in body:
        if isinstance(elem, CountAggregate) and not in_constraint:
            out.append(Diagnostic("aggregates may only appear in constraint bodies", line, col))
        if isinstance(elem, Literal) and elem.atom.strong_neg and classify_sigma(
            Atom(elem.atom.pred, elem.atom.args, elem.atom.value), sigs
        ):
            out.append(Diagnostic("classical negation cannot apply to neural atoms", line, col))


def _validate_normal(rule: NormalRule, sigs, out):
    head_vars: set[str] = set()
    if rule.head is not None:
        head_vars = atom_variables(rule.head)
        shape = classify_sigma(rule.head, sigs)
        if shape is not None:
            out.append(
                Diagnostic(
                    f"neural atom {rule.head} cannot appear in a rule head", rule.line, rule.col
                )
            )
        if rule.head.strong_neg and classify_sigma(
            Atom(rule.head.pred, rule.head.args, rule.head.value), sigs
        ):
            out.append(
                Diagnostic("classical negation cannot apply to neural atoms", rule.line, rule.col)
            )
    _check_body_atoms(rule.body, sigs, rule.line, rule.col, out, in_constraint=rule.head is None)
    _check_safety(rule.body, head_vars, set(), rule.line, rule.col, out)
    _check_event_bounds(rule.body, rule.head, sigs, rule.line, rule.col, out)


def _validate_choice(rule: ChoiceRule, sigs, out):
    for elem in rule.elements:
        if classify_sigma(elem.atom, sigs) is not None:
            out.append(
                Diagnostic(
                    f"neural atom {elem.atom} cannot appear in a choice head", rule.line, rule.col
                )
            )
        for c in elem.condition:
            if isinstance(c, CountAggregate):
                out.append(
                    Diagnostic("aggregates may only appear in constraint bodies", rule.line, rule.col)
                )
            elif isinstance(c, Literal) and (c.negated or classify_sigma(c.atom, sigs)):
                out.append(
                    Diagnostic(
                        "choice conditions must be negation-free and non-neural",
                        rule.line,
                        rule.col,
                    )
                )
        _check_safety(
            elem.condition, atom_variables(elem.atom), set(), rule.line, rule.col, out, where="choice"
        )


def _validate_weak(rule: WeakConstraint, sigs, out):
    _check_body_atoms(rule.body, sigs, rule.line, rule.col, out, in_constraint=False)
    extra = term_variables(rule.weight)
    for t in rule.terms:
        extra |= term_variables(t)
    _check_safety(rule.body, set(), extra, rule.line, rule.col, out)


def _check_event_bounds(body, head, sigs, line, col, out):
    atoms = [e.atom for e in body if isinstance(e, Literal)]
    if head is not None:
        atoms.append(head)
    for atom in atoms:
        shape = classify_sigma(atom, sigs)
        if shape is None:
            continue
        sig = sigs[shape.model]
        if isinstance(shape.event, Int) and not (1 <= shape.event.value <= sig.events):
            out.append(
                Diagnostic(
                    f"event index {shape.event.value} out of range for {shape.model}", line, col
                )
            )
        if sig.events > 1 and atom.value is not None and atom.pred == shape.model:
            out.append(
                Diagnostic(
                    f"{shape.model} has {sig.events} events; name the event index", line, col
                )
            )
