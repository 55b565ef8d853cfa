"""Propositional formulas over ground atoms: queries, evidence, observations."""

from __future__ import annotations

from dataclasses import dataclass

from .lang import Atom


@dataclass(frozen=True, slots=True)
class FTrue:
    def __str__(self):
        return "true"


@dataclass(frozen=True, slots=True)
class FFalse:
    def __str__(self):
        return "false"


@dataclass(frozen=True, slots=True)
class AtomRef:
    atom: Atom

    def __str__(self):
        return str(self.atom)


@dataclass(frozen=True, slots=True)
class Not:
    inner: "Formula"

    def __str__(self):
        return f"not {_wrap(self.inner)}"


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"{_wrap(self.left)}, {_wrap(self.right)}"


@dataclass(frozen=True, slots=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"{_wrap(self.left)}; {_wrap(self.right)}"


Formula = FTrue | FFalse | AtomRef | Not | And | Or


def _wrap(f: Formula) -> str:
    if isinstance(f, (Or, And)):
        return f"({f})"
    return str(f)


def formula_atoms(formula: Formula) -> list[Atom]:
    """Atoms referenced by the formula, in first-occurrence order."""
    out: list[Atom] = []

    def walk(f: Formula):
        if isinstance(f, AtomRef):
            if f.atom not in out:
                out.append(f.atom)
        elif isinstance(f, Not):
            walk(f.inner)
        elif isinstance(f, (And, Or)):
            walk(f.left)
            walk(f.right)

    walk(formula)
    return out


def evaluate(formula: Formula, true_ids: frozenset[int], atom_ids: dict[Atom, int | None]) -> bool:
    """Evaluate under a model given a per-atom id map (None = never true)."""
    if isinstance(formula, FTrue):
        return True
    if isinstance(formula, FFalse):
        return False
    if isinstance(formula, AtomRef):
        aid = atom_ids[formula.atom]
        return aid is not None and aid in true_ids
    if isinstance(formula, Not):
        return not evaluate(formula.inner, true_ids, atom_ids)
    if isinstance(formula, And):
        return evaluate(formula.left, true_ids, atom_ids) and evaluate(
            formula.right, true_ids, atom_ids
        )
    return evaluate(formula.left, true_ids, atom_ids) or evaluate(formula.right, true_ids, atom_ids)


def to_clauses(formula: Formula, atom_ids: dict[Atom, int | None], fresh_var) -> list[list[int]]:
    """Tseitin-encode ``formula`` as clauses over solver literals.

    Atom ids are program variables; ``fresh_var()`` allocates auxiliary
    variables. Literal encoding: ``2*v`` is the positive literal of variable
    ``v``, ``2*v + 1`` the negative one. Atoms mapped to None are folded as
    constant false.
    """
    clauses: list[list[int]] = []
    TRUE, FALSE = "T", "F"

    def enc(f: Formula):
        if isinstance(f, FTrue):
            return TRUE
        if isinstance(f, FFalse):
            return FALSE
        if isinstance(f, AtomRef):
            aid = atom_ids[f.atom]
            return FALSE if aid is None else 2 * aid
        if isinstance(f, Not):
            inner = enc(f.inner)
            if inner == TRUE:
                return FALSE
            if inner == FALSE:
                return TRUE
            return inner ^ 1
        a, b = enc(f.left), enc(f.right)
        if isinstance(f, And):
            if a == FALSE or b == FALSE:
                return FALSE
            if a == TRUE:
                return b
            if b == TRUE:
                return a
            v = 2 * fresh_var()
            clauses.append([v ^ 1, a])
            clauses.append([v ^ 1, b])
            clauses.append([v, a ^ 1, b ^ 1])
            return v
        if a == TRUE or b == TRUE:
            return TRUE
        if a == FALSE:
            return b
        if b == FALSE:
            return a
        v = 2 * fresh_var()
        clauses.append([v ^ 1, a, b])
        clauses.append([v, a ^ 1])
        clauses.append([v, b ^ 1])
        return v

    root = enc(formula)
    if root == TRUE:
        return clauses
    if root == FALSE:
        clauses.append([])  # unsatisfiable
        return clauses
    clauses.append([root])
    return clauses
