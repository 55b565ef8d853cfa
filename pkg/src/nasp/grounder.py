"""Bottom-up instantiation of validated programs over their active domain.

Facts drive the fixpoint: ranges are expanded, arithmetic evaluated, and
comparisons decided and removed from bodies. Neural declarations and choice
elements are instantiated over the definite (negation-free) closure of the
program; the value atoms they induce seed the possible-atom universe so that
ordinary rules can match them like any other atom.

Ground atoms are interned into a dense id table. Neural value atoms come
first, grouped by (model, event, pointer) in declaration order, which is the
branching order the solver relies on.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from itertools import product

from .lang import (
    Arith,
    Atom,
    BodyElem,
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
from .validate import NeuralSignature, SigmaShape, classify_sigma, neural_signatures, validate

GroundValue = int | str

DEFAULT_ATOM_LIMIT = 10**6


class GroundingError(Exception):
    pass


class GroundingLimitError(GroundingError):
    pass


class UnknownAtomError(Exception):
    """A formula refers to a predicate the program never mentions."""


# --------------------------------------------------------------------------
# Term evaluation


def eval_term(term: Term, subst: dict[str, GroundValue]) -> GroundValue:
    if isinstance(term, Int):
        return term.value
    if isinstance(term, Const):
        return term.name
    if isinstance(term, Var):
        try:
            return subst[term.name]
        except KeyError:
            raise GroundingError(f"unbound variable {term.name}") from None
    if isinstance(term, Arith):
        left = eval_term(term.left, subst)
        right = eval_term(term.right, subst)
        if not isinstance(left, int) or not isinstance(right, int):
            raise GroundingError(f"arithmetic on non-integer term in {term}")
        if term.op == "+":
            return left + right
        if term.op == "-":
            return left - right
        return left * right
    raise GroundingError(f"range {term} not allowed in this position")


def expand_term(term: Term, subst: dict[str, GroundValue]) -> list[GroundValue]:
    """Evaluate a term, expanding ranges to every integer they cover."""
    if isinstance(term, Range):
        lo = eval_term(term.lo, subst)
        hi = eval_term(term.hi, subst)
        if not isinstance(lo, int) or not isinstance(hi, int):
            raise GroundingError(f"range bounds must be integers in {term}")
        return list(range(lo, hi + 1))
    return [eval_term(term, subst)]


def _order_key(v: GroundValue):
    return (0, v, "") if isinstance(v, int) else (1, 0, v)


def compare_values(op: str, left: GroundValue, right: GroundValue) -> bool:
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    a, b = _order_key(left), _order_key(right)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


# --------------------------------------------------------------------------
# Ground atom keys
#
# ordinary: ("a", pred, strong, args, value | None)
# neural:   ("n", model, event, pointer, value)

AtomKey = tuple


def render_value(v: GroundValue) -> str:
    return str(v)


def render_key(key: AtomKey) -> str:
    if key[0] == "n":
        _, model, event, pointer, value = key
        ptr = ", ".join(render_value(p) for p in pointer)
        return f"{model}_{event}({ptr}) = {render_value(value)}"
    _, pred, strong, args, value = key
    s = ("-" if strong else "") + pred
    if args:
        s += "(" + ", ".join(render_value(a) for a in args) + ")"
    if value is not None:
        s += f" = {render_value(value)}"
    return s


def _pattern(item: Atom | SigmaShape):
    """Match signature and term tuple for an atom or neural-atom shape."""
    if isinstance(item, SigmaShape):
        return ("n", item.model), (item.event,) + item.pointer + (item.value,)
    terms = item.args + ((item.value,) if item.value is not None else ())
    sig = ("a", item.pred, item.strong_neg, len(item.args), item.value is not None)
    return sig, terms


def _key_from_args(sig, args: tuple[GroundValue, ...]) -> AtomKey:
    if sig[0] == "n":
        return ("n", sig[1], args[0], args[1:-1], args[-1])
    _, pred, strong, arity, has_value = sig
    return ("a", pred, strong, args[:arity], args[arity] if has_value else None)


def _unify(terms, args, subst):
    """Extend subst so the term tuple matches the ground args, or None."""
    out = None
    for t, g in zip(terms, args):
        if isinstance(t, Var):
            bound = subst.get(t.name) if out is None else out.get(t.name)
            if bound is None and (out is None or t.name not in out) and t.name not in subst:
                if out is None:
                    out = dict(subst)
                out[t.name] = g
            elif bound != g:
                return None
        elif isinstance(t, Int):
            if t.value != g:
                return None
        elif isinstance(t, Const):
            if t.name != g:
                return None
        else:
            if eval_term(t, subst if out is None else out) != g:
                return None
    return subst if out is None else out


class _Universe:
    """Possible ground atoms, indexed by match signature, insertion-ordered."""

    def __init__(self):
        self.lists: dict[tuple, list[tuple]] = {}
        self.sets: dict[tuple, set[tuple]] = {}
        self.count = 0

    def add(self, sig, args: tuple[GroundValue, ...]) -> bool:
        seen = self.sets.setdefault(sig, set())
        if args in seen:
            return False
        seen.add(args)
        self.lists.setdefault(sig, []).append(args)
        self.count += 1
        return True

    def get(self, sig) -> list[tuple]:
        return self.lists.get(sig, ())

    def contains_key(self, key: AtomKey) -> bool:
        if key[0] == "n":
            sig = ("n", key[1])
            args = (key[2],) + key[3] + (key[4],)
        else:
            sig = ("a", key[1], key[2], len(key[3]), key[4] is not None)
            args = key[3] + ((key[4],) if key[4] is not None else ())
        return args in self.sets.get(sig, ())


# --------------------------------------------------------------------------
# Ground program structures


class AtomTable:
    """Bidirectional ground atom <-> dense integer id map."""

    def __init__(self):
        self.keys: list[AtomKey] = []
        self.ids: dict[AtomKey, int] = {}

    def intern(self, key: AtomKey) -> int:
        aid = self.ids.get(key)
        if aid is None:
            aid = len(self.keys)
            self.ids[key] = aid
            self.keys.append(key)
        return aid

    def get(self, key: AtomKey) -> int | None:
        return self.ids.get(key)

    def render(self, aid: int) -> str:
        return render_key(self.keys[aid])

    def __len__(self):
        return len(self.keys)


@dataclass(frozen=True, slots=True)
class GroundRule:
    head: int | None
    pos: tuple[int, ...]
    neg: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class GroundAggregate:
    elements: tuple[tuple[tuple[GroundValue, ...], int], ...]
    op: str
    bound: int

    def holds(self, true_atoms) -> bool:
        count = len({terms for terms, aid in self.elements if aid in true_atoms})
        return compare_values(self.op, count, self.bound)


@dataclass(frozen=True, slots=True)
class GroundConstraint:
    pos: tuple[int, ...]
    neg: tuple[int, ...]
    aggregates: tuple[GroundAggregate, ...] = ()

    def violated_by(self, true_atoms) -> bool:
        return (
            all(a in true_atoms for a in self.pos)
            and all(a not in true_atoms for a in self.neg)
            and all(agg.holds(true_atoms) for agg in self.aggregates)
        )


@dataclass(frozen=True, slots=True)
class GroundWeak:
    pos: tuple[int, ...]
    neg: tuple[int, ...]
    weight: int
    terms: tuple[GroundValue, ...]


@dataclass(frozen=True, slots=True)
class GroundNeuralDecl:
    model: str
    events: int
    pointer: tuple[GroundValue, ...]
    values: tuple[GroundValue, ...]


@dataclass(frozen=True, slots=True)
class NeuralGroup:
    model: str
    event: int
    pointer: tuple[GroundValue, ...]
    value_atoms: tuple[int, ...]  # ids ordered like the declared values


@dataclass(slots=True)
class GroundProgram:
    atoms: AtomTable
    rules: list[GroundRule]
    constraints: list[GroundConstraint]
    weaks: list[GroundWeak]
    neural_decls: list[GroundNeuralDecl]
    neural_groups: list[NeuralGroup]
    choice_groups: list[tuple[int, ...]]
    signatures: dict[str, NeuralSignature]
    known_shapes: set[tuple]
    expanded: bool = False
    _fingerprint: str | None = field(default=None, repr=False)

    @property
    def plain_constraints(self) -> list[GroundConstraint]:
        return [c for c in self.constraints if not c.aggregates]

    @property
    def aggregate_constraints(self) -> list[GroundConstraint]:
        return [c for c in self.constraints if c.aggregates]

    @property
    def fingerprint(self) -> str:
        if self._fingerprint is None:
            self._fingerprint = hashlib.md5(dump_ground(self).encode()).hexdigest()
        return self._fingerprint

    def resolve_atom(self, atom: Atom) -> int | None:
        """Map a ground formula atom to its id; None means constant-false.

        Raises UnknownAtomError when the predicate shape never occurs in the
        program at all, which usually indicates a typo in a query.
        """
        shape = classify_sigma(atom, self.signatures)
        if shape is not None:
            subst: dict[str, GroundValue] = {}
            key = (
                "n",
                shape.model,
                eval_term(shape.event, subst),
                tuple(eval_term(t, subst) for t in shape.pointer),
                eval_term(shape.value, subst),
            )
            return self.atoms.get(key)
        sig = ("a", atom.pred, atom.strong_neg, len(atom.args), atom.value is not None)
        if sig not in self.known_shapes:
            raise UnknownAtomError(f"unknown atom {atom}")
        subst = {}
        key = (
            "a",
            atom.pred,
            atom.strong_neg,
            tuple(eval_term(t, subst) for t in atom.args),
            eval_term(atom.value, subst) if atom.value is not None else None,
        )
        return self.atoms.get(key)


# --------------------------------------------------------------------------
# The grounding engine


class _Grounder:
    def __init__(self, program: Program, atom_limit: int):
        self.program = program
        self.atom_limit = atom_limit
        self.sigs = neural_signatures(program)
        self.possible = _Universe()
        self.known_shapes: set[tuple] = set()
        self._collect_shapes()

    # -- shape bookkeeping -------------------------------------------------

    def _note_atom_shape(self, atom: Atom):
        if classify_sigma(atom, self.sigs) is None:
            self.known_shapes.add(
                ("a", atom.pred, atom.strong_neg, len(atom.args), atom.value is not None)
            )

    def _collect_shapes(self):
        def walk_body(body):
            for elem in body:
                if isinstance(elem, Literal):
                    self._note_atom_shape(elem.atom)
                elif isinstance(elem, CountAggregate):
                    self._note_atom_shape(elem.condition)

        for stmt in self.program.statements:
            if isinstance(stmt, NormalRule):
                if stmt.head is not None:
                    self._note_atom_shape(stmt.head)
                walk_body(stmt.body)
            elif isinstance(stmt, ChoiceRule):
                for elem in stmt.elements:
                    self._note_atom_shape(elem.atom)
                    walk_body(elem.condition)
            elif isinstance(stmt, (WeakConstraint, NeuralRule)):
                walk_body(stmt.body)

    # -- normalization -----------------------------------------------------

    def _norm(self, atom: Atom) -> Atom | SigmaShape:
        shape = classify_sigma(atom, self.sigs)
        return shape if shape is not None else atom

    # -- the join ------------------------------------------------------------

    def _solutions(self, elems, subst, universe, delta_ordinal, delta_list, ordinal=0):
        """Yield substitutions satisfying positive literals and comparisons.

        ``delta_ordinal`` restricts the matching of that positive literal to
        ``delta_list`` (semi-naive evaluation); -1 means no restriction.
        """
        if not elems:
            yield subst
            return
        pick = None
        for j, elem in enumerate(elems):
            if isinstance(elem, tuple):  # positive literal: (ordinal, sig, terms)
                pick = j
                break
            vars_l = _cmp_vars(elem)
            if vars_l <= subst.keys():
                pick = j
                break
            if _bindable(elem, subst):
                pick = j
                break
        if pick is None:
            raise GroundingError("body cannot be scheduled (unsafe rule slipped through)")
        elem = elems[pick]
        rest = elems[:pick] + elems[pick + 1 :]
        if isinstance(elem, tuple):
            lit_ordinal, sig, terms = elem
            source = delta_list if lit_ordinal == delta_ordinal else universe.get(sig)
            for args in source:
                s2 = _unify(terms, args, subst)
                if s2 is not None:
                    yield from self._solutions(rest, s2, universe, delta_ordinal, delta_list)
            return
        if _cmp_vars(elem) <= subst.keys():
            left = eval_term(elem.left, subst)
            right_vals = expand_term(elem.right, subst)
            if elem.op == "=" and isinstance(elem.right, Range):
                if any(compare_values("=", left, rv) for rv in right_vals):
                    yield from self._solutions(rest, subst, universe, delta_ordinal, delta_list)
            elif compare_values(elem.op, left, right_vals[0]):
                yield from self._solutions(rest, subst, universe, delta_ordinal, delta_list)
            return
        # binding equality: Var = expr or expr = Var
        var, expr = (
            (elem.left, elem.right)
            if isinstance(elem.left, Var) and elem.left.name not in subst
            else (elem.right, elem.left)
        )
        for value in expand_term(expr, subst):
            s2 = dict(subst)
            s2[var.name] = value
            yield from self._solutions(rest, s2, universe, delta_ordinal, delta_list)

    def _prep_body(self, body):
        """Split into (schedulable elements, negatives, aggregates)."""
        sched = []
        negs = []
        aggs = []
        ordinal = 0
        for elem in body:
            if isinstance(elem, Literal):
                item = self._norm(elem.atom)
                sig, terms = _pattern(item)
                if elem.negated:
                    negs.append((sig, terms))
                else:
                    sched.append((ordinal, sig, terms))
                    ordinal += 1
            elif isinstance(elem, Comparison):
                sched.append(elem)
            else:
                aggs.append(elem)
        return tuple(sched), tuple(negs), tuple(aggs), ordinal

    def _ground_pattern(self, sig, terms, subst) -> AtomKey:
        return _key_from_args(sig, tuple(eval_term(t, subst) for t in terms))

    def _resolve_negatives(self, negs, subst):
        """Drop vacuously-true negative literals; None means body is false."""
        keys = []
        for sig, terms in negs:
            key = self._ground_pattern(sig, terms, subst)
            if self.possible.contains_key(key):
                keys.append(key)
        return tuple(keys)

    # -- certain closure ------------------------------------------------------

    def certain_closure(self) -> _Universe:
        universe = _Universe()
        eligible = []
        for stmt in self.program.statements:
            if not isinstance(stmt, NormalRule) or stmt.head is None:
                continue
            if classify_sigma(stmt.head, self.sigs) is not None:
                continue
            ok = True
            for elem in stmt.body:
                if isinstance(elem, Literal):
                    if elem.negated or isinstance(self._norm(elem.atom), SigmaShape):
                        ok = False
                elif isinstance(elem, CountAggregate):
                    ok = False
            if ok:
                eligible.append(stmt)
        changed = True
        while changed:
            changed = False
            for rule in eligible:
                sched, _, _, _ = self._prep_body(rule.body)
                for subst in self._solutions(sched, {}, universe, -1, ()):
                    for key in self._expand_head(rule.head, subst):
                        sig, args = _key_sig_args(key)
                        if universe.add(sig, args):
                            changed = True
            self._check_limit(universe)
        return universe

    def _expand_head(self, head: Atom, subst) -> list[AtomKey]:
        item = self._norm(head)
        if isinstance(item, SigmaShape):
            raise GroundingError(f"neural atom {head} in rule head")
        arg_lists = [expand_term(t, subst) for t in head.args]
        value_list = expand_term(head.value, subst) if head.value is not None else [None]
        keys = []
        for combo in product(*arg_lists) if arg_lists else [()]:
            for val in value_list:
                keys.append(("a", head.pred, head.strong_neg, tuple(combo), val))
        return keys

    def _check_limit(self, universe=None):
        count = (universe or self.possible).count
        if count > self.atom_limit:
            raise GroundingLimitError(
                f"ground atom limit exceeded ({count} > {self.atom_limit})"
            )

    # -- main ------------------------------------------------------------------

    def run(self) -> GroundProgram:
        certain = self.certain_closure()

        # neural declarations over the definite closure
        decls: list[GroundNeuralDecl] = []
        decl_seen = set()
        for decl in self.program.neural:
            sched, _, _, _ = self._prep_body(decl.body)
            for subst in self._solutions(sched, {}, certain, -1, ()):
                pointer = tuple(eval_term(t, subst) for t in decl.pointer)
                values = tuple(eval_term(v, {}) for v in decl.values)
                key = (decl.model, pointer)
                if key in decl_seen:
                    continue
                decl_seen.add(key)
                decls.append(GroundNeuralDecl(decl.model, decl.events, pointer, values))
        for d in decls:
            for i in range(1, d.events + 1):
                for v in d.values:
                    self.possible.add(("n", d.model), (i,) + d.pointer + (v,))
        self._check_limit()

        # choice elements over the definite closure
        choice_groups_keys: list[list[AtomKey]] = []
        for stmt in self.program.statements:
            if not isinstance(stmt, ChoiceRule):
                continue
            group: list[AtomKey] = []
            seen = set()
            for elem in stmt.elements:
                sched, _, _, _ = self._prep_body(elem.condition)
                for subst in self._solutions(sched, {}, certain, -1, ()):
                    for key in self._expand_head(elem.atom, subst):
                        if key not in seen:
                            seen.add(key)
                            group.append(key)
            choice_groups_keys.append(group)
            for key in group:
                sig, args = _key_sig_args(key)
                self.possible.add(sig, args)
        self._check_limit()

        # seed with certain closure atoms so round 0 can fire
        for sig, args_list in certain.lists.items():
            for args in args_list:
                self.possible.add(sig, args)

        # phase 1: converge the possible-atom universe, ignoring negation
        head_rules = [
            s for s in self.program.statements if isinstance(s, NormalRule) and s.head is not None
        ]
        prepped = [(r, *self._prep_body(r.body)) for r in head_rules]
        for _, _, _, aggs, _ in prepped:
            if aggs:
                raise GroundingError("aggregates may only appear in constraint bodies")

        def derive(rule, subst):
            new_atoms = []
            for head_key in self._expand_head(rule.head, subst):
                sig, args = _key_sig_args(head_key)
                if self.possible.add(sig, args):
                    new_atoms.append((sig, args))
            return new_atoms

        delta: list[tuple] = []
        for rule, sched, _, _, _ in prepped:
            for subst in self._solutions(sched, {}, self.possible, -1, ()):
                delta.extend(derive(rule, subst))
            self._check_limit()
        while delta:
            delta_by_sig: dict[tuple, list[tuple]] = {}
            for sig, args in delta:
                delta_by_sig.setdefault(sig, []).append(args)
            delta = []
            for rule, sched, _, _, n_pos in prepped:
                for ordinal in range(n_pos):
                    lit = next(e for e in sched if isinstance(e, tuple) and e[0] == ordinal)
                    dlist = delta_by_sig.get(lit[1])
                    if not dlist:
                        continue
                    for subst in self._solutions(sched, {}, self.possible, ordinal, dlist):
                        delta.extend(derive(rule, subst))
                self._check_limit()

        # phase 2: emit ground rules against the converged universe, so that
        # vacuously-true negative literals are dropped only once the full
        # set of derivable atoms is known
        ground_rules: list[tuple] = []
        rule_seen: set[tuple] = set()
        for rule, sched, negs, _, _ in prepped:
            for subst in self._solutions(sched, {}, self.possible, -1, ()):
                neg_keys = self._resolve_negatives(negs, subst)
                pos_keys = tuple(
                    self._ground_pattern(sig, terms, subst)
                    for _, sig, terms in (e for e in sched if isinstance(e, tuple))
                )
                for head_key in self._expand_head(rule.head, subst):
                    item = (head_key, pos_keys, neg_keys)
                    if item not in rule_seen:
                        rule_seen.add(item)
                        ground_rules.append(item)

        # final pass: constraints and weak constraints over the converged universe
        constraints: list[tuple] = []
        constraint_seen: set[tuple] = set()
        weaks: list[tuple] = []
        weak_seen: set[tuple] = set()
        for stmt in self.program.statements:
            if isinstance(stmt, NormalRule) and stmt.head is None:
                sched, negs, aggs, _ = self._prep_body(stmt.body)
                for subst in self._solutions(sched, {}, self.possible, -1, ()):
                    neg_keys = self._resolve_negatives(negs, subst)
                    pos_keys = tuple(
                        self._ground_pattern(sig, terms, subst)
                for _, sig, terms in (e for e in sched if isinstance(e, tuple))
                    )
                    agg_items = tuple(self._ground_aggregate(a, subst) for a in aggs)
                    item = (pos_keys, neg_keys, agg_items)
                    if item not in constraint_seen:
                        constraint_seen.add(item)
                        constraints.append(item)
            elif isinstance(stmt, WeakConstraint):
                sched, negs, aggs, _ = self._prep_body(stmt.body)
                if aggs:
                    raise GroundingError("aggregates may only appear in constraint bodies")
                for subst in self._solutions(sched, {}, self.possible, -1, ()):
                    neg_keys = self._resolve_negatives(negs, subst)
                    pos_keys = tuple(
                        self._ground_pattern(sig, terms, subst)
                for _, sig, terms in (e for e in sched if isinstance(e, tuple))
                    )
                    weight = eval_term(stmt.weight, subst)
                    if not isinstance(weight, int):
                        raise GroundingError("weak constraint weights must be integers")
                    terms = tuple(eval_term(t, subst) for t in stmt.terms)
                    item = (pos_keys, neg_keys, weight, terms)
                    if item not in weak_seen:
                        weak_seen.add(item)
                        weaks.append(item)

        return self._serialize(decls, choice_groups_keys, ground_rules, constraints, weaks)

    def _ground_aggregate(self, agg: CountAggregate, subst):
        item = self._norm(agg.condition)
        sig, terms = _pattern(item)
        elements = []
        seen = set()
        for args in self.possible.get(sig):
            s2 = _unify(terms, args, subst)
            if s2 is None:
                continue
            tup = tuple(eval_term(t, s2) for t in agg.terms)
            key = self._ground_pattern(sig, terms, s2)
            if (tup, key) not in seen:
                seen.add((tup, key))
                elements.append((tup, key))
        bound = eval_term(agg.bound, subst)
        if not isinstance(bound, int):
            raise GroundingError("aggregate bounds must be integers")
        return (tuple(elements), agg.op, bound)

    # -- id assignment ------------------------------------------------------

    def _serialize(self, decls, choice_groups_keys, ground_rules, constraints, weaks):
        table = AtomTable()
        neural_groups = []
        for d in decls:
            for i in range(1, d.events + 1):
                ids = tuple(table.intern(("n", d.model, i, d.pointer, v)) for v in d.values)
                neural_groups.append(NeuralGroup(d.model, i, d.pointer, ids))
        choice_groups = [tuple(table.intern(k) for k in group) for group in choice_groups_keys]

        rules = [
            GroundRule(
                table.intern(head),
                tuple(table.intern(k) for k in pos),
                tuple(table.intern(k) for k in neg),
            )
            for head, pos, neg in ground_rules
        ]
        gconstraints = [
            GroundConstraint(
                tuple(table.intern(k) for k in pos),
                tuple(table.intern(k) for k in neg),
                tuple(
                    GroundAggregate(
                        tuple((tup, table.intern(k)) for tup, k in elements), op, bound
                    )
                    for elements, op, bound in aggs
                ),
            )
            for pos, neg, aggs in constraints
        ]
        gweaks = [
            GroundWeak(
                tuple(table.intern(k) for k in pos),
                tuple(table.intern(k) for k in neg),
                weight,
                terms,
            )
            for pos, neg, weight, terms in weaks
        ]

        # classical-negation twins exclude each other
        for key in list(table.keys):
            if key[0] == "a" and key[2]:
                twin = ("a", key[1], False, key[3], key[4])
                if twin in table.ids:
                    gconstraints.append(
                        GroundConstraint((table.ids[key], table.ids[twin]), (), ())
                    )

        return GroundProgram(
            atoms=table,
            rules=rules,
            constraints=gconstraints,
            weaks=gweaks,
            neural_decls=decls,
            neural_groups=neural_groups,
            choice_groups=choice_groups,
            signatures=self.sigs,
            known_shapes=self.known_shapes,
        )


def _key_sig_args(key: AtomKey):
    if key[0] == "n":
        return ("n", key[1]), (key[2],) + key[3] + (key[4],)
    sig = ("a", key[1], key[2], len(key[3]), key[4] is not None)
    args = key[3] + ((key[4],) if key[4] is not None else ())
    return sig, args


def _cmp_vars(elem: Comparison) -> set[str]:
    from .lang import term_variables

    return term_variables(elem.left) | term_variables(elem.right)


def _bindable(elem: Comparison, subst) -> bool:
    from .lang import term_variables

    if elem.op != "=":
        return False
    for var_side, expr_side in ((elem.left, elem.right), (elem.right, elem.left)):
        if (
            isinstance(var_side, Var)
            and var_side.name not in subst
            and term_variables(expr_side) <= subst.keys()
        ):
            return True
    return False


# --------------------------------------------------------------------------
# Public entry points


def ground(program: Program, atom_limit: int = DEFAULT_ATOM_LIMIT) -> GroundProgram:
    """Instantiate a validated program; raises on validation errors."""
    diagnostics = validate(program)
    if diagnostics:
        raise GroundingError(
            "program has validation errors: " + "; ".join(str(d) for d in diagnostics)
        )
    return _Grounder(program, atom_limit).run()


def herbrand_domain(program: Program, atom_limit: int = DEFAULT_ATOM_LIMIT) -> set[GroundValue]:
    """Ground terms reachable by instantiation: fact constants, expanded
    ranges, declared values, and integers produced by arithmetic."""
    gp = ground(program, atom_limit)
    domain: set[GroundValue] = set()
    for key in gp.atoms.keys:
        if key[0] == "n":
            domain.update(key[3])
            domain.add(key[4])
        else:
            domain.update(key[3])
            if key[4] is not None:
                domain.add(key[4])
    return domain


def dump_ground(gp: GroundProgram) -> str:
    """Ground program in surface syntax, one statement per line."""
    lines = []
    for d in gp.neural_decls:
        ptr = ", ".join([str(d.events)] + [render_value(p) for p in d.pointer])
        vals = ", ".join(render_value(v) for v in d.values)
        lines.append(f"nn({d.model}({ptr}), [{vals}]).")
    for group in gp.choice_groups:
        lines.append("{" + "; ".join(gp.atoms.render(a) for a in group) + "} = 1.")
    for rule in gp.rules:
        body = [gp.atoms.render(a) for a in rule.pos]
        body += ["not " + gp.atoms.render(a) for a in rule.neg]
        head = gp.atoms.render(rule.head)
        lines.append(f"{head} :- {', '.join(body)}." if body else f"{head}.")
    for c in gp.constraints:
        body = [gp.atoms.render(a) for a in c.pos]
        body += ["not " + gp.atoms.render(a) for a in c.neg]
        for agg in c.aggregates:
            elems = "; ".join(
                (", ".join(render_value(v) for v in tup) + " : " + gp.atoms.render(aid))
                for tup, aid in agg.elements
            )
            body.append(f"#count{{{elems}}} {agg.op} {agg.bound}")
        lines.append(f":- {', '.join(body)}." if body else ":- .")
    for w in gp.weaks:
        body = [gp.atoms.render(a) for a in w.pos]
        body += ["not " + gp.atoms.render(a) for a in w.neg]
        tail = ", ".join([str(w.weight)] + [render_value(t) for t in w.terms])
        lines.append(f":~ {', '.join(body)}. [{tail}]")
    return "".join(line + "\n" for line in lines)
