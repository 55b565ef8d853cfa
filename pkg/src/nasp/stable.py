"""Exact stable-model enumeration for ground programs.

The solver branches over atoms in ascending id with unit propagation on the
Clark-completion clauses of the rules plus the aggregate-free integrity
constraints. Completion models over-approximate stable models, so every
candidate is verified with a reduct check before it is reported; the check
doubles as the independent oracle ``check_stable``.

Aggregates and weak constraints never enter the search: aggregate
constraints filter enumerated models afterwards, weak constraints score
them. Exactly-one groups (from neural declarations and ``{...} = 1`` rules)
are compiled into ordinary rules beforehand by ``expand_neural``.
"""

from __future__ import annotations

from .grounder import GroundConstraint, GroundProgram, GroundRule, GroundWeak

DEFAULT_MODEL_LIMIT = 10**6


class EnumerationLimitError(Exception):
    pass


# --------------------------------------------------------------------------
# Exactly-one expansion


def exclusive_group_rules(atoms: tuple[int, ...]) -> list[GroundRule]:
    """Rules realizing "exactly one of ``atoms``": each member holds unless
    one of the others does."""
    rules = []
    for j, atom in enumerate(atoms):
        others = atoms[:j] + atoms[j + 1 :]
        rules.append(GroundRule(atom, (), others))
    return rules


def expand_neural(gp: GroundProgram) -> GroundProgram:
    """Replace neural and choice groups by their exclusive-choice rules."""
    if gp.expanded:
        return gp
    rules = list(gp.rules)
    constraints = list(gp.constraints)
    for group in gp.neural_groups:
        rules.extend(exclusive_group_rules(group.value_atoms))
    for group in gp.choice_groups:
        if group:
            rules.extend(exclusive_group_rules(group))
        else:
            constraints.append(GroundConstraint((), (), ()))  # empty choice: unsatisfiable
    return GroundProgram(
        atoms=gp.atoms,
        rules=rules,
        constraints=constraints,
        weaks=gp.weaks,
        neural_decls=gp.neural_decls,
        neural_groups=gp.neural_groups,
        choice_groups=gp.choice_groups,
        signatures=gp.signatures,
        known_shapes=gp.known_shapes,
        expanded=True,
    )


# --------------------------------------------------------------------------
# Reduct-based stability check


class _StabilityChecker:
    def __init__(self, rules: list[GroundRule], natoms: int):
        self.rules = rules
        self.by_pos: list[list[int]] = [[] for _ in range(natoms)]
        for ri, rule in enumerate(rules):
            for a in rule.pos:
                self.by_pos[a].append(ri)

    def least_model(self, candidate: frozenset[int]) -> set[int]:
        counts = []
        queue = []
        derived: set[int] = set()
        active = []
        for rule in self.rules:
            ok = all(n not in candidate for n in rule.neg)
            active.append(ok)
            counts.append(len(rule.pos))
            if ok and not rule.pos and rule.head not in derived:
                derived.add(rule.head)
                queue.append(rule.head)
        while queue:
            atom = queue.pop()
            for ri in self.by_pos[atom]:
                if not active[ri]:
                    continue
                counts[ri] -= 1
                if counts[ri] == 0:
                    head = self.rules[ri].head
                    if head not in derived:
                        derived.add(head)
                        queue.append(head)
        return derived

    def is_stable(self, candidate: frozenset[int]) -> bool:
        return self.least_model(candidate) == candidate


def check_stable(gp: GroundProgram, candidate: frozenset[int]) -> bool:
    """True iff ``candidate`` is the least model of the reduct w.r.t. itself.

    Operates on the rules of an expanded ground program; integrity
    constraints are judged separately by ``filter_constraints``.
    """
    gp = expand_neural(gp)
    return _StabilityChecker(gp.rules, len(gp.atoms)).is_stable(candidate)


# --------------------------------------------------------------------------
# DPLL over the completion

_TRUE, _FALSE, _UNSET = 1, 0, -1


class StableSolver:
    """Reusable enumerator over one expanded ground program.

    Clause variables are the program atoms (ids as in the atom table)
    followed by one auxiliary variable per non-empty rule body and any
    auxiliaries allocated by formula encodings.
    """

    def __init__(self, gp: GroundProgram):
        self.gp = expand_neural(gp)
        self.natoms = len(self.gp.atoms)
        self.base_clauses: list[tuple[int, ...]] = []
        self.nvars = self.natoms
        self._build()

    def fresh_var(self) -> int:
        v = self.nvars
        self.nvars += 1
        return v

    def _build(self):
        add = self.base_clauses.append
        defining: dict[int, list[int]] = {}
        facts: set[int] = set()
        for rule in self.gp.rules:
            head = rule.head
            body_lits = [2 * p for p in rule.pos] + [2 * n + 1 for n in rule.neg]
            if not body_lits:
                facts.add(head)
                add((2 * head,))
                continue
            b = self.fresh_var()
            for lit in body_lits:
                add((2 * b + 1, lit))
            add(tuple([2 * b] + [lit ^ 1 for lit in body_lits]))
            add((2 * b + 1, 2 * head))
            defining.setdefault(head, []).append(b)
        for atom in range(self.natoms):
            if atom in facts:
                continue
            bodies = defining.get(atom, [])
            add(tuple([2 * atom + 1] + [2 * b for b in bodies]))
        for c in self.gp.constraints:
            if c.aggregates:
                self._encode_aggregate_constraint(c)
            else:
                add(tuple([2 * p + 1 for p in c.pos] + [2 * n for n in c.neg]))
        self.checker = _StabilityChecker(self.gp.rules, self.natoms)

    _AGG_TUPLE_CAP = 12

    def _encode_aggregate_constraint(self, c: GroundConstraint):
        """Clausal pruning for a constraint with count aggregates.

        Semantically redundant with ``filter_constraints`` (which still runs
        afterwards) but required to keep search trees small: every blocked
        assignment is one the post-hoc filter would discard anyway. Skipped
        for aggregates with many distinct tuples.
        """
        from itertools import product as _product

        from .grounder import compare_values

        add = self.base_clauses.append
        guard = [2 * p + 1 for p in c.pos] + [2 * n for n in c.neg]
        indicator_sets = []
        for agg in c.aggregates:
            groups: dict[tuple, list[int]] = {}
            for tup, aid in agg.elements:
                groups.setdefault(tup, []).append(aid)
            if len(groups) > self._AGG_TUPLE_CAP:
                return
            indicators = []
            for tup in groups:
                atoms = groups[tup]
                if len(atoms) == 1:
                    indicators.append(2 * atoms[0])
                else:
                    t = self.fresh_var()
                    add(tuple([2 * t + 1] + [2 * a for a in atoms]))
                    for a in atoms:
                        add((2 * t, 2 * a + 1))
                    indicators.append(2 * t)
            indicator_sets.append((indicators, agg.op, agg.bound))
        if sum(len(ind) for ind, _, _ in indicator_sets) > self._AGG_TUPLE_CAP:
            return
        shapes = [len(ind) for ind, _, _ in indicator_sets]
        for bits in _product(*[list(_product((0, 1), repeat=m)) for m in shapes]):
            violated = all(
                compare_values(op, sum(chosen), bound)
                for chosen, (_, op, bound) in zip(bits, indicator_sets)
            )
            if not violated:
                continue
            block = list(guard)
            for chosen, (indicators, _, _) in zip(bits, indicator_sets):
                for on, lit in zip(chosen, indicators):
                    block.append(lit ^ 1 if on else lit)
            add(tuple(block))

    # -- search --------------------------------------------------------------

    def models(
        self,
        assumptions: tuple[int, ...] = (),
        extra_clauses: tuple[tuple[int, ...], ...] = (),
        limit: int = DEFAULT_MODEL_LIMIT,
        extra_vars: int = 0,
    ):
        """Yield stable models (frozensets of atom ids) in deterministic order.

        ``assumptions`` are literals (2*atom or 2*atom+1) fixed up front;
        ``extra_clauses`` may reference auxiliary variables allocated via
        ``fresh_var`` bookkeeping by passing ``extra_vars``.
        """
        nvars = self.nvars + extra_vars
        clauses: list[list[int]] = []
        units: list[int] = list(assumptions)
        for c in list(self.base_clauses) + list(extra_clauses):
            if len(c) == 0:
                return
            if len(c) == 1:
                units.append(c[0])
            else:
                clauses.append(list(c))
        watches: list[list[int]] = [[] for _ in range(2 * nvars)]
        for ci, clause in enumerate(clauses):
            watches[clause[0]].append(ci)
            watches[clause[1]].append(ci)
        assign = [_UNSET] * nvars
        trail: list[int] = []

        def set_lit(lit: int) -> bool:
            var, want = lit >> 1, 1 - (lit & 1)
            if assign[var] == _UNSET:
                assign[var] = want
                trail.append(lit)
                return True
            return assign[var] == want

        def propagate(qhead: int) -> bool:
            while qhead < len(trail):
                false_lit = trail[qhead] ^ 1
                qhead += 1
                wl = watches[false_lit]
                i = 0
                while i < len(wl):
                    ci = wl[i]
                    clause = clauses[ci]
                    if clause[0] == false_lit:
                        clause[0], clause[1] = clause[1], clause[0]
                    first = clause[0]
                    fv = assign[first >> 1]
                    if fv == 1 - (first & 1):
                        i += 1
                        continue
                    for j in range(2, len(clause)):
                        lj = clause[j]
                        if assign[lj >> 1] != (lj & 1):
                            clause[1], clause[j] = lj, clause[1]
                            watches[lj].append(ci)
                            wl[i] = wl[-1]
                            wl.pop()
                            break
                    else:
                        if fv == (first & 1):
                            return False
                        set_lit(first)
                        i += 1
            return True

        for lit in units:
            if not set_lit(lit):
                return
        if not propagate(0):
            return

        count = 0
        decisions: list[tuple[int, int, bool]] = []  # (trail mark, var, flipped)

        def backtrack_and_flip() -> bool:
            while decisions:
                mark, var, flipped = decisions.pop()
                while len(trail) > mark:
                    assign[trail.pop() >> 1] = _UNSET
                if flipped:
                    continue
                decisions.append((mark, var, True))
                set_lit(2 * var + 1)
                if propagate(len(trail) - 1):
                    return True
            return False

        cursor = 0
        while True:
            var = None
            v = cursor if decisions else 0
            while v < nvars:
                if assign[v] == _UNSET:
                    var = v
                    break
                v += 1
            if var is None:
                candidate = frozenset(a for a in range(self.natoms) if assign[a] == _TRUE)
                if self.checker.is_stable(candidate):
                    count += 1
                    if count > limit:
                        raise EnumerationLimitError(f"more than {limit} stable models")
                    yield candidate
                if not backtrack_and_flip():
                    return
                cursor = 0
                continue
            cursor = var
            decisions.append((len(trail), var, False))
            set_lit(2 * var)
            while not propagate(len(trail) - 1):
                if not backtrack_and_flip():
                    return
                cursor = 0


def enumerate_stable_models(
    gp: GroundProgram, limit: int = DEFAULT_MODEL_LIMIT
) -> list[frozenset[int]]:
    """All stable models of the expanded program, before aggregate filtering."""
    return list(StableSolver(gp).models(limit=limit))


# --------------------------------------------------------------------------
# Post-hoc filtering and optimization


def filter_constraints(
    models: list[frozenset[int]], constraints: list[GroundConstraint]
) -> list[frozenset[int]]:
    """Keep models in which every constraint body is falsified."""
    return [m for m in models if not any(c.violated_by(m) for c in constraints)]


def penalty(model: frozenset[int], weaks: list[GroundWeak]) -> int:
    """Total weight over satisfied weak constraints, one per distinct
    (weight, terms) tuple."""
    charged = {
        (w.weight, w.terms)
        for w in weaks
        if all(a in model for a in w.pos) and all(a not in model for a in w.neg)
    }
    return sum(w for w, _ in charged)


def optimal_models(
    models: list[frozenset[int]], weaks: list[GroundWeak]
) -> list[frozenset[int]]:
    """The subset minimizing the weak-constraint penalty; all ties kept."""
    if not weaks or not models:
        return list(models)
    scores = [penalty(m, weaks) for m in models]
    best = min(scores)
    return [m for m, s in zip(models, scores) if s == best]
