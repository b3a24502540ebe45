"""Propositional formulas: parsing, semantics, sequent proving, CNF and SAT.

Formulas are immutable trees. The text syntax, tightest binding first::

    ~  (prefix)   &   |   ^ (xor)   =>  (right assoc)   <=>

Variables are the single letters A-Z except ``T`` and ``F``, which are the
constants true and false.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, NamedTuple, Optional

from .errors import FormatError, ParseError, ResourceError, UnboundVariable

VARIABLE_LETTERS = "ABCDEGHIJKLMNOPQRSUVWXYZ"
MAX_SIGNATURE_VARS = 20


class Formula:
    """Base class of the formula node types."""

    __slots__ = ()

    @property
    def size(self) -> int:
        return sum(1 for _ in subformulas(self))

    def __str__(self):
        return render_formula(self)


@dataclass(frozen=True)
class Var(Formula):
    name: str

    def __post_init__(self):
        if len(self.name) != 1 or self.name not in VARIABLE_LETTERS:
            raise ValueError(f"variable names are single letters A-Z other than T/F, got {self.name!r}")


@dataclass(frozen=True)
class ConstTrue(Formula):
    pass


@dataclass(frozen=True)
class ConstFalse(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class _Binary(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(_Binary):
    pass


@dataclass(frozen=True)
class Or(_Binary):
    pass


@dataclass(frozen=True)
class Impl(_Binary):
    pass


@dataclass(frozen=True)
class Biim(_Binary):
    pass


@dataclass(frozen=True)
class Xor(_Binary):
    pass


class Connective(str, enum.Enum):
    NOT = "NOT"
    AND = "AND"
    OR = "OR"
    IMPL = "IMPL"
    BIIM = "BIIM"
    XOR = "XOR"
    CONST = "CONST"


_CONNECTIVE_OF = {
    Not: Connective.NOT,
    And: Connective.AND,
    Or: Connective.OR,
    Impl: Connective.IMPL,
    Biim: Connective.BIIM,
    Xor: Connective.XOR,
    ConstTrue: Connective.CONST,
    ConstFalse: Connective.CONST,
}

BINARY_TYPES = (And, Or, Impl, Biim, Xor)

# token -> (node type, binding power, right associative)
_INFIX = {
    "<=>": (Biim, 1, False),
    "=>": (Impl, 2, True),
    "^": (Xor, 3, False),
    "|": (Or, 4, False),
    "&": (And, 5, False),
}
_SYMBOL = {Biim: "<=>", Impl: "=>", Xor: "^", Or: "|", And: "&"}
_PREFIX_BP = 6


def subformulas(f: Formula) -> Iterator[Formula]:
    """Preorder walk over every node of ``f``."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        if isinstance(g, Not):
            stack.append(g.operand)
        elif isinstance(g, _Binary):
            stack.append(g.right)
            stack.append(g.left)


def variables_of(f: Formula) -> frozenset:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Var))


def connectives_of(f: Formula) -> frozenset:
    return frozenset(_CONNECTIVE_OF[type(g)] for g in subformulas(f) if not isinstance(g, Var))


# -- text syntax -------------------------------------------------------------


def _tokenize(text):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif text.startswith("<=>", i):
            yield "<=>", i
            i += 3
        elif text.startswith("=>", i):
            yield "=>", i
            i += 2
        elif c in "~&|^()":
            yield c, i
            i += 1
        elif "A" <= c <= "Z":
            yield c, i
            i += 1
        else:
            raise ParseError(f"unexpected character {c!r}", i, "a variable, constant, operator or parenthesis")
    yield None, n


class _FormulaParser:
    def __init__(self, text):
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expression(self, min_bp):
        tok, offset = self.advance()
        if tok == "~":
            lhs = Not(self.expression(_PREFIX_BP))
        elif tok == "(":
            lhs = self.expression(0)
            close, where = self.advance()
            if close != ")":
                raise ParseError("unbalanced parenthesis", where, "')'")
        elif tok == "T":
            lhs = ConstTrue()
        elif tok == "F":
            lhs = ConstFalse()
        elif tok is not None and len(tok) == 1 and "A" <= tok <= "Z":
            lhs = Var(tok)
        else:
            what = "end of input" if tok is None else repr(tok)
            raise ParseError(f"unexpected {what}", offset, "a variable, constant, '~' or '('")
        while True:
            tok, offset = self.peek()
            if tok not in _INFIX:
                break
            node, bp, right_assoc = _INFIX[tok]
            if bp < min_bp:
                break
            self.advance()
            rhs = self.expression(bp if right_assoc else bp + 1)
            lhs = node(lhs, rhs)
        return lhs


def parse_formula(text: str) -> Formula:
    parser = _FormulaParser(text)
    result = parser.expression(0)
    tok, offset = parser.peek()
    if tok is not None:
        raise ParseError(f"unexpected {tok!r}", offset, "an operator or end of input")
    return result


def render_formula(f: Formula) -> str:
    """Fully parenthesised text; ``parse_formula`` inverts it."""
    if isinstance(f, Var):
        return f.name
    if isinstance(f, ConstTrue):
        return "T"
    if isinstance(f, ConstFalse):
        return "F"
    if isinstance(f, Not):
        return "~" + render_formula(f.operand)
    return f"({render_formula(f.left)} {_SYMBOL[type(f)]} {render_formula(f.right)})"


_BY_NAME = {cls.__name__: cls for cls in (Var, ConstTrue, ConstFalse, Not, And, Or, Impl, Biim, Xor)}


def formula_to_json(f: Formula) -> dict:
    if isinstance(f, Var):
        return {"op": "Var", "name": f.name}
    if isinstance(f, Not):
        return {"op": "Not", "args": [formula_to_json(f.operand)]}
    if isinstance(f, _Binary):
        return {"op": type(f).__name__, "args": [formula_to_json(f.left), formula_to_json(f.right)]}
    return {"op": type(f).__name__}


def formula_from_json(doc) -> Formula:
    if not isinstance(doc, dict) or doc.get("op") not in _BY_NAME:
        raise FormatError(f"not a formula node: {doc!r}")
    cls = _BY_NAME[doc["op"]]
    try:
        if cls is Var:
            return Var(doc["name"])
        if cls in (ConstTrue, ConstFalse):
            return cls()
        args = [formula_from_json(a) for a in doc["args"]]
        return cls(*args)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad {doc['op']} node: {exc}") from exc


# -- semantics ---------------------------------------------------------------


def evaluate(f: Formula, assignment: Mapping[str, bool]) -> bool:
    if isinstance(f, Var):
        try:
            return bool(assignment[f.name])
        except KeyError:
            raise UnboundVariable(f.name) from None
    if isinstance(f, ConstTrue):
        return True
    if isinstance(f, ConstFalse):
        return False
    if isinstance(f, Not):
        return not evaluate(f.operand, assignment)
    a = evaluate(f.left, assignment)
    b = evaluate(f.right, assignment)
    if isinstance(f, And):
        return a and b
    if isinstance(f, Or):
        return a or b
    if isinstance(f, Impl):
        return (not a) or b
    if isinstance(f, Biim):
        return a == b
    return a != b


def assignments(var_order) -> Iterator[dict]:
    """All assignments over ``var_order``; row i sets variable k to bit k of i."""
    n = len(var_order)
    for i in range(1 << n):
        yield {v: bool((i >> k) & 1) for k, v in enumerate(var_order)}


def truth_signature(f: Formula, var_order) -> str:
    var_order = list(var_order)
    if len(var_order) > MAX_SIGNATURE_VARS:
        raise ResourceError(f"truth tables are limited to {MAX_SIGNATURE_VARS} variables, got {len(var_order)}")
    missing = variables_of(f) - set(var_order)
    if missing:
        raise UnboundVariable(min(missing))
    return "".join("1" if evaluate(f, a) else "0" for a in assignments(var_order))


def truth_table_equivalent(f: Formula, g: Formula) -> bool:
    order = sorted(variables_of(f) | variables_of(g))
    return truth_signature(f, order) == truth_signature(g, order)


# -- Wang's algorithm --------------------------------------------------------


def wang_proves(premises, conclusions) -> bool:
    """Decide the sequent ``premises |- conclusions`` by backward rule search."""
    return _wang(tuple(premises), tuple(conclusions))


def _wang(left, right):
    for i, f in enumerate(left):
        if isinstance(f, Var):
            continue
        rest = left[:i] + left[i + 1 :]
        if isinstance(f, ConstFalse):
            return True
        if isinstance(f, ConstTrue):
            return _wang(rest, right)
        if isinstance(f, Not):
            return _wang(rest, right + (f.operand,))
        a, b = f.left, f.right
        if isinstance(f, And):
            return _wang(rest + (a, b), right)
        if isinstance(f, Or):
            return _wang(rest + (a,), right) and _wang(rest + (b,), right)
        if isinstance(f, Impl):
            return _wang(rest, right + (a,)) and _wang(rest + (b,), right)
        if isinstance(f, Biim):
            return _wang(rest + (a, b), right) and _wang(rest, right + (a, b))
        # Xor: exactly one side holds
        return _wang(rest + (a,), right + (b,)) and _wang(rest + (b,), right + (a,))
    for i, f in enumerate(right):
        if isinstance(f, Var):
            continue
        rest = right[:i] + right[i + 1 :]
        if isinstance(f, ConstTrue):
            return True
        if isinstance(f, ConstFalse):
            return _wang(left, rest)
        if isinstance(f, Not):
            return _wang(left + (f.operand,), rest)
        a, b = f.left, f.right
        if isinstance(f, And):
            return _wang(left, rest + (a,)) and _wang(left, rest + (b,))
        if isinstance(f, Or):
            return _wang(left, rest + (a, b))
        if isinstance(f, Impl):
            return _wang(left + (a,), rest + (b,))
        if isinstance(f, Biim):
            return _wang(left + (a,), rest + (b,)) and _wang(left + (b,), rest + (a,))
        return _wang(left, rest + (a, b)) and _wang(left + (a, b), rest)
    return not {v.name for v in left}.isdisjoint(v.name for v in right)


def equivalent(f: Formula, g: Formula) -> bool:
    return wang_proves([f], [g]) and wang_proves([g], [f])


# -- clauses -----------------------------------------------------------------


class Literal(NamedTuple):
    name: str
    positive: bool = True

    def __neg__(self):
        return Literal(self.name, not self.positive)

    def __str__(self):
        return self.name if self.positive else "~" + self.name


def clause(*lits) -> frozenset:
    return frozenset(lits)


def is_tautologous(c) -> bool:
    return any(-lit in c for lit in c)


def clause_variables(clauses) -> list:
    return sorted({lit.name for c in clauses for lit in c})


def satisfies(assignment, clauses) -> bool:
    return all(any(assignment.get(l.name, False) == l.positive for l in c) for c in clauses)


def _is_literal(f):
    return isinstance(f, Var) or (isinstance(f, Not) and isinstance(f.operand, Var))


def _disjuncts(f):
    if isinstance(f, Or):
        return _disjuncts(f.left) + _disjuncts(f.right)
    return [f]


def _conjuncts(f):
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def is_cnf(obj) -> bool:
    """Syntactic CNF check for a formula; clause lists are CNF by construction."""
    if isinstance(obj, Formula):
        return all(all(_is_literal(d) for d in _disjuncts(c)) for c in _conjuncts(obj))
    return all(isinstance(lit, Literal) for c in obj for lit in c)


def is_3cnf(obj) -> bool:
    if isinstance(obj, Formula):
        return is_cnf(obj) and all(len(_disjuncts(c)) <= 3 for c in _conjuncts(obj))
    return is_cnf(obj) and all(len(c) <= 3 for c in obj)


# -- Tseitin -----------------------------------------------------------------


def fold_constants(f: Formula) -> Formula:
    """Remove constants from ``f`` unless the whole formula is constant."""
    if isinstance(f, (Var, ConstTrue, ConstFalse)):
        return f
    if isinstance(f, Not):
        a = fold_constants(f.operand)
        if isinstance(a, ConstTrue):
            return ConstFalse()
        if isinstance(a, ConstFalse):
            return ConstTrue()
        return Not(a)
    a, b = fold_constants(f.left), fold_constants(f.right)
    consts = (ConstTrue, ConstFalse)
    if not isinstance(a, consts) and not isinstance(b, consts):
        return type(f)(a, b)
    if isinstance(a, consts) and isinstance(b, consts):
        value = evaluate(type(f)(a, b), {})
        return ConstTrue() if value else ConstFalse()
    if isinstance(f, Impl):
        if isinstance(a, ConstTrue):
            return b
        if isinstance(a, ConstFalse) or isinstance(b, ConstTrue):
            return ConstTrue()
        return Not(a)
    # the remaining connectives are commutative
    c, x = (a, b) if isinstance(a, consts) else (b, a)
    truth = isinstance(c, ConstTrue)
    if isinstance(f, And):
        return x if truth else ConstFalse()
    if isinstance(f, Or):
        return ConstTrue() if truth else x
    if isinstance(f, Xor):
        return Not(x) if truth else x
    return x if truth else Not(x)


def _definition(kind, t, a, b):
    nt, na, nb = -t, -a, -b
    if kind is And:
        return [(nt, a), (nt, b), (t, na, nb)]
    if kind is Or:
        return [(t, na), (t, nb), (nt, a, b)]
    if kind is Impl:
        return [(nt, na, b), (t, a), (t, nb)]
    if kind is Xor:
        return [(nt, a, b), (nt, na, nb), (t, na, b), (t, a, nb)]
    return [(nt, na, b), (nt, a, nb), (t, a, b), (t, na, nb)]


def tseitin_3cnf(f: Formula):
    """Equisatisfiable 3-CNF encoding of ``f``.

    Returns ``(clauses, root, fresh_map)``. Each distinct binary subformula
    gets one definition variable ``t1, t2, ...`` numbered in preorder;
    ``fresh_map`` maps those subformulas to their variable names. The last
    clause is the unit clause asserting ``root``.
    """
    f = fold_constants(f)
    if isinstance(f, (ConstTrue, ConstFalse)):
        root = Literal("t1")
        clauses = [] if isinstance(f, ConstTrue) else [clause(-root)]
        return clauses + [clause(root)], root, {f: "t1"}

    clauses = []
    fresh_map = {}

    def encode(g):
        if isinstance(g, Var):
            return Literal(g.name)
        if isinstance(g, Not):
            return -encode(g.operand)
        if g in fresh_map:
            return Literal(fresh_map[g])
        name = f"t{len(fresh_map) + 1}"
        fresh_map[g] = name
        t = Literal(name)
        a = encode(g.left)
        b = encode(g.right)
        shared = a.name == b.name
        for lits in _definition(type(g), t, a, b):
            c = frozenset(lits)
            if not (shared and is_tautologous(c)):
                clauses.append(c)
        return t

    root = encode(f)
    clauses.append(clause(root))
    return clauses, root, fresh_map


# -- SAT ---------------------------------------------------------------------


def dpll_satisfiable(clauses) -> Optional[dict]:
    """Satisfying assignment for a clause list, or None.

    Unit propagation plus branching on the alphabetically first unassigned
    variable, true before false. The assignment covers every variable
    mentioned; variables left free are set false.
    """
    names = clause_variables(clauses)
    number = {v: i + 1 for i, v in enumerate(names)}
    coded = [frozenset(number[l.name] if l.positive else -number[l.name] for l in c) for c in clauses]
    model = _dpll(coded, {})
    if model is None:
        return None
    return {v: model.get(number[v], False) for v in names}


def _simplify(clauses, lit):
    out = []
    for c in clauses:
        if lit in c:
            continue
        if -lit in c:
            c = c - {-lit}
            if not c:
                return None
        out.append(c)
    return out


def _dpll(clauses, assignment):
    # literals are signed integers; variable k is the k-th name in sorted order
    if any(not c for c in clauses):
        return None
    while True:
        unit = next((c for c in clauses if len(c) == 1), None)
        if unit is None:
            break
        (lit,) = unit
        assignment = {**assignment, abs(lit): lit > 0}
        clauses = _simplify(clauses, lit)
        if clauses is None:
            return None
    if not clauses:
        return assignment
    var = min(abs(lit) for c in clauses for lit in c)
    for lit in (var, -var):
        reduced = _simplify(clauses, lit)
        if reduced is None:
            continue
        found = _dpll(reduced, {**assignment, var: lit > 0})
        if found is not None:
            return found
    return None


def brute_force_satisfiable(clauses) -> Optional[dict]:
    names = clause_variables(clauses)
    for a in assignments(names):
        if satisfies(a, clauses):
            return a
    return None


def resolution_refutes(clauses, cap: int = 100_000) -> bool:
    """True iff resolution saturation derives the empty clause."""
    known = []
    seen = set()
    queue = []
    for c in clauses:
        c = frozenset(c)
        if not c:
            return True
        if not is_tautologous(c) and c not in seen:
            seen.add(c)
            queue.append(c)
    while queue:
        c = queue.pop(0)
        if any(d <= c for d in known):
            continue
        known.append(c)
        for d in list(known):
            for lit in c:
                if -lit not in d:
                    continue
                r = (c - {lit}) | (d - {-lit})
                if not r:
                    return True
                if is_tautologous(r) or r in seen:
                    continue
                if any(k <= r for k in known):
                    continue
                seen.add(r)
                queue.append(r)
                if len(seen) > cap:
                    raise ResourceError(f"resolution exceeded {cap} clauses")
    return False


# -- functional completeness -------------------------------------------------


def translate_to_impl_xor(f: Formula) -> Formula:
    """Equivalent formula using only implication and xor.

    Constants are expressed through the variable ``P``: ``P => P`` for true
    and ``P ^ P`` for false.
    """
    tr = translate_to_impl_xor
    false = Xor(Var("P"), Var("P"))
    if isinstance(f, Var):
        return f
    if isinstance(f, Impl):
        return Impl(tr(f.left), tr(f.right))
    if isinstance(f, Xor):
        return Xor(tr(f.left), tr(f.right))
    if isinstance(f, ConstFalse):
        return false
    if isinstance(f, ConstTrue):
        return Impl(Var("P"), Var("P"))
    if isinstance(f, Not):
        return Impl(tr(f.operand), false)
    if isinstance(f, And):
        return Impl(Impl(tr(f.left), Impl(tr(f.right), false)), false)
    if isinstance(f, Or):
        return Impl(Impl(tr(f.left), false), tr(f.right))
    if isinstance(f, Biim):
        return Impl(Xor(tr(f.left), tr(f.right)), false)
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class Correct:
    pass


@dataclass(frozen=True)
class WrongConnectives:
    offending: frozenset


@dataclass(frozen=True)
class NotEquivalent:
    witness: dict


def distinguishing_assignment(f: Formula, g: Formula) -> Optional[dict]:
    """An assignment on which ``f`` and ``g`` differ, found by SAT on ``f ^ g``."""
    clauses, _, _ = tseitin_3cnf(Xor(f, g))
    model = dpll_satisfiable(clauses)
    if model is None:
        return None
    return {v: model.get(v, False) for v in sorted(variables_of(f) | variables_of(g))}


def restricted_equivalent(candidate: Formula, reference: Formula, allowed):
    offending = connectives_of(candidate) - frozenset(allowed)
    if offending:
        return WrongConnectives(frozenset(offending))
    if equivalent(candidate, reference):
        return Correct()
    return NotEquivalent(distinguishing_assignment(candidate, reference))


# -- enumeration -------------------------------------------------------------


def enumerate_formulas(max_size: int, variables=("X", "Y"), constants: bool = False) -> list:
    """Every formula with at most ``max_size`` nodes over the given leaves."""
    leaves = [Var(v) for v in variables]
    if constants:
        leaves += [ConstTrue(), ConstFalse()]
    by_size = {1: leaves}
    for n in range(2, max_size + 1):
        level = [Not(f) for f in by_size[n - 1]]
        for k in range(1, n - 1):
            for cls in BINARY_TYPES:
                level.extend(cls(a, b) for a, b in itertools.product(by_size[k], by_size[n - 1 - k]))
        by_size[n] = level
    return [f for n in range(1, max_size + 1) for f in by_size[n]]
