"""Context-free grammars and deterministic pushdown automata.

A grammar rule is a pair ``(lhs, rhs)`` with ``rhs`` a tuple of symbol
names; terminals are single characters and variables are names disjoint
from the terminals. Grammar transforms invent variables ``X1, X2, ...`` in
first-use order, skipping names already taken.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from typing import Optional

from .automata import Defect, DefectKind, Dfa
from .errors import FormatError, IllFormedError, NotCnfError, ResourceError

EPSILON = ""
DEFAULT_STEP_LIMIT = 10_000
INTERSECTION_CAP = 1_000_000


@dataclass(frozen=True)
class Cfg:
    variables: frozenset
    terminals: str
    rules: tuple
    start: str

    @property
    def size(self):
        return len(self.rules)

    def rules_for(self, lhs):
        return [rhs for head, rhs in self.rules if head == lhs]

    def __str__(self):
        return dumps_cfg(self)


def make_cfg(variables, terminals, rules, start) -> Cfg:
    return Cfg(frozenset(variables), "".join(terminals), _dedup((lhs, tuple(rhs)) for lhs, rhs in rules), start)


def _dedup(items):
    return tuple(dict.fromkeys(items))


class _Fresh:
    def __init__(self, used):
        self.used = set(used)
        self.counter = 0

    def __call__(self):
        while True:
            self.counter += 1
            name = f"X{self.counter}"
            if name not in self.used:
                self.used.add(name)
                return name


# -- JSON --------------------------------------------------------------------


def cfg_to_json(g: Cfg) -> dict:
    return {
        "variables": sorted(g.variables),
        "terminals": g.terminals,
        "rules": [[lhs, list(rhs)] for lhs, rhs in g.rules],
        "start": g.start,
    }


def dumps_cfg(g: Cfg) -> str:
    return json.dumps(cfg_to_json(g), sort_keys=True, separators=(",", ":"))


def _check_cfg_shape(raw):
    if not isinstance(raw, dict):
        raise FormatError("a grammar document must be an object")
    for key in ("variables", "terminals", "rules", "start"):
        if key not in raw:
            raise FormatError(f"grammar document is missing {key!r}")
    if not isinstance(raw["variables"], list) or not all(isinstance(v, str) and v for v in raw["variables"]):
        raise FormatError("'variables' must be a list of non-empty names")
    if not isinstance(raw["terminals"], str):
        raise FormatError("'terminals' must be a string of symbols")
    if not isinstance(raw["start"], str):
        raise FormatError("'start' must be a variable name")
    if not isinstance(raw["rules"], list):
        raise FormatError("'rules' must be a list")
    for rule in raw["rules"]:
        ok = (
            isinstance(rule, list)
            and len(rule) == 2
            and isinstance(rule[0], str)
            and isinstance(rule[1], list)
            and all(isinstance(x, str) and x for x in rule[1])
        )
        if not ok:
            raise FormatError(f"rule {rule!r} is not of the form [lhs, [symbols...]]")


def validate_cfg(raw) -> list:
    if isinstance(raw, Cfg):
        raw = cfg_to_json(raw)
    _check_cfg_shape(raw)
    defects = []
    variables = raw["variables"]
    terminals = raw["terminals"]
    seen = set()
    for v in variables:
        if v in seen:
            defects.append(Defect(DefectKind.DUPLICATE_STATE, f"variable {v!r} is listed more than once"))
        seen.add(v)
    for a in sorted(set(variables) & set(terminals)):
        defects.append(Defect(DefectKind.DUPLICATE_STATE, f"{a!r} is declared both as a variable and a terminal"))
    if raw["start"] not in seen:
        defects.append(Defect(DefectKind.BAD_START, f"start variable {raw['start']!r} is not declared"))
    for lhs, rhs in raw["rules"]:
        if lhs not in seen:
            defects.append(
                Defect(DefectKind.STATE_OUTSIDE_STATE_SET, f"rule head {lhs!r} is not a declared variable")
            )
        for x in rhs:
            if x in seen or (len(x) == 1 and x in terminals):
                continue
            if len(x) == 1 and not x.isupper():
                defects.append(
                    Defect(
                        DefectKind.SYMBOL_OUTSIDE_ALPHABET,
                        f"rule {lhs} -> {' '.join(rhs)} uses {x!r}, which is not a declared terminal",
                    )
                )
            else:
                defects.append(
                    Defect(
                        DefectKind.STATE_OUTSIDE_STATE_SET,
                        f"rule {lhs} -> {' '.join(rhs)} uses {x!r}, which is not a declared variable",
                    )
                )
    return defects


def cfg_from_json(raw) -> Cfg:
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
    defects = validate_cfg(raw)
    if defects:
        raise IllFormedError(defects)
    return make_cfg(raw["variables"], raw["terminals"], raw["rules"], raw["start"])


# -- cleanup and Chomsky normal form -----------------------------------------


def generating_variables(g: Cfg) -> set:
    gen = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in g.rules:
            if lhs not in gen and all(x in gen or x not in g.variables for x in rhs):
                gen.add(lhs)
                changed = True
    return gen


def reachable_variables(g: Cfg) -> set:
    seen = {g.start}
    stack = [g.start]
    while stack:
        a = stack.pop()
        for rhs in g.rules_for(a):
            for x in rhs:
                if x in g.variables and x not in seen:
                    seen.add(x)
                    stack.append(x)
    return seen


def trim(g: Cfg) -> Cfg:
    """Drop non-generating and then unreachable variables and their rules."""
    gen = generating_variables(g)
    rules = [(l, r) for l, r in g.rules if l in gen and all(x in gen or x not in g.variables for x in r)]
    g = Cfg(frozenset(gen | {g.start}), g.terminals, tuple(rules), g.start)
    reach = reachable_variables(g)
    rules = [(l, r) for l, r in g.rules if l in reach]
    return Cfg(frozenset(reach), g.terminals, tuple(rules), g.start)


def nullable_variables(g: Cfg) -> set:
    null = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in g.rules:
            if lhs not in null and all(x in null for x in rhs):
                null.add(lhs)
                changed = True
    return null


def cfg_to_cnf(g: Cfg) -> Cfg:
    """Chomsky normal form with the same language, the empty string included."""
    fresh = _Fresh(set(g.variables) | set(g.terminals))
    rules = list(g.rules)
    start = g.start
    if any(start in rhs for _, rhs in rules):
        new_start = fresh()
        rules.insert(0, (new_start, (start,)))
        start = new_start
    variables = set(g.variables) | {start}

    null = nullable_variables(Cfg(frozenset(variables), g.terminals, tuple(rules), start))
    expanded = []
    for lhs, rhs in rules:
        options = [((x,), ()) if x in null else ((x,),) for x in rhs]
        for choice in itertools.product(*options):
            body = tuple(x for part in choice for x in part)
            if body or lhs == start:
                expanded.append((lhs, body))
    rules = list(dict.fromkeys(expanded))

    def is_unit(rhs):
        return len(rhs) == 1 and rhs[0] in variables

    heads = list(dict.fromkeys([start] + [lhs for lhs, _ in rules]))
    no_units = []
    for a in heads:
        closure = [a]
        for b in closure:
            for lhs, rhs in rules:
                if lhs == b and is_unit(rhs) and rhs[0] not in closure:
                    closure.append(rhs[0])
        for b in closure:
            for lhs, rhs in rules:
                if lhs == b and not is_unit(rhs) and (rhs or a == start):
                    no_units.append((a, rhs))
    g2 = trim(Cfg(frozenset(variables), g.terminals, _dedup(no_units), start))

    lifted = {}
    out = []
    for lhs, rhs in g2.rules:
        if len(rhs) >= 2:
            body = []
            for x in rhs:
                if x in g2.variables:
                    body.append(x)
                else:
                    if x not in lifted:
                        lifted[x] = fresh()
                    body.append(lifted[x])
            rhs = tuple(body)
        while len(rhs) > 2:
            tail = fresh()
            out.append((lhs, (rhs[0], tail)))
            lhs, rhs = tail, rhs[1:]
        out.append((lhs, rhs))
    out.extend((v, (a,)) for a, v in lifted.items())
    used = {start} | {lhs for lhs, _ in out} | {x for _, rhs in out for x in rhs if x not in g.terminals}
    return Cfg(frozenset(used), g.terminals, _dedup(out), start)


def is_cnf_grammar(g: Cfg) -> bool:
    on_rhs = {x for _, rhs in g.rules for x in rhs}
    for lhs, rhs in g.rules:
        if len(rhs) == 2 and all(x in g.variables for x in rhs):
            continue
        if len(rhs) == 1 and rhs[0] in g.terminals and rhs[0] not in g.variables:
            continue
        if not rhs and lhs == g.start and g.start not in on_rhs:
            continue
        return False
    return True


def cyk_trees(g: Cfg, w: str, cap: int = 2) -> int:
    """Number of parse trees of ``w`` in a CNF grammar, saturating at ``cap``."""
    if not is_cnf_grammar(g):
        raise NotCnfError("cyk_trees needs a grammar in Chomsky normal form")
    n = len(w)
    if n == 0:
        return min(cap, sum(1 for lhs, rhs in g.rules if lhs == g.start and not rhs))
    binary = [(lhs, rhs[0], rhs[1]) for lhs, rhs in g.rules if len(rhs) == 2]
    # table[i][l]: counts for the substring of length l + 1 starting at i
    table = [[{} for _ in range(n - i)] for i in range(n)]
    for i, a in enumerate(w):
        cell = table[i][0]
        for lhs, rhs in g.rules:
            if rhs == (a,):
                cell[lhs] = min(cap, cell.get(lhs, 0) + 1)
    for length in range(2, n + 1):
        for i in range(n - length + 1):
            cell = table[i][length - 1]
            for split in range(1, length):
                left = table[i][split - 1]
                right = table[i + split][length - split - 1]
                if not left or not right:
                    continue
                for lhs, b, c in binary:
                    x, y = left.get(b), right.get(c)
                    if x and y:
                        cell[lhs] = min(cap, cell.get(lhs, 0) + min(cap, x * y))
    return table[0][n - 1].get(g.start, 0)


def cfg_accepts(g: Cfg, w: str) -> bool:
    if not is_cnf_grammar(g):
        g = cfg_to_cnf(g)
    return cyk_trees(g, w, 1) > 0


# -- closure constructions ---------------------------------------------------


def _rename(g: Cfg, mapping) -> Cfg:
    def f(x):
        return mapping.get(x, x) if x in g.variables else x

    return Cfg(
        frozenset(map(f, g.variables)),
        g.terminals,
        tuple((f(lhs), tuple(map(f, rhs))) for lhs, rhs in g.rules),
        f(g.start),
    )


def _merge_terminals(a, b):
    return a + "".join(x for x in b if x not in a)


def cfg_closure_op(op: str, *grammars) -> Cfg:
    """Union, concatenation, star or reversal of context-free grammars."""
    if op == "reverse":
        (g,) = grammars
        return Cfg(g.variables, g.terminals, tuple((lhs, rhs[::-1]) for lhs, rhs in g.rules), g.start)
    if op == "star":
        (g,) = grammars
        fresh = _Fresh(set(g.variables) | set(g.terminals))
        s = fresh()
        rules = ((s, (g.start, s)), (s, ())) + g.rules
        return Cfg(g.variables | {s}, g.terminals, rules, s)
    if op not in ("union", "concat"):
        raise ValueError(f"unknown grammar operation {op!r}")
    g1, g2 = grammars
    terminals = _merge_terminals(g1.terminals, g2.terminals)
    fresh = _Fresh(set(g1.variables) | set(g2.variables) | set(terminals))
    clashes = sorted(v for v in g2.variables if v in g1.variables or v in g1.terminals)
    g2 = _rename(g2, {v: fresh() for v in clashes})
    s = fresh()
    if op == "union":
        head = ((s, (g1.start,)), (s, (g2.start,)))
    else:
        head = ((s, (g1.start, g2.start)),)
    return Cfg(g1.variables | g2.variables | {s}, terminals, head + g1.rules + g2.rules, s)


def _state_tag(q):
    return str(q) if q >= 0 else f"m{-q}"


def cfg_intersect_dfa(g: Cfg, d: Dfa, cap: int = INTERSECTION_CAP) -> Cfg:
    """Grammar for L(g) intersected with L(d) (triple construction over CNF)."""
    c = cfg_to_cnf(g)
    states = sorted(d.states)
    if len(states) ** 2 * len(c.variables) > cap:
        raise ResourceError(f"intersection would need more than {cap} variables")

    def name(p, a, q):
        return f"{a}_{_state_tag(p)}_{_state_tag(q)}"

    rules = []
    for lhs, rhs in c.rules:
        if len(rhs) == 2:
            b, e = rhs
            for p in states:
                for q in states:
                    for r in states:
                        rules.append((name(p, lhs, r), (name(p, b, q), name(q, e, r))))
        elif len(rhs) == 1:
            a = rhs[0]
            if a in d.alphabet:
                for p in states:
                    rules.append((name(p, lhs, d.transitions[p, a]), (a,)))
    triples = {lhs for lhs, _ in rules} | {x for _, rhs in rules for x in rhs if x not in c.terminals}
    fresh = _Fresh(triples | set(c.terminals))
    start = fresh()
    head = [(start, (name(d.start, c.start, f),)) for f in sorted(d.accepts)]
    if d.start in d.accepts and ((c.start, ()) in c.rules):
        head.append((start, ()))
    variables = triples | {start} | {x for _, rhs in head for x in rhs}
    return trim(Cfg(frozenset(variables), c.terminals, _dedup(head + rules), start))


def dfa_to_cfg(d: Dfa) -> Cfg:
    """Right-linear grammar with one variable ``Q<state>`` per DFA state."""

    def v(q):
        return f"Q{_state_tag(q)}"

    rules = []
    for q in sorted(d.states):
        for a in d.alphabet:
            rules.append((v(q), (a, v(d.transitions[q, a]))))
        if q in d.accepts:
            rules.append((v(q), ()))
    return Cfg(frozenset(v(q) for q in d.states), d.alphabet, tuple(rules), v(d.start))


# -- deterministic pushdown automata -----------------------------------------


@dataclass(frozen=True)
class DpdaRule:
    state: int
    read: str
    pop: object
    target: int
    push: tuple

    def __str__(self):
        read = self.read or "eps"
        pop = "eps" if self.pop == EPSILON else self.pop
        return f"({self.state}, {read}, {pop}) -> ({self.target}, {list(self.push)})"


@dataclass(frozen=True)
class Dpda:
    states: frozenset
    input_alphabet: str
    stack_alphabet: frozenset
    transitions: tuple
    start: int
    accepts: frozenset

    @property
    def size(self):
        return len(self.states)

    def __str__(self):
        return dumps_dpda(self)


class RunTag(str, enum.Enum):
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    STEP_LIMIT = "StepLimit"


@dataclass(frozen=True)
class RunOutcome:
    tag: RunTag
    steps_used: int


def _stack_key(x):
    return (isinstance(x, str), x)


def dpda_to_json(p: Dpda) -> dict:
    return {
        "kind": "dpda",
        "states": sorted(p.states),
        "input_alphabet": p.input_alphabet,
        "stack_alphabet": sorted(p.stack_alphabet, key=_stack_key),
        "transitions": [[[t.state, t.read, t.pop], [t.target, list(t.push)]] for t in p.transitions],
        "start": p.start,
        "accept": sorted(p.accepts),
    }


def dumps_dpda(p: Dpda) -> str:
    return json.dumps(dpda_to_json(p), sort_keys=True, separators=(",", ":"))


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_stack_symbol(x):
    return _is_int(x) or (isinstance(x, str) and x != EPSILON)


def _check_dpda_shape(raw):
    if not isinstance(raw, dict):
        raise FormatError("a DPDA document must be an object")
    for key in ("states", "input_alphabet", "stack_alphabet", "transitions", "start", "accept"):
        if key not in raw:
            raise FormatError(f"DPDA document is missing {key!r}")
    if not isinstance(raw["states"], list) or not all(_is_int(q) for q in raw["states"]):
        raise FormatError("'states' must be a list of integers")
    if not isinstance(raw["input_alphabet"], str):
        raise FormatError("'input_alphabet' must be a string")
    if not isinstance(raw["stack_alphabet"], list) or not all(_is_stack_symbol(x) for x in raw["stack_alphabet"]):
        raise FormatError("'stack_alphabet' must be a list of integers or non-empty strings")
    if not _is_int(raw["start"]):
        raise FormatError("'start' must be an integer")
    if not isinstance(raw["accept"], list) or not all(_is_int(q) for q in raw["accept"]):
        raise FormatError("'accept' must be a list of integers")
    if not isinstance(raw["transitions"], list):
        raise FormatError("'transitions' must be a list")
    for t in raw["transitions"]:
        ok = (
            isinstance(t, list)
            and len(t) == 2
            and isinstance(t[0], list)
            and len(t[0]) == 3
            and isinstance(t[1], list)
            and len(t[1]) == 2
            and _is_int(t[0][0])
            and isinstance(t[0][1], str)
            and len(t[0][1]) <= 1
            and (_is_stack_symbol(t[0][2]) or t[0][2] == EPSILON)
            and _is_int(t[1][0])
            and isinstance(t[1][1], list)
            and all(_is_stack_symbol(x) for x in t[1][1])
        )
        if not ok:
            raise FormatError(f"transition {t!r} is not of the form [[q, input, pop], [q2, [push...]]]")


def _rules_from_json(raw):
    return tuple(DpdaRule(q, a, pop, r, tuple(push)) for (q, a, pop), (r, push) in raw["transitions"])


def _conflict(x: DpdaRule, y: DpdaRule) -> bool:
    if x.state != y.state:
        return False
    reads = x.read == y.read or x.read == EPSILON or y.read == EPSILON
    pops = x.pop == y.pop or x.pop == EPSILON or y.pop == EPSILON
    return reads and pops


def validate_dpda(raw) -> list:
    if isinstance(raw, Dpda):
        raw = dpda_to_json(raw)
    _check_dpda_shape(raw)
    defects = []
    states = set()
    for q in raw["states"]:
        if q in states:
            defects.append(Defect(DefectKind.DUPLICATE_STATE, f"state {q} is listed more than once"))
        states.add(q)
    stack = set(raw["stack_alphabet"])
    alphabet = raw["input_alphabet"]
    if raw["start"] not in states:
        defects.append(Defect(DefectKind.BAD_START, f"start state {raw['start']} is not in the state set"))
    for q in raw["accept"]:
        if q not in states:
            defects.append(Defect(DefectKind.BAD_ACCEPT, f"accept state {q} is not in the state set"))
    rules = _rules_from_json(raw)
    for t in rules:
        for s in (t.state, t.target):
            if s not in states:
                defects.append(
                    Defect(DefectKind.STATE_OUTSIDE_STATE_SET, f"transition {t} uses state {s}, outside the state set")
                )
        if t.read != EPSILON and t.read not in alphabet:
            defects.append(
                Defect(
                    DefectKind.SYMBOL_OUTSIDE_ALPHABET,
                    f"transition {t} reads {t.read!r}, outside the input alphabet {alphabet!r}",
                )
            )
        for x in ([] if t.pop == EPSILON else [t.pop]) + list(t.push):
            if x not in stack:
                defects.append(
                    Defect(
                        DefectKind.SYMBOL_OUTSIDE_ALPHABET,
                        f"transition {t} uses stack symbol {x!r}, outside the stack alphabet",
                    )
                )
    for x, y in itertools.combinations(rules, 2):
        if _conflict(x, y):
            defects.append(
                Defect(DefectKind.NOT_DETERMINISTIC, f"transitions {x} and {y} can both apply in the same configuration")
            )
    return defects


def dpda_from_json(raw) -> Dpda:
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
    defects = validate_dpda(raw)
    if defects:
        raise IllFormedError(defects)
    return Dpda(
        frozenset(raw["states"]),
        raw["input_alphabet"],
        frozenset(raw["stack_alphabet"]),
        _rules_from_json(raw),
        raw["start"],
        frozenset(raw["accept"]),
    )


def dpda_run(p: Dpda, w: str, step_limit: int = DEFAULT_STEP_LIMIT) -> RunOutcome:
    """Run ``p`` on ``w``; accept by final state once the input is consumed.

    A push sequence ``[x1, ..., xk]`` leaves ``x1`` on top. A configuration
    with no applicable move rejects.
    """
    by_state = {}
    for t in p.transitions:
        by_state.setdefault(t.state, []).append(t)
    state, pos, stack, steps = p.start, 0, [], 0
    while True:
        if pos == len(w) and state in p.accepts:
            return RunOutcome(RunTag.ACCEPTED, steps)
        nxt = w[pos] if pos < len(w) else None
        top = stack[-1] if stack else None
        move: Optional[DpdaRule] = None
        for t in by_state.get(state, ()):
            if t.read != EPSILON and t.read != nxt:
                continue
            if t.pop != EPSILON and (not stack or t.pop != top):
                continue
            move = t
            break
        if move is None:
            return RunOutcome(RunTag.REJECTED, steps)
        if steps >= step_limit:
            return RunOutcome(RunTag.STEP_LIMIT, steps)
        steps += 1
        if move.pop != EPSILON:
            stack.pop()
        stack.extend(reversed(move.push))
        if move.read != EPSILON:
            pos += 1
        state = move.target


def dfa_to_dpda3(d: Dfa) -> Dpda:
    """Three-state DPDA for L(d); the stack top holds the current DFA state.

    State 0 reads the first symbol; afterwards the DPDA sits in 2 when the
    simulated DFA state accepts and in 1 when it does not.
    """

    def readiness(q):
        return 2 if q in d.accepts else 1

    moves = sorted(d.transitions.items(), key=lambda kv: (kv[0][0], d.alphabet.index(kv[0][1])))
    rules = [DpdaRule(readiness(b), a, b, readiness(b2), (b2,)) for (b, a), b2 in moves]
    rules += [DpdaRule(0, a, EPSILON, readiness(b2), (b2,)) for (b, a), b2 in moves if b == d.start]
    accepts = frozenset([0, 2]) if d.start in d.accepts else frozenset([2])
    return Dpda(frozenset([0, 1, 2]), d.alphabet, frozenset(d.states), tuple(rules), 0, accepts)
