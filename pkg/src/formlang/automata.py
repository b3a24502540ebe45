"""Finite automata: representation, validation and the standard constructions.

States are integers and symbols single characters. A DFA stores its
transition function as a dict keyed by ``(state, symbol)``; an NFA stores a
set of ``(state, label, state)`` triples where the label ``""`` is an
epsilon move. NFAs have a set of start states.

Constructions number their output states 0, 1, 2, ... in breadth-first
discovery order, exploring symbols in alphabet order, so equal inputs give
identical outputs.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .errors import AlphabetMismatch, FormatError, IllFormedError, ResourceError

EPSILON = ""
MAX_SUBSETS = 1 << 20


class DefectKind(str, enum.Enum):
    NOT_DETERMINISTIC = "NotDeterministic"
    MISSING_TRANSITION = "MissingTransition"
    SYMBOL_OUTSIDE_ALPHABET = "SymbolOutsideAlphabet"
    STATE_OUTSIDE_STATE_SET = "StateOutsideStateSet"
    BAD_START = "BadStart"
    BAD_ACCEPT = "BadAccept"
    DUPLICATE_STATE = "DuplicateState"


@dataclass(frozen=True)
class Defect:
    category: DefectKind
    detail: str

    def __post_init__(self):
        if not self.detail:
            raise ValueError("defect detail must be non-empty")

    def __str__(self):
        return f"{self.category.value}: {self.detail}"


@dataclass(frozen=True, eq=True)
class Dfa:
    states: frozenset
    alphabet: str
    transitions: dict = field(hash=False)
    start: int
    accepts: frozenset

    @property
    def size(self):
        return len(self.states)

    def step(self, state, symbol):
        return self.transitions[state, symbol]

    def __str__(self):
        return dumps_automaton(self)


@dataclass(frozen=True, eq=True)
class Nfa:
    states: frozenset
    alphabet: str
    transitions: frozenset
    starts: frozenset
    accepts: frozenset

    @property
    def size(self):
        return len(self.states)

    def __str__(self):
        return dumps_automaton(self)


class Side(str, enum.Enum):
    ONLY_FIRST = "OnlyFirst"
    ONLY_SECOND = "OnlySecond"


@dataclass(frozen=True)
class Counterexample:
    string: str
    side: Side


def make_dfa(states, alphabet, transitions, start, accepts) -> Dfa:
    """Build a DFA from list-like parts, as in ``([0,1], "ab", [((0,'a'),0), ...], 0, [1])``."""
    if not isinstance(transitions, dict):
        transitions = {(q, a): r for (q, a), r in transitions}
    return Dfa(frozenset(states), "".join(alphabet), dict(transitions), start, frozenset(accepts))


def make_nfa(states, alphabet, transitions, starts, accepts) -> Nfa:
    return Nfa(frozenset(states), "".join(alphabet), frozenset(transitions), frozenset(starts), frozenset(accepts))


# -- JSON documents ----------------------------------------------------------


def _symbol_key(alphabet):
    order = {a: i for i, a in enumerate(alphabet)}
    return lambda a: order.get(a, -1 if a == EPSILON else len(order))


def automaton_to_json(m) -> dict:
    key = _symbol_key(m.alphabet)
    if isinstance(m, Dfa):
        rows = sorted(((q, a, r) for (q, a), r in m.transitions.items()), key=lambda t: (t[0], key(t[1]), t[2]))
        start = m.start
        kind = "dfa"
    else:
        rows = sorted(m.transitions, key=lambda t: (t[0], key(t[1]), t[2]))
        start = sorted(m.starts)
        kind = "nfa"
    return {
        "kind": kind,
        "states": sorted(m.states),
        "alphabet": m.alphabet,
        "transitions": [list(t) for t in rows],
        "start": start,
        "accept": sorted(m.accepts),
    }


def dumps_automaton(m) -> str:
    return json.dumps(automaton_to_json(m), sort_keys=True, separators=(",", ":"))


def _check_shape(raw, kind):
    if not isinstance(raw, dict):
        raise FormatError(f"an automaton document must be an object, got {type(raw).__name__}")
    for key in ("states", "alphabet", "transitions", "start", "accept"):
        if key not in raw:
            raise FormatError(f"automaton document is missing {key!r}")
    if not isinstance(raw["states"], list) or not all(_is_int(q) for q in raw["states"]):
        raise FormatError("'states' must be a list of integers")
    if not isinstance(raw["alphabet"], str):
        raise FormatError("'alphabet' must be a string of symbols")
    if not isinstance(raw["accept"], list) or not all(_is_int(q) for q in raw["accept"]):
        raise FormatError("'accept' must be a list of integers")
    start = raw["start"]
    if not (_is_int(start) or (isinstance(start, list) and all(_is_int(q) for q in start))):
        raise FormatError("'start' must be an integer or a list of integers")
    if not isinstance(raw["transitions"], list):
        raise FormatError("'transitions' must be a list")
    for t in raw["transitions"]:
        if not (isinstance(t, list) and len(t) == 3 and _is_int(t[0]) and _is_int(t[2]) and isinstance(t[1], str)):
            raise FormatError(f"transition {t!r} is not of the form [from, symbol, to]")
        if len(t[1]) > 1:
            raise FormatError(f"transition {t!r} has a multi-character label")


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def validate_automaton(raw, kind: Optional[str] = None) -> list:
    """Every invariant violation in an automaton description.

    ``raw`` is a JSON-shaped dict or a ``Dfa``/``Nfa``. Structural problems
    (wrong types, missing keys) raise ``FormatError``; everything else is
    reported as a list of defects, empty when the machine is well-formed.
    """
    if isinstance(raw, (Dfa, Nfa)):
        kind = kind or ("dfa" if isinstance(raw, Dfa) else "nfa")
        raw = automaton_to_json(raw)
    kind = kind or (raw.get("kind") if isinstance(raw, dict) else None)
    if kind not in ("dfa", "nfa"):
        raise FormatError(f"unknown automaton kind {kind!r}")
    _check_shape(raw, kind)
    defects = []
    states = raw["states"]
    state_set = set(states)
    alphabet = raw["alphabet"]

    seen = set()
    for q in states:
        if q in seen:
            defects.append(Defect(DefectKind.DUPLICATE_STATE, f"state {q} is listed more than once"))
        seen.add(q)
    if len(set(alphabet)) != len(alphabet):
        dup = sorted({a for a in alphabet if alphabet.count(a) > 1})
        defects.append(Defect(DefectKind.SYMBOL_OUTSIDE_ALPHABET, f"alphabet repeats symbol(s) {''.join(dup)!r}"))

    starts = raw["start"]
    if kind == "dfa":
        if not _is_int(starts):
            defects.append(Defect(DefectKind.BAD_START, "a DFA must have exactly one start state"))
        elif starts not in state_set:
            defects.append(Defect(DefectKind.BAD_START, f"start state {starts} is not in the state set"))
    else:
        for q in [starts] if _is_int(starts) else starts:
            if q not in state_set:
                defects.append(Defect(DefectKind.BAD_START, f"start state {q} is not in the state set"))
    for q in raw["accept"]:
        if q not in state_set:
            defects.append(Defect(DefectKind.BAD_ACCEPT, f"accept state {q} is not in the state set"))

    targets = {}
    for q, a, r in raw["transitions"]:
        for s in (q, r):
            if s not in state_set:
                defects.append(
                    Defect(
                        DefectKind.STATE_OUTSIDE_STATE_SET,
                        f"transition ({q}, {a!r}) -> {r} uses state {s}, which is outside the state set",
                    )
                )
        if a == EPSILON:
            if kind == "dfa":
                defects.append(
                    Defect(DefectKind.NOT_DETERMINISTIC, f"a DFA cannot have the epsilon transition {q} -> {r}")
                )
            continue
        if a not in alphabet:
            defects.append(
                Defect(
                    DefectKind.SYMBOL_OUTSIDE_ALPHABET,
                    f"transition ({q}, {a!r}) -> {r} uses symbol {a!r}, which is outside the alphabet {alphabet!r}",
                )
            )
        targets.setdefault((q, a), []).append(r)

    if kind == "dfa":
        for (q, a), rs in targets.items():
            distinct = sorted(set(rs))
            if len(distinct) > 1:
                defects.append(
                    Defect(
                        DefectKind.NOT_DETERMINISTIC,
                        f"state {q} has {len(distinct)} transitions on {a!r} (to {', '.join(map(str, distinct))})",
                    )
                )
        for q in sorted(state_set):
            for a in alphabet:
                if (q, a) not in targets:
                    defects.append(Defect(DefectKind.MISSING_TRANSITION, f"state {q} has no transition on {a!r}"))
    return defects


def automaton_from_json(raw, kind: Optional[str] = None):
    """Parse and validate; raises ``IllFormedError`` listing every defect."""
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
    defects = validate_automaton(raw, kind)
    if defects:
        raise IllFormedError(defects)
    kind = kind or raw.get("kind")
    if kind == "dfa":
        return make_dfa(
            raw["states"], raw["alphabet"], {(q, a): r for q, a, r in raw["transitions"]}, raw["start"], raw["accept"]
        )
    starts = raw["start"]
    return make_nfa(
        raw["states"],
        raw["alphabet"],
        (tuple(t) for t in raw["transitions"]),
        [starts] if _is_int(starts) else starts,
        raw["accept"],
    )


# -- running -----------------------------------------------------------------


def dfa_accepts(d: Dfa, w: str) -> bool:
    q = d.start
    for a in w:
        if a not in d.alphabet:
            raise ValueError(f"symbol {a!r} is outside the DFA alphabet {d.alphabet!r}")
        q = d.transitions[q, a]
    return q in d.accepts


def _moves(n: Nfa):
    table = {}
    for q, a, r in n.transitions:
        table.setdefault((q, a), set()).add(r)
    return table


def _closure(table, states):
    out = set(states)
    stack = list(states)
    while stack:
        q = stack.pop()
        for r in table.get((q, EPSILON), ()):
            if r not in out:
                out.add(r)
                stack.append(r)
    return frozenset(out)


def nfa_accepts(n: Nfa, w: str) -> bool:
    table = _moves(n)
    current = _closure(table, n.starts)
    for a in w:
        if a not in n.alphabet:
            return False
        step = set()
        for q in current:
            step |= table.get((q, a), set())
        current = _closure(table, step)
        if not current:
            return False
    return not current.isdisjoint(n.accepts)


def accepts(m, w: str) -> bool:
    return dfa_accepts(m, w) if isinstance(m, Dfa) else nfa_accepts(m, w)


# -- conversions -------------------------------------------------------------


def dfa_to_nfa(d: Dfa) -> Nfa:
    return Nfa(
        d.states,
        d.alphabet,
        frozenset((q, a, r) for (q, a), r in d.transitions.items()),
        frozenset([d.start]),
        d.accepts,
    )


def as_nfa(m) -> Nfa:
    return dfa_to_nfa(m) if isinstance(m, Dfa) else m


def determinize(n, cap: int = MAX_SUBSETS) -> Dfa:
    """Subset construction over the reachable epsilon-closed subsets."""
    n = as_nfa(n)
    table = _moves(n)
    start = _closure(table, n.starts)
    index = {start: 0}
    order = [start]
    transitions = {}
    queue = deque([start])
    while queue:
        subset = queue.popleft()
        i = index[subset]
        for a in n.alphabet:
            step = set()
            for q in subset:
                step |= table.get((q, a), set())
            target = _closure(table, step)
            if target not in index:
                if len(index) >= cap:
                    raise ResourceError(f"determinisation exceeded {cap} subset states")
                index[target] = len(order)
                order.append(target)
                queue.append(target)
            transitions[i, a] = index[target]
    accepting = {i for i, s in enumerate(order) if not s.isdisjoint(n.accepts)}
    return Dfa(frozenset(range(len(order))), n.alphabet, transitions, 0, frozenset(accepting))


def reverse(n) -> Nfa:
    n = as_nfa(n)
    return Nfa(n.states, n.alphabet, frozenset((r, a, q) for q, a, r in n.transitions), n.accepts, n.starts)


def renumber(d: Dfa) -> Dfa:
    """Canonical breadth-first renumbering; drops unreachable states."""
    index = {d.start: 0}
    order = [d.start]
    queue = deque([d.start])
    while queue:
        q = queue.popleft()
        for a in d.alphabet:
            r = d.transitions[q, a]
            if r not in index:
                index[r] = len(order)
                order.append(r)
                queue.append(r)
    transitions = {(index[q], a): index[d.transitions[q, a]] for q in order for a in d.alphabet}
    return Dfa(
        frozenset(range(len(order))),
        d.alphabet,
        transitions,
        0,
        frozenset(index[q] for q in order if q in d.accepts),
    )


def brzozowski_minimize(d) -> Dfa:
    """Minimal DFA by double reversal: det(rev(det(rev(d))))."""
    return determinize(reverse(determinize(reverse(d))))


def reachable_states(d: Dfa) -> frozenset:
    return frozenset(renumber_map(d))


def renumber_map(d: Dfa) -> dict:
    index = {d.start: 0}
    queue = deque([d.start])
    while queue:
        q = queue.popleft()
        for a in d.alphabet:
            r = d.transitions[q, a]
            if r not in index:
                index[r] = len(index)
                queue.append(r)
    return index


def distinguishable_pairs(d: Dfa) -> set:
    """Pairs ``(p, q)`` with ``p < q`` separated by some string (table filling)."""
    states = sorted(d.states)
    marked = {(p, q) for i, p in enumerate(states) for q in states[i + 1 :] if (p in d.accepts) != (q in d.accepts)}
    changed = True
    while changed:
        changed = False
        for i, p in enumerate(states):
            for q in states[i + 1 :]:
                if (p, q) in marked:
                    continue
                for a in d.alphabet:
                    x, y = d.transitions[p, a], d.transitions[q, a]
                    if x != y and (min(x, y), max(x, y)) in marked:
                        marked.add((p, q))
                        changed = True
                        break
    return marked


def is_minimal(d: Dfa) -> bool:
    n = len(d.states)
    return reachable_states(d) == d.states and len(distinguishable_pairs(d)) == n * (n - 1) // 2


# -- boolean operations ------------------------------------------------------

_COMBINE = {
    "and": lambda x, y: x and y,
    "or": lambda x, y: x or y,
    "xor": lambda x, y: x != y,
    "diff": lambda x, y: x and not y,
}


def _same_alphabet(x, y):
    if set(x.alphabet) != set(y.alphabet):
        raise AlphabetMismatch(f"alphabets differ: {x.alphabet!r} vs {y.alphabet!r}")


def dfa_product(d1: Dfa, d2: Dfa, combine: str) -> Dfa:
    """Product automaton over reachable state pairs."""
    try:
        op = _COMBINE[combine]
    except KeyError:
        raise ValueError(f"combine must be one of {sorted(_COMBINE)}, got {combine!r}") from None
    _same_alphabet(d1, d2)
    start = (d1.start, d2.start)
    index = {start: 0}
    order = [start]
    transitions = {}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        p, q = pair
        for a in d1.alphabet:
            target = (d1.transitions[p, a], d2.transitions[q, a])
            if target not in index:
                index[target] = len(order)
                order.append(target)
                queue.append(target)
            transitions[index[pair], a] = index[target]
    accepting = {i for i, (p, q) in enumerate(order) if op(p in d1.accepts, q in d2.accepts)}
    return Dfa(frozenset(range(len(order))), d1.alphabet, transitions, 0, frozenset(accepting))


def dfa_complement(d: Dfa) -> Dfa:
    return Dfa(d.states, d.alphabet, dict(d.transitions), d.start, d.states - d.accepts)


def iter_language(d: Dfa, max_len: Optional[int] = None):
    """Accepted strings in length-then-alphabet order.

    Stops after ``max_len`` when given; otherwise runs until the language
    is exhausted, which for an infinite language is never.
    """
    states = sorted(d.states)
    # live[k]: states from which some accepted string of length exactly k exists
    live = [frozenset(d.accepts)]
    reach = renumber_map(d)
    useful = set(reach) & _coreachable(d)
    finite_bound = None if _has_useful_cycle(d, useful) else len(d.states)

    def extend_live(k):
        while len(live) <= k:
            prev = live[-1]
            live.append(frozenset(q for q in states if any(d.transitions[q, a] in prev for a in d.alphabet)))

    length = 0
    while True:
        if max_len is not None and length > max_len:
            return
        if finite_bound is not None and length > finite_bound:
            return
        if not useful:
            return
        extend_live(length)
        if d.start in live[length]:
            stack = [(d.start, "")]
            while stack:
                q, prefix = stack.pop()
                remaining = length - len(prefix)
                if remaining == 0:
                    yield prefix
                    continue
                for a in reversed(d.alphabet):
                    r = d.transitions[q, a]
                    if r in live[remaining - 1]:
                        stack.append((r, prefix + a))
        length += 1


def _coreachable(d):
    """States from which an accept state can be reached."""
    back = {}
    for (q, _), r in d.transitions.items():
        back.setdefault(r, set()).add(q)
    seen = set(d.accepts)
    stack = list(seen)
    while stack:
        r = stack.pop()
        for q in back.get(r, ()):
            if q not in seen:
                seen.add(q)
                stack.append(q)
    return seen


def _has_useful_cycle(d, useful):
    # iterative three-colour DFS restricted to useful states
    colour = {}
    for root in sorted(useful):
        if root in colour:
            continue
        colour[root] = 1
        stack = [(root, iter(d.alphabet))]
        while stack:
            q, symbols = stack[-1]
            a = next(symbols, None)
            if a is None:
                colour[q] = 2
                stack.pop()
                continue
            r = d.transitions[q, a]
            if r not in useful:
                continue
            if colour.get(r) == 1:
                return True
            if r not in colour:
                colour[r] = 1
                stack.append((r, iter(d.alphabet)))
    return False


def enumerate_language(d: Dfa, max_len: int) -> list:
    return list(iter_language(d, max_len))


def is_empty(d: Dfa) -> bool:
    return renumber_map(d).keys().isdisjoint(d.accepts)


def equivalence_counterexamples(d1: Dfa, d2: Dfa, limit: int = 5):
    """``(equivalent, counterexamples)`` via the symmetric difference automaton.

    Counterexamples are the first ``limit`` strings of the symmetric
    difference in length-then-alphabet order.
    """
    diff = dfa_product(d1, d2, "xor")
    if is_empty(diff):
        return True, []
    found = []
    for w in iter_language(diff):
        if len(found) >= limit:
            break
        side = Side.ONLY_FIRST if dfa_accepts(d1, w) else Side.ONLY_SECOND
        found.append(Counterexample(w, side))
    return False, found


def language_equal(m1, m2) -> bool:
    return equivalence_counterexamples(to_dfa(m1), to_dfa(m2), 0)[0]


def to_dfa(m) -> Dfa:
    return m if isinstance(m, Dfa) else determinize(m)


# -- regular operations and the closure constructions ------------------------


def shift_amount(states) -> int:
    """Offset that moves a second copy clear of ``states``."""
    return 1 + max((abs(q) for q in states), default=-1)


def rename_nfa(n: Nfa, f) -> Nfa:
    return Nfa(
        frozenset(map(f, n.states)),
        n.alphabet,
        frozenset((f(q), a, f(r)) for q, a, r in n.transitions),
        frozenset(map(f, n.starts)),
        frozenset(map(f, n.accepts)),
    )


def nfa_regular_op(op: str, *operands) -> Nfa:
    """Union, concatenation or star of epsilon-NFAs."""
    ms = [as_nfa(m) for m in operands]
    if op == "star":
        if len(ms) != 1:
            raise ValueError("star takes one operand")
        (n,) = ms
        hub = shift_amount(n.states)
        moves = set(n.transitions)
        moves |= {(hub, EPSILON, q) for q in n.starts}
        moves |= {(q, EPSILON, hub) for q in n.accepts}
        return Nfa(n.states | {hub}, n.alphabet, frozenset(moves), frozenset([hub]), frozenset([hub]))
    if op not in ("union", "concat"):
        raise ValueError(f"unknown regular operation {op!r}")
    if len(ms) != 2:
        raise ValueError(f"{op} takes two operands")
    a, b = ms
    _same_alphabet(a, b)
    offset = shift_amount(a.states)
    b = rename_nfa(b, lambda q: q + offset)
    moves = a.transitions | b.transitions
    if op == "union":
        return Nfa(a.states | b.states, a.alphabet, moves, a.starts | b.starts, a.accepts | b.accepts)
    links = frozenset((q, EPSILON, r) for q in a.accepts for r in b.starts)
    return Nfa(a.states | b.states, a.alphabet, moves | links, a.starts, b.accepts)


def skip_construction(d: Dfa) -> Nfa:
    """NFA for the strings of L(d) with exactly one symbol removed.

    Two copies of ``d``: an epsilon move from state q in the first copy to
    the second-copy image of r stands in for each skipped transition q -x-> r.
    """
    offset = shift_amount(d.states)
    moves = [(q, a, r) for (q, a), r in d.transitions.items()]
    layer2 = [(q + offset, a, r + offset) for q, a, r in moves]
    skips = [(q, EPSILON, r + offset) for q, _, r in moves]
    return Nfa(
        d.states | {q + offset for q in d.states},
        d.alphabet,
        frozenset(moves + layer2 + skips),
        frozenset([d.start]),
        frozenset(q + offset for q in d.accepts),
    )


def multiples_dfa(d: int) -> Dfa:
    """DFA over ``a`` accepting the strings whose length is a multiple of d."""
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    return Dfa(frozenset(range(d)), "a", {(i, "a"): (i + 1) % d for i in range(d)}, 0, frozenset([0]))
