"""Regular expressions, Brzozowski derivatives and union-free decomposition.

Text syntax: ``|`` union, juxtaposition concatenation, postfix ``*``, with
``_`` for the empty string and ``#`` for the empty set. Star binds tightest,
then concatenation, then union; both binary operators associate left. Any
other non-whitespace character is a literal symbol.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from .automata import Dfa
from .errors import AlphabetMismatch, ParseError, ResourceError

METACHARACTERS = "|*()_#"
MAX_DERIVATIVE_STATES = 4096


class Regex:
    __slots__ = ()

    @property
    def size(self) -> int:
        return sum(1 for _ in nodes(self))

    def __str__(self):
        return render_regex(self, minimal=True)


@dataclass(frozen=True)
class Symbol(Regex):
    char: str

    def __post_init__(self):
        if len(self.char) != 1 or self.char.isspace() or self.char in METACHARACTERS:
            raise ValueError(f"not a regex symbol: {self.char!r}")


@dataclass(frozen=True)
class EmptyStr(Regex):
    pass


@dataclass(frozen=True)
class EmptySet(Regex):
    pass


@dataclass(frozen=True)
class Concat(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Union(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Star(Regex):
    inner: Regex


def nodes(r: Regex) -> Iterator[Regex]:
    stack = [r]
    while stack:
        x = stack.pop()
        yield x
        if isinstance(x, (Concat, Union)):
            stack.append(x.right)
            stack.append(x.left)
        elif isinstance(x, Star):
            stack.append(x.inner)


def symbols_of(r: Regex) -> frozenset:
    return frozenset(x.char for x in nodes(r) if isinstance(x, Symbol))


def is_union_free(r: Regex) -> bool:
    return not any(isinstance(x, Union) for x in nodes(r))


# -- text syntax -------------------------------------------------------------


class _RegexParser:
    def __init__(self, text):
        self.items = [(c, i) for i, c in enumerate(text) if not c.isspace()]
        self.items.append((None, len(text)))
        self.pos = 0

    def peek(self):
        return self.items[self.pos]

    def union(self):
        r = self.concat()
        while self.peek()[0] == "|":
            self.pos += 1
            r = Union(r, self.concat())
        return r

    def concat(self):
        r = self.starred()
        while self.peek()[0] is not None and self.peek()[0] not in "|)":
            r = Concat(r, self.starred())
        return r

    def starred(self):
        r = self.atom()
        while self.peek()[0] == "*":
            self.pos += 1
            r = Star(r)
        return r

    def atom(self):
        c, offset = self.peek()
        if c is None or c in "|)*":
            what = "end of input" if c is None else repr(c)
            raise ParseError(f"unexpected {what}", offset, "a symbol, '_', '#' or '('")
        self.pos += 1
        if c == "(":
            r = self.union()
            close, where = self.peek()
            if close != ")":
                raise ParseError("unbalanced parenthesis", where, "')'")
            self.pos += 1
            return r
        if c == "_":
            return EmptyStr()
        if c == "#":
            return EmptySet()
        return Symbol(c)


def parse_regex(text: str) -> Regex:
    parser = _RegexParser(text)
    r = parser.union()
    c, offset = parser.peek()
    if c is not None:
        raise ParseError(f"unexpected {c!r}", offset, "end of input")
    return r


def render_regex(r: Regex, minimal: bool = False) -> str:
    """Printer inverse to ``parse_regex``.

    The default output parenthesises every binary node; ``minimal=True``
    drops the parentheses the grammar does not need.
    """
    if not minimal:
        return _render_full(r)
    return _render_min(r, 0)


def _render_full(r):
    if isinstance(r, Symbol):
        return r.char
    if isinstance(r, EmptyStr):
        return "_"
    if isinstance(r, EmptySet):
        return "#"
    if isinstance(r, Star):
        return _render_full(r.inner) + "*"
    if isinstance(r, Concat):
        return f"({_render_full(r.left)}{_render_full(r.right)})"
    return f"({_render_full(r.left)}|{_render_full(r.right)})"


def _render_min(r, context):
    # context: 0 anywhere, 1 operand of concatenation, 2 right operand of
    # concatenation, 3 operand of star; the right operand of a union is 1
    if isinstance(r, Symbol):
        return r.char
    if isinstance(r, EmptyStr):
        return "_"
    if isinstance(r, EmptySet):
        return "#"
    if isinstance(r, Star):
        return _render_min(r.inner, 3) + "*"
    if isinstance(r, Concat):
        text = _render_min(r.left, 1) + _render_min(r.right, 2)
        return f"({text})" if context >= 2 else text
    text = _render_min(r.left, 0) + "|" + _render_min(r.right, 1)
    return f"({text})" if context >= 1 else text


# -- derivatives -------------------------------------------------------------


def _key(r):
    return _render_full(r)


def _alternatives(r):
    if isinstance(r, Union):
        return _alternatives(r.left) | _alternatives(r.right)
    return {r}


def mk_union(r: Regex, s: Regex) -> Regex:
    """Union normalised for associativity, commutativity, idempotence and unit."""
    parts = sorted((x for x in _alternatives(r) | _alternatives(s) if not isinstance(x, EmptySet)), key=_key)
    if not parts:
        return EmptySet()
    out = parts[-1]
    for x in reversed(parts[:-1]):
        out = Union(x, out)
    return out


def mk_concat(r: Regex, s: Regex) -> Regex:
    if isinstance(r, EmptySet) or isinstance(s, EmptySet):
        return EmptySet()
    if isinstance(r, EmptyStr):
        return s
    if isinstance(s, EmptyStr):
        return r
    if isinstance(r, Concat):
        return mk_concat(r.left, mk_concat(r.right, s))
    return Concat(r, s)


def mk_star(r: Regex) -> Regex:
    if isinstance(r, Star):
        return r
    if isinstance(r, (EmptyStr, EmptySet)):
        return EmptyStr()
    return Star(r)


@lru_cache(maxsize=None)
def normalize(r: Regex) -> Regex:
    if isinstance(r, Concat):
        return mk_concat(normalize(r.left), normalize(r.right))
    if isinstance(r, Union):
        return mk_union(normalize(r.left), normalize(r.right))
    if isinstance(r, Star):
        return mk_star(normalize(r.inner))
    return r


@lru_cache(maxsize=None)
def nullable(r: Regex) -> bool:
    if isinstance(r, (EmptyStr, Star)):
        return True
    if isinstance(r, Concat):
        return nullable(r.left) and nullable(r.right)
    if isinstance(r, Union):
        return nullable(r.left) or nullable(r.right)
    return False


@lru_cache(maxsize=None)
def derivative(r: Regex, a: str) -> Regex:
    """Normalised derivative of ``r`` by symbol ``a``."""
    if isinstance(r, Symbol):
        return EmptyStr() if r.char == a else EmptySet()
    if isinstance(r, (EmptyStr, EmptySet)):
        return EmptySet()
    if isinstance(r, Union):
        return mk_union(derivative(r.left, a), derivative(r.right, a))
    if isinstance(r, Star):
        return mk_concat(derivative(r.inner, a), r)
    head = mk_concat(derivative(r.left, a), r.right)
    if nullable(r.left):
        return mk_union(head, derivative(r.right, a))
    return head


def regex_matches(r: Regex, w: str) -> bool:
    r = normalize(r)
    for a in w:
        r = derivative(r, a)
    return nullable(r)


def regex_to_dfa(r: Regex, alphabet, cap: int = MAX_DERIVATIVE_STATES) -> Dfa:
    """DFA whose states are the distinct normalised derivatives of ``r``."""
    alphabet = "".join(alphabet)
    extra = symbols_of(r) - set(alphabet)
    if extra:
        raise AlphabetMismatch(f"regex uses {''.join(sorted(extra))!r}, outside the alphabet {alphabet!r}")
    start = normalize(r)
    index = {start: 0}
    order = [start]
    transitions = {}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for a in alphabet:
            y = derivative(x, a)
            if y not in index:
                if len(index) >= cap:
                    raise ResourceError(f"derivative construction exceeded {cap} states")
                index[y] = len(order)
                order.append(y)
                queue.append(y)
            transitions[index[x], a] = index[y]
    accepting = frozenset(i for i, x in enumerate(order) if nullable(x))
    return Dfa(frozenset(range(len(order))), alphabet, transitions, 0, accepting)


# -- union-free decomposition ------------------------------------------------


def cat(parts) -> Regex:
    """Right-nested concatenation of a non-empty list."""
    parts = list(parts)
    out = parts[-1]
    for r in reversed(parts[:-1]):
        out = Concat(r, out)
    return out


def union_free_decomposition(r: Regex) -> list:
    """Union-free expressions whose languages together make up L(r)."""
    if isinstance(r, (EmptyStr, EmptySet, Symbol)):
        return [r]
    if isinstance(r, Union):
        return union_free_decomposition(r.left) + union_free_decomposition(r.right)
    if isinstance(r, Concat):
        rights = union_free_decomposition(r.right)
        return [Concat(a, b) for a in union_free_decomposition(r.left) for b in rights]
    return [Star(cat(Star(s) for s in union_free_decomposition(r.inner)))]


def union_of(parts) -> Regex:
    """Left-nested union of the given expressions; the empty list denotes the empty set."""
    parts = list(parts)
    if not parts:
        return EmptySet()
    out = parts[0]
    for r in parts[1:]:
        out = Union(out, r)
    return out
