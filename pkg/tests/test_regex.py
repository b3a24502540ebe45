import pytest
from hypothesis import given, strategies as st

import oracles
from formlang import automata, regex
from formlang.errors import AlphabetMismatch, ParseError, ResourceError
from formlang.regex import Concat, EmptySet, EmptyStr, Star, Symbol, Union, parse_regex, render_regex
from strategies import regexes

a, b, zero, one = Symbol("a"), Symbol("b"), Symbol("0"), Symbol("1")
ODD = "(0|1)((0|1)(0|1))*"


def test_parse_examples():
    assert parse_regex("0*(1|_)") == Concat(Star(zero), Union(one, EmptyStr()))
    assert parse_regex("#") == EmptySet()
    bit = Union(zero, one)
    assert parse_regex(ODD) == Concat(bit, Star(Concat(bit, bit)))


def test_parse_precedence_and_associativity():
    assert parse_regex("ab|c*") == Union(Concat(a, b), Star(Symbol("c")))
    assert parse_regex("abc") == Concat(Concat(a, b), Symbol("c"))
    assert parse_regex("a**") == Star(Star(a))
    assert parse_regex(" a  b ") == Concat(a, b)


@pytest.mark.parametrize("text,offset", [("", 0), ("(a", 2), ("a|", 2), ("*a", 0), ("a)", 1), ("()", 1)])
def test_parse_errors(text, offset):
    with pytest.raises(ParseError) as info:
        parse_regex(text)
    assert info.value.offset == offset


@given(regexes(alphabet="ab0"))
def test_round_trip_full(r):
    assert parse_regex(render_regex(r)) == r


@given(regexes(alphabet="ab0"))
def test_round_trip_minimal(r):
    text = render_regex(r, minimal=True)
    assert parse_regex(text) == r
    assert len(text) <= len(render_regex(r))


def test_minimal_render_examples():
    assert render_regex(parse_regex(ODD), minimal=True) == ODD
    assert render_regex(Union(a, Union(b, a)), minimal=True) == "a|(b|a)"
    assert render_regex(Concat(a, Concat(b, a)), minimal=True) == "a(ba)"


@given(regexes(), st.text("ab", max_size=6))
def test_matches_agrees_with_set_semantics(r, w):
    assert regex.regex_matches(r, w) == (w in oracles.regex_language(r, "ab", len(w)))


def test_normalization_laws():
    n = regex.normalize
    assert n(Union(b, a)) == n(Union(a, b))
    assert n(Union(a, a)) == a
    assert n(Union(a, EmptySet())) == a
    assert n(Concat(EmptyStr(), a)) == a
    assert n(Concat(a, EmptySet())) == EmptySet()
    assert n(Star(Star(a))) == Star(a)


def test_to_dfa_examples():
    empty = regex.regex_to_dfa(EmptySet(), "ab")
    assert len(empty.states) == 1 and automata.is_empty(empty)
    eps = regex.regex_to_dfa(EmptyStr(), "ab")
    assert automata.enumerate_language(eps, 4) == [""]
    odd = regex.regex_to_dfa(parse_regex(ODD), "01")
    assert len(automata.brzozowski_minimize(odd).states) == 2
    assert oracles.language(odd, 9) == {w for w in oracles.strings("01", 9) if len(w) % 2 == 1}


def test_to_dfa_alphabet_mismatch():
    with pytest.raises(AlphabetMismatch):
        regex.regex_to_dfa(parse_regex("ac"), "ab")


def test_to_dfa_cap():
    r = parse_regex("(a|b)*a(a|b)(a|b)(a|b)(a|b)")
    with pytest.raises(ResourceError):
        regex.regex_to_dfa(r, "ab", cap=8)


@given(regexes(max_leaves=8))
def test_to_dfa_matches_oracle(r):
    d = regex.regex_to_dfa(r, "ab")
    assert automata.validate_automaton(automata.automaton_to_json(d), "dfa") == []
    assert oracles.language(d, 6) == oracles.regex_language(r, "ab", 6)


def test_union_free_examples():
    assert regex.union_free_decomposition(Union(a, b)) == [a, b]
    assert regex.union_free_decomposition(a) == [a]
    parts = regex.union_free_decomposition(Star(Union(a, b)))
    assert parts == [Star(Concat(Star(a), Star(b)))]
    target = regex.regex_to_dfa(Star(Union(a, b)), "ab")
    assert automata.language_equal(regex.regex_to_dfa(regex.union_of(parts), "ab"), target)


def test_union_free_concat_is_cross_product():
    parts = regex.union_free_decomposition(parse_regex("(a|b)(a|_)"))
    assert parts == [Concat(a, a), Concat(a, EmptyStr()), Concat(b, a), Concat(b, EmptyStr())]


@given(regexes(max_leaves=8))
def test_union_free_decomposition_sound(r):
    parts = regex.union_free_decomposition(r)
    assert parts and all(regex.is_union_free(p) for p in parts)
    covered = set().union(*(oracles.regex_language(p, "ab", 6) for p in parts))
    assert covered == oracles.regex_language(r, "ab", 6)


def test_union_of_empty_is_empty_set():
    assert regex.union_of([]) == EmptySet()


def test_symbol_rejects_metacharacters():
    for c in "|*()_# ":
        with pytest.raises(ValueError):
            Symbol(c)
