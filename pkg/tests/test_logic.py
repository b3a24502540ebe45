from itertools import combinations

import pytest
from hypothesis import given, strategies as st

import oracles
from formlang import logic
from formlang.errors import ParseError, ResourceError, UnboundVariable
from formlang.logic import (
    And,
    Biim,
    ConstFalse,
    ConstTrue,
    Connective,
    Impl,
    Literal,
    Not,
    Or,
    Var,
    Xor,
    clause,
    parse_formula,
    render_formula,
)
from strategies import formulas

X, Y, A, B, C, P = (Var(n) for n in "XYABCP")


# -- syntax ------------------------------------------------------------------


def test_parse_worked_example():
    assert parse_formula("X & (X => Y)") == And(X, Impl(X, Y))


def test_parse_single_variable():
    assert parse_formula("X") == X


def test_parse_precedence():
    assert parse_formula("~A | B ^ C") == Xor(Or(Not(A), B), C)


def test_parse_associativity():
    assert parse_formula("A => B => C") == Impl(A, Impl(B, C))
    assert parse_formula("A & B & C") == And(And(A, B), C)
    assert parse_formula("A <=> B <=> C") == Biim(Biim(A, B), C)
    assert parse_formula("A => B <=> C") == Biim(Impl(A, B), C)


def test_parse_constants_and_whitespace():
    assert parse_formula("  T&F ") == And(ConstTrue(), ConstFalse())
    assert parse_formula("~~X") == Not(Not(X))


@pytest.mark.parametrize("text", ["", "X &", "(X", "X Y", "x", "X => => Y", "X)", "X <= Y"])
def test_parse_errors(text):
    with pytest.raises(ParseError) as info:
        parse_formula(text)
    assert 0 <= info.value.offset <= len(text)
    assert info.value.expected


def test_parse_error_offset_points_at_problem():
    with pytest.raises(ParseError) as info:
        parse_formula("X & ")
    assert info.value.offset == 4


def test_var_names_are_single_letters():
    with pytest.raises(ValueError):
        Var("XY")
    with pytest.raises(ValueError):
        Var("T")


def test_render_fully_parenthesised():
    assert render_formula(And(X, Impl(X, Y))) == "(X & (X => Y))"
    assert render_formula(Not(X)) == "~X"


@given(formulas(variables="XYZ"))
def test_parse_render_round_trip(f):
    assert parse_formula(render_formula(f)) == f


def test_round_trip_exhaustive_small():
    for f in logic.enumerate_formulas(5, constants=True):
        assert parse_formula(render_formula(f)) == f


@given(formulas())
def test_json_round_trip(f):
    assert logic.formula_from_json(logic.formula_to_json(f)) == f


def test_size_counts_nodes():
    assert X.size == 1
    assert And(X, Impl(X, Y)).size == 5


# -- semantics ---------------------------------------------------------------


def test_evaluate_examples():
    f = And(X, Impl(X, Y))
    assert logic.evaluate(f, {"X": True, "Y": True})
    assert not logic.evaluate(f, {"X": True, "Y": False})
    assert not logic.evaluate(Xor(ConstTrue(), ConstTrue()), {})


def test_evaluate_unbound_variable():
    with pytest.raises(UnboundVariable) as info:
        logic.evaluate(And(X, Y), {"X": True})
    assert info.value.name == "Y"


@given(formulas(variables="XYZ"))
def test_evaluate_matches_oracle(f):
    names = "XYZ"
    expected = oracles.table(f, names)
    assert tuple(logic.evaluate(f, env) for env in oracles.rows(names)) == expected


def test_truth_signature_examples():
    assert logic.truth_signature(X, ["X"]) == "01"
    assert logic.truth_signature(ConstFalse(), ["X", "Y"]) == "0000"
    assert logic.truth_signature(And(X, Impl(X, Y)), ["X", "Y"]) == logic.truth_signature(And(X, Y), ["X", "Y"]) == "0001"


def test_truth_signature_bit_order():
    # bit i decodes the first variable from the lowest bit of i
    assert logic.truth_signature(X, ["X", "Y"]) == "0101"
    assert logic.truth_signature(Y, ["X", "Y"]) == "0011"


def test_truth_signature_cap():
    names = [chr(ord("A") + i) for i in range(21)]
    with pytest.raises(ResourceError):
        logic.truth_signature(X, names)


def test_connectives_of():
    assert logic.connectives_of(X) == frozenset()
    assert logic.connectives_of(Impl(Xor(A, B), ConstFalse())) == {Connective.IMPL, Connective.XOR, Connective.CONST}


# -- Wang --------------------------------------------------------------------


def test_wang_examples():
    assert logic.wang_proves([], [Or(X, Not(X))])
    assert not logic.wang_proves([X], [Y])
    assert logic.wang_proves([And(X, Impl(X, Y))], [And(X, Y)])


def test_wang_empty_sequent_is_invalid():
    assert not logic.wang_proves([], [])
    assert logic.wang_proves([ConstFalse()], [])
    assert logic.wang_proves([], [ConstTrue()])


@given(st.lists(formulas(variables="XYZ", max_leaves=6), max_size=3), st.lists(formulas(variables="XYZ", max_leaves=6), max_size=3))
def test_wang_matches_truth_tables(premises, conclusions):
    valid = all(
        not all(oracles.value(p, env) for p in premises) or any(oracles.value(c, env) for c in conclusions)
        for env in oracles.rows("XYZ")
    )
    assert logic.wang_proves(premises, conclusions) == valid


def test_wang_agrees_with_signatures_small():
    fs = logic.enumerate_formulas(3)
    sigs = [oracles.table(f, "XY") for f in fs]
    for i, j in combinations(range(len(fs)), 2):
        implied = all(not a or b for a, b in zip(sigs[i], sigs[j]))
        assert logic.wang_proves([fs[i]], [fs[j]]) == implied


# -- Tseitin, DPLL, resolution -----------------------------------------------


def test_tseitin_single_variable():
    clauses, root, _ = logic.tseitin_3cnf(X)
    assert root == Literal("X")
    assert logic.dpll_satisfiable(clauses) == {"X": True}
    assert logic.dpll_satisfiable(clauses + [clause(-Literal("X"))]) is None


def test_tseitin_contradiction():
    clauses, _, _ = logic.tseitin_3cnf(And(X, Not(X)))
    assert logic.dpll_satisfiable(clauses) is None


def test_tseitin_constants():
    assert logic.dpll_satisfiable(logic.tseitin_3cnf(ConstTrue())[0]) is not None
    assert logic.dpll_satisfiable(logic.tseitin_3cnf(ConstFalse())[0]) is None


def test_tseitin_fresh_names_in_preorder():
    f = And(Or(X, Y), Xor(X, Y))
    _, root, fresh = logic.tseitin_3cnf(f)
    assert fresh == {f: "t1", Or(X, Y): "t2", Xor(X, Y): "t3"}
    assert root == Literal("t1")


def test_tseitin_shares_repeated_subformulas():
    g = Or(X, Y)
    _, _, fresh = logic.tseitin_3cnf(And(g, Impl(g, X)))
    assert list(fresh.values()).count("t2") == 1 and len(fresh) == 3


@given(formulas(variables="ABCDEG", max_leaves=13))
def test_tseitin_equisatisfiable_and_small(f):
    clauses, _, _ = logic.tseitin_3cnf(f)
    assert all(len(c) <= 3 for c in clauses)
    assert len(clauses) <= 4 * f.size + 1
    assert logic.is_3cnf(clauses)
    names = sorted(logic.variables_of(f))
    satisfiable = any(oracles.value(f, env) for env in oracles.rows(names))
    assert (logic.dpll_satisfiable(clauses) is not None) == satisfiable
    fresh = {lit.name for c in clauses for lit in c} - set(names)
    assert all(not (len(n) == 1 and n.isupper()) for n in fresh)


@given(formulas(variables="XY", max_leaves=5))
def test_tseitin_models_extend_to_formula_models(f):
    clauses, _, _ = logic.tseitin_3cnf(f)
    model = logic.dpll_satisfiable(clauses)
    if model is not None:
        env = {v: model.get(v, False) for v in "XY"}
        assert oracles.value(f, env)


def test_dpll_examples():
    assert logic.dpll_satisfiable([]) == {}
    x = Literal("X")
    assert logic.dpll_satisfiable([clause(x), clause(-x)]) is None


literals = st.builds(Literal, st.sampled_from(["A", "B", "C", "D", "E", "G", "H", "I"]), st.booleans())


@given(st.lists(st.frozensets(literals, min_size=1, max_size=3), min_size=1, max_size=30))
def test_dpll_matches_brute_force(clauses):
    model = logic.dpll_satisfiable(clauses)
    assert (model is not None) == oracles.clauses_satisfiable(clauses)
    if model is not None:
        assert logic.satisfies(model, clauses)


def test_dpll_random_3cnf_8_vars_30_clauses():
    import random

    rng = random.Random(7)
    names = "ABCDEGHI"
    for _ in range(40):
        clauses = [
            frozenset(Literal(n, rng.random() < 0.5) for n in rng.sample(names, 3)) for _ in range(30)
        ]
        model = logic.dpll_satisfiable(clauses)
        assert (model is not None) == oracles.clauses_satisfiable(clauses)
        assert (logic.brute_force_satisfiable(clauses) is not None) == (model is not None)


def test_resolution_examples():
    x, y = Literal("X"), Literal("Y")
    assert logic.resolution_refutes([clause(x), clause(-x)])
    assert not logic.resolution_refutes([clause(x, y)])
    assert logic.resolution_refutes([frozenset()])


def test_resolution_matches_dpll_exhaustive():
    lits = [Literal(n, p) for n in "ABC" for p in (True, False)]
    small = [frozenset([l]) for l in lits] + [frozenset(pair) for pair in combinations(lits, 2)]
    checked = 0
    for k in range(5):
        for cnf in combinations(small, k):
            refuted = logic.resolution_refutes(list(cnf))
            assert refuted == (logic.dpll_satisfiable(list(cnf)) is None)
            checked += 1
    assert checked == 7547


def test_resolution_cap():
    import random

    rng = random.Random(1)
    names = [f"v{i}" for i in range(14)]
    clauses = [frozenset(Literal(n, rng.random() < 0.5) for n in rng.sample(names, 3)) for _ in range(60)]
    with pytest.raises(ResourceError):
        logic.resolution_refutes(clauses, cap=50)


def test_cnf_predicates():
    assert logic.is_cnf(And(Or(X, Not(Y)), Y))
    assert not logic.is_cnf(Or(And(X, Y), Y))
    assert logic.is_3cnf([clause(Literal("X"), Literal("Y"), Literal("Z"))])
    assert not logic.is_3cnf([frozenset(Literal(n) for n in "WXYZ")])


# -- functional completeness -------------------------------------------------


def test_translate_constants():
    assert logic.translate_to_impl_xor(ConstTrue()) == Impl(P, P)
    assert logic.translate_to_impl_xor(ConstFalse()) == Xor(P, P)


def test_translate_small_exhaustive_with_constants():
    for f in logic.enumerate_formulas(5, constants=True):
        g = logic.translate_to_impl_xor(f)
        assert logic.connectives_of(g) <= {Connective.IMPL, Connective.XOR}
        assert oracles.table(f, "PXY") == oracles.table(g, "PXY")


@given(formulas(variables="XYZ"))
def test_translate_passes_restricted_check(f):
    g = logic.translate_to_impl_xor(f)
    assert logic.restricted_equivalent(g, f, {Connective.IMPL, Connective.XOR}) == logic.Correct()


def test_restricted_equivalent_examples():
    allowed = {Connective.IMPL, Connective.XOR}
    assert logic.restricted_equivalent(Impl(X, Xor(X, X)), Not(X), allowed) == logic.Correct()
    assert logic.restricted_equivalent(Not(X), Not(X), allowed) == logic.WrongConnectives(frozenset({Connective.NOT}))
    assert logic.restricted_equivalent(X, Y, allowed) == logic.NotEquivalent({"X": True, "Y": False})


@given(formulas(max_leaves=6), formulas(max_leaves=6))
def test_distinguishing_assignment_is_genuine(f, g):
    witness = logic.distinguishing_assignment(f, g)
    if witness is None:
        assert oracles.table(f, "XY") == oracles.table(g, "XY")
    else:
        env = {"X": False, "Y": False, **witness}
        assert oracles.value(f, env) != oracles.value(g, env)


@pytest.mark.parametrize("size,constants", [(3, False), (5, False), (5, True)])
def test_enumeration_counts(size, constants):
    fs = logic.enumerate_formulas(size, constants=constants)
    assert len(fs) == len(set(fs)) == oracles.formula_count(size, 4 if constants else 2)
    assert max(f.size for f in fs) == size
