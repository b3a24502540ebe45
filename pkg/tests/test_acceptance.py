"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
Random inputs come from fixed seeds so every run checks the same cases.
"""

import random
import sys
import time
from itertools import combinations
from pathlib import Path


sys.path.insert(0, str(Path(__file__).resolve().parent))

import oracles  # noqa: E402
from formlang import automata, grader, grammars, logic, objects, regex  # noqa: E402
from formlang.logic import Connective  # noqa: E402
from strategies import random_dfa, random_nfa, random_regex  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
IMPL_XOR = {Connective.IMPL, Connective.XOR}
RESULTS = []  # report lines, echoed again in the pytest terminal summary


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    RESULTS.append(line)
    if __name__ == "__main__":
        print(line, flush=True)
    return ok


def run_dpda(p, w):
    return grammars.dpda_run(p, w).tag is grammars.RunTag.ACCEPTED


def finite_dfa(words, alphabet="ab"):
    moves, accepts, nodes = set(), set(), {"": 0}
    for w in words:
        for i in range(len(w)):
            if w[: i + 1] not in nodes:
                nodes[w[: i + 1]] = len(nodes)
            moves.add((nodes[w[:i]], w[i], nodes[w[: i + 1]]))
        accepts.add(nodes[w])
    n = automata.Nfa(frozenset(nodes.values()), alphabet, frozenset(moves), frozenset({0}), frozenset(accepts))
    return automata.determinize(n)


# -- criterion 1 -------------------------------------------------------------


def criterion_1():
    start = time.monotonic()
    inputs = logic.enumerate_formulas(7, ("X", "Y"))
    failures = 0
    for f in inputs:
        g = logic.translate_to_impl_xor(f)
        if not logic.connectives_of(g) <= IMPL_XOR or oracles.table(f, "PXY") != oracles.table(g, "PXY"):
            failures += 1
    elapsed = time.monotonic() - start
    ok = failures == 0 and elapsed < 60
    return report(1, "FC translation", ok, f"{len(inputs)} formulas, {failures} failures, {elapsed:.1f} s < 60 s")


# -- criterion 2 -------------------------------------------------------------


def criterion_2():
    eps_ab = finite_dfa(["", "ab"])
    a_or_b = finite_dfa(["a", "b"])
    skip = automata.skip_construction
    ex1 = automata.enumerate_language(automata.determinize(skip(eps_ab)), 4)
    ex2 = automata.enumerate_language(automata.determinize(skip(a_or_b)), 4)
    rng = random.Random(2)
    mismatches = 0
    for _ in range(200):
        d = random_dfa(rng, 4)
        s = skip(d)
        if {w for w in oracles.strings("ab", 5) if automata.nfa_accepts(s, w)} != oracles.skip_language(d, 5):
            mismatches += 1
    ok = ex1 == ["a", "b"] and ex2 == [""] and mismatches == 0
    return report(2, "skip construction", ok, f"examples {ex1} and {ex2}; 200 random DFAs, {mismatches} mismatches")


# -- criterion 3 -------------------------------------------------------------


def criterion_3(candidate_dir):
    bad = []
    for d in range(1, 13):
        m = automata.multiples_dfa(d)
        if len(m.states) != d or len(automata.brzozowski_minimize(m).states) != d:
            bad.append(d)
        elif [automata.dfa_accepts(m, "a" * n) for n in range(25)] != [n % d == 0 for n in range(25)]:
            bad.append(d)
    m1 = automata.multiples_dfa(1)
    corner = m1.states == {0} and all(automata.dfa_accepts(m1, "a" * n) for n in range(25))
    # the exam probe: grade the reference construction on the single input d = 5
    spec = grader.parse_exercise({
        "id": "probe", "kind": "construction", "answer_kind": "dfa",
        "verification": {"rule": "construction_equiv", "reference": "multiples", "inputs": [5]},
    })
    probe = grader.run_construction(spec, reference_candidate(candidate_dir, "multiples"), grader.Limits(per_input_timeout=5))
    ok = not bad and corner and probe.category is grader.Category.CORRECT
    return report(3, "M_d family", ok, f"d=1..12 failures {bad}; d=1 corner {'ok' if corner else 'broken'}; d=5 probe {probe.category.value}")


def reference_candidate(directory, construction):
    path = Path(directory) / f"ref_{construction}"
    script = ROOT / "scripts" / "reference_candidate.py"
    path.write_text(f"#!{sys.executable}\nimport runpy, sys\nsys.argv = ['ref', {construction!r}]\n"
                    f"runpy.run_path({str(script)!r}, run_name='__main__')\n")
    path.chmod(0o755)
    return path


# -- criterion 4 -------------------------------------------------------------


def criterion_4():
    rng = random.Random(4)
    failures = 0
    for _ in range(500):
        r = random_regex(rng, rng.randint(1, 8))
        parts = regex.union_free_decomposition(r)
        union = regex.union_of(parts)
        if not all(regex.is_union_free(p) for p in parts):
            failures += 1
        elif not automata.language_equal(regex.regex_to_dfa(union, "ab"), regex.regex_to_dfa(r, "ab")):
            failures += 1
        elif set().union(*(oracles.regex_language(p, "ab", 8) for p in parts)) != oracles.regex_language(r, "ab", 8):
            failures += 1
    return report(4, "union-free decomposition", failures == 0, f"500 regexes of size <= 8, {failures} failures")


# -- criterion 5 -------------------------------------------------------------


def criterion_5():
    rng = random.Random(5)
    words = oracles.strings("ab", 8)
    failures = 0
    for _ in range(200):
        d = random_dfa(rng, rng.randint(1, 6))
        p = grammars.dfa_to_dpda3(d)
        if len(p.states) != 3 or grammars.validate_dpda(grammars.dpda_to_json(p)):
            failures += 1
        elif any(run_dpda(p, w) != automata.dfa_accepts(d, w) for w in words):
            failures += 1
    return report(5, "three-state DPDA", failures == 0, f"200 DFAs x {len(words)} strings, {failures} failures")


# -- criterion 6 -------------------------------------------------------------


def regular_object(rng):
    if rng.random() < 0.5:
        return objects.AlphabetRegex(random_regex(rng, rng.randint(1, 8)), "ab")
    return random_nfa(rng, rng.randint(1, 8))


def equivalent_variant(rng, x):
    """Something with the same language as ``x`` built by another route."""
    d = objects.to_dfa(x)
    choice = rng.randrange(3)
    if choice == 0:
        return automata.dfa_to_nfa(automata.brzozowski_minimize(d))
    if choice == 1:
        return automata.reverse(automata.reverse(automata.as_nfa(x if not isinstance(x, objects.AlphabetRegex) else d)))
    return automata.nfa_regular_op("union", automata.as_nfa(d), automata.dfa_to_nfa(automata.dfa_product(d, d, "and")))


def criterion_6():
    rng = random.Random(6)
    words = oracles.strings("ab", 8)
    disagreements = bad_examples = not_minimal = equal_pairs = 0
    for i in range(500):
        x = regular_object(rng)
        y = equivalent_variant(rng, x) if i % 3 == 0 else regular_object(rng)
        dx, dy = objects.to_dfa(x), objects.to_dfa(y)
        equal, examples = automata.equivalence_counterexamples(dx, dy, 3)
        differing = [w for w in words if oracles.run_dfa(dx, w) != oracles.run_dfa(dy, w)]
        equal_pairs += equal
        if equal != (not differing) or (not equal and examples[0].string != differing[0]):
            disagreements += 1
        for c in examples:
            in_x = automata.accepts(x, c.string) if not isinstance(x, objects.AlphabetRegex) else regex.regex_matches(x.regex, c.string)
            in_y = automata.accepts(y, c.string) if not isinstance(y, objects.AlphabetRegex) else regex.regex_matches(y.regex, c.string)
            if in_x == in_y or in_x != (c.side is automata.Side.ONLY_FIRST):
                bad_examples += 1
        for d in (dx, dy):
            m = automata.brzozowski_minimize(d)
            if not automata.is_minimal(m) or len(m.states) != oracles.minimal_state_count(d):
                not_minimal += 1
    ok = disagreements == bad_examples == not_minimal == 0
    detail = (f"500 pairs ({equal_pairs} equivalent), {disagreements} disagreements, "
              f"{bad_examples} bad counterexamples, {not_minimal} non-minimal outputs")
    return report(6, "equivalence engine", ok, detail)


# -- criterion 7 -------------------------------------------------------------


def criterion_7():
    start = time.monotonic()
    fs = logic.enumerate_formulas(5, ("X", "Y"))
    sigs = [logic.truth_signature(f, ["X", "Y"]) for f in fs]
    disagreements = bound_violations = 0
    for f in fs:
        clauses, _, _ = logic.tseitin_3cnf(f)
        if any(len(c) > 3 for c in clauses) or len(clauses) > 4 * f.size + 1:
            bound_violations += 1
    pairs = 0
    for i, j in combinations(range(len(fs)), 2):
        pairs += 1
        f, g = fs[i], fs[j]
        by_signature = sigs[i] == sigs[j]
        by_wang = logic.equivalent(f, g)
        xor = logic.Xor(f, g)
        clauses, _, _ = logic.tseitin_3cnf(xor)
        if any(len(c) > 3 for c in clauses) or len(clauses) > 4 * xor.size + 1:
            bound_violations += 1
        by_sat = logic.dpll_satisfiable(clauses) is None
        if not by_signature == by_wang == by_sat:
            disagreements += 1
    for f in fs:
        pairs += 1
        clauses, _, _ = logic.tseitin_3cnf(logic.Xor(f, f))
        if not (logic.equivalent(f, f) and logic.dpll_satisfiable(clauses) is None):
            disagreements += 1
    elapsed = time.monotonic() - start
    ok = disagreements == bound_violations == 0
    detail = f"{len(fs)} formulas, {pairs} pairs, {disagreements} disagreements, {bound_violations} bound violations, {elapsed:.1f} s"
    return report(7, "logic engine agreement", ok, detail)


# -- criterion 8 -------------------------------------------------------------


def criterion_8():
    rng = random.Random(8)
    spec = grader.parse_exercise({
        "id": "perf", "kind": "instance", "answer_kind": "nfa",
        "verification": {"rule": "language_equiv", "solution": {"kind": "regex", "regex": "(a|b)*a(a|b)(a|b)", "alphabet": "ab"}},
    })
    regex_spec = grader.parse_exercise({
        "id": "perf-regex", "kind": "instance", "answer_kind": "regex",
        "verification": {"rule": "language_equiv", "solution": {"kind": "regex", "regex": "(a|b)*a(a|b)(a|b)", "alphabet": "ab"}},
    })
    worst_grade = 0.0
    for _ in range(20):
        answer = objects.dumps(random_nfa(rng, 10, density=2.0))
        t = time.monotonic()
        grader.verify_instance(spec, answer)
        worst_grade = max(worst_grade, time.monotonic() - t)
    for text in ["(a|b)*a(a|b)(a|b)", "(a|b)*a(a|b)(a|b)(a|b)", "((a|b)(a|b))*(a|_)b*a", "(ab|ba|aab)*(a|b)(a|b)(a|b)"]:
        t = time.monotonic()
        grader.verify_instance(regex_spec, text)
        worst_grade = max(worst_grade, time.monotonic() - t)
    worst_det = 0.0
    for _ in range(20):
        n = random_nfa(rng, 10, density=2.5, eps=0.5)
        t = time.monotonic()
        automata.determinize(n)
        worst_det = max(worst_det, time.monotonic() - t)
    ok = worst_grade < 2 and worst_det < 5
    return report(8, "performance envelope", ok, f"slowest grading {worst_grade:.3f} s < 2 s; slowest 10-state determinization {worst_det:.3f} s < 5 s")


# -- criterion 9 -------------------------------------------------------------

ILL_FORMED = """
import json, sys
for line in sys.stdin:
    d = json.loads(line)
    moves = [[q, "a", q + 1 if q + 1 < d else -1] for q in range(d)]
    print(json.dumps({"kind": "dfa", "states": list(range(d)), "alphabet": "a", "transitions": moves, "start": 0, "accept": [0]}), flush=True)
"""


def criterion_9(tmp):
    tmp = Path(tmp)
    spec = grader.parse_exercise({
        "id": "robust", "kind": "construction", "answer_kind": "dfa",
        "verification": {"rule": "construction_equiv", "reference": "multiples", "inputs": [5]},
    })
    limits = grader.Limits(per_input_timeout=2.0)
    sleeper = tmp / "sleeper"
    sleeper.write_text(f"#!{sys.executable}\nimport time\ntime.sleep(30)\n")
    sleeper.chmod(0o755)
    t = time.monotonic()
    slept = grader.run_construction(spec, sleeper, limits)
    elapsed = time.monotonic() - t
    timeout_ok = slept.category is grader.Category.TIMEOUT and elapsed < limits.per_input_timeout + 1

    ill = tmp / "ill"
    ill.write_text(f"#!{sys.executable}\n{ILL_FORMED}")
    ill.chmod(0o755)
    verdict = grader.run_construction(spec, ill, limits)
    message = "\n".join(verdict.per_test[0].feedback)
    ill_ok = verdict.category is grader.Category.ILL_FORMED and "outside the state set" in message

    subs = tmp / "subs"
    subs.mkdir()
    answers = {"ana": "(0|1)((0|1)(0|1))*", "ben": "(0|1)*", "cat": "(1|0)*", "dan": "(0|1", "eve": "(0|2)",
               "fay": "", "gus": "1(00|01|10|11)*|0((0|1)(0|1))*", "hal": "0"}
    for ident, text in answers.items():
        (subs / f"{ident}.txt").write_text(text)
    odd = grader.load_exercise(ROOT / "exercises" / "odd_binary.json")
    roster = sorted(answers) + ["ivy"]
    first = grader.grade_batch(odd, subs, roster=roster, jobs=4)
    second = grader.grade_batch(odd, subs, roster=roster, jobs=2)
    same = first.dumps() == second.dumps() and first.table() == second.table()
    ok = timeout_ok and ill_ok and same
    detail = (f"sleeper {slept.category.value} after {elapsed:.2f} s (limit {limits.per_input_timeout + 1:g} s); "
              f"ill-formed candidate {verdict.category.value}; batch reports identical: {same}")
    return report(9, "grader robustness", ok, detail)


# -- criterion 10 ------------------------------------------------------------


def criterion_10():
    expr = grammars.cfg_to_cnf(grammars.make_cfg(["E"], "+x", [("E", ["E", "+", "E"]), ("E", ["x"])], "E"))
    three = grammars.cyk_trees(expr, "x+x+x")
    one = grammars.cyk_trees(expr, "x")
    anbn = grammars.cfg_to_cnf(grammars.make_cfg(["S"], "ab", [("S", ["a", "S", "b"]), ("S", [])], "S"))
    counts = {w: grammars.cyk_trees(anbn, w, cap=10) for w in oracles.strings("ab", 8)}
    unambiguous = all(c <= 1 for c in counts.values())
    members = sorted((w for w, c in counts.items() if c), key=len)
    ok = three >= 2 and one == 1 and unambiguous and members == ["a" * n + "b" * n for n in range(5)]
    return report(10, "CYK ambiguity", ok, f"x+x+x -> {three} trees, x -> {one}; a^n b^n max {max(counts.values())} tree over {len(counts)} strings")


# -- pytest entry points -----------------------------------------------------


def test_criterion_1_fc_translation():
    assert criterion_1()


def test_criterion_2_skip_construction():
    assert criterion_2()


def test_criterion_3_multiples_family(tmp_path):
    assert criterion_3(tmp_path)


def test_criterion_4_union_free():
    assert criterion_4()


def test_criterion_5_three_state_dpda():
    assert criterion_5()


def test_criterion_6_equivalence_engine():
    assert criterion_6()


def test_criterion_7_logic_agreement():
    assert criterion_7()


def test_criterion_8_performance():
    assert criterion_8()


def test_criterion_9_grader_robustness(tmp_path):
    assert criterion_9(tmp_path)


def test_criterion_10_cyk_ambiguity():
    assert criterion_10()


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        results = [criterion_1(), criterion_2(), criterion_3(a), criterion_4(), criterion_5(), criterion_6(),
                   criterion_7(), criterion_8(), criterion_9(b), criterion_10()]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
