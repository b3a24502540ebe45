"""Exercise manifests, answer verification and feedback.

Instance exercises are graded by verifying a single submitted object against
a reference. Construction exercises run a candidate program over a suite of
test inputs using a line protocol: the grader writes one JSON document per
line to the candidate's stdin and reads one JSON document per line back.
"""

from __future__ import annotations

import enum
import json
import os
import resource
import selectors
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from . import automata, grammars, logic, objects, regex
from .automata import Side
from .errors import FormatError, FormlangError, IllFormedError, ParseError, ResourceError
from .objects import AlphabetRegex

ANSWER_KINDS = ("formula", "regex", "dfa", "nfa", "cfg", "dpda", "string")
BOUNDED_TEST_LENGTH = 8


class Category(str, enum.Enum):
    CORRECT = "CORRECT"
    WRONG = "WRONG"
    ILL_FORMED = "ILL_FORMED"
    MALFORMED_ANSWER = "MALFORMED_ANSWER"
    TIMEOUT = "TIMEOUT"
    CRASH = "CRASH"
    NO_SUBMISSION = "NO_SUBMISSION"


# worst last; a construction's overall category is its worst per-input one
SEVERITY = list(Category)
REVIEW = {Category.MALFORMED_ANSWER, Category.CRASH}


class ManifestError(FormlangError):
    """The exercise manifest is unreadable or inconsistent."""


class CandidateNotExecutable(FormlangError):
    pass


@dataclass(frozen=True)
class FeedbackPolicy:
    reveal_counterexamples: bool = True
    max_counterexamples: int = 3
    reveal_test_inputs: bool = True


@dataclass(frozen=True)
class LanguageEquiv:
    solution: object


@dataclass(frozen=True)
class FormulaEquivRestricted:
    solution: logic.Formula
    allowed: frozenset


@dataclass(frozen=True)
class AmbiguityWitness:
    grammar: grammars.Cfg


@dataclass(frozen=True)
class StringMembership:
    expected: tuple
    machine: object = None


@dataclass(frozen=True)
class ConstructionEquiv:
    inputs: tuple
    reference: Optional[str] = None
    solutions: Optional[tuple] = None
    weights: Optional[tuple] = None


@dataclass(frozen=True)
class ExerciseSpec:
    id: str
    title: str
    statement: str
    kind: str
    answer_kind: str
    verification: object
    feedback: FeedbackPolicy = FeedbackPolicy()


@dataclass(frozen=True)
class TestResult:
    index: int
    input: Optional[str]
    category: Category
    feedback: tuple = ()
    weight: float = 1.0

    def to_json(self):
        return {
            "index": self.index,
            "input": self.input,
            "category": self.category.value,
            "feedback": list(self.feedback),
            "weight": self.weight,
        }


@dataclass(frozen=True)
class Verdict:
    category: Category
    score: float
    feedback: tuple = ()
    per_test: tuple = ()

    @property
    def needs_human_review(self) -> bool:
        return self.category in REVIEW or any(t.category in REVIEW for t in self.per_test)

    def to_json(self):
        return {
            "category": self.category.value,
            "score": round(self.score, 6),
            "feedback": list(self.feedback),
            "per_test": [t.to_json() for t in self.per_test],
            "needs_human_review": self.needs_human_review,
        }


@dataclass(frozen=True)
class Limits:
    per_input_timeout: float = 5.0
    step_limit: int = grammars.DEFAULT_STEP_LIMIT
    max_output_bytes: int = 1 << 20
    memory_limit_mb: Optional[int] = None


def _verdict(category, messages=(), score=None):
    if score is None:
        score = 1.0 if category is Category.CORRECT else 0.0
    return Verdict(category, score, tuple(messages))


# -- reference constructions -------------------------------------------------


@dataclass(frozen=True)
class Construction:
    name: str
    input_kind: str
    output_kind: str
    build: Callable


def _regex_to_dfa(x: AlphabetRegex):
    return regex.regex_to_dfa(x.regex, x.alphabet)


def _union_free(x: AlphabetRegex):
    return [AlphabetRegex(r, x.alphabet) for r in regex.union_free_decomposition(x.regex)]


CONSTRUCTIONS = {
    c.name: c
    for c in [
        Construction("skip", "dfa", "nfa", automata.skip_construction),
        Construction("multiples", "int", "dfa", automata.multiples_dfa),
        Construction("dfa2pda3", "dfa", "dpda", grammars.dfa_to_dpda3),
        Construction("union_free", "regex", "regex", _union_free),
        Construction("tr_impl_xor", "formula", "formula", logic.translate_to_impl_xor),
        Construction("determinize", "nfa", "dfa", automata.determinize),
        Construction("minimize", "dfa", "dfa", automata.brzozowski_minimize),
        Construction("complement", "dfa", "dfa", automata.dfa_complement),
        Construction("reverse", "nfa", "nfa", automata.reverse),
        Construction("regex2dfa", "regex", "dfa", _regex_to_dfa),
        Construction("dfa2cfg", "dfa", "cfg", grammars.dfa_to_cfg),
        Construction("cnf", "cfg", "cfg", grammars.cfg_to_cnf),
    ]
}

_RULE_KINDS = {
    "language_equiv": {"regex", "dfa", "nfa"},
    "formula_equiv_restricted": {"formula"},
    "ambiguity_witness": {"string"},
    "string_membership": {"regex", "dfa", "nfa", "cfg", "dpda"},
}


def _wire_kind(c: Construction, role):
    kind = c.output_kind if role == "output" else c.input_kind
    if c.name == "union_free" and role == "output":
        return "regex_list"
    return kind


# -- manifests ---------------------------------------------------------------


def _field(doc, key, path, types=None, default=...):
    if key not in doc:
        if default is ...:
            raise ManifestError(f"{path}.{key}: missing")
        return default
    value = doc[key]
    if types is not None and (not isinstance(value, types) or isinstance(value, bool) and bool not in _tuple(types)):
        raise ManifestError(f"{path}.{key}: expected {_names(types)}, got {type(value).__name__}")
    return value


def _tuple(types):
    return types if isinstance(types, tuple) else (types,)


def _names(types):
    return " or ".join(t.__name__ for t in _tuple(types))


def _load_solution(doc, kind, path):
    try:
        return objects.decode(doc, kind)
    except IllFormedError as exc:
        raise ManifestError(f"{path}: invalid solution: {exc}") from exc
    except (FormatError, ParseError) as exc:
        raise ManifestError(f"{path}: unreadable solution: {exc}") from exc


def _regular_kind(doc, path):
    if isinstance(doc, str):
        return "regex"
    if isinstance(doc, dict):
        kind = doc.get("kind", "dfa")
        if kind in ("regex", "dfa", "nfa"):
            return kind
    raise ManifestError(f"{path}: solution must be a regex, dfa or nfa document")


def parse_exercise(doc) -> ExerciseSpec:
    if not isinstance(doc, dict):
        raise ManifestError("manifest: expected a JSON object")
    ident = _field(doc, "id", "manifest", str)
    title = _field(doc, "title", "manifest", str, default=ident)
    statement = _field(doc, "statement", "manifest", str, default="")
    kind = _field(doc, "kind", "manifest", str)
    if kind not in ("instance", "construction"):
        raise ManifestError(f"manifest.kind: must be 'instance' or 'construction', got {kind!r}")
    answer_kind = _field(doc, "answer_kind", "manifest", str)
    if answer_kind not in ANSWER_KINDS:
        raise ManifestError(f"manifest.answer_kind: must be one of {', '.join(ANSWER_KINDS)}, got {answer_kind!r}")
    fb = _field(doc, "feedback", "manifest", dict, default={})
    policy = FeedbackPolicy(
        reveal_counterexamples=_field(fb, "reveal_counterexamples", "manifest.feedback", bool, default=True),
        max_counterexamples=_field(fb, "max_counterexamples", "manifest.feedback", int, default=3),
        reveal_test_inputs=_field(fb, "reveal_test_inputs", "manifest.feedback", bool, default=True),
    )
    ver = _field(doc, "verification", "manifest", dict)
    rule = _field(ver, "rule", "manifest.verification", str)
    path = "manifest.verification"

    if rule == "construction_equiv":
        if kind != "construction":
            raise ManifestError(f"{path}.rule: construction_equiv needs kind 'construction'")
        verification = _parse_construction_rule(ver, answer_kind, path)
    else:
        if kind != "instance":
            raise ManifestError(f"{path}.rule: a construction exercise must use construction_equiv")
        if rule not in _RULE_KINDS:
            raise ManifestError(f"{path}.rule: unknown rule {rule!r}")
        if answer_kind not in _RULE_KINDS[rule]:
            raise ManifestError(f"{path}.rule: {rule} is not compatible with answer_kind {answer_kind!r}")
        if rule == "language_equiv":
            sol = _field(ver, "solution", path)
            verification = LanguageEquiv(_load_solution(sol, _regular_kind(sol, path + ".solution"), path + ".solution"))
        elif rule == "formula_equiv_restricted":
            sol = _load_solution(_field(ver, "solution", path), "formula", path + ".solution")
            allowed = _field(ver, "allowed", path, list, default=[c.value for c in logic.Connective])
            try:
                allowed = frozenset(logic.Connective(a) for a in allowed)
            except ValueError as exc:
                raise ManifestError(f"{path}.allowed: {exc}") from exc
            verification = FormulaEquivRestricted(sol, allowed)
        elif rule == "ambiguity_witness":
            g = _load_solution(_field(ver, "grammar", path), "cfg", path + ".grammar")
            verification = AmbiguityWitness(g)
        else:
            verification = _parse_membership_rule(ver, answer_kind, path)
    return ExerciseSpec(ident, title, statement, kind, answer_kind, verification, policy)


def _parse_membership_rule(ver, answer_kind, path):
    machine = None
    if "machine" in ver:
        mdoc = ver["machine"]
        mkind = mdoc.get("kind", "cfg") if isinstance(mdoc, dict) else "regex"
        machine = _load_solution(mdoc, mkind, path + ".machine")
    expected = []
    for i, item in enumerate(_field(ver, "expected", path, list, default=[])):
        if isinstance(item, list) and len(item) == 2 and isinstance(item[0], str) and isinstance(item[1], bool):
            expected.append((item[0], item[1]))
        elif isinstance(item, str) and machine is not None:
            expected.append((item, _member(machine, item, grammars.DEFAULT_STEP_LIMIT)))
        else:
            raise ManifestError(f"{path}.expected[{i}]: expected [string, bool] (or a string when 'machine' is given)")
    if not expected:
        raise ManifestError(f"{path}.expected: at least one test string is required")
    return StringMembership(tuple(expected), machine)


def _parse_construction_rule(ver, answer_kind, path):
    reference = _field(ver, "reference", path, str, default=None)
    raw_inputs = _field(ver, "inputs", path, list)
    if not raw_inputs:
        raise ManifestError(f"{path}.inputs: a construction exercise needs at least one test input")
    construction = None
    if reference is not None:
        if reference not in CONSTRUCTIONS:
            raise ManifestError(f"{path}.reference: unknown construction {reference!r} (known: {', '.join(CONSTRUCTIONS)})")
        construction = CONSTRUCTIONS[reference]
        if construction.output_kind != answer_kind:
            raise ManifestError(
                f"{path}.reference: {reference} produces {construction.output_kind}, but answer_kind is {answer_kind!r}"
            )
        input_kind = construction.input_kind
    else:
        input_kind = _field(ver, "input_kind", path, str)
    inputs = tuple(
        _load_solution(doc, input_kind, f"{path}.inputs[{i}]") for i, doc in enumerate(raw_inputs)
    )
    solutions = None
    if "solutions" in ver:
        raw = _field(ver, "solutions", path, list)
        if len(raw) != len(inputs):
            raise ManifestError(f"{path}.solutions: {len(raw)} solutions for {len(inputs)} inputs")
        out_kind = "regex_list" if reference == "union_free" else answer_kind
        solutions = tuple(_load_solution(doc, out_kind, f"{path}.solutions[{i}]") for i, doc in enumerate(raw))
    elif construction is None:
        raise ManifestError(f"{path}: give a registered 'reference' or explicit 'solutions'")
    weights = None
    if "weights" in ver:
        weights = tuple(_field(ver, "weights", path, list))
        if len(weights) != len(inputs) or not all(isinstance(w, (int, float)) and w >= 0 for w in weights):
            raise ManifestError(f"{path}.weights: need one non-negative number per input")
    return ConstructionEquiv(inputs, reference, solutions, weights)


def load_exercise(path) -> ExerciseSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    return parse_exercise(doc)


# -- feedback helpers --------------------------------------------------------


def show(w: str) -> str:
    return '"' + w + '"' if w else "ε (the empty string)"


def _misclassified(counterexamples, policy: FeedbackPolicy, answer_first=True):
    if not policy.reveal_counterexamples:
        return []
    lines = ["Some strings your answer misclassifies:"]
    for c in counterexamples[: policy.max_counterexamples]:
        accepted_by_answer = (c.side is Side.ONLY_FIRST) == answer_first
        if accepted_by_answer:
            lines.append(f"  {show(c.string)} is accepted by your answer but should be rejected")
        else:
            lines.append(f"  {show(c.string)} is rejected by your answer but should be accepted")
    return lines


def _defect_lines(what, defects):
    return [f"Your {what} is ill-formed:"] + [f"  {d.detail}" for d in defects]


def _alphabet_defect(answer_alphabet, expected):
    return automata.Defect(
        automata.DefectKind.SYMBOL_OUTSIDE_ALPHABET,
        f"the alphabet {answer_alphabet!r} does not match the expected alphabet {expected!r}",
    )


# -- instance verification ---------------------------------------------------


def _parse_answer(answer, kind, alphabet=None):
    """Object or verdict: MALFORMED_ANSWER for unreadable input, ILL_FORMED for bad objects."""
    try:
        if isinstance(answer, (str, dict, list, int)) and not isinstance(answer, bool):
            return objects.decode(answer, kind, alphabet), None
        return answer, None
    except IllFormedError as exc:
        return None, _verdict(Category.ILL_FORMED, _defect_lines(_describe(kind), exc.defects))
    except (ParseError, FormatError) as exc:
        return None, _verdict(Category.MALFORMED_ANSWER, [f"Your answer could not be read: {exc}"])


def _describe(kind):
    return {"dfa": "DFA", "nfa": "NFA", "cfg": "grammar", "dpda": "DPDA", "regex": "regular expression"}.get(kind, kind)


def _check_regular(answer, solution_dfa: automata.Dfa, kind, policy: FeedbackPolicy):
    """Verdict comparing a regular answer against a reference DFA."""
    expected = solution_dfa.alphabet
    if isinstance(answer, AlphabetRegex):
        extra = regex.symbols_of(answer.regex) - set(expected)
        if extra:
            d = automata.Defect(
                automata.DefectKind.SYMBOL_OUTSIDE_ALPHABET,
                f"the expression uses {''.join(sorted(extra))!r}, outside the alphabet {expected!r}",
            )
            return _verdict(Category.ILL_FORMED, _defect_lines(_describe(kind), [d]))
        answer = AlphabetRegex(answer.regex, expected)
    elif set(answer.alphabet) != set(expected):
        return _verdict(Category.ILL_FORMED, _defect_lines(_describe(kind), [_alphabet_defect(answer.alphabet, expected)]))
    try:
        dfa = objects.to_dfa(answer)
        equal, examples = automata.equivalence_counterexamples(dfa, solution_dfa, max(policy.max_counterexamples, 1))
    except ResourceError as exc:
        return _verdict(
            Category.TIMEOUT, [f"Verification exceeded its budget ({exc}); flagged for manual marking."]
        )
    if equal:
        return _verdict(Category.CORRECT, ["Correct: your answer recognises exactly the required language."])
    return _verdict(
        Category.WRONG,
        ["The language of your answer differs from the required language."] + _misclassified(examples, policy),
    )


def _member(machine, w, step_limit):
    """Membership of ``w``; None when a DPDA runs out of steps."""
    if isinstance(machine, grammars.Dpda):
        if any(a not in machine.input_alphabet for a in w):
            return False
        out = grammars.dpda_run(machine, w, step_limit)
        return None if out.tag is grammars.RunTag.STEP_LIMIT else out.tag is grammars.RunTag.ACCEPTED
    if isinstance(machine, grammars.Cfg):
        return all(a in machine.terminals for a in w) and grammars.cfg_accepts(machine, w)
    if isinstance(machine, AlphabetRegex):
        return all(a in machine.alphabet for a in w) and regex.regex_matches(machine.regex, w)
    if isinstance(machine, automata.Dfa):
        return all(a in machine.alphabet for a in w) and automata.dfa_accepts(machine, w)
    return automata.nfa_accepts(machine, w)


def _check_membership(machine, expected, policy, step_limit, hide=False):
    wrong, stuck = [], []
    for w, want in expected:
        got = _member(machine, w, step_limit)
        if got is None:
            stuck.append(w)
        elif got != want:
            wrong.append((w, want))
    passed = len(expected) - len(wrong) - len(stuck)
    score = passed / len(expected)
    if stuck:
        lines = [f"Your machine did not halt within {step_limit} steps on {len(stuck)} test string(s)."]
        if policy.reveal_counterexamples and not hide:
            lines += [f"  {show(w)}" for w in stuck[: policy.max_counterexamples]]
        return _verdict(Category.TIMEOUT, lines, score)
    if wrong:
        lines = [f"Your answer misclassifies {len(wrong)} of {len(expected)} test strings."]
        if policy.reveal_counterexamples and not hide:
            for w, want in wrong[: policy.max_counterexamples]:
                verb = "rejected" if want else "accepted"
                should = "accepted" if want else "rejected"
                lines.append(f"  {show(w)} is {verb} by your answer but should be {should}")
        return _verdict(Category.WRONG, lines, score)
    return _verdict(Category.CORRECT, [f"Correct on all {len(expected)} test strings."])


def _check_formula(answer, reference, allowed, policy):
    result = logic.restricted_equivalent(answer, reference, allowed)
    if isinstance(result, logic.Correct):
        return _verdict(Category.CORRECT, ["Correct: your formula is equivalent and uses only the allowed connectives."])
    if isinstance(result, logic.WrongConnectives):
        names = ", ".join(sorted(c.value for c in result.offending))
        return _verdict(Category.WRONG, [f"Your formula uses connectives that are not allowed: {names}."])
    lines = ["Your formula is not equivalent to the required one."]
    if policy.reveal_counterexamples:
        shown = ", ".join(f"{v}={'T' if b else 'F'}" for v, b in sorted(result.witness.items()))
        lines.append(f"  They differ under the assignment {shown}.")
    return _verdict(Category.WRONG, lines)


def _check_ambiguity(w, g: grammars.Cfg, policy):
    extra = sorted({a for a in w if a not in g.terminals})
    if extra:
        return _verdict(Category.WRONG, [f"The string uses symbols that are not terminals of the grammar: {''.join(extra)!r}."])
    trees = grammars.cyk_trees(grammars.cfg_to_cnf(g), w, 2)
    if trees >= 2:
        return _verdict(Category.CORRECT, ["Correct: this string has at least two distinct parse trees."])
    if trees == 0:
        return _verdict(Category.WRONG, ["The grammar does not generate this string at all."])
    return _verdict(Category.WRONG, ["This string has exactly one parse tree, so it does not witness ambiguity."])


def verify_instance(spec: ExerciseSpec, answer, limits: Limits = Limits()) -> Verdict:
    """Verdict for a single submitted object (text, JSON value or parsed object)."""
    rule = spec.verification
    policy = spec.feedback
    alphabet = None
    if isinstance(rule, LanguageEquiv):
        alphabet = objects.to_dfa(rule.solution).alphabet
    obj, verdict = _parse_answer(answer, spec.answer_kind, alphabet)
    if verdict is not None:
        return verdict
    try:
        if isinstance(rule, LanguageEquiv):
            return _check_regular(obj, objects.to_dfa(rule.solution), spec.answer_kind, policy)
        if isinstance(rule, FormulaEquivRestricted):
            return _check_formula(obj, rule.solution, rule.allowed, policy)
        if isinstance(rule, AmbiguityWitness):
            return _check_ambiguity(obj, rule.grammar, policy)
        if isinstance(rule, StringMembership):
            return _check_membership(obj, rule.expected, policy, limits.step_limit)
    except ResourceError as exc:
        return _verdict(Category.TIMEOUT, [f"Verification exceeded its budget ({exc}); flagged for manual marking."])
    raise ManifestError(f"exercise {spec.id} is not an instance exercise")


# -- construction exercises --------------------------------------------------


def _all_strings(alphabet, max_len):
    out = [""]
    frontier = [""]
    for _ in range(max_len):
        frontier = [w + a for w in frontier for a in alphabet]
        out.extend(frontier)
    return out


def _bounded_expected(machine, alphabet, step_limit):
    return [(w, bool(_member(machine, w, step_limit))) for w in _all_strings(alphabet, BOUNDED_TEST_LENGTH)]


def _compare_output(name, inp, out, expected, policy, limits):
    """Verdict for one construction output against the expected object."""
    kind = objects.kind_of(expected)
    if name == "tr_impl_xor":
        return _check_formula(out, inp, {logic.Connective.IMPL, logic.Connective.XOR}, policy)
    if kind == "formula":
        return _check_formula(out, expected, set(logic.Connective), policy)
    if kind == "regex_list":
        parts = out
        mixed = [p for p in parts if not regex.is_union_free(p.regex)]
        if mixed:
            return _verdict(Category.WRONG, [f"Part {str(mixed[0])!r} uses the union operator."])
        alphabet = inp.alphabet if isinstance(inp, AlphabetRegex) else expected[0].alphabet
        target = objects.to_dfa(AlphabetRegex(regex.union_of(p.regex for p in expected), alphabet))
        return _check_regular(AlphabetRegex(regex.union_of(p.regex for p in parts), alphabet), target, "regex", policy)
    if kind in ("dfa", "nfa", "regex"):
        verdict = _check_regular(out, objects.to_dfa(expected), objects.kind_of(out), policy)
        if name == "minimize" and verdict.category is Category.CORRECT:
            minimal = len(automata.brzozowski_minimize(objects.to_dfa(expected)).states)
            if len(out.states) != minimal:
                return _verdict(
                    Category.WRONG, [f"Your DFA has {len(out.states)} states; the minimal DFA has {minimal}."]
                )
        return verdict
    if kind == "dpda":
        if name == "dfa2pda3" and len(out.states) != 3:
            return _verdict(Category.WRONG, [f"Your DPDA has {len(out.states)} states; exactly three are required."])
        alphabet = out.input_alphabet
        reference = inp if isinstance(inp, automata.Dfa) else expected
        return _check_membership(out, _bounded_expected(reference, alphabet, limits.step_limit), policy, limits.step_limit)
    if kind == "cfg":
        if name == "cnf" and not grammars.is_cnf_grammar(out):
            return _verdict(Category.WRONG, ["Your grammar is not in Chomsky normal form."])
        alphabet = expected.terminals
        return _check_membership(out, _bounded_expected(expected, alphabet, limits.step_limit), policy, limits.step_limit)
    raise TypeError(f"cannot compare {kind} outputs")


class _Candidate:
    """A running candidate process answering one request line at a time."""

    def __init__(self, argv, limits: Limits):
        self.limits = limits
        self.stderr = tempfile.TemporaryFile()
        preexec = None
        if limits.memory_limit_mb:
            cap = limits.memory_limit_mb << 20

            def preexec():
                resource.setrlimit(resource.RLIMIT_AS, (cap, cap))

        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=self.stderr, preexec_fn=preexec
        )
        self.buffer = b""

    def ask(self, line: str, timeout: float):
        """``("ok", text)``, ``("timeout", None)``, ``("exit", code)`` or ``("overflow", None)``."""
        try:
            self.proc.stdin.write(line.encode() + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            return "exit", self._wait()
        deadline = time.monotonic() + timeout
        fd = self.proc.stdout.fileno()
        with selectors.DefaultSelector() as sel:
            sel.register(fd, selectors.EVENT_READ)
            while b"\n" not in self.buffer:
                if len(self.buffer) > self.limits.max_output_bytes:
                    return "overflow", None
                remaining = deadline - time.monotonic()
                if remaining <= 0 or not sel.select(remaining):
                    return "timeout", None
                chunk = os.read(fd, 65536)
                if not chunk:
                    return "exit", self._wait()
                self.buffer += chunk
        text, _, self.buffer = self.buffer.partition(b"\n")
        if len(text) > self.limits.max_output_bytes:
            return "overflow", None
        return "ok", text.decode(errors="replace")

    def _wait(self):
        try:
            return self.proc.wait(timeout=1)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            return self.proc.wait()

    def stderr_tail(self, n=300):
        self.stderr.seek(0)
        data = self.stderr.read().decode(errors="replace").strip()
        return data[-n:]

    def close(self):
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=0.5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        for stream in (self.proc.stdout, self.proc.stdin):
            try:
                stream.close()
            except OSError:
                pass
        self.stderr.close()


def _candidate_argv(candidate):
    if isinstance(candidate, (list, tuple)):
        return list(candidate)
    path = Path(candidate)
    if not path.is_file() or not os.access(path, os.X_OK):
        raise CandidateNotExecutable(f"{candidate} is not an executable file")
    return [str(path.resolve())]


def expected_outputs(spec: ExerciseSpec) -> list:
    rule = spec.verification
    if rule.solutions is not None:
        return list(rule.solutions)
    build = CONSTRUCTIONS[rule.reference].build
    return [build(x) for x in rule.inputs]


def run_construction(spec: ExerciseSpec, candidate, limits: Limits = Limits()) -> Verdict:
    """Grade an executable against every test input of a construction exercise."""
    rule = spec.verification
    if not isinstance(rule, ConstructionEquiv):
        raise ManifestError(f"exercise {spec.id} is not a construction exercise")
    argv = _candidate_argv(candidate)
    policy = spec.feedback
    expected = expected_outputs(spec)
    out_kind = "regex_list" if rule.reference == "union_free" else spec.answer_kind
    weights = rule.weights or (1.0,) * len(rule.inputs)
    results = []
    proc = None
    try:
        for i, (inp, want) in enumerate(zip(rule.inputs, expected)):
            line = objects.dumps(inp)
            shown = line if policy.reveal_test_inputs else None
            label = f"test {i + 1}" + (f" (input {line})" if policy.reveal_test_inputs else "")
            if proc is None:
                proc = _Candidate(argv, limits)
            status, payload = proc.ask(line, limits.per_input_timeout)
            if status != "ok":
                if status == "timeout":
                    category = Category.TIMEOUT
                    msg = f"{label}: no answer within {limits.per_input_timeout:g} s (failure to terminate?)"
                elif status == "overflow":
                    category = Category.MALFORMED_ANSWER
                    msg = f"{label}: output exceeded {limits.max_output_bytes} bytes"
                else:
                    category = Category.CRASH
                    if payload:
                        msg = f"{label}: your program exited with status {payload}"
                    else:
                        msg = f"{label}: your program exited without answering"
                    tail = proc.stderr_tail()
                    if tail:
                        msg += f"; last error output: {tail}"
                proc.proc.kill()
                proc.close()
                proc = None
                results.append(TestResult(i, shown, category, (msg,), weights[i]))
                continue
            alphabet = inp.alphabet if isinstance(inp, AlphabetRegex) else None
            out, verdict = _parse_answer(payload, out_kind, alphabet)
            if verdict is None:
                try:
                    verdict = _compare_output(rule.reference, inp, out, want, policy, limits)
                except ResourceError as exc:
                    verdict = _verdict(Category.TIMEOUT, [f"verification exceeded its budget ({exc})"])
            msgs = tuple(f"{label}: {m}" if j == 0 else m for j, m in enumerate(verdict.feedback))
            results.append(TestResult(i, shown, verdict.category, msgs, weights[i]))
    finally:
        if proc is not None:
            proc.close()
    total = sum(weights)
    score = sum(t.weight for t in results if t.category is Category.CORRECT) / total if total else 0.0
    worst = max((t.category for t in results), key=SEVERITY.index)
    passed = sum(1 for t in results if t.category is Category.CORRECT)
    summary = [f"Passed {passed} of {len(results)} tests."]
    return Verdict(worst, score, tuple(summary), tuple(results))


# -- clustering --------------------------------------------------------------

UNPARSEABLE = "UNPARSEABLE"


@dataclass(frozen=True)
class Cluster:
    canonical_key: str
    size_bucket: int
    members: tuple
    representative: str

    def to_json(self):
        return {
            "canonical_key": self.canonical_key,
            "size_bucket": self.size_bucket,
            "members": list(self.members),
            "representative": self.representative,
        }


@dataclass(frozen=True)
class ClusterReport:
    clusters: tuple = ()

    def to_json(self):
        return [c.to_json() for c in self.clusters]


def _size(obj):
    if isinstance(obj, AlphabetRegex):
        return obj.regex.size
    if isinstance(obj, str):
        return len(obj)
    return obj.size


def cluster_answers(submissions, answer_kind: str, alphabet=None, bucket_width: int = 1) -> ClusterReport:
    """Group answers by semantic canonical form and size bucket."""
    parsed = {}
    bad = []
    for ident, answer in submissions:
        obj, verdict = _parse_answer(answer, answer_kind, alphabet)
        if verdict is None and answer_kind == "regex" and alphabet is not None:
            if not regex.symbols_of(obj.regex) <= set(alphabet):
                verdict = True
        if verdict is None:
            parsed[ident] = obj
        else:
            bad.append(ident)

    if answer_kind == "regex" and alphabet is None:
        alphabet = "".join(sorted(set().union(*(regex.symbols_of(o.regex) for o in parsed.values()))))
    if answer_kind == "formula":
        order = sorted(set().union(*(logic.variables_of(f) for f in parsed.values())))

    groups = {}
    for ident, obj in parsed.items():
        try:
            if answer_kind == "formula":
                key = logic.truth_signature(obj, order)
            elif answer_kind in ("regex", "dfa", "nfa"):
                if answer_kind == "regex":
                    obj = AlphabetRegex(obj.regex, alphabet)
                key = automata.dumps_automaton(automata.brzozowski_minimize(objects.to_dfa(obj)))
            elif answer_kind == "string":
                key = obj
            else:
                key = objects.dumps(obj)
        except FormlangError:
            bad.append(ident)
            continue
        bucket = _size(obj) // max(bucket_width, 1)
        groups.setdefault((key, bucket), []).append(ident)

    clusters = [Cluster(k, b, tuple(sorted(ids)), min(ids)) for (k, b), ids in groups.items()]
    if bad:
        clusters.append(Cluster(UNPARSEABLE, 0, tuple(sorted(bad)), min(bad)))
    clusters.sort(key=lambda c: (-len(c.members), c.representative))
    return ClusterReport(tuple(clusters))


# -- batches -----------------------------------------------------------------


@dataclass(frozen=True)
class SubmissionRecord:
    id: str
    verdict: Optional[Verdict] = None
    error: Optional[str] = None

    def to_json(self):
        doc = {"id": self.id}
        if self.verdict is not None:
            doc.update(self.verdict.to_json())
        if self.error is not None:
            doc["error"] = self.error
        return doc


@dataclass(frozen=True)
class BatchReport:
    exercise: str
    records: tuple
    counts: dict = field(default_factory=dict)
    clusters: ClusterReport = ClusterReport()

    def to_json(self):
        return {
            "exercise": self.exercise,
            "counts": dict(self.counts),
            "records": [r.to_json() for r in self.records],
            "clusters": self.clusters.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        rows = [("submission", "category", "score", "review")]
        for r in self.records:
            if r.verdict is None:
                rows.append((r.id, "ERROR", "-", r.error or ""))
            else:
                rows.append(
                    (r.id, r.verdict.category.value, f"{r.verdict.score:.2f}", "yes" if r.verdict.needs_human_review else "")
                )
        widths = [max(len(row[i]) for row in rows) for i in range(4)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        lines.append("")
        lines.append("totals: " + ", ".join(f"{k}={v}" for k, v in self.counts.items()))
        for c in self.clusters.clusters:
            lines.append(f"cluster of {len(c.members)} (size {c.size_bucket}), representative {c.representative}: {', '.join(c.members)}")
        return "\n".join(lines) + "\n"


def _submission_files(directory):
    files = sorted(p for p in Path(directory).iterdir() if p.is_file() and not p.name.startswith("."))
    by_id = {}
    for p in files:
        ident = p.stem if p.stem else p.name
        if ident in by_id:
            ident = p.name
        by_id[ident] = p
    return by_id


def grade_submission(spec: ExerciseSpec, path, limits: Limits = Limits()) -> SubmissionRecord:
    ident = Path(path).stem
    try:
        if spec.kind == "construction":
            return SubmissionRecord(ident, run_construction(spec, path, limits))
        text = Path(path).read_text()
        if not text.strip():
            return SubmissionRecord(ident, _verdict(Category.NO_SUBMISSION, ["No answer was submitted."]))
        return SubmissionRecord(ident, verify_instance(spec, text, limits))
    except (OSError, CandidateNotExecutable, UnicodeDecodeError) as exc:
        return SubmissionRecord(ident, error=str(exc).replace(str(Path(path).parent) + os.sep, ""))


def grade_batch(spec: ExerciseSpec, directory, limits: Limits = Limits(), roster=None, jobs: int = 4) -> BatchReport:
    """Grade every submission in ``directory``; report order is by submission id."""
    files = _submission_files(directory)
    ids = sorted(set(files) | set(roster or ()))

    def grade(ident):
        if ident not in files:
            return SubmissionRecord(ident, _verdict(Category.NO_SUBMISSION, ["No answer was submitted."]))
        record = grade_submission(spec, files[ident], limits)
        return SubmissionRecord(ident, record.verdict, record.error)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        records = tuple(pool.map(grade, ids))

    counts = {}
    for c in Category:
        n = sum(1 for r in records if r.verdict is not None and r.verdict.category is c)
        if n:
            counts[c.value] = n
    errors = sum(1 for r in records if r.verdict is None)
    if errors:
        counts["ERROR"] = errors

    clusters = ClusterReport()
    if spec.kind == "instance":
        wrong = [(r.id, files[r.id].read_text()) for r in records if r.verdict and r.verdict.category is Category.WRONG]
        alphabet = None
        if isinstance(spec.verification, LanguageEquiv) and spec.answer_kind == "regex":
            alphabet = objects.to_dfa(spec.verification.solution).alphabet
        clusters = cluster_answers(wrong, spec.answer_kind, alphabet)
    return BatchReport(spec.id, records, counts, clusters)
