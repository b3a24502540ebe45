"""Command-line interface.

Exit status: 0 on success, 1 when the answer is negative (not equivalent,
ill-formed, not graded CORRECT), 2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from itertools import product
from pathlib import Path

from . import automata, grader, grammars, logic, objects, regex
from .errors import FormatError, FormlangError, IllFormedError, ParseError
from .objects import AlphabetRegex

OK, NEGATIVE, USAGE = 0, 1, 2

CONSTRUCT_NAMES = ("skip", "multiples", "uf", "tr", "dfa2cfg", "dfa2dpda3")


class CliError(Exception):
    """Usage or I/O problem; reported with exit status 2."""


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _load(path, kind=None, alphabet=None):
    """(kind, object) for the file at ``path``."""
    text = _read(path)
    try:
        kind = kind or objects.sniff_kind(text, str(path))
        return kind, objects.decode(text, kind, alphabet)
    except IllFormedError as exc:
        lines = "\n".join(f"  {d.category.value}: {d.detail}" for d in exc.defects)
        raise CliError(f"{path} is ill-formed:\n{lines}") from exc
    except (ParseError, FormatError) as exc:
        raise CliError(f"{path}: {exc}") from exc


def _emit(args, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _document(obj) -> str:
    return json.dumps(objects.encode(obj), sort_keys=True, indent=2)


def _regular(obj, path):
    if isinstance(obj, (automata.Dfa, automata.Nfa, AlphabetRegex)):
        return obj
    raise CliError(f"{path} is not a regular-language object (regex, dfa or nfa)")


def _alphabet_of(obj):
    return obj.alphabet


def _show(w):
    return w if w else "ε"


# -- subcommands -------------------------------------------------------------


def cmd_check(args):
    text = _read(args.file)
    try:
        kind = args.kind or objects.sniff_kind(text, args.file)
        obj = objects.decode(text, kind, args.alphabet)
    except IllFormedError as exc:
        if args.format == "structured":
            doc = {"well_formed": False, "defects": [{"category": d.category.value, "detail": d.detail} for d in exc.defects]}
            _emit(args, json.dumps(doc, sort_keys=True))
        else:
            _emit(args, f"ill-formed {kind}:\n" + "\n".join(f"  {d.category.value}: {d.detail}" for d in exc.defects))
        return NEGATIVE
    except (ParseError, FormatError) as exc:
        if args.format == "structured":
            _emit(args, json.dumps({"well_formed": False, "error": str(exc)}, sort_keys=True))
        else:
            _emit(args, f"unreadable: {exc}")
        return NEGATIVE
    if args.format == "structured":
        _emit(args, json.dumps({"well_formed": True, "kind": kind, "size": _size(obj)}, sort_keys=True))
    else:
        _emit(args, f"well-formed {kind} (size {_size(obj)})")
    return OK


def _size(obj):
    if isinstance(obj, AlphabetRegex):
        return obj.regex.size
    if isinstance(obj, str):
        return len(obj)
    return obj.size


def cmd_equiv(args):
    kind_a, a = _load(args.a, args.kind, args.alphabet)
    kind_b, b = _load(args.b, args.kind, args.alphabet)
    if kind_a == "formula" or kind_b == "formula":
        if kind_a != kind_b:
            raise CliError("cannot compare a formula with a non-formula")
        witness = logic.distinguishing_assignment(a, b)
        if args.format == "structured":
            _emit(args, json.dumps({"equivalent": witness is None, "witness": witness}, sort_keys=True))
        elif witness is None:
            _emit(args, "equivalent")
        else:
            shown = ", ".join(f"{v}={'T' if x else 'F'}" for v, x in sorted(witness.items()))
            _emit(args, f"not equivalent\n  they differ under {shown}")
        return OK if witness is None else NEGATIVE

    a, b = _regular(a, args.a), _regular(b, args.b)
    if args.alphabet is None:
        # a regex without a declared alphabet takes its partner's
        union = "".join(sorted(set(a.alphabet) | set(b.alphabet)))
        if isinstance(a, AlphabetRegex):
            a = AlphabetRegex(a.regex, b.alphabet if not isinstance(b, AlphabetRegex) else union)
        if isinstance(b, AlphabetRegex):
            b = AlphabetRegex(b.regex, a.alphabet)
    if set(a.alphabet) != set(b.alphabet):
        raise CliError(f"alphabets differ: {a.alphabet!r} vs {b.alphabet!r}")
    da, db = objects.to_dfa(a), objects.to_dfa(b)
    if da.alphabet != db.alphabet:
        db = automata.Dfa(db.states, da.alphabet, db.transitions, db.start, db.accepts)
    equal, examples = automata.equivalence_counterexamples(da, db, args.counterexamples)
    if args.format == "structured":
        doc = {
            "equivalent": equal,
            "counterexamples": [{"string": c.string, "side": c.side.value} for c in examples],
        }
        _emit(args, json.dumps(doc, sort_keys=True))
    elif equal:
        _emit(args, "equivalent")
    else:
        lines = ["not equivalent"]
        for c in examples:
            owner = args.a if c.side is automata.Side.ONLY_FIRST else args.b
            lines.append(f"  {_show(c.string)}  accepted only by {owner}")
        _emit(args, "\n".join(lines))
    return OK if equal else NEGATIVE


def cmd_minimize(args):
    _, obj = _load(args.file, args.kind, args.alphabet)
    d = automata.brzozowski_minimize(objects.to_dfa(_regular(obj, args.file)))
    _emit(args, _document(d))
    return OK


def cmd_convert(args):
    kind, obj = _load(args.file, args.kind, args.alphabet)
    if args.to == "cnf":
        if kind != "cfg":
            raise CliError("--to cnf needs a grammar")
        out = grammars.cfg_to_cnf(obj)
    else:
        d = objects.to_dfa(_regular(obj, args.file))
        if args.to == "dfa":
            out = d
        elif args.to == "nfa":
            out = obj if isinstance(obj, automata.Nfa) else automata.dfa_to_nfa(d)
        elif args.to == "cfg":
            out = grammars.dfa_to_cfg(d)
        else:
            out = grammars.dfa_to_dpda3(d)
    _emit(args, _document(out))
    return OK


def _inline_or_file(arg):
    path = Path(arg)
    return _read(path) if path.is_file() else arg


def cmd_construct(args):
    name, arg = args.name, args.arg
    try:
        if name == "multiples":
            try:
                d = int(arg)
            except ValueError as exc:
                raise CliError(f"multiples needs an integer, got {arg!r}") from exc
            if d < 1:
                raise CliError("multiples needs d >= 1")
            out = automata.multiples_dfa(d)
        elif name == "uf":
            r = objects.decode(_inline_or_file(arg), "regex", args.alphabet)
            parts = regex.union_free_decomposition(r.regex)
            if args.format == "structured":
                out = [AlphabetRegex(p, r.alphabet) for p in parts]
            else:
                _emit(args, "\n".join(regex.render_regex(p, minimal=True) for p in parts))
                return OK
        elif name == "tr":
            f = objects.decode(_inline_or_file(arg), "formula")
            out = logic.translate_to_impl_xor(f)
            if args.format != "structured":
                _emit(args, logic.render_formula(out))
                return OK
        else:
            _, m = _load(arg, None, args.alphabet)
            d = objects.to_dfa(_regular(m, arg))
            build = {"skip": automata.skip_construction, "dfa2cfg": grammars.dfa_to_cfg, "dfa2dpda3": grammars.dfa_to_dpda3}
            out = build[name](d)
    except (ParseError, FormatError) as exc:
        raise CliError(str(exc)) from exc
    _emit(args, _document(out))
    return OK


def _strings(alphabet, max_len):
    for n in range(max_len + 1):
        for t in product(sorted(alphabet), repeat=n):
            yield "".join(t)


def cmd_enumerate(args):
    kind, obj = _load(args.file, args.kind, args.alphabet)
    if kind == "cfg":
        g = grammars.cfg_to_cnf(obj)
        words = [w for w in _strings(obj.terminals, args.max_len) if grammars.cfg_accepts(g, w)]
    elif kind == "dpda":
        words = []
        for w in _strings(obj.input_alphabet, args.max_len):
            if grammars.dpda_run(obj, w, args.step_limit).tag is grammars.RunTag.ACCEPTED:
                words.append(w)
        words.sort(key=lambda w: (len(w), w))
    else:
        words = automata.enumerate_language(objects.to_dfa(_regular(obj, args.file)), args.max_len)
    if args.format == "structured":
        _emit(args, json.dumps(words))
    else:
        _emit(args, "\n".join(_show(w) for w in words) if words else "(no strings)")
    return OK


def _limits(args):
    return grader.Limits(per_input_timeout=args.timeout, step_limit=args.step_limit)


def _spec(args):
    try:
        spec = grader.load_exercise(args.manifest)
    except grader.ManifestError as exc:
        raise CliError(str(exc)) from exc
    policy = spec.feedback
    changes = {}
    if args.hide_counterexamples:
        changes["reveal_counterexamples"] = False
    if args.hide_inputs:
        changes["reveal_test_inputs"] = False
    if args.max_counterexamples is not None:
        changes["max_counterexamples"] = args.max_counterexamples
    if changes:
        from dataclasses import replace

        spec = replace(spec, feedback=replace(policy, **changes))
    return spec


def _verdict_text(v: grader.Verdict) -> str:
    lines = [f"{v.category.value} (score {v.score:.2f})"]
    if v.needs_human_review:
        lines[0] += " [needs human review]"
    lines += list(v.feedback)
    for t in v.per_test:
        lines += ["  " + m for m in t.feedback] or [f"  test {t.index + 1}: {t.category.value}"]
    return "\n".join(lines)


def cmd_grade(args):
    spec = _spec(args)
    if spec.kind == "construction":
        try:
            verdict = grader.run_construction(spec, args.submission, _limits(args))
        except grader.CandidateNotExecutable as exc:
            raise CliError(str(exc)) from exc
    else:
        verdict = grader.verify_instance(spec, _read(args.submission), _limits(args))
    if args.format == "structured":
        _emit(args, json.dumps(verdict.to_json(), sort_keys=True, indent=2))
    else:
        _emit(args, _verdict_text(verdict))
    return OK if verdict.category is grader.Category.CORRECT else NEGATIVE


def _roster(path):
    if path is None:
        return None
    return [line.strip() for line in _read(path).splitlines() if line.strip()]


def cmd_grade_batch(args):
    spec = _spec(args)
    if not Path(args.directory).is_dir():
        raise CliError(f"{args.directory} is not a directory")
    report = grader.grade_batch(spec, args.directory, _limits(args), _roster(args.roster), args.jobs)
    _emit(args, report.dumps() if args.format == "structured" else report.table())
    return OK


def cmd_cluster(args):
    spec = _spec(args)
    if spec.kind != "instance":
        raise CliError("clustering applies to instance exercises")
    if not Path(args.directory).is_dir():
        raise CliError(f"{args.directory} is not a directory")
    files = grader._submission_files(args.directory)
    submissions = [(ident, _read(p)) for ident, p in sorted(files.items())]
    alphabet = None
    if isinstance(spec.verification, grader.LanguageEquiv):
        alphabet = objects.to_dfa(spec.verification.solution).alphabet
    report = grader.cluster_answers(submissions, spec.answer_kind, alphabet)
    if args.format == "structured":
        _emit(args, json.dumps(report.to_json(), sort_keys=True, indent=2))
    else:
        lines = [
            f"{len(c.members)} x size {c.size_bucket}, representative {c.representative}: {', '.join(c.members)}"
            for c in report.clusters
        ]
        _emit(args, "\n".join(lines) if lines else "(no submissions)")
    return OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("-o", "--output", help="write the result here instead of stdout")
    common.add_argument("--kind", choices=objects.KINDS, help="input kind (default: guessed from the file)")
    common.add_argument("--alphabet", help="alphabet for regular expressions (default: their symbols)")

    grading = argparse.ArgumentParser(add_help=False)
    grading.add_argument("--timeout", type=float, default=5.0, help="seconds per test input (default 5)")
    grading.add_argument("--step-limit", type=int, default=grammars.DEFAULT_STEP_LIMIT)
    grading.add_argument("--hide-counterexamples", action="store_true")
    grading.add_argument("--hide-inputs", action="store_true")
    grading.add_argument("--max-counterexamples", type=int)

    parser = argparse.ArgumentParser(prog="formlang", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="validate an object and list its defects")
    p.add_argument("file")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("equiv", parents=[common], help="compare two languages or formulas")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--counterexamples", type=int, default=5, metavar="N")
    p.set_defaults(run=cmd_equiv)

    p = sub.add_parser("minimize", parents=[common], help="minimal DFA of a regular object")
    p.add_argument("file")
    p.set_defaults(run=cmd_minimize)

    p = sub.add_parser("convert", parents=[common], help="convert between representations")
    p.add_argument("file")
    p.add_argument("--to", required=True, choices=("dfa", "nfa", "cfg", "dpda3", "cnf"))
    p.set_defaults(run=cmd_convert)

    p = sub.add_parser("construct", parents=[common], help="run a named construction")
    p.add_argument("name", choices=CONSTRUCT_NAMES)
    p.add_argument("arg", help="input file, or an integer/expression for multiples, uf and tr")
    p.set_defaults(run=cmd_construct)

    p = sub.add_parser("enumerate", parents=[common], help="list accepted strings in length-lexicographic order")
    p.add_argument("file")
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--step-limit", type=int, default=grammars.DEFAULT_STEP_LIMIT)
    p.set_defaults(run=cmd_enumerate)

    p = sub.add_parser("grade", parents=[common, grading], help="grade one submission")
    p.add_argument("manifest")
    p.add_argument("submission")
    p.set_defaults(run=cmd_grade)

    p = sub.add_parser("grade-batch", parents=[common, grading], help="grade a directory of submissions")
    p.add_argument("manifest")
    p.add_argument("directory")
    p.add_argument("--roster", help="file of expected submission ids, one per line")
    p.add_argument("--jobs", type=int, default=4)
    p.set_defaults(run=cmd_grade_batch)

    p = sub.add_parser("cluster", parents=[common, grading], help="group equivalent answers")
    p.add_argument("manifest")
    p.add_argument("directory")
    p.set_defaults(run=cmd_cluster)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.run(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return USAGE
    except FormlangError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
