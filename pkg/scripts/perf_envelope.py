#!/usr/bin/env python3
"""Time determinization and instance grading as NFA size grows.

Prints one row per state count with median and worst times over a fixed
number of seeded random NFAs.  Handy for spotting where the subset blow-up
starts to hurt.
"""

import argparse
import random
import statistics
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from formlang import automata, grader, objects  # noqa: E402
from strategies import random_nfa  # noqa: E402

SPEC = {
    "id": "perf", "kind": "instance", "answer_kind": "nfa",
    "verification": {"rule": "language_equiv",
                     "solution": {"kind": "regex", "regex": "(a|b)*a(a|b)(a|b)", "alphabet": "ab"}},
}


def timed(fn, *args):
    t = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8, 10, 12, 14])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--density", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    spec = grader.parse_exercise(SPEC)
    rng = random.Random(args.seed)
    print(f"{'states':>6} {'det median':>11} {'det worst':>10} {'dfa size':>9} {'grade worst':>12}")
    for n in args.sizes:
        det, grade, sizes = [], [], []
        for _ in range(args.trials):
            nfa = random_nfa(rng, n, density=args.density)
            det.append(timed(automata.determinize, nfa))
            sizes.append(len(automata.determinize(nfa).states))
            grade.append(timed(grader.verify_instance, spec, objects.dumps(nfa)))
        print(f"{n:>6} {statistics.median(det):>10.4f}s {max(det):>9.4f}s {max(sizes):>9} {max(grade):>11.4f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
