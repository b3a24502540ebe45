#!/usr/bin/env python3
"""Answer construction requests with a built-in reference construction.

Speaks the grader's line protocol: one JSON input per stdin line, one JSON
output per stdout line. Handy as a known-good candidate:

    python3 scripts/reference_candidate.py multiples
"""

import argparse
import sys

from formlang import grader, objects


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("construction", choices=sorted(grader.CONSTRUCTIONS))
    args = parser.parse_args(argv)
    c = grader.CONSTRUCTIONS[args.construction]
    for line in sys.stdin:
        if not line.strip():
            continue
        out = c.build(objects.decode(line, c.input_kind))
        sys.stdout.write(objects.dumps(out) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
