"""Formal-language objects, exact verification and an exercise grader.

Submodules: ``logic`` (propositional formulas, sequent proofs, Tseitin CNF,
DPLL), ``automata`` (DFAs, NFAs and their constructions), ``regex``
(regular expressions and derivatives), ``grammars`` (context-free grammars,
CYK, deterministic pushdown automata), ``objects`` (file formats) and
``grader`` (manifests, verification, feedback and batch reports).
"""

from . import automata, grammars, logic, objects, regex
from .errors import (
    AlphabetMismatch,
    FormatError,
    FormlangError,
    IllFormedError,
    NotCnfError,
    ParseError,
    ResourceError,
    UnboundVariable,
)

__version__ = "0.1.0"
