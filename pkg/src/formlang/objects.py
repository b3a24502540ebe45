"""Reading and writing the library's objects as text and JSON documents.

Object kinds: ``formula``, ``regex``, ``dfa``, ``nfa``, ``cfg``, ``dpda``,
``string``, ``int`` and ``regex_list``. A regex travels with its alphabet as
``{"kind": "regex", "regex": "...", "alphabet": "ab"}``; the pair is held in
memory as ``AlphabetRegex``.
"""

from __future__ import annotations

import json
from typing import NamedTuple

from . import automata, grammars, logic, regex
from .errors import FormatError

KINDS = ("formula", "regex", "dfa", "nfa", "cfg", "dpda", "string", "int", "regex_list")


class AlphabetRegex(NamedTuple):
    regex: regex.Regex
    alphabet: str

    def __str__(self):
        return regex.render_regex(self.regex, minimal=True)


def with_alphabet(r: regex.Regex, alphabet=None) -> AlphabetRegex:
    if alphabet is None:
        alphabet = "".join(sorted(regex.symbols_of(r)))
    return AlphabetRegex(r, alphabet)


def _json(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc


def decode(doc, kind: str, alphabet=None):
    """Build an object of ``kind`` from text or an already-decoded JSON value.

    Raises ``ParseError``/``FormatError`` for unreadable input and
    ``IllFormedError`` when a machine or grammar breaks its invariants.
    """
    if kind == "formula":
        if isinstance(doc, str):
            stripped = doc.strip()
            if stripped.startswith("{"):
                return logic.formula_from_json(_json(stripped))
            return logic.parse_formula(stripped)
        if isinstance(doc, dict) and "op" in doc:
            return logic.formula_from_json(doc)
        if isinstance(doc, dict) and doc.get("kind") == "formula":
            return decode(doc.get("formula", ""), "formula")
        raise FormatError(f"not a formula: {doc!r}")
    if kind == "regex":
        if isinstance(doc, str):
            stripped = doc.strip()
            if stripped.startswith("{"):
                return decode(_json(stripped), "regex", alphabet)
            return with_alphabet(regex.parse_regex(stripped), alphabet)
        if isinstance(doc, dict) and isinstance(doc.get("regex"), str):
            alpha = doc.get("alphabet", alphabet)
            if alpha is not None and not isinstance(alpha, str):
                raise FormatError("regex 'alphabet' must be a string")
            return with_alphabet(regex.parse_regex(doc["regex"]), alpha)
        raise FormatError(f"not a regex document: {doc!r}")
    if kind == "regex_list":
        if isinstance(doc, str):
            doc = _json(doc)
        if not isinstance(doc, list):
            raise FormatError("expected a JSON list of regular expressions")
        return [decode(x, "regex", alphabet) for x in doc]
    if kind in ("dfa", "nfa"):
        if isinstance(doc, str):
            doc = _json(doc)
        if isinstance(doc, dict) and doc.get("kind") not in (None, kind):
            raise FormatError(f"expected a {kind} document, got kind {doc.get('kind')!r}")
        return automata.automaton_from_json(doc, kind)
    if kind == "cfg":
        return grammars.cfg_from_json(_json(doc) if isinstance(doc, str) else doc)
    if kind == "dpda":
        return grammars.dpda_from_json(_json(doc) if isinstance(doc, str) else doc)
    if kind == "string":
        if not isinstance(doc, str):
            raise FormatError("expected a string")
        return doc.strip()
    if kind == "int":
        if isinstance(doc, str):
            doc = _json(doc)
        if isinstance(doc, bool) or not isinstance(doc, int):
            raise FormatError(f"expected an integer, got {doc!r}")
        return doc
    raise FormatError(f"unknown object kind {kind!r}")


def encode(obj):
    """JSON value for an object (the inverse of ``decode``)."""
    if isinstance(obj, logic.Formula):
        return logic.formula_to_json(obj)
    if isinstance(obj, AlphabetRegex):
        return {"kind": "regex", "regex": regex.render_regex(obj.regex, minimal=True), "alphabet": obj.alphabet}
    if isinstance(obj, regex.Regex):
        return encode(with_alphabet(obj))
    if isinstance(obj, (automata.Dfa, automata.Nfa)):
        return automata.automaton_to_json(obj)
    if isinstance(obj, grammars.Cfg):
        return {"kind": "cfg", **grammars.cfg_to_json(obj)}
    if isinstance(obj, grammars.Dpda):
        return grammars.dpda_to_json(obj)
    if isinstance(obj, list):
        return [encode(x) for x in obj]
    if isinstance(obj, (str, int)):
        return obj
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(encode(obj), sort_keys=True, separators=(",", ":"))


def kind_of(obj) -> str:
    if isinstance(obj, logic.Formula):
        return "formula"
    if isinstance(obj, (AlphabetRegex, regex.Regex)):
        return "regex"
    if isinstance(obj, automata.Dfa):
        return "dfa"
    if isinstance(obj, automata.Nfa):
        return "nfa"
    if isinstance(obj, grammars.Cfg):
        return "cfg"
    if isinstance(obj, grammars.Dpda):
        return "dpda"
    if isinstance(obj, list):
        return "regex_list"
    if isinstance(obj, str):
        return "string"
    if isinstance(obj, int):
        return "int"
    raise TypeError(f"unknown object {obj!r}")


def sniff_kind(text: str, filename: str = "") -> str:
    """Guess the kind of a file's contents (JSON documents carry their kind)."""
    stripped = text.strip()
    if stripped.startswith("{"):
        doc = _json(stripped)
        if "op" in doc:
            return "formula"
        if doc.get("kind") in ("dfa", "nfa", "dpda", "regex", "cfg", "formula"):
            return doc["kind"]
        if "rules" in doc:
            return "cfg"
        if "transitions" in doc:
            return "nfa" if isinstance(doc.get("start"), list) else "dfa"
        raise FormatError(f"cannot tell what kind of document {filename or 'this'} is")
    if stripped.startswith("["):
        return "regex_list"
    lowered = filename.lower()
    if lowered.endswith((".formula", ".prop", ".logic", ".exp")):
        return "formula"
    return "regex"


def to_dfa(obj) -> automata.Dfa:
    """DFA form of any regular object."""
    if isinstance(obj, automata.Dfa):
        return obj
    if isinstance(obj, automata.Nfa):
        return automata.determinize(obj)
    if isinstance(obj, AlphabetRegex):
        return regex.regex_to_dfa(obj.regex, obj.alphabet)
    if isinstance(obj, regex.Regex):
        return regex.regex_to_dfa(obj, sorted(regex.symbols_of(obj)))
    raise TypeError(f"{type(obj).__name__} is not a regular-language object")
