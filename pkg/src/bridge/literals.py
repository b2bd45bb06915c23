"""Literal grammar for problem test values.

Values are a strict JSON subset: integers, booleans, double-quoted strings,
and arbitrarily nested lists of those. Floats, null, and objects are
rejected so every value has an exact Lean counterpart.
"""

from __future__ import annotations

import json
from typing import Any, List, Tuple, Union

from .errors import CorpusError

BASE_TYPES = ("Int", "Nat", "Bool", "String")

# A parsed semantic type: either a base type name or ("List", inner).
TypeNode = Union[str, Tuple[str, "TypeNode"]]


def _reject_const(name: str) -> None:
    raise CorpusError(f"literal contains non-finite number {name!r}")


def parse_literal(text: str) -> Any:
    """Parse a literal text into a Python value.

    Raises CorpusError on anything outside the grammar (floats, null,
    objects, malformed syntax).
    """
    if not isinstance(text, str):
        raise CorpusError(f"literal must be text, got {type(text).__name__}")
    try:
        value = json.loads(text, parse_constant=_reject_const)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed literal {text!r}: {exc}") from None
    _check_value(value, text)
    return value


def _check_value(value: Any, text: str) -> None:
    if isinstance(value, bool) or isinstance(value, int) or isinstance(value, str):
        return
    if isinstance(value, float):
        raise CorpusError(f"floats are outside the literal grammar: {text!r}")
    if value is None:
        raise CorpusError(f"null is outside the literal grammar: {text!r}")
    if isinstance(value, list):
        for item in value:
            _check_value(item, text)
        return
    raise CorpusError(f"unsupported literal value in {text!r}: {type(value).__name__}")


def encode_text(value: Any) -> str:
    """Canonical text form of a grammar value. Inverse of parse_literal."""
    _check_value(value, repr(value))
    return json.dumps(value, ensure_ascii=False, separators=(",", ":"))


# --- semantic types ---------------------------------------------------------


def _tokenize_type(text: str) -> List[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_type(tokens: List[str], pos: int) -> Tuple[TypeNode, int]:
    if pos >= len(tokens):
        raise CorpusError("unexpected end of type expression")
    tok = tokens[pos]
    if tok == "(":
        node, pos = _parse_type(tokens, pos + 1)
        if pos >= len(tokens) or tokens[pos] != ")":
            raise CorpusError("unbalanced parentheses in type expression")
        return node, pos + 1
    if tok == "List":
        inner, pos = _parse_type(tokens, pos + 1)
        return ("List", inner), pos
    if tok in BASE_TYPES:
        return tok, pos + 1
    raise CorpusError(f"unknown type {tok!r}")


def parse_type(text: str) -> TypeNode:
    """Parse a semantic type such as 'Int' or 'List (List Int)'."""
    tokens = _tokenize_type(text)
    if not tokens:
        raise CorpusError("empty type expression")
    node, pos = _parse_type(tokens, 0)
    if pos != len(tokens):
        raise CorpusError(f"trailing tokens in type expression {text!r}")
    return node


def format_type(node: TypeNode) -> str:
    """Canonical text for a parsed type. List elements are parenthesized."""
    if isinstance(node, str):
        return node
    inner = format_type(node[1])
    if isinstance(node[1], tuple):
        inner = f"({inner})"
    return f"List {inner}"


def matches_type(value: Any, node: TypeNode) -> bool:
    """Structural check that a grammar value inhabits a semantic type."""
    if node == "Bool":
        return isinstance(value, bool)
    if node == "Int":
        return isinstance(value, int) and not isinstance(value, bool)
    if node == "Nat":
        return isinstance(value, int) and not isinstance(value, bool) and value >= 0
    if node == "String":
        return isinstance(value, str)
    if isinstance(node, tuple) and node[0] == "List":
        return isinstance(value, list) and all(matches_type(v, node[1]) for v in value)
    return False


def _lean_string(text: str) -> str:
    out = ['"']
    for ch in text:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def encode_lean(value: Any, node: TypeNode) -> str:
    """Encode a grammar value as a Lean expression of the given type.

    Negative integers are parenthesized so the result is valid in any
    application context; empty lists carry a type ascription.
    """
    if not matches_type(value, node):
        raise CorpusError(
            f"value {encode_text(value)} does not match type {format_type(node)}"
        )
    if node == "Bool":
        return "true" if value else "false"
    if node in ("Int", "Nat"):
        return f"({value})" if value < 0 else str(value)
    if node == "String":
        return _lean_string(value)
    # List case.
    if not value:
        return f"([] : {format_type(node)})"
    items = ", ".join(encode_lean(v, node[1]) for v in value)
    return f"[{items}]"
