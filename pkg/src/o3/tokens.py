"""Session tokens and integrity keys.

A token is a tuple of line numbers with the most recent call site first, so
``next_token`` is a prepend.  The prefix order on keys reads the flattened
``line :: token`` list from the outermost call site inwards.
"""
from __future__ import annotations

from typing import Tuple

Token = Tuple[int, ...]
Key = Tuple[int, Token]

TAU0: Token = ()


class _Placeholder:
    """The token variable ``t`` used inside procedure declarations."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "t"

    def __reduce__(self):
        return (_Placeholder, ())


PLACEHOLDER = _Placeholder()


class PlaceholderToken(Exception):
    """A placeholder token reached a place that needs a concrete token."""


def is_concrete(token) -> bool:
    return isinstance(token, tuple)


def next_token(line: int, token: Token) -> Token:
    if line < 1:
        raise ValueError(f"line numbers are positive, got {line}")
    if not is_concrete(token):
        raise PlaceholderToken(f"next_token({line}, {token!r})")
    return (line,) + token


def root_path(key: Key) -> Tuple[int, ...]:
    """``line :: token`` read from the outermost call site inwards."""
    line, token = key
    if not is_concrete(token):
        raise PlaceholderToken(f"key ({line}, {token!r}) has no concrete token")
    return tuple(reversed(token)) + (line,)


def is_prefix(k1: Key, k2: Key) -> bool:
    """Reflexive prefix order on keys."""
    a, b = root_path(k1), root_path(k2)
    return len(a) <= len(b) and b[: len(a)] == a


def strict_prefix(k1: Key, k2: Key) -> bool:
    return k1 != k2 and is_prefix(k1, k2)


def disjoint(k1: Key, k2: Key) -> bool:
    return k1 != k2 and not is_prefix(k1, k2) and not is_prefix(k2, k1)


def key_json(key: Key) -> list:
    line, token = key
    return [line, list(token) if is_concrete(token) else "t"]


def parse_key_spec(spec: str) -> Key:
    """Parse ``"4"`` or ``"1@7"`` / ``"1@5.7"`` (token written most-recent first)."""
    if "@" not in spec:
        raise ValueError(f"not a key spec: {spec!r}")
    line, _, tok = spec.partition("@")
    token = tuple(int(x) for x in tok.split(".") if x) if tok else ()
    return int(line), token
