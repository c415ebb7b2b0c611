import pytest
from hypothesis import given, strategies as st

from o3.tokens import (
    PLACEHOLDER, TAU0, PlaceholderToken, disjoint, is_prefix, key_json, next_token, parse_key_spec,
    root_path, strict_prefix,
)

lines = st.integers(min_value=1, max_value=50)
tokens = st.lists(lines, max_size=5).map(tuple)
keys = st.tuples(lines, tokens)


def test_next_token_prepends():
    assert next_token(4, TAU0) == (4,)
    assert next_token(5, (4,)) == (5, 4)


def test_placeholder_has_no_successor():
    with pytest.raises(PlaceholderToken):
        next_token(1, PLACEHOLDER)


def test_call_key_prefixes_its_body():
    # the call on line 4 prefixes every key of the body it spawns
    assert strict_prefix((4, ()), (1, (4,)))
    assert strict_prefix((4, ()), (3, (5, 4)))
    assert not is_prefix((1, (4,)), (4, ()))
    assert disjoint((4, ()), (5, ()))
    assert disjoint((1, (4,)), (1, (5,)))


def test_key_json_and_spec():
    assert key_json((1, (4,))) == [1, [4]]
    assert key_json((2, PLACEHOLDER)) == [2, "t"]
    assert parse_key_spec("1@5.7") == (1, (5, 7))
    assert parse_key_spec("3@") == (3, ())


@given(lines, tokens)
def test_determinism(l, t):
    assert next_token(l, t) == next_token(l, t)


@given(lines, tokens, lines, tokens)
def test_injectivity(l1, t1, l2, t2):
    if (l1, t1) != (l2, t2):
        assert next_token(l1, t1) != next_token(l2, t2)


@given(keys)
def test_prefix_reflexive_strict_irreflexive(k):
    assert is_prefix(k, k)
    assert not strict_prefix(k, k)


@given(keys, keys)
def test_prefix_antisymmetric(a, b):
    if is_prefix(a, b) and is_prefix(b, a):
        assert a == b


@given(keys, keys, keys)
def test_prefix_transitive(a, b, c):
    if strict_prefix(a, b) and strict_prefix(b, c):
        assert strict_prefix(a, c)


@given(keys, lines)
def test_body_keys_extend_call_key(k, l):
    assert strict_prefix(k, (l, next_token(*k)))


@given(keys)
def test_root_path_ends_with_line(k):
    assert root_path(k)[-1] == k[0]
    assert len(root_path(k)) == len(k[1]) + 1
