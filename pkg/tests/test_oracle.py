"""The oracle itself: tree derivation, run search, generators, cross-checks."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slpf import compile_re, enumerate_lsts, parse_serial_dfa
from slpf.oracle import (
    ast_lsts,
    check_re,
    factor_lst,
    lst_tokens,
    nfa_run_lsts,
    random_re,
    sample_text,
    texts_up_to,
    useless_segments,
    within_repeat_limit,
)

END = ("$", 0)


def test_token_repetition_counter():
    open1 = ("(", 1)
    assert within_repeat_limit((open1, ("t", 2, 0), open1), 1)
    assert not within_repeat_limit((open1, open1, ("t", 2, 0)), 1)
    assert within_repeat_limit((open1, open1, ("t", 2, 0)), 2)
    # a terminal resets the counters: the same paren may reappear after it
    toks = (open1, ("t", 2, 0), open1, ("t", 2, 0), open1)
    assert within_repeat_limit(toks, 1)


def test_tree_derivation_matches_run_search(e3):
    text = b"abab"
    derived = ast_lsts(e3.nre, text, e3.repeat_limit)
    runs = nfa_run_lsts(e3.table, e3.text_cells(text))
    assert derived == {lst_tokens(e3.table, run) for run in runs}
    assert len(derived) == 4


def test_tree_derivation_epsilon_case(e4):
    derived = ast_lsts(e4.nre, b"b", e4.repeat_limit)
    (tokens,) = derived
    assert tokens == (
        ("(", 1), ("(", 2), ("e", 4), (")", 2), ("t", 5, e4.nre.partition.byte_to_cell[ord("b")]),
        (")", 1), END,
    )


def test_run_search_agrees_with_forest_enumeration(e2):
    for text in (b"", b"ab", b"abaaba", b"aab"):
        runs = nfa_run_lsts(e2.table, e2.text_cells(text))
        assert runs == sorted(enumerate_lsts(parse_serial_dfa(e2, text)))


def test_factoring_round_trips_paths(e3):
    slpf = parse_serial_dfa(e3, b"abab")
    for path in enumerate_lsts(slpf):
        tokens = lst_tokens(e3.table, path)
        assert factor_lst(e3.table, tokens) == path
    assert factor_lst(e3.table, (("(", 9), END)) is None


def test_useless_segments_flags_nothing_on_compiled_tables(e1, e2, e3, e4, e5):
    for cre in (e1, e2, e3, e4, e5):
        assert useless_segments(cre.table) == []


def test_text_generators():
    assert list(texts_up_to(b"ab", 2)) == [b"", b"a", b"b", b"aa", b"ab", b"ba", b"bb"]
    rng = random.Random(7)
    for _ in range(20):
        t = sample_text(rng, b"ab", 5)
        assert len(t) <= 5 and set(t) <= set(b"ab")


def test_random_patterns_are_reproducible_and_small():
    a = random_re(random.Random(99))
    b = random_re(random.Random(99))
    assert a == b
    for seed in range(40):
        source = random_re(random.Random(seed))
        cre = compile_re(source)
        assert len(cre.nre.terminals) <= 8


PINNED = [
    ("(a|ab|aba)+", 1),
    ("(ab|a)*", 1),
    ("(a|b|ab)+", 1),
    ("(a|)b", 1),
    ("(a*|ab)+", 1),
    ("(a*|ab)+", 2),
    ("a{1,3}b?", 1),
    ("(a|b)*a(a|b){2}", 1),
    ("a{2,}", 1),
    ("(ab){0,2}", 1),
]


@pytest.mark.parametrize("source,limit", PINNED)
def test_cross_checks_pass_on_pinned_patterns(source, limit):
    cre = compile_re(source, repeat_limit=limit)
    assert check_re(cre, max_len=4, check_codec=True) == []


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_cross_checks_pass_on_random_patterns(seed):
    cre = compile_re(random_re(random.Random(seed)))
    assert check_re(cre, max_len=3, chunk_counts=(2, 3)) == []
