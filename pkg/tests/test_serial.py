"""Serial engines: golden parses, rejects, and NFA/DFA agreement."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import columns_as_sets
from slpf import parse_serial_dfa, parse_serial_nfa, recognize_serial


@pytest.mark.parametrize("engine", [parse_serial_nfa, parse_serial_dfa])
def test_golden_parse_ab(engine, e2, sid_of):
    slpf = engine(e2, b"ab")
    assert slpf.accepted
    assert columns_as_sets(slpf) == [{sid_of[2]}, {sid_of[4]}, {sid_of[9]}]


@pytest.mark.parametrize("engine", [parse_serial_nfa, parse_serial_dfa])
def test_golden_parse_abaaba(engine, e2, sid_of):
    slpf = engine(e2, b"abaaba")
    want = [{2}, {4}, {6}, {7}, {4}, {6}, {10}]
    assert columns_as_sets(slpf) == [{sid_of[k] for k in col} for col in want]


def test_empty_text_accepts_when_nullable(e2, e3):
    s = parse_serial_dfa(e2, b"")
    assert s.accepted and columns_as_sets(s) == [{e2.table.segment_id("1( )1 ⊣")}]
    r = parse_serial_dfa(e3, b"")
    assert not r.accepted and r.reject_offset == 0


@pytest.mark.parametrize("engine", [parse_serial_nfa, parse_serial_dfa])
@pytest.mark.parametrize(
    "text,offset",
    [(b"ba", 1), (b"abb", 3), (b"abc", 3), (b"b", 1), (b"aZ", 2)],
)
def test_reject_offsets(engine, e2, text, offset):
    slpf = engine(e2, text)
    assert not slpf.accepted
    assert slpf.reject_offset == offset


def test_reject_keeps_forward_columns_then_zeros(e2):
    slpf = parse_serial_dfa(e2, b"abb")
    # alive through "ab", the second b kills the run: column 3 is empty
    assert [bool(slpf.mask(r)) for r in range(4)] == [True, True, True, False]


def test_mid_text_death_zeroes_every_later_column(e2):
    slpf = parse_serial_dfa(e2, b"bbaa")
    assert slpf.reject_offset == 1
    assert all(not slpf.mask(r) for r in range(1, 5))


def test_engines_agree_column_for_column(e1, e2, e3, e4, e5):
    texts = [b"", b"a", b"b", b"ab", b"ba", b"aab", b"abab", b"aaabbb", b"aba" * 7]
    for cre in (e1, e2, e3, e4, e5):
        for text in texts:
            a = parse_serial_nfa(cre, text)
            b = parse_serial_dfa(cre, text)
            assert a.accepted == b.accepted
            assert a.reject_offset == b.reject_offset
            assert np.array_equal(a.columns, b.columns)


def test_recognizer_matches_parser(e2, e3):
    for cre in (e2, e3):
        for text in (b"", b"ab", b"ba", b"abab", b"x"):
            assert recognize_serial(cre, text) == parse_serial_dfa(cre, text).accepted


def test_timings_are_recorded(e2):
    slpf = parse_serial_dfa(e2, b"abab")
    assert slpf.timings.parse_ns > 0
    assert slpf.timings.reach_ns == 0 and slpf.timings.join_ns == 0
    assert slpf.timings.build_ns == slpf.timings.parse_ns
