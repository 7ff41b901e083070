"""Segment tables: the golden example, follower sets, repeat limiting."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import E2_SEGMENTS, ids
from slpf import SegmentExplosionError, compile_re, compute_segments
from slpf.oracle import random_re, useless_segments
from slpf.segments import bit, iter_bits
from slpf.syntax import number_re, parse_re

# follower segments of each E2 segment, in golden keys (end-of-text
# segments have none)
E2_FOLSEG = {
    1: set(),
    2: {4},
    3: {7, 8, 10},
    4: {5, 6, 9},
    5: {4},
    6: {7, 8, 10},
    7: {4},
    8: {7, 8, 10},
    9: set(),
    10: set(),
}

E2_INITIAL = {1, 2, 3}
E2_FINAL = {1, 9, 10}


def test_golden_segments_exactly(e2):
    rendered = {e2.table.render_segment(s) for s in range(1, e2.table.size + 1)}
    assert rendered == set(E2_SEGMENTS.values())
    assert e2.table.size == 10


def test_golden_initial_final_classification(e2, sid_of):
    assert ids(e2.table.imask) == {sid_of[k] for k in E2_INITIAL}
    assert ids(e2.table.fmask) == {sid_of[k] for k in E2_FINAL}


def test_golden_follower_segments(e2, sid_of):
    for key, fols in E2_FOLSEG.items():
        assert ids(e2.table.folseg[sid_of[key]]) == {sid_of[f] for f in fols}


def test_segment_counts_of_worked_examples(e1, e3, e4, e5, e5_deep):
    assert e3.table.size == 12
    assert e5.table.size == 11
    assert e5_deep.table.size == 20
    assert e4.table.size == 4
    assert e1.table.size > 0


def test_end_cells_partition_segments(e2):
    t = e2.table
    with_text = [s for s in range(1, t.size + 1) if t.segments[s].end[0] == "t"]
    enders = [s for s in range(1, t.size + 1) if t.segments[s].end[0] == "$"]
    assert len(with_text) + len(enders) == t.size
    assert set(iter_bits(t.fmask)) == set(enders)


def test_digest_tracks_limit_and_pattern():
    a1 = compile_re("(a*|ab)+", repeat_limit=1).table.digest()
    a2 = compile_re("(a*|ab)+", repeat_limit=2).table.digest()
    b1 = compile_re("(ab|a)*").table.digest()
    assert len({a1, a2, b1}) == 3
    assert a1 == compile_re("(a*|ab)+", repeat_limit=1).table.digest()


def test_explosion_guard():
    nre = number_re(parse_re("(a*|ab)+"), b"(a*|ab)+")
    with pytest.raises(SegmentExplosionError):
        compute_segments(nre, repeat_limit=3, max_segments=8)


def test_meta_respects_repeat_limit(e5_deep):
    t = e5_deep.table
    for s in range(1, t.size + 1):
        meta = t.segments[s].meta
        for sym in set(meta):
            assert meta.count(sym) <= 2


def test_segment_ids_are_dense_bits(e2):
    t = e2.table
    assert set(iter_bits((1 << t.size) - 1)) == set(range(1, t.size + 1))
    assert bit(3) == 4


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_random_tables_have_no_useless_segments(seed):
    cre = compile_re(random_re(random.Random(seed)))
    assert useless_segments(cre.table) == []


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_random_tables_meta_within_limit(seed):
    cre = compile_re(random_re(random.Random(seed)))
    for s in range(1, cre.table.size + 1):
        meta = cre.table.segments[s].meta
        for sym in set(meta):
            assert meta.count(sym) <= 1
