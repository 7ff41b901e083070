"""Acceptance gate: one test per shipping criterion.

Each ``pytest -v`` line below is the pass/fail verdict for one criterion.
The worked example (ab|a)* anchors the golden tables (conftest keys them by
segment content); the trailing-repeat family pins automaton growth; the
rest exercise randomized differential checks, megabyte-scale bit equality,
throughput bounds, codec losslessness, and bounded repeat unrolling.
"""

from __future__ import annotations

import math
import os
import random
import statistics
import time

import numpy as np
import pytest

from conftest import E2, E2_SEGMENTS, columns_as_sets, ids
from slpf import (
    compile_re,
    compress_to_dfa,
    decode,
    encode,
    enumerate_lsts,
    parse_parallel,
    parse_serial_dfa,
    parse_serial_nfa,
    read_slpf,
    render_lst,
    replay,
    write_slpf,
)
from slpf.oracle import check_re, random_re, sample_matching_text, texts_up_to
from slpf.segments import bit
from test_automata import E2_DFA_TRANS, E2_MEDFA_TRANS, S11, T1, T2, T3
from test_forest import FOUR_TREES
from test_segments import E2_FINAL, E2_FOLSEG, E2_INITIAL

ONE_MB = 1 << 20
TEN_MB = 10 << 20

# pinned tolerances
RANDOM_RES = 200  # differential seeds (criterion: at least 200)
MAX_TEXT_LEN = 5  # exhaustive text length for the differential checks
SMALL_CHUNKS = (1, 2, 3, 5)
BIG_CHUNKS = (1, 2, 4, 8, 16)
PAR_SPEEDUP = 0.70  # multicore parse time / serial parse time, at most
JOIN_SHARE = 0.05  # join phase / whole parse, at most
SINGLE_CHUNK_OVERHEAD = 1.3  # one-chunk parallel / serial, at most
MEMORY_SLACK = 1.10  # column store words / (n+1)*ceil(segments/64), at most

# the frozen ~40-symbol random pattern used by the megabyte-scale checks;
# seed 653 is the first one whose language pumps to arbitrary length
R40_SEED = 653


def _mask(sid_of, keys) -> int:
    acc = 0
    for k in keys:
        acc |= bit(sid_of[k])
    return acc


def _cell(cre, letter: str) -> int:
    return cre.nre.partition.byte_to_cell[ord(letter)]


@pytest.fixture(scope="module")
def one_mb_e2(e2):
    return sample_matching_text(e2, random.Random(11), ONE_MB)


@pytest.fixture(scope="module")
def random40():
    src = random_re(random.Random(R40_SEED), max_terminals=16)
    cre = compile_re(src)
    assert cre.nre.size == 40
    return cre


@pytest.fixture(scope="module")
def one_mb_r40(random40):
    return sample_matching_text(random40, random.Random(R40_SEED), ONE_MB)


@pytest.fixture(scope="module")
def ten_mb_e2(e2):
    return sample_matching_text(e2, random.Random(7), TEN_MB)


def test_c01_worked_example_segment_table_exact():
    t0 = time.monotonic()
    cre = compile_re(E2)
    sid = {key: cre.table.segment_id(text) for key, text in E2_SEGMENTS.items()}
    assert cre.table.size == 10
    rendered = {cre.table.render_segment(s) for s in range(1, 11)}
    assert rendered == set(E2_SEGMENTS.values())
    assert ids(cre.table.imask) == {sid[k] for k in E2_INITIAL}
    assert ids(cre.table.fmask) == {sid[k] for k in E2_FINAL}
    for key, fols in E2_FOLSEG.items():
        assert ids(cre.table.folseg[sid[key]]) == {sid[f] for f in fols}
    assert time.monotonic() - t0 < 1.0


def test_c02_worked_example_dfa_and_multi_entry_dfa_exact(e2, sid_of):
    dfa = e2.dfa
    assert dfa.num_states == 3
    assert set(dfa.states[1:]) == {_mask(sid_of, s) for s in (T1, T2, T3)}
    assert dfa.states[dfa.start] == _mask(sid_of, T1)
    assert all(dfa.is_final(q) for q in range(1, 4))
    for (src, letter), dst in E2_DFA_TRANS.items():
        got = dfa.step_id(dfa.state_of(_mask(sid_of, src)), _cell(e2, letter))
        assert dfa.states[got] == _mask(sid_of, dst)
    for src, letter in ((T1, "b"), (T3, "b")):
        assert dfa.step_id(dfa.state_of(_mask(sid_of, src)), _cell(e2, letter)) == 0

    medfa = e2.medfa
    assert medfa.num_states == 13
    singletons = {bit(sid_of[k]) for k in range(1, 11)}
    subsets = {_mask(sid_of, s) for s in (S11, T2, T3)}
    assert set(medfa.states[1:]) == singletons | subsets
    assert len(medfa.entries) - 1 == 10
    for sid in range(1, 11):
        assert medfa.states[medfa.entry(sid)] == bit(sid)
    live = set()
    for (src, letter), dst in E2_MEDFA_TRANS.items():
        got = medfa.step_id(medfa.state_of(_mask(sid_of, src)), _cell(e2, letter))
        assert medfa.states[got] == _mask(sid_of, dst)
        live.add((medfa.state_of(_mask(sid_of, src)), _cell(e2, letter)))
    for q in range(1, medfa.num_states + 1):
        for letter in "ab":
            if (q, _cell(e2, letter)) not in live:
                assert medfa.step_id(q, _cell(e2, letter)) == 0


def test_c03_trailing_repeat_family_matches_pinned_state_counts():
    t0 = time.monotonic()
    lines = []
    for k in range(1, 10):
        cre = compile_re(f"(a|b)*a(a|b){{{k}}}")
        want = (4 * k + 10, 2 ** (k + 1) + 1, 2 ** (k + 1) + 6 * k + 10, 4 * k + 10)
        got = (
            cre.nfa.size,
            cre.dfa.num_states,
            cre.medfa.num_states,
            len(cre.medfa.entries) - 1,
        )
        if got != want:
            lines.append(f"k={k}: (nfa, dfa, medfa, entries) pinned {want}, built {got}")
    assert time.monotonic() - t0 < 30.0
    if lines:
        pytest.fail(
            "pinned automaton sizes for (a|b)*a(a|b){k} not met:\n  "
            + "\n  ".join(lines)
            + "\n  the built machines follow nfa=2k+7, dfa=2^(k+1)+1,"
            " medfa=2^(k+1)+3k+7, entries=nfa for all k=1..9 (regression-pinned"
            " in test_automata.test_family_scaling_with_trailing_repeat); the"
            " dfa column matches the pinned table exactly, the other three"
            " come out smaller at every k."
        )


def test_c04_golden_parses_byte_exact(e2, e3, sid_of):
    ab = parse_serial_dfa(e2, b"ab")
    assert ab.accepted
    assert columns_as_sets(ab) == [{sid_of[2]}, {sid_of[4]}, {sid_of[9]}]

    six = parse_serial_dfa(e2, b"abaaba")
    want = [{2}, {4}, {6}, {7}, {4}, {6}, {10}]
    assert columns_as_sets(six) == [{sid_of[k] for k in col} for col in want]
    assert [render_lst(e2.table, p) for p in enumerate_lsts(six)] == [
        "1(2(3(a4 b5)3)2 2(a6)2 2(3(a4 b5)3)2 2(a6)2)1"
    ]

    four = parse_serial_dfa(e3, b"abab")
    assert [render_lst(e3.table, p) for p in enumerate_lsts(four)] == FOUR_TREES

    for cre, text in ((e2, b"ab"), (e2, b"abaaba"), (e3, b"abab")):
        ser = parse_serial_dfa(cre, text)
        assert np.array_equal(parse_serial_nfa(cre, text).columns, ser.columns)
        par = parse_parallel(cre, text, chunks=3, workers=1)
        assert np.array_equal(par.columns, ser.columns)


def test_c05_randomized_differential_checks_have_zero_mismatches():
    failures = []
    kinds: set[str] = set()
    epsilons = 0
    for seed in range(RANDOM_RES):
        cre = compile_re(random_re(random.Random(seed)))
        kinds |= {kind for _, kind, _ in cre.nre.op_table}
        epsilons += bool(cre.nre.epsilons)
        problems = check_re(
            cre, max_len=MAX_TEXT_LEN, chunk_counts=SMALL_CHUNKS, check_codec=True
        )
        failures.extend(
            f"seed {seed} {cre.source.decode()}: [{cat}] {msg}"
            for cat, msg in problems
        )
    assert not failures, "\n".join(failures[:20])
    # the batch must have exercised every supported operator
    assert {"union", "concat", "star", "cross", "optional", "repeat"} <= kinds
    assert epsilons > 0


def test_c06_megabyte_texts_parallel_bit_identical_to_serial(
    e2, random40, one_mb_e2, one_mb_r40
):
    for cre, text in ((e2, one_mb_e2), (random40, one_mb_r40)):
        assert len(text) == ONE_MB
        ser = parse_serial_dfa(cre, text)
        assert ser.accepted
        bad = bytearray(text)
        bad[len(bad) * 3 // 4] = ord("z")  # outside both alphabets
        bad = bytes(bad)
        sbad = parse_serial_dfa(cre, bad)
        assert not sbad.accepted
        for c in BIG_CHUNKS:
            par = parse_parallel(cre, text, chunks=c, workers=1)
            assert par.accepted
            assert np.array_equal(par.columns, ser.columns)
            pbad = parse_parallel(cre, bad, chunks=c, workers=1)
            assert not pbad.accepted
            assert pbad.reject_offset == sbad.reject_offset
            assert np.array_equal(pbad.columns, sbad.columns)


@pytest.mark.skipif(
    (os.cpu_count() or 1) < 4,
    reason="multicore speedup target needs at least 4 hardware threads",
)
def test_c07_multicore_speedup_and_join_share(e2, ten_mb_e2):
    workers = 4
    serial = []
    for _ in range(5):
        run = parse_serial_dfa(e2, ten_mb_e2)
        assert run.accepted
        serial.append(run.timings.parse_ns)
    parallel = []
    for _ in range(5):
        run = parse_parallel(
            e2, ten_mb_e2, chunks=workers, workers=workers, force_pool=True
        )
        assert run.accepted
        parallel.append(run.timings)
    ser_med = statistics.median(serial)
    par_med = statistics.median(t.parse_ns for t in parallel)
    assert par_med <= PAR_SPEEDUP * ser_med, (
        f"parallel median {par_med} ns vs serial median {ser_med} ns "
        f"(ratio {par_med / ser_med:.2f}, need <= {PAR_SPEEDUP})"
    )
    join_share = statistics.median(t.join_ns / t.parse_ns for t in parallel)
    assert join_share <= JOIN_SHARE, f"join takes {join_share:.1%} of the parse"


def test_c08_single_chunk_parallel_overhead_within_bound(e2, ten_mb_e2):
    serial = []
    for _ in range(3):
        run = parse_serial_dfa(e2, ten_mb_e2)
        assert run.accepted
        serial.append(run.timings.parse_ns)
    parallel = []
    for _ in range(3):
        run = parse_parallel(e2, ten_mb_e2, chunks=1, workers=1)
        assert run.accepted
        parallel.append(run.timings.parse_ns)
    ser_med = statistics.median(serial)
    par_med = statistics.median(parallel)
    assert par_med <= SINGLE_CHUNK_OVERHEAD * ser_med, (
        f"one-chunk parallel median {par_med} ns vs serial median {ser_med} ns "
        f"(ratio {par_med / ser_med:.2f}, need <= {SINGLE_CHUNK_OVERHEAD})"
    )


def test_c09_codec_lossless_on_corpus_and_memory_bound(
    e1, e2, e3, e4, e5, one_mb_e2
):
    corpus = []
    for cre in (e1, e2, e3, e4, e5):
        letters = bytes(min(cell) for cell in cre.nre.partition.cells)
        corpus.extend((cre, t) for t in texts_up_to(letters, 4))
    for seed in range(20):
        cre = compile_re(random_re(random.Random(seed)))
        letters = bytes(min(cell) for cell in cre.nre.partition.cells)
        corpus.extend((cre, t) for t in texts_up_to(letters, 3))
    corpus.append((e2, one_mb_e2))

    checked = 0
    for cre, text in corpus:
        s = parse_serial_dfa(cre, text)
        if not s.accepted:
            continue
        enc = encode(s)
        assert np.array_equal(decode(enc, cre, text).columns, s.columns)
        assert np.array_equal(
            decode(read_slpf(write_slpf(enc)), cre, text).columns, s.columns
        )
        rep = replay(compress_to_dfa(s), cre, text)
        assert np.array_equal(rep.columns, s.columns)
        checked += 1
    assert checked >= 100  # the corpus really exercised the codec

    big = parse_serial_dfa(e2, one_mb_e2)
    bound = MEMORY_SLACK * (big.n + 1) * math.ceil(e2.size / 64)
    assert big.memory_words <= bound, (
        f"column store holds {big.memory_words} words, bound {bound:.0f}"
    )


def test_c10_unbounded_repeat_parses_under_a_repeat_bound(e5, e5_deep):
    t0 = time.monotonic()
    assert e5.table.size == 11
    assert e5_deep.table.size == 20
    for cre, want_count in ((e5, 1), (e5_deep, 4)):
        s = parse_serial_dfa(cre, b"a")
        assert s.accepted
        trees = [render_lst(cre.table, p) for p in enumerate_lsts(s)]
        assert len(trees) == want_count == len(set(trees))
        assert "1(2(3(a4)3)2)1" in trees
    assert time.monotonic() - t0 < 1.0
