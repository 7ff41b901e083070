"""Front end: parsing, numbering, alphabet partition, repeat expansion."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slpf.oracle import random_re
from slpf.syntax import (
    ReSyntaxError,
    UnsupportedReError,
    number_re,
    parse_re,
)


def numbered(source: str):
    return number_re(parse_re(source), source.encode())


# ---------------------------------------------------------------------------
# parsing errors carry the offending byte offset


@pytest.mark.parametrize(
    "source,offset",
    [
        ("a(b", 1),
        ("ab)", 2),
        ("*a", 0),
        ("a{2,1}", 6),
        ("a{", 2),
        ("[ab", 0),
        ("a\\", 2),
    ],
)
def test_syntax_errors_report_offset(source, offset):
    with pytest.raises(ReSyntaxError) as err:
        parse_re(source)
    assert err.value.offset == offset


def test_high_code_points_unsupported():
    with pytest.raises(UnsupportedReError):
        parse_re("aé€")


# ---------------------------------------------------------------------------
# numbering: preorder, root = 1, one number per terminal/epsilon/operator


def test_numbering_star_union_concat():
    nre = numbered("(ab|a)*")
    assert nre.op_table == [(1, "star", 1), (2, "union", 2), (3, "concat", 2)]
    assert nre.terminals == {
        4: frozenset(b"a"),
        5: frozenset(b"b"),
        6: frozenset(b"a"),
    }
    assert nre.size == 6


def test_numbering_cross_with_nested_concat():
    nre = numbered("(a|b|ab)+")
    assert nre.op_table == [(1, "cross", 1), (2, "union", 3), (5, "concat", 2)]
    assert nre.terminals == {
        3: frozenset(b"a"),
        4: frozenset(b"b"),
        6: frozenset(b"a"),
        7: frozenset(b"b"),
    }


def test_numbering_epsilon_branch():
    nre = numbered("(a|)b")
    assert nre.op_table == [(1, "concat", 2), (2, "union", 2)]
    assert nre.epsilons == {4}
    assert nre.terminals == {3: frozenset(b"a"), 5: frozenset(b"b")}


def test_numbers_are_consecutive_preorder():
    nre = numbered("((a|b)*c){2}x?")
    nums = sorted(
        [num for num, _, _ in nre.op_table]
        + list(nre.terminals)
        + list(nre.epsilons)
    )
    assert nums == list(range(1, nre.size + 1))


# ---------------------------------------------------------------------------
# alphabet partition: byte classes that the pattern cannot distinguish


def test_partition_splits_overlapping_classes():
    nre = numbered("[a-c][b-d]")
    cells = {frozenset(c) for c in nre.partition.cells}
    assert cells == {frozenset(b"a"), frozenset(b"bc"), frozenset(b"d")}


def test_partition_wildcard_excludes_newline():
    nre = numbered("a.")
    merged = set()
    for cell in nre.partition.cells:
        merged |= cell
    assert 0x0A not in merged
    assert nre.partition.cell_of(0x0A) is None
    assert len(merged) == 255


def test_partition_maps_every_byte_once():
    nre = numbered("[ab]c|d")
    part = nre.partition
    for b in range(256):
        cid = part.byte_to_cell[b]
        if cid == 0xFF:
            assert all(b not in cell for cell in part.cells)
        else:
            assert b in part.cells[cid]


# ---------------------------------------------------------------------------
# bounded repeats expand before numbering; the numbering stays flat


def test_repeat_exact_is_flat_copies():
    nre = numbered("a{3}")
    kinds = {kind for _, kind, _ in nre.op_table}
    assert kinds == {"repeat"}
    assert len(nre.terminals) == 3


def test_repeat_low_high_adds_optional_tail():
    nre = numbered("a{1,3}")
    kinds = [kind for _, kind, _ in nre.op_table]
    assert kinds.count("opttail") == 2
    assert len(nre.terminals) == 3


def test_repeat_unbounded_ends_in_star():
    nre = numbered("a{2,}")
    kinds = [kind for _, kind, _ in nre.op_table]
    assert "star" in kinds
    assert len(nre.terminals) == 3  # two copies plus the starred one


# ---------------------------------------------------------------------------
# properties


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_random_sources_compile_deterministically(seed):
    source = random_re(random.Random(seed))
    a = number_re(parse_re(source), source.encode())
    b = number_re(parse_re(source), source.encode())
    assert a.op_table == b.op_table
    assert a.terminals == b.terminals
    assert a.size == b.size


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_random_sources_number_preorder(seed):
    source = random_re(random.Random(seed))
    nre = number_re(parse_re(source), source.encode())
    nums = sorted(
        [num for num, _, _ in nre.op_table]
        + list(nre.terminals)
        + list(nre.epsilons)
    )
    assert nums == list(range(1, nre.size + 1))
