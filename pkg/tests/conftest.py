"""Shared fixtures: the worked example patterns and golden-table helpers."""

from __future__ import annotations

import pytest

from slpf import compile_re
from slpf.segments import iter_bits

# The running examples used throughout the golden tests.
E1 = "(a|ab|aba)+"
E2 = "(ab|a)*"
E3 = "(a|b|ab)+"
E4 = "(a|)b"
E5 = "(a*|ab)+"

# The ten segments of E2, keyed by their first appearance in the shortest
# accepted strings (ε, ab, a, ab, abab, aba, aab, aa, ab, a).  All golden
# tables for E2 are written against these keys and translated to the
# engine's own ids through `sid_of`, so the tests pin content, not ids.
E2_SEGMENTS = {
    1: "1( )1 ⊣",
    2: "1( 2( 3( a4",
    3: "1( 2( a6",
    4: "b5",
    5: ")3 )2 2( 3( a4",
    6: ")3 )2 2( a6",
    7: ")2 2( 3( a4",
    8: ")2 2( a6",
    9: ")3 )2 )1 ⊣",
    10: ")2 )1 ⊣",
}


@pytest.fixture(scope="session")
def e1():
    return compile_re(E1)


@pytest.fixture(scope="session")
def e2():
    return compile_re(E2)


@pytest.fixture(scope="session")
def e3():
    return compile_re(E3)


@pytest.fixture(scope="session")
def e4():
    return compile_re(E4)


@pytest.fixture(scope="session")
def e5():
    return compile_re(E5)


@pytest.fixture(scope="session")
def e5_deep():
    return compile_re(E5, repeat_limit=2)


@pytest.fixture(scope="session")
def sid_of(e2):
    """Golden key -> engine segment id for E2."""
    return {key: e2.table.segment_id(text) for key, text in E2_SEGMENTS.items()}


def ids(mask: int) -> set[int]:
    return set(iter_bits(mask))


def columns_as_sets(slpf) -> list[set[int]]:
    return [ids(slpf.mask(r)) for r in range(slpf.n + 1)]
