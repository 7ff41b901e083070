"""Shared linearized parse forests (SLPF) for ambiguous regular expressions.

A pattern is compiled to a table of segments: the maximal meta/letter
factors of its linearized syntax trees.  Parsing a text then yields *all*
of its syntax trees at once as an (n+1)-column bitmask forest over those
segments — built either serially (NFA or DFA subset scans) or by a
data-parallel reach/join/build pipeline driven by a multi-entry DFA.
"""

from .automata import CompiledRe, DfaExplosionError, compile_re
from .codec import (
    EncodedSlpf,
    SlpfDfa,
    compress_to_dfa,
    decode,
    encode,
    read_slpf,
    replay,
    write_slpf,
)
from .forest import (
    COUNT_SATURATION,
    MatchSpan,
    ParseTimings,
    Slpf,
    count_lsts,
    enumerate_lsts,
    get_children,
    get_matches,
    is_clean,
    render_lst,
)
from .parallel import (
    ChunkPlan,
    build_and_merge,
    join,
    parse_parallel,
    plan_chunks,
    reach,
    recognize_parallel,
)
from .segments import SegmentExplosionError, SegmentTable, compute_segments
from .serial import parse_serial_dfa, parse_serial_nfa, recognize_serial
from .syntax import (
    NumberedRE,
    ReError,
    ReSyntaxError,
    UnsupportedReError,
    number_re,
    parse_re,
)

__all__ = [
    "COUNT_SATURATION",
    "ChunkPlan",
    "CompiledRe",
    "DfaExplosionError",
    "EncodedSlpf",
    "MatchSpan",
    "NumberedRE",
    "ParseTimings",
    "ReError",
    "ReSyntaxError",
    "SegmentExplosionError",
    "SegmentTable",
    "Slpf",
    "SlpfDfa",
    "UnsupportedReError",
    "build_and_merge",
    "compile_re",
    "compress_to_dfa",
    "compute_segments",
    "count_lsts",
    "decode",
    "encode",
    "enumerate_lsts",
    "get_children",
    "get_matches",
    "is_clean",
    "join",
    "number_re",
    "parse_parallel",
    "parse_re",
    "parse_serial_dfa",
    "parse_serial_nfa",
    "plan_chunks",
    "reach",
    "read_slpf",
    "recognize_parallel",
    "recognize_serial",
    "render_lst",
    "replay",
    "write_slpf",
]
