"""Column encoding and replay compression for stored forests.

Pair encoding.  Every segment σ in column C_r is a follower of some
predecessor whose end letter reads x_r, so σ is the second component of a
pair ⟨a_#, σ⟩ where a_# is a numbered character read as x_r.  The pairs of
one input cell form a fixed universe — usually far smaller than the
segment count, because a numbered character has few followers — and a
column is stored as the index bitstring of its members inside that
universe (every pair naming a stored σ is set).  Bitstrings of at most 64
bits are inlined into the record; wider ones go to a deduplicating side
table (the same column tends to recur) and the record keeps its index.
Column C_0 has no preceding character and is stored verbatim as the
ℓ-bit segment bitstring.

Replay compression.  A forest's distinct clean columns form the states of
a replay automaton for that one text.  The (state, character) step is not
single-valued — the same clean column can recur with different successors
because cleanness looks at the remaining text — so each key holds its
run-length successor sequence in text order and replay walks the runs
with cursors.  Replaying the original text from C_0 reproduces the source
columns exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .automata import CompiledRe
from .forest import ParseTimings, Slpf, mask_rows
from .segments import SegmentTable, bit, iter_bits

__all__ = [
    "EncodedSlpf",
    "SlpfDfa",
    "cell_pairs",
    "compress_to_dfa",
    "decode",
    "encode",
    "read_slpf",
    "replay",
    "write_slpf",
]

MAGIC = b"SLPF1"


def cell_pairs(table: SegmentTable, cell: int) -> list[tuple[int, int]]:
    """Sorted pair universe ⟨numbered character, follower sid⟩ of one cell.

    Follower sets depend only on the end letter, so one representative
    segment per numbered character suffices.  Cached on the table.
    """
    tables = table.__dict__.get("_pair_tables")
    if tables is None:
        fol_of_num: dict[int, int] = {}
        reads: dict[int, set[int]] = {}
        for sid in range(1, table.size + 1):
            seg = table.segments[sid]
            if seg.end[0] != "t":
                continue
            num = seg.end[1]
            fol_of_num[num] = table.folseg[sid]
            reads.setdefault(seg.end[2], set()).add(num)
        tables = {}
        for c, nums in reads.items():
            tables[c] = sorted(
                (num, sid) for num in nums for sid in iter_bits(fol_of_num[num])
            )
        table.__dict__["_pair_tables"] = tables
    return tables.get(cell, [])


@dataclass
class EncodedSlpf:
    """Pair-index encoded columns: inline records and the wide-column table.

    records[r] is (0, bits) with the bitstring inlined, or (1, i) pointing
    into ``wide``, whose entries are the deduplicated bitstring bytes.
    """

    size: int
    n: int
    table_digest: bytes
    records: list[tuple[int, int]]
    wide: list[bytes] = field(default_factory=list)


def _column_bits(table: SegmentTable, mask: int, pairs: list[tuple[int, int]]) -> int:
    bits = 0
    for i, (_, sid) in enumerate(pairs):
        if mask & bit(sid):
            bits |= 1 << i
    return bits


def encode(slpf: Slpf) -> EncodedSlpf:
    """Encode a clean forest's columns as pair-index bitstrings."""
    if not slpf.accepted:
        raise ValueError("only an accepted (clean) SLPF can be encoded")
    table = slpf.table
    cells = slpf.cells()
    records: list[tuple[int, int]] = []
    wide: list[bytes] = []
    wide_index: dict[bytes, int] = {}

    def emit(bits: int, width: int) -> None:
        if width <= 64:
            records.append((0, bits))
            return
        raw = bits.to_bytes((width + 7) // 8, "little")
        idx = wide_index.get(raw)
        if idx is None:
            idx = len(wide)
            wide_index[raw] = idx
            wide.append(raw)
        records.append((1, idx))

    emit(slpf.mask(0), table.size)
    for r in range(1, slpf.n + 1):
        pairs = cell_pairs(table, cells[r - 1])
        emit(_column_bits(table, slpf.mask(r), pairs), len(pairs))
    return EncodedSlpf(
        size=table.size,
        n=slpf.n,
        table_digest=table.digest(),
        records=records,
        wide=wide,
    )


def decode(encoded: EncodedSlpf, cre: CompiledRe, text: bytes) -> Slpf:
    """Rebuild the column store; exact inverse of encode for the same text."""
    table = cre.table
    if encoded.table_digest != table.digest():
        raise ValueError("encoded SLPF belongs to a different segment table")
    if encoded.n != len(text):
        raise ValueError(f"encoded for text length {encoded.n}, got {len(text)}")
    cells = cre.text_cells(text)

    def bits_of(r: int) -> int:
        tag, value = encoded.records[r]
        if tag == 0:
            return value
        return int.from_bytes(encoded.wide[value], "little")

    masks = [bits_of(0)]
    for r in range(1, encoded.n + 1):
        pairs = cell_pairs(table, cells[r - 1])
        bits = bits_of(r)
        mask = 0
        for i in iter_bits(bits):
            mask |= bit(pairs[i - 1][1])
        masks.append(mask)
    return Slpf(
        table=table,
        nfa=cre.nfa,
        n=encoded.n,
        columns=mask_rows(masks, table.words),
        accepted=True,
        text=text,
        timings=ParseTimings(),
    )


# ---------------------------------------------------------------------------
# file form


def write_slpf(encoded: EncodedSlpf) -> bytes:
    """Serialize: magic, ℓ, n, table digest, n+1 records, wide table."""
    out = [
        MAGIC,
        struct.pack("<I", encoded.size),
        struct.pack("<Q", encoded.n),
        encoded.table_digest,
    ]
    for tag, value in encoded.records:
        if tag == 0:
            out.append(b"\x00" + struct.pack("<Q", value))
        else:
            out.append(b"\x01" + struct.pack("<I", value))
    out.append(struct.pack("<I", len(encoded.wide)))
    for raw in encoded.wide:
        out.append(struct.pack("<I", len(raw)))
        out.append(raw)
    return b"".join(out)


def read_slpf(data: bytes) -> EncodedSlpf:
    if data[:5] != MAGIC:
        raise ValueError("not an SLPF file (bad magic)")
    pos = 5
    (size,) = struct.unpack_from("<I", data, pos)
    pos += 4
    (n,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    digest = data[pos : pos + 32]
    pos += 32
    records: list[tuple[int, int]] = []
    for _ in range(n + 1):
        tag = data[pos]
        pos += 1
        if tag == 0:
            (value,) = struct.unpack_from("<Q", data, pos)
            pos += 8
        elif tag == 1:
            (value,) = struct.unpack_from("<I", data, pos)
            pos += 4
        else:
            raise ValueError(f"corrupt SLPF record tag {tag}")
        records.append((tag, value))
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    wide: list[bytes] = []
    for _ in range(count):
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        wide.append(data[pos : pos + length])
        pos += length
    return EncodedSlpf(size=size, n=n, table_digest=digest, records=records, wide=wide)


# ---------------------------------------------------------------------------
# replay compression


@dataclass
class SlpfDfa:
    """Distinct clean columns of one parse plus the replay transitions.

    trans[(state, cell)] is the run-length successor sequence in text
    order: the same column may recur with different successors (cleanness
    depends on the remaining text), so a single-valued table cannot replay
    ambiguous parses.  Run lists stay short on periodic texts.
    """

    states: list[int]
    trans: dict[tuple[int, int], list[list[int]]]
    start: int = 0

    @property
    def num_states(self) -> int:
        return len(self.states)


def compress_to_dfa(slpf: Slpf) -> SlpfDfa:
    """Deduplicate the columns into a replay automaton for this text."""
    if not slpf.accepted:
        raise ValueError("only an accepted (clean) SLPF can be compressed")
    cells = slpf.cells()
    states: list[int] = []
    index: dict[int, int] = {}

    def intern(mask: int) -> int:
        sid = index.get(mask)
        if sid is None:
            sid = len(states)
            index[mask] = sid
            states.append(mask)
        return sid

    trans: dict[tuple[int, int], list[list[int]]] = {}
    cur = intern(slpf.mask(0))
    for r in range(1, slpf.n + 1):
        nxt = intern(slpf.mask(r))
        runs = trans.setdefault((cur, cells[r - 1]), [])
        if runs and runs[-1][0] == nxt:
            runs[-1][1] += 1
        else:
            runs.append([nxt, 1])
        cur = nxt
    return SlpfDfa(states=states, trans=trans, start=0)


def replay(sdfa: SlpfDfa, cre: CompiledRe, text: bytes) -> Slpf:
    """Reconstruct the column store by walking the replay automaton."""
    cells = cre.text_cells(text)
    # Per-key cursor [run index, visits consumed in that run]: each visit
    # advances it O(1) amortized instead of rescanning the run list.
    cursors: dict[tuple[int, int], list[int]] = {}
    masks = [sdfa.states[sdfa.start]]
    cur = sdfa.start
    for r in range(1, len(text) + 1):
        key = (cur, cells[r - 1])
        runs = sdfa.trans.get(key, ())
        cursor = cursors.setdefault(key, [0, 0])
        if cursor[0] < len(runs) and cursor[1] == runs[cursor[0]][1]:
            cursor[0] += 1
            cursor[1] = 0
        if cursor[0] >= len(runs):
            raise ValueError(f"replay table does not cover position {r}")
        nxt = runs[cursor[0]][0]
        cursor[1] += 1
        masks.append(sdfa.states[nxt])
        cur = nxt
    return Slpf(
        table=cre.table,
        nfa=cre.nfa,
        n=len(text),
        columns=mask_rows(masks, cre.table.words),
        accepted=True,
        text=text,
        timings=ParseTimings(),
    )
