"""Serial reference parsers.

Two single-threaded ways to produce the same clean SLPF:

* the NFA parser multiplies per-character Boolean connection matrices onto
  the column vector, forwards from the initial segments and then backwards
  from the final ones, intersecting in place (the matrices are sparse, so
  a "multiplication" just ORs the successor bitsets of the set bits);

* the DFA parser replaces every forward step by one table lookup — the
  powerset state *is* the raw forward column — and every backward step by
  a lookup in the reverse DFA, so the per-byte work is constant.

Both store the raw forward columns on reject (zeros after the failure
offset), making outputs byte-comparable across engines even for invalid
text.  The DFA scan runs over a stride-256 table indexed directly by the
cell byte, which also routes bytes outside the pattern's alphabet (cell
0xFF) to the dead state.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .automata import CompiledRe, Dfa, ParserNfa
from .forest import ParseTimings, Slpf, mask_rows

__all__ = [
    "ConnectionMatrices",
    "parse_serial_nfa",
    "parse_serial_dfa",
    "recognize_serial",
]


@dataclass
class ConnectionMatrices:
    """Per-character Boolean connection matrices N_a in column form.

    fwd[cell][q] is column q of N_cell — the mask of rows ρ with
    N_cell[ρ, q] = 1, i.e. the successors of q when q's end letter reads
    the cell.  bwd holds the transposes N̂_cell the backward pass runs on.
    """

    size: int
    fwd: dict[int, list[int]]
    bwd: dict[int, list[int]]

    @classmethod
    def from_automata(cls, nfa: ParserNfa, nfa_rev: ParserNfa) -> "ConnectionMatrices":
        return cls(nfa.size, nfa.matrix, nfa_rev.matrix)

    def entry(self, cell: int, row: int, col: int) -> bool:
        columns = self.fwd.get(cell)
        return bool(columns and columns[col] >> (row - 1) & 1)


def parse_serial_nfa(cre: CompiledRe, text: bytes) -> Slpf:
    """Matrix-multiplication parse: forward columns, then backward cleanup.

    C_0 = I and C_r = N_{x_r} × C_{r-1}; the backward pass from F runs the
    transposes over the reversed text and overwrites the stored columns
    with the intersection on the fly.
    """
    t0 = time.monotonic_ns()
    n = len(text)
    cells = cre.text_cells(text)
    nfa, nfa_rev = cre.nfa, cre.nfa_rev
    cols = [0] * (n + 1)
    mask = nfa.imask
    cols[0] = mask
    reject = None
    for r in range(1, n + 1):
        mask = nfa.step(mask, cells[r - 1])
        cols[r] = mask
        if not mask:
            reject = r
            break
    if reject is None and not cols[n] & nfa.fmask:
        reject = n
    if reject is None:
        back = cols[n] & nfa.fmask
        cols[n] = back
        for r in range(n - 1, -1, -1):
            back = nfa_rev.step(back, cells[r])
            cols[r] &= back
    dt = time.monotonic_ns() - t0
    return Slpf(
        table=cre.table,
        nfa=cre.nfa,
        n=n,
        columns=mask_rows(cols, cre.table.words),
        accepted=reject is None,
        reject_offset=reject,
        text=text,
        timings=ParseTimings(parse_ns=dt, build_ns=dt),
    )


# ---------------------------------------------------------------------------
# DFA scan machinery (shared with the parallel builders)


def scan_table(dfa: Dfa) -> list[int]:
    """Flat stride-256 transition table indexed by (state << 8) | cell byte.

    Cell bytes ≥ ncells (in particular 0xFF for out-of-alphabet input) hit
    zero-initialized slots, i.e. the dead state.  Cached on the automaton.
    """
    cached = dfa.__dict__.get("_scan256")
    if cached is None:
        nc = dfa.ncells
        nstates = len(dfa.states)
        cached = [0] * (nstates << 8)
        for s in range(nstates):
            base = s << 8
            row = s * nc
            for cell in range(nc):
                cached[base | cell] = dfa.trans[row + cell]
        dfa.__dict__["_scan256"] = cached
    return cached


def state_masks(dfa: Dfa, words: int) -> np.ndarray:
    """(num_states+1, words) uint64 rows of the subset masks, cached."""
    cached = dfa.__dict__.get("_state_masks")
    if cached is None:
        cached = mask_rows(dfa.states, words)
        dfa.__dict__["_state_masks"] = cached
    return cached


def scan_ids(dfa: Dfa, cells: bytes, start: int, out: np.ndarray) -> int:
    """Run the DFA over cell bytes, recording the state id per position.

    out[0] gets ``start`` and out[r] the state after cell r-1; on death the
    remaining slots keep their zeros and the first dead position is
    returned (0 when the whole scan survives).
    """
    table = scan_table(dfa)
    s = start
    out[0] = s
    r = 1
    for c in cells:
        s = table[(s << 8) | c]
        if not s:
            return r
        out[r] = s
        r += 1
    return 0


def parse_serial_dfa(cre: CompiledRe, text: bytes) -> Slpf:
    """Table-lookup parse: one DFA run forwards, one reverse-DFA run
    backwards, per-position intersection of the two subset masks.
    Output is column-identical to parse_serial_nfa."""
    t0 = time.monotonic_ns()
    n = len(text)
    cells = cre.text_cells(text)
    words = cre.table.words
    fw = np.zeros(n + 1, dtype=np.int64)
    died = scan_ids(cre.dfa, cells, cre.dfa.start, fw)
    reject = died if died else None
    if reject is None and not cre.dfa.is_final(int(fw[n])):
        reject = n
    masks_fw = state_masks(cre.dfa, words)
    if reject is not None:
        columns = masks_fw[fw]
        dt = time.monotonic_ns() - t0
        return Slpf(
            table=cre.table,
            nfa=cre.nfa,
            n=n,
            columns=columns,
            accepted=False,
            reject_offset=reject,
            text=text,
            timings=ParseTimings(parse_ns=dt, build_ns=dt),
        )
    bw = np.zeros(n + 1, dtype=np.int64)
    scan_ids(cre.dfa_rev, cells[::-1], cre.dfa_rev.start, bw)
    columns = masks_fw[fw]
    columns &= state_masks(cre.dfa_rev, words)[bw[::-1]]
    dt = time.monotonic_ns() - t0
    return Slpf(
        table=cre.table,
        nfa=cre.nfa,
        n=n,
        columns=columns,
        accepted=True,
        reject_offset=None,
        text=text,
        timings=ParseTimings(parse_ns=dt, build_ns=dt),
    )


def recognize_serial(cre: CompiledRe, text: bytes) -> bool:
    """Membership only: δ*(T1, text) meets F.  No columns are stored."""
    table = scan_table(cre.dfa)
    s = cre.dfa.start
    for c in cre.text_cells(text):
        s = table[(s << 8) | c]
        if not s:
            return False
    return cre.dfa.is_final(s)
