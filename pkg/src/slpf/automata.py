"""Parser automata over segments.

The parser NFA has one state per segment; reading an input byte of cell c in
state ρ is possible iff ρ's end letter reads c, and leads to every follower
segment of ρ.  Initial states are the initial segments, final states the
final ones.  The reverse NFA is the per-cell transpose with the roles of
initial/final swapped; running it over reversed input mirrors forward runs.

Determinization is the usual powerset construction (not minimized,
dead state explicit as id 0).  The multi-entry DFA is the same construction
seeded with every singleton {ρ}: its first ℓ states are those singletons and
its entry table lets a run start "in the middle" of a text from any single
segment, which is what makes chunked parsing compose:
δ*(T, w) = ∪_{q∈T} δ*({q}, w).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .segments import SegmentTable, bit, iter_bits, compute_segments
from .syntax import NumberedRE, parse_re, number_re

__all__ = [
    "ParserNfa",
    "Dfa",
    "MeDfa",
    "build_nfa",
    "reverse",
    "determinize",
    "build_medfa",
    "merge_dfa_into_medfa",
    "CompiledRe",
    "compile_re",
    "DfaExplosionError",
]


class DfaExplosionError(ValueError):
    pass


@dataclass
class ParserNfa:
    """Segment NFA in per-cell matrix form.

    matrix[cell][q] is the mask of states reachable from state q on an input
    byte of that cell (index 0 unused).  For the forward automaton the row
    is non-zero only when segment q's end letter reads the cell; the reverse
    automaton is its transpose.
    """

    size: int
    imask: int
    fmask: int
    matrix: dict[int, list[int]]
    direction: str = "forward"

    def step(self, mask: int, cell: int | None) -> int:
        if cell is None:
            return 0
        rows = self.matrix.get(cell)
        if rows is None:
            return 0
        acc = 0
        for q in iter_bits(mask):
            acc |= rows[q]
        return acc

    def run(self, mask: int, cells) -> int:
        for c in cells:
            mask = self.step(mask, c)
            if not mask:
                break
        return mask


def build_nfa(table: SegmentTable) -> ParserNfa:
    matrix: dict[int, list[int]] = {}
    for cell, cmask in table.sigma.items():
        rows = [0] * (table.size + 1)
        for q in iter_bits(cmask):
            rows[q] = table.folseg[q]
        matrix[cell] = rows
    return ParserNfa(table.size, table.imask, table.fmask, matrix, "forward")


def reverse(nfa: ParserNfa) -> ParserNfa:
    """Per-cell transpose with initial/final swapped.  An involution."""
    matrix: dict[int, list[int]] = {}
    for cell, rows in nfa.matrix.items():
        t = [0] * (nfa.size + 1)
        for q in range(1, nfa.size + 1):
            for s in iter_bits(rows[q]):
                t[s] |= bit(q)
        matrix[cell] = t
    direction = "reverse" if nfa.direction == "forward" else "forward"
    return ParserNfa(nfa.size, nfa.fmask, nfa.imask, matrix, direction)


@dataclass
class Dfa:
    """Dense powerset automaton.  State 0 is the dead state (not counted).

    states[id] is the segment mask of the subset; trans is flattened
    (id * ncells + cell) -> id; finals has bit id set when the subset meets
    the NFA's final mask.
    """

    states: list[int]
    trans: list[int]
    ncells: int
    start: int
    finals: int
    nfa_fmask: int
    direction: str
    index: dict[int, int] = field(repr=False, default_factory=dict)

    @property
    def num_states(self) -> int:
        return len(self.states) - 1

    def step_id(self, sid: int, cell: int | None) -> int:
        if cell is None:
            return 0
        return self.trans[sid * self.ncells + cell]

    def is_final(self, sid: int) -> bool:
        return bool(self.finals >> sid & 1)

    def state_of(self, mask: int) -> int:
        return self.index[mask]

    def run_id(self, sid: int, cells) -> int:
        trans = self.trans
        nc = self.ncells
        for c in cells:
            sid = trans[sid * nc + c]
            if not sid:
                break
        return sid


def _powerset(nfa: ParserNfa, seeds: list[int], ncells: int, max_states: int):
    """Breadth-first subset construction from the given seed masks."""
    states = [0]
    trans = [0] * ncells
    index = {0: 0}
    finals = 0
    queue = []
    for seed in seeds:
        if seed not in index:
            index[seed] = len(states)
            states.append(seed)
            queue.append(seed)
    head = 0
    while head < len(queue):
        mask = queue[head]
        head += 1
        row = []
        for cell in range(ncells):
            nxt = nfa.step(mask, cell)
            nid = index.get(nxt)
            if nid is None:
                if len(states) > max_states:
                    raise DfaExplosionError(
                        f"powerset construction exceeded {max_states} states"
                    )
                nid = len(states)
                index[nxt] = nid
                states.append(nxt)
                queue.append(nxt)
            row.append(nid)
        trans.extend(row)
    # queue order == id order, so trans rows line up with states
    for sid, mask in enumerate(states):
        if mask & nfa.fmask:
            finals |= 1 << sid
    return states, trans, index, finals


def determinize(nfa: ParserNfa, ncells: int, max_states: int = 1 << 20) -> Dfa:
    states, trans, index, finals = _powerset(nfa, [nfa.imask], ncells, max_states)
    return Dfa(
        states=states,
        trans=trans,
        ncells=ncells,
        start=index[nfa.imask],
        finals=finals,
        nfa_fmask=nfa.fmask,
        direction=nfa.direction,
        index=index,
    )


@dataclass
class MeDfa(Dfa):
    """Powerset automaton seeded with every singleton segment set.

    entries[sid] is the state id of {sid}; by construction ids 1..ℓ are the
    singletons in segment order.  ``start`` is the id of the full initial
    set when it has been merged in (see merge_dfa_into_medfa), else 0.
    """

    entries: list[int] = field(default_factory=list)

    def entry(self, sid: int) -> int:
        return self.entries[sid]


def build_medfa(nfa: ParserNfa, ncells: int, max_states: int = 1 << 20) -> MeDfa:
    seeds = [bit(q) for q in range(1, nfa.size + 1)]
    states, trans, index, finals = _powerset(nfa, seeds, ncells, max_states)
    entries = [0] + [index[bit(q)] for q in range(1, nfa.size + 1)]
    start = index.get(nfa.imask, 0)
    return MeDfa(
        states=states,
        trans=trans,
        ncells=ncells,
        start=start,
        finals=finals,
        nfa_fmask=nfa.fmask,
        direction=nfa.direction,
        index=index,
        entries=entries,
    )


def merge_dfa_into_medfa(dfa: Dfa, medfa: MeDfa) -> MeDfa:
    """One table serving both start-anywhere and start-at-T1 runs.

    Inserts every DFA state missing from the multi-entry automaton (T1 at
    least; interior states are usually already present) and remaps the DFA
    transitions onto the merged ids.  Where both machines know a state their
    rows must agree — both are powerset closures of the same NFA.
    """
    assert dfa.ncells == medfa.ncells and dfa.direction == medfa.direction
    states = list(medfa.states)
    trans = list(medfa.trans)
    index = dict(medfa.index)
    finals = medfa.finals
    nc = dfa.ncells

    remap = [0] * len(dfa.states)
    added = []
    for did in range(1, len(dfa.states)):
        mask = dfa.states[did]
        mid = index.get(mask)
        if mid is None:
            mid = len(states)
            states.append(mask)
            trans.extend([0] * nc)
            index[mask] = mid
            if mask & dfa.nfa_fmask:
                finals |= 1 << mid
            added.append(did)
        remap[did] = mid
    for did in added:
        mid = remap[did]
        for cell in range(nc):
            trans[mid * nc + cell] = remap[dfa.trans[did * nc + cell]]
    for did in range(1, len(dfa.states)):
        mid = remap[did]
        if did not in added:
            for cell in range(nc):
                assert trans[mid * nc + cell] == remap[dfa.trans[did * nc + cell]], (
                    "merged automata disagree on a shared state"
                )
    return MeDfa(
        states=states,
        trans=trans,
        ncells=nc,
        start=remap[dfa.start],
        finals=finals,
        nfa_fmask=medfa.nfa_fmask,
        direction=medfa.direction,
        index=index,
        entries=list(medfa.entries),
    )


# ---------------------------------------------------------------------------
# compiled bundle


@dataclass
class CompiledRe:
    """Everything the engines need for one pattern, built once.

    ``medfa``/``medfa_rev`` are the pure multi-entry tables (their state
    counts are what gets reported); ``merged``/``merged_rev`` additionally
    contain the plain DFA's states, so one table serves both the
    start-anywhere reach runs and the start-at-T1 build runs.
    """

    source: bytes
    nre: NumberedRE
    table: SegmentTable
    nfa: ParserNfa
    nfa_rev: ParserNfa
    dfa: Dfa
    dfa_rev: Dfa
    medfa: MeDfa
    medfa_rev: MeDfa
    merged: MeDfa
    merged_rev: MeDfa
    repeat_limit: int

    @property
    def size(self) -> int:
        return self.table.size

    @property
    def ncells(self) -> int:
        return len(self.nre.partition.cells)

    def text_cells(self, text: bytes) -> bytes:
        """Map text bytes to cell ids (bytes outside the alphabet -> 0xFF)."""
        return text.translate(self.nre.partition.byte_to_cell)


def compile_re(
    source: bytes | str,
    repeat_limit: int = 1,
    max_segments: int = 1 << 16,
    max_states: int = 1 << 20,
) -> CompiledRe:
    """Front end + segments + the four automata for one pattern."""
    if isinstance(source, str):
        source_bytes = source.encode("latin-1")
    else:
        source_bytes = source
    ast = parse_re(source_bytes)
    nre = number_re(ast, source_bytes)
    table = compute_segments(nre, repeat_limit, max_segments)
    ncells = len(nre.partition.cells)
    nfa = build_nfa(table)
    nfa_rev = reverse(nfa)
    dfa = determinize(nfa, ncells, max_states)
    dfa_rev = determinize(nfa_rev, ncells, max_states)
    medfa = build_medfa(nfa, ncells, max_states)
    medfa_rev = build_medfa(nfa_rev, ncells, max_states)
    merged = merge_dfa_into_medfa(dfa, medfa)
    merged_rev = merge_dfa_into_medfa(dfa_rev, medfa_rev)
    return CompiledRe(
        source=source_bytes,
        nre=nre,
        table=table,
        nfa=nfa,
        nfa_rev=nfa_rev,
        dfa=dfa,
        dfa_rev=dfa_rev,
        medfa=medfa,
        medfa_rev=medfa_rev,
        merged=merged,
        merged_rev=merged_rev,
        repeat_limit=repeat_limit,
    )
