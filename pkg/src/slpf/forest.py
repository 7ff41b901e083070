"""The shared linearized parse forest (SLPF).

A parse of an n-byte text is n+1 columns of segment sets.  A segment σ in
column C_r stands for the piece of a syntax tree whose meta prefix sits
between text positions r and r+1; its end letter is the character x_{r+1}
(⊣-ended segments live only in the last column).  Arcs are implicit: σ in
C_r connects to τ in C_{r+1} iff τ is a follower segment of σ, so the
forest needs no adjacency storage at all — one bitset per column.

A *clean* forest keeps exactly the segments lying on some complete
initial-to-final path; its paths are in bijection with the syntax trees
(LSTs) of the text.  All query operations below assume a clean forest,
which is what both engines emit.

Rendering: a segment renders as its tokens separated by single spaces
("1( 2( 3( a4"), the layout the table dump uses.  A whole LST renders in
tree layout instead: a space goes between two tokens exactly when the left
one ends a subtree piece (terminal, ε, close paren) and the right one
begins one (terminal, ε, open paren), and the trailing ⊣ is dropped —
"1(2(3(a4 b5)3)2)1".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .automata import ParserNfa
from .segments import END, SegmentTable, bit, iter_bits

__all__ = [
    "MatchSpan",
    "ParseTimings",
    "Slpf",
    "count_lsts",
    "enumerate_lsts",
    "get_children",
    "get_matches",
    "is_clean",
    "render_lst",
    "COUNT_SATURATION",
]

_U64 = (1 << 64) - 1

# count_lsts saturates here instead of growing quadratically on very
# ambiguous long texts (the true count can be exponential in n).
COUNT_SATURATION = (1 << 64) - 1


@dataclass
class ParseTimings:
    """Per-phase wall times in nanoseconds.  Serial engines report their
    whole scan as build time and zero for the parallel-only phases."""

    parse_ns: int = 0
    reach_ns: int = 0
    join_ns: int = 0
    build_ns: int = 0


@dataclass(frozen=True, order=True)
class MatchSpan:
    """Half-open byte span [start, end) matched by one numbered group."""

    start: int
    end: int
    group: int


@dataclass
class Slpf:
    """Column store plus the bundle needed to interpret it.

    ``columns`` is an (n+1, words) uint64 array; bit sid-1 of row r marks
    segment sid present in C_r.  On reject the rows hold the raw forward
    columns up to the failure offset and zeros after it, which keeps
    engine outputs byte-comparable even for invalid text.
    """

    table: SegmentTable
    nfa: ParserNfa
    n: int
    columns: np.ndarray
    accepted: bool
    reject_offset: int | None = None
    text: bytes | None = None
    timings: ParseTimings | None = None

    @property
    def words(self) -> int:
        return self.columns.shape[1]

    @property
    def memory_words(self) -> int:
        """64-bit words held by the column store."""
        return int(self.columns.size)

    def mask(self, r: int) -> int:
        row = self.columns[r]
        acc = int(row[0])
        for w in range(1, len(row)):
            acc |= int(row[w]) << (64 * w)
        return acc

    def set_mask(self, r: int, mask: int) -> None:
        for w in range(self.words):
            self.columns[r, w] = (mask >> (64 * w)) & _U64

    def cells(self) -> bytes:
        if self.text is None:
            raise ValueError("this SLPF was built without retaining the text")
        return self.text.translate(self.table.nre.partition.byte_to_cell)


def mask_rows(masks: list[int], words: int) -> np.ndarray:
    """Stack integer masks into a (len, words) uint64 array."""
    out = np.zeros((len(masks), words), dtype=np.uint64)
    for i, m in enumerate(masks):
        for w in range(words):
            out[i, w] = (m >> (64 * w)) & _U64
    return out


# ---------------------------------------------------------------------------
# path enumeration and counting


def _successors(slpf: Slpf, r: int, sid: int, cells: bytes) -> int:
    """Mask of forest successors of σ=sid in column r (clean arcs only)."""
    if r >= slpf.n:
        return 0
    if slpf.table.end_cell(sid) != cells[r]:
        return 0
    return slpf.table.folseg[sid] & slpf.mask(r + 1)


def enumerate_lsts(slpf: Slpf, limit: int | None = None) -> list[tuple[int, ...]]:
    """Distinct initial-to-final segment paths, lexicographic by segment id.

    Returns at most ``limit`` paths (all of them when limit is None).  Each
    path is a tuple of n+1 segment ids; ``render_lst`` turns it into text.
    """
    if not slpf.accepted or limit == 0:
        return []
    cells = slpf.cells()
    n = slpf.n
    fmask = slpf.table.fmask
    out: list[tuple[int, ...]] = []
    # iterative DFS, smallest sid first, so paths come out in lex order
    for start in iter_bits(slpf.mask(0)):
        stack = [(0, start, [start])]
        while stack:
            r, sid, path = stack.pop()
            if r == n:
                if bit(sid) & fmask:
                    out.append(tuple(path))
                    if limit is not None and len(out) >= limit:
                        return out
                continue
            succ = _successors(slpf, r, sid, cells)
            # push descending so the smallest successor is explored first
            for nxt in reversed(list(iter_bits(succ))):
                stack.append((r + 1, nxt, path + [nxt]))
    return out


def count_lsts(slpf: Slpf) -> int:
    """Exact number of initial-to-final paths, saturating at 2^64-1."""
    if not slpf.accepted:
        return 0
    cells = slpf.cells()
    counts: dict[int, int] = {sid: 1 for sid in iter_bits(slpf.mask(0))}
    for r in range(slpf.n):
        nxt: dict[int, int] = {}
        for sid, cnt in counts.items():
            for tau in iter_bits(_successors(slpf, r, sid, cells)):
                nxt[tau] = min(COUNT_SATURATION, nxt.get(tau, 0) + cnt)
        counts = nxt
    fmask = slpf.table.fmask
    total = 0
    for sid, cnt in counts.items():
        if bit(sid) & fmask:
            total = min(COUNT_SATURATION, total + cnt)
    return total


def render_lst(table: SegmentTable, path) -> str:
    """Render a segment path as an LST in tree layout (no trailing ⊣)."""
    pieces: list[str] = []
    prev_ends = False
    for sid in path:
        seg = table.segments[sid]
        for sym in (*seg.meta, seg.end):
            kind = sym[0]
            if kind == "$":
                continue
            begins = kind in ("t", "e", "(")
            ends = kind in ("t", "e", ")")
            if pieces and prev_ends and begins:
                pieces.append(" ")
            pieces.append(table.token(sym))
            prev_ends = ends
    return "".join(pieces)


# ---------------------------------------------------------------------------
# cleanness


def is_clean(slpf: Slpf) -> bool:
    """True iff forward/backward re-marking leaves every column unchanged."""
    if not slpf.accepted:
        return False
    cells = slpf.cells()
    n = slpf.n
    table = slpf.table
    mark = slpf.mask(0)
    if mark == 0 or mark & ~table.imask:
        return False
    for r in range(1, n + 1):
        mark = slpf.nfa.step(mark, cells[r - 1]) & slpf.mask(r)
        if mark != slpf.mask(r):
            return False
    mark = slpf.mask(n) & table.fmask
    if mark != slpf.mask(n):
        return False
    for r in range(n - 1, -1, -1):
        keep = 0
        for sid in iter_bits(slpf.mask(r)):
            if table.end_cell(sid) == cells[r] and table.folseg[sid] & mark:
                keep |= bit(sid)
        if keep != slpf.mask(r):
            return False
        mark = keep
    return True


# ---------------------------------------------------------------------------
# group queries

# events of one group inside a segment: (meta index, True for open)


def _group_events(table: SegmentTable, sid: int, group: int) -> list[tuple[int, bool]]:
    seg = table.segments[sid]
    return [
        (idx, sym[0] == "(")
        for idx, sym in enumerate(seg.meta)
        if sym[0] in ("(", ")") and sym[1] == group
    ]


def _check_group(table: SegmentTable, group: int) -> None:
    if not any(num == group for num, _, _ in table.nre.op_table):
        raise ValueError(f"unknown group number {group}")


def get_matches(slpf: Slpf, group: int, within: int | None = None) -> list[MatchSpan]:
    """Spans enclosed by the group's parens on at least one forest path.

    With ``within`` set, only occurrences nested inside an occurrence of
    that group are reported.  Spans are half-open byte ranges, deduplicated
    and sorted; an ε-only occurrence yields start == end.
    """
    _check_group(slpf.table, group)
    if within is not None:
        _check_group(slpf.table, within)
    if not slpf.accepted:
        return []
    table = slpf.table
    cells = slpf.cells()
    n = slpf.n

    # Which (column, segment) entry states are reachable with `within`
    # currently open / closed?  Any prefix realizing a status extends to a
    # full path, because every clean segment lies on one.
    open_in = [0] * (n + 1)
    closed_in = [0] * (n + 1)
    closed_in[0] = slpf.mask(0)
    if within is not None:
        for r in range(n):
            for sid in iter_bits(slpf.mask(r)):
                entries = []
                if closed_in[r] & bit(sid):
                    entries.append(False)
                if open_in[r] & bit(sid):
                    entries.append(True)
                if not entries:
                    continue
                events = _group_events(table, sid, within)
                succ = _successors(slpf, r, sid, cells)
                for entry_open in entries:
                    exit_open = events[-1][1] if events else entry_open
                    if exit_open:
                        open_in[r + 1] |= succ
                    else:
                        closed_in[r + 1] |= succ

    # closes_at[sid] for the column under the backward sweep: positions of
    # the matching close given "group open entering σ here"; no
    # self-nesting means the first group event met must be the close
    spans: set[tuple[int, int]] = set()
    closes_next: dict[int, frozenset[int]] = {}
    for r in range(n, -1, -1):
        closes_here: dict[int, frozenset[int]] = {}
        for sid in iter_bits(slpf.mask(r)):
            events = _group_events(table, sid, group)
            if events:
                closes_here[sid] = (
                    frozenset({r}) if not events[0][1] else frozenset()
                )
            else:
                acc: set[int] = set()
                for tau in iter_bits(_successors(slpf, r, sid, cells)):
                    acc |= closes_next.get(tau, frozenset())
                closes_here[sid] = frozenset(acc)
            for pos, (idx, is_open) in enumerate(events):
                if not is_open:
                    continue
                if within is not None:
                    w_events = _group_events(table, sid, within)
                    before = [o for i, o in w_events if i < idx]
                    if before:
                        if not before[-1]:
                            continue
                    elif not open_in[r] & bit(sid):
                        continue
                if pos + 1 < len(events):
                    spans.add((r, r))  # closes inside the same meta prefix
                    continue
                for tau in iter_bits(_successors(slpf, r, sid, cells)):
                    for j in closes_next.get(tau, frozenset()):
                        spans.add((r, j))
        closes_next = closes_here
    return [MatchSpan(s, e, group) for s, e in sorted(spans)]


# ---------------------------------------------------------------------------
# children of a match occurrence


def _witness_path(slpf: Slpf, span: MatchSpan) -> list[int] | None:
    """Lex-least clean path carrying the span's open/close events, if any."""
    table = slpf.table
    cells = slpf.cells()
    n = slpf.n
    i, j, group = span.start, span.end, span.group

    def qualifies(sid: int) -> bool:
        events = _group_events(table, sid, group)
        for pos, (_, is_open) in enumerate(events):
            if not is_open:
                continue
            if i == j:
                if pos + 1 < len(events):
                    return True
            elif pos + 1 == len(events):
                return True
        return False

    # phase 0: before the open, 1: between open and close, 2: after
    def advance(r: int, sid: int, phase: int) -> int | None:
        events = _group_events(table, sid, group)
        if r == i and phase == 0:
            if not qualifies(sid):
                return None
            return 2 if i == j else 1
        if phase == 1:
            if r == j:
                return 2 if events and not events[0][1] else None
            return None if events else 1
        return phase

    # feasible[r][p] = segments from which a witnessing completion exists
    # when entered at column r in phase p; then walk forward greedily,
    # always taking the least feasible successor, which is the lex-least
    # witnessing path.
    feasible = [[0, 0, 0] for _ in range(n + 1)]
    for sid in iter_bits(slpf.mask(n)):
        if not bit(sid) & table.fmask:
            continue
        for phase in (0, 1, 2):
            if advance(n, sid, phase) == 2:
                feasible[n][phase] |= bit(sid)
    for r in range(n - 1, -1, -1):
        for sid in iter_bits(slpf.mask(r)):
            succ = _successors(slpf, r, sid, cells)
            for phase in (0, 1, 2):
                after = advance(r, sid, phase)
                if after is not None and succ & feasible[r + 1][after]:
                    feasible[r][phase] |= bit(sid)

    start_mask = slpf.mask(0) & feasible[0][0]
    if not start_mask:
        return None
    path = [next(iter_bits(start_mask))]
    phase = 0
    for r in range(n):
        sid = path[-1]
        phase = advance(r, sid, phase)
        succ = _successors(slpf, r, sid, cells) & feasible[r + 1][phase]
        path.append(next(iter_bits(succ)))
    return path


def get_children(slpf: Slpf, span: MatchSpan) -> list[MatchSpan]:
    """Immediate nested group occurrences of one match, on its least path.

    The witnessing path is the lexicographically least clean path carrying
    the span; children are the depth-one paren pairs between its open and
    close events.  A match whose body holds only terminals/ε has none.
    Raises ValueError for a span this forest never produced.
    """
    _check_group(slpf.table, span.group)
    path = _witness_path(slpf, span) if slpf.accepted else None
    if path is None:
        raise ValueError(f"stale span {span}: not present in this SLPF")
    table = slpf.table
    group = span.group

    # token events of the whole path: (column, kind, number)
    events: list[tuple[int, str, int]] = []
    for r, sid in enumerate(path):
        seg = table.segments[sid]
        for sym in seg.meta:
            events.append((r, sym[0], sym[1]))

    # our open: at column i, the first qualifying open of the group
    open_at = None
    g_seen = 0
    for idx, (r, kind, num) in enumerate(events):
        if r == span.start and kind == "(" and num == group:
            later = [
                (r2, k2)
                for r2, k2, n2 in events[idx + 1 :]
                if n2 == group and k2 in "()"
            ]
            same_meta_close = bool(later) and later[0][0] == r
            if (span.start == span.end) == same_meta_close:
                open_at = idx
                break
    assert open_at is not None, "witness search matched, events must too"

    children: list[MatchSpan] = []
    depth = 0
    stack: list[tuple[int, int]] = []
    for r, kind, num in events[open_at + 1 :]:
        if kind == "(":
            if depth == 0:
                stack.append((num, r))
            depth += 1
        elif kind == ")":
            if depth == 0:
                break  # the matching close of our own group
            depth -= 1
            if depth == 0:
                child_num, child_start = stack.pop()
                children.append(MatchSpan(child_start, r, child_num))
    return children
