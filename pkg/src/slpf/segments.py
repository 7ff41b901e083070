"""Segment calculus.

A linearized syntax tree (LST) is the numbered pattern's parse tree written
as a flat string of numbered symbols: pair opens/closes, epsilons, terminals,
and a trailing end-mark ⊣.  Every LST factors uniquely into *segments*:
maximal substrings consisting of a (possibly empty) meta prefix of
parens/epsilons followed by one end letter (a numbered terminal or ⊣).

This module computes the classic followers of the LST language (treating
every numbered symbol, parens included, as a non-nullable position), derives
the finite segment set with a worklist that walks follower chains backwards
from each end letter, and builds the follower relation between segments that
the parser automata run on.

Segments of an infinitely ambiguous pattern would be unbounded; the walk
therefore never lets a symbol occur more than ``repeat_limit`` times in one
meta prefix.  Patterns that are not infinitely ambiguous never repeat a
symbol inside a meta prefix at all (a repeat would mean an iteration that
consumed nothing), so the default limit of 1 is exact for them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .syntax import NumberedRE, NumNode

__all__ = [
    "END",
    "Followers",
    "Segment",
    "SegmentTable",
    "SegmentExplosionError",
    "classic_followers",
    "compute_segments",
    "follower_segments",
    "iter_bits",
    "bit",
]

# symbol keys: ("(", n) opens, (")", n) closes, ("e", n) epsilons,
# ("t", n) terminals, END the end-mark.  End-letter *atoms* additionally
# carry the alphabet cell: ("t", n, cell).
END = ("$", 0)


class SegmentExplosionError(ValueError):
    pass


def bit(sid: int) -> int:
    return 1 << (sid - 1)


def iter_bits(mask: int):
    """Yield segment ids (1-based) of the set bits, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length()
        mask ^= low


@dataclass
class Followers:
    """Classic follower sets over the LST language (with ⊣ appended)."""

    follow: dict[tuple, frozenset]
    first: frozenset

    def of(self, key: tuple) -> frozenset:
        return self.follow.get(key, frozenset())


def classic_followers(nre: NumberedRE) -> Followers:
    """Nullable/first/last/follow over the numbered pattern's LST language.

    Positions are the numbered symbols themselves; parens and epsilons are
    ordinary non-nullable leaves.  Iterated bodies loop inside their pair
    (last(body) -> first(body)), optional bodies may be skipped, and the
    end-mark follows every last position of the root.
    """
    follow: dict[tuple, set] = {}

    def note(positions, firsts):
        for p in positions:
            follow.setdefault(p, set()).update(firsts)

    def seq(triples):
        nullable = True
        first: set = set()
        for n, f, _ in triples:
            if nullable:
                first |= f
            nullable = nullable and n
        pending: set = set()
        for n, f, l in triples:
            note(pending, f)
            pending = set(l) | (pending if n else set())
        return nullable, frozenset(first), frozenset(pending)

    def loop(triple):
        _, f, l = triple
        note(l, f)

    def visit(node: NumNode):
        kind = node.kind
        if kind == "terminal":
            p = ("t", node.num)
            follow.setdefault(p, set())
            return False, frozenset({p}), frozenset({p})
        if kind == "epsilon":
            p = ("e", node.num)
            follow.setdefault(p, set())
            return False, frozenset({p}), frozenset({p})
        open_t = (False, frozenset({("(", node.num)}), frozenset({("(", node.num)}))
        close_t = (False, frozenset({(")", node.num)}), frozenset({(")", node.num)}))
        follow.setdefault(("(", node.num), set())
        follow.setdefault((")", node.num), set())
        kids = [visit(c) for c in node.children]
        if kind in ("concat", "repeat", "group"):
            content = [seq(kids)] if kids else []
        elif kind == "union":
            nullable = any(k[0] for k in kids)
            first = frozenset().union(*(k[1] for k in kids))
            last = frozenset().union(*(k[2] for k in kids))
            content = [(nullable, first, last)]
        elif kind in ("star", "cross"):
            body = kids[0]
            loop(body)
            content = [(kind == "star" or body[0], body[1], body[2])]
        elif kind == "optional":
            body = kids[0]
            content = [(True, body[1], body[2])]
        elif kind == "opttail":
            body = seq(kids)
            content = [(True, body[1], body[2])]
        else:
            raise AssertionError(kind)
        return seq([open_t] + content + [close_t])

    _, first, last = visit(nre.root)
    note(last, {END})
    return Followers({k: frozenset(v) for k, v in follow.items()}, first)


@dataclass(frozen=True)
class Segment:
    """One segment: meta prefix of paren/epsilon symbols plus an end letter.

    ``end`` is ("t", number, cell) for terminal-ended segments or END.
    Ids are dense 1..ℓ, assigned in (end-letter number, meta symbols, cell)
    lexicographic order (end-mark sorts last).
    """

    sid: int
    meta: tuple
    end: tuple

    @property
    def end_key(self) -> tuple:
        return END if self.end == END else ("t", self.end[1])

    @property
    def first_key(self) -> tuple:
        return self.meta[0] if self.meta else self.end_key

    @property
    def cell(self) -> int | None:
        return None if self.end == END else self.end[2]


@dataclass
class SegmentTable:
    """The segment set of a numbered pattern plus its follower relation.

    Bit i-1 of every mask stands for segment id i.  ``imask`` marks initial
    segments (meta prefix starts with the root open), ``fmask`` final ones
    (end letter ⊣).  ``folseg[sid]`` is the mask of segments that may follow
    sid in an LST; ``sigma[cell]`` masks the segments whose end letter reads
    an input byte of that cell.
    """

    nre: NumberedRE
    followers: Followers
    repeat_limit: int
    segments: list  # index 0 unused; segments[sid] -> Segment
    imask: int
    fmask: int
    folseg: list[int] = field(default_factory=list)
    sigma: dict[int, int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.segments) - 1

    @property
    def words(self) -> int:
        """64-bit words per state-set column."""
        return (self.size + 63) // 64

    def end_cell(self, sid: int) -> int | None:
        return self.segments[sid].cell

    def cell_mask(self, cell: int | None) -> int:
        if cell is None:
            return 0
        return self.sigma.get(cell, 0)

    def token(self, sym: tuple) -> str:
        kind = sym[0]
        if kind == "(":
            return f"{sym[1]}("
        if kind == ")":
            return f"){sym[1]}"
        if kind == "e":
            return f"ε{sym[1]}"
        if kind == "$":
            return "⊣"
        assert kind == "t"
        return f"{self.nre.partition.display(sym[2])}{sym[1]}"

    def render_segment(self, sid: int) -> str:
        seg = self.segments[sid]
        return " ".join([self.token(s) for s in seg.meta] + [self.token(seg.end)])

    def segment_id(self, rendered_or_content) -> int:
        """Look up a segment id by rendered text or (meta, end) content."""
        if isinstance(rendered_or_content, str):
            for sid in range(1, self.size + 1):
                if self.render_segment(sid) == rendered_or_content:
                    return sid
            raise KeyError(rendered_or_content)
        meta, end = rendered_or_content
        for sid in range(1, self.size + 1):
            seg = self.segments[sid]
            if seg.meta == tuple(meta) and seg.end == tuple(end):
                return sid
        raise KeyError(rendered_or_content)

    def dump(self) -> str:
        lines = []
        for sid in range(1, self.size + 1):
            flags = ""
            if bit(sid) & self.imask:
                flags += " I"
            if bit(sid) & self.fmask:
                flags += " F"
            lines.append(f"{sid}: {self.render_segment(sid)}{flags}")
        return "\n".join(lines)

    def digest(self) -> bytes:
        h = hashlib.sha256()
        h.update(self.dump().encode())
        h.update(f"\nrepeat_limit={self.repeat_limit}\n".encode())
        for sid in range(1, self.size + 1):
            h.update(f"folseg {sid}: {self.folseg[sid]:x}\n".encode())
        return h.digest()


_KIND_RANK = {")": 0, "(": 1, "e": 2}


def _meta_sort_key(meta: tuple) -> tuple:
    return tuple((sym[1], _KIND_RANK[sym[0]]) for sym in meta)


def compute_segments(
    nre: NumberedRE,
    repeat_limit: int = 1,
    max_segments: int = 1 << 16,
) -> SegmentTable:
    """Enumerate all segments of a numbered pattern.

    Walks follower chains backwards from each end letter with an explicit
    worklist: a partial segment grows by prepending a predecessor symbol
    until it hits the root open (initial segment) or a terminal predecessor
    (the segment is maximal).  Prepending stops when a symbol would occur
    more than ``repeat_limit`` times in the meta prefix, which bounds the
    walk for infinitely ambiguous patterns.  Raises SegmentExplosionError
    past ``max_segments`` distinct segments (or a proportional step budget).
    """
    fol = classic_followers(nre)
    pred: dict[tuple, list] = {}
    for r, succs in fol.follow.items():
        for s in succs:
            pred.setdefault(s, []).append(r)
    root_open = ("(", 1)

    # follower sets ignore alphabet cells, so walk once per terminal number
    # and fan the resulting meta prefixes out over the terminal's cells.
    rep_keys = [("t", n) for n in sorted(nre.terminals)] + [END]
    metas: dict[tuple, set] = {k: set() for k in rep_keys}
    budget = max(max_segments * 64, 1 << 20)
    steps = 0
    for atom_key in rep_keys:
        stack = [()]
        while stack:
            meta = stack.pop()
            steps += 1
            if steps > budget:
                raise SegmentExplosionError(
                    f"segment walk exceeded {budget} steps (repeat_limit={repeat_limit})"
                )
            s = meta[0] if meta else atom_key
            if s == root_open:
                metas[atom_key].add(meta)
                continue
            for r in pred.get(s, ()):
                if r[0] == "t":
                    metas[atom_key].add(meta)
                elif meta.count(r) < repeat_limit:
                    stack.append((r,) + meta)

    contents = []
    for key, metaset in metas.items():
        if key == END:
            ends = [END]
            end_num = 1 << 30
        else:
            ends = [("t", key[1], cell) for cell in nre.term_cells[key[1]]]
            end_num = key[1]
        for meta in metaset:
            for e in ends:
                cell = 0 if e == END else e[2]
                contents.append(((end_num, _meta_sort_key(meta), cell), meta, e))
    if len(contents) > max_segments:
        raise SegmentExplosionError(
            f"{len(contents)} segments exceed the cap of {max_segments}"
        )
    contents.sort(key=lambda t: t[0])

    segments = [None]
    imask = 0
    fmask = 0
    for sid, (_, meta, end) in enumerate(contents, start=1):
        segments.append(Segment(sid, meta, end))
        if meta and meta[0] == root_open:
            imask |= bit(sid)
        if end == END:
            fmask |= bit(sid)

    table = SegmentTable(
        nre=nre,
        followers=fol,
        repeat_limit=repeat_limit,
        segments=segments,
        imask=imask,
        fmask=fmask,
    )
    follower_segments(table)
    return table


def follower_segments(table: SegmentTable) -> list[int]:
    """Fill table.folseg: which segments may follow which in an LST.

    Segment σ follows ρ iff σ's first symbol is a classic follower of ρ's
    end letter.  Also derives table.sigma (end-letter cell -> segment mask).
    """
    by_first: dict[tuple, int] = {}
    for sid in range(1, table.size + 1):
        key = table.segments[sid].first_key
        by_first[key] = by_first.get(key, 0) | bit(sid)
    folseg = [0] * (table.size + 1)
    for sid in range(1, table.size + 1):
        mask = 0
        for k in table.followers.of(table.segments[sid].end_key):
            mask |= by_first.get(k, 0)
        folseg[sid] = mask
    table.folseg = folseg
    sigma: dict[int, int] = {}
    for sid in range(1, table.size + 1):
        cell = table.segments[sid].cell
        if cell is not None:
            sigma[cell] = sigma.get(cell, 0) | bit(sid)
    table.sigma = sigma
    return folseg
