"""Brute-force references and randomized cross-checks.

Everything here derives answers from first principles so the engines have
something independent to be compared against: the syntax-tree derivation
oracle never touches segments or automata, and the exhaustive run search
never touches columns.  check_re wires them together with every engine
and is what the CLI oracle command and the randomized tests run.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from .automata import CompiledRe
from .codec import compress_to_dfa, decode, encode, replay
from .forest import count_lsts, enumerate_lsts, mask_rows
from .parallel import parse_parallel, recognize_parallel
from .segments import END, SegmentTable, bit, iter_bits
from .serial import parse_serial_dfa, parse_serial_nfa, recognize_serial
from .syntax import NumberedRE, NumNode

__all__ = [
    "CHECKS",
    "ast_lsts",
    "check_re",
    "factor_lst",
    "lst_tokens",
    "nfa_run_lsts",
    "random_re",
    "sample_matching_text",
    "sample_text",
    "texts_up_to",
    "useless_segments",
    "within_repeat_limit",
]


def within_repeat_limit(tokens, limit: int) -> bool:
    """True iff each maximal meta·letter factor holds any one symbol at
    most ``limit`` times (the segment walk's bound, checked on raw
    tokens without consulting a table)."""
    counts: dict = {}
    for tok in tokens:
        if tok[0] in ("t", "$"):
            counts = {}
            continue
        c = counts.get(tok, 0) + 1
        if c > limit:
            return False
        counts[tok] = c
    return True


def ast_lsts(nre: NumberedRE, text: bytes, repeat_limit: int = 1) -> set[tuple]:
    """All LST token sequences of the pattern spelling ``text``, derived
    from the numbered syntax tree alone, restricted to sequences whose
    factors respect the repeat bound.

    Input-free iterations are capped at the bound while enumerating:
    every empty iteration repeats at least one fixed symbol of its body
    inside a single factor, so deeper unrolling could never pass the
    filter anyway.
    """
    part = nre.partition
    n = len(text)
    memo: dict[tuple[int, int], frozenset] = {}

    def derive(node: NumNode, pos: int) -> frozenset:
        key = (id(node), pos)
        got = memo.get(key)
        if got is not None:
            return got
        kind = node.kind
        num = node.num
        if kind == "terminal":
            if pos < n and text[pos] in node.chars:
                out = frozenset({(pos + 1, (("t", num, part.cell_of(text[pos])),))})
            else:
                out = frozenset()
        elif kind == "epsilon":
            out = frozenset({(pos, (("e", num),))})
        else:
            if kind == "union":
                inner = set().union(*(derive(c, pos) for c in node.children))
            elif kind in ("concat", "repeat"):
                inner = chain(node.children, pos)
            elif kind == "opttail":
                # optional tail level of an expanded {h,k}: the pair is
                # present either empty or around copy j plus the next level
                inner = {(pos, ())} | chain(node.children, pos)
            elif kind in ("star", "cross"):
                inner = iterate(node.children[0], pos)
                if kind == "cross":
                    inner = {(q, t) for q, t in inner if t}
            elif kind == "optional":
                inner = {(pos, ())} | set(derive(node.children[0], pos))
            elif kind == "group":
                inner = derive(node.children[0], pos)
            else:
                raise AssertionError(f"unknown node kind {kind!r}")
            out = frozenset(
                (q, (("(", num),) + toks + ((")", num),)) for q, toks in inner
            )
        memo[key] = out
        return out

    def chain(children, pos: int) -> set:
        acc = {(pos, ())}
        for child in children:
            acc = {
                (q2, t1 + t2)
                for (q1, t1) in acc
                for (q2, t2) in derive(child, q1)
            }
        return acc

    def iterate(child: NumNode, pos: int) -> set:
        # zero or more body derivations chained; `empties` counts the
        # trailing run of input-free iterations
        seen = {(pos, ())}
        frontier = [(pos, (), 0)]
        while frontier:
            grown = []
            for p, toks, empties in frontier:
                for q, t2 in derive(child, p):
                    if q == p and empties >= repeat_limit:
                        continue
                    cand = (q, toks + t2)
                    if cand in seen:
                        continue
                    seen.add(cand)
                    grown.append((q, cand[1], empties + 1 if q == p else 0))
            frontier = grown
        return seen

    results = set()
    for q, toks in derive(nre.root, 0):
        if q == n:
            full = toks + (END,)
            if within_repeat_limit(full, repeat_limit):
                results.add(full)
    return results


def nfa_run_lsts(table: SegmentTable, cells: bytes) -> list[tuple[int, ...]]:
    """Every accepting run σ_0..σ_n as a sorted list of sid tuples, by
    exhaustive depth-first search over the follower arcs."""
    n = len(cells)
    runs: list[tuple[int, ...]] = []

    def walk(sid: int, r: int, path: tuple[int, ...]) -> None:
        if r == n:
            if bit(sid) & table.fmask:
                runs.append(path)
            return
        if table.end_cell(sid) != cells[r]:
            return
        for nxt in iter_bits(table.folseg[sid]):
            walk(nxt, r + 1, path + (nxt,))

    for sid in iter_bits(table.imask):
        walk(sid, 0, (sid,))
    return sorted(runs)


def lst_tokens(table: SegmentTable, path: tuple[int, ...]) -> tuple:
    """Concatenate a run's segments back into the full token sequence."""
    toks: list = []
    for sid in path:
        seg = table.segments[sid]
        toks.extend(seg.meta)
        toks.append(seg.end)
    return tuple(toks)


def factor_lst(table: SegmentTable, tokens) -> tuple[int, ...] | None:
    """Split a token sequence after each end letter and look every factor
    up in the table; None when some factor is not a stored segment."""
    index = table.__dict__.get("_content_index")
    if index is None:
        index = {
            (table.segments[sid].meta, table.segments[sid].end): sid
            for sid in range(1, table.size + 1)
        }
        table.__dict__["_content_index"] = index
    path = []
    meta: list = []
    for tok in tokens:
        if tok[0] in ("t", "$"):
            sid = index.get((tuple(meta), tok))
            if sid is None:
                return None
            path.append(sid)
            meta.clear()
        else:
            meta.append(tok)
    if meta:
        return None
    return tuple(path)


def useless_segments(table: SegmentTable) -> list[int]:
    """Segments on no complete path (unreachable from the initial set or
    not co-reachable to a final one in the follower graph).  A correct
    table has none."""
    fwd = table.imask
    while True:
        grown = fwd
        for sid in iter_bits(fwd):
            grown |= table.folseg[sid]
        if grown == fwd:
            break
        fwd = grown
    bwd = table.fmask
    while True:
        grown = bwd
        for sid in range(1, table.size + 1):
            if table.folseg[sid] & bwd:
                grown |= bit(sid)
        if grown == bwd:
            break
        bwd = grown
    good = fwd & bwd
    return [sid for sid in range(1, table.size + 1) if not bit(sid) & good]


def random_re(rng: random.Random, max_terminals: int = 8) -> str:
    """A random pattern with at most ``max_terminals`` terminal
    occurrences after bounded-repeat expansion.

    Unbounded iterators never get a nullable body (that, and only that,
    would make ambiguity infinite); finite ambiguity — optionals, empty
    union branches, bounded repeats — is generated freely.  Composite
    pieces come back parenthesized so they embed safely anywhere.
    """
    letters = "ab" if rng.random() < 0.7 else "abc"

    def gen(budget: int, depth: int) -> tuple[str, bool, int]:
        roll = rng.random()
        if budget <= 1 or depth >= 4 or roll < 0.30:
            return rng.choice(letters), False, 1
        if roll < 0.50:
            k = 2 if budget < 4 or rng.random() < 0.6 else 3
            parts, used, nullable = [], 0, True
            for i in range(k):
                share = max(1, (budget - used) // (k - i))
                s, nl, u = gen(share, depth + 1)
                parts.append(s)
                used += u
                nullable = nullable and nl
            return "(" + "".join(parts) + ")", nullable, used
        if roll < 0.72:
            k = 2 if budget < 4 or rng.random() < 0.6 else 3
            parts, used, nullable = [], 0, False
            for i in range(k):
                share = max(1, (budget - used) // (k - i))
                s, nl, u = gen(share, depth + 1)
                parts.append(s)
                used += u
                nullable = nullable or nl
            if rng.random() < 0.15:
                parts.append("")
                nullable = True
            return "(" + "|".join(parts) + ")", nullable, used
        if roll < 0.92:
            op = rng.choice("*+?")
            s, nl, u = gen(max(1, budget - 1), depth + 1)
            if op != "?" and nl:
                op = "?"
            return "(" + s + op + ")", True if op != "+" else nl, u
        h = rng.randint(0, 2)
        k = h + rng.randint(0 if h else 1, 2)
        k = max(k, 1)
        if budget < k:
            return rng.choice(letters), False, 1
        s, nl, u = gen(budget // k, depth + 1)
        return "(" + s + "{" + f"{h},{k}" + "}" + ")", nl or h == 0, k * u

    source, _, _ = gen(max_terminals, 0)
    return source


def sample_text(rng: random.Random, letters: bytes, max_len: int) -> bytes:
    n = rng.randint(0, max_len)
    return bytes(rng.choice(letters) for _ in range(n)) if letters else b""


def sample_matching_text(cre: CompiledRe, rng: random.Random, approx_len: int) -> bytes:
    """A random accepted text of roughly ``approx_len`` bytes.

    Walks the DFA taking random live steps, then closes with a shortest
    path into an accepting state.  Texts come out shorter when the
    language runs out of long strings (no live cycle to pump).
    """
    dfa = cre.dfa
    nc = dfa.ncells
    # distance to acceptance per state, by reverse breadth-first search
    dist = [None] * len(dfa.states)
    horizon = [q for q in range(1, len(dfa.states)) if dfa.is_final(q)]
    for q in horizon:
        dist[q] = 0
    into: dict[int, list[int]] = {}
    for q in range(1, len(dfa.states)):
        for cell in range(nc):
            t = dfa.step_id(q, cell)
            if t:
                into.setdefault(t, []).append(q)
    while horizon:
        nxt = []
        for t in horizon:
            for q in into.get(t, ()):
                if dist[q] is None:
                    dist[q] = dist[t] + 1
                    nxt.append(q)
        horizon = nxt

    letter = [min(cell) for cell in cre.nre.partition.cells]
    out = bytearray()
    q = dfa.start
    while not (len(out) >= approx_len and dfa.is_final(q)):
        steps = [
            (cell, t)
            for cell in range(nc)
            if (t := dfa.step_id(q, cell)) and dist[t] is not None
        ]
        if not steps:
            break  # accepting and nothing live to extend with
        if len(out) >= approx_len:
            cell, q = min(steps, key=lambda ct: dist[ct[1]])
        else:
            cell, q = rng.choice(steps)
        out.append(letter[cell])
    return bytes(out)


def texts_up_to(letters: bytes, max_len: int):
    """All strings over ``letters`` of length 0..max_len, shortest first."""
    for n in range(max_len + 1):
        for combo in itertools.product(letters, repeat=n):
            yield bytes(combo)


# check_re mismatch categories, in reporting order
CHECKS = (
    "useful-segments",
    "acceptance",
    "columns",
    "recognizer",
    "lst-set",
    "lst-count",
    "tree-derivation",
    "codec",
)


def check_re(
    cre: CompiledRe,
    max_len: int = 5,
    chunk_counts: tuple[int, ...] = (1, 2, 3, 5),
    check_codec: bool = False,
) -> list[tuple[str, str]]:
    """Cross-check every engine against the brute-force references on all
    texts up to ``max_len`` over the pattern's alphabet, plus a probe
    outside it.  Returns (category, report) mismatches; empty = pass.
    """
    problems: list[tuple[str, str]] = []
    table = cre.table
    src = cre.source.decode("utf-8", "replace")

    bad = useless_segments(table)
    if bad:
        problems.append(("useful-segments", f"{src}: useless segments {bad}"))

    letters = bytes(min(cell) for cell in cre.nre.partition.cells)
    outside = next(
        (b for b in range(256) if cre.nre.partition.byte_to_cell[b] == 0xFF),
        None,
    )
    texts = list(texts_up_to(letters, max_len))
    if outside is not None:
        texts.append(bytes([outside]))
        if letters:
            texts.append(letters[:1] + bytes([outside]))

    for text in texts:
        where = f"{src} on {text!r}"
        cells = cre.text_cells(text)
        runs = nfa_run_lsts(table, cells)
        accepted = bool(runs)
        ser = parse_serial_dfa(cre, text)
        engines = [("serial-nfa", parse_serial_nfa(cre, text)), ("serial-dfa", ser)]
        for c in chunk_counts:
            engines.append(
                (f"parallel-c{c}", parse_parallel(cre, text, chunks=c, workers=1))
            )
        for name, slpf in engines:
            if slpf.accepted != accepted:
                problems.append(
                    (
                        "acceptance",
                        f"{where}: {name} accepted={slpf.accepted}, run search says {accepted}",
                    )
                )
            elif slpf.reject_offset != ser.reject_offset or not np.array_equal(
                slpf.columns, ser.columns
            ):
                problems.append(
                    ("columns", f"{where}: {name} columns/offset differ from serial-dfa")
                )
        if recognize_serial(cre, text) != accepted:
            problems.append(("recognizer", f"{where}: serial recognizer mismatch"))
        if recognize_parallel(cre, text, chunks=chunk_counts[-1]) != accepted:
            problems.append(("recognizer", f"{where}: parallel recognizer mismatch"))
        if not accepted:
            continue

        masks = [0] * (len(text) + 1)
        for run in runs:
            for r, sid in enumerate(run):
                masks[r] |= bit(sid)
        if not np.array_equal(ser.columns, mask_rows(masks, table.words)):
            problems.append(("columns", f"{where}: clean columns differ from the run union"))
        paths = sorted(enumerate_lsts(ser))
        if paths != runs:
            problems.append(("lst-set", f"{where}: LST enumeration != run search"))
        if count_lsts(ser) != len(runs):
            problems.append(
                ("lst-count", f"{where}: count {count_lsts(ser)} != {len(runs)} runs")
            )
        derived = ast_lsts(cre.nre, text, cre.repeat_limit)
        run_tokens = {lst_tokens(table, run) for run in runs}
        if derived != run_tokens:
            problems.append(
                (
                    "tree-derivation",
                    f"{where}: {len(derived)} tree derivations != "
                    f"{len(run_tokens)} run token sequences",
                )
            )
        if check_codec:
            dec = decode(encode(ser), cre, text)
            if not np.array_equal(dec.columns, ser.columns):
                problems.append(("codec", f"{where}: encode/decode not lossless"))
            rep = replay(compress_to_dfa(ser), cre, text)
            if not np.array_equal(rep.columns, ser.columns):
                problems.append(("codec", f"{where}: compress/replay not lossless"))
    return problems
