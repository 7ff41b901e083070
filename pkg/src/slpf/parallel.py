"""Data-parallel parsing: split, reach, join, build & merge, compose.

The text is split into c chunks.  The reach phase runs the multi-entry
automaton from every single-segment entry over each chunk (and its
reverse over the reversed chunk), one run at a time to completion.  The
join phase telescopes those per-entry results left-to-right into the
boundary columns J_0..J_c (and right-to-left into Ĵ_1..Ĵ_{c+1}).  Each
boundary column is by construction a plain forward (resp. backward) DFA
state, so the build phase can run the DFA forward from J_{i-1} through
chunk i, write the raw columns into the shared array, then intersect in
place with the reverse-DFA states walked backward from Ĵ_{i+1}.  The
compose step only writes C_0 = J_0 ∩ Ĵ_1.  Output is bit-identical to
the serial DFA engine for every chunk and worker count.

Work is queued as (chunk, fragment) tasks in a shared FIFO; per-entry
fragment results compose left-to-right per chunk after the pool drains
(set-to-set steps distribute over the entries of the intermediate set).
Workers are forked processes sharing read-only automata/text and writing
disjoint slices of shared-memory arrays; small inputs (or a single
worker) run the identical task functions in-process.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from multiprocessing import get_context
from multiprocessing.shared_memory import SharedMemory

import numpy as np

from .automata import CompiledRe, Dfa, MeDfa
from .forest import ParseTimings, Slpf, mask_rows
from .segments import bit, iter_bits
from .serial import parse_serial_dfa, scan_ids, scan_table, state_masks

__all__ = [
    "ChunkPlan",
    "JoinColumns",
    "ReachArrays",
    "build_and_merge",
    "join",
    "parse_parallel",
    "plan_chunks",
    "reach",
    "recognize_parallel",
]

# below this many bytes the fork + shared-memory machinery costs more
# than it buys; the identical task functions then run in-process
POOL_THRESHOLD = 1 << 16


@dataclass(frozen=True)
class ChunkPlan:
    """Contiguous chunk ranges covering [0, n), plus tuning knobs."""

    ranges: tuple[tuple[int, int], ...]
    fragments: int = 4
    workers: int = 1

    @property
    def chunk_count(self) -> int:
        return len(self.ranges)

    def fragment_ranges(self, i: int) -> list[tuple[int, int]]:
        """Sub-ranges of chunk i, at most ``fragments`` many, in order."""
        s, e = self.ranges[i]
        if e == s:
            return []
        step = math.ceil((e - s) / self.fragments)
        return [(lo, min(lo + step, e)) for lo in range(s, e, step)]


def plan_chunks(n: int, chunks: int, fragments: int = 4, workers: int = 1) -> ChunkPlan:
    """Split [0, n) into ``chunks`` ranges of length ceil(n/chunks).

    The last chunk may be shorter; when n < chunks the count drops to n so
    no range is empty.  n = 0 yields a single empty range (callers fall
    back to the serial engine for parsing).
    """
    if chunks < 1:
        raise ValueError("chunk count must be >= 1")
    if n == 0:
        return ChunkPlan(ranges=((0, 0),), fragments=fragments, workers=workers)
    k = math.ceil(n / chunks)
    ranges = tuple((lo, min(lo + k, n)) for lo in range(0, n, k))
    return ChunkPlan(ranges=ranges, fragments=fragments, workers=workers)


@dataclass
class ReachArrays:
    """Per-chunk, per-entry end sets; fw[i][sid] / bw[i][sid] are segment
    masks (0 = the run died), index 0 unused."""

    fw: list[list[int]]
    bw: list[list[int]]


@dataclass
class JoinColumns:
    """Boundary columns: fw = [J_0..J_c]; bw[i] = Ĵ_i for 1 ≤ i ≤ c+1
    (bw[0] unused).  failed_chunk is the 1-based chunk whose forward
    column died, None for end-of-text rejection or acceptance."""

    fw: list[int]
    bw: list[int]
    accepted: bool
    failed_chunk: int | None = None


def _entry_runs(dfa: MeDfa, cells: bytes) -> list[int]:
    """δ*({sid}, cells) for every entry sid, as segment masks (0 = dead).

    Run-major: each entry walks the whole piece before the next starts.
    The first surviving run keeps its state trajectory; a later run that
    reaches the same state at the same position must end where that run
    ended, so it jumps straight to the recorded result.
    """
    table = scan_table(dfa)
    size = len(dfa.entries) - 1
    out = [0] * (size + 1)
    ref: list[int] | None = None
    ref_final = 0
    for sid in range(1, size + 1):
        s = dfa.entries[sid]
        if ref is None:
            traj = [s]
            for c in cells:
                s = table[(s << 8) | c]
                if not s:
                    break
                traj.append(s)
            else:
                ref = traj
                ref_final = s
                out[sid] = dfa.states[s]
            continue
        final = s
        pos = 0
        for c in cells:
            s = table[(s << 8) | c]
            if not s:
                final = 0
                break
            pos += 1
            if s == ref[pos]:
                final = ref_final
                break
        else:
            final = s
        out[sid] = dfa.states[final]
    return out


def _compose_chain(rows: list[list[int]], size: int) -> list[int]:
    """Compose per-fragment entry results left-to-right into per-chunk
    ones: a set steps through a fragment as the union of its members'
    single-entry results.  No rows = identity (empty chunk)."""
    out = [0] * (size + 1)
    for sid in range(1, size + 1):
        m = bit(sid)
        for row in rows:
            if not m:
                break
            acc = 0
            for q in iter_bits(m):
                acc |= row[q]
            m = acc
        out[sid] = m
    return out


def reach(
    medfa: MeDfa,
    medfa_rev: MeDfa,
    plan: ChunkPlan,
    cells: bytes,
    *,
    backward: bool = True,
) -> ReachArrays:
    """In-process reach over cell-translated text (see CompiledRe.text_cells)."""
    size = len(medfa.entries) - 1
    fw: list[list[int]] = []
    bw: list[list[int]] = []
    for i in range(plan.chunk_count):
        pieces = [cells[lo:hi] for lo, hi in plan.fragment_ranges(i)]
        fw.append(_compose_chain([_entry_runs(medfa, p) for p in pieces], size))
        if backward:
            rows = [_entry_runs(medfa_rev, p[::-1]) for p in pieces]
            bw.append(_compose_chain(rows[::-1], size))
        else:
            bw.append([0] * (size + 1))
    return ReachArrays(fw=fw, bw=bw)


def join(arrays: ReachArrays, imask: int, fmask: int) -> JoinColumns:
    """Telescope reach results into the boundary columns (sequential)."""
    c = len(arrays.fw)
    fw = [imask]
    failed = None
    for i in range(c):
        cur = 0
        for q in iter_bits(fw[i]):
            cur |= arrays.fw[i][q]
        fw.append(cur)
        if not cur:
            failed = i + 1
            fw.extend([0] * (c - i - 1))
            break
    accepted = failed is None and bool(fw[c] & fmask)
    bw = [0] * (c + 2)
    if accepted:
        bw[c + 1] = fmask
        for i in range(c, 0, -1):
            cur = 0
            for q in iter_bits(bw[i + 1]):
                cur |= arrays.bw[i - 1][q]
            bw[i] = cur
    return JoinColumns(fw=fw, bw=bw, accepted=accepted, failed_chunk=failed)


def _build_chunk(
    fw_dfa: Dfa,
    bw_dfa: Dfa,
    cells: bytes,
    s: int,
    e: int,
    fw_id: int,
    bw_id: int,
    columns: np.ndarray,
) -> None:
    """Write clean columns s+1..e: forward DFA pass from the chunk's left
    boundary state, in-place intersection with the reverse-DFA pass from
    its right boundary state."""
    words = columns.shape[1]
    m = e - s
    if m == 0:
        return
    fw = np.zeros(m + 1, dtype=np.int64)
    scan_ids(fw_dfa, cells[s:e], fw_id, fw)
    columns[s + 1 : e + 1] = state_masks(fw_dfa, words)[fw[1:]]
    bw = np.zeros(m + 1, dtype=np.int64)
    scan_ids(bw_dfa, cells[s:e][::-1], bw_id, bw)
    columns[s + 1 : e + 1] &= state_masks(bw_dfa, words)[bw[::-1][1:]]


def build_and_merge(
    fw_dfa: Dfa,
    bw_dfa: Dfa,
    plan: ChunkPlan,
    joins: JoinColumns,
    cells: bytes,
    columns: np.ndarray,
) -> None:
    """In-process build over all chunks plus the compose step (C_0).

    The automata must contain every boundary column as a state: pass the
    merged multi-entry machines, whose index covers all forward/backward
    prefix states.
    """
    words = columns.shape[1]
    for i, (s, e) in enumerate(plan.ranges):
        _build_chunk(
            fw_dfa,
            bw_dfa,
            cells,
            s,
            e,
            fw_dfa.state_of(joins.fw[i]),
            bw_dfa.state_of(joins.bw[i + 2]),
            columns,
        )
    columns[0] = mask_rows([joins.fw[0] & joins.bw[1]], words)[0]


# ---------------------------------------------------------------------------
# worker pool plumbing

# read-only task context, set in the parent before the pool forks;
# children inherit it (and the warmed scan-table caches) via fork
_CTX: dict = {}


def _pool_reach(task: tuple[int, int]) -> int:
    i, t = task
    lo, hi = _CTX["plan"].fragment_ranges(i)[t]
    piece = _CTX["cells"][lo:hi]
    buf = _CTX["reach_buf"]
    words = buf.shape[-1]
    buf[i, t, 0] = mask_rows(_entry_runs(_CTX["fw_dfa"], piece), words)
    if _CTX["backward"]:
        buf[i, t, 1] = mask_rows(_entry_runs(_CTX["bw_dfa"], piece[::-1]), words)
    return 0


def _pool_build(task: tuple[int, int, int]) -> int:
    i, fw_id, bw_id = task
    s, e = _CTX["plan"].ranges[i]
    _build_chunk(
        _CTX["fw_dfa"],
        _CTX["bw_dfa"],
        _CTX["cells"],
        s,
        e,
        fw_id,
        bw_id,
        _CTX["columns"],
    )
    return 0


def _masks_from_rows(rows: np.ndarray) -> list[int]:
    return [int.from_bytes(row.tobytes(), "little") for row in rows]


def _reject_slpf(
    cre: CompiledRe,
    text: bytes,
    cells: bytes,
    plan: ChunkPlan,
    joins: JoinColumns,
    t0: int,
    reach_ns: int,
    join_ns: int,
) -> Slpf:
    """Raw forward columns for diagnostics plus the exact failure offset,
    reproduced by serially rescanning up to the chunk whose join column
    died (bit-identical to the serial engine's reject output)."""
    n = len(text)
    words = cre.table.words
    merged = cre.merged
    masks = state_masks(merged, words)
    columns = np.zeros((n + 1, words), dtype=np.uint64)
    columns[0] = masks[merged.state_of(joins.fw[0])]
    last = plan.chunk_count if joins.failed_chunk is None else joins.failed_chunk
    offset = n
    t2 = time.monotonic_ns()
    for i in range(last):
        s, e = plan.ranges[i]
        out = np.zeros(e - s + 1, dtype=np.int64)
        died = scan_ids(merged, cells[s:e], merged.state_of(joins.fw[i]), out)
        columns[s + 1 : e + 1] = masks[out[1:]]
        if died:
            offset = s + died
            break
    dt = time.monotonic_ns() - t0
    return Slpf(
        table=cre.table,
        nfa=cre.nfa,
        n=n,
        columns=columns,
        accepted=False,
        reject_offset=offset,
        text=text,
        timings=ParseTimings(
            parse_ns=dt,
            reach_ns=reach_ns,
            join_ns=join_ns,
            build_ns=time.monotonic_ns() - t2,
        ),
    )


def parse_parallel(
    cre: CompiledRe,
    text: bytes,
    chunks: int | None = None,
    workers: int | None = None,
    *,
    fragments: int = 4,
    force_pool: bool = False,
) -> Slpf:
    """Parse via plan → reach → join → build & merge → compose.

    Output (columns, acceptance, reject offset) is independent of the
    chunk and worker counts and bit-identical to parse_serial_dfa.  A
    single-chunk plan short-circuits to the serial engine: with no
    interior boundaries the reach and join results are provably unused.
    """
    if workers is None:
        workers = os.cpu_count() or 1
    if chunks is None:
        chunks = workers
    n = len(text)
    plan = plan_chunks(n, chunks, fragments=fragments, workers=workers)
    if plan.chunk_count == 1:
        return parse_serial_dfa(cre, text)

    t0 = time.monotonic_ns()
    cells = cre.text_cells(text)
    merged, merged_rev = cre.merged, cre.merged_rev
    words = cre.table.words
    size = cre.size
    use_pool = force_pool or (workers > 1 and n >= POOL_THRESHOLD)

    if not use_pool:
        arrays = reach(merged, merged_rev, plan, cells)
        t1 = time.monotonic_ns()
        joins = join(arrays, cre.nfa.imask, cre.nfa.fmask)
        t2 = time.monotonic_ns()
        if not joins.accepted:
            return _reject_slpf(cre, text, cells, plan, joins, t0, t1 - t0, t2 - t1)
        columns = np.zeros((n + 1, words), dtype=np.uint64)
        build_and_merge(merged, merged_rev, plan, joins, cells, columns)
        t3 = time.monotonic_ns()
        return Slpf(
            table=cre.table,
            nfa=cre.nfa,
            n=n,
            columns=columns,
            accepted=True,
            text=text,
            timings=ParseTimings(
                parse_ns=t3 - t0,
                reach_ns=t1 - t0,
                join_ns=t2 - t1,
                build_ns=t3 - t2,
            ),
        )

    # pooled path: forked workers pull (chunk, fragment) tasks from the
    # pool's FIFO and write disjoint slices of the shared arrays
    scan_table(merged)
    scan_table(merged_rev)
    state_masks(merged, words)
    state_masks(merged_rev, words)
    c, f = plan.chunk_count, plan.fragments
    shm_reach = SharedMemory(create=True, size=max(c * f * 2 * (size + 1) * words * 8, 8))
    shm_cols = SharedMemory(create=True, size=max((n + 1) * words * 8, 8))
    try:
        reach_buf = np.ndarray((c, f, 2, size + 1, words), dtype=np.uint64, buffer=shm_reach.buf)
        reach_buf[:] = 0
        col_buf = np.ndarray((n + 1, words), dtype=np.uint64, buffer=shm_cols.buf)
        col_buf[:] = 0
        _CTX.update(
            plan=plan,
            cells=cells,
            fw_dfa=merged,
            bw_dfa=merged_rev,
            backward=True,
            reach_buf=reach_buf,
            columns=col_buf,
        )
        pool = get_context("fork").Pool(workers)
        try:
            tasks = [
                (i, t)
                for i in range(c)
                for t in range(len(plan.fragment_ranges(i)))
            ]
            for _ in pool.imap_unordered(_pool_reach, tasks):
                pass
            arrays = ReachArrays(fw=[], bw=[])
            for i in range(c):
                nf = len(plan.fragment_ranges(i))
                rows_fw = [_masks_from_rows(reach_buf[i, t, 0]) for t in range(nf)]
                rows_bw = [_masks_from_rows(reach_buf[i, t, 1]) for t in range(nf)]
                arrays.fw.append(_compose_chain(rows_fw, size))
                arrays.bw.append(_compose_chain(rows_bw[::-1], size))
            t1 = time.monotonic_ns()
            joins = join(arrays, cre.nfa.imask, cre.nfa.fmask)
            t2 = time.monotonic_ns()
            if not joins.accepted:
                return _reject_slpf(cre, text, cells, plan, joins, t0, t1 - t0, t2 - t1)
            build_tasks = [
                (i, merged.state_of(joins.fw[i]), merged_rev.state_of(joins.bw[i + 2]))
                for i in range(c)
            ]
            for _ in pool.imap_unordered(_pool_build, build_tasks):
                pass
            col_buf[0] = mask_rows([joins.fw[0] & joins.bw[1]], words)[0]
            columns = np.array(col_buf)
            dt = time.monotonic_ns() - t0
        finally:
            pool.close()
            pool.join()
            _CTX.clear()
    finally:
        shm_reach.close()
        shm_reach.unlink()
        shm_cols.close()
        shm_cols.unlink()
    return Slpf(
        table=cre.table,
        nfa=cre.nfa,
        n=n,
        columns=columns,
        accepted=True,
        text=text,
        timings=ParseTimings(
            parse_ns=dt,
            reach_ns=t1 - t0,
            join_ns=t2 - t1,
            build_ns=t0 + dt - t2,
        ),
    )


def recognize_parallel(
    cre: CompiledRe,
    text: bytes,
    chunks: int | None = None,
    workers: int | None = None,
    *,
    fragments: int = 4,
) -> bool:
    """Membership via the forward reach and join phases only: true iff
    J_c meets the final segments.  No columns, no backward passes."""
    if workers is None:
        workers = os.cpu_count() or 1
    if chunks is None:
        chunks = workers
    plan = plan_chunks(len(text), chunks, fragments=fragments, workers=workers)
    cells = cre.text_cells(text)
    arrays = reach(cre.merged, cre.merged_rev, plan, cells, backward=False)
    return join(arrays, cre.nfa.imask, cre.nfa.fmask).accepted
