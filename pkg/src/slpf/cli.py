"""slpfgrep: grep-style front end for the shared-forest parsing engines.

Matching is whole-text: the pattern must derive the entire input file.
Subcommands:

    parse   parse a text; emit the LST count, the trees, or the binary forest
    query   report the byte spans matched by one numbered group
    bench   time repeated parses and print a CSV of the phase breakdown
    oracle  cross-check all engines on a small pattern over short texts

Exit codes: 0 accept, 1 reject (prints ``reject at offset N``), 2 I/O
error, 3 usage or pattern error.
"""

from __future__ import annotations

import argparse
import os
import re as _stdre
import sys

from .automata import CompiledRe, DfaExplosionError, compile_re
from .forest import Slpf, count_lsts, enumerate_lsts, get_matches, render_lst
from .oracle import CHECKS, check_re
from .parallel import parse_parallel
from .segments import SegmentExplosionError, iter_bits
from .serial import parse_serial_dfa, parse_serial_nfa
from .syntax import ReError

ENGINES = ("serial-nfa", "serial-dfa", "parallel")


class _UsageError(Exception):
    """Bad flag combination or malformed argument; exits 3."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; our contract reserves 2 for I/O
    def error(self, message):
        self.exit(3, f"{self.prog}: error: {message}\n")


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _load_pattern(args) -> CompiledRe:
    src = _read(args.pattern)
    if src.endswith(b"\n"):
        src = src[:-1]
    return compile_re(src, args.repeat_limit)


def _run_engine(args, cre: CompiledRe, text: bytes) -> Slpf:
    if args.engine == "serial-nfa":
        return parse_serial_nfa(cre, text)
    if args.engine == "serial-dfa":
        return parse_serial_dfa(cre, text)
    return parse_parallel(
        cre, text, chunks=args.chunks, workers=args.threads, fragments=args.fragments
    )


def _reject(slpf: Slpf) -> int:
    print(f"reject at offset {slpf.reject_offset}")
    return 1


# ---------------------------------------------------------------------------
# dumps


def _ids(mask: int) -> str:
    return "{" + ",".join(str(q) for q in iter_bits(mask)) + "}"


def _dump(cre: CompiledRe, what: str) -> str:
    if what == "segments":
        return cre.table.dump()
    part = cre.nre.partition
    if what == "nfa":
        nfa = cre.nfa
        lines = [
            f"{nfa.size} states, initial {_ids(nfa.imask)}, final {_ids(nfa.fmask)}"
        ]
        for cell in sorted(nfa.matrix):
            for q, row in enumerate(nfa.matrix[cell]):
                if row:
                    lines.append(f"  {q} --{part.display(cell)}--> {_ids(row)}")
        return "\n".join(lines)
    dfa = cre.dfa if what == "dfa" else cre.medfa
    lines = [f"{dfa.num_states} states, start {dfa.start}"]
    entry_of = {}
    if what == "medfa":
        entry_of = {cre.medfa.entries[q]: q for q in range(1, cre.nfa.size + 1)}
    for sid in range(1, len(dfa.states)):
        flags = " final" if dfa.is_final(sid) else ""
        if sid in entry_of:
            flags += f" entry({entry_of[sid]})"
        lines.append(f"  {sid}: {_ids(dfa.states[sid])}{flags}")
        for cell in range(dfa.ncells):
            nxt = dfa.step_id(sid, cell)
            if nxt:
                lines.append(f"    --{part.display(cell)}--> {nxt}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommands


def cmd_parse(args) -> int:
    cre = _load_pattern(args)
    if args.dump:
        print(_dump(cre, args.dump))
        return 0
    if args.text is None:
        raise _UsageError("a text file is required unless --dump is given")
    if args.emit == "slpf" and args.out is None:
        raise _UsageError("--emit slpf needs --out FILE")
    text = _read(args.text)
    slpf = _run_engine(args, cre, text)
    if not slpf.accepted:
        return _reject(slpf)
    if args.emit == "count":
        print(count_lsts(slpf))
    elif args.emit == "lsts":
        for path in enumerate_lsts(slpf, limit=args.limit):
            print(render_lst(cre.table, path))
    else:
        from .codec import encode, write_slpf

        with open(args.out, "wb") as fh:
            fh.write(write_slpf(encode(slpf)))
    return 0


_QUERY_RE = _stdre.compile(r"g(\d+)(?:/g(\d+))?\Z")


def cmd_query(args) -> int:
    m = _QUERY_RE.match(args.query)
    if not m:
        raise _UsageError(f"bad query {args.query!r}: expected g<N> or g<N>/g<M>")
    group = int(m.group(1))
    within = int(m.group(2)) if m.group(2) else None
    cre = _load_pattern(args)
    text = _read(args.text)
    known = {num for num, _, _ in cre.nre.op_table}
    for g in (group, within):
        if g is not None and g not in known:
            raise _UsageError(f"unknown group number {g}")
    slpf = _run_engine(args, cre, text)
    if not slpf.accepted:
        return _reject(slpf)
    spans = get_matches(slpf, group, within=within)
    for span in spans:
        piece = text[span.start : span.end].decode("latin-1")
        print(f"{span.start}\t{span.end}\t{piece}")
    return 0


def cmd_bench(args) -> int:
    cre = _load_pattern(args)
    text = _read(args.text)
    configs: list[tuple[str, int, int]] = []
    if args.threads_sweep:
        m = _stdre.match(r"(\d+)\.\.(\d+)\Z", args.threads_sweep)
        if not m:
            raise _UsageError(f"bad --threads-sweep {args.threads_sweep!r}: expected A..B")
        lo, hi = int(m.group(1)), int(m.group(2))
        for t in range(lo, hi + 1):
            configs.append(("parallel", t, args.chunks or t))
    elif args.engine == "parallel":
        t = args.threads or os.cpu_count() or 1
        configs.append(("parallel", t, args.chunks or t))
    else:
        configs.append((args.engine, 1, 1))
    print("engine,threads,chunks,text_bytes,run,parse_ns,reach_ns,join_ns,build_ns")
    for engine, threads, chunks in configs:
        for run in range(1, args.reps + 1):
            if engine == "serial-nfa":
                slpf = parse_serial_nfa(cre, text)
            elif engine == "serial-dfa":
                slpf = parse_serial_dfa(cre, text)
            else:
                slpf = parse_parallel(
                    cre, text, chunks=chunks, workers=threads, fragments=args.fragments
                )
            t = slpf.timings
            print(
                f"{engine},{threads},{chunks},{len(text)},{run},"
                f"{t.parse_ns},{t.reach_ns},{t.join_ns},{t.build_ns}"
            )
    return 0


def cmd_oracle(args) -> int:
    cre = _load_pattern(args)
    if cre.nre.size > 12:
        raise _UsageError(
            f"pattern has {cre.nre.size} numbered symbols; the oracle is "
            "exhaustive and only takes up to 12"
        )
    if not 1 <= args.max_len <= 6:
        raise _UsageError("--max-len must be between 1 and 6")
    src = cre.source.decode("latin-1")
    print(
        f"pattern {src}: {cre.nre.size} numbered symbols, "
        f"{cre.size} segments, repeat limit {cre.repeat_limit}"
    )
    print(
        f"automata: NFA {cre.nfa.size} states, DFA {cre.dfa.num_states}, "
        f"ME-DFA {cre.medfa.num_states} ({cre.nfa.size} entries)"
    )
    problems = check_re(cre, max_len=args.max_len, check_codec=True)
    by_check: dict[str, list[str]] = {}
    for check, msg in problems:
        by_check.setdefault(check, []).append(msg)
    for check in CHECKS:
        msgs = by_check.get(check, [])
        print(f"{check}: {'pass' if not msgs else f'FAIL ({len(msgs)})'}")
        for msg in msgs[:5]:
            print(f"  {msg}")
    return 1 if problems else 0


# ---------------------------------------------------------------------------
# wiring


def _engine_flags(p) -> None:
    p.add_argument("--engine", choices=ENGINES, default="serial-dfa")
    p.add_argument("--chunks", type=int, metavar="N", help="parallel chunk count")
    p.add_argument("--threads", type=int, metavar="N", help="parallel worker count")
    p.add_argument(
        "--fragments", type=int, default=4, metavar="N", help="fragments per chunk"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slpfgrep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a text and emit count/trees/forest")
    p.add_argument("pattern", metavar="RE-FILE", help="file holding the pattern")
    p.add_argument("text", metavar="TEXT-FILE", nargs="?", help="input text")
    p.add_argument("--repeat-limit", type=int, default=1, metavar="N")
    _engine_flags(p)
    p.add_argument("--emit", choices=("count", "lsts", "slpf"), default="count")
    p.add_argument("--limit", type=int, metavar="N", help="cap for --emit lsts")
    p.add_argument("--out", metavar="FILE", help="output file for --emit slpf")
    p.add_argument(
        "--dump",
        choices=("segments", "nfa", "dfa", "medfa"),
        help="print the compiled artifact instead of parsing",
    )
    p.set_defaults(func=cmd_parse)

    q = sub.add_parser("query", help="byte spans matched by a numbered group")
    q.add_argument("pattern", metavar="RE-FILE")
    q.add_argument("text", metavar="TEXT-FILE")
    q.add_argument("query", metavar="QUERY", help="g<N> or g<N>/g<M>")
    q.add_argument("--repeat-limit", type=int, default=1, metavar="N")
    _engine_flags(q)
    q.add_argument("--emit", choices=("matches",), default="matches")
    q.set_defaults(func=cmd_query)

    b = sub.add_parser("bench", help="time repeated parses, print CSV")
    b.add_argument("pattern", metavar="RE-FILE")
    b.add_argument("text", metavar="TEXT-FILE")
    b.add_argument("--repeat-limit", type=int, default=1, metavar="N")
    _engine_flags(b)
    b.add_argument("--emit", choices=("csv",), default="csv")
    b.add_argument("--reps", type=int, default=3, metavar="N", help="runs per config")
    b.add_argument(
        "--threads-sweep", metavar="A..B", help="bench the parallel engine at each count"
    )
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help="exhaustively cross-check a small pattern")
    o.add_argument("pattern", metavar="RE-FILE")
    o.add_argument("--repeat-limit", type=int, default=1, metavar="N")
    o.add_argument("--max-len", type=int, default=4, metavar="N", help="longest text")
    o.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"slpfgrep: error: {exc}", file=sys.stderr)
        return 3
    except (ReError, SegmentExplosionError, DfaExplosionError) as exc:
        print(f"slpfgrep: bad pattern: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"slpfgrep: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
