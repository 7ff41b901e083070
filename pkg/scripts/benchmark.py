#!/usr/bin/env python3
"""Serial vs parallel parse times on a record-structured corpus.

Builds a text of random 8-letter records (``aabcdbcc;`` ...) matching
``((a|b|c|d){8};)*``, parses it with the serial DFA engine and with the
parallel engine at each requested worker count, and prints one CSV row per
run (same header as ``slpfgrep bench``).  Medians and speedups go to
stderr so the CSV stays clean.

    python3 scripts/benchmark.py --size-mb 10 --threads 1,2,4,8 --reps 5
"""

from __future__ import annotations

import argparse
import random
import statistics
import sys

from slpf import compile_re, parse_parallel, parse_serial_dfa

PATTERN = "((a|b|c|d){8};)*"
RECORD = 9  # eight letters plus the separator

_LETTERS = bytes(b"abcd"[i & 3] for i in range(256))


def build_text(size_bytes: int, rng: random.Random) -> bytes:
    records = max(1, size_bytes // RECORD)
    letters = rng.randbytes(8 * records).translate(_LETTERS)
    out = bytearray()
    for i in range(records):
        out += letters[8 * i : 8 * i + 8]
        out += b";"
    return bytes(out)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size-mb", type=float, default=10.0)
    ap.add_argument("--threads", default="1,2,4", help="comma-separated worker counts")
    ap.add_argument("--chunks", type=int, help="fixed chunk count (default: = workers)")
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--fragments", type=int, default=4)
    ap.add_argument("--pattern", default=PATTERN)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    text = build_text(int(args.size_mb * (1 << 20)), rng)
    cre = compile_re(args.pattern)
    print(
        f"pattern {args.pattern}: {cre.size} segments, "
        f"{cre.dfa.num_states} DFA / {cre.medfa.num_states} ME-DFA states; "
        f"text {len(text)} bytes",
        file=sys.stderr,
    )

    print("engine,threads,chunks,text_bytes,run,parse_ns,reach_ns,join_ns,build_ns")

    def rows(engine: str, threads: int, chunks: int, parse):
        meds = []
        for run in range(1, args.reps + 1):
            slpf = parse()
            if not slpf.accepted:
                print(f"unexpected reject at {slpf.reject_offset}", file=sys.stderr)
                return None
            t = slpf.timings
            print(
                f"{engine},{threads},{chunks},{len(text)},{run},"
                f"{t.parse_ns},{t.reach_ns},{t.join_ns},{t.build_ns}"
            )
            meds.append(t)
        med = statistics.median(t.parse_ns for t in meds)
        join = statistics.median(t.join_ns for t in meds)
        return med, join

    serial_med, _ = rows("serial-dfa", 1, 1, lambda: parse_serial_dfa(cre, text))
    print(f"serial-dfa median {serial_med / 1e6:.1f} ms", file=sys.stderr)

    for t in (int(x) for x in args.threads.split(",")):
        chunks = args.chunks or t
        res = rows(
            "parallel",
            t,
            chunks,
            lambda: parse_parallel(
                cre, text, chunks=chunks, workers=t, fragments=args.fragments
            ),
        )
        if res is None:
            return 1
        med, join = res
        print(
            f"parallel t={t} c={chunks} median {med / 1e6:.1f} ms  "
            f"speedup {serial_med / med:.2f}x  join {100 * join / med:.1f}%",
            file=sys.stderr,
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
