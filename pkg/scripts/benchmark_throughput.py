"""Measure indicator throughput on a large seeded synthetic corpus.

Generates the corpus once, then times one indicators run in a child
process and reports wall time, records per second and peak memory.
"""

from __future__ import annotations

import argparse
import subprocess
import sys
import tempfile
import time
from pathlib import Path

from noai.synth import generate, world_spec, write_spec_actors, write_spec_registry

RUNNER = """\
import resource, sys
from noai.cli import main
rc = main(sys.argv[1:])
peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
print(f"MAXRSS_KIB {peak}")
sys.exit(rc)
"""


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-records", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--work-dir", default=None,
                        help="reuse this directory instead of a temp one")
    args = parser.parse_args()

    if args.work_dir:
        work = Path(args.work_dir)
        work.mkdir(parents=True, exist_ok=True)
    else:
        work = Path(tempfile.mkdtemp(prefix="noai-bench-"))

    corpus = work / "corpus.jsonl"
    registry = work / "registry.csv"
    actors = work / "actors.csv"
    spec = world_spec(seed=args.seed, n_records=args.n_records)

    t0 = time.perf_counter()
    n = generate(spec, str(corpus))
    gen_s = time.perf_counter() - t0
    write_spec_registry(spec, str(registry))
    write_spec_actors(spec, str(actors))
    size_mib = corpus.stat().st_size / (1 << 20)
    print(f"generated {n} records in {gen_s:.1f}s ({size_mib:.0f} MiB)")

    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-c", RUNNER, "indicators",
         "--corpus", str(corpus), "--registry", str(registry),
         "--actors", str(actors), "--out", str(work / "table.csv")],
        capture_output=True, text=True,
    )
    elapsed = time.perf_counter() - t0
    if proc.returncode != 0:
        print(proc.stderr, file=sys.stderr)
        return proc.returncode

    peak_kib = 0
    for line in proc.stdout.splitlines():
        if line.startswith("MAXRSS_KIB"):
            peak_kib = int(line.split()[1])
    print(f"indicators: {elapsed:.1f}s wall, {n / elapsed:,.0f} records/s, "
          f"peak {peak_kib / 1024:.0f} MiB")
    print(f"table: {work / 'table.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
