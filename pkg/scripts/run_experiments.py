"""Run every registered experiment through the command-line front end.

Usage: python scripts/run_experiments.py OUT_ROOT [--seed N]

Each experiment gets its own run directory under OUT_ROOT.  The script
prints one line per run with its exit code and exits nonzero if any run
did not finish cleanly.
"""

import argparse
import os
import sys
import time

from scatterlab import checks, cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_root")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)
    os.makedirs(args.out_root, exist_ok=True)

    runs = [["filters"]]
    for group, table in checks.REGISTRY.items():
        seen = set()
        for name, fn in table.items():
            if fn in seen:  # aliases
                continue
            seen.add(fn)
            runs.append([group, name])
    runs.append(["stochastic", "consistency", "--model", "ma"])

    worst = 0
    for argv_run in runs:
        label = "-".join(a.lstrip("-") for a in argv_run)
        extra = ["--seed", str(args.seed)] if args.seed is not None and argv_run[0] != "filters" else []
        start = time.time()
        code = cli.main([*argv_run, *extra, "--out", os.path.join(args.out_root, label)])
        print(f"{label:40s} exit={code}  {time.time() - start:6.1f}s", flush=True)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
