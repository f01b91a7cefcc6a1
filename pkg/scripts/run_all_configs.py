"""Run every experiment config in configs/ and print one status line per run."""

import argparse
import contextlib
import io
import json
import sys
from pathlib import Path

from qmod.cli import main

ROOT = Path(__file__).resolve().parents[1]
NOT_EXPERIMENTS = {"cyclic_group.json"}


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--configs", type=Path, default=ROOT / "configs")
    p.add_argument("--out", type=Path, default=ROOT / "results")
    return p.parse_args(argv)


def run(args):
    failed = 0
    for cfg in sorted(args.configs.glob("*.json")):
        if cfg.name in NOT_EXPERIMENTS:
            continue
        with contextlib.redirect_stdout(io.StringIO()):
            rc = main(["run", str(cfg), "--out", str(args.out)])
        if rc != 0:
            failed += 1
            print(f"{cfg.stem:32s} exit {rc}")
            continue
        summary = json.loads((args.out / f"{cfg.stem}.json").read_text())
        flags = " ".join(f"{k}={int(v)}" for k, v in summary["pass_flags"].items())
        print(f"{cfg.stem:32s} {summary['runtime']['seconds']:7.2f}s  {flags}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(run(parse_args()))
