"""Run an acceptance suite and write the JSON summary.

    python scripts/run_acceptance.py --suite all --seed 0 --out acceptance.json
"""

import argparse
import sys
from dataclasses import asdict, dataclass

from carnot.acceptance import SUITES, suite, summary
from carnot.io import dumps


@dataclass
class Config:
    suite: str = "all"
    seed: int = 0
    threads: int = 1
    out: str | None = None


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--suite", choices=sorted(SUITES), default=Config.suite)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--threads", type=int, default=Config.threads)
    ap.add_argument("--out")
    cfg = Config(**vars(ap.parse_args(argv)))
    results = suite(cfg.suite, seed=cfg.seed, threads=cfg.threads)
    for r in results:
        print(r.line())
    rep = {"config": asdict(cfg), **summary(results)}
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(dumps(rep) + "\n")
    return 0 if rep["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
