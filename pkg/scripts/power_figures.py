"""Power curves and envelopes for plain and weighted Thompson allocation.

Writes one CSV per rule into the output directory:
    python scripts/power_figures.py --out results/ --c 0.1
"""

import argparse
import csv
import os

from banditlimit.allocation import Thompson, WeightedThompson
from banditlimit.envelopes import envelope_curve
from banditlimit.power import PowerStudyConfig, power_curve


def curve_rows(cfg: PowerStudyConfig):
    curve = power_curve(cfg)
    for r in curve.rows():
        yield {"series": r["test"], "tau": r["tau"], "power": r["power"], "se": r["se"]}
    for kind in ("limited", "full"):
        for p in envelope_curve(cfg, kind):
            yield {"series": f"{kind}_envelope", "tau": p.tau, "power": p.power, "se": p.se}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--c", type=float, default=0.1, help="shrinkage for the weighted rule")
    ap.add_argument("--null-reps", type=int, default=1_000_000)
    ap.add_argument("--power-reps", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=20210917)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    for tag, rule in (("thompson", Thompson()), (f"weighted_c{args.c:g}", WeightedThompson(args.c))):
        cfg = PowerStudyConfig(rule=rule, null_reps=args.null_reps, power_reps=args.power_reps,
                               seed=args.seed, threads=args.threads)
        path = os.path.join(args.out, f"power_{tag}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["series", "tau", "power", "se"], lineterminator="\n")
            w.writeheader()
            w.writerows(curve_rows(cfg))
        print(path)


if __name__ == "__main__":
    main()
