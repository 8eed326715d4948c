"""KS distance between finite-sample and limit-bandit statistics as n grows."""

import argparse

from banditlimit.finite_sample import DEFAULT_N_LIST, FiniteSampleConfig, convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="gaussian", choices=["gaussian", "bernoulli"])
    ap.add_argument("--theta0", type=float, default=None, help="baseline (default 0 gaussian, 0.5 bernoulli)")
    ap.add_argument("--h1", type=float, default=1.0, help="local parameter of arm 1 (arm 0 is 0)")
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--posterior", default="quad", choices=["mc", "quad"], help="Bernoulli Thompson probability")
    ap.add_argument("--seed", type=int, default=20210917)
    args = ap.parse_args()

    theta0 = args.theta0 if args.theta0 is not None else (0.5 if args.family == "bernoulli" else 0.0)
    cfg = FiniteSampleConfig(family=args.family, theta0=(theta0, theta0), h=(0.0, args.h1), seed=args.seed,
                             bernoulli_posterior=args.posterior)
    rows = convergence_study(cfg, DEFAULT_N_LIST, args.reps)
    stats = list(dict.fromkeys(r["statistic"] for r in rows))
    print("n".rjust(6) + "".join(s.rjust(12) for s in stats))
    for n in DEFAULT_N_LIST:
        ks = {r["statistic"]: r["ks"] for r in rows if r["n"] == n}
        print(f"{n:6d}" + "".join(f"{ks[s]:12.4f}" for s in stats))


if __name__ == "__main__":
    main()
