"""Command-line front end: ``banditlimit {power,finite,fixedinfo,replay}``.

Every run writes CSV files plus a JSON manifest with the fully resolved
settings; ``replay`` re-runs a manifest and reproduces the CSVs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np
from scipy import stats as sps

from . import __version__, rng
from .allocation import make_rule
from .config import FIELDS, ConfigError, resolve
from .env import EnvConfig
from .envelopes import envelope_curve
from .errors import ContractViolation, DomainError, RuleUndefinedError
from .finite_sample import FiniteSampleConfig, convergence_study
from .fixed_info import (COST_PRESETS, InfoPartition, TimeGrid, compound_risk, draw_limit_experiment,
                         reconstruct_w, sample_brownian, split_sample_estimator)
from .power import PowerStudyConfig, power_curve

log = logging.getLogger("banditlimit")

DEFAULT_SEED = 20210917

POWER_COLUMNS = ["test", "tau", "power", "se", "crit", "alpha", "rule", "c", "sigma0", "sigma1", "seed"]
ENVELOPE_COLUMNS = ["kind", "tau", "power", "se", "crit", "alpha", "rule", "c", "sigma0", "sigma1", "seed",
                    "alt_split", "full_null"]
FINITE_COLUMNS = ["family", "n", "statistic", "ks", "reps", "seed"]


def write_csv(path: str, columns: list, rows) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in columns})
    return path


# -- power -------------------------------------------------------------------

def run_power(cfg: dict, seed: int, threads: int, out: str):
    rule = make_rule(cfg["rule"], c=cfg["c"])
    study = PowerStudyConfig(
        env=EnvConfig(sigma=tuple(cfg["sigma"])), rule=rule, tests=tuple(cfg["tests"]), alpha=cfg["alpha"],
        tau_grid=tuple(cfg["tau_grid"]), null_reps=cfg["null_reps"], power_reps=cfg["power_reps"],
        alt_split=cfg["alt_split"], full_null=cfg["full_null"], seed=seed, threads=threads)
    curve = power_curve(study)
    rows = list(curve.rows())
    outputs = [write_csv(os.path.join(out, "power.csv"), POWER_COLUMNS, rows)]
    # size check at tau = 0 includes the critical value's own sampling error
    size_se = np.sqrt(study.alpha * (1 - study.alpha) * (1 / study.power_reps + 1 / study.null_reps))
    failures = [f"{r['test']}: size {r['power']:.4f}" for r in rows
                if r["tau"] == 0 and abs(r["power"] - study.alpha) > 3 * size_se]
    env_rows = []
    for kind in cfg["envelopes"]:
        for p in envelope_curve(study, kind):
            env_rows.append({"kind": p.kind, "tau": p.tau, "power": p.power, "se": p.se, "crit": p.crit,
                             "alpha": study.alpha, "rule": rule.name, "c": getattr(rule, "c", 0.0),
                             "sigma0": study.env.sigma[0], "sigma1": study.env.sigma[1], "seed": seed,
                             "alt_split": study.alt_split, "full_null": study.full_null})
            if p.tau == 0 and abs(p.power - study.alpha) > 3 * size_se:
                failures.append(f"{kind} envelope: size {p.power:.4f}")
    if env_rows:
        outputs.append(write_csv(os.path.join(out, "envelopes.csv"), ENVELOPE_COLUMNS, env_rows))
    return outputs, failures


# -- finite ------------------------------------------------------------------

def run_finite(cfg: dict, seed: int, threads: int, out: str):
    n_list = tuple(cfg["n"])
    base = FiniteSampleConfig(
        family=cfg["family"], theta0=tuple(cfg["theta0"]), sd=tuple(cfg["sd"]), h=tuple(cfg["h"]), n=n_list[0],
        rule=cfg["rule"], c=cfg["c"], reps=cfg["reps"], seed=seed,
        thompson_draws=cfg["thompson_draws"], bernoulli_posterior=cfg["bernoulli_posterior"], threads=threads)
    for n in n_list:  # surface infeasible local parameters before simulating anything
        FiniteSampleConfig(**{**base.__dict__, "n": n})
    rows = convergence_study(base, n_list, cfg["reps"], tuple(cfg["statistics"]))
    path = write_csv(os.path.join(out, "finite.csv"), FINITE_COLUMNS, rows)
    failures = [f"{r['statistic']} at n={r['n']}: ks not finite" for r in rows if not np.isfinite(r["ks"])]
    return [path], failures


# -- fixedinfo ---------------------------------------------------------------

def run_fixedinfo(cfg: dict, seed: int, threads: int, out: str):
    failures = []
    outputs = []
    grid_times = tuple(cfg["grid"])
    D = len(grid_times)

    rows = []
    for h in cfg["bridge_h"]:
        path = sample_brownian(TimeGrid(grid_times, cfg["J0"], h), rng.SeedSpec(seed, 0), cfg["bridge_paths"])
        n = cfg["bridge_paths"]
        tol = max(0.01, 5 / np.sqrt(n))
        for j, t in enumerate(grid_times[:-1]):
            r = float(np.corrcoef(path.V[:, j], path.W[:, -1])[0, 1])
            rows.append({"t": t, "h": h, "corr": r, "se": 1 / np.sqrt(n), "paths": n})
            if abs(r) > tol:
                failures.append(f"bridge corr {r:.4f} at t={t}, h={h}")
    outputs.append(write_csv(os.path.join(out, "bridge.csv"), ["t", "h", "corr", "se", "paths"], rows))

    grid = TimeGrid(grid_times, cfg["J0"], cfg["bridge_h"][0] if cfg["bridge_h"] else 0.0)
    path = sample_brownian(grid, rng.SeedSpec(seed, 1 << 40), cfg["recon_paths"])
    rows = []
    for d in range(1, D):
        for c in range(d):
            err = float(np.max(np.abs(reconstruct_w(grid, path.W[:, d], path.V[:, : d + 1], c) - path.W[:, c])))
            rows.append({"c": c + 1, "d": d + 1, "t_c": grid_times[c], "t_d": grid_times[d],
                         "max_abs_error": err, "paths": cfg["recon_paths"]})
            if not err < 1e-12:
                failures.append(f"reconstruction error {err:.3g} at c={c + 1}, d={d + 1}")
    outputs.append(write_csv(os.path.join(out, "reconstruction.csv"),
                             ["c", "d", "t_c", "t_d", "max_abs_error", "paths"], rows))

    part = InfoPartition(cfg["lambda1"], cfg["lambda2"], cfg["lambda12"], cfg["J0"])
    rows = []
    for h in cfg["marginal_h"]:
        draw = draw_limit_experiment(part, h, rng.SeedSpec(seed, 2 << 40), n=cfg["marginal_reps"])
        for block, z in draw.blocks.items():
            sd = 1 / np.sqrt(part.mass(block) * part.J0)
            ks = sps.kstest(z, "norm", args=(h, sd))
            rows.append({"h": h, "block": block, "mean": float(z.mean()), "var": float(z.var(ddof=1)),
                         "target_var": sd**2, "ks": float(ks.statistic), "pvalue": float(ks.pvalue),
                         "reps": cfg["marginal_reps"]})
    outputs.append(write_csv(os.path.join(out, "marginals.csv"),
                             ["h", "block", "mean", "var", "target_var", "ks", "pvalue", "reps"], rows))

    rows = []
    for name in cfg["costs"]:
        if name not in COST_PRESETS:
            raise DomainError(f"unknown cost preset {name!r}; expected one of {sorted(COST_PRESETS)}")
        risk, se = compound_risk(split_sample_estimator, part, cfg["risk_h"], COST_PRESETS[name],
                                 cfg["risk_reps"], rng.SeedSpec(seed, 3 << 40), return_se=True)
        rows.append({"estimator": "split_sample", "cost": name, "h": cfg["risk_h"], "risk": risk, "se": se,
                     "reps": cfg["risk_reps"], "seed": seed})
    outputs.append(write_csv(os.path.join(out, "risk.csv"),
                             ["estimator", "cost", "h", "risk", "se", "reps", "seed"], rows))
    return outputs, failures


RUNNERS = {"power": run_power, "finite": run_finite, "fixedinfo": run_fixedinfo}


def execute(command: str, cfg: dict, seed: int, threads: int, out: str) -> int:
    os.makedirs(out, exist_ok=True)
    start = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    outputs, failures = RUNNERS[command](cfg, seed, threads, out)
    manifest = {
        "command": command,
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()},
        "seed": seed,
        "threads": threads,
        "version": __version__,
        "start": start,
        "end": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": round(time.perf_counter() - t0, 3),
        "outputs": [os.path.basename(p) for p in outputs],
        "validity_failures": failures,
    }
    mpath = os.path.join(out, f"manifest_{command}.json")
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    for p in outputs:
        log.info("wrote %s", p)
    for f in failures:
        log.error("validity check failed: %s", f)
    return 1 if failures else 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="INI file; the section named after the command is read")
    p.add_argument("--seed", type=int, default=None, help=f"master seed, unsigned 64-bit (default {DEFAULT_SEED})")
    p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results (default 1)")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (default .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="banditlimit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"power": "power curves and NP envelopes in the limit bandit",
             "finite": "finite-sample convergence to the limit bandit",
             "fixedinfo": "fixed-information-set checks and compound risk"}
    for command, fields in FIELDS.items():
        p = sub.add_parser(command, help=helps[command], formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        _add_common(p)
        for f in fields:
            p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=None,
                           help=f"{f.help} (default: {f.default})")
    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, metavar="DIR", help="output directory (default: the manifest's)")
    p.add_argument("--threads", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "replay":
            with open(args.manifest) as fh:
                m = json.load(fh)
            out = args.out or os.path.dirname(os.path.abspath(args.manifest))
            threads = m["threads"] if args.threads is None else args.threads
            return execute(m["command"], m["config"], m["seed"], threads, out)
        overrides = {f.name: getattr(args, f.name) for f in FIELDS[args.command]}
        cfg = resolve(args.command, args.config, overrides)
        seed = DEFAULT_SEED if args.seed is None else args.seed
        rng.SeedSpec(seed)
        if args.threads < 1:
            raise DomainError("--threads must be at least 1")
        return execute(args.command, cfg, seed, args.threads, args.out)
    except (ConfigError, DomainError, ContractViolation, RuleUndefinedError, KeyError, OSError) as e:
        print(f"banditlimit: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
