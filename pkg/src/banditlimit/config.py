"""Study settings: defaults, INI config sections, and command-line overrides.

Every command reads one section of an INI file (``[power]``, ``[finite]``,
``[fixedinfo]``); command-line flags override the file, which overrides the
defaults listed here.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from typing import Any, Callable


class ConfigError(ValueError):
    pass


def parse_int(s: str) -> int:
    s = s.strip()
    try:
        return int(s)
    except ValueError:
        f = float(s)
        if not f.is_integer():
            raise ValueError(f"expected an integer, got {s!r}") from None
        return int(f)


def parse_float(s: str) -> float:
    return float(s.strip())


def parse_floats(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(" ", "").split(",") if x)


def parse_ints(s: str) -> tuple:
    return tuple(parse_int(x) for x in s.replace(" ", "").split(",") if x)


def parse_strs(s: str) -> tuple:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def parse_grid(s: str) -> tuple:
    """``start:stop:step`` (inclusive stop) or a comma list."""
    s = s.strip()
    if ":" in s:
        start, stop, step = (float(x) for x in s.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(round((stop - start) / step))
        return tuple(round(start + i * step, 12) for i in range(n + 1))
    return parse_floats(s)


def parse_str(s: str) -> str:
    return s.strip()


@dataclass(frozen=True)
class Field:
    name: str
    parse: Callable[[str], Any]
    default: str
    help: str


POWER_FIELDS = (
    Field("sigma", parse_floats, "0.5,0.5", "per-arm noise scales sigma0,sigma1"),
    Field("rule", parse_str, "thompson", "fixed | thompson | weighted_thompson"),
    Field("c", parse_float, "0.1", "shrinkage toward 50-50 for weighted_thompson"),
    Field("tests", parse_strs, "zjm,pooled_dim", "statistics to evaluate"),
    Field("alpha", parse_float, "0.05", "significance level"),
    Field("tau_grid", parse_grid, "0:4:0.25", "alternatives tau, start:stop:step or list"),
    Field("null_reps", parse_int, "1000000", "null replicates for critical values"),
    Field("power_reps", parse_int, "100000", "replicates per grid point"),
    Field("alt_split", parse_str, "zero_control", "how (h0,h1) realizes tau: zero_control | symmetric"),
    Field("full_null", parse_str, "invariant", "full envelope null: invariant | point"),
    Field("envelopes", parse_strs, "limited,full", "envelopes to compute (empty for none)"),
)

FINITE_FIELDS = (
    Field("family", parse_str, "gaussian", "gaussian | bernoulli"),
    Field("theta0", parse_floats, "0,0", "baseline parameter per arm (equal across arms)"),
    Field("sd", parse_floats, "0.5,0.5", "Gaussian outcome sd per arm"),
    Field("h", parse_floats, "0,1", "local parameter per arm"),
    Field("n", parse_ints, "64,256,1024,4096", "batch sizes n (strictly increasing)"),
    Field("rule", parse_str, "thompson", "thompson | weighted"),
    Field("c", parse_float, "0", "shrinkage for the weighted rule"),
    Field("reps", parse_int, "100000", "replicates per n"),
    Field("statistics", parse_strs, "lambda2,w1,w2,zjm,pooled_dim", "statistics to compare"),
    Field("bernoulli_posterior", parse_str, "mc", "Bernoulli Thompson probability: mc | quad"),
    Field("thompson_draws", parse_int, "10000", "posterior draws for mc"),
)

FIXEDINFO_FIELDS = (
    Field("grid", parse_floats, "0.2,0.5,0.8,1.0", "time grid t_1 < ... < t_D"),
    Field("J0", parse_float, "1", "Fisher information"),
    Field("bridge_h", parse_floats, "0,3", "drifts for the bridge independence check"),
    Field("bridge_paths", parse_int, "1000000", "paths for the bridge check"),
    Field("recon_paths", parse_int, "100000", "paths for the reconstruction check"),
    Field("lambda1", parse_float, "0.5", "mass of the node-1-only block"),
    Field("lambda2", parse_float, "0.5", "mass of the node-2-only block"),
    Field("lambda12", parse_float, "0", "mass of the shared block"),
    Field("marginal_h", parse_floats, "-2,0,2", "local parameters for the split-sample marginals"),
    Field("marginal_reps", parse_int, "100000", "draws per marginal check"),
    Field("risk_h", parse_float, "0", "local parameter for the risk table"),
    Field("risk_reps", parse_int, "1000000", "draws for the risk table"),
    Field("costs", parse_strs, "zero,absolute,quadratic", "adjustment cost presets"),
)

FIELDS = {"power": POWER_FIELDS, "finite": FINITE_FIELDS, "fixedinfo": FIXEDINFO_FIELDS}


def resolve(command: str, path: str | None, overrides: dict) -> dict:
    """Merge defaults, the config file section and raw string overrides; parse every value."""
    fields = {f.name: f for f in FIELDS[command]}
    raw = {name: f.default for name, f in fields.items()}
    where = {name: "default" for name in fields}
    if path:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as e:
            raise ConfigError(f"{path}: {e}") from e
        if cp.has_section(command):
            for key, value in cp.items(command):
                if key not in fields:
                    raise ConfigError(f"{path}: [{command}] unknown field {key!r}")
                raw[key] = value
                where[key] = f"{path} [{command}]"
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
            where[key] = "command line"
    out = {}
    for key, value in raw.items():
        try:
            out[key] = fields[key].parse(value)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"{where[key]}: field {key!r}: {e}") from e
    return out
