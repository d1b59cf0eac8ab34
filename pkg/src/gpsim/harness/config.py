"""Experiment configuration: TOML loading, defaults, validation, hashing.

A config file holds shared settings at top level and, optionally, one table
per experiment under ``[experiments.<name>]`` whose keys override the shared
ones::

    seed = 20240601
    replications = 200

    [prior]
    family = "power_law"
    m = 2

    [experiments.coverage]
    experiment = "coverage"
    n_list = [256, 512, 1024]

A file without ``[experiments]`` describes a single experiment.
"""

import copy
import hashlib
import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..scale_selection import METHODS
from ..spectral_prior import LAPLACIAN_BOUNDARIES, PRIOR_FAMILIES

EXPERIMENTS = (
    "coverage",
    "pointwise_coverage",
    "rate",
    "oracle",
    "hb_concentration",
    "prior_polished",
    "d2_asymptotics",
)
TRUTH_KINDS = ("power", "self_similar", "prior_draw", "fourier", "custom_csv", "zero", "center")
RADIUS_KINDS = ("monte_carlo", "satterthwaite")

DEFAULTS = {
    "prior": {"family": "power_law", "m": 2.0, "delta": 1.0},
    "truth": {"kind": "power", "alpha": 1.0},
    "methods": ["lik_eb", "risk_eb", "hb"],
    "replications": 200,
    "eta": 0.95,
    "M_list": [1.0, 2.0, 3.0],
    "seed": 0,
    "radius": {"kind": "satterthwaite", "mc_draws": 100_000},
    "hb": {"kappa": 1.0, "lambda": 1.0, "eta1": 0.95, "subgrid": 32},
    "grid_size": 400,
    "C": 0.5,
    "gamma": 0.9,
    "eps_list": [0.25, 0.5, 1.0],
    "K_list": [3.0, 10.0],
    "polished": {"L": 16.0, "rho": 2.0, "m_min": 8},
    "noise": "gaussian",
}
DEFAULT_N_LIST = {1: [256, 512, 1024], 2: [24, 32, 48]}


class ConfigError(ValueError):
    """Validation failure listing every offending field path."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config:\n" + "\n".join(f"  {p}" for p in self.problems))


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def resolve(raw, name=None):
    """Fill defaults into one experiment's settings and validate them."""
    cfg = _merge(DEFAULTS, raw)
    cfg.setdefault("experiment", name)
    if "n_list" not in cfg:
        two_d = cfg["prior"].get("family") in ("tensor", "sobolev")
        cfg["n_list"] = DEFAULT_N_LIST[2 if two_d else 1]
    validate(cfg)
    return cfg


def validate(cfg):
    problems = []

    def need(cond, path, msg):
        if not cond:
            problems.append(f"{path}: {msg}")

    need(cfg.get("experiment") in EXPERIMENTS, "experiment", f"must be one of {', '.join(EXPERIMENTS)}")
    prior = cfg["prior"]
    need(prior.get("family") in PRIOR_FAMILIES, "prior.family", f"must be one of {', '.join(PRIOR_FAMILIES)}")
    need(_num(prior.get("m", 2)) and prior.get("m", 2) >= 1, "prior.m", "must be a number >= 1")
    need(_num(prior.get("delta", 1)) and prior.get("delta", 1) > 0, "prior.delta", "must be positive")
    if prior.get("family") == "laplacian":
        need(prior.get("boundary", "mixed_dn") in LAPLACIAN_BOUNDARIES, "prior.boundary", "unknown boundary")
    truth = cfg["truth"]
    need(truth.get("kind") in TRUTH_KINDS, "truth.kind", f"must be one of {', '.join(TRUTH_KINDS)}")
    if truth.get("kind") not in ("zero", "center", "custom_csv"):
        need(_num(truth.get("alpha")) and truth.get("alpha", 0) > 0, "truth.alpha", "must be positive")
    if truth.get("kind") == "custom_csv":
        need(isinstance(truth.get("path"), str), "truth.path", "custom_csv truth needs a file path")
    if truth.get("kind") == "fourier":
        need(isinstance(truth.get("coefficients"), list), "truth.coefficients", "fourier truth needs a coefficient list")
    methods = cfg["methods"]
    need(isinstance(methods, list) and methods, "methods", "must be a nonempty list")
    for k, m in enumerate(methods if isinstance(methods, list) else []):
        need(m in METHODS, f"methods[{k}]", f"must be one of {', '.join(METHODS)}")
    n_list = cfg["n_list"]
    need(
        isinstance(n_list, list) and n_list and all(isinstance(n, int) and n >= 2 for n in n_list),
        "n_list",
        "must be a nonempty list of integers >= 2",
    )
    if isinstance(n_list, list) and n_list:
        need(all(a < b for a, b in zip(n_list, n_list[1:])), "n_list", "must be strictly ascending")
    if cfg.get("experiment") == "rate":
        need(isinstance(n_list, list) and len(n_list) >= 3, "n_list", "rate fits need at least 3 values of n")
    need(isinstance(cfg["replications"], int) and cfg["replications"] >= 1, "replications", "must be an integer >= 1")
    need(_num(cfg["eta"]) and 0 < cfg["eta"] < 1, "eta", "must lie in (0, 1)")
    need(isinstance(cfg["M_list"], list) and cfg["M_list"], "M_list", "must be a nonempty list")
    for k, M in enumerate(cfg["M_list"] if isinstance(cfg["M_list"], list) else []):
        need(_num(M) and M >= 0, f"M_list[{k}]", "must be a nonnegative number")
    need(isinstance(cfg["seed"], int) and cfg["seed"] >= 0, "seed", "must be a nonnegative integer")
    radius = cfg["radius"]
    need(radius.get("kind") in RADIUS_KINDS, "radius.kind", f"must be one of {', '.join(RADIUS_KINDS)}")
    if radius.get("kind") == "monte_carlo":
        need(isinstance(radius.get("mc_draws"), int) and radius["mc_draws"] >= 10_000, "radius.mc_draws", "must be >= 10000")
    hb = cfg["hb"]
    need(_num(hb.get("kappa")) and hb["kappa"] > 0, "hb.kappa", "must be positive")
    need(_num(hb.get("lambda")) and hb["lambda"] > 0, "hb.lambda", "must be positive")
    need(_num(hb.get("eta1")) and 0 < hb["eta1"] < 1, "hb.eta1", "must lie in (0, 1)")
    need(isinstance(hb.get("subgrid"), int) and hb["subgrid"] >= 1, "hb.subgrid", "must be a positive integer")
    need(isinstance(cfg["grid_size"], int) and cfg["grid_size"] >= 200, "grid_size", "must be an integer >= 200")
    need(_num(cfg["C"]) and cfg["C"] >= 0, "C", "must be nonnegative")
    need(_num(cfg["gamma"]) and 0 <= cfg["gamma"] <= 1, "gamma", "must lie in [0, 1]")
    need(all(_num(e) and e > 0 for e in cfg["eps_list"]), "eps_list", "must hold positive numbers")
    need(all(_num(K) and K > 1 for K in cfg["K_list"]), "K_list", "must hold numbers > 1")
    pol = cfg["polished"]
    need(_num(pol.get("L")) and pol["L"] >= 1, "polished.L", "must be >= 1")
    need(_num(pol.get("rho")) and pol["rho"] > 1, "polished.rho", "must exceed 1")
    need(isinstance(pol.get("m_min"), int) and pol["m_min"] >= 2, "polished.m_min", "must be an integer >= 2")
    need(cfg["noise"] in ("gaussian", "none"), "noise", "must be 'gaussian' or 'none'")
    if problems:
        raise ConfigError(problems)


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def load(path, experiment=None):
    """Read a TOML file and return ``{name: resolved config}`` in file order."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return expand(raw, experiment)


def expand(raw, experiment=None):
    raw = dict(raw)
    tables = raw.pop("experiments", None)
    if tables is None:
        name = raw.get("experiment")
        configs = {name: resolve(raw, name)}
    else:
        configs = {}
        for name, table in tables.items():
            merged = _merge(raw, table)
            configs[name] = resolve(merged, table.get("experiment", name))
    if experiment is not None:
        if experiment not in configs:
            raise ConfigError([f"experiment: no experiment named {experiment!r} in config"])
        configs = {experiment: configs[experiment]}
    return configs


def config_hash(cfg):
    """Short stable digest of a resolved config (output location excluded)."""
    body = {k: v for k, v in cfg.items() if k not in ("output",)}
    payload = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=8).hexdigest()
