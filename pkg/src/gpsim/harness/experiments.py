"""Monte Carlo experiments.

Each experiment is a set of cells ``(n, method)``; each cell runs
``replications`` independent replications whose seed depends only on
``(base seed, n, method, r)``.  A replication returns a flat mapping
``(statistic, param) -> value`` and cells aggregate those in replication
order, so the output does not depend on how work was scheduled.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..credible_sets import (
    hb_credible_set,
    pointwise_intervals,
)
from ..function_classes import (
    PolishedTailParams,
    SelfSimilarSequence,
    alias_coefficients,
    gap_sequence,
    polished_tail_discrete,
    power_sequence,
    prior_draw,
)
from ..posterior import RadiusMethod, credible_radius, posterior_mean, posterior_total_variance
from ..rng import derive_seed
from ..scale_selection import (
    HBPrior,
    d2_term,
    d_term,
    decompose_criterion,
    hb_oracle_scale,
    hb_posterior,
    refined_argmin,
    scale_interval,
    select_scale,
    som_constant,
)
from ..sequence_model import (
    from_coefficients,
    read_observation_csv,
    simulate_data,
    to_coefficients,
    transformed_observation,
)
from ..spectral_prior import SineBasis, prior_from_config


@dataclass
class CellResult:
    n: int
    method: str
    rows: list  # (param, statistic, value)
    trace: list = field(default_factory=list)  # one dict per replication


# ---------------------------------------------------------------------------
# Shared setup
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _prior(prior_json, n):
    spec = json.loads(prior_json)
    spec["n"] = n
    return prior_from_config(spec)


def build_prior(cfg, n):
    return _prior(json.dumps(cfg["prior"], sort_keys=True), n)


def interval_for(cfg, prior):
    return scale_interval(prior, cfg["grid_size"])


def hb_prior_for(cfg, prior):
    hb = cfg["hb"]
    return HBPrior(hb["kappa"], hb["lambda"], interval_for(cfg, prior))


def radius_method_for(cfg):
    rad = cfg["radius"]
    return RadiusMethod(rad["kind"], rad.get("mc_draws", 100_000), rad.get("mc_seed", 0))


def _sine(prior):
    return isinstance(prior.basis, SineBasis)


@lru_cache(maxsize=64)
def _deterministic_truth(truth_json, prior_json, n):
    truth = json.loads(truth_json)
    prior = _prior(prior_json, n)
    kind = truth["kind"]
    scale = truth.get("scale", 1.0)
    if kind in ("zero", "center"):
        return np.zeros(prior.dim)
    if kind == "power":
        alpha = truth["alpha"]
        if _sine(prior):
            return scale * alias_coefficients(power_sequence(alpha), n)
        k = np.arange(1, prior.dim + 1, dtype=float)
        return scale * np.sqrt(prior.dim) * k ** (-0.5 - alpha)
    if kind == "fourier":
        coeffs = np.asarray(truth["coefficients"], dtype=float)

        def seq(j):
            out = np.zeros(np.shape(j))
            ok = j <= len(coeffs)
            out[ok] = coeffs[j[ok] - 1]
            return out

        _require_sine(prior, kind)
        return scale * alias_coefficients(seq, n)
    if kind == "custom_csv":
        return to_coefficients(prior, read_observation_csv(truth["path"], prior).y)
    raise KeyError(kind)


def _require_sine(prior, kind):
    if not _sine(prior):
        raise ValueError(f"{kind} truths need the 1-D sine basis")


def truth_coefficients(cfg, prior, n, seed):
    """Truth coefficients for one replication (random kinds use ``seed``)."""
    truth = cfg["truth"]
    kind = truth["kind"]
    scale = truth.get("scale", 1.0)
    if kind == "prior_draw":
        _require_sine(prior, kind)
        return scale * prior_draw(truth["alpha"], truth.get("delta", -0.5), n, truth.get("seed", seed))
    if kind == "self_similar":
        _require_sine(prior, kind)
        seq = SelfSimilarSequence(
            truth["alpha"], truth.get("M", 1.0), truth.get("rho", 2.0), truth.get("L", 0.02), truth.get("seed", seed)
        )
        return scale * alias_coefficients(seq, n)
    return _deterministic_truth(
        json.dumps(truth, sort_keys=True), json.dumps(cfg["prior"], sort_keys=True), n
    )


def observe(cfg, prior, f, seed):
    """Transformed observation ``Y~`` for truth ``f``."""
    if cfg["noise"] == "none":
        return f.copy()
    return transformed_observation(prior, simulate_data(prior, f, seed))


def replication_seed(cfg, n, method, r):
    return derive_seed(cfg["seed"], n, method, r)


def _setup(cfg, n, method, r):
    prior = build_prior(cfg, n)
    seed = replication_seed(cfg, n, method, r)
    f = truth_coefficients(cfg, prior, n, derive_seed(seed, "truth"))
    ytilde = observe(cfg, prior, f, derive_seed(seed, "noise"))
    return prior, f, ytilde


def _fmt(x):
    return format(float(x), "g")


# ---------------------------------------------------------------------------
# Replications
# ---------------------------------------------------------------------------


def _rep_coverage(cfg, n, method, r):
    prior, f, ytilde = _setup(cfg, n, method, r)
    eta = cfg["eta"]
    rm = radius_method_for(cfg)
    out = {}
    rootN = math.sqrt(prior.dim)
    if method == "hb":
        post = hb_posterior(prior, ytilde, hb_prior_for(cfg, prior))
        hset = hb_credible_set(
            prior, ytilde, eta1=cfg["hb"]["eta1"], eta2=eta, M=1.0,
            subgrid_size=cfg["hb"]["subgrid"], radius_method=rm, posterior=post,
        )
        truth = hset.centers[len(hset.scales) // 2] if cfg["truth"]["kind"] == "center" else f
        dist = hset.distances(truth)
        C = hset.centers
        sq = (C * C).sum(axis=1)
        pair = np.sqrt(np.clip(sq[:, None] + sq[None, :] - 2 * C @ C.T, 0, None))
        np.fill_diagonal(pair, 0.0)
        rsum = hset.radii[:, None] + hset.radii[None, :]
        out[("c_hat", "")] = post.median
        out[("c_lo", "")] = hset.c_lo
        out[("c_hi", "")] = hset.c_hi
        for M in cfg["M_list"]:
            p = f"M={_fmt(M)}"
            out[("covered", p)] = float(np.any(dist < M * hset.radii))
            out[("radius", p)] = M * float(hset.radii.max())
            diam = float(np.max(pair + M * rsum))
            out[("diameter", p)] = diam
            out[("scaled_diameter", p)] = diam / rootN
    else:
        c_hat = select_scale(prior, ytilde, method, interval_for(cfg, prior)).c_hat
        center = posterior_mean(prior, c_hat, ytilde)
        rad = credible_radius(prior, c_hat, eta, rm)
        truth = center if cfg["truth"]["kind"] == "center" else f
        dist = float(np.linalg.norm(truth - center))
        out[("c_hat", "")] = c_hat
        for M in cfg["M_list"]:
            p = f"M={_fmt(M)}"
            out[("covered", p)] = float(dist < M * rad)
            out[("radius", p)] = M * rad
            out[("diameter", p)] = 2 * M * rad
            out[("scaled_diameter", p)] = 2 * M * rad / rootN
    return out


def _rep_pointwise(cfg, n, method, r):
    prior, f, ytilde = _setup(cfg, n, method, r)
    fam = pointwise_intervals(
        prior, ytilde, method, eta=cfg["eta"], M=1.0, C=cfg["C"], interval=interval_for(cfg, prior),
        hb=hb_prior_for(cfg, prior), eta1=cfg["hb"]["eta1"], subgrid_size=cfg["hb"]["subgrid"],
    )
    truth = fam.centers[len(fam.scales) // 2] if cfg["truth"]["kind"] == "center" else from_coefficients(prior, f)
    gap = np.abs(truth - fam.centers)
    N = prior.dim
    out = {("J_fraction", ""): float(fam.in_J.sum()) / N}
    for M in cfg["M_list"]:
        p = f"M={_fmt(M)}"
        cov = np.any(gap < M * fam.half_widths, axis=0) & fam.in_J
        frac = float(cov.sum()) / N
        out[("fraction_covered", p)] = frac
        out[("fraction_at_least_gamma", p)] = float(frac >= cfg["gamma"])
    return out


def _rep_oracle(cfg, n, method, r):
    prior, f, ytilde = _setup(cfg, n, method, r)
    kind = {"lik_eb": "likelihood", "risk_eb": "risk"}[method]
    interval = interval_for(cfg, prior)
    grid = interval.grid
    c_hat = select_scale(prior, ytilde, method, interval).c_hat
    d_grid = d_term(prior, f, grid, kind)
    _, d_inf = refined_argmin(lambda c: d_term(prior, f, c, kind), grid, d_grid)
    d_inf = min(d_inf, float(d_grid.min()))
    dec = decompose_criterion(prior, f, ytilde - f, c_hat, kind)
    ratio = dec.d / d_inf
    parts = decompose_criterion(prior, f, ytilde - f, grid, kind)
    remainder = np.max((np.abs(parts.r1) + np.abs(parts.r2)) / parts.d)
    out = {
        ("c_hat", ""): c_hat,
        ("oracle_ratio", ""): ratio,
        ("remainder_ratio", ""): float(remainder),
        ("bias_variance_ratio", ""): dec.d1 / dec.d2,
    }
    for eps in cfg["eps_list"]:
        out[("exceeds", f"eps={_fmt(eps)}")] = float(ratio > 1 + eps)
    return out


def _rep_hb_concentration(cfg, n, method, r):
    prior, f, ytilde = _setup(cfg, n, method, r)
    hb = hb_prior_for(cfg, prior)
    post = hb_posterior(prior, ytilde, hb)
    interval = interval_for(cfg, prior)
    c_n = hb_oracle_scale(prior, f, hb, "2lambda")
    c_unit = hb_oracle_scale(prior, f, hb, "unit")
    c_risk = select_scale(prior, ytilde, "risk_eb", interval).c_hat
    c_lik = select_scale(prior, ytilde, "lik_eb", interval).c_hat
    out = {
        ("posterior_median", ""): post.median,
        ("c_n", "penalty=2lambda"): c_n,
        ("c_n", "penalty=unit"): c_unit,
        ("c_hat_risk", ""): c_risk,
        ("c_hat_lik", ""): c_lik,
        ("risk_at_floor", ""): float(c_risk <= interval.lo * (1 + 1e-9)),
        ("total_mass", ""): post.mass(interval.lo, interval.hi),
    }
    for K in cfg["K_list"]:
        for pen, c in (("2lambda", c_n), ("unit", c_unit)):
            p = f"K={_fmt(K)};penalty={pen}"
            mass = post.mass(c / K, c * K)
            out[("mass", p)] = mass
            out[("mass_at_least_gamma", p)] = float(mass >= cfg["gamma"])
    return out


def _polished_params(cfg):
    pol = cfg["polished"]
    return PolishedTailParams(pol["L"], pol["rho"], pol["m_min"])


def _rep_prior_polished(cfg, n, method, r):
    prior = build_prior(cfg, n)
    seed = replication_seed(cfg, n, method, r)
    f = truth_coefficients(cfg, prior, n, derive_seed(seed, "truth"))
    res = polished_tail_discrete(f, _polished_params(cfg))
    out = {("passed", ""): float(res.passed)}
    if not res.passed:
        out[("violation_m", "")] = float(res.violation)
    return out


REPLICATORS = {
    "coverage": _rep_coverage,
    "rate": _rep_coverage,
    "pointwise_coverage": _rep_pointwise,
    "oracle": _rep_oracle,
    "hb_concentration": _rep_hb_concentration,
    "prior_polished": _rep_prior_polished,
}


def _methods(cfg):
    exp = cfg["experiment"]
    if exp == "oracle":
        return [m for m in cfg["methods"] if m != "hb"]
    if exp == "hb_concentration":
        return ["hb"]
    if exp in ("prior_polished", "d2_asymptotics"):
        return ["none"]
    return list(cfg["methods"])


def replicate(task):
    """Run one replication; failures become an error record, never an exception."""
    cfg_json, n, method, r = task
    cfg = json.loads(cfg_json)
    try:
        return REPLICATORS[cfg["experiment"]](cfg, n, method, r)
    except Exception as exc:  # noqa: BLE001 - recorded per replication
        return {("error", type(exc).__name__): 1.0}


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

# statistic -> list of (output name, reducer)
_MEAN = ("mean", np.mean)
REDUCERS = {
    "covered": [("coverage_rate", np.mean)],
    "c_hat": [("mean_c_hat", np.mean), ("median_c_hat", np.median)],
    "scaled_diameter": [("mean_scaled_diameter", np.mean), ("sd_scaled_diameter", np.std)],
    "fraction_covered": [("mean_fraction_covered", np.mean), ("min_fraction_covered", np.min)],
    "fraction_at_least_gamma": [("freq_fraction_at_least_gamma", np.mean)],
    "oracle_ratio": [("mean_oracle_ratio", np.mean), ("median_oracle_ratio", np.median)],
    "exceeds": [("exceedance_freq", np.mean)],
    "remainder_ratio": [("median_remainder_ratio", np.median)],
    "bias_variance_ratio": [("median_bias_variance_ratio", np.median), ("max_bias_variance_ratio", np.max)],
    "posterior_median": [("median_posterior_median", np.median), ("mean_posterior_median", np.mean)],
    "c_n": [("mean_c_n", np.mean)],
    "c_hat_risk": [("median_c_hat_risk", np.median)],
    "c_hat_lik": [("median_c_hat_lik", np.median)],
    "risk_at_floor": [("freq_risk_at_floor", np.mean)],
    "total_mass": [("min_total_mass", np.min)],
    "mass": [("mean_mass", np.mean)],
    "mass_at_least_gamma": [("freq_mass_at_least_gamma", np.mean)],
    "passed": [("pass_freq", np.mean)],
}


def aggregate(n, method, results, reps):
    keys = []
    for res in results:
        for k in res:
            if k not in keys and k[0] not in ("error", "violation_m"):
                keys.append(k)
    rows = []
    errors = {}
    for res in results:
        for (stat, param) in res:
            if stat == "error":
                errors[param] = errors.get(param, 0) + 1
    rows.append(("", "replications", float(reps)))
    rows.append(("", "error_count", float(sum(errors.values()))))
    for name, count in sorted(errors.items()):
        rows.append((f"error={name}", "error_count", float(count)))
    for stat, param in keys:
        vals = np.array([res[(stat, param)] for res in results if (stat, param) in res])
        for out_name, fn in REDUCERS.get(stat, [(f"mean_{stat}", np.mean)]):
            rows.append((param, out_name, float(fn(vals))))
    viol = [res[("violation_m", "")] for res in results if ("violation_m", "") in res]
    if any(("passed", "") in res for res in results):
        # histogram of first violating m in dyadic buckets [2^k, 2^{k+1})
        counts = {}
        for m in viol:
            k = int(math.floor(math.log2(m)))
            counts[k] = counts.get(k, 0) + 1
        for k in sorted(counts):
            rows.append((f"m_bucket={2**k}-{2 ** (k + 1) - 1}", "violation_count", float(counts[k])))
    return CellResult(n, method, rows)


def _trace_dicts(results):
    out = []
    for r, res in enumerate(results):
        d = {"replication": r}
        for (stat, param), v in res.items():
            d[f"{stat}[{param}]" if param else stat] = v
        out.append(d)
    return out


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def _map(tasks, jobs):
    if jobs <= 1:
        return [replicate(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves task order regardless of completion order
        return list(pool.map(replicate, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))


def run_replicated(cfg, jobs=1, trace=False):
    cfg_json = json.dumps(cfg, sort_keys=True)
    cells = [(n, method) for n in cfg["n_list"] for method in _methods(cfg)]
    reps = cfg["replications"]
    tasks = [(cfg_json, n, method, r) for n, method in cells for r in range(reps)]
    results = _map(tasks, jobs)
    out = []
    for k, (n, method) in enumerate(cells):
        chunk = results[k * reps : (k + 1) * reps]
        cell = aggregate(n, method, chunk, reps)
        if trace:
            cell.trace = _trace_dicts(chunk)
        out.append(cell)
    return out


def fit_slope(ns, values):
    """Least-squares slope of ``log value`` against ``log n``."""
    x, y = np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def run_coverage(cfg, jobs=1, trace=False):
    return run_replicated(cfg, jobs, trace)


def run_pointwise_coverage(cfg, jobs=1, trace=False):
    return run_replicated(cfg, jobs, trace)


def run_oracle(cfg, jobs=1, trace=False):
    return run_replicated(cfg, jobs, trace)


def run_hb_concentration(cfg, jobs=1, trace=False):
    return run_replicated(cfg, jobs, trace)


def run_rate(cfg, jobs=1, trace=False):
    """Coverage-style replications plus a fitted log-log slope per method and M."""
    cells = run_replicated(cfg, jobs, trace)
    summary = []
    for method in _methods(cfg):
        mine = [c for c in cells if c.method == method]
        for M in cfg["M_list"]:
            p = f"M={_fmt(M)}"
            vals = [_lookup(c, p, "mean_scaled_diameter") for c in mine]
            if all(v is not None and v > 0 for v in vals):
                slope = fit_slope([c.n for c in mine], vals)
            else:
                slope = float("nan")
            summary.append(CellResult(0, method, [(p, "slope_scaled_diameter", slope)]))
    return cells + summary


def run_prior_polished(cfg, jobs=1, trace=False):
    """Pass frequency of prior draws plus a zero control and a gap-sequence control."""
    cells = run_replicated(cfg, jobs, trace)
    params = _polished_params(cfg)
    controls = []
    for n in cfg["n_list"]:
        zero = polished_tail_discrete(np.zeros(n), params)
        gap = polished_tail_discrete(gap_sequence(n), params)
        rows = [("control=zero", "passed", float(zero.passed)), ("control=gap", "passed", float(gap.passed))]
        if not gap.passed:
            rows.append(("control=gap", "violation_m", float(gap.violation)))
        controls.append(CellResult(n, "control", rows))
    return cells + controls


def d2_c_points(interval, count=9):
    return np.geomspace(interval.lo, interval.hi, count)


def run_d2_asymptotics(cfg, jobs=1, trace=False):
    """Tabulate ``D2`` (both kinds) and ``s_n^2`` against their predicted growth."""
    out = []
    prior_cfg = cfg["prior"]
    m = float(prior_cfg.get("m", 2.0)) if prior_cfg["family"] != "bm" else 2.0
    delta = {"power_law": prior_cfg.get("delta", 1.0), "bm": math.pi**-2}.get(prior_cfg["family"])
    const = som_constant(0, 2, m) * delta ** (1 / m) if delta is not None else None
    for n in cfg["n_list"]:
        prior = build_prior(cfg, n)
        N = prior.dim
        interval = interval_for(cfg, prior)
        cs = np.asarray(cfg.get("c_list") or d2_c_points(interval, cfg.get("c_points", 9)), dtype=float)
        dr = d2_term(prior, cs, "risk")
        dl = d2_term(prior, cs, "likelihood")
        s2 = np.array([posterior_total_variance(prior, c) for c in cs])
        base = (cs * N) ** (1 / m)
        rows = []
        for k, c in enumerate(cs):
            p = f"c={_fmt(c)}"
            rows += [
                (p, "d2_risk", dr[k]),
                (p, "d2_lik", dl[k]),
                (p, "s2", s2[k]),
                (p, "ratio_risk", dr[k] / base[k]),
                (p, "ratio_lik", dl[k] / base[k]),
                (p, "ratio_s2", s2[k] / base[k]),
                (p, "risk_over_lik", dr[k] / dl[k]),
                (p, "s2_over_risk", s2[k] / dr[k]),
            ]
            if const is not None and not prior.is_2d:
                rows.append((p, "ratio_risk_const", dr[k] / (base[k] * const)))
            if prior.is_2d:
                rows.append((p, "ratio_risk_log", dr[k] / (base[k] * (1 + math.log(cs[k] * N)))))
        if const is not None and not prior.is_2d:
            rows.append(("", "som_constant", const))
        if prior.is_2d:
            keep = (cs * N >= 1) & (cs * N <= prior.side ** m)
            plain = dr[keep] / base[keep]
            logc = plain / (1 + np.log(cs[keep] * N))
            rows.append(("cN<=n^m", "band_plain", float(plain.max() / plain.min())))
            rows.append(("cN<=n^m", "band_log", float(logc.max() / logc.min())))
        out.append(CellResult(n, "none", rows))
    return out


RUNNERS = {
    "coverage": run_coverage,
    "pointwise_coverage": run_pointwise_coverage,
    "rate": run_rate,
    "oracle": run_oracle,
    "hb_concentration": run_hb_concentration,
    "prior_polished": run_prior_polished,
    "d2_asymptotics": run_d2_asymptotics,
}


def run_experiment(cfg, jobs=1, trace=False):
    return RUNNERS[cfg["experiment"]](cfg, jobs, trace)


def _lookup(cell, param, stat):
    for p, s, v in cell.rows:
        if p == param and s == stat:
            return v
    return None


def lookup(cells, n, method, stat, param=""):
    """Value of one statistic in a list of cell results (None if absent)."""
    for cell in cells:
        if cell.n == n and cell.method == method:
            v = _lookup(cell, param, stat)
            if v is not None:
                return v
    return None
