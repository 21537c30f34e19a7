"""Experiment drivers. Each takes a resolved config and returns an :class:`Outcome`.

Summaries hold only deterministic quantities (no wall-clock times) so that a
rerun of the same config reproduces them exactly; timings go to the tables.
"""

import math
import re
import time
from dataclasses import dataclass, field

import numpy as np

from .. import _rng
from ..bounds import (
    BoundReport,
    bounds_for_manifold,
    cls_convolved,
    cls_gaussian,
    cls_general_log,
    cls_uniform_log,
    diameter_bound,
    smoothed_score_constants,
    spectral_gap_bound,
    sampling_error_bound,
)
from ..dsm import FeatureConfig, FeatureMap, fit_score_model, perturb_oracle, score_error
from ..errors import ConfigError
from ..geometry import PhaseTorus, bishop_gromov_check, build_mesh, make_manifold, summarize
from ..metrics import decay_fit, divergence_detect, mixing_time, w2
from ..sampler import (
    LadderLevel,
    NoiseSchedule,
    ResolutionLadder,
    annealed_langevin,
    downsample,
    downsample_matrix,
    multires_annealed_langevin,
    operator_norm_check,
    upsample_matrix,
)
from ..target import (
    CircleProductOracle,
    GaussianOracle,
    dissipativity_check,
    lipschitz_check,
    make_oracle,
)


@dataclass
class Outcome:
    summary: dict
    tables: dict = field(default_factory=dict)  # name -> list of row dicts
    clouds: dict = field(default_factory=dict)  # name -> (n, d) array


def _seeds(cfg):
    return [cfg["seed"] + i for i in range(cfg["seeds"])]


def _median(values):
    vals = [v for v in values if v is not None]
    if len(vals) < len(values):
        # a missing value (e.g. never mixed) counts as +inf
        vals = vals + [math.inf] * (len(values) - len(vals))
    return float(np.median(vals)) if vals else None


def build_schedule(sched):
    geo = sched.get("geometric")
    if geo is not None:
        return NoiseSchedule.geometric(
            geo["sigma_max"], geo["sigma_min"], geo["levels"], sched["steps"], sched["step_scale"]
        )
    return NoiseSchedule.uniform(sched["sigmas"], sched["steps"], sched["step_scale"])


def _manifold(spec, **overrides):
    try:
        return make_manifold(dict(spec, **overrides))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad manifold spec {spec}: {exc}") from exc


def _w2(a, b, metrics, seed):
    return w2(a, b, metrics["estimator"], metrics["n_projections"], seed)


def _floor(oracle, ref, metrics, seed):
    vals = [
        _w2(ref, oracle.sample_prior(len(ref), [seed, 9000 + k]), metrics, seed)[0]
        for k in range(metrics["floor_repeats"])
    ]
    return float(np.mean(vals))


def _series(log, ref, metrics, seed, key="step"):
    """W2 of every stored snapshot against ``ref``; one entry per distinct step."""
    by_step = {}
    for snap in log.snapshots:
        by_step[snap.step] = snap
    rows = []
    for step in sorted(by_step):
        snap = by_step[step]
        value, est = _w2(snap.points, ref, metrics, seed)
        rows.append({"step": step, "time": snap.time, "level": snap.level, "kind": snap.kind,
                     "w2": value, "estimator": est})
    return rows


def mixing_vs_dimension(cfg):
    """Steps needed to reach the statistical floor, across ambient dimensions."""
    schedule = build_schedule(cfg["schedule"])
    metrics = cfg["metrics"]
    chains = cfg["sampler"]["chains"]
    n_ref = metrics["reference_size"] or chains
    sigma_last = schedule.sigmas[-1]
    mix_rows, series_rows, clouds = [], [], {}
    for d in cfg["params"]["dims"]:
        manifold = _manifold(cfg["target"]["manifold"], ambient_dim=d)
        oracle = make_oracle(manifold)
        for seed in _seeds(cfg):
            start = time.perf_counter()
            log = annealed_langevin(oracle, schedule, chains, d, seed, cfg["sampler"]["snapshot_every"])
            if seed == cfg["seed"]:
                clouds[f"final_d{d}_seed{seed}"] = log.final
            ref = oracle.sample_prior(n_ref, [seed, d, 1])
            floor = _floor(oracle, ref, metrics, seed)
            threshold = floor + sigma_last * math.sqrt(d)
            rows = _series(log, ref, metrics, seed)
            for r in rows:
                series_rows.append(dict(d=d, seed=seed, floor=floor, **r))
            series = [(r["step"], r["w2"]) for r in rows]
            t_mix = mixing_time(series, threshold, metrics["window"])
            t_cont = None
            if t_mix is not None:
                t_cont = next(r["time"] for r in rows if r["step"] == t_mix)
            mix_rows.append({
                "d": d, "seed": seed, "mixing_step": t_mix, "mixing_time": t_cont,
                "floor": floor, "threshold": threshold, "final_w2": rows[-1]["w2"],
                "initial_w2": rows[0]["w2"], "wall_time": time.perf_counter() - start,
            })
    medians = {}
    for d in cfg["params"]["dims"]:
        medians[d] = _median([r["mixing_step"] for r in mix_rows if r["d"] == d])
    finite = [m for m in medians.values() if m is not None and math.isfinite(m)]
    ratio = max(finite) / min(finite) if finite and len(finite) == len(medians) and min(finite) > 0 else None
    summary = {
        "median_mixing_step": {str(d): m for d, m in medians.items()},
        "mixing_ratio": ratio,
        "median_final_w2": {
            str(d): _median([r["final_w2"] for r in mix_rows if r["d"] == d]) for d in medians
        },
        "median_floor": {str(d): _median([r["floor"] for r in mix_rows if r["d"] == d]) for d in medians},
    }
    return Outcome(summary, {"mixing": mix_rows, "series": series_rows}, clouds)


def score_error_tradeoff(cfg):
    """Long single-level runs with a controlled score error ``eps``."""
    p = cfg["params"]
    metrics = cfg["metrics"]
    chains = cfg["sampler"]["chains"]
    sigma = p["sigma"]
    steps = p["horizon_factor"] * cfg["schedule"]["steps"]
    schedule = NoiseSchedule((sigma,), (steps,), cfg["schedule"]["step_scale"])
    manifold = _manifold(cfg["target"]["manifold"])
    oracle = make_oracle(manifold)
    d = manifold.ambient_dim
    shift = np.zeros(d)
    shift[: len(p["init_shift"])] = p["init_shift"]
    n_ref = metrics["reference_size"] or chains
    rows, series_rows = [], []
    w_start = []
    for seed in _seeds(cfg):
        # reference is the data distribution itself: W2 to p carries the sigma*sqrt(d) offset
        ref = oracle.sample_prior(n_ref, [seed, 2])
        x0 = _rng.normals(seed, np.arange(chains), 0, d, _rng.INIT) + shift
        for eps in p["eps_values"]:
            start = time.perf_counter()
            perturbed = perturb_oracle(oracle, eps, seed)
            log = annealed_langevin(perturbed, schedule, chains, d, seed, cfg["sampler"]["snapshot_every"], x0=x0)
            srows = _series(log, ref, metrics, seed)
            for r in srows:
                series_rows.append(dict(eps=eps, seed=seed, **r))
            div = divergence_detect([(r["time"], r["w2"]) for r in srows], metrics["window"],
                                    p["divergence_tolerance"])
            w_start.append(srows[0]["w2"])
            rows.append({
                "eps": eps, "seed": seed, "t_star": div.t_star, "degradation": div.degradation,
                "diverged": div.diverged, "w_min": min(r["w2"] for r in srows),
                "w_end": srows[-1]["w2"], "wall_time": time.perf_counter() - start,
            })
    # the matching error bound as a function of t (qualitative comparison only)
    rho = manifold.rho
    lip, _, b = smoothed_score_constants(rho, sigma)
    c_ls = cls_convolved(2 * rho**2, sigma)  # uniform circle of radius r: c = 2 r^2
    probes = oracle.sample_prior(2048, [cfg["seed"], 5]) + sigma * np.random.default_rng(
        [cfg["seed"], 6]).standard_normal((2048, d))
    p_inf = float(np.exp(np.max(oracle.log_density(probes, sigma))))
    ts = np.linspace(schedule.total_time / 200, schedule.total_time, 200)
    w0 = float(np.median(w_start))
    bound_rows = []
    argmins = {}
    for eps in p["eps_values"]:
        vals = [sampling_error_bound(sigma, d, w0, float(t), c_ls, eps, b, lip, p_inf, p["bound_constant"],
                           allow_out_of_domain=True) for t in ts]
        k = int(np.argmin(vals))
        argmins[str(eps)] = float(ts[k])
        bound_rows += [{"eps": eps, "t": float(t), "bound": v} for t, v in zip(ts, vals)]
    summary = {
        "median_t_star": {str(e): _median([r["t_star"] for r in rows if r["eps"] == e]) for e in p["eps_values"]},
        "diverged_count": {str(e): sum(r["diverged"] for r in rows if r["eps"] == e) for e in p["eps_values"]},
        "median_degradation": {
            str(e): _median([r["degradation"] for r in rows if r["eps"] == e]) for e in p["eps_values"]
        },
        "bound_argmin_t": argmins,
        "horizon": schedule.total_time,
        "bound_inputs": {"d": d, "c_ls": c_ls, "b": b, "L": lip, "p_inf": p_inf, "w0": w0,
                         "note": "d < 3 evaluated with the domain override"},
    }
    return Outcome(summary, {"tradeoff": rows, "series": series_rows, "bound_curve": bound_rows})


_PRESET = re.compile(r"^(HRS|LRS-(?:(\d+)-)?↑(?:-HRS-(\d+))?)$")


def canonical_preset(name):
    return name.replace("up", "↑") if name.startswith("LRS") else name


def _slug(name):
    return canonical_preset(name).replace("↑", "up")


def ladder_for_preset(name, hr_oracle, lr_oracles, schedule, dim, chains):
    """Build the ladder for a named preset.

    ``HRS``: every level at full resolution. ``LRS-↑``: every level at the
    coarsest resolution, then upsample. ``LRS-↑-HRS-y``: all levels coarse,
    then the last ``y`` levels again at full resolution. ``LRS-x-↑-HRS-y``: the
    first ``x`` levels coarse, the last ``y`` at full resolution.
    """
    m = _PRESET.match(canonical_preset(name))
    if m is None:
        raise ConfigError(f"unknown ladder preset {name!r}")
    L = schedule.n_levels
    empty = NoiseSchedule((), (), schedule.step_scale, schedule.reference_sigma)
    if m.group(1) == "HRS":
        return ResolutionLadder(dim, [LadderLevel(hr_oracle, schedule)], chains)
    x = int(m.group(2)) if m.group(2) else L
    y = int(m.group(3)) if m.group(3) else 0
    if not (1 <= x <= L and 0 <= y <= L):
        raise ConfigError(f"preset {name!r} does not fit a {L}-level schedule")
    hr = schedule.select(L - y) if y else empty
    levels = [LadderLevel(hr_oracle, hr)]
    # intermediate resolutions (J > 1) are passed through without steps
    for oracle in lr_oracles[:-1]:
        levels.append(LadderLevel(oracle, empty))
    levels.append(LadderLevel(lr_oracles[-1], schedule.select(0, x)))
    return ResolutionLadder(dim, levels, chains)


def multires_comparison(cfg):
    """Quality and dimension-weighted cost of resolution-ladder presets."""
    schedule = build_schedule(cfg["schedule"])
    metrics = cfg["metrics"]
    chains = cfg["sampler"]["chains"]
    J = cfg["params"]["J"]
    manifold = _manifold(cfg["target"]["manifold"])
    if not isinstance(manifold, PhaseTorus):
        raise ConfigError("multires_comparison needs a phase_torus target")
    hr_oracle = CircleProductOracle.from_manifold(manifold)
    lr_oracles, m = [], manifold
    for _ in range(J):
        m = m.downsampled()
        lr_oracles.append(CircleProductOracle.from_manifold(m))
    dim = manifold.ambient_dim
    n_ref = metrics["reference_size"] or chains
    rows, clouds = [], {}
    for seed in _seeds(cfg):
        ref = hr_oracle.sample_prior(n_ref, [seed, 3])
        floor = _floor(hr_oracle, ref, metrics, seed)
        for name in cfg["params"]["presets"]:
            ladder = ladder_for_preset(name, hr_oracle, lr_oracles, schedule, dim, chains)
            log = multires_annealed_langevin(ladder, seed, cfg["sampler"]["snapshot_every"] or None)
            value, est = _w2(log.final, ref, metrics, seed)
            if seed == cfg["seed"]:
                clouds[f"final_{_slug(name)}_seed{seed}"] = log.final
            rows.append({
                "preset": canonical_preset(name), "seed": seed, "w2": value, "estimator": est,
                "floor": floor, "cost": log.counters.cost, "score_evals": log.counters.score_evals,
                "wall_time": log.counters.wall_time,
            })
    names = [canonical_preset(n) for n in cfg["params"]["presets"]]
    med_w2 = {n: _median([r["w2"] for r in rows if r["preset"] == n]) for n in names}
    cost = {n: _median([r["cost"] for r in rows if r["preset"] == n]) for n in names}
    summary = {"median_w2": med_w2, "cost": cost, "median_floor": _median([r["floor"] for r in rows])}
    if "HRS" in med_w2:
        summary["w2_ratio_to_hrs"] = {n: med_w2[n] / med_w2["HRS"] for n in names}
        summary["cost_ratio_to_hrs"] = {n: cost[n] / cost["HRS"] for n in names}
    return Outcome(summary, {"presets": rows}, clouds)


def _dsm_target(spec):
    spec = dict(spec)
    kind = spec.pop("kind")
    features = FeatureConfig(**spec.pop("features", {}))
    if kind == "gaussian":
        dim = spec.pop("dim", 2)
        if spec:
            raise ConfigError(f"unknown gaussian target keys {sorted(spec)}")
        return f"gaussian{dim}", GaussianOracle(np.zeros(dim)), features
    manifold = _manifold(dict(spec, kind=kind))
    return kind, make_oracle(manifold), features


def dsm_consistency(cfg):
    """Score error of closed-form DSM fits as the sample size grows."""
    p = cfg["params"]
    rows = []
    for spec in p["targets"]:
        name, oracle, features = _dsm_target(spec)
        for sigma in p["sigmas"]:
            for seed in _seeds(cfg):
                # one model class per seed (features from a separate pilot draw) and nested
                # datasets, so only the sample size changes along n
                pilot = oracle.sample_prior(max(1000, 4 * features.n_centers), [seed, 77])
                fmap = FeatureMap.from_data(pilot, features)
                full = oracle.sample_prior(max(p["ns"]), [seed, 1])
                for n in p["ns"]:
                    model = fit_score_model(full[:n], [sigma], features, p["ridge"], seed, fmap)
                    err = score_error(model, oracle, sigma, p["probes"], seed=10_000 + seed)
                    coef = None
                    if features.n_centers == 0 and features.linear and not features.constant:
                        coef = float(np.mean(np.diag(model.coefs[0])))
                    rows.append({"target": name, "sigma": sigma, "seed": seed, "n": n,
                                 "score_error": err, "linear_coef": coef})
    summary = {}
    for name in sorted({r["target"] for r in rows}):
        for sigma in p["sigmas"]:
            key = f"{name}@{sigma}"
            sub = [r for r in rows if r["target"] == name and r["sigma"] == sigma]
            summary[key] = {
                "median_error": {str(n): _median([r["score_error"] for r in sub if r["n"] == n]) for n in p["ns"]},
            }
            coefs = [r["linear_coef"] for r in sub if r["n"] == max(p["ns"])]
            if coefs and coefs[0] is not None:
                summary[key]["median_linear_coef"] = _median(coefs)
                summary[key]["expected_linear_coef"] = -1.0 / (1.0 + sigma**2)
    return Outcome(summary, {"dsm": rows})


def bound_reports(p):
    """All scalar bound rows for one parameter set."""
    allow = p["allow_out_of_domain"]
    K, dprime, kappa, sigma = p["K"], p["dprime"], p["kappa"], p["sigma"]
    reports = [
        BoundReport("cls_gaussian", {"sigma": sigma}, math.log(cls_gaussian(sigma)) if sigma > 0 else -math.inf),
    ]
    overrides = []
    D = diameter_bound(K, dprime, kappa, allow, overrides)
    reports.append(BoundReport("diameter", {"K": K, "dprime": dprime, "kappa": kappa}, math.log(D), {"D": D},
                               overrides))
    reports.append(BoundReport("inverse_spectral_gap", {"K": K, "dprime": dprime, "D": D},
                               spectral_gap_bound(K, dprime, D)))
    reports.append(cls_general_log(sigma, dprime, K, p["L"], p["B"], kappa, p.get("D"), allow))
    reports.append(cls_uniform_log(sigma, dprime, K, kappa, allow))
    return reports


def bounds_report(cfg):
    p = cfg["params"]
    reports = bound_reports(p)
    geometry = None
    if p["manifold"]:
        manifold = _manifold(p["manifold"])
        mesh = build_mesh(manifold, p["resolution"])
        geometry = summarize(manifold, mesh, p["B"], p["L"])
        extra = bounds_for_manifold(geometry, p["sigma"], p["L"], p["B"])
        for r in extra:
            r.name = f"{manifold.kind}:{r.name}"
        reports += extra
    rows = [r.as_row() for r in reports]
    summary = {r.name: r.log_value for r in reports}
    if geometry is not None:
        summary["geometry"] = geometry.as_dict()
    return Outcome(summary, {"bounds": rows})


def _gaussian_decay(oracle, sigma, dim, chains, steps, step_size, x0, seed, snapshot_every, metrics, ref_cov):
    schedule = NoiseSchedule((sigma,), (steps,), step_size)
    log = annealed_langevin(oracle, schedule, chains, dim, seed, snapshot_every, x0=x0)
    rng = np.random.default_rng([seed, 4])
    chol = np.linalg.cholesky(ref_cov)
    ref = rng.standard_normal((chains, dim)) @ chol.T
    floors = [_w2(ref, rng.standard_normal((chains, dim)) @ chol.T, metrics, seed)[0]
              for _ in range(metrics["floor_repeats"])]
    rows = _series(log, ref, metrics, seed)
    return rows, float(np.mean(floors))


def decay_contract(cfg):
    """Exact-score single-level run on a Gaussian against the exponential decay bound."""
    p = cfg["params"]
    metrics = cfg["metrics"]
    dim, sigma = p["dim"], p["sigma"]
    oracle = GaussianOracle(np.zeros(dim))
    c = cls_convolved(2.0, sigma)  # N(0, I) has constant 2
    rows_all, fits = [], []
    for seed in _seeds(cfg):
        x0 = _rng.normals(seed, np.arange(p["chains"]), 0, dim, _rng.INIT) + p["init_shift"]
        rows, floor = _gaussian_decay(oracle, sigma, dim, p["chains"], p["steps"], p["step_size"], x0, seed,
                                      p["snapshot_every"], metrics, (1 + sigma**2) * np.eye(dim))
        w0 = rows[0]["w2"]
        worst = 0.0
        for r in rows:
            bound = 1.1 * (w0 * math.exp(-2 * r["time"] / c) + floor)
            worst = max(worst, r["w2"] / bound)
            rows_all.append(dict(seed=seed, floor=floor, bound=bound, **r))
        fit = decay_fit([(r["time"], r["w2"]) for r in rows])
        fits.append({"seed": seed, "rate": fit.rate, "amplitude": fit.amplitude, "floor": fit.floor,
                     "residual": fit.residual, "max_ratio_to_bound": worst, "w2_floor": floor})
    summary = {
        "c_ls": c,
        "predicted_rate": 2 / c,
        "rates": [f["rate"] for f in fits],
        "max_ratio_to_bound": max(f["max_ratio_to_bound"] for f in fits),
        "bound_holds": all(f["max_ratio_to_bound"] <= 1.0 for f in fits),
    }
    return Outcome(summary, {"series": rows_all, "fits": fits})


def prop_checks(cfg):
    """Smoothed-score regularity, contraction of the ladder maps, volume growth, pushforward decay."""
    p = cfg["params"]
    metrics = cfg["metrics"]
    sigmas = build_schedule(cfg["schedule"]).sigmas
    reg_rows = []
    for spec in p["manifolds"]:
        manifold = _manifold(spec)
        oracle = make_oracle(manifold, resolution=p["quadrature_resolution"])
        for sigma in sigmas:
            lip = lipschitz_check(oracle, sigma, p["probes"], cfg["seed"])
            dis = dissipativity_check(oracle, sigma, p["probes"], cfg["seed"])
            reg_rows.append({"manifold": manifold.kind, "sigma": sigma, "lipschitz_estimate": lip.estimate,
                             "lipschitz_bound": lip.bound, "lipschitz_holds": lip.holds,
                             "min_dissipativity_margin": dis.min_margin, "dissipative": dis.holds})
    op_rows = []
    for n in p["operator_sizes"]:
        for name, mat in (("downsample", downsample_matrix(n)), ("upsample", upsample_matrix(n // 2))):
            norm, contractive = operator_norm_check(mat)
            op_rows.append({"map": name, "n_in": mat.shape[1], "n_out": mat.shape[0], "norm": norm,
                            "contractive": contractive})
    bg = p["bishop_gromov"]
    manifold = _manifold(bg["manifold"])
    mesh = build_mesh(manifold, bg["resolution"])
    K = summarize_K(manifold, mesh)
    bg_rows = []
    centers = np.linspace(0, mesh.size - 1, bg["centers"]).astype(int)
    radii = sorted(bg["radii"])
    for x in centers:
        for i, r in enumerate(radii):
            for R in radii[i + 1:]:
                lhs, rhs, holds = bishop_gromov_check(mesh, K, x, r, R, manifold.intrinsic_dim)
                bg_rows.append({"node": int(x), "r": r, "R": R, "ratio": lhs, "model_ratio": rhs, "holds": holds})
    # pushforward of a Gaussian under pair means, against the Gaussian itself
    pf = p["pushforward"]
    var = np.asarray(pf["variances"], dtype=float)
    dim = var.size
    P = downsample_matrix(dim)
    sigma = pf["sigma"]
    base_cov = np.diag(var)
    push_cov = P @ (base_cov + sigma**2 * np.eye(dim)) @ P.T
    base = GaussianOracle(np.zeros(dim), base_cov)
    # a Gaussian whose sigma-smoothing equals the pushforward of the smoothed base
    push = GaussianOracle(np.zeros(dim // 2), push_cov - sigma**2 * np.eye(dim // 2))
    rate_rows = []
    for seed in _seeds(cfg):
        x0 = _rng.normals(seed, np.arange(pf["chains"]), 0, dim, _rng.INIT) + pf["init_shift"]
        rates = {}
        for label, oracle, d, start, cov in (
            ("base", base, dim, x0, base_cov + sigma**2 * np.eye(dim)),
            ("pushforward", push, dim // 2, downsample(x0), push_cov),
        ):
            rows, _ = _gaussian_decay(oracle, sigma, d, pf["chains"], pf["steps"], pf["step_size"], start, seed,
                                      pf["snapshot_every"], metrics, cov)
            rates[label] = decay_fit([(r["time"], r["w2"]) for r in rows]).rate
        rate_rows.append({"seed": seed, "base_rate": rates["base"], "pushforward_rate": rates["pushforward"],
                          "ratio": rates["pushforward"] / rates["base"]})
    summary = {
        "lipschitz_violations": sum(not r["lipschitz_holds"] for r in reg_rows),
        "dissipativity_violations": sum(not r["dissipative"] for r in reg_rows),
        "downsample_norms": {str(r["n_in"]): r["norm"] for r in op_rows if r["map"] == "downsample"},
        "bishop_gromov_violations": sum(not r["holds"] for r in bg_rows),
        "bishop_gromov_K": K,
        "pushforward_rate_ratios": [r["ratio"] for r in rate_rows],
        "min_pushforward_rate_ratio": min(r["ratio"] for r in rate_rows),
    }
    return Outcome(summary, {"regularity": reg_rows, "operators": op_rows, "bishop_gromov": bg_rows,
                             "pushforward": rate_rows})


def summarize_K(manifold, mesh):
    """Curvature magnitude for volume comparison, kept strictly positive."""
    ric = manifold.ricci_lower(mesh.nodes)
    return max(float(-ric.min()), 1e-6)


DRIVERS = {
    "mixing_vs_dimension": mixing_vs_dimension,
    "score_error_tradeoff": score_error_tradeoff,
    "multires_comparison": multires_comparison,
    "dsm_consistency": dsm_consistency,
    "bounds_report": bounds_report,
    "prop_checks": prop_checks,
    "decay_contract": decay_contract,
}
