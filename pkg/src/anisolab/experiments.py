"""Experiment families behind the command-line harness.

Every family takes a parsed config (see config.py), runs its replicates
through a thread pool keyed by replicate index, merges results in index
order, and writes CSV artifacts plus a JSON-serializable summary.  The
per-replicate RNG substreams make outputs identical for any thread
count, and floats are written with 17 significant digits so replays can
be compared byte for byte.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import localtime as lt
from . import levelset as ls
from .covariance import FbmType, SheRiesz, SheWhite, cov_she_white, \
    cov_she_white_quad, she_increment_msq
from .config import ConfigError
from .geometry import covering_count, min_dist_integral, nearest_generator, \
    star_shape_check
from .metrics import HurstVector, rho_tilde_ball_measure
from .sampling import cholesky_with_jitter, gram_matrix, replicate_rng, slnd_scan

__all__ = ["run_experiment", "EXPERIMENT_RUNNERS", "write_csv"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _parallel_map(fn, indices, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))


def _model_from_cfg(cfg: dict):
    kind = cfg.get("model.kind", "fbm")
    if kind == "fbm":
        return FbmType(HurstVector(cfg["model.H"]))
    if kind == "she-white":
        return SheWhite()
    if kind == "she-riesz":
        return SheRiesz(int(cfg["model.N"]), float(cfg["model.beta"]))
    raise ConfigError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# voronoi: star-shape property of anisotropic Voronoi cells


def _voronoi_trial(args):
    seed, trial, g_max = args
    rng = replicate_rng(seed, trial)
    n_dim = int(rng.integers(1, 4))
    hurst = HurstVector(rng.uniform(0.2, 1.0, n_dim))
    m = int(rng.integers(2, g_max + 1))
    gens = rng.random((m, n_dim))
    t = rng.random(n_dim)
    eps = float(rng.uniform(0.05, 0.95))
    l = nearest_generator(t, gens, hurst)
    ok = star_shape_check(gens, hurst, l, t, eps)
    return trial, m, n_dim, eps, ok


def run_voronoi(cfg: dict, out_dir: str) -> tuple[dict, bool]:
    seed = cfg["seed"]
    trials = cfg["run.trials"]
    g_max = cfg["run.generators_max"]
    rows = _parallel_map(_voronoi_trial,
                         [(seed, i, g_max) for i in range(trials)],
                         cfg["threads"])
    write_csv(os.path.join(out_dir, "voronoi.csv"),
              ["trial", "n_generators", "n_dim", "eps", "ok"], rows)
    failures = sum(1 for r in rows if not r[4])
    summary = {"trials": trials, "failures": failures}
    return summary, failures > 0


# ---------------------------------------------------------------------------
# covering: nearest-to-reference counts under rho_tilde


def _covering_points(rng, n: int, n_dim: int, hurst: HurstVector,
                     adversarial: bool) -> np.ndarray:
    if not adversarial:
        return rng.random((n, n_dim))
    # concentric rho_tilde spheres around the reference at the origin:
    # points sharing a sphere are exactly equidistant from the reference,
    # stressing the tie-counting rule
    if n_dim == 1:
        # a 1-D sphere holds two points, so use one sphere per +- pair
        radii = 0.25 + 0.5 * rng.random((n + 1) // 2)
        mags = radii ** (1.0 / hurst.h[0])
        return np.concatenate([mags, -mags])[:n, None]
    # axis star: the 2N points sit at rho_tilde distance exactly r0 from
    # the reference while no pair of them is closer than r0, so every
    # star point counts the reference among its nearest neighbors
    r0 = 0.05 + 0.1 * rng.random()
    star = np.zeros((2 * n_dim, n_dim))
    for j in range(n_dim):
        star[2 * j, j] = r0 ** (1.0 / hurst.h[j])
        star[2 * j + 1, j] = -(r0 ** (1.0 / hurst.h[j]))
    star = star[:n]
    # remaining points form a distant tight cluster whose nearest
    # neighbors are other cluster points, never the reference
    n_fill = n - len(star)
    base = 0.7 + 0.05 * rng.random(n_dim)
    fill = base + 1e-3 * rng.random((n_fill, n_dim))
    return np.vstack([star, fill])


def _covering_trial(args):
    seed, trial, ns, hurst, adversarial = args
    rng = replicate_rng(seed, trial)
    # alternate random and adversarial placements deterministically
    adv = adversarial and trial % 2 == 1
    out = []
    for n in ns:
        for _ in range(100):
            pts = _covering_points(rng, n, hurst.n, hurst, adv)
            try:
                count = covering_count(np.zeros(hurst.n), pts, hurst)
                break
            except ValueError:
                continue  # coincident points, resample
        else:
            raise RuntimeError("could not draw a distinct point configuration")
        out.append((trial, n, count))
    return out


def run_covering(cfg: dict, out_dir: str) -> tuple[dict, bool]:
    hurst = HurstVector(cfg["geometry.H"])
    ns = cfg["run.points"]
    args = [(cfg["seed"], i, ns, hurst, cfg["run.adversarial"])
            for i in range(cfg["run.trials"])]
    nested = _parallel_map(_covering_trial, args, cfg["threads"])
    rows = [r for chunk in nested for r in chunk]
    write_csv(os.path.join(out_dir, "covering.csv"),
              ["trial", "n", "count"], rows)
    max_per_n = {n: max(r[2] for r in rows if r[1] == n) for n in ns}
    summary = {
        "trials": cfg["run.trials"],
        "n_dim": hurst.n,
        "max_count": max(max_per_n.values()),
        "max_count_per_n": {str(n): c for n, c in sorted(max_per_n.items())},
    }
    return summary, False


# ---------------------------------------------------------------------------
# integral: min-distance integral bound fit


def _integral_case(args):
    seed, case_index, beta, m, hurst, resolution = args
    rng = replicate_rng(seed, case_index)
    pts = rng.random((m - 1, hurst.n)) if m > 1 else np.empty((0, hurst.n))
    region = ("interval", np.zeros(hurst.n), np.ones(hurst.n))
    est = min_dist_integral(region, pts, beta, hurst, resolution=resolution)
    q = hurst.q()
    c_fit = est / (m ** (beta / q) * 1.0 ** (1.0 - beta / q))
    return beta, m, case_index, est, c_fit


def run_integral(cfg: dict, out_dir: str) -> tuple[dict, bool]:
    hurst = HurstVector(cfg["geometry.H"])
    args = []
    case = 0
    for beta in cfg["run.beta"]:
        for m in cfg["run.m"]:
            for _ in range(cfg["run.trials"]):
                args.append((cfg["seed"], case, beta, m, hurst,
                             cfg["run.resolution"]))
                case += 1
    rows = _parallel_map(_integral_case, args, cfg["threads"])
    write_csv(os.path.join(out_dir, "integral.csv"),
              ["m", "beta", "case", "estimate", "bound_fitted_C"],
              [(m, b, i, e, c) for b, m, i, e, c in rows])
    summary = {"Q": hurst.q(), "betas": {}}
    for beta in cfg["run.beta"]:
        means = {m: float(np.mean([r[4] for r in rows
                                   if r[0] == beta and r[1] == m]))
                 for m in cfg["run.m"]}
        vals = list(means.values())
        summary["betas"][f"{beta:g}"] = {
            "fitted_C_per_m": {str(m): c for m, c in means.items()},
            "spread_ratio": max(vals) / min(vals),
        }
    return summary, False


# ---------------------------------------------------------------------------
# slnd: conditional-variance lower-bound scan


def run_slnd(cfg: dict, out_dir: str) -> tuple[dict, bool]:
    model = _model_from_cfg(cfg)
    h_metric = HurstVector(cfg["model.H"]) if cfg.get("model.H") \
        else model.induced_hurst()
    report = slnd_scan(model, cfg["domain.lo"], cfg["domain.hi"], h_metric,
                       cfg["run.configs"], cfg["run.n_max"], cfg["seed"])
    write_csv(os.path.join(out_dir, "slnd.csv"),
              ["config", "ratio", "ratio_with_origin"],
              [(i, r, ro) for i, (r, ro) in
               enumerate(zip(report.ratios, report.ratios_with_origin))])
    summary = {
        "configs": report.configs,
        "n_max": report.n_max,
        "min_ratio": report.min_ratio,
        "min_ratio_with_origin": report.min_ratio_with_origin,
        "skipped": report.skipped,
    }
    return summary, bool(report.skipped > 0)


# ---------------------------------------------------------------------------
# localtime: occupation-density estimates and scaling statistics


def run_localtime(cfg: dict, out_dir: str) -> tuple[dict, bool]:
    model = _model_from_cfg(cfg)
    h = model.induced_hurst()
    if h.n != 1:
        raise ConfigError("the localtime experiment needs a 1-D index model")
    grid_size = cfg["run.grid"]
    ts, w = lt.path_grid(grid_size)
    dt = float(w[0])
    b = cfg["run.bin_width"]
    level = cfg["run.level"]
    center = cfg["run.center"]
    radii = np.asarray(cfg["run.radii"], dtype=float)
    orders = cfg["run.moment_orders"]
    masks = [np.abs(ts - center) <= r ** (1.0 / h.h[0]) for r in radii]
    for r, mask in zip(radii, masks):
        if mask.sum() < 4:
            raise ConfigError(f"run.radii value {r} is below grid resolution")
    inner_bm = isinstance(model, FbmType) and h.h[0] == 0.5
    factor = None
    if not inner_bm:
        factor, _ = cholesky_with_jitter(gram_matrix(model, ts[:, None]))

    def one(rep: int):
        path = lt.sample_path_batch(model, ts, 1, 1, cfg["seed"],
                                    first_replicate=rep, factor=factor)[0, :, 0]
        hist = lt.histogram_at_level(path[:, None], w, level, b)
        smooth = lt.smoothed_local_time(path[:, None], w, level, 1.0 / b**2)
        est = lt.occupation_histogram(path[:, None], w, b, center=level)
        balance = est.total_mass() - est.region_measure
        stats = [(0.0, rep, "hist_L", hist),
                 (0.0, rep, "smoothed_L", smooth),
                 (0.0, rep, "mass_gap", balance)]
        for r, mask in zip(radii, masks):
            seg = path[mask]
            br = 0.5 * r
            lhat = np.count_nonzero(np.abs(seg - level) <= br / 2.0) * dt / br
            osc = float(seg.max() - seg.min())
            stats.append((float(r), rep, "L_ball", lhat))
            stats.append((float(r), rep, "osc", osc))
        return stats

    nested = _parallel_map(one, range(cfg["run.replicates"]), cfg["threads"])
    rows = [r for chunk in nested for r in chunk]
    write_csv(os.path.join(out_dir, "localtime.csv"),
              ["radius", "replicate", "statistic", "value"], rows)

    hist_vals = np.array([r[3] for r in rows if r[2] == "hist_L"])
    smooth_vals = np.array([r[3] for r in rows if r[2] == "smoothed_L"])
    mass_gaps = np.array([r[3] for r in rows if r[2] == "mass_gap"])
    summary = {
        "mean_hist_L": float(hist_vals.mean()),
        "mean_smoothed_L": float(smooth_vals.mean()),
        "max_abs_mass_gap": float(np.abs(mass_gaps).max()),
        "moment_slopes": {},
    }
    q = h.q()
    for n in orders:
        moments = []
        for r in radii:
            vals = np.array([row[3] for row in rows
                             if row[2] == "L_ball" and row[0] == float(r)])
            moments.append(float(np.mean(vals ** n)))
        slope, _, stderr = lt.fit_loglog_slope(radii, moments)
        summary["moment_slopes"][str(n)] = {
            "slope": slope, "stderr": stderr, "target": n * (q - 1.0)}
    flagged = bool(np.abs(mass_gaps).max() > 1e-9)
    return summary, flagged


# ---------------------------------------------------------------------------
# levelset: dyadic-cell counts and box dimension


def run_levelset(cfg: dict, out_dir: str) -> tuple[dict, bool]:
    model = _model_from_cfg(cfg)
    h = model.induced_hurst()
    if h.n != 1:
        raise ConfigError("the levelset experiment needs a 1-D index model")
    grid_size = cfg["run.grid"]
    ts, _ = lt.path_grid(grid_size)
    grid = ts[:, None]
    orders = cfg["run.orders"]
    level = cfg["run.level"]
    inner_bm = isinstance(model, FbmType) and h.h[0] == 0.5
    factor = None
    if not inner_bm:
        factor, _ = cholesky_with_jitter(gram_matrix(model, grid))

    def one(rep: int):
        path = lt.sample_path_batch(model, ts, 1, 1, cfg["seed"],
                                    first_replicate=rep, factor=factor)[0]
        est = ls.extract_level_set(grid, path, [level], orders, h,
                                   domain_lo=[0.0], domain_hi=[1.0])
        return est

    ests = _parallel_map(one, range(cfg["run.replicates"]), cfg["threads"])
    total = ls.merge_counts(ests)
    masses = ls.gauge_mass_diagnostic(total, h.q(), 1,
                                      n_replicates=cfg["run.replicates"])
    rows = []
    for rep, est in enumerate(ests):
        for q_ord in est.orders():
            phi = masses[q_ord] / max(total[q_ord] / cfg["run.replicates"], 1e-300) \
                if total[q_ord] else 0.0
            rows.append((rep, q_ord, est.counts[q_ord],
                         est.counts[q_ord] * phi))
    write_csv(os.path.join(out_dir, "levelset.csv"),
              ["replicate", "order", "N_q", "mass_phi"], rows)
    summary = {
        "counts": {str(q): c for q, c in sorted(total.items())},
        "target": h.q() - 1.0,
    }
    try:
        dim, stderr = ls.box_dimension(total, n_replicates=cfg["run.replicates"])
        summary["dimension"] = dim
        summary["stderr"] = stderr
        flagged = False
    except ValueError as exc:
        summary["dimension"] = None
        summary["error"] = str(exc)
        flagged = True
    return summary, flagged


# ---------------------------------------------------------------------------
# she-verify: closed-form variance and increment scaling exponents


def run_she_verify(cfg: dict, out_dir: str) -> tuple[dict, bool]:
    beta = cfg["model.beta"]
    n_dim = cfg["model.N"]
    lags = np.geomspace(cfg["run.lag_lo"], cfg["run.lag_hi"], cfg["run.n_lags"])
    flags: list = []
    white = n_dim == 1 and beta == 1.0
    if white:
        def msq(t, x, s, y):
            return float(cov_she_white(t, x, t, x) + cov_she_white(s, y, s, y)
                         - 2.0 * cov_she_white(t, x, s, y))
        spatial = [msq(1.0, 0.0, 1.0, lag) for lag in lags]
        temporal = [msq(1.0, 0.0, 1.0 + lag, 0.0) for lag in lags]
        var_closed = float(cov_she_white(1.0, 0.0, 1.0, 0.0))
        var_quad = cov_she_white_quad(1.0, 0.0, 1.0, 0.0)
    else:
        zero = np.zeros(n_dim)
        def sp(lag):
            x = np.zeros(n_dim)
            x[0] = lag
            return she_increment_msq(1.0, zero, 1.0, x, beta, n_dim, flags)
        spatial = [sp(lag) for lag in lags]
        temporal = [she_increment_msq(1.0, zero, 1.0 + lag, zero, beta,
                                      n_dim, flags) for lag in lags]
        var_closed = None
        var_quad = None
    rows = ([("spatial", float(lag), v) for lag, v in zip(lags, spatial)]
            + [("temporal", float(lag), v) for lag, v in zip(lags, temporal)])
    write_csv(os.path.join(out_dir, "she.csv"), ["kind", "lag", "msq"], rows)
    s_slope, _, s_err = lt.fit_loglog_slope(lags, spatial)
    t_slope, _, t_err = lt.fit_loglog_slope(lags, temporal)
    summary = {
        "beta": beta,
        "N": n_dim,
        "spatial_slope": s_slope, "spatial_target": 2.0 - beta,
        "spatial_stderr": s_err,
        "temporal_slope": t_slope, "temporal_target": (2.0 - beta) / 2.0,
        "temporal_stderr": t_err,
        "quadrature_flags": len(flags),
    }
    if white:
        summary["var_u_1_0"] = var_closed
        summary["var_u_1_0_quad"] = var_quad
        summary["var_rel_gap"] = abs(var_closed - var_quad) / var_quad
    return summary, len(flags) > 0


EXPERIMENT_RUNNERS = {
    "voronoi": run_voronoi,
    "covering": run_covering,
    "integral": run_integral,
    "slnd": run_slnd,
    "localtime": run_localtime,
    "levelset": run_levelset,
    "she-verify": run_she_verify,
}


def run_experiment(cfg: dict, out_dir: str) -> tuple[dict, bool]:
    """Dispatch one experiment; returns (summary, flagged)."""
    return EXPERIMENT_RUNNERS[cfg["experiment"]](cfg, out_dir)
