"""Experiment implementations behind the command-line runner.

Each experiment draws seeded Monte Carlo replications, evaluates its
verification statistics, and returns a :class:`RunReport` of threshold
rows plus the sample vectors the plot emitter consumes.  Replications are
drawn in fixed-size blocks, one counter-based substream per block keyed by
``(seed, experiment tag, block index)``, and block results are concatenated
in block order, so a report depends only on ``(config, seed)`` and never on
the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
import scipy
from scipy.special import ndtr

from . import __version__
from .config import ExperimentConfig
from .errors import ConfigError, PathError, RegimeError
from .hull import concave_majorant, faces_to_rows, merge_collinear, shape_stats
from .limitlaws import draw_limit_stable_zero_mean, draw_limit_heavy, sample_limit_drift
from .models import (
    EXACT_JUMPS,
    BrownianDrift,
    CompoundPoissonDrift,
    Gaussian,
    PathSkeleton,
    StableProcess,
    norming,
    sample_path,
    stable_standard,
    theta,
    theta_fubini,
)
from .rng import substream
from .sbrep import QuintupleSample, normalize_finite_variance, sample_quintuple
from .sticks import (
    COMPENSATION_CATALOG,
    big_stick_power_sum,
    compensation_estimate,
    tau_gset_counts,
)
from .stats import ks_distance_to_cdf, ks_two_sample, tail_slope, variance_se

__all__ = ["Row", "RunReport", "run", "write_report", "emit_plot_data", "load_report"]

BLOCK = 512

REPORT_SCHEMA = "levyhull-report/1"

CSV_HEADER = ("T", "statistic", "estimate", "se_or_d", "p_value", "threshold", "verdict")


@dataclass(frozen=True)
class Row:
    T: float
    statistic: str
    estimate: float
    se_or_d: float      # standard error or KS distance; NaN when not used
    p_value: float      # NaN for non-KS rows
    threshold: str
    passed: bool


@dataclass
class RunReport:
    experiment: str
    rows: list = field(default_factory=list)
    samples: dict = field(default_factory=dict)      # name -> 1-d vector
    tables: dict = field(default_factory=dict)       # name -> (header, 2-d array)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


# ---------------------------------------------------------------------------
# block-parallel drawing
# ---------------------------------------------------------------------------

def _blocks(total):
    full, rest = divmod(total, BLOCK)
    sizes = [BLOCK] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _collect_blocks(worker, total, workers):
    """Run ``worker(block_index, block_size)`` over all blocks and stack the
    resulting arrays in block order."""
    plan = _blocks(total)
    if workers <= 1:
        parts = [worker(i, n) for i, n in plan]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(worker, i, n): i for i, n in plan}
            done = {}
            for fut, i in futures.items():
                done[i] = fut.result()
        parts = [done[i] for i, _ in plan]
    return np.vstack(parts)


def _quintuple_block(index, n, *, model, T, cutoff, seed, tag):
    g = substream(seed, tag, index)
    out = np.empty((n, 7))
    for k in range(n):
        q = sample_quintuple(model, T, g, cutoff=cutoff)
        out[k] = (
            q.upsilon, q.h_prime, q.final, q.sup, q.gamma, q.excess,
            q.truncation_error_bound,
        )
    return out


def _hull_block(index, n, *, model, T, seed, tag):
    g = substream(seed, tag, index)
    out = np.empty((n, 4))
    for k in range(n):
        path = sample_path(model, T, EXACT_JUMPS, g)
        s = shape_stats(merge_collinear(concave_majorant(path)), T)
        out[k] = (s.upsilon, s.final, s.sup, s.gamma)
    return out


QUINTUPLE_COLUMNS = (
    "upsilon", "h_prime", "final", "sup", "gamma", "excess", "truncation_bound"
)


def draw_quintuples(model, T, reps, seed, tag, cutoff, workers=1):
    """Replication matrix with the :data:`QUINTUPLE_COLUMNS` columns."""
    worker = partial(_quintuple_block, model=model, T=T, cutoff=cutoff, seed=seed, tag=tag)
    return _collect_blocks(worker, reps, workers)


def _draw_record_table(mat, T):
    """Draw-record table (one row per replication) for CSV export."""
    cols = np.column_stack(
        [np.full(mat.shape[0], T), mat[:, 0], mat[:, 1], mat[:, 2], mat[:, 3], mat[:, 4], mat[:, 6]]
    )
    header = ("T", "upsilon", "h_prime", "final", "sup", "gamma", "truncation_bound")
    return header, cols


def draw_hull_stats(model, T, reps, seed, tag, workers=1):
    """Hull statistics of exact jump paths: (upsilon, final, sup, gamma)."""
    worker = partial(_hull_block, model=model, T=T, seed=seed, tag=tag)
    return _collect_blocks(worker, reps, workers)


def _quintuples_from_matrix(mat, T, cutoff):
    for row in mat:
        yield QuintupleSample(
            upsilon=row[0],
            h_prime=int(row[1]),
            final=row[2],
            sup=row[3],
            gamma=row[4],
            excess=row[5],
            truncation_error_bound=math.nan,
            horizon=T,
            cutoff=cutoff,
        )


def _row_ks(T, name, ks, level=0.01):
    return Row(T, name, ks.statistic, ks.statistic, ks.p_value, f"p > {level}", ks.p_value > level)


def _row_ci(T, name, est, se, target, mult=3.0):
    est, se = float(est), float(se)
    tol = mult * se
    return Row(
        T, name, est, se, math.nan,
        f"|value - {target:g}| <= {mult:g}*SE", bool(abs(est - target) <= max(tol, 1e-9)),
    )


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _exp_sb_props(cfg: ExperimentConfig) -> RunReport:
    rep = RunReport("sb-props")
    if cfg.checks not in ("all", "tau", "compensation"):
        raise ConfigError(f"sb-props checks must be tau/compensation/all, got {cfg.checks!r}")
    if cfg.checks in ("all", "tau"):
        for k, T in enumerate(cfg.t_grid):
            g = substream(cfg.seed, "sb-props-tau", k)
            tau_c, gset_c = tau_gset_counts(T, cfg.reps, g)
            lt = math.log(T)
            x = tau_c.astype(float)
            se_mean = x.std(ddof=1) / math.sqrt(x.size)
            rep.rows.append(_row_ci(T, "tau_mean", x.mean(), se_mean, lt))
            s2, se_var = variance_se(x)
            rep.rows.append(_row_ci(T, "tau_var", s2, se_var, lt))
            excess = (tau_c + 1 - gset_c).astype(float)
            se_e = excess.std(ddof=1) / math.sqrt(excess.size)
            rep.rows.append(_row_ci(T, "gset_excess", excess.mean(), se_e, 1.0))
            nested = float(np.mean(gset_c <= tau_c + 1))
            rep.rows.append(Row(T, "gset_nested_share", nested, math.nan, math.nan, "== 1", nested == 1.0))
    if cfg.checks in ("all", "compensation"):
        horizons = {"identity": 5.0, "invsqrt": 100.0, "inverse": math.e, "logover": 20.0}
        for k, (name, T0) in enumerate(sorted(horizons.items())):
            g = substream(cfg.seed, "sb-props-comp", k)
            entry = COMPENSATION_CATALOG[name]
            mean, se = compensation_estimate(entry, T0, cfg.reps, g)
            rep.rows.append(_row_ci(T0, f"compensation_{name}", mean, se, entry.integral(T0)))
        for k, (q, T0) in enumerate(((1.0, 1e6), (2.0, 1e4))):
            g = substream(cfg.seed, "sb-props-pow", k)
            mean, se = big_stick_power_sum(q, T0, cfg.reps, g)
            target = (1.0 - T0**-q) / q
            rep.rows.append(_row_ci(T0, f"power_sum_q{q:g}", mean, se, target))
    return rep


def _exp_verify_identity(cfg: ExperimentConfig) -> RunReport:
    model = cfg.model
    if not isinstance(model, CompoundPoissonDrift):
        raise ConfigError("verify-identity needs a compound Poisson model (exact jump paths)")
    rep = RunReport("verify-identity")
    T = cfg.t_grid[-1]
    hull = draw_hull_stats(model, T, cfg.reps, cfg.seed, "identity-hull", cfg.workers)
    quin = draw_quintuples(model, T, cfg.reps, cfg.seed, "identity-rep", cfg.cutoff, cfg.workers)
    pairs = (("upsilon", 0, 0), ("final", 1, 2), ("sup", 2, 3), ("gamma", 3, 4))
    for name, hcol, qcol in pairs:
        ks = ks_two_sample(hull[:, hcol], quin[:, qcol])
        rep.rows.append(_row_ks(T, f"identity_ks_{name}", ks))
        rep.samples[f"hull_{name}"] = hull[:, hcol]
        rep.samples[f"rep_{name}"] = quin[:, qcol]
    rep.tables["rep_draws"] = _draw_record_table(quin, T)
    return rep


def _clt_coords(model, mat, T, cutoff):
    sto = np.empty((mat.shape[0], 5))
    det1 = np.empty(mat.shape[0])
    for i, q in enumerate(_quintuples_from_matrix(mat, T, cutoff)):
        sto[i] = normalize_finite_variance(model, q, "stochastic").coords
        det1[i] = normalize_finite_variance(model, q, "deterministic").coords[0]
    return sto, det1


def _exp_verify_clt(cfg: ExperimentConfig) -> RunReport:
    model = cfg.model
    if model is None:
        raise ConfigError("verify-clt needs a model")
    mean = model.mean_rate()
    if abs(mean) > 1e-9:
        raise ConfigError(f"verify-clt needs a zero-mean model, got mean rate {mean}")
    var = model.variance_rate()
    if not (math.isfinite(var) and var > 0.0):
        raise ConfigError("verify-clt needs finite positive variance")
    if cfg.t_grid[0] <= math.e:
        raise ConfigError("verify-clt horizons must exceed e")
    if cfg.checks not in ("all", "trend", "independence"):
        raise ConfigError(
            f"verify-clt checks must be trend/independence/all, got {cfg.checks!r}"
        )
    rep = RunReport("verify-clt")
    limit_sd = math.sqrt(3.0) / 2.0 * var
    prev_d = None
    grid = cfg.t_grid if cfg.checks in ("all", "trend") else cfg.t_grid[-1:]
    for k, T in enumerate(grid):
        mat = draw_quintuples(model, T, cfg.reps, cfg.seed, f"clt-{k}", cfg.cutoff, cfg.workers)
        sto, det1 = _clt_coords(model, mat, T, cfg.cutoff)
        rep.samples[f"det_stat_T{k}"] = det1
        if cfg.checks in ("all", "trend"):
            d = ks_distance_to_cdf(det1, lambda x: _phi(x / limit_sd))
            trend_ok = True if prev_d is None else d < prev_d
            rep.rows.append(
                Row(T, "clt_ks_distance", d, d, math.nan,
                    "strictly decreasing along the grid", trend_ok)
            )
            prev_d = d
        if T != grid[-1]:
            continue
        if cfg.checks in ("all", "trend"):
            rep.rows.append(Row(T, "clt_ks_final", d, d, math.nan, "D < 0.1", d < 0.1))
            ratio = float(det1.var()) / (0.75 * var * var)
            rep.rows.append(
                Row(T, "clt_variance_ratio", ratio, math.nan, math.nan,
                    "within 15% of 1", abs(ratio - 1.0) < 0.15)
            )
        if cfg.checks in ("all", "independence"):
            for name, col in (("sup", 2), ("final", 3), ("gamma", 4)):
                c = float(np.corrcoef(sto[:, 0], sto[:, col])[0, 1])
                rep.rows.append(
                    Row(T, f"fluct_corr_{name}", c, math.nan, math.nan,
                        "|corr| < 0.1", abs(c) < 0.1)
                )
            # the two centerings differ by half the variance times the count
            # coordinate: an exact linear identity per draw
            recon = sto[:, 0] + 0.5 * var * sto[:, 1]
            err = float(np.abs(det1 - recon).max())
            rep.rows.append(
                Row(T, "centering_identity_max_err", err, math.nan, math.nan,
                    "<= 1e-9", err <= 1e-9)
            )
            c_id = float(np.corrcoef(det1, recon)[0, 1])
            rep.rows.append(
                Row(T, "centering_identity_corr", c_id, math.nan, math.nan,
                    ">= 1 - 1e-9", c_id >= 1.0 - 1e-9)
            )
    return rep


def _exp_verify_stable(cfg: ExperimentConfig) -> RunReport:
    model = cfg.model
    if model is None:
        raise ConfigError("verify-stable needs a model")
    alpha = model.attraction_alpha()
    try:
        mean = model.mean_rate()
    except RegimeError:
        raise ConfigError("verify-stable needs attraction index above 1") from None
    rep = RunReport("verify-stable")
    T = cfg.t_grid[-1]
    if mean == 0.0:
        if not 1.0 < alpha < 2.0:
            raise ConfigError("zero-mean verify-stable needs attraction index in (1, 2)")
        # the reference series uses unit-scale stable draws; exact stable
        # models match it through their norming, while merely attracted
        # models (Pareto-jump compound Poisson) carry an unknown limiting
        # scale constant and are expected to miss the KS thresholds
        beta = model.beta if isinstance(model, StableProcess) else 0.0
        mat = draw_quintuples(model, T, cfg.reps, cfg.seed, "stable-rep", cfg.cutoff, cfg.workers)
        a_t = norming(model, T)
        finite = np.column_stack(
            [
                (mat[:, 0] - T) * T / a_t**2,
                mat[:, 3] / a_t,
                mat[:, 2] / a_t,
                mat[:, 4] / T,
            ]
        )
        coords, _ = draw_limit_stable_zero_mean(alpha, cfg.reps, substream(cfg.seed, "stable-limit", 0), cfg.eps, beta=beta)
        for k, name in enumerate(("length", "sup", "final", "gamma")):
            ks = ks_two_sample(finite[:, k], coords[:, k])
            rep.rows.append(_row_ks(T, f"stable_ks_{name}", ks))
            rep.samples[f"finite_{name}"] = finite[:, k]
            rep.samples[f"limit_{name}"] = coords[:, k]
        rep.tables["rep_draws"] = _draw_record_table(mat, T)
        rep.tables["limit_draws"] = (("length", "sup", "final", "gamma"), coords)
        return rep
    if mean > 0.0:
        if not 1.0 < alpha <= 2.0:
            raise ConfigError("drifted verify-stable needs attraction index in (1, 2]")
        mat = draw_quintuples(model, T, cfg.reps, cfg.seed, "drift-a-rep", cfg.cutoff, cfg.workers)
        a_t = norming(model, T)
        c = math.sqrt(1.0 + mean * mean)
        c1 = (mat[:, 0] - c * T) / a_t
        c3 = (mat[:, 2] - mean * T) / a_t
        cov = np.cov(c1, c3)
        slope = float(cov[0, 1] / cov[1, 1])
        target = mean / c
        rep.rows.append(
            Row(T, "drift_regression_slope", slope, math.nan, math.nan,
                f"within 5% of {target:.6f}", abs(slope / target - 1.0) < 0.05)
        )
        g = substream(cfg.seed, "drift-a-limit", 0)
        errs = []
        for _ in range(min(cfg.reps, 2000)):
            s = sample_limit_drift(alpha, mean, "a", g, scale=getattr(model, "scale", 1.0))
            errs.append(abs(s.coords[0] - target * s.coords[1]))
        err = float(max(errs))
        rep.rows.append(
            Row(T, "limit_rank_one_max_err", err, math.nan, math.nan, "<= 1e-12", err <= 1e-12)
        )
        rep.samples["drift_length_fluct"] = c1
        rep.samples["drift_final_fluct"] = c3
        return rep
    # negative mean: the supremum and its time stabilize
    if not 1.0 < alpha <= 2.0:
        raise ConfigError("drifted verify-stable needs attraction index in (1, 2]")
    if len(cfg.t_grid) < 2:
        raise ConfigError("negative-mean verify-stable needs at least two horizons")
    t_lo, t_hi = cfg.t_grid[-2], cfg.t_grid[-1]
    sup_lo = draw_quintuples(model, t_lo, cfg.reps, cfg.seed, "drift-b-lo", cfg.cutoff, cfg.workers)[:, 3]
    sup_hi = draw_quintuples(model, t_hi, cfg.reps, cfg.seed, "drift-b-hi", cfg.cutoff, cfg.workers)[:, 3]
    ks = ks_two_sample(sup_lo, sup_hi)
    rep.rows.append(_row_ks(t_hi, "sup_stabilizes_ks", ks))
    rep.samples["sup_lo"] = sup_lo
    rep.samples["sup_hi"] = sup_hi
    return rep


def _exp_verify_heavy(cfg: ExperimentConfig) -> RunReport:
    model = cfg.model
    if model is None or not 0.0 < model.attraction_alpha() < 1.0:
        raise ConfigError("verify-heavy needs attraction index in (0, 1)")
    beta = model.beta if isinstance(model, StableProcess) else 0.0
    rep = RunReport("verify-heavy")
    T = cfg.t_grid[-1]
    mat = draw_quintuples(model, T, cfg.reps, cfg.seed, "heavy-rep", cfg.cutoff, cfg.workers)
    a_t = norming(model, T)
    ups, fin, sup, gam = mat[:, 0], mat[:, 2], mat[:, 3], mat[:, 4]
    coords, _ = draw_limit_heavy(model.attraction_alpha(), cfg.reps,
                                substream(cfg.seed, "heavy-limit", 0), cfg.eps, beta=beta)
    checks = (
        ("length", ups / a_t, coords[:, 0]),
        ("sup", sup / a_t, coords[:, 1]),
        ("final", fin / a_t, coords[:, 2]),
        ("gamma", gam / T, coords[:, 3]),
    )
    for name, finite, limit in checks:
        ks = ks_two_sample(finite, limit)
        rep.rows.append(_row_ks(T, f"heavy_ks_{name}", ks))
        rep.samples[f"finite_{name}"] = np.asarray(finite)
        rep.samples[f"limit_{name}"] = limit
    rep.tables["rep_draws"] = _draw_record_table(mat, T)
    lo = 2.0 * sup - fin
    slack = 1e-9 * a_t
    violations = int(np.count_nonzero((ups < lo - slack) | (ups > T + lo + slack)))
    rep.rows.append(
        Row(T, "sandwich_violations", float(violations), math.nan, math.nan, "== 0", violations == 0)
    )
    return rep


def _exp_tail_index(cfg: ExperimentConfig) -> RunReport:
    model = cfg.model
    if not isinstance(model, StableProcess) or not 1.0 < model.alpha < 2.0:
        raise ConfigError("tail-index needs a stable model with index in (1, 2)")
    alpha = model.alpha
    rep = RunReport("tail-index")
    draws = np.empty(cfg.reps)
    done = 0
    block = 50_000
    k = 0
    while done < cfg.reps:
        n = min(block, cfg.reps - done)
        coords, _ = draw_limit_stable_zero_mean(alpha, n, substream(cfg.seed, "tail-q", k), cfg.eps)
        draws[done : done + n] = coords[:, 0]
        done += n
        k += 1
    fit = tail_slope(draws)
    target = -alpha / 2.0
    rep.rows.append(
        Row(math.nan, "tail_slope", fit.slope, fit.slope_se, math.nan,
            f"within 0.1 of {target}", abs(fit.slope - target) <= 0.1)
    )
    # perpetuity reconstruction: one stick and one stable draw on top of an
    # independent copy must reproduce the law
    n = min(cfg.reps // 2, 100_000)
    g = substream(cfg.seed, "tail-perp", 0)
    q = draws[:n]
    q_prime = draws[n : 2 * n]
    ell1 = g.random(n)
    s1 = np.asarray(stable_standard(alpha, 0.0, g, n))
    recon = (1.0 - ell1) ** (2.0 / alpha - 1.0) * q_prime + 0.5 * ell1 ** (
        2.0 / alpha - 1.0
    ) * s1 * s1
    ks = ks_two_sample(q, recon)
    rep.rows.append(_row_ks(math.nan, "perpetuity_ks", ks))
    keep = min(cfg.reps, 100_000)
    rep.samples["q_draws"] = draws[:keep]
    rep.samples["q_reconstructed"] = recon
    return rep


def _exp_compare_length(cfg: ExperimentConfig) -> RunReport:
    model = cfg.model
    if model is None:
        raise ConfigError("compare-length needs a model")
    if abs(model.mean_rate()) > 1e-9 or not math.isfinite(model.variance_rate()):
        raise ConfigError("compare-length runs in the zero-mean finite-variance regime")
    if len(cfg.t_grid) < 2:
        raise ConfigError("compare-length needs at least two horizons")
    var = model.variance_rate()
    rep = RunReport("compare-length")
    sds = []
    for k, T in enumerate(cfg.t_grid):
        mat = draw_quintuples(model, T, cfg.reps, cfg.seed, f"cmp-{k}", cfg.cutoff, cfg.workers)
        ups, fin, sup, gam = mat[:, 0], mat[:, 2], mat[:, 3], mat[:, 4]
        hut = np.hypot(gam, sup) + np.hypot(T - gam, sup - fin) - T
        maj = (ups - T) - 0.5 * var * math.log(T) + theta(model, T)
        tent = 2.0 * sup - fin
        trio = (float(hut.std(ddof=1)), float(maj.std(ddof=1)), float(tent.std(ddof=1)))
        sds.append(trio)
        ordered = trio[0] < trio[1] < trio[2]
        for name, val in zip(("hut", "majorant", "tent"), trio):
            rep.rows.append(
                Row(T, f"sd_{name}", val, math.nan, math.nan, "sd_hut < sd_majorant < sd_tent", ordered)
            )
    for (t0, s0), (t1, s1) in zip(zip(cfg.t_grid, sds), zip(cfg.t_grid[1:], sds[1:])):
        r_hut, r_maj, r_tent = (b / a for a, b in zip(s0, s1))
        root_t = math.sqrt(t1 / t0)
        root_log = math.sqrt(math.log(t1) / math.log(t0))
        rep.rows.append(
            Row(t1, "ratio_hut", r_hut, math.nan, math.nan, "in [0.8, 1.3] (scale O(1))",
                0.8 <= r_hut <= 1.3)
        )
        rep.rows.append(
            Row(t1, "ratio_majorant", r_maj, math.nan, math.nan,
                f"within 25% of sqrt(log ratio) = {root_log:.3f}",
                abs(r_maj / root_log - 1.0) <= 0.25)
        )
        rep.rows.append(
            Row(t1, "ratio_tent", r_tent, math.nan, math.nan,
                f"within 15% of sqrt(T ratio) = {root_t:.3f}",
                abs(r_tent / root_t - 1.0) <= 0.15)
        )
        rep.rows.append(
            Row(t1, "ratio_ordering", r_tent - r_hut, math.nan, math.nan,
                "ratio_hut < ratio_majorant < ratio_tent", r_hut < r_maj < r_tent)
        )
    return rep


def _exp_theta_scan(cfg: ExperimentConfig) -> RunReport:
    model = cfg.model
    if model is None:
        raise ConfigError("theta-scan needs a model")
    rep = RunReport("theta-scan")
    prev_ratio = None
    for T in cfg.t_grid:
        if T < 1.0:
            raise ConfigError("theta-scan horizons must be >= 1")
        a = theta(model, T)
        b = theta_fubini(model, T)
        rel = abs(a - b) / max(abs(a), 1e-300)
        rep.rows.append(
            Row(T, "theta_forms_rel_err", rel, math.nan, math.nan, "<= 1e-8",
                rel <= 1e-8 or (a == 0.0 and b == 0.0))
        )
        ratio = a / math.log(T) if T > 1.0 else math.nan
        decreasing = True if prev_ratio is None else ratio < prev_ratio
        rep.rows.append(
            Row(T, "theta_over_log", ratio, math.nan, math.nan,
                "strictly decreasing along the grid", decreasing)
        )
        rep.rows.append(Row(T, "theta", a, math.nan, math.nan, "reported", True))
        if not math.isnan(ratio):
            prev_ratio = ratio
    return rep


# hull-props path battery ----------------------------------------------------

def _envelope_oracle(times, values, upper=True):
    """Cubic-cost concave/convex envelope through two-point interpolation;
    independent of the monotone chain."""
    n = len(times)
    best = np.array(values, dtype=float)
    for k in range(n):
        for i in range(n):
            if times[i] > times[k]:
                continue
            for j in range(n):
                if times[j] < times[k] or times[i] == times[j]:
                    continue
                lam = (times[k] - times[i]) / (times[j] - times[i])
                v = (1.0 - lam) * values[i] + lam * values[j]
                if upper:
                    best[k] = max(best[k], v)
                else:
                    best[k] = min(best[k], v)
    return best


def _random_battery_path(g):
    kind = g.integers(0, 4)
    if kind == 0:
        T = float(g.uniform(0.5, 5.0))
        steps = int(g.integers(4, 40))
        return sample_path(BrownianDrift(1.0, mu=float(g.normal(0, 0.5))), T, T / steps, g)
    if kind == 1:
        model = CompoundPoissonDrift(
            float(g.uniform(0.5, 3.0)), Gaussian(0.0, 1.0), mu=float(g.normal(0, 0.5))
        )
        return sample_path(model, float(g.uniform(2.0, 20.0)), EXACT_JUMPS, g)
    if kind == 2:
        T = float(g.uniform(0.5, 5.0))
        steps = int(g.integers(4, 40))
        alpha = float(g.uniform(0.3, 1.9))
        if abs(alpha - 1.0) < 0.05:
            alpha = 1.2
        return sample_path(StableProcess(alpha), T, T / steps, g)
    # lattice walk with deliberate ties and collinear stretches
    n = int(g.integers(3, 15))
    times = np.arange(n + 1, dtype=float)
    values = np.concatenate([[0.0], np.round(g.standard_normal(n) * 2.0) / 2.0]).cumsum()
    return PathSkeleton(times, values, float(times[-1]), "grid")


def _eval_faces(faces, times):
    xs = np.concatenate([[0.0], np.cumsum([f.length for f in faces])])
    ys = np.concatenate([[0.0], np.cumsum([f.height for f in faces])])
    return np.interp(times, xs, ys)


def _exp_hull_props(cfg: ExperimentConfig) -> RunReport:
    rep = RunReport("hull-props")
    g = substream(cfg.seed, "hull-props", 0)
    dom = cons = mono = sand = 0
    for _ in range(cfg.reps):
        path = _random_battery_path(g)
        T = path.horizon
        faces = merge_collinear(concave_majorant(path))
        try:
            s = shape_stats(faces, T)
        except PathError:
            cons += 1
            continue
        env = _eval_faces(faces, path.times)
        tol = 1e-9 * max(1.0, float(np.abs(path.values).max()))
        if np.any(env < path.values - tol):
            dom += 1
        if path.pre_values is not None and np.any(env < path.pre_values - tol):
            dom += 1
        slopes = [f.slope for f in faces]
        if any(b >= a for a, b in zip(slopes, slopes[1:])):
            mono += 1
        if not (s.hut_length <= s.upsilon + 1e-9 and s.upsilon <= s.tent_length + 1e-9):
            sand += 1
        if not (T <= s.upsilon + 1e-9):
            sand += 1
    for name, count in (
        ("domination_violations", dom),
        ("conservation_violations", cons),
        ("monotonicity_violations", mono),
        ("sandwich_violations", sand),
    ):
        rep.rows.append(
            Row(math.nan, name, float(count), math.nan, math.nan, "== 0", count == 0)
        )
    # ten-point brute-force equivalence
    g2 = substream(cfg.seed, "hull-oracle", 0)
    mismatches = 0
    n_oracle = min(cfg.reps, 2000)
    for _ in range(n_oracle):
        times = np.concatenate([[0.0], np.sort(g2.random(8)) * 0.8 + 0.1, [1.0]])
        values = np.concatenate([[0.0], g2.standard_normal(9)])
        path = PathSkeleton(times, values, 1.0, "grid")
        env = _eval_faces(concave_majorant(path), times)
        if not np.allclose(env, _envelope_oracle(times, values, True), atol=1e-12):
            mismatches += 1
        low = _eval_faces_lower(path)
        if not np.allclose(low, _envelope_oracle(times, values, False), atol=1e-12):
            mismatches += 1
    rep.rows.append(
        Row(math.nan, "oracle_mismatches", float(mismatches), math.nan, math.nan,
            f"== 0 over {n_oracle} ten-point paths", mismatches == 0)
    )
    # one representative maximal-face set in the l/h/slope serialization
    gf = substream(cfg.seed, "hull-faces", 0)
    demo_model = CompoundPoissonDrift(1.0, Gaussian(0.0, 1.0), mu=0.3)
    demo = merge_collinear(concave_majorant(sample_path(demo_model, 30.0, EXACT_JUMPS, gf)))
    rep.tables["representative_faces"] = (
        ("l", "h", "slope"),
        np.array(faces_to_rows(demo)),
    )
    return rep


def _eval_faces_lower(path):
    from .hull import convex_minorant

    return _eval_faces(convex_minorant(path), path.times)


_DISPATCH = {
    "sb-props": _exp_sb_props,
    "verify-identity": _exp_verify_identity,
    "verify-clt": _exp_verify_clt,
    "verify-stable": _exp_verify_stable,
    "verify-heavy": _exp_verify_heavy,
    "tail-index": _exp_tail_index,
    "compare-length": _exp_compare_length,
    "theta-scan": _exp_theta_scan,
    "hull-props": _exp_hull_props,
}


def _phi(x):
    return ndtr(np.asarray(x, dtype=float))


def _config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(
        {k: repr(v) for k, v in asdict(cfg).items()}, sort_keys=True
    ).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def run(cfg: ExperimentConfig) -> RunReport:
    """Execute one experiment; deterministic given (config, seed)."""
    fn = _DISPATCH.get(cfg.experiment)
    if fn is None:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    report = fn(cfg)
    report.provenance = {
        "seed": cfg.seed,
        "config_hash": _config_hash(cfg),
        "experiment": cfg.experiment,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
    }
    return report


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def report_csv_body(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.rows:
        w.writerow(
            [
                _fmt(r.T),
                r.statistic,
                _fmt(r.estimate),
                _fmt(r.se_or_d),
                _fmt(r.p_value),
                r.threshold,
                "pass" if r.passed else "FAIL",
            ]
        )
    return buf.getvalue()


def write_report(report: RunReport, outdir) -> Path:
    """Write report.csv, report.json and the sample vectors; returns the
    JSON path."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report_csv_body(report))
    sample_paths = {}
    if report.samples or report.tables:
        sdir = out / "samples"
        sdir.mkdir(exist_ok=True)
        for name, vec in sorted(report.samples.items()):
            rel = f"samples/{name}.csv"
            with open(out / rel, "w") as fh:
                fh.write("value\n")
                fh.writelines(repr(float(v)) + "\n" for v in np.asarray(vec))
            sample_paths[name] = rel
    table_paths = {}
    for name, (header, mat) in sorted(report.tables.items()):
        rel = f"samples/{name}.csv"
        with open(out / rel, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in np.asarray(mat):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        table_paths[name] = rel
    payload = {
        "schema": REPORT_SCHEMA,
        "experiment": report.experiment,
        "passed": report.passed,
        "rows": [
            {
                "T": None if math.isnan(r.T) else float(r.T),
                "statistic": r.statistic,
                "estimate": float(r.estimate),
                "se_or_d": None if math.isnan(r.se_or_d) else float(r.se_or_d),
                "p_value": None if math.isnan(r.p_value) else float(r.p_value),
                "threshold": r.threshold,
                "passed": bool(r.passed),
            }
            for r in report.rows
        ],
        "samples": sample_paths,
        "tables": table_paths,
        "provenance": report.provenance,
    }
    path = out / "report.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return path


def load_report(json_path) -> RunReport:
    """Reload a written report together with its sample vectors."""
    path = Path(json_path)
    payload = json.loads(path.read_text())
    if payload.get("schema") != REPORT_SCHEMA:
        raise PathError(f"unrecognized report schema in {json_path}")
    rows = [
        Row(
            r["T"] if r["T"] is not None else math.nan,
            r["statistic"],
            r["estimate"],
            r["se_or_d"] if r["se_or_d"] is not None else math.nan,
            r["p_value"] if r["p_value"] is not None else math.nan,
            r["threshold"],
            r["passed"],
        )
        for r in payload["rows"]
    ]
    samples = {}
    for name, rel in payload.get("samples", {}).items():
        with open(path.parent / rel) as fh:
            next(fh)
            samples[name] = np.array([float(line) for line in fh])
    tables = {}
    for name, rel in payload.get("tables", {}).items():
        with open(path.parent / rel) as fh:
            header = tuple(next(fh).rstrip("\n").split(","))
            mat = np.array([[float(v) for v in line.split(",")] for line in fh])
        tables[name] = (header, mat)
    return RunReport(
        payload["experiment"],
        rows=rows,
        samples=samples,
        tables=tables,
        provenance=payload.get("provenance", {}),
    )


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

PLOT_KINDS = ("ecdf-pair", "qq", "tail-loglog", "scaling-table")


def emit_plot_data(report: RunReport, kind: str, outdir) -> list:
    """Write plain CSV plot data for external plotting; returns the paths."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "ecdf-pair":
        return _emit_pairs(report, out, _write_ecdf_pair, "ecdf")
    if kind == "qq":
        return _emit_pairs(report, out, _write_qq, "qq")
    if kind == "tail-loglog":
        name = next((n for n in report.samples if n in ("q_draws", "tail_draws")), None)
        if name is None:
            raise PathError("report holds no tail sample (expected 'q_draws')")
        x = np.sort(report.samples[name])
        fit = tail_slope(x)
        n = x.size
        sel = slice(int(n * fit.q_lo), int(n * fit.q_hi))
        lx = np.log(x[sel])
        lsf = np.log(1.0 - (np.arange(n)[sel] + 1) / (n + 1.0))
        path = out / "tail_loglog.csv"
        with open(path, "w") as fh:
            fh.write("log_x,log_sf,fit\n")
            for a, b in zip(lx, lsf):
                fh.write(
                    f"{float(a)!r},{float(b)!r},{float(fit.intercept + fit.slope * a)!r}\n"
                )
        return [path]
    if kind == "scaling-table":
        rows = [r for r in report.rows if r.statistic.startswith("sd_")]
        if not rows:
            raise PathError("report holds no sd_* rows (run compare-length first)")
        by_t = {}
        for r in rows:
            by_t.setdefault(r.T, {})[r.statistic] = r.estimate
        path = out / "scaling_table.csv"
        with open(path, "w") as fh:
            fh.write("T,sd_hut,sd_majorant,sd_tent,"
                     "hut_over_1,majorant_over_sqrtlog,tent_over_sqrtT\n")
            for T in sorted(by_t):
                d = by_t[T]
                fh.write(
                    f"{T!r},{d['sd_hut']!r},{d['sd_majorant']!r},{d['sd_tent']!r},"
                    f"{d['sd_hut']!r},{d['sd_majorant'] / math.sqrt(math.log(T))!r},"
                    f"{d['sd_tent'] / math.sqrt(T)!r}\n"
                )
        return [path]
    raise ConfigError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")


def _paired_samples(report):
    pairs = []
    for name in sorted(report.samples):
        for a_pre, b_pre in (("hull_", "rep_"), ("finite_", "limit_")):
            if name.startswith(a_pre):
                other = b_pre + name[len(a_pre):]
                if other in report.samples:
                    pairs.append((name[len(a_pre):], name, other))
    if not pairs:
        raise PathError("report holds no paired samples for a two-curve plot")
    return pairs


def _emit_pairs(report, out, writer, stem):
    paths = []
    for suffix, a, b in _paired_samples(report):
        path = out / f"{stem}_{suffix}.csv"
        writer(report.samples[a], report.samples[b], a, b, path)
        paths.append(path)
    return paths


def _write_ecdf_pair(xa, xb, name_a, name_b, path):
    with open(path, "w") as fh:
        fh.write("sample,x,ecdf\n")
        for label, vec in ((name_a, xa), (name_b, xb)):
            xs = np.sort(vec)
            for i, x in enumerate(xs, 1):
                fh.write(f"{label},{float(x)!r},{i / xs.size!r}\n")


def _write_qq(xa, xb, name_a, name_b, path):
    qs = np.linspace(0.005, 0.995, 199)
    qa = np.quantile(xa, qs)
    qb = np.quantile(xb, qs)
    with open(path, "w") as fh:
        fh.write("q,x_a,x_b\n")
        for q, a, b in zip(qs, qa, qb):
            fh.write(f"{float(q)!r},{float(a)!r},{float(b)!r}\n")
