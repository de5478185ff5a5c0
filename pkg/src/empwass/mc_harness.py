"""Seeded Monte Carlo experiments: convergence-rate fits, tail curves,
minimal-constant fitting against the bound catalog, single-trajectory
almost-sure checks, and verification of the partial-sum inequalities."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .bound_catalog import as_rate_normalizer, classify_regime
from .measures import DiscreteMeasure, SyntheticSampler
from .metric_core import FiniteMetricSpace
from .multiscale import auto_k_star, build_partition_tree, dyadic_wpp_bound
from .ot_exact import wpp_1d_arrays, wpp_1d_vs_quantile, wpp_mcf


class HarnessError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    sampler: SyntheticSampler
    p: float
    estimator: str                       # mcf-two-sample | 1d-quantile | dyadic
    n_grid: Tuple[int, ...]
    replicates: int
    seed: int
    x_grid: Tuple[float, ...] = ()
    m_ref: Optional[int] = None          # two-sample reference size (default n)
    k_star: int = 3                      # 0 = depth grows with n
    drop_small: int = 2                  # smallest n values excluded from fits
    workers: int = 1

    def __post_init__(self):
        ng = tuple(self.n_grid)
        if any(b <= a for a, b in zip(ng, ng[1:])):
            raise HarnessError("n_grid must be strictly increasing")
        if self.estimator not in ("mcf-two-sample", "1d-quantile", "dyadic"):
            raise HarnessError(f"unknown estimator {self.estimator!r}")

    def to_dict(self) -> dict:
        return {
            "sampler": self.sampler.metadata(), "p": self.p,
            "estimator": self.estimator, "n_grid": list(self.n_grid),
            "replicates": self.replicates, "seed": self.seed,
            "x_grid": list(self.x_grid), "m_ref": self.m_ref,
            "k_star": self.k_star, "drop_small": self.drop_small,
        }


def replicate_seed(master: int, n: int, rep: int) -> np.random.Generator:
    """Splittable per-replicate stream: independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence([master, n, rep]))


def _one_replicate(args) -> float:
    sampler, p, estimator, m_ref, k_star, master, n, rep = args
    rng = replicate_seed(master, n, rep)
    pts = sampler.draw(n, rng)
    if estimator == "1d-quantile":
        qfn = sampler.quantile
        if sampler.d != 1 or qfn(np.asarray([0.5])) is None:
            raise HarnessError("1d-quantile needs a 1D sampler with a "
                               "closed-form quantile")
        anti = (sampler.quantile_antideriv if p == 1.0
                and sampler.quantile_antideriv(np.asarray([0.5])) is not None
                else None)
        return wpp_1d_vs_quantile(pts[:, 0], qfn, p,
                                  quantile_antideriv=anti).value
    m = m_ref if m_ref is not None else n
    ref = sampler.draw(m, rng)
    if estimator == "mcf-two-sample":
        if sampler.d == 1:
            return wpp_1d_arrays(pts[:, 0], np.full(n, 1.0 / n),
                                 ref[:, 0], np.full(m, 1.0 / m), p)
        space = FiniteMetricSpace.from_points(np.vstack([pts, ref]))
        mu = DiscreteMeasure(space, np.arange(n), np.full(n, 1.0 / n))
        nu = DiscreteMeasure(space, np.arange(n, n + m), np.full(m, 1.0 / m))
        v, _ = wpp_mcf(mu, nu, p)
        return v.value
    # dyadic upper bound between sample and reference sample
    space = FiniteMetricSpace.from_points(np.vstack([pts, ref]))
    if not k_star:   # 0 or None: depth grows with n
        alpha = sampler.metadata().get("alpha") or 2.0 * p
        k_star = auto_k_star(n, alpha)
    tree = build_partition_tree(space, np.arange(n + m), k_star)
    mu = DiscreteMeasure(space, np.arange(n), np.full(n, 1.0 / n))
    nu = DiscreteMeasure(space, np.arange(n, n + m), np.full(m, 1.0 / m))
    return dyadic_wpp_bound(tree, mu, nu, p)


def _run_replicates(spec: ExperimentSpec) -> List[np.ndarray]:
    """Per-n arrays of W_p^p samples, reproducible for any worker count."""
    out = []
    for n in spec.n_grid:
        tasks = [(spec.sampler, spec.p, spec.estimator, spec.m_ref,
                  spec.k_star, spec.seed, n, rep)
                 for rep in range(spec.replicates)]
        if spec.workers > 1:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                vals = list(pool.map(_one_replicate, tasks, chunksize=8))
        else:
            vals = [_one_replicate(t) for t in tasks]
        out.append(np.asarray(vals))
    return out


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    per_n: List[dict]
    slope: Optional[float] = None
    slope_ci: Optional[Tuple[float, float]] = None
    slope_r2: Optional[float] = None
    corrected_slope: Optional[float] = None
    corrected_r2: Optional[float] = None
    degenerate: bool = False
    values: Optional[List[np.ndarray]] = None   # raw samples, not serialized

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "per_n": self.per_n,
            "slope": self.slope,
            "slope_ci": list(self.slope_ci) if self.slope_ci else None,
            "slope_r2": self.slope_r2,
            "corrected_slope": self.corrected_slope,
            "corrected_r2": self.corrected_r2,
            "degenerate": self.degenerate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_rows(self) -> List[dict]:
        return self.per_n


def _stats_row(n: int, vals: np.ndarray, x_grid: Sequence[float]) -> dict:
    row = {
        "n": int(n),
        "mean": float(vals.mean()),
        "sd": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
        "q50": float(np.quantile(vals, 0.5)),
        "q90": float(np.quantile(vals, 0.9)),
        "q99": float(np.quantile(vals, 0.99)),
        "replicates": int(vals.size),
    }
    for x in x_grid:
        k = int(np.sum(vals > x))
        lo, hi = wilson_interval(k, vals.size)
        row[f"tail_x{x:g}"] = k / vals.size
        row[f"tail_x{x:g}_lo"] = lo
        row[f"tail_x{x:g}_hi"] = hi
    return row


def _ols(x: np.ndarray, y: np.ndarray):
    slope, intercept = np.polyfit(x, y, 1)
    yhat = slope * x + intercept
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(x.size - 2, 1)
    se = math.sqrt(ss_res / dof / float(np.sum((x - x.mean()) ** 2)))
    return float(slope), se, r2


def run_rate_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Estimate E[W_p^p] on the n-grid and fit the log-log decay slope.

    The two smallest n are dropped from the fit (pre-asymptotic bias).
    When the sampler's covering dimension equals 2p, a second fit with
    the sqrt(log n) correction removed is reported alongside.
    """
    if spec.replicates < 30:
        raise HarnessError("rate fits need at least 30 replicates")
    values = _run_replicates(spec)
    per_n = [_stats_row(n, v, spec.x_grid)
             for n, v in zip(spec.n_grid, values)]
    report = ExperimentReport(spec, per_n, values=values)

    means = np.array([r["mean"] for r in per_n])
    ns = np.array(spec.n_grid, dtype=float)
    drop = min(spec.drop_small, max(len(spec.n_grid) - 2, 0))
    keep = slice(drop, None)
    if np.any(means[keep] <= 0.0):
        report.degenerate = True
        return report
    x = np.log(ns[keep])
    y = np.log(means[keep])
    slope, se, r2 = _ols(x, y)
    report.slope = slope
    report.slope_ci = (slope - 1.96 * se, slope + 1.96 * se)
    report.slope_r2 = r2

    md = spec.sampler.metadata()
    alpha = md.get("alpha")
    if alpha is not None and alpha > 0 \
            and classify_regime(alpha, spec.p) == "alpha_eq_2p":
        yc = y - 0.5 * np.log(np.log(ns[keep]))
        cslope, _, cr2 = _ols(x, yc)
        report.corrected_slope = cslope
        report.corrected_r2 = cr2
    return report


def run_tail_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Empirical P(W_p^p > x) with Wilson intervals on the (n, x) grid."""
    if spec.replicates < 1000:
        raise HarnessError("tail experiments need at least 1000 replicates")
    if not spec.x_grid:
        raise HarnessError("tail experiments need an x-grid")
    values = _run_replicates(spec)
    per_n = [_stats_row(n, v, spec.x_grid)
             for n, v in zip(spec.n_grid, values)]
    return ExperimentReport(spec, per_n, values=values)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    ph = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (ph + z2 / (2 * n)) / denom
    half = z * math.sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class ConstantFit:
    ok: bool
    C: float = math.nan
    binding_point: Optional[Tuple[int, float]] = None   # (n, x)
    falsified_at: Optional[Tuple[int, float]] = None
    gap: float = math.nan

    def to_dict(self) -> dict:
        return {"ok": self.ok, "C": self.C,
                "binding_point": list(self.binding_point) if self.binding_point else None,
                "falsified_at": list(self.falsified_at) if self.falsified_at else None,
                "gap": self.gap}


def fit_bound_constant(report: ExperimentReport,
                       bound_fn: Callable[[float, int, float], float],
                       c_max: float = 1e9) -> ConstantFit:
    """Smallest C with bound_fn(x, n, C) >= Wilson upper limit everywhere.

    bound_fn must be nondecreasing in C. Falsification (no finite C)
    names the violating grid point.
    """
    grid = []
    for row in report.per_n:
        n = row["n"]
        for x in report.spec.x_grid:
            grid.append((n, float(x), row[f"tail_x{x:g}_hi"]))
    if not grid:
        raise HarnessError("report has no tail grid")

    def valid(C):
        worst = None
        worst_gap = 0.0
        for n, x, hi in grid:
            gap = bound_fn(x, n, C) - hi
            if gap < 0 and (worst is None or gap < worst_gap):
                worst = (n, x)
                worst_gap = gap
        return worst, worst_gap

    bad, gap = valid(c_max)
    if bad is not None:
        return ConstantFit(False, falsified_at=bad, gap=gap)
    lo, hi = 1e-9, c_max
    bad_lo, _ = valid(lo)
    if bad_lo is None:
        return ConstantFit(True, C=lo)
    while (hi - lo) / hi > 1e-3:
        mid = math.sqrt(lo * hi)
        if valid(mid)[0] is None:
            hi = mid
        else:
            lo = mid
    tight, tgap = valid(lo)   # the point still violated just below C
    return ConstantFit(True, C=hi, binding_point=tight, gap=tgap)


# ---------------------------------------------------------------------------
# Almost-sure trajectory
# ---------------------------------------------------------------------------

def run_as_trajectory(sampler: SyntheticSampler, p: float, n_max: int,
                      seed: int) -> dict:
    """One trajectory of the normalized statistic a_k * W_p^p(L_k, ref)
    at dyadic checkpoints k; evidence (not proof) of a.s. boundedness."""
    md = sampler.metadata()
    alpha = md.get("alpha")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    pts = sampler.draw(n_max, rng)
    checkpoints = []
    k = 4
    while k <= n_max:
        checkpoints.append(k)
        k *= 2
    if checkpoints and checkpoints[-1] != n_max:
        checkpoints.append(n_max)
    rows = []
    for k in checkpoints:
        if sampler.family == "point-mass":
            w = 0.0
        elif sampler.d == 1 and sampler.quantile(np.asarray([0.5])) is not None:
            anti = (sampler.quantile_antideriv if p == 1.0 else None)
            if anti is not None and anti(np.asarray([0.5])) is None:
                anti = None
            w = wpp_1d_vs_quantile(pts[:k, 0], sampler.quantile, p,
                                   quantile_antideriv=anti).value
        else:
            raise HarnessError("trajectories need a 1D sampler with a "
                               "closed-form quantile (or point-mass)")
        norm = as_rate_normalizer(k, p, alpha) if alpha else float("nan")
        rows.append({"k": int(k), "wpp": w,
                     "normalized": norm * w if alpha else float("nan")})
    normed = [r["normalized"] for r in rows if not math.isnan(r["normalized"])]
    return {"sampler": md, "p": p, "seed": seed, "rows": rows,
            "max_normalized": max(normed) if normed else 0.0}


# ---------------------------------------------------------------------------
# Partial-sum inequality verification (appendix oracle)
# ---------------------------------------------------------------------------

def _xi_norm(dist: str, a: float, r: float) -> float:
    """||xi_1||_r for the centered test distributions."""
    if dist == "rademacher":
        return 1.0
    if dist == "uniform":   # uniform on [-1, 1]
        return (1.0 / (r + 1.0)) ** (1.0 / r)
    if dist == "pareto":
        if r >= a:
            return math.inf
        mean = a / (a - 1.0)

        def f(u):
            return abs(u ** (-1.0 / a) - mean) ** r

        val, _ = integrate.quad(f, 0.0, 1.0, limit=200)
        return val ** (1.0 / r)
    raise HarnessError(f"unknown distribution {dist!r}")


def _xi_draw(dist: str, a: float, shape, rng) -> np.ndarray:
    if dist == "rademacher":
        return 2.0 * rng.integers(0, 2, size=shape) - 1.0
    if dist == "uniform":
        return 2.0 * rng.random(shape) - 1.0
    if dist == "pareto":
        return rng.random(shape) ** (-1.0 / a) - a / (a - 1.0)
    raise HarnessError(f"unknown distribution {dist!r}")


def verify_appendix_inequalities(dist: str, r: float,
                                 n_grid: Sequence[int], R: int, seed: int,
                                 a: float = 4.0) -> dict:
    """Monte Carlo check of the three partial-sum moment inequalities.

    The mean-norm inequalities (square-function and order-(1,2] bounds)
    use their explicit constants; the maximal inequality's absolute
    constant is fitted and reported.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    xi_r = _xi_norm(dist, a, r)
    xi_2 = _xi_norm(dist, a, 2.0)
    rows = []
    for n in n_grid:
        xs = _xi_draw(dist, a, (R, n), rng)
        means = xs.mean(axis=1)
        amr = np.abs(means) ** r
        lhs_r = float(amr.mean()) ** (1.0 / r)
        # delta-method standard error of the r-norm estimate
        se_mean = float(amr.std(ddof=1)) / math.sqrt(R)
        se = se_mean / (r * max(float(amr.mean()), 1e-300) ** ((r - 1.0) / r))

        row = {"n": int(n), "r": r, "lhs": lhs_r, "lhs_se": se}
        if r >= 2.0 and math.isfinite(xi_r):
            rhs = math.sqrt((r - 1.0) / n) * xi_r
            row["burkholder_rhs"] = rhs
            row["burkholder_ratio"] = lhs_r / rhs
            row["burkholder_ok"] = lhs_r <= rhs + 3.0 * se
            # maximal inequality: sup of partial sums, fitted constant
            sup = np.max(np.abs(np.cumsum(xs, axis=1)), axis=1) / n
            lhs_sup = float(np.mean(sup ** r)) ** (1.0 / r)
            rhs_unit = (math.sqrt(r / n) * xi_2
                        + r / n ** ((r - 1.0) / r) * xi_r)
            row["maximal_lhs"] = lhs_sup
            row["maximal_fitted_L"] = lhs_sup / rhs_unit
        if 1.0 < r <= 2.0 and math.isfinite(xi_r):
            rhs = 2.0 ** ((2.0 - r) / r) / n ** ((r - 1.0) / r) * xi_r
            row["vbe_rhs"] = rhs
            row["vbe_ratio"] = lhs_r / rhs
            row["vbe_ok"] = lhs_r <= rhs + 3.0 * se
        rows.append(row)
    fitted = [row.get("maximal_fitted_L") for row in rows
              if "maximal_fitted_L" in row]
    return {"distribution": dist, "r": r, "R": R, "seed": seed, "rows": rows,
            "maximal_fitted_L": max(fitted) if fitted else None}
