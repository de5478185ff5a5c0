"""Covering numbers, covering-dimension fits, refined partition trees,
and the dyadic multiscale upper bound on W_p^p."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import _kernels
from .metric_core import FiniteMetricSpace, diameter
from .measures import DiscreteMeasure


class MultiscaleError(ValueError):
    pass


class DegenerateFitError(MultiscaleError):
    """All covering counts equal 1: no dimension can be fitted."""


@dataclass(frozen=True)
class CoveringEstimate:
    delta: float
    n_upper: int          # greedy cover size (feasible cover)
    n_lower: int          # maximal 2*delta-separated set size
    centers: np.ndarray   # space indices of the greedy centers

    def to_dict(self) -> dict:
        return {"delta": self.delta, "n_upper": self.n_upper,
                "n_lower": self.n_lower,
                "centers": [int(c) for c in self.centers]}


def _cover_counts(space: FiniteMetricSpace, subset: np.ndarray, delta: float):
    if space.kind == "euclidean":
        pts = space.points[subset]
        cov = _kernels.greedy_cover_pts(pts, float(delta))
        pack = _kernels.greedy_packing_pts(pts, 2.0 * float(delta))
    else:
        D = space.submatrix(subset)
        cov = _kernels.greedy_cover_mat(D, float(delta))
        pack = _kernels.greedy_packing_mat(D, 2.0 * float(delta))
    return cov, pack


def greedy_cover(space: FiniteMetricSpace, subset: Sequence[int],
                 delta: float) -> CoveringEstimate:
    """Greedy cover by closed delta-balls (next center = first uncovered
    point of lowest index) plus a 2*delta-packing lower bound."""
    subset = np.asarray(subset, dtype=np.int64)
    if subset.size == 0:
        raise MultiscaleError("subset is empty")
    if delta <= 0:
        raise MultiscaleError("delta must be positive")
    cov, pack = _cover_counts(space, subset, delta)
    return CoveringEstimate(float(delta), int(cov.size), int(pack.size),
                            subset[cov])


@dataclass(frozen=True)
class DimensionFit:
    alpha: float
    beta: float
    scales: np.ndarray
    counts: np.ndarray
    r2: float
    diam: float

    def envelope(self, delta) -> np.ndarray:
        return self.beta * (self.diam / np.asarray(delta)) ** self.alpha

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta,
                "scales": list(map(float, self.scales)),
                "counts": list(map(int, self.counts)),
                "r2": self.r2, "diam": self.diam}


def fit_dimension(space: FiniteMetricSpace, subset: Sequence[int],
                  deltas: Sequence[float],
                  diam_upper: Optional[float] = None) -> DimensionFit:
    """One-sided power-law envelope for covering counts.

    Least squares on log counts vs log(diam/delta), then the prefactor is
    inflated minimally so the law dominates every observed count.
    """
    subset = np.asarray(subset, dtype=np.int64)
    deltas = np.sort(np.asarray(deltas, dtype=float))[::-1]
    if deltas.size < 4:
        raise MultiscaleError("need at least 4 scales")
    if deltas.max() / deltas.min() < 10.0 - 1e-9:
        raise MultiscaleError("scales must span at least one decade")
    Delta = diameter(space, subset) if diam_upper is None else float(diam_upper)
    if Delta <= 0:
        raise DegenerateFitError("point set has zero diameter")
    counts = np.array([greedy_cover(space, subset, d).n_upper for d in deltas])
    if np.all(counts == 1):
        raise DegenerateFitError("all covering counts equal 1")
    x = np.log(Delta / deltas)
    y = np.log(counts.astype(float))
    alpha, logbeta = np.polyfit(x, y, 1)
    yhat = alpha * x + logbeta
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    # one-sided adjustment: shift the intercept up to dominate all counts
    logbeta += max(0.0, float(np.max(y - yhat)))
    return DimensionFit(float(alpha), float(np.exp(logbeta)), deltas, counts,
                        r2, Delta)


def auto_delta_grid(space: FiniteMetricSpace, subset: Sequence[int],
                    n_scales: int = 6) -> np.ndarray:
    """Dyadic scales diam/8, diam/16, ... for dimension fitting."""
    subset = np.asarray(subset, dtype=np.int64)
    Delta = diameter(space, subset)
    if Delta <= 0:
        raise DegenerateFitError("point set has zero diameter")
    n_scales = max(4, n_scales)
    return Delta / 8.0 * 0.5 ** np.arange(n_scales)


# ---------------------------------------------------------------------------
# Refined partition sequence
# ---------------------------------------------------------------------------

@dataclass
class Cell:
    center: int              # space index of the cell center
    parent: int               # cell id in the previous level (-1 at level 1)
    points: np.ndarray        # space indices of member points


@dataclass
class PartitionTree:
    space: FiniteMetricSpace
    subset: np.ndarray
    diam: float
    k_star: int
    levels: List[List[Cell]] = field(default_factory=list)

    @property
    def cell_counts(self) -> List[int]:
        return [len(lv) for lv in self.levels]

    def level_radius(self, k: int) -> float:
        return 4.0 ** (-k) * self.diam

    def verify(self) -> None:
        """Re-check partition, refinement, diameter, and cardinality."""
        subset_sorted = np.sort(self.subset)
        for k, level in enumerate(self.levels, start=1):
            got = np.sort(np.concatenate([c.points for c in level]))
            if got.size != subset_sorted.size or np.any(got != subset_sorted):
                raise MultiscaleError(f"level {k} does not partition the set")
            for c in level:
                if diameter(self.space, c.points) > self.level_radius(k) + 1e-12:
                    raise MultiscaleError(f"cell diameter violated at level {k}")
                if k > 1:
                    parent_pts = self.levels[k - 2][c.parent].points
                    if not np.all(np.isin(c.points, parent_pts)):
                        raise MultiscaleError(f"refinement violated at level {k}")
            if self.diam == 0.0:
                cap = 1
            else:
                cap = greedy_cover(self.space, self.subset,
                                   4.0 ** (-k - 1) * self.diam).n_upper
            if len(level) > cap:
                raise MultiscaleError(
                    f"level {k} has {len(level)} cells, cover cap is {cap}")

    def cell_of_point(self, k: int) -> dict:
        """Map space index -> cell id at level k (1-based)."""
        out = {}
        for cid, c in enumerate(self.levels[k - 1]):
            for pt in c.points:
                out[int(pt)] = cid
        return out

    def to_dict(self) -> dict:
        return {
            "diam": self.diam,
            "k_star": self.k_star,
            "cell_counts": self.cell_counts,
            "levels": [
                [{"center": int(c.center), "parent": int(c.parent),
                  "points": [int(q) for q in c.points]} for c in lv]
                for lv in self.levels
            ],
        }


def _assign(space: FiniteMetricSpace, pts_idx: np.ndarray,
            centers_idx: np.ndarray) -> np.ndarray:
    if space.kind == "euclidean":
        return _kernels.assign_nearest_pts(space.points[pts_idx],
                                           space.points[centers_idx])
    D = space.distance_block(pts_idx, centers_idx)
    return _kernels.assign_nearest_mat(D)


def build_partition_tree(space: FiniteMetricSpace, subset: Sequence[int],
                         k_star: int) -> PartitionTree:
    """Top-down refined partitions with four-fold shrinking diameters.

    Level-k centers come from a greedy cover at radius 4^{-k}*diam/2
    inside each parent cell; points go to their nearest center within the
    parent (ties to the lowest center index).
    """
    subset = np.asarray(subset, dtype=np.int64)
    if subset.size == 0:
        raise MultiscaleError("subset is empty")
    if k_star < 1:
        raise MultiscaleError("k_star must be >= 1")
    Delta = diameter(space, subset)
    tree = PartitionTree(space, subset, Delta, int(k_star))
    parents = [Cell(int(subset[0]), -1, subset)]
    for k in range(1, k_star + 1):
        radius = 4.0 ** (-k) * Delta / 2.0
        level: List[Cell] = []
        for pid, par in enumerate(parents):
            pts = par.points
            if pts.size == 1:
                level.append(Cell(int(pts[0]), pid, pts))
                continue
            if Delta == 0.0:
                level.append(Cell(par.center, pid, pts))
                continue
            if space.kind == "euclidean":
                local = _kernels.greedy_cover_pts(space.points[pts], radius)
            else:
                local = _kernels.greedy_cover_mat(space.submatrix(pts), radius)
            centers = pts[local]
            lab = _assign(space, pts, centers)
            for ci in range(centers.size):
                member = pts[lab == ci]
                if member.size:
                    level.append(Cell(int(centers[ci]), pid, member))
        tree.levels.append(level)
        parents = level
    tree.verify()
    return tree


def auto_k_star(n: int, alpha: float) -> int:
    """Depth choice balancing the resolution term against sampling error."""
    return max(1, int(np.ceil(np.log(max(n, 2)) / (max(alpha, 1e-9) * np.log(4.0)))))


def dyadic_wpp_bound(tree: PartitionTree, mu: DiscreteMeasure,
                     nu: DiscreteMeasure, p: float) -> float:
    """Multiscale upper bound on W_p^p from per-cell mass discrepancies:

        diam^p * [4^{-k* p} + 4^p * sum_k 4^{-k p} sum_i |mu(Q_i^k)-nu(Q_i^k)|]
    """
    subset = set(int(i) for i in tree.subset)
    for m in (mu, nu):
        if not all(int(i) in subset for i in m.idx):
            raise MultiscaleError("measure support lies outside the tree")
    disc_sum = 0.0
    for k in range(1, tree.k_star + 1):
        cmap = tree.cell_of_point(k)
        ncells = len(tree.levels[k - 1])
        ma = np.zeros(ncells)
        mb = np.zeros(ncells)
        for i, w in zip(mu.idx, mu.weights):
            ma[cmap[int(i)]] += w
        for i, w in zip(nu.idx, nu.weights):
            mb[cmap[int(i)]] += w
        disc_sum += 4.0 ** (-k * p) * float(np.sum(np.abs(ma - mb)))
    val = 4.0 ** (-tree.k_star * p) + 4.0 ** p * disc_sum
    return tree.diam ** p * val
