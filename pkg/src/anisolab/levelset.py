"""Level-set extraction and fractal-dimension diagnostics.

A sampled field X on a box domain is scanned over anisotropic dyadic
cells (side 2^{-q/H_j} on axis j, clipped at the boundary).  A cell is
flagged as meeting the level set X^{-1}(x) when the sampled values
bracket the level (1-D sections) or approach it within the empirical
per-cell oscillation.  Counts N_q across orders give the box-counting
dimension under the anisotropic metric, whose target is Q - d; the
companion Euclidean-metric dimension formula is evaluated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .localtime import fit_loglog_slope, gauge_phi
from .metrics import HurstVector

__all__ = [
    "LevelSetEstimate",
    "extract_level_set",
    "box_dimension",
    "euclidean_dimension_formula",
    "gauge_mass_diagnostic",
    "merge_counts",
]


@dataclass
class LevelSetEstimate:
    """Flagged dyadic cells per order for one level of one sample."""

    level: np.ndarray
    cell_hurst: HurstVector
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    counts: dict = field(default_factory=dict)        # q -> N_q
    total_cells: dict = field(default_factory=dict)   # q -> cells at order q
    flagged: dict = field(default_factory=dict)       # q -> flat cell ids
    eps: dict = field(default_factory=dict)           # q -> tolerance used

    def orders(self) -> list[int]:
        return sorted(self.counts)

    def is_empty(self) -> bool:
        return all(c == 0 for c in self.counts.values())


def _cell_layout(grid: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                 order: int, hurst: HurstVector):
    """Cell index per grid point at the given order, with a resolution check."""
    sides = 2.0 ** (-order / hurst.h)
    ncells = np.maximum(np.ceil((hi - lo) / sides).astype(int), 1)
    for j in range(hurst.n):
        n_unique = np.unique(grid[:, j]).size
        if n_unique < 2 * ncells[j]:
            raise ValueError(
                f"grid too coarse for order {order}: axis {j} has {n_unique} "
                f"distinct coordinates, needs >= {2 * ncells[j]}")
    idx = np.clip(((grid - lo) / sides).astype(int), 0, ncells - 1)
    flat = np.ravel_multi_index(tuple(idx.T), tuple(ncells))
    return flat, int(np.prod(ncells))


def _per_cell_reduce(flat: np.ndarray, values: np.ndarray):
    """Sorted segment boundaries plus per-cell componentwise min/max."""
    order = np.argsort(flat, kind="stable")
    sf = flat[order]
    sv = values[order]
    starts = np.flatnonzero(np.concatenate([[True], sf[1:] != sf[:-1]]))
    ids = sf[starts]
    vmin = np.minimum.reduceat(sv, starts, axis=0)
    vmax = np.maximum.reduceat(sv, starts, axis=0)
    return order, starts, ids, vmin, vmax


def extract_level_set(grid, values, x, orders, cell_hurst: HurstVector,
                      domain_lo=None, domain_hi=None) -> LevelSetEstimate:
    """Flag anisotropic dyadic cells meeting the level set X^{-1}(x).

    ``grid`` is (M, N) index points, ``values`` is (M, d) field values.
    For d = 1 a cell is flagged when its values bracket x or come
    within the cell's own oscillation of x; for d >= 2 when the minimal
    Euclidean distance |X - x| in the cell is at most the median
    per-cell oscillation at that order.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    if values.shape != (grid.shape[0], d):
        raise ValueError("values must be (M, d) matching grid and level")
    lo = (grid.min(axis=0) if domain_lo is None
          else np.atleast_1d(np.asarray(domain_lo, dtype=float)))
    hi = (grid.max(axis=0) if domain_hi is None
          else np.atleast_1d(np.asarray(domain_hi, dtype=float)))
    if np.isscalar(orders):
        orders = [orders]
    est = LevelSetEstimate(x, cell_hurst, lo, hi)
    norms = np.linalg.norm(values - x, axis=1) if d > 1 else None
    for q in sorted(int(q) for q in orders):
        flat, n_total = _cell_layout(grid, lo, hi, q, cell_hurst)
        order_ix, starts, ids, vmin, vmax = _per_cell_reduce(flat, values)
        osc = np.linalg.norm(vmax - vmin, axis=1)
        if d == 1:
            lo1, hi1 = vmin[:, 0], vmax[:, 0]
            bracket = (lo1 <= x[0]) & (x[0] <= hi1)
            # one-sided cells: min |X - x| is the gap to the nearer bound
            gap = np.where(lo1 > x[0], lo1 - x[0], x[0] - hi1)
            flagged = bracket | (gap <= osc)
            eps_q = float(np.median(osc))
        else:
            cell_min = np.minimum.reduceat(norms[order_ix], starts)
            eps_q = float(np.median(osc))
            flagged = cell_min <= eps_q
        est.counts[q] = int(np.count_nonzero(flagged))
        est.total_cells[q] = n_total
        est.flagged[q] = ids[flagged]
        est.eps[q] = eps_q
    return est


def merge_counts(estimates) -> dict:
    """Sum per-order counts across replicates (associative)."""
    total: dict = {}
    for est in estimates:
        for q, c in est.counts.items():
            total[q] = total.get(q, 0) + c
    return total


def box_dimension(counts: dict, orders=None, n_replicates: int = 1,
                  min_count: int = 10) -> tuple[float, float]:
    """OLS box-counting dimension from per-order counts.

    ``counts`` maps order q to the summed count over replicates; the
    fit is on log2 of the mean count per replicate against q.  Orders
    whose mean count falls below ``min_count`` are dropped (Poisson
    noise floor).  Returns (dimension, std error).
    """
    if orders is None:
        orders = sorted(counts)
    qs, logs = [], []
    for q in sorted(orders):
        mean = counts.get(q, 0) / n_replicates
        if mean >= min_count:
            qs.append(q)
            logs.append(mean)
    if len(qs) < 4:
        raise ValueError(
            f"need >= 4 usable orders for the fit, got {len(qs)} "
            f"(counts below the floor of {min_count} are dropped)")
    slope, _, stderr = fit_loglog_slope(2.0 ** np.asarray(qs, dtype=float),
                                        np.asarray(logs, dtype=float))
    return slope, stderr


def euclidean_dimension_formula(hurst: HurstVector, d: int):
    """Hausdorff dimension of X^{-1}(x) in the Euclidean metric.

    With H sorted ascending and tau the unique index such that
    sum_{j<tau} 1/H_j <= d < sum_{j<=tau} 1/H_j, the dimension is

        sum_{j<=tau} H_tau / H_j + N - tau - H_tau d,

    which equals the minimum over k of the same expression.  Returns
    None when d >= Q (the level set is empty almost surely).
    """
    if d < 1:
        raise ValueError("component count d must be >= 1")
    h = np.sort(hurst.h)
    n = h.size
    inv_cum = np.cumsum(1.0 / h)
    if d >= inv_cum[-1]:
        return None
    tau = int(np.searchsorted(inv_cum, d, side="right"))  # 0-based
    h_tau = h[tau]
    return float(np.sum(h_tau / h[: tau + 1]) + n - (tau + 1) - h_tau * d)


def gauge_mass_diagnostic(counts: dict, q_exp: float, d: int,
                          n_replicates: int = 1, c: float = 1.0,
                          gauge: str = "loglog") -> dict:
    """Per-order masses N_q * phi(c * 2^{-q}).

    ``gauge`` selects phi: "loglog" is r^{Q-d} (log log 1/r)^{d/Q}
    (NaN where the iterated log is not positive), "power" is the pure
    power r^{Q-d}.  Stability of the masses across orders indicates the
    gauge captures the level-set Hausdorff measure scale.
    """
    out = {}
    for q in sorted(counts):
        r = c * 2.0 ** (-q)
        if gauge == "power":
            phi = r ** (q_exp - d)
        elif gauge == "loglog":
            phi = float(gauge_phi(r, q_exp, d))
        else:
            raise ValueError(f"unknown gauge {gauge!r}")
        out[q] = counts[q] / n_replicates * phi
    return out
