"""Voronoi partitions under the max-form anisotropic metric.

Covers the star-shape property of Voronoi cells, anisotropic spherical
coordinates, a quadrature estimator for min-distance integrals of the
form int_S [min_k rho(t, t^k)]^{-beta} dt, and the nearest-to-reference
covering count whose maximum is bounded by a dimensional constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import HurstVector, rho, rho_tilde, unit_rho_ball_measure

__all__ = [
    "VoronoiPartition",
    "CoveringStats",
    "nearest_generator",
    "star_shape_check",
    "psi_transform",
    "min_dist_integral",
    "covering_count",
]


def nearest_generator(t, generators, hurst: HurstVector) -> int:
    """Index of the rho_tilde-nearest generator, lowest index on ties."""
    gens = np.atleast_2d(np.asarray(generators, dtype=float))
    if gens.shape[0] == 0:
        raise ValueError("generator list is empty")
    d = rho_tilde(np.atleast_1d(np.asarray(t, dtype=float)), gens, hurst)
    return int(np.argmin(d))


@dataclass(frozen=True)
class VoronoiPartition:
    """Rasterized Voronoi partition of a box domain under rho_tilde.

    The domain is discretized on a regular grid; each grid point is
    assigned to the nearest generator (ties to the lowest index).
    """

    generators: np.ndarray  # (m, N)
    hurst: HurstVector
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    grid: np.ndarray        # (M, N) grid points
    assignment: np.ndarray  # (M,) generator indices

    @classmethod
    def build(cls, generators, hurst: HurstVector, domain_lo, domain_hi,
              points_per_axis: int = 32) -> "VoronoiPartition":
        gens = np.atleast_2d(np.asarray(generators, dtype=float))
        if gens.shape[0] == 0:
            raise ValueError("generator list is empty")
        lo = np.atleast_1d(np.asarray(domain_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(domain_hi, dtype=float))
        axes = [np.linspace(lo[j], hi[j], points_per_axis) for j in range(hurst.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=-1)
        d = rho_tilde(grid[:, None, :], gens[None, :, :], hurst)
        assignment = np.argmin(d, axis=1)
        return cls(gens, hurst, lo, hi, grid, assignment)

    def verify(self) -> bool:
        """Re-evaluate distances and confirm each assignment is minimal."""
        d = rho_tilde(self.grid[:, None, :], self.generators[None, :, :], self.hurst)
        assigned = d[np.arange(len(self.grid)), self.assignment]
        return bool(np.all(assigned <= np.min(d, axis=1)))


def star_shape_check(generators, hurst: HurstVector, l: int, t, eps: float) -> bool:
    """Check the anisotropic star-shape property of Voronoi cells.

    Given t in the cell of generator l, form the contracted point
    s = t^l + (eps^{1/H_1} (t_1 - t^l_1), ..., eps^{1/H_N} (t_N - t^l_N))
    and return whether s is still in the cell, i.e. whether
    rho_tilde(s, t^l) <= rho_tilde(s, t^k) for every k.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    gens = np.atleast_2d(np.asarray(generators, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if nearest_generator(t, gens, hurst) != l:
        raise ValueError("t is not assigned to cell l under the tie-break rule")
    s = gens[l] + eps ** (1.0 / hurst.h) * (t - gens[l])
    d = rho_tilde(s, gens, hurst)
    return bool(d[l] <= np.min(d))


def psi_transform(theta, h: float, hurst: HurstVector) -> np.ndarray:
    """Offset h^E Psi(theta) of the anisotropic spherical coordinates.

    Psi_j(theta) is the j-th spherical direction cosine raised through
    [x]^p = x |x|^{p-1} with p = 2/H_j, so sum_j |Psi_j|^{H_j} = 1 and
    the returned offset sits at rho-distance exactly h from the origin.

    For N = 1 pass theta as a sign (+1/-1); the offset is the signed
    scalar h^{1/H_1}.
    """
    if h < 0.0:
        raise ValueError("radius h must be nonnegative")
    n = hurst.n
    if n == 1:
        sign = float(np.sign(theta)) or 1.0
        return np.array([sign * h ** (1.0 / hurst.h[0])])

    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size != n - 1:
        raise ValueError(f"need {n - 1} angles for N = {n}")
    # direction cosines of standard spherical coordinates
    cosines = np.empty(n)
    prefix = 1.0
    for j in range(n - 1):
        cosines[j] = prefix * np.cos(theta[j])
        prefix *= np.sin(theta[j])
    cosines[n - 1] = prefix
    psi = np.sign(cosines) * np.abs(cosines) ** (2.0 / hurst.h)
    return h ** (1.0 / hurst.h) * psi


def _region_mask(points: np.ndarray, region, hurst: HurstVector) -> np.ndarray:
    if region[0] == "interval":
        _, lo, hi = region
        return np.all((points >= lo) & (points <= hi), axis=-1)
    if region[0] == "rho_ball":
        _, center, radius = region
        return rho(points, np.asarray(center, dtype=float), hurst) <= radius
    raise ValueError(f"unknown region spec {region[0]!r}")


def _region_box(region, hurst: HurstVector):
    if region[0] == "interval":
        _, lo, hi = region
        return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    _, center, radius = region
    center = np.asarray(center, dtype=float)
    half = radius ** (1.0 / hurst.h)  # bounding rho_tilde interval
    return center - half, center + half


def min_dist_integral(region, points, beta: float, hurst: HurstVector,
                      resolution: int = 64, max_refine: int = 4,
                      rtol: float = 0.005) -> float:
    """Quadrature estimate of int_S [min_k rho(t, t^k)]^{-beta} dt.

    The point set always contains the implicit reference t^0 = 0;
    ``points`` supplies the remaining m - 1 points.  ``region`` is
    ("interval", lo, hi) or ("rho_ball", center, radius).

    The cell containing each point is singular; it contributes through
    the analytic radial integral of the full rho-sphere whose measure
    matches the cell volume.  The grid is refined (doubling the
    per-axis resolution) until the estimate moves by less than rtol.
    """
    q = hurst.q()
    if beta >= q:
        raise ValueError(f"beta = {beta} >= Q = {q}: integral diverges")
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")

    pts = np.atleast_2d(np.asarray(points, dtype=float)) if len(points) else np.empty((0, hurst.n))
    gens = np.vstack([np.zeros((1, hurst.n)), pts])
    box_lo, box_hi = _region_box(region, hurst)
    c_ball = unit_rho_ball_measure(hurst)

    prev = None
    n_axis = resolution
    for _ in range(max_refine + 1):
        axes = [np.linspace(box_lo[j], box_hi[j], n_axis, endpoint=False) for j in range(hurst.n)]
        widths = (box_hi - box_lo) / n_axis
        mids = [a + w / 2.0 for a, w in zip(axes, widths)]
        mesh = np.meshgrid(*mids, indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=-1)
        mask = _region_mask(grid, region, hurst)
        cell_vol = float(np.prod(widths))

        dmin = np.full(len(grid), np.inf)
        owner = np.full(len(grid), -1, dtype=int)
        for k, g in enumerate(gens):
            dk = rho(grid, g, hurst)
            closer = dk < dmin
            dmin = np.where(closer, dk, dmin)
            owner[closer] = k

        # cells containing a generator are handled analytically
        singular = np.zeros(len(grid), dtype=bool)
        correction = 0.0
        for g in gens:
            idx = np.floor((g - box_lo) / widths).astype(int)
            if np.any(idx < 0) or np.any(idx >= n_axis):
                continue
            flat = int(np.ravel_multi_index(tuple(idx), (n_axis,) * hurst.n))
            if singular[flat] or not mask[flat]:
                continue
            singular[flat] = True
            h_cell = (cell_vol / c_ball) ** (1.0 / q)
            correction += c_ball * q / (q - beta) * h_cell ** (q - beta)

        use = mask & ~singular
        if beta == 0.0:
            estimate = cell_vol * int(np.count_nonzero(mask))
        else:
            estimate = cell_vol * float(np.sum(dmin[use] ** (-beta))) + correction

        if prev is not None and abs(estimate - prev) <= rtol * abs(estimate):
            return estimate
        prev = estimate
        n_axis *= 2
    return prev


def covering_count(s0, points, hurst: HurstVector) -> int:
    """Count the points whose nearest neighbor (under rho_tilde, among
    the reference s^0 and all other points) is the reference s^0.

    Ties count as attaining the minimum.  All points must be distinct.
    """
    s0 = np.atleast_1d(np.asarray(s0, dtype=float))
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0
    pts = np.atleast_2d(pts)
    n = pts.shape[0]
    all_pts = np.vstack([s0[None, :], pts])  # index 0 is the reference
    d = rho_tilde(all_pts[:, None, :], all_pts[None, :, :], hurst)
    if np.any(d[np.triu_indices(n + 1, k=1)] == 0.0):
        raise ValueError("points must be pairwise distinct")
    np.fill_diagonal(d, np.inf)
    d_to_ref = d[1:, 0]
    d_min = np.min(d[1:, :], axis=1)
    return int(np.count_nonzero(d_to_ref <= d_min))


@dataclass
class CoveringStats:
    """Per-trial covering counts and their maximum."""

    n_dim: int
    hurst: HurstVector
    trials: int
    counts: np.ndarray
    max_count: int

    @classmethod
    def from_counts(cls, hurst: HurstVector, counts) -> "CoveringStats":
        counts = np.asarray(counts, dtype=int)
        return cls(hurst.n, hurst, len(counts), counts, int(counts.max(initial=0)))

    def merge(self, other: "CoveringStats") -> "CoveringStats":
        counts = np.concatenate([self.counts, other.counts])
        return CoveringStats(self.n_dim, self.hurst, len(counts), counts,
                             max(self.max_count, other.max_count))
