"""Anisotropic metrics, balls and dyadic grids.

The index space R^N carries a vector of per-axis smoothness exponents
H = (H_1, ..., H_N), each in (0, 1).  Two equivalent metrics are used
throughout:

    rho(t, s)       = sum_j |t_j - s_j|^{H_j}
    rho_tilde(t, s) = max_j |t_j - s_j|^{H_j}

with rho_tilde <= rho <= N * rho_tilde.  The metric dimension of index
space under rho is Q = sum_j 1/H_j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma

__all__ = [
    "HurstVector",
    "AnisoBall",
    "rho",
    "rho_tilde",
    "q_exponent",
    "ball_contains",
    "dyadic_cells",
    "dyadic_cell_count",
    "unit_rho_ball_measure",
    "rho_tilde_ball_measure",
]


@dataclass(frozen=True)
class HurstVector:
    """Vector of per-axis Hurst exponents in (0, 1]."""

    h: np.ndarray

    def __init__(self, h) -> None:
        arr = np.atleast_1d(np.asarray(h, dtype=float)).copy()
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("H must be a nonempty 1-D vector")
        # (0, 1) in the theory; the endpoint 1 is admitted so that the
        # Euclidean-metric test cases (H_j = 1) can reuse the machinery
        if np.any(arr <= 0.0) or np.any(arr > 1.0):
            raise ValueError(f"every exponent must lie in (0, 1], got {arr}")
        arr.setflags(write=False)
        object.__setattr__(self, "h", arr)

    @property
    def n(self) -> int:
        """Dimension N of the index space."""
        return self.h.size

    def q(self) -> float:
        """Metric dimension Q = sum_j 1/H_j (always > N)."""
        return float(np.sum(1.0 / self.h))

    def __iter__(self):
        return iter(self.h)


def _check_dims(t: np.ndarray, s: np.ndarray, hurst: HurstVector) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if t.shape[-1:] != (hurst.n,) or s.shape[-1:] != (hurst.n,):
        # allow bare scalars for N = 1
        if hurst.n == 1 and t.ndim == 0 and s.ndim == 0:
            return t.reshape(1), s.reshape(1)
        raise ValueError(
            f"point dimension mismatch: expected last axis {hurst.n}, "
            f"got shapes {t.shape} and {s.shape}"
        )
    return t, s


def rho(t, s, hurst: HurstVector):
    """Anisotropic metric rho(t, s) = sum_j |t_j - s_j|^{H_j}.

    Broadcasts over leading axes; the last axis is the coordinate axis.
    """
    t, s = _check_dims(t, s, hurst)
    return np.sum(np.abs(t - s) ** hurst.h, axis=-1)


def rho_tilde(t, s, hurst: HurstVector):
    """Max-form metric rho_tilde(t, s) = max_j |t_j - s_j|^{H_j}."""
    t, s = _check_dims(t, s, hurst)
    return np.max(np.abs(t - s) ** hurst.h, axis=-1)


def q_exponent(hurst: HurstVector) -> float:
    """Q = sum_j 1/H_j."""
    return hurst.q()


@dataclass(frozen=True)
class AnisoBall:
    """Closed metric ball under rho or rho_tilde.

    Under rho_tilde the ball is exactly the interval with half-side
    r^{1/H_j} on axis j.
    """

    center: np.ndarray
    radius: float
    hurst: HurstVector
    metric_kind: str = "rho"  # "rho" or "rho_tilde"

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        if c.size != self.hurst.n:
            raise ValueError("center dimension does not match H")
        if self.radius < 0.0:
            raise ValueError("radius must be nonnegative")
        if self.metric_kind not in ("rho", "rho_tilde"):
            raise ValueError(f"unknown metric kind {self.metric_kind!r}")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)


def ball_contains(ball: AnisoBall, t) -> bool:
    """Membership predicate: metric(center, t) <= radius, no tolerance."""
    metric = rho if ball.metric_kind == "rho" else rho_tilde
    d = metric(np.atleast_1d(np.asarray(t, dtype=float)), ball.center, ball.hurst)
    return bool(d <= ball.radius)


def dyadic_cells(lo, hi, order: int, hurst: HurstVector):
    """Anisotropic dyadic cells of order q tiling the interval [lo, hi].

    Each cell has side 2^{-q/H_j} on axis j; the last cell per axis is
    clipped to the interval boundary (clipped cells are kept).

    Returns (cell_lo, cell_hi), two (M, N) arrays.  Empty interval
    yields empty arrays.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.size != hurst.n or hi.size != hurst.n:
        raise ValueError("interval dimension does not match H")
    if np.any(hi <= lo):
        n = hurst.n
        return np.empty((0, n), dtype=float), np.empty((0, n), dtype=float)

    sides = 2.0 ** (-order / hurst.h)
    per_axis = [
        lo[j] + sides[j] * np.arange(int(np.ceil((hi[j] - lo[j]) / sides[j])))
        for j in range(hurst.n)
    ]
    grids = np.meshgrid(*per_axis, indexing="ij")
    cell_lo = np.stack([g.ravel() for g in grids], axis=-1)
    cell_hi = np.minimum(cell_lo + sides, hi)
    return cell_lo, cell_hi


def dyadic_cell_count(lo, hi, order: int, hurst: HurstVector) -> int:
    """Number of order-q cells tiling [lo, hi] (without materializing them)."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if np.any(hi <= lo):
        return 0
    sides = 2.0 ** (-order / hurst.h)
    return int(np.prod(np.ceil((hi - lo) / sides)))


def unit_rho_ball_measure(hurst: HurstVector) -> float:
    """Lebesgue measure of the unit rho-ball {t : sum_j |t_j|^{H_j} <= 1}.

    Dirichlet integral: 2^N * prod_j Gamma(1 + 1/H_j) / Gamma(1 + Q).
    """
    inv = 1.0 / hurst.h
    return float(2.0 ** hurst.n * np.prod(_gamma(1.0 + inv)) / _gamma(1.0 + np.sum(inv)))


def rho_tilde_ball_measure(radius: float, hurst: HurstVector) -> float:
    """Lebesgue measure of B_rho_tilde(a, r): exactly 2^N * r^Q."""
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    return float(2.0 ** hurst.n * radius ** hurst.q())
