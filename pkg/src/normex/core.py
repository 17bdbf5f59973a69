"""The mixed normal/extremes approximation of the Pareto-sum distribution.

The sum of n iid Pareto(alpha) risks is split at the k-th largest order
statistic: conditionally on X_(n-k+1) = y, the trimmed sum of the n-k
smallest terms is approximated by a normal law with closed-form conditional
mean and variance, while the k-1 exceedances above y keep their exact law
(iid Pareto shifted to start at y, hence a (k-1)-fold self-convolution).
Integrating the conditioning variable out yields a CDF approximation whose
quantiles serve as Value-at-Risk estimates.

k = k(alpha) is the smallest number of top order statistics whose removal
leaves summands with a finite p-th moment (p = 4 by default), so k depends
on the tail index only, never on the sample size.

Numerical strategy: the outer integral over y is flattened by the exact
substitution s = Beta-CDF(1 - y**-alpha), which turns the sharply spiked
order-statistic density into Lebesgue measure on (0, 1); the k = 1 branch
then needs a single adaptive quadrature of a closed-form integrand, and the
k >= 2 branch sums the normal CDF against a precomputed self-convolution
grid of the unit-threshold exceedance law (rescaled per node -- the
exceedance law is scale invariant in y).  Collapsing the inner dimensions
analytically avoids the instability generic cubature shows at extreme
quantiles.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import betainc, betaincinv, ndtr

from .errors import DomainError, NumericalError, ResolutionError, UnsupportedRangeError
from .numerics import (
    DIRECT_CONVOLVE_MAX,
    GridDensity,
    QuadCfg,
    RootCfg,
    find_root_bracketed,
    integrate_adaptive,
)
from .order_stats import cond_summand_mean, cond_summand_var

__all__ = [
    "GridCfg",
    "NormexApprox",
    "select_k",
    "k_interval",
    "hy_convolution",
    "normex_cdf",
    "normex_quantile",
]

MAX_K = 7  # the moment-gate table is tabulated for k <= 7


def select_k(alpha: float, p: int = 4) -> int:
    """Number of top order statistics to treat exactly.

    The smallest integer k with k > p/alpha - 1 (equivalently
    alpha*(k+1) > p strictly), clamped to k >= 1.  The strict inequality
    matters on the boundaries: at alpha = 2, p = 4 the 4th moment of the
    second-largest term is still infinite, so k = 2 is returned there even
    though rounding the published interval table the other way would give 1.
    """
    if not alpha > 0:
        raise DomainError(f"tail index must be positive, got {alpha}")
    if p < 1:
        raise DomainError(f"moment order must be a positive integer, got {p}")
    if not alpha > p / (MAX_K + 1):
        raise UnsupportedRangeError(
            f"alpha={alpha:g} needs k > {MAX_K}; supported range is alpha > {p / (MAX_K + 1):g}"
        )
    return max(1, math.floor(p / alpha - 1.0) + 1)


def k_interval(k: int, p: int = 4) -> tuple[float, float]:
    """Open-closed interval ]p/(k+1), p/k] of tail indices mapping to k."""
    if not 1 <= k <= MAX_K:
        raise DomainError(f"k must lie in 1..{MAX_K}")
    return (p / (k + 1), p / k)


@dataclass(frozen=True)
class GridCfg:
    """Grid resolution and mass budget for exceedance-law convolutions."""

    points: int = 2**18
    tail_mass: float = 1e-6
    max_points: int = 2**24
    min_bulk_cells: int = 48

    def __post_init__(self):
        if self.points < 16:
            raise DomainError("points must be >= 16")
        if not 0 < self.tail_mass < 1:
            raise DomainError("tail_mass must lie in (0, 1)")


def _convolve_masses(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if min(a.size, b.size) <= DIRECT_CONVOLVE_MAX:
        return np.convolve(a, b)
    out = fftconvolve(a, b)
    np.maximum(out, 0.0, out=out)
    return out


def hy_convolution(y: float, alpha: float, k: int, cfg: GridCfg = GridCfg()) -> GridDensity:
    """Density of the sum of the k-1 exceedances above y, on a uniform grid.

    For k = 2 this is just the shifted Pareto law itself; for k >= 3 it is
    its (k-1)-fold self-convolution.  The exceedance law scales linearly in
    y, so the convolution is done once at unit threshold and rescaled.

    The grid captures all but ``cfg.tail_mass`` of the probability; with a
    heavy tail that forces a long range, and the configured point count must
    still resolve the bulk.  If it cannot, a :class:`ResolutionError` says
    how many points would be needed.
    """
    if not y >= 1.0:
        raise DomainError(f"threshold must be >= 1, got y={y}")
    if k < 2:
        raise DomainError("the exceedance sum needs k >= 2 (k = 1 keeps no exceedances)")
    if not alpha > 0:
        raise DomainError(f"tail index must be positive, got {alpha}")

    j = k - 1
    tail_each = cfg.tail_mass / (1.1 * j)  # headroom so the final mass stays in band
    zmax = tail_each ** (-1.0 / alpha)
    step = (zmax - 1.0) / cfg.points
    bulk_span = 10.0 ** (1.0 / alpha) - 1.0  # 90% of single-exceedance mass
    if step > bulk_span / cfg.min_bulk_cells:
        needed = math.ceil((zmax - 1.0) * cfg.min_bulk_cells / bulk_span)
        raise ResolutionError(
            f"grid too coarse to hold 1-{cfg.tail_mass:g} of the mass at this "
            f"resolution: needs ~{needed} points (configured {cfg.points}); "
            "increase points or relax tail_mass"
        )

    edges = np.linspace(1.0, zmax, cfg.points + 1)
    mass = np.diff(1.0 - edges**-alpha)
    out = mass
    for _ in range(j - 1):
        out = _convolve_masses(out, mass)

    # Convolved point masses sit at j*(1 + step/2) + r*step, i.e. cell
    # midpoints shifted by (j-1)*step/2.  Shift by whole cells and, for even
    # j, split the residual half cell between neighbours, so the reported
    # cells carry unbiased positions.
    whole, half = divmod(j - 1, 2)
    if half:
        out = 0.5 * (np.append(out, 0.0) + np.concatenate(([0.0], out)))
    if whole:
        out = np.concatenate((np.zeros(whole), out))

    # The self-convolution is exact only up to the per-factor truncation
    # point; beyond it the missing single-factor tail distorts the shape.
    # Trim where the retained mass first clears the budget, which lands
    # just below that point.
    cum = np.cumsum(out)
    stop = int(np.searchsorted(cum, 1.0 - 0.95 * cfg.tail_mass)) + 1
    out = out[:stop]
    return GridDensity(start=j * y, step=step * y, values=out / (step * y))


class _MassGrid:
    """Internal midpoint-mass grid for h_1^{(j)*} with exact position bookkeeping.

    Unlike the public :class:`GridDensity`, positions of the point masses are
    tracked exactly (pos0 + r*step), so repeated convolution introduces no
    half-cell drift.  Stage-wise truncation at ``zcap`` is exact for all
    retained positions: mass can only flow rightward under convolution with a
    positive-support factor.
    """

    def __init__(self, alpha: float, j: int, zcap: float, step: float):
        self.alpha = alpha
        self.j = j
        self.zcap = zcap
        self.step = step
        npts = max(int(math.ceil((zcap - 1.0) / step)), 8)
        edges = 1.0 + step * np.arange(npts + 1)
        base = np.diff(1.0 - edges**-alpha)
        pos0_1 = 1.0 + 0.5 * step
        out, pos0 = base, pos0_1
        for _ in range(j - 1):
            out = _convolve_masses(out, base)
            pos0 += pos0_1
            # sums beyond zcap never feed back below it, so trimming is exact
            keep = max(int(math.ceil((zcap - pos0) / step)) + 1, 1)
            out = out[:keep]
        self.mass = out
        self.pos = pos0 + step * np.arange(out.size)
        self.cum = np.concatenate(([0.0], np.cumsum(out)))

    def covers(self, z: float) -> bool:
        return z <= self.pos[-1]


@dataclass
class NormexApprox:
    """Precomputed configuration for evaluating the mixed CDF and its inverse.

    Attributes:
        n: number of summands.
        alpha: tail index of the Pareto marginals.
        k: threshold count; defaults to ``select_k(alpha, p)``.  May be
            overridden (e.g. to probe the boundary convention at alpha = 2),
            in which case a violated moment gate only warns.
        p: moment order driving the k selection.
        cdf_tol: absolute quadrature tolerance per CDF evaluation.
        grid_points: initial resolution of the exceedance convolution grid
            (k >= 2 only); the grid widens automatically when an evaluation
            needs more range.
    """

    n: int
    alpha: float
    k: int | None = None
    p: int = 4
    cdf_tol: float = 1e-6
    grid_points: int = 2**16
    quantile_tol: float = 1e-4

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"need n >= 2 summands, got n={self.n}")
        if not self.alpha > 0:
            raise DomainError(f"tail index must be positive, got {self.alpha}")
        auto = select_k(self.alpha, self.p)
        if self.k is None:
            self.k = auto
        elif self.k != auto:
            if not self.alpha * (self.k + 1) > self.p:
                warnings.warn(
                    f"override k={self.k} violates the strict moment gate "
                    f"alpha*(k+1) > p ({self.alpha:g}*{self.k + 1} <= {self.p}); "
                    "trimmed-sum summands lack the targeted moments",
                    stacklevel=2,
                )
        if not self.k < self.n:
            raise DomainError(f"need k < n, got k={self.k}, n={self.n}")
        self._grid: _MassGrid | None = None
        self._grid_lock = threading.Lock()

    # -- conditional moments ------------------------------------------------

    def _m1_sigma(self, y: float) -> tuple[float, float]:
        nk = self.n - self.k
        m1 = nk * float(cond_summand_mean(self.alpha, y))
        sig = math.sqrt(nk * float(cond_summand_var(self.alpha, y)))
        return m1, sig

    # -- outer substitution s = Beta CDF of 1 - y**-alpha --------------------

    def _y_of_s(self, s: float) -> float:
        a, b = self.n - self.k + 1, self.k
        t = s ** (1.0 / self.n) if self.k == 1 else betaincinv(a, b, s)
        t = min(t, 1.0 - 1e-16)
        return (1.0 - t) ** (-1.0 / self.alpha)

    def _s_of_y(self, y: float) -> float:
        t = 1.0 - y**-self.alpha
        if self.k == 1:
            return t**self.n
        return float(betainc(self.n - self.k + 1, self.k, t))

    # -- exceedance-sum grid (k >= 2) ----------------------------------------

    def _transition_y(self, x: float) -> float | None:
        """y where the conditional mass sits right at the integration edge.

        Root of x - k*y - m1(y) = 0; the integrand switches from ~1 to ~0
        around it, so the outer quadrature gets it as a break point.
        """
        lo, hi = 1.0 + 1e-9, x / self.k

        def f(y):
            return x - self.k * y - self._m1_sigma(y)[0]

        if f(lo) <= 0.0 or f(hi) >= 0.0 or hi <= lo:
            return None
        try:
            return find_root_bracketed(f, lo, hi, RootCfg(x_tol=1e-9 * x))
        except NumericalError:
            return None

    def _require_grid(self, x: float) -> _MassGrid:
        j = self.k - 1
        s_lo = 1e-9
        y_lo = self._y_of_s(s_lo)
        ys = np.geomspace(max(y_lo, 1.0 + 1e-6), max(x, y_lo * 1.001), 33)
        zneed = float(j)
        for y in ys:
            m1, sig = self._m1_sigma(float(y))
            zneed = max(zneed, (x - y + 8.0 * sig) / y)
        zneed = 1.05 * max(zneed, j + 1.0)  # headroom over the coarse y scan

        grid = self._grid
        if grid is not None and grid.covers(zneed):
            return grid
        with self._grid_lock:
            grid = self._grid
            if grid is None or not grid.covers(zneed):
                zcap = 2.0 ** math.ceil(math.log2(zneed + 1.0))
                step = max(zcap - 1.0, 8.0) / self.grid_points
                npts_final = (zcap - 1.0) / step * j
                if npts_final > 2**26:
                    raise ResolutionError(
                        f"exceedance grid would need ~{npts_final:.2e} cells; "
                        "increase grid_points budget or tail truncation"
                    )
                grid = _MassGrid(self.alpha, j, zcap, step)
                self._grid = grid
        return grid

    def _inner_k2(self, y: float, x: float, grid: _MassGrid) -> float:
        """P(T_k + exceedance sum <= x - y | threshold = y) on the grid."""
        m1, sig = self._m1_sigma(y)
        A = x - y - m1
        pos, mass, cum = grid.pos, grid.mass, grid.cum
        r_lo = int(np.searchsorted(pos, (A - 8.0 * sig) / y))
        r_hi = int(np.searchsorted(pos, (A + 8.0 * sig) / y))
        val = float(cum[r_lo])
        if r_hi > r_lo:
            u = y * pos[r_lo:r_hi]
            val += float(np.dot(mass[r_lo:r_hi], ndtr((A - u) / sig)))
        # lower limit of the inner integral: subtract P(... <= -y*z), which
        # is negligible unless the conditional normal has mass below zero
        worst = ndtr((-(y * pos[0]) - m1) / sig)
        if worst > 1e-15:
            val -= float(np.dot(mass, ndtr((-(y * pos) - m1) / sig)))
        return min(max(val, 0.0), 1.0)

    # -- CDF and quantile -----------------------------------------------------

    def cdf(self, x: float) -> float:
        """The mixed-approximation CDF at x (the sum lives on [n, inf))."""
        x = float(x)
        if x <= self.n:
            return 0.0
        smax = self._s_of_y(x)
        if smax <= 0.0:
            return 0.0

        # At y -> 1+ the conditional law degenerates at the minimum possible
        # sum, below x whenever x > n: the integrand tends to 1.  Evaluating
        # the closed forms there would hit 0/0, so guard the corner.
        y_floor = 1.0 + 1e-8

        if self.k == 1:
            def psi(s):
                y = self._y_of_s(s)
                if y <= y_floor:
                    return 1.0
                m1, sig = self._m1_sigma(y)
                return ndtr((x - y - m1) / sig) - ndtr(-m1 / sig)
        else:
            grid = self._require_grid(x)

            def psi(s):
                y = self._y_of_s(s)
                if y <= y_floor:
                    return 1.0
                return self._inner_k2(y, x, grid)

        points = None
        ystar = self._transition_y(x)
        if ystar is not None:
            sstar = self._s_of_y(ystar)
            if 0.0 < sstar < smax:
                points = [sstar]

        cfg = QuadCfg(abs_tol=self.cdf_tol, rel_tol=self.cdf_tol, max_depth=200)
        try:
            value, _ = integrate_adaptive(psi, 0.0, smax, cfg, points=points)
        except NumericalError as err:
            raise NumericalError(
                f"CDF quadrature did not converge at x={x:g} "
                f"(achieved {err.achieved:.3g})",
                partial=err.partial,
                achieved=err.achieved,
            ) from err
        return min(max(value, 0.0), 1.0)

    def quantile(self, q: float) -> float:
        """Inverse CDF by derivative-free bracketed root finding.

        The initial bracket is seeded by the normal-limit quantile plus a
        tail-scaled margin and expanded geometrically until it straddles q.
        The result satisfies |cdf(z) - q| <= quantile_tol.
        """
        if not 0.0 < q < 1.0:
            raise DomainError("quantile level must lie in (0, 1)")
        n, a = self.n, self.alpha
        if a > 2.0:
            from .baselines import clt_quantile

            center = clt_quantile(n, a, q)
        elif a > 1.0:
            center = n * a / (a - 1.0)
        else:
            center = float(n)
        hi = center + 20.0 * n ** (1.0 / a) * (1.0 - q) ** (-1.0 / a)
        root = find_root_bracketed(
            lambda x: self.cdf(x) - q,
            n + 1e-9,
            hi,
            RootCfg(x_tol=max(1e-7 * n, 1e-9), f_tol=self.quantile_tol, max_expansions=60),
            lo_bound=n,
        )
        resid = abs(self.cdf(root) - q)
        if resid > self.quantile_tol:
            raise NumericalError(
                f"quantile inversion residual {resid:.3g} exceeds "
                f"{self.quantile_tol:g} at q={q}",
                partial=root,
                achieved=resid,
            )
        return float(root)


def normex_cdf(approx: NormexApprox, x: float) -> float:
    """CDF of the mixed normal/extremes approximation at x."""
    return approx.cdf(x)


def normex_quantile(approx: NormexApprox, q: float) -> float:
    """Quantile (VaR) of the mixed normal/extremes approximation."""
    return approx.quantile(q)
