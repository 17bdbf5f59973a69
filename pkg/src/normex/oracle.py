"""Ground-truth machinery: Monte-Carlo simulation of Pareto sums with
empirical quantiles and confidence intervals, and an exact grid-convolution
density for small n.

Simulation is deterministic for a fixed (seed, workers) pair: each worker
draws from an independently spawned substream, and the final sample is the
sorted concatenation in worker order, so results never depend on scheduling.
Samples can be dumped to / loaded from a little-endian binary cache so that
expensive runs are shared across CLI invocations.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .distributions import ParetoModel, normal_quantile, pareto_cdf
from .errors import CapacityError, DomainError, UnsupportedRangeError
from .numerics import GridDensity, grid_convolve

__all__ = [
    "EmpiricalDistribution",
    "QuantileWithCI",
    "simulate_sums",
    "empirical_quantile",
    "streaming_quantiles",
    "exact_sum_pdf_grid",
    "dump_empirical",
    "load_empirical",
]

#: Default in-memory budget for a full sorted sample (bytes).
DEFAULT_MEMORY_LIMIT = 1 << 30

_MAGIC = b"PSUM"
_VERSION = 1
_HEADER = struct.Struct("<4sIIdQQ")  # magic, version, n, alpha, N, seed

#: Hard cap for the exact convolution (the recursion is quadratic-ish in
#: range and slow beyond desk scale; Monte Carlo takes over there).
EXACT_CONVOLUTION_MAX_N = 64


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted Monte-Carlo sample of the Pareto sum with provenance."""

    values: np.ndarray
    n: int
    alpha: float
    n_samples: int
    seed: int
    workers: int | None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size != self.n_samples:
            raise DomainError("values must be a 1-D array of length n_samples")
        if v.size and np.any(v[:-1] > v[1:]):
            raise DomainError("values must be sorted ascending")
        if v.size and v[0] < self.n:
            raise DomainError("a sum of n unit-minimum risks cannot fall below n")

    def cdf_at(self, x) -> np.ndarray | float:
        out = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.n_samples
        return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class QuantileWithCI:
    """Empirical quantile with its asymptotic confidence interval."""

    q: float
    point: float
    ci_low: float
    ci_high: float
    confidence: float

    def __post_init__(self):
        if not self.ci_low <= self.point <= self.ci_high:
            raise DomainError("confidence interval must bracket the point estimate")

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


def _split_counts(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if w < extra else 0) for w in range(parts)]


def _iter_chunks(
    n: int, alpha: float, n_samples: int, seed: int, workers: int, block: int = 1 << 14
) -> Iterator[np.ndarray]:
    """Yield sum chunks in a deterministic worker-major order.

    Uniforms are taken on (0, 1] (one minus the half-open numpy draw) so the
    inverse transform u**(-1/alpha) never divides by zero.
    """
    children = np.random.SeedSequence(seed).spawn(workers)
    inv = -1.0 / alpha
    for w, count in enumerate(_split_counts(n_samples, workers)):
        rng = np.random.default_rng(children[w])
        done = 0
        while done < count:
            m = min(block, count - done)
            u = 1.0 - rng.random((m, n))
            yield np.sum(u**inv, axis=1)
            done += m


def simulate_sums(
    n: int,
    alpha: float,
    n_samples: int,
    seed: int = 0,
    workers: int = 1,
    memory_limit: int = DEFAULT_MEMORY_LIMIT,
) -> EmpiricalDistribution:
    """Simulate n_samples realizations of the Pareto sum; sorted and exact.

    Deterministic for fixed (seed, workers).  Raises :class:`CapacityError`
    when the sorted sample would exceed ``memory_limit`` bytes; use
    :func:`streaming_quantiles` for quantiles of such runs instead.
    """
    if n < 1 or n_samples < 1 or workers < 1:
        raise DomainError("n, n_samples and workers must all be >= 1")
    if not alpha > 0:
        raise DomainError(f"tail index must be positive, got {alpha}")
    if 8 * n_samples > memory_limit:
        raise CapacityError(
            f"sorted sample needs {8 * n_samples} bytes > limit {memory_limit}; "
            "use streaming_quantiles for bounded-memory quantile estimation"
        )
    out = np.empty(n_samples)
    pos = 0
    for chunk in _iter_chunks(n, alpha, n_samples, seed, workers):
        out[pos : pos + chunk.size] = chunk
        pos += chunk.size
    out.sort()
    return EmpiricalDistribution(
        values=out, n=n, alpha=alpha, n_samples=n_samples, seed=seed, workers=workers
    )


def _quantile_rank(n_samples: int, q: float) -> int:
    """0-based index of the empirical q-quantile (rank ceil(Nq), 1-based)."""
    return min(max(int(math.ceil(n_samples * q)) - 1, 0), n_samples - 1)


def empirical_quantile(
    emp: EmpiricalDistribution, q: float, confidence: float = 0.05
) -> QuantileWithCI:
    """Empirical quantile with the asymptotic-normal confidence interval.

    The CI half-width is |z_(a/2)| * sqrt(q(1-q)) / (f_hat * sqrt(N)) with the
    density at the quantile (the formula is only dimensionally meaningful
    with the density evaluated at the quantile value, not at the level)
    estimated kernel-free from the slope of the empirical quantile function
    over +/- ceil(sqrt(N)) ranks.
    """
    if not 0.0 < q < 1.0:
        raise DomainError("quantile level must lie in (0, 1)")
    if not 0.0 < confidence < 1.0:
        raise DomainError("confidence must lie in (0, 1)")
    v = emp.values
    N = emp.n_samples
    r = _quantile_rank(N, q)
    point = float(v[r])
    s = int(math.ceil(math.sqrt(N)))
    lo, hi = max(r - s, 0), min(r + s, N - 1)
    spread = float(v[hi] - v[lo])
    if spread <= 0.0:
        half = 0.0
    else:
        density = ((hi - lo) / N) / spread
        half = (
            abs(float(normal_quantile(confidence / 2.0)))
            * math.sqrt(q * (1.0 - q))
            / (density * math.sqrt(N))
        )
    return QuantileWithCI(
        q=q, point=point, ci_low=point - half, ci_high=point + half, confidence=confidence
    )


def streaming_quantiles(
    n: int,
    alpha: float,
    n_samples: int,
    qs: Sequence[float],
    seed: int = 0,
    workers: int = 1,
    confidence: float = 0.05,
    bins: int = 1 << 16,
) -> list[QuantileWithCI]:
    """Exact empirical quantiles without materializing the sample.

    Three deterministic regeneration passes: (1) range scan, (2) histogram
    to bracket each target rank, (3) collection of the few bins containing
    the targets, which are then sorted exactly.  Produces rank-exact
    agreement with :func:`empirical_quantile` on the same stream.
    """
    if not qs:
        raise DomainError("need at least one quantile level")
    for q in qs:
        if not 0.0 < q < 1.0:
            raise DomainError("quantile levels must lie in (0, 1)")

    s = int(math.ceil(math.sqrt(n_samples)))
    ranks = sorted(
        {
            r
            for q in qs
            for r in (
                _quantile_rank(n_samples, q),
                max(_quantile_rank(n_samples, q) - s, 0),
                min(_quantile_rank(n_samples, q) + s, n_samples - 1),
            )
        }
    )

    lo = float(n)
    hi = -math.inf
    for chunk in _iter_chunks(n, alpha, n_samples, seed, workers):
        hi = max(hi, float(chunk.max()))
    hi = hi * (1.0 + 1e-12)

    # geometric edges suit the heavy tail; all values land in [lo, hi]
    edges = np.geomspace(lo, hi, bins + 1)
    edges[0], edges[-1] = lo, hi
    counts = np.zeros(bins, dtype=np.int64)
    for chunk in _iter_chunks(n, alpha, n_samples, seed, workers):
        idx = np.clip(np.searchsorted(edges, chunk, side="right") - 1, 0, bins - 1)
        counts += np.bincount(idx, minlength=bins)

    cum = np.concatenate(([0], np.cumsum(counts)))
    need_bins = sorted({int(np.searchsorted(cum, r + 1) - 1) for r in ranks})
    keep_lo = edges[need_bins]
    keep_hi = edges[[b + 1 for b in need_bins]]

    collected: dict[int, list[np.ndarray]] = {b: [] for b in need_bins}
    for chunk in _iter_chunks(n, alpha, n_samples, seed, workers):
        for b, blo, bhi in zip(need_bins, keep_lo, keep_hi):
            mask = (chunk >= blo) & (chunk < bhi) if b < bins - 1 else (
                (chunk >= blo) & (chunk <= bhi)
            )
            if mask.any():
                collected[b].append(chunk[mask])

    value_at: dict[int, float] = {}
    for b in need_bins:
        vals = np.sort(np.concatenate(collected[b])) if collected[b] else np.empty(0)
        if vals.size != counts[b]:
            raise RuntimeError("regeneration mismatch: stream is not deterministic")
        for r in ranks:
            if cum[b] <= r < cum[b + 1]:
                value_at[r] = float(vals[r - cum[b]])

    out = []
    zfac = abs(float(normal_quantile(confidence / 2.0)))
    for q in qs:
        r = _quantile_rank(n_samples, q)
        rlo, rhi = max(r - s, 0), min(r + s, n_samples - 1)
        point = value_at[r]
        spread = value_at[rhi] - value_at[rlo]
        if spread <= 0.0:
            half = 0.0
        else:
            density = ((rhi - rlo) / n_samples) / spread
            half = zfac * math.sqrt(q * (1.0 - q)) / (density * math.sqrt(n_samples))
        out.append(
            QuantileWithCI(
                q=q, point=point, ci_low=point - half, ci_high=point + half,
                confidence=confidence,
            )
        )
    return out


def exact_sum_pdf_grid(
    n: int,
    alpha: float,
    points: int = 1 << 16,
    tail_mass: float = 1e-5,
) -> GridDensity:
    """Exact density of the n-fold Pareto sum by recursive grid convolution.

    The single-risk histogram is built with exact bin masses on a range wide
    enough that the final sum keeps mass >= 1 - tail_mass (the sum's tail is
    asymptotically n times the single tail), then convolved n-1 times with
    stage-wise truncation, which is exact for the retained range.  Slow and
    memory-hungry for large n; capped at n = 64.
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if n > EXACT_CONVOLUTION_MAX_N:
        raise UnsupportedRangeError(
            f"exact convolution capped at n = {EXACT_CONVOLUTION_MAX_N} "
            f"(requested {n}); use simulate_sums instead"
        )
    if not alpha > 0:
        raise DomainError(f"tail index must be positive, got {alpha}")
    model = ParetoModel(alpha)
    # Half the budget to single-marginal truncation, half to the sum's tail.
    x_max = float((2.0 * n / tail_mass) ** (1.0 / alpha))
    x_max = max(x_max, n + 10.0)
    single = GridDensity.from_cdf(lambda x: pareto_cdf(model, x), 1.0, x_max, points)
    out = single
    for _ in range(n - 1):
        out = grid_convolve(out, single)
        keep = int(math.ceil((x_max - out.start) / out.step))
        if keep < out.values.size:
            out = GridDensity(start=out.start, step=out.step, values=out.values[:keep])
    return out


def dump_empirical(emp: EmpiricalDistribution, path: str | Path) -> None:
    """Write the little-endian binary cache: header then N float64 values.

    Header layout: magic ``PSUM``, u32 version, u32 n, f64 alpha, u64 N,
    u64 seed.  The worker count is part of the cache key, not the payload.
    """
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(
            _HEADER.pack(_MAGIC, _VERSION, emp.n, emp.alpha, emp.n_samples, emp.seed)
        )
        fh.write(emp.values.astype("<f8").tobytes())


def load_empirical(path: str | Path) -> EmpiricalDistribution:
    """Read a binary cache written by :func:`dump_empirical`."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DomainError(f"{path} is too short to be a sample cache")
    magic, version, n, alpha, n_samples, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise DomainError(f"{path} lacks the PSUM magic")
    if version != _VERSION:
        raise DomainError(f"unsupported cache version {version}")
    expect = _HEADER.size + 8 * n_samples
    if len(raw) != expect:
        raise DomainError(f"{path}: expected {expect} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).copy()
    return EmpiricalDistribution(
        values=values, n=n, alpha=alpha, n_samples=n_samples, seed=seed, workers=None
    )
