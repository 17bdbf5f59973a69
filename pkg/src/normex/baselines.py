"""Competing quantile approximations for the Pareto sum.

Five estimators are compared against simulation throughout the package:

* ``gclt_quantile``     -- stable limit with classical norming (alpha <= 2),
  plus its crude tail variant,
* ``clt_quantile``      -- plain normal limit (alpha > 2),
* ``max_evt_quantile``  -- tail-of-the-maximum approximation (any alpha),
* ``zaliapin_quantile`` -- normal part for the n-2 smallest order statistics
  plus the exact law of the top-two sum, components inverted separately
  (kept verbatim as a benchmark, including its independence shortcut),
* the mixed normal/extremes quantile, which lives in :mod:`normex.core`.

The Edgeworth expansion of the standardized sum quantifies why the plain
CLT breaks down: its skewness term is infinite for alpha <= 3 and its
kurtosis term for alpha <= 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaln

from .distributions import (
    EULER_GAMMA,
    ParetoModel,
    StableSpec,
    normal_pdf,
    normal_quantile,
    stable_quantile,
)
from .errors import DomainError, UndefinedMomentError
from .numerics import QuadCfg, RootCfg, find_root_bracketed, integrate_adaptive
from .order_stats import OrderStatContext

__all__ = [
    "GcltConstants",
    "ZaliapinMoments",
    "gclt_constants",
    "gclt_quantile",
    "gclt_tail_quantile",
    "clt_quantile",
    "max_evt_quantile",
    "zaliapin_moments",
    "zaliapin_quantile",
    "top_two_sum_cdf",
    "top_two_sum_quantile",
    "edgeworth_correction",
    "hermite_h2",
    "hermite_h3",
    "hermite_h5",
]


@dataclass(frozen=True)
class GcltConstants:
    """Centering b_n and scaling for the stable/normal limit of the sum."""

    b_n: float
    C_alpha: float | None
    d_n: float | None


def _b_n(n: int, alpha: float) -> float:
    """Centering sequence; extended beyond the stable range by n*E(X).

    The classical table defines b_n = n*alpha/(alpha-1) only on 1 < alpha < 2,
    but the tail-of-the-maximum quantile needs the same centering for any
    alpha > 1 (it reproduces the published alpha = 5/2 values only with it).
    """
    if alpha < 1.0:
        return 0.0
    if alpha == 1.0:
        return n * (math.log(n) + 1.0 - EULER_GAMMA + math.log(math.pi / 2.0))
    return n * alpha / (alpha - 1.0)


def _d_n_alpha2(n: int) -> float:
    """Scaling at alpha = 2: the crossing of 2n log x = x**2 above sqrt(n)."""
    lo = math.sqrt(2.0 * n)

    def f(x):
        return 2.0 * n * math.log(x) / (x * x) - 1.0

    return find_root_bracketed(f, lo, 4.0 * math.sqrt(n * math.log(max(n, 2))), RootCfg())


def gclt_constants(n: int, alpha: float) -> GcltConstants:
    """Norming constants of the generalized-CLT limit, 0 < alpha <= 2."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if not 0.0 < alpha <= 2.0:
        raise DomainError(
            f"stable norming needs 0 < alpha <= 2, got {alpha}; use the CLT above 2"
        )
    if alpha == 2.0:
        return GcltConstants(b_n=_b_n(n, alpha), C_alpha=None, d_n=_d_n_alpha2(n))
    if alpha == 1.0:
        c = math.pi / 2.0
    else:
        radicand = gamma_fn(1.0 - alpha) * math.cos(math.pi * alpha / 2.0)
        if not radicand > 0.0:
            raise DomainError(
                f"scaling radicand not positive at alpha={alpha}: {radicand}"
            )
        c = radicand ** (1.0 / alpha)
    return GcltConstants(b_n=_b_n(n, alpha), C_alpha=c, d_n=None)


def gclt_quantile(n: int, alpha: float, q: float) -> float:
    """Stable-limit VaR: n**(1/a) * C_a * (stable quantile) + b_n.

    At alpha = 2 the limit is normal with the log-corrected scale d_n.
    """
    if not 0.0 < q < 1.0:
        raise DomainError("quantile level must lie in (0, 1)")
    consts = gclt_constants(n, alpha)
    if alpha == 2.0:
        return consts.d_n * float(normal_quantile(q)) + 2.0 * n
    g = stable_quantile(StableSpec(alpha=alpha), q)
    return n ** (1.0 / alpha) * consts.C_alpha * g + consts.b_n


def gclt_tail_quantile(
    n: int, alpha: float, q: float, as_printed: bool = False
) -> float:
    """Crude stable-tail VaR variant for 1/2 < alpha < 2 and q > 0.95.

    The corrected form uses (1-q)**(-1/alpha) (the upper tail); the source
    prints q**(-1/alpha), which is dimensionally inconsistent with its own
    maximum-based analogue but is available behind ``as_printed=True``.
    """
    if not 0.5 < alpha < 2.0:
        raise DomainError(f"tail variant needs 1/2 < alpha < 2, got {alpha}")
    if not q > 0.95:
        raise DomainError(f"tail variant is stated for q > 0.95 only, got q={q}")
    base = q if as_printed else 1.0 - q
    return n ** (1.0 / alpha) * base ** (-1.0 / alpha) + _b_n(n, alpha)


def clt_quantile(n: int, alpha: float, q: float) -> float:
    """Normal-limit VaR: sqrt(n*var(X)) * z_q + n*E(X); needs alpha > 2."""
    if not alpha > 2.0:
        raise DomainError(f"the CLT quantile needs alpha > 2, got {alpha}")
    if not 0.0 < q < 1.0:
        raise DomainError("quantile level must lie in (0, 1)")
    scale = math.sqrt(n * alpha) / ((alpha - 1.0) * math.sqrt(alpha - 2.0))
    return scale * float(normal_quantile(q)) + n * alpha / (alpha - 1.0)


def max_evt_quantile(n: int, alpha: float, q: float) -> float:
    """Tail-of-the-maximum VaR: n**(1/a) * log(1/q)**(-1/a) + b_n.

    Valid for any positive alpha at high q (the sum's tail is asymptotically
    the maximum's tail).
    """
    if not alpha > 0:
        raise DomainError(f"tail index must be positive, got {alpha}")
    if not 0.0 < q < 1.0:
        raise DomainError("quantile level must lie in (0, 1)")
    return n ** (1.0 / alpha) * math.log(1.0 / q) ** (-1.0 / alpha) + _b_n(n, alpha)


# ---------------------------------------------------------------------------
# Top-two split (normal part + exact law of X_(n-1) + X_(n))
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZaliapinMoments:
    """Mean / second moment / variance of the sum of the n-2 smallest terms."""

    m1: float
    m2: float
    sigma2: float


def zaliapin_moments(n: int, alpha: float) -> ZaliapinMoments:
    """Unconditional moments of sum(X_(i), i <= n-2) via Gamma ratios.

    Requires 2/3 < alpha < 2 (variance of every retained order statistic
    finite while the full sum's is not); n >= 3 so the sum is nonempty.
    Everything is evaluated in log space.
    """
    if not (2.0 / 3.0 < alpha < 2.0):
        raise DomainError(
            f"the top-two split is defined for 2/3 < alpha < 2, got {alpha}"
        )
    if n < 3:
        raise DomainError(f"need n >= 3, got {n}")
    a = alpha
    i = np.arange(1, n - 1)  # 1..n-2
    lg_n1 = gammaln(n + 1)

    m1 = float(
        np.exp(
            lg_n1 - gammaln(n - i + 1) + gammaln(n - i + 1 - 1 / a) - gammaln(n + 1 - 1 / a)
        ).sum()
    )

    # squares: E[X_(i)^2]
    sq = np.exp(
        lg_n1 - gammaln(n - i + 1) + gammaln(n - i + 1 - 2 / a) - gammaln(n + 1 - 2 / a)
    ).sum()
    # cross terms: 2 * sum_{i<j<=n-2} E[X_(i) X_(j)]
    jj, ii = np.meshgrid(i, i, indexing="ij")
    upper = ii < jj
    iu, ju = ii[upper], jj[upper]
    cross = np.exp(
        lg_n1
        - gammaln(n - ju + 1)
        + gammaln(n - ju + 1 - 1 / a)
        + gammaln(n - iu + 1 - 2 / a)
        - gammaln(n - iu + 1 - 1 / a)
        - gammaln(n + 1 - 2 / a)
    ).sum()
    m2 = float(sq + 2.0 * cross)
    return ZaliapinMoments(m1=m1, m2=m2, sigma2=m2 - m1 * m1)


def top_two_sum_cdf(n: int, alpha: float, x: float) -> float:
    """CDF of X_(n-1) + X_(n) at x.

    The inner integral over the maximum is closed-form, leaving one
    quadrature over the second-largest value u in (1, x/2):

        n(n-1) a (1-u**-a)**(n-2) u**(-a-1) (u**-a - (x-u)**-a).
    """
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    if not alpha > 0:
        raise DomainError(f"tail index must be positive, got {alpha}")
    x = float(x)
    if x <= 2.0:
        return 0.0
    a = alpha
    # flatten the Pareto factor with t = 1 - u**-a: the integrand becomes
    # n(n-1) t**(n-2) [(1-t) - (x-u)**-a], bounded and smooth on (0, tmax)
    tmax = 1.0 - (x / 2.0) ** -a

    def f(t):
        u = (1.0 - t) ** (-1.0 / a)
        return n * (n - 1) * t ** (n - 2) * ((1.0 - t) - (x - u) ** -a)

    val, _ = integrate_adaptive(f, 0.0, tmax, QuadCfg(abs_tol=1e-11, rel_tol=1e-9))
    return min(max(val, 0.0), 1.0)


def top_two_sum_quantile(n: int, alpha: float, q: float) -> float:
    """Inverse of :func:`top_two_sum_cdf` by bracketed root finding."""
    if not 0.0 < q < 1.0:
        raise DomainError("quantile level must lie in (0, 1)")
    ctx = OrderStatContext(n=n, alpha=alpha)  # validates inputs
    hi = 2.0 * n ** (1.0 / alpha) * (1.0 - q) ** (-1.0 / alpha) + 4.0
    return find_root_bracketed(
        lambda x: top_two_sum_cdf(ctx.n, ctx.alpha, x) - q,
        2.0 + 1e-9,
        hi,
        RootCfg(x_tol=1e-9),
        lo_bound=2.0,
    )


def zaliapin_quantile(n: int, alpha: float, q: float) -> float:
    """Top-two-split VaR: normal-part quantile plus top-two quantile.

    Summing component quantiles is itself a rough approximation (kept as
    printed; it exists here as a benchmark, not a recommendation).
    """
    mom = zaliapin_moments(n, alpha)
    if not 0.0 < q < 1.0:
        raise DomainError("quantile level must lie in (0, 1)")
    normal_part = math.sqrt(mom.sigma2) * float(normal_quantile(q)) + mom.m1
    return normal_part + top_two_sum_quantile(n, alpha, q)


# ---------------------------------------------------------------------------
# Edgeworth expansion of the standardized sum
# ---------------------------------------------------------------------------

def hermite_h2(x):
    x = np.asarray(x, dtype=float)
    out = x * x - 1.0
    return out if out.ndim else float(out)


def hermite_h3(x):
    x = np.asarray(x, dtype=float)
    out = x**3 - 3.0 * x
    return out if out.ndim else float(out)


def hermite_h5(x):
    x = np.asarray(x, dtype=float)
    out = x**5 - 10.0 * x**3 + 15.0 * x
    return out if out.ndim else float(out)


def edgeworth_q1(alpha: float, x) -> np.ndarray | float:
    """First correction polynomial: -phi(x) H2(x)/6 * skewness."""
    g1 = ParetoModel(alpha).skewness  # raises below alpha = 3
    out = -normal_pdf(x) * hermite_h2(x) / 6.0 * g1
    return out


def edgeworth_q2(alpha: float, x) -> np.ndarray | float:
    """Second correction polynomial: -phi(x) (H5 g1^2/72 + H3 g2/24)."""
    m = ParetoModel(alpha)
    g1, g2 = m.skewness, m.excess_kurtosis  # raises below alpha = 4
    out = -normal_pdf(x) * (hermite_h5(x) / 72.0 * g1**2 + hermite_h3(x) / 24.0 * g2)
    return out


def edgeworth_correction(n: int, alpha: float, x) -> np.ndarray | float:
    """Estimate of F_n(x) - Phi(x) for the standardized sum.

    Q1/sqrt(n) needs alpha > 3, the Q2/n refinement alpha > 4; between 3 and
    4 only the first term is returned, and at alpha <= 3 the correction does
    not exist (the skewness term is infinite).
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if alpha <= 3.0:
        raise UndefinedMomentError(
            f"the Edgeworth correction is undefined for alpha <= 3 (alpha={alpha}): "
            "the skewness term is infinite"
        )
    out = edgeworth_q1(alpha, x) / math.sqrt(n)
    if alpha > 4.0:
        out = out + edgeworth_q2(alpha, x) / n
    return out
