"""Single-risk distributions and closed-form risk measures.

Covers the Pareto(alpha) law on [1, inf) with survival function x**(-alpha),
its VaR / Expected Shortfall closed forms, skewness / excess kurtosis, the
totally-skewed stable laws used by the generalized-CLT quantile method, and
the standard-normal helpers everything else builds on.

All undefined moments raise :class:`UndefinedMomentError`; no silent NaNs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.stats import levy_stable

from .errors import DomainError, NumericalError, UndefinedMomentError

# Totally-skewed-right stable laws in the 1-parameterization (the one under
# which the classical norming constants for Pareto sums are standard).
levy_stable.parameterization = "S1"

EULER_GAMMA = float(np.euler_gamma)


@dataclass(frozen=True)
class ParetoModel:
    """Pareto (type I) risk with tail index ``alpha``; support [1, inf)."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"tail index must be positive, got {self.alpha}")

    @property
    def mean(self) -> float:
        if self.alpha <= 1:
            raise UndefinedMomentError(f"mean requires alpha > 1 (alpha={self.alpha})")
        return self.alpha / (self.alpha - 1.0)

    @property
    def variance(self) -> float:
        if self.alpha <= 2:
            raise UndefinedMomentError(
                f"variance requires alpha > 2 (alpha={self.alpha})"
            )
        a = self.alpha
        return a / ((a - 1.0) ** 2 * (a - 2.0))

    @property
    def skewness(self) -> float:
        if self.alpha <= 3:
            raise UndefinedMomentError(
                f"skewness requires alpha > 3 (alpha={self.alpha})"
            )
        a = self.alpha
        return 2.0 * (1.0 + a) / (a - 3.0) * math.sqrt((a - 2.0) / a)

    @property
    def excess_kurtosis(self) -> float:
        if self.alpha <= 4:
            raise UndefinedMomentError(
                f"excess kurtosis requires alpha > 4 (alpha={self.alpha})"
            )
        a = self.alpha
        return 6.0 * (a**3 + a**2 - 6.0 * a - 2.0) / (a * (a - 3.0) * (a - 4.0))


def pareto_cdf(model: ParetoModel, x) -> np.ndarray | float:
    """P(X <= x); zero below the support edge at 1."""
    x = np.asarray(x, dtype=float)
    out = np.where(x < 1.0, 0.0, 1.0 - np.where(x < 1.0, 1.0, x) ** -model.alpha)
    return out if out.ndim else float(out)


def pareto_pdf(model: ParetoModel, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    a = model.alpha
    out = np.where(x < 1.0, 0.0, a * np.where(x < 1.0, 1.0, x) ** (-a - 1.0))
    return out if out.ndim else float(out)


def pareto_quantile(model: ParetoModel, z) -> np.ndarray | float:
    """Inverse CDF: (1 - z)**(-1/alpha) for z in (0, 1)."""
    z = np.asarray(z, dtype=float)
    if np.any((z <= 0.0) | (z >= 1.0)):
        raise DomainError("quantile level must lie strictly inside (0, 1)")
    out = (1.0 - z) ** (-1.0 / model.alpha)
    return out if out.ndim else float(out)


def pareto_var_es(model: ParetoModel, q: float) -> tuple[float, float]:
    """Value-at-Risk and Expected Shortfall of a single Pareto risk.

    VaR_q = (1-q)**(-1/alpha); ES_q = alpha/(alpha-1) * VaR_q, defined only
    for alpha > 1 (otherwise the tail mean diverges and this raises).
    Callers needing VaR alone below alpha = 1 should use
    :func:`pareto_quantile`.
    """
    var = pareto_quantile(model, q)
    if model.alpha <= 1:
        raise UndefinedMomentError(
            f"ES requires alpha > 1 (alpha={model.alpha}); "
            f"VaR alone is pareto_quantile(q) = {var:.6g}"
        )
    es = model.alpha / (model.alpha - 1.0) * var
    return float(var), float(es)


def pareto_skew_kurt(model: ParetoModel) -> tuple[float, float]:
    """(skewness, excess kurtosis); raises if either is undefined.

    Use the ``skewness`` / ``excess_kurtosis`` properties to query one at a
    time (skewness alone exists for 3 < alpha <= 4).
    """
    return model.skewness, model.excess_kurtosis


@dataclass(frozen=True)
class RiskMeasure:
    """A quantile-based risk measure request: VaR or ES at level q."""

    kind: str
    q: float

    def __post_init__(self):
        if self.kind not in ("VaR", "ES"):
            raise DomainError(f"kind must be 'VaR' or 'ES', got {self.kind!r}")
        if not 0.0 < self.q < 1.0:
            raise DomainError("risk level q must lie in (0, 1)")

    def of_pareto(self, model: ParetoModel) -> float:
        if self.kind == "VaR":
            return float(pareto_quantile(model, self.q))
        return pareto_var_es(model, self.q)[1]


# ---------------------------------------------------------------------------
# Normal helpers
# ---------------------------------------------------------------------------

def normal_cdf(x) -> np.ndarray | float:
    out = special.ndtr(np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def normal_pdf(x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return out if out.ndim else float(out)


def normal_quantile(q) -> np.ndarray | float:
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0.0) | (q >= 1.0)):
        raise DomainError("normal quantile level must lie in (0, 1)")
    out = special.ndtri(q)
    return out if out.ndim else float(out)


def log_gamma(x) -> np.ndarray | float:
    """log Gamma(x) for x > 0 (moment formulas are evaluated in log space)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("log_gamma requires x > 0")
    out = special.gammaln(x)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Totally skewed stable laws (beta = 1), 1-parameterization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StableSpec:
    """A stable law S_alpha(1, beta, 0); only beta = 1 is supported here.

    The 1-parameterization is validated elsewhere against the Levy closed
    form at alpha = 1/2 and against Monte-Carlo normalized Pareto sums, so
    the norming constants b_n and C_alpha can be applied verbatim.
    """

    alpha: float
    beta: float = 1.0
    parameterization: str = "S1"

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise DomainError(
                f"stable alpha must lie in (0, 2), got {self.alpha}; "
                "alpha = 2 is the normal branch"
            )
        if self.beta != 1.0:
            raise DomainError("only beta = 1 (totally skewed right) is supported")
        if self.parameterization != "S1":
            raise DomainError("only the S1 parameterization is supported")


def stable_cdf(spec: StableSpec, x) -> np.ndarray | float:
    """CDF of S_alpha(1, 1, 0) at x (numerical, piecewise Zolotarev-type)."""
    levy_stable.parameterization = "S1"
    out = levy_stable.cdf(np.asarray(x, dtype=float), spec.alpha, spec.beta)
    out = np.asarray(out)
    return out if out.ndim else float(out)


def stable_quantile(spec: StableSpec, q: float) -> float:
    """Quantile of S_alpha(1, 1, 0); verified by a CDF round trip."""
    if not 0.0 < q < 1.0:
        raise DomainError("stable quantile level must lie in (0, 1)")
    levy_stable.parameterization = "S1"
    z = float(levy_stable.ppf(q, spec.alpha, spec.beta))
    if not np.isfinite(z):
        raise NumericalError(f"stable quantile inversion failed at q={q}")
    back = stable_cdf(spec, z)
    if abs(back - q) > 1e-6:
        raise NumericalError(
            f"stable quantile round trip off by {abs(back - q):.3g} at q={q}",
            partial=z,
            achieved=abs(back - q),
        )
    return z
