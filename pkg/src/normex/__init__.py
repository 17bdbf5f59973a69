"""Aggregated heavy-tailed risk: distribution approximations and risk measures.

The package approximates the law of a sum of iid Pareto risks by mixing a
conditional normal limit for the bulk with the exact law of the largest
order statistics, evaluates Value-at-Risk / Expected Shortfall under five
competing approximations, quantifies the approximation error with
Berry-Esseen-type bounds, and validates everything against Monte-Carlo and
exact-convolution oracles.
"""

from .baselines import (
    GcltConstants,
    ZaliapinMoments,
    clt_quantile,
    edgeworth_correction,
    gclt_constants,
    gclt_quantile,
    gclt_tail_quantile,
    max_evt_quantile,
    top_two_sum_cdf,
    top_two_sum_quantile,
    zaliapin_moments,
    zaliapin_quantile,
)
from .bounds import (
    BoundCurve,
    berry_esseen_K,
    bound_curve,
    density_bound_k2,
    find_K_max,
)
from .core import (
    GridCfg,
    NormexApprox,
    hy_convolution,
    k_interval,
    normex_cdf,
    normex_quantile,
    select_k,
)
from .distributions import (
    ParetoModel,
    RiskMeasure,
    StableSpec,
    log_gamma,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    pareto_cdf,
    pareto_pdf,
    pareto_quantile,
    pareto_skew_kurt,
    pareto_var_es,
    stable_cdf,
    stable_quantile,
)
from .errors import (
    CapacityError,
    DomainError,
    NormexError,
    NumericalError,
    ResolutionError,
    UndefinedMomentError,
    UnsupportedRangeError,
)
from .numerics import GridDensity, QuadCfg, RootCfg, find_root_bracketed, grid_convolve, integrate_adaptive
from .oracle import (
    EmpiricalDistribution,
    QuantileWithCI,
    dump_empirical,
    empirical_quantile,
    exact_sum_pdf_grid,
    load_empirical,
    simulate_sums,
    streaming_quantiles,
)
from .order_stats import (
    ConditionalSummand,
    OrderStatContext,
    cond_mean_m1,
    cond_third_abs_moment,
    cond_var_sigma2,
    joint_order_stat_pdf,
    lyapunov_ratio_C,
    order_stat_cross_moment,
    order_stat_moment,
    order_stat_pdf,
    shifted_pareto_pdf,
    shifted_pareto_tail,
    truncated_summand_cdf,
    truncated_summand_pdf,
)

__version__ = "0.1.0"
