"""Statistical toolkit: KDE, rank tests, and curve fitting.

The saturating-exponential fit and the nested-ANOVA polynomial selection are
implemented here directly; ordinary least squares and special functions lean
on numpy/scipy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .model import FitResult

_MAX_EXACT_WILCOXON = 25
_GN_MAX_ITER = 200
# Relative floor below which an RSS improvement is numerical noise, not signal.
_ANOVA_IMPROVEMENT_FLOOR = 1e-9


class DegenerateInputError(ValueError):
    """Input admits no meaningful estimate (e.g. all values identical)."""


class FitError(RuntimeError):
    """Non-convergent fit; carries the last iterate and its RSS."""

    def __init__(self, message: str, params: tuple[float, ...], rss: float):
        super().__init__(message)
        self.params = params
        self.rss = rss


@dataclass(frozen=True)
class KdeCurve:
    """A kernel density estimate evaluated on a regular grid."""

    xs: np.ndarray
    density: np.ndarray
    bandwidth: float

    def __post_init__(self) -> None:
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        area = float(np.trapezoid(self.density, self.xs))
        if not 0.98 <= area <= 1.02:
            raise ValueError(f"density integrates to {area:.4f}, outside [0.98, 1.02]")


def kde(values, grid_points: int = 512) -> KdeCurve:
    """Gaussian kernel density estimate with Silverman's bandwidth.

    The bandwidth is 0.9 * min(sd, IQR/1.34) * n^(-1/5) and the grid spans
    [min - 3h, max + 3h].  At least two distinct values are required.
    """
    data = np.asarray(values, dtype=float)
    if data.size < 2 or np.all(data == data[0]):
        raise DegenerateInputError("kde requires at least two distinct values")
    sd = float(np.std(data, ddof=1))
    q75, q25 = np.percentile(data, [75, 25])
    iqr_scale = (q75 - q25) / 1.34
    scale = min(sd, iqr_scale) if iqr_scale > 0 else sd
    h = 0.9 * scale * data.size ** (-0.2)
    grid = np.linspace(data.min() - 3 * h, data.max() + 3 * h, grid_points)
    z = (grid[:, None] - data[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (data.size * h * math.sqrt(2 * math.pi))
    return KdeCurve(xs=grid, density=density, bandwidth=h)


def _midranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based), ties sharing their mid-rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _signed_rank_distribution(doubled_ranks: list[int]) -> np.ndarray:
    """Counts of achievable doubled positive-rank sums over all sign patterns."""
    total = sum(doubled_ranks)
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(paired_a, paired_b) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Returns (W, p) where W is the positive-rank sum.  Zero differences are
    dropped.  The p-value uses the exact sign-pattern distribution up to
    n = 25 and the tie-corrected normal approximation beyond.
    """
    a = np.asarray(paired_a, dtype=float)
    b = np.asarray(paired_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d arrays of equal length")
    if a.size < 5:
        raise ValueError("signed-rank test requires at least 5 pairs")
    d = a - b
    d = d[d != 0]
    if d.size == 0:
        raise DegenerateInputError("all pairwise differences are zero")
    n = d.size
    ranks = _midranks(np.abs(d))
    w = float(ranks[d > 0].sum())

    if n <= _MAX_EXACT_WILCOXON:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _signed_rank_distribution(doubled)
        total = counts.sum()
        w2 = int(round(2 * w))
        p_low = counts[: w2 + 1].sum() / total
        p_high = counts[w2:].sum() / total
        p = min(1.0, 2.0 * min(p_low, p_high))
    else:
        mu = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        tie_term = float(((tie_counts ** 3) - tie_counts).sum()) / 48.0
        sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie_term)
        z = (w - mu) / sigma
        p = math.erfc(abs(z) / math.sqrt(2.0))
    return w, p


def spearman(x, y) -> float:
    """Spearman rank correlation (Pearson correlation of mid-ranks)."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 3:
        raise ValueError("spearman requires equal-length 1-d samples, n >= 3")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise DegenerateInputError("correlation undefined for a constant sample")
    rx = _midranks(xs)
    ry = _midranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx @ ry) / math.sqrt((rx @ rx) * (ry @ ry)))


def _saturation_model(params: np.ndarray, x: np.ndarray) -> np.ndarray:
    a, b = params
    return b * (1.0 - np.exp(-a * x))


def fit_exponential_saturation(x, y) -> FitResult:
    """Fit y = b * (1 - exp(-a*x)) by damped Gauss-Newton least squares.

    Starts from b = max(y) and a = 1 / mean(positive x), then takes
    Gauss-Newton steps with halving until the residual-sum gradient is flat.
    Raises :class:`FitError` (carrying the last iterate and RSS) when the
    iteration fails to converge.
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 3:
        raise ValueError("fit requires equal-length 1-d samples, n >= 3")
    if np.any(xs < 0):
        raise ValueError("saturation fit requires non-negative x")
    n = xs.size
    dof = n - 2

    if np.all(ys == 0.0):
        return FitResult(
            model_kind="exponential_saturation",
            params=(0.0, 0.0),
            residual_std_error=0.0,
            degrees_of_freedom=dof,
            warnings=("steepness_unidentifiable",),
        )
    positive = xs[xs > 0]
    if positive.size == 0:
        raise ValueError("saturation fit requires at least one positive x")

    params = np.array([1.0 / positive.mean(), float(ys.max())])
    rss = float(((ys - _saturation_model(params, xs)) ** 2).sum())
    converged = False
    for _ in range(_GN_MAX_ITER):
        a, b = params
        decay = np.exp(-a * xs)
        residuals = ys - b * (1.0 - decay)
        jac = np.column_stack([b * xs * decay, 1.0 - decay])
        grad = jac.T @ residuals  # -0.5 * dRSS/dparams
        if np.linalg.norm(2.0 * grad) <= 1e-10 * (1.0 + rss):
            converged = True
            break
        step, *_ = np.linalg.lstsq(jac, residuals, rcond=None)
        alpha = 1.0
        while alpha > 1e-14:
            trial = params + alpha * step
            trial_rss = float(((ys - _saturation_model(trial, xs)) ** 2).sum())
            if trial_rss < rss:
                params, rss = trial, trial_rss
                break
            alpha *= 0.5
        else:
            if np.linalg.norm(2.0 * grad) <= 1e-6 * (1.0 + rss):
                converged = True
                break
            raise FitError(
                "step halving stalled before reaching a stationary point",
                params=tuple(params), rss=rss,
            )
    if not converged:
        raise FitError(
            f"no convergence after {_GN_MAX_ITER} iterations",
            params=tuple(params), rss=rss,
        )
    return FitResult(
        model_kind="exponential_saturation",
        params=(float(params[0]), float(params[1])),
        residual_std_error=math.sqrt(rss / dof) if dof > 0 else 0.0,
        degrees_of_freedom=dof,
    )


def _f_sf(f_stat: float, d1: int, d2: int) -> float:
    """Survival function of the F(d1, d2) distribution."""
    if f_stat <= 0:
        return 1.0
    return float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f_stat)))


def fit_polynomial_anova(
    x, y, max_order: int = 6, alpha: float = 0.05
) -> FitResult:
    """Polynomial fit with order chosen by ANOVA on nested models.

    Fits orders 1..max_order by least squares, then picks the lowest order k
    whose comparison against order k+1 is not significant at ``alpha`` --
    i.e. the extra term explains no additional variance.  Every comparison
    evaluated is recorded in the selection trace as (candidate order, F, p).
    Coefficients are reported lowest degree first.
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("fit requires equal-length 1-d samples")
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    n = xs.size
    if n <= max_order + 1:
        raise ValueError(f"need more than {max_order + 1} points, got {n}")

    design = np.vander(xs, max_order + 1, increasing=True)
    if np.linalg.cond(design) > 1e10:
        warnings.warn(
            "polynomial design matrix is ill-conditioned; "
            "coefficients computed via pseudo-inverse",
            stacklevel=2,
        )
    coeffs: dict[int, np.ndarray] = {}
    rss: dict[int, float] = {}
    for order in range(1, max_order + 1):
        sub = design[:, : order + 1]
        beta, *_ = np.linalg.lstsq(sub, ys, rcond=None)
        coeffs[order] = beta
        rss[order] = float(((ys - sub @ beta) ** 2).sum())

    tss = float(((ys - ys.mean()) ** 2).sum())
    floor = _ANOVA_IMPROVEMENT_FLOOR * max(tss, np.finfo(float).tiny)
    trace = []
    selected = max_order
    for order in range(1, max_order):
        d2 = n - (order + 2)
        improvement = max(rss[order] - rss[order + 1], 0.0)
        if improvement <= floor:
            f_stat, p_value = 0.0, 1.0
        else:
            f_stat = improvement / (max(rss[order + 1], floor) / d2)
            p_value = _f_sf(f_stat, 1, d2)
        trace.append((order + 1, f_stat, p_value))
        if p_value >= alpha and selected == max_order:
            selected = order

    dof = n - (selected + 1)
    return FitResult(
        model_kind="polynomial",
        params=tuple(float(c) for c in coeffs[selected]),
        residual_std_error=math.sqrt(rss[selected] / dof) if dof > 0 else 0.0,
        degrees_of_freedom=dof,
        order=selected,
        selection_trace=tuple(trace),
    )
