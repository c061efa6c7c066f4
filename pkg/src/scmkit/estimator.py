"""Synthetic paths, gap series and fit statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyRange, UnknownDonor
from .panel import ValidatedStudy, design_matrices, outcome_matrices
from .solver import VWeights, WeightSolution, optimize_v_nested, solve_weights

__all__ = ["SCFit", "fit", "rmspe", "rmspe_ratio", "single_comparator_fit", "estimate", "resolve_v"]

# Below this an RMSPE counts as an exact fit.
ZERO_RMSPE = 1e-12


@dataclass(frozen=True)
class SCFit:
    """Fit of one unit against a weighted donor combination.

    ``gaps`` covers every study period: pre-period entries are fit residuals,
    post-period entries are the effect estimates.
    """

    unit: str
    weights: WeightSolution
    donors: tuple[str, ...]
    times: tuple[int, ...]
    t0: int
    actual: np.ndarray
    synthetic: np.ndarray
    gaps: np.ndarray
    pre_mspe: float
    post_mspe: float
    pre_rmspe: float
    post_rmspe: float
    ratio: float

    @property
    def n_pre(self) -> int:
        return sum(1 for t in self.times if t <= self.t0)

    def weight_of(self, donor: str) -> float:
        return float(self.weights.w[self.donors.index(donor)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SCFit):
            return NotImplemented
        return (
            self.unit == other.unit
            and self.weights == other.weights
            and self.donors == other.donors
            and self.times == other.times
            and self.t0 == other.t0
            and np.array_equal(self.actual, other.actual)
            and np.array_equal(self.synthetic, other.synthetic)
            and np.array_equal(self.gaps, other.gaps)
            and (self.pre_mspe, self.post_mspe, self.pre_rmspe, self.post_rmspe, self.ratio)
            == (other.pre_mspe, other.post_mspe, other.pre_rmspe, other.post_rmspe, other.ratio)
        )

    __hash__ = None


def _mspe(gaps: np.ndarray, period_range: range) -> float:
    if len(period_range) == 0:
        raise EmptyRange("period range is empty")
    g = np.asarray(gaps, dtype=float)[period_range.start : period_range.stop]
    return float(np.mean(g * g))


def rmspe(gaps, period_range: range | None = None) -> float:
    """Root mean squared gap over ``period_range`` (all entries when omitted)."""
    gaps = np.asarray(gaps, dtype=float)
    if period_range is None:
        period_range = range(gaps.size)
    return math.sqrt(_mspe(gaps, period_range))


def rmspe_ratio(pre: float, post: float) -> float:
    """Post/pre RMSPE with the exact-fit conventions: +inf, or 1 when both vanish."""
    if pre >= ZERO_RMSPE:
        return post / pre
    if post >= ZERO_RMSPE:
        return math.inf
    return 1.0


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def fit(study: ValidatedStudy, weights: WeightSolution) -> SCFit:
    """Apply donor weights to every study period and summarize the gaps."""
    y1, y0 = outcome_matrices(study)
    if weights.w.size != y0.shape[1]:
        raise DimensionMismatch(f"{weights.w.size} weights for {y0.shape[1]} donors")
    synthetic = y0 @ weights.w
    gaps = y1 - synthetic
    pre_mspe = _mspe(gaps, study.pre_periods)
    post_mspe = _mspe(gaps, study.post_periods)
    pre, post = math.sqrt(pre_mspe), math.sqrt(post_mspe)
    return SCFit(
        unit=study.treated,
        weights=weights,
        donors=study.donors,
        times=study.times,
        t0=study.t0,
        actual=_readonly(y1),
        synthetic=_readonly(synthetic),
        gaps=_readonly(gaps),
        pre_mspe=pre_mspe,
        post_mspe=post_mspe,
        pre_rmspe=pre,
        post_rmspe=post,
        ratio=rmspe_ratio(pre, post),
    )


def single_comparator_fit(study: ValidatedStudy, donor: str) -> SCFit:
    """Compare the treated unit with one donor alone (all weight on ``donor``)."""
    donors = study.donors
    if donor not in donors:
        raise UnknownDonor(f"{donor!r} is not in the resolved donor pool {list(donors)}")
    w = np.zeros(len(donors))
    w[donors.index(donor)] = 1.0
    x1, x0 = design_matrices(study)
    objective = math.sqrt(float(np.mean((x1 - x0 @ w) ** 2)))
    return fit(study, WeightSolution(w, objective, 0, True))


def resolve_v(study: ValidatedStudy, candidate_grid: int = 21) -> VWeights:
    if study.spec.v_mode == "nested":
        return optimize_v_nested(study, candidate_grid)
    return VWeights.uniform(len(study.pre_periods))


def estimate(study: ValidatedStudy, v: VWeights | None = None) -> SCFit:
    """Solve for weights under the study's V mode and fit all periods."""
    x1, x0 = design_matrices(study)
    if v is None:
        v = resolve_v(study)
    sol = solve_weights(x1, x0, v, tol=study.spec.solver_tol, max_iter=study.spec.max_iter)
    return fit(study, sol)
