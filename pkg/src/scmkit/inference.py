"""In-space placebo permutation inference.

Each donor is relabeled as treated and fit against the remaining donors. The
treated unit's post/pre RMSPE ratio is then ranked against the placebo
ratios; the p-value is the share of units whose ratio is at least as large.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import EmptyDonorPool, UnknownUnit
from .estimator import SCFit, estimate
from .panel import ValidatedStudy

__all__ = [
    "InferenceReport",
    "in_space_placebos",
    "filter_by_mspe",
    "rmspe_ratio_table",
    "permutation_p_value",
    "p_value_counts",
    "run_inference",
]


@dataclass(frozen=True)
class InferenceReport:
    treated_fit: SCFit
    placebo_fits: tuple[SCFit, ...]
    filtered_out: tuple[str, ...]
    ratio_table: tuple[tuple[str, float], ...]
    p_count: int
    n_units: int
    mspe_cutoff: float
    placebo_pool_includes_treated: bool

    @property
    def p_value(self) -> Fraction:
        return Fraction(self.p_count, self.n_units)

    @property
    def p_value_float(self) -> float:
        return self.p_count / self.n_units

    def rank_of(self, unit: str) -> int:
        return next(i for i, (u, _) in enumerate(self.ratio_table, start=1) if u == unit)


def _placebo_fit(study: ValidatedStudy, unit: str, include_treated: bool) -> SCFit:
    pool = [u for u in study.donors if u != unit]
    if include_treated:
        pool.append(study.treated)
    if not pool:
        raise EmptyDonorPool(f"placebo run for {unit!r} has an empty donor pool", unit=unit)
    try:
        placebo = study.with_spec(treated=unit, donors=tuple(pool))
    except EmptyDonorPool as exc:
        raise EmptyDonorPool(f"placebo run for {unit!r}: {exc}", unit=unit) from exc
    return estimate(placebo)


def in_space_placebos(
    study: ValidatedStudy,
    include_treated: bool | None = None,
    jobs: int = 1,
) -> list[SCFit]:
    """Fit every donor as a placebo-treated unit, in donor order.

    By default the actually treated unit is excluded from placebo donor pools
    (its post-period outcomes carry the treatment). ``jobs > 1`` runs the
    independent fits on a thread pool; output order never depends on it.
    """
    if include_treated is None:
        include_treated = study.spec.placebo_pool_includes_treated
    donors = study.donors
    if jobs > 1 and len(donors) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda u: _placebo_fit(study, u, include_treated), donors))
    return [_placebo_fit(study, u, include_treated) for u in donors]


def filter_by_mspe(
    fits: Sequence[SCFit],
    treated_fit: SCFit,
    cutoff: float = 10.0,
) -> tuple[list[SCFit], list[SCFit]]:
    """Split placebo fits by pre-period fit quality relative to the treated unit.

    A fit is excluded when its pre-MSPE is at least ``cutoff`` times the
    treated pre-MSPE. Returns (kept, excluded); the treated fit is not part of
    either list and is always kept by callers.
    """
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    if math.isinf(cutoff):
        return list(fits), []
    bound = cutoff * treated_fit.pre_mspe
    kept, excluded = [], []
    for f in fits:
        (excluded if f.pre_mspe >= bound else kept).append(f)
    return kept, excluded


def rmspe_ratio_table(treated_fit: SCFit, placebo_fits: Sequence[SCFit]) -> list[tuple[str, float]]:
    """(unit, ratio) for every unit, largest ratio first, ties by unit id."""
    rows = [(treated_fit.unit, treated_fit.ratio)] + [(f.unit, f.ratio) for f in placebo_fits]
    units = [u for u, _ in rows]
    if len(set(units)) != len(units):
        raise ValueError("duplicate unit in ratio table")
    return sorted(rows, key=lambda r: (-r[1], r[0]))


def permutation_p_value(ratio_table: Sequence[tuple[str, float]], treated: str) -> Fraction:
    """Share of units whose ratio is >= the treated unit's ratio, as an exact fraction.

    ``Fraction`` reduces k/N; :func:`p_value_counts` returns the raw pair.
    """
    k, n = p_value_counts(ratio_table, treated)
    return Fraction(k, n)


def p_value_counts(ratio_table: Sequence[tuple[str, float]], treated: str) -> tuple[int, int]:
    ratios = dict(ratio_table)
    if treated not in ratios:
        raise UnknownUnit(f"{treated!r} not in ratio table")
    r1 = ratios[treated]
    return sum(1 for _, r in ratio_table if r >= r1), len(ratio_table)


def run_inference(
    study: ValidatedStudy,
    treated_fit: SCFit | None = None,
    include_treated: bool | None = None,
    jobs: int = 1,
) -> InferenceReport:
    """Placebo fits, MSPE filtering for display, ratio ranking and p-value.

    The p-value is computed over all units; the MSPE cutoff only decides which
    placebo gap paths are flagged as filtered.
    """
    if include_treated is None:
        include_treated = study.spec.placebo_pool_includes_treated
    if treated_fit is None:
        treated_fit = estimate(study)
    placebos = in_space_placebos(study, include_treated=include_treated, jobs=jobs)
    _, excluded = filter_by_mspe(placebos, treated_fit, study.spec.mspe_cutoff)
    table = rmspe_ratio_table(treated_fit, placebos)
    k, n = p_value_counts(table, study.treated)
    return InferenceReport(
        treated_fit=treated_fit,
        placebo_fits=tuple(placebos),
        filtered_out=tuple(f.unit for f in excluded),
        ratio_table=tuple(table),
        p_count=k,
        n_units=n,
        mspe_cutoff=study.spec.mspe_cutoff,
        placebo_pool_includes_treated=include_treated,
    )
