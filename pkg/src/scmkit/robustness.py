"""In-time placebo and leave-one-out sensitivity checks."""

from __future__ import annotations

from dataclasses import replace

from .errors import EmptyDonorPool, PlaceboTooLate, TooFewPrePeriods
from .estimator import SCFit, estimate
from .panel import ValidatedStudy, validate

__all__ = ["in_time_placebo_study", "in_time_placebo", "leave_one_out", "SUPPORT_THRESHOLD"]

SUPPORT_THRESHOLD = 1e-6


def in_time_placebo_study(study: ValidatedStudy, placebo_t0: int) -> ValidatedStudy:
    """The study truncated at the actual t0 and re-timed to ``placebo_t0``.

    Periods after the real t0 are never read, so treated outcomes cannot leak
    into the placebo window (placebo_t0, t0].
    """
    t0 = study.t0
    if placebo_t0 >= t0:
        raise PlaceboTooLate(f"placebo t0 {placebo_t0} must precede the actual t0 {t0}")
    truncated = study.dataset.subset(end=t0)
    n_pre = sum(1 for t in truncated.times if t <= placebo_t0)
    if n_pre < 2:
        raise TooFewPrePeriods(f"placebo t0 {placebo_t0} leaves {n_pre} pre-period(s); need at least 2")
    spec = replace(study.spec, t0=placebo_t0, placebo_t0=None, start=None, end=None)
    return validate(truncated, spec)


def in_time_placebo(study: ValidatedStudy, placebo_t0: int) -> SCFit:
    """Refit with the treatment date moved back to ``placebo_t0``."""
    return estimate(in_time_placebo_study(study, placebo_t0))


def leave_one_out(study: ValidatedStudy, base: SCFit) -> list[tuple[str, SCFit]]:
    """Refit once per donor in the support of ``base``, with that donor removed.

    Donors with base weight <= 1e-6 are skipped; output follows donor order.
    """
    donors = study.donors
    if len(donors) < 2:
        raise EmptyDonorPool(f"cannot exclude the only donor {donors[0]!r}", unit=donors[0])
    out = []
    for unit, weight in zip(base.donors, base.weights.w):
        if weight <= SUPPORT_THRESHOLD:
            continue
        pool = tuple(d for d in donors if d != unit)
        out.append((unit, estimate(study.with_spec(donors=pool))))
    return out
