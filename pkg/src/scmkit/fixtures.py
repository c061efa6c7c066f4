"""Deterministic synthetic panels for tests and demos.

Random draws use NumPy's ``PCG64`` bit generator seeded through
``SeedSequence(seed)`` (``numpy.random.default_rng(seed)``), drawn in this
fixed order for :func:`gen_factor_panel`:

1. time effects: ``normal(0, 1, T)``, cumulatively summed (a random walk);
2. factors: ``normal(0, 1, (T, F))``;
3. donor loadings: ``uniform(0, 1, (J, F))``;
4. treated mixing weights: ``dirichlet(ones(J))``;
5. noise: ``normal(0, 1, (J + 1, T))`` scaled by ``noise_sd`` (drawn even
   when ``noise_sd`` is 0, so the stream does not depend on it).

Treated is always the first unit, named ``"treated"``; donors are ``d01``,
``d02``, ... Times run from ``start`` in steps of one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadDimensions, InfeasibleWeights
from .panel import PanelDataset

__all__ = ["FactorPanel", "gen_factor_panel", "gen_convex_hull_panel", "donor_names", "TREATED"]

TREATED = "treated"


def donor_names(n: int) -> list[str]:
    width = max(2, len(str(n)))
    return [f"d{j + 1:0{width}d}" for j in range(n)]


@dataclass(frozen=True)
class FactorPanel:
    dataset: PanelDataset
    weights: np.ndarray  # convex combination generating the treated loadings
    t0: int


def gen_factor_panel(
    seed: int,
    J: int,
    T: int,
    F: int,
    noise_sd: float,
    effect,
    start: int = 2000,
) -> FactorPanel:
    """Panel from Y_jt = delta_t + lambda_t' mu_j + eps_jt.

    The treated unit's loadings are a Dirichlet mix of donor loadings, and
    ``effect`` (one entry per post period) is added to its last periods.
    """
    effect = np.atleast_1d(np.asarray(effect, dtype=float))
    if J < 2 or T < 4 or F < 1:
        raise BadDimensions(f"need J >= 2, T >= 4, F >= 1; got J={J}, T={T}, F={F}")
    if not noise_sd >= 0:
        raise BadDimensions("noise_sd must be non-negative")
    n_post = effect.size
    if n_post < 1 or T - n_post < 2:
        raise BadDimensions(f"effect length {n_post} must leave >= 2 pre periods out of {T}")

    rng = np.random.default_rng(seed)
    delta = np.cumsum(rng.normal(0.0, 1.0, T))
    factors = rng.normal(0.0, 1.0, (T, F))
    loadings = rng.uniform(0.0, 1.0, (J, F))
    weights = rng.dirichlet(np.ones(J))
    noise = rng.normal(0.0, 1.0, (J + 1, T)) * noise_sd

    donors = delta[None, :] + loadings @ factors.T
    treated = delta + factors @ (weights @ loadings)
    treated[T - n_post :] += effect
    grid = np.vstack([treated, donors]) + noise
    times = list(range(start, start + T))
    ds = PanelDataset([TREATED, *donor_names(J)], times, grid, outcome_name="factor_panel")
    return FactorPanel(ds, weights, times[T - n_post - 1])


def gen_convex_hull_panel(weights, donor_paths, effect, start: int = 2000) -> PanelDataset:
    """Treated path equal to ``donor_paths @ weights`` plus ``effect`` post-t0.

    ``donor_paths`` is (T, J); the last ``len(effect)`` periods are post
    treatment, so t0 = start + T - len(effect) - 1.
    """
    w = np.asarray(weights, dtype=float).reshape(-1)
    paths = np.asarray(donor_paths, dtype=float)
    effect = np.atleast_1d(np.asarray(effect, dtype=float))
    if paths.ndim != 2 or paths.shape[1] != w.size:
        raise BadDimensions(f"donor_paths must be (T, {w.size}), got {paths.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise InfeasibleWeights(f"weights must be non-negative and sum to 1, got {w.tolist()}")
    n_times = paths.shape[0]
    if effect.size < 1 or n_times - effect.size < 2:
        raise BadDimensions(f"effect length {effect.size} must leave >= 2 pre periods out of {n_times}")
    treated = paths @ w
    treated[n_times - effect.size :] += effect
    grid = np.vstack([treated, paths.T])
    times = list(range(start, start + n_times))
    return PanelDataset([TREATED, *donor_names(w.size)], times, grid, outcome_name="convex_hull_panel")
