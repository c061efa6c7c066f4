"""Simplex-constrained weighted least squares for synthetic control weights.

The weight program is

    min_w  sqrt((X1 - X0 w)' V (X1 - X0 w))   s.t.  w >= 0,  sum(w) = 1

with V diagonal. :func:`solve_weights` uses a primal active-set method that
starts from the uniform vector and solves each equality-constrained
subproblem exactly, so it terminates with a KKT point rather than an
approximate iterate. :func:`brute_force_weights` enumerates a simplex lattice
and is kept deliberately naive so it can serve as an independent check.
"""

from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import helmert

from .errors import BadGridStep, DimensionMismatch, NonConvergenceWarning, PoolTooLarge

__all__ = [
    "VWeights",
    "WeightSolution",
    "solve_weights",
    "brute_force_weights",
    "refine_lattice",
    "simplex_lattice",
    "squared_objective",
    "optimize_v_nested",
]

CLAMP = 1e-12
MAX_ITER = 100_000
MAX_BRUTE_FORCE_POOL = 6


@dataclass(frozen=True)
class VWeights:
    """Diagonal predictor weights, non-negative and summing to one."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.array(self.diag, dtype=float).reshape(-1)
        if d.size == 0:
            raise ValueError("V must have at least one entry")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("V entries must be finite and non-negative")
        if abs(d.sum() - 1.0) > 1e-12:
            raise ValueError(f"V entries must sum to 1, got {d.sum()!r}")
        d.flags.writeable = False
        object.__setattr__(self, "diag", d)

    @classmethod
    def uniform(cls, n: int) -> "VWeights":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, raw) -> "VWeights":
        raw = np.asarray(raw, dtype=float)
        total = raw.sum()
        if not total > 0:
            raise ValueError("cannot normalize an all-zero V")
        d = raw / total
        # absorb rounding so the sum is within 1e-12 of one
        d[np.argmax(d)] += 1.0 - d.sum()
        return cls(d)

    def __len__(self) -> int:
        return self.diag.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VWeights):
            return NotImplemented
        return np.array_equal(self.diag, other.diag)

    __hash__ = None


@dataclass(frozen=True)
class WeightSolution:
    w: np.ndarray
    objective: float
    iterations: int
    converged: bool

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    @property
    def squared_objective(self) -> float:
        return self.objective**2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightSolution):
            return NotImplemented
        return (
            np.array_equal(self.w, other.w)
            and self.objective == other.objective
            and self.iterations == other.iterations
            and self.converged == other.converged
        )

    __hash__ = None


def _check_inputs(x1, x0, v) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x1 = np.asarray(x1, dtype=float).reshape(-1)
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim == 1:
        x0 = x0.reshape(-1, 1)
    if x0.ndim != 2 or x0.shape[1] < 1:
        raise DimensionMismatch("X0 must be a matrix with at least one column")
    if x0.shape[0] != x1.size:
        raise DimensionMismatch(f"X1 has {x1.size} rows but X0 has {x0.shape[0]}")
    diag = v.diag if isinstance(v, VWeights) else np.asarray(v, dtype=float).reshape(-1)
    if diag.size != x1.size:
        raise DimensionMismatch(f"V has {diag.size} entries but there are {x1.size} predictors")
    return x1, x0, diag


def squared_objective(x1, x0, v, w) -> float | np.ndarray:
    """(X1 - X0 w)' V (X1 - X0 w); ``w`` may be a (J,) vector or a (n, J) stack."""
    x1, x0, diag = _check_inputs(x1, x0, v)
    w = np.asarray(w, dtype=float)
    resid = x1[:, None] - x0 @ np.atleast_2d(w).T
    out = np.einsum("t,tn,tn->n", diag, resid, resid)
    return float(out[0]) if w.ndim == 1 else out


def _finalize(w: np.ndarray) -> np.ndarray:
    w = np.where(w < CLAMP, 0.0, w)
    return w / w.sum()


def _face_minimizer(p: np.ndarray, free: np.ndarray) -> np.ndarray:
    """Minimizer of ||P_F z||^2 subject to sum(z) = 1 on the free columns.

    Parametrizes the affine constraint as z = 1/k + N y with N an orthonormal
    basis of {sum = 0} and takes the minimum-norm least-squares y.
    """
    pf = p[:, free]
    k = free.size
    z0 = np.full(k, 1.0 / k)
    if k == 1:
        return z0
    basis = helmert(k).T  # (k, k-1), columns orthonormal and orthogonal to ones
    y, *_ = np.linalg.lstsq(pf @ basis, -(pf @ z0), rcond=None)
    return z0 + basis @ y


def solve_weights(
    x1,
    x0,
    v: VWeights | None = None,
    tol: float = 1e-10,
    max_iter: int = MAX_ITER,
) -> WeightSolution:
    """Simplex-constrained weights minimizing the V-weighted pre-period distance.

    Deterministic: starts at the uniform vector; among candidate indices to
    release or block, the lowest donor index wins. Weights below 1e-12 are
    clamped to zero and the vector renormalized.
    """
    if v is None:
        v = VWeights.uniform(np.asarray(x1).size)
    x1, x0, diag = _check_inputs(x1, x0, v)
    if not tol > 0:
        raise ValueError("tol must be positive")
    n_donors = x0.shape[1]
    if n_donors == 1:
        w = np.ones(1)
        return WeightSolution(w, math.sqrt(squared_objective(x1, x0, diag, w)), 0, True)

    # Differences to the treated column remove any common per-period shift;
    # the max-abs normalization makes every tolerance scale free.
    p = np.sqrt(diag)[:, None] * (x0 - x1[:, None])
    scale = np.max(np.abs(p))
    if scale > 0:
        p = p / scale

    w = np.full(n_donors, 1.0 / n_donors)
    free = np.ones(n_donors, dtype=bool)
    converged = False
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        idx = np.flatnonzero(free)
        z = _face_minimizer(p, idx)
        if np.all(z >= 0):
            w = np.zeros(n_donors)
            w[idx] = z
            resid = p @ w
            grad = p.T @ resid
            level = float(resid @ resid)  # equals the multiplier of sum(w) = 1
            slack = np.where(free, np.inf, grad - level)
            release = int(np.argmin(slack))
            if slack[release] >= -tol:
                converged = True
                break
            free[release] = True
            continue
        # Step from w toward z until the first weight hits zero.
        cur = w[idx]
        neg = z < 0
        ratios = np.full(idx.size, np.inf)
        ratios[neg] = cur[neg] / (cur[neg] - z[neg])
        block = int(np.argmin(ratios))
        alpha = ratios[block]
        new = cur + alpha * (z - cur)
        new[block] = 0.0
        new = np.maximum(new, 0.0)
        w = np.zeros(n_donors)
        w[idx] = new / new.sum()
        free[idx[block]] = False
        # Any other coordinate driven to zero leaves the face as well.
        free[idx[(new <= 0.0)]] = False

    if not converged:
        warnings.warn(
            f"weight solver stopped after {max_iter} iterations without meeting the stopping rule",
            NonConvergenceWarning,
            stacklevel=2,
        )
    w = _finalize(w)
    return WeightSolution(w, math.sqrt(squared_objective(x1, x0, diag, w)), iterations, converged)


def _lattice_size(n_donors: int, grid_step: float) -> int:
    if not grid_step > 0:
        raise BadGridStep("grid_step must be positive")
    n = round(1.0 / grid_step)
    if n < 1 or abs(n * grid_step - 1.0) > 1e-9:
        raise BadGridStep(f"grid_step {grid_step} does not divide 1 evenly")
    return n


@functools.lru_cache(maxsize=256)
def _compositions(parts: int, total: int) -> np.ndarray:
    """Integer vectors of length ``parts`` summing to ``total``, ascending lexicographic."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(parts - 1, total - first)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    out = np.vstack(blocks)
    out.flags.writeable = False
    return out


def simplex_lattice(n_donors: int, grid_step: float) -> np.ndarray:
    """All weight vectors with entries in multiples of grid_step summing to one.

    Rows come out in ascending lexicographic order.
    """
    n = _lattice_size(n_donors, grid_step)
    return _compositions(n_donors, n) / n


def brute_force_weights(x1, x0, v: VWeights | None = None, grid_step: float = 0.01) -> WeightSolution:
    """Exhaustive search over the simplex lattice with spacing ``grid_step``.

    Ties go to the lexicographically smallest weight vector.
    """
    if v is None:
        v = VWeights.uniform(np.asarray(x1).size)
    x1, x0, diag = _check_inputs(x1, x0, v)
    n_donors = x0.shape[1]
    if n_donors > MAX_BRUTE_FORCE_POOL:
        raise PoolTooLarge(f"brute force supports at most {MAX_BRUTE_FORCE_POOL} donors, got {n_donors}")
    grid = simplex_lattice(n_donors, grid_step)
    best_val, best_w = math.inf, None
    for chunk in range(0, grid.shape[0], 200_000):
        block = grid[chunk : chunk + 200_000]
        vals = squared_objective(x1, x0, diag, block)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_w = float(vals[i]), block[i]
    return WeightSolution(best_w, math.sqrt(best_val), grid.shape[0], True)


def refine_lattice(
    x1,
    x0,
    v: VWeights | None = None,
    start=None,
    start_step: float = 0.01,
    final_step: float = 1e-4,
) -> WeightSolution:
    """Local lattice search polishing a coarse lattice optimum.

    At each level every move of the form ``step * d`` with d in {-1, 0, 1}^J,
    sum(d) = 0, is tried until none improves; the step then shrinks tenfold.
    """
    if v is None:
        v = VWeights.uniform(np.asarray(x1).size)
    x1, x0, diag = _check_inputs(x1, x0, v)
    n_donors = x0.shape[1]
    if start is None:
        start = brute_force_weights(x1, x0, diag, start_step).w
    w = np.array(start, dtype=float)
    moves = np.array(
        [d for d in itertools.product((-1, 0, 1), repeat=n_donors) if sum(d) == 0 and any(d)],
        dtype=float,
    )
    best = squared_objective(x1, x0, diag, w)
    step = start_step
    evaluations = 0
    while step >= final_step * (1 - 1e-9):
        while True:
            cand = w + step * moves
            cand = cand[np.all(cand >= -1e-15, axis=1)]
            if cand.size == 0:
                break
            cand = np.maximum(cand, 0.0)
            vals = squared_objective(x1, x0, diag, cand)
            evaluations += len(vals)
            i = int(np.argmin(vals))
            if vals[i] < best:
                best, w = float(vals[i]), cand[i]
            else:
                break
        step /= 10
    return WeightSolution(w, math.sqrt(best), evaluations, True)


def _pre_mspe(x1, x0, w) -> float:
    r = x1 - x0 @ w
    return float(np.mean(r * r))


def optimize_v_nested(
    study,
    candidate_grid: int = 21,
    validation_periods: int = 0,
    tol: float | None = None,
    max_sweeps: int = 50,
) -> VWeights:
    """Search diagonal V by the pre-treatment MSPE of the weights it induces.

    Coordinate search over unnormalized V entries on ``candidate_grid`` levels
    in [0, 1], starting from uniform V. With ``validation_periods = 0`` the
    criterion is the MSPE over the whole pre-period. With k > 0 the last k
    pre-periods form a holdout: V weights only the earlier (training) periods,
    weights are fit on them and the criterion is the holdout MSPE. Validation
    periods get zero weight in the returned V.
    """
    from .panel import design_matrices

    x1, x0 = design_matrices(study)
    t_pre = x1.size
    if tol is None:
        tol = study.spec.solver_tol
    if validation_periods < 0 or validation_periods > t_pre - 1:
        raise ValueError("validation_periods must leave at least one training period")
    n_train = t_pre - validation_periods
    if n_train == 1:
        return VWeights.normalized(np.r_[1.0, np.zeros(validation_periods)])
    if candidate_grid < 2:
        raise ValueError("candidate_grid must be at least 2")

    train_x1, train_x0 = x1[:n_train], x0[:n_train]
    if validation_periods:
        eval_x1, eval_x0 = x1[n_train:], x0[n_train:]
    else:
        eval_x1, eval_x0 = x1, x0
    max_iter = study.spec.max_iter

    def criterion(raw: np.ndarray) -> float:
        v = VWeights.normalized(raw)
        sol = solve_weights(train_x1, train_x0, v, tol=tol, max_iter=max_iter)
        return _pre_mspe(eval_x1, eval_x0, sol.w)

    levels = np.linspace(0.0, 1.0, candidate_grid)
    raw = np.ones(n_train)
    best = criterion(raw)
    for _ in range(max_sweeps):
        improved = False
        for t in range(n_train):
            for level in levels:
                if level == raw[t]:
                    continue
                trial = raw.copy()
                trial[t] = level
                if not trial.any():
                    continue
                val = criterion(trial)
                if val < best - 1e-15 * max(1.0, abs(best)):
                    best, raw, improved = val, trial, True
        if not improved:
            break
    return VWeights.normalized(np.r_[raw, np.zeros(validation_periods)])
