import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scmkit.errors import DimensionMismatch, EmptyRange, UnknownDonor
from scmkit.estimator import estimate, fit, rmspe, rmspe_ratio, single_comparator_fit
from scmkit.fixtures import gen_convex_hull_panel
from scmkit.panel import PanelDataset, StudySpec, validate
from scmkit.solver import WeightSolution


def study_from(grid, t0, units=None, start=1):
    grid = np.asarray(grid, dtype=float)
    units = units or ["T"] + [f"D{j}" for j in range(1, grid.shape[0])]
    times = list(range(start, start + grid.shape[1]))
    return validate(PanelDataset(units, times, grid), StudySpec(units[0], t0, tuple(units[1:])))


def random_study(seed, n_donors=4, n_times=8, t0=5):
    rng = np.random.default_rng(seed)
    return study_from(rng.normal(size=(n_donors + 1, n_times)), t0)


def weights(w):
    return WeightSolution(np.asarray(w, dtype=float), 0.0, 0, True)


class TestRmspe:
    def test_arithmetic(self):
        assert rmspe([3.0, 4.0], range(2)) == pytest.approx(math.sqrt(12.5), abs=1e-15)
        assert rmspe([3.0, 4.0]) == pytest.approx(3.5355339059327378)

    def test_zero(self):
        assert rmspe(np.zeros(5), range(1, 4)) == 0.0

    def test_empty(self):
        with pytest.raises(EmptyRange):
            rmspe([1.0, 2.0], range(1, 1))

    @given(values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30), data=st.data())
    @settings(max_examples=200, deadline=None)
    def test_two_pass_recomputation(self, values, data):
        lo = data.draw(st.integers(0, len(values) - 1))
        hi = data.draw(st.integers(lo + 1, len(values)))
        # independent recomputation: plain Python, mean first then root
        total = 0.0
        for v in values[lo:hi]:
            total += v * v
        expected = math.sqrt(total / (hi - lo))
        assert rmspe(values, range(lo, hi)) == pytest.approx(expected, rel=1e-12, abs=1e-12)


class TestRatio:
    def test_regular(self):
        assert rmspe_ratio(2.0, 3.0) == 1.5

    def test_perfect_pre_fit(self):
        assert rmspe_ratio(1e-13, 0.5) == math.inf

    def test_both_zero(self):
        assert rmspe_ratio(0.0, 0.0) == 1.0
        assert rmspe_ratio(5e-13, 5e-13) == 1.0


class TestFit:
    def test_degenerate_weights(self):
        study = random_study(0)
        f = fit(study, weights([0, 1, 0, 0]))
        b = study.dataset.series("D2")
        np.testing.assert_array_equal(f.synthetic, b)
        np.testing.assert_array_equal(f.gaps, study.dataset.series("T") - b)

    def test_exact_hull_infinite_ratio(self):
        rng = np.random.default_rng(1)
        paths = rng.normal(size=(8, 3))
        ds = gen_convex_hull_panel([0.2, 0.5, 0.3], paths, [1.0, 2.0, 3.0])
        study = validate(ds, StudySpec("treated", 2004, ds.units[1:]))
        f = estimate(study)
        assert np.all(np.abs(f.gaps[:5]) <= 1e-9)
        assert f.ratio == math.inf

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            fit(random_study(0), weights([0.5, 0.5]))

    def test_gap_identity_and_envelope(self):
        for seed in range(20):
            study = random_study(seed)
            f = estimate(study)
            np.testing.assert_array_equal(f.gaps, f.actual - f.synthetic)
            y0 = np.column_stack([study.dataset.series(d) for d in study.donors])
            slack = 1e-12 * np.abs(y0).max()
            assert np.all(f.synthetic >= y0.min(axis=1) - slack)
            assert np.all(f.synthetic <= y0.max(axis=1) + slack)

    def test_rmspe_fields(self):
        study = random_study(3)
        f = estimate(study)
        assert f.pre_rmspe == math.sqrt(f.pre_mspe)
        assert f.pre_rmspe == pytest.approx(rmspe(f.gaps, study.pre_periods), rel=1e-15)
        assert f.post_rmspe == pytest.approx(rmspe(f.gaps, study.post_periods), rel=1e-15)
        assert f.ratio == f.post_rmspe / f.pre_rmspe

    def test_linearity(self):
        study = random_study(4)
        w1, w2 = np.array([0.1, 0.2, 0.3, 0.4]), np.array([0.7, 0.0, 0.0, 0.3])
        f1, f2 = fit(study, weights(w1)), fit(study, weights(w2))
        mid = fit(study, weights((w1 + w2) / 2))
        np.testing.assert_allclose(mid.gaps, (f1.gaps + f2.gaps) / 2, atol=1e-12)

    def test_ratio_monotone_in_post_deviation(self):
        study = random_study(5)
        base = estimate(study)
        w = base.weights
        ratios = []
        for k in (1.0, 1.5, 3.0, 10.0):
            grid = study.dataset.values
            post = slice(study.post_periods.start, study.post_periods.stop)
            grid[0, post] = base.synthetic[post] + k * base.gaps[post]
            scaled = validate(PanelDataset(study.dataset.units, study.dataset.times, grid), study.spec)
            ratios.append(fit(scaled, w).ratio)
        assert ratios == sorted(ratios)

    def test_donor_permutation(self):
        study = random_study(6)
        w = np.array([0.1, 0.2, 0.3, 0.4])
        base = fit(study, weights(w))
        order = [2, 0, 3, 1]
        ds = study.dataset
        units = [ds.units[0]] + [study.donors[i] for i in order]
        grid = np.vstack([ds.series(u) for u in units])
        pstudy = validate(PanelDataset(units, ds.times, grid), study.spec)
        pfit = fit(pstudy, weights(w[order]))
        np.testing.assert_allclose(pfit.synthetic, base.synthetic, rtol=1e-14, atol=1e-14)
        assert pfit.ratio == pytest.approx(base.ratio, rel=1e-12)


class TestSingleComparator:
    def test_matches_indicator_fit(self):
        study = random_study(7)
        sc = single_comparator_fit(study, "D3")
        e = np.array([0.0, 0.0, 1.0, 0.0])
        assert sc == fit(study, WeightSolution(e, sc.weights.objective, 0, True))
        assert sc.weights.objective == pytest.approx(sc.pre_rmspe, rel=1e-15)

    def test_unknown_donor(self):
        with pytest.raises(UnknownDonor):
            single_comparator_fit(random_study(0), "NOPE")

    def test_self_comparison_zero_gaps(self):
        rng = np.random.default_rng(8)
        row = rng.normal(size=6)
        grid = np.vstack([row, row, rng.normal(size=6)])
        study = study_from(grid, 3, units=["X", "X_copy", "Other"])
        f = single_comparator_fit(study, "X_copy")
        assert np.all(f.gaps == 0.0)
        assert f.ratio == 1.0
