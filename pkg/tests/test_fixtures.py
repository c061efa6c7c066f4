import numpy as np
import pytest

from scmkit.errors import BadDimensions, InfeasibleWeights
from scmkit.estimator import estimate
from scmkit.fixtures import gen_convex_hull_panel, gen_factor_panel
from scmkit.inference import run_inference
from scmkit.panel import StudySpec, design_matrices, validate


def hull_study(ds, n_post):
    return validate(ds, StudySpec("treated", ds.times[-n_post - 1], ds.units[1:]))


class TestFactorPanel:
    def test_deterministic(self):
        a = gen_factor_panel(7, 4, 12, 2, 0.3, [1.0, 2.0])
        b = gen_factor_panel(7, 4, 12, 2, 0.3, [1.0, 2.0])
        assert a.dataset == b.dataset
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_seed_changes_panel(self):
        assert gen_factor_panel(1, 3, 10, 1, 0.1, [0.0]).dataset != gen_factor_panel(2, 3, 10, 1, 0.1, [0.0]).dataset

    def test_shape(self):
        fp = gen_factor_panel(0, 3, 10, 2, 0.0, [0.0, 0.0])
        assert fp.dataset.shape == (4, 10)
        assert fp.dataset.units[0] == "treated"
        assert fp.t0 == fp.dataset.times[7]

    def test_noise_sd_does_not_shift_stream(self):
        clean = gen_factor_panel(5, 3, 8, 1, 0.0, [0.0])
        noisy = gen_factor_panel(5, 3, 8, 1, 1e-9, [0.0])
        np.testing.assert_allclose(clean.dataset.values, noisy.dataset.values, atol=1e-7)
        np.testing.assert_array_equal(clean.weights, noisy.weights)

    @pytest.mark.parametrize("args", [(1, 10, 1), (3, 3, 1), (3, 10, 0)])
    def test_bad_dimensions(self, args):
        J, T, F = args
        with pytest.raises(BadDimensions):
            gen_factor_panel(0, J, T, F, 0.0, [0.0])

    def test_effect_too_long(self):
        with pytest.raises(BadDimensions):
            gen_factor_panel(0, 3, 6, 1, 0.0, [0.0] * 5)

    @pytest.mark.parametrize("seed", range(10))
    def test_zero_noise_recovers_zero_gaps(self, seed):
        fp = gen_factor_panel(seed, 5, 14, 2, 0.0, [0.0, 0.0, 0.0])
        study = validate(fp.dataset, StudySpec("treated", fp.t0, fp.dataset.units[1:]))
        f = estimate(study)
        assert np.max(np.abs(f.gaps)) <= 1e-6


class TestConvexHullPanel:
    def test_vertex_weights(self):
        paths = np.arange(12, dtype=float).reshape(6, 2)
        ds = gen_convex_hull_panel([1.0, 0.0], paths, [5.0])
        np.testing.assert_array_equal(ds.series("treated")[:5], paths[:5, 0])
        assert ds.series("treated")[5] == paths[5, 0] + 5.0

    def test_recovery(self):
        rng = np.random.default_rng(11)
        paths = rng.normal(size=(12, 3))
        effect = np.ones(4)
        ds = gen_convex_hull_panel([0.5, 0.5, 0.0], paths, effect)
        study = hull_study(ds, 4)
        f = estimate(study)
        np.testing.assert_allclose(f.weights.w, [0.5, 0.5, 0.0], atol=1e-4)
        np.testing.assert_allclose(f.gaps[-4:], effect, atol=1e-4)

    def test_round_trip_design(self):
        rng = np.random.default_rng(12)
        paths = rng.normal(size=(9, 4))
        ds = gen_convex_hull_panel([0.1, 0.2, 0.3, 0.4], paths, [1.0, 1.0])
        _, x0 = design_matrices(hull_study(ds, 2))
        np.testing.assert_array_equal(x0, paths[:7])

    def test_infeasible(self):
        with pytest.raises(InfeasibleWeights):
            gen_convex_hull_panel([0.6, 0.6], np.zeros((5, 2)), [0.0])
        with pytest.raises(InfeasibleWeights):
            gen_convex_hull_panel([1.5, -0.5], np.zeros((5, 2)), [0.0])

    def test_bad_dimensions(self):
        with pytest.raises(BadDimensions):
            gen_convex_hull_panel([0.5, 0.5], np.zeros((5, 3)), [0.0])

    def test_null_effect_not_forced_first(self):
        rng = np.random.default_rng(13)
        paths = rng.normal(size=(12, 5))
        ds = gen_convex_hull_panel([0.2, 0.2, 0.2, 0.2, 0.2], paths, np.zeros(4))
        report = run_inference(hull_study(ds, 4))
        assert report.rank_of("treated") > 1
