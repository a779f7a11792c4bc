import json

import numpy as np
import pytest

from kscale import (DataError, InvalidInputError, LabeledDataset,
                    cross_validate, embed_in_noise, embedding_mse,
                    gen_gaussian_mixture, gen_spiral_classes, gen_swiss_roll,
                    knn_classify, load_labeled_csv, load_matrix_csv,
                    loo_knn_accuracy, make_rng, procrustes_align,
                    save_matrix_csv, save_report)
from kscale.datasets import apply_alignment, build_report
from helpers import brute_sq_dist


class TestSwissRoll:
    def test_algebraic_identity(self):
        Y, t, h = gen_swiss_roll(500, make_rng(0))
        np.testing.assert_allclose(Y[:, 0] ** 2 + Y[:, 2] ** 2, 36.0 * t**2, rtol=1e-12)
        np.testing.assert_array_equal(Y[:, 1], h)

    def test_parameter_ranges(self):
        _, t, h = gen_swiss_roll(2000, make_rng(1))
        assert np.all(t >= 1.5 * np.pi) and np.all(t <= 4.5 * np.pi)
        assert np.all(h >= 0.0) and np.all(h <= 100.0)

    def test_default_count(self):
        Y, _, _ = gen_swiss_roll(rng=make_rng(2))
        assert Y.shape == (2000, 3)

    def test_seed_determinism(self):
        a, _, _ = gen_swiss_roll(50, make_rng(3))
        b, _, _ = gen_swiss_roll(50, make_rng(3))
        np.testing.assert_array_equal(a, b)


class TestEmbedInNoise:
    def test_zero_noise_block(self):
        Y, _, _ = gen_swiss_roll(40, make_rng(4))
        X = embed_in_noise(Y, 5, 3, sigma_t=1.0, sigma_n=0.0, rng=make_rng(4))
        assert np.all(X[:, 5:] == 0.0)

    def test_signal_block_rank(self):
        Y, _, _ = gen_swiss_roll(60, make_rng(5))
        X = embed_in_noise(Y, 8, 2, sigma_t=1.0, sigma_n=1.0, rng=make_rng(5))
        assert np.linalg.matrix_rank(X[:, :8]) <= 3

    def test_noise_column_variances(self):
        Y, _, _ = gen_swiss_roll(2000, make_rng(4))
        X = embed_in_noise(Y, 3, 10, sigma_t=1.0, sigma_n=2.0, rng=make_rng(4))
        variances = X[:, 3:].var(axis=0)
        np.testing.assert_allclose(variances, 4.0, rtol=0.05)

    def test_needs_three_signal_dims(self):
        Y, _, _ = gen_swiss_roll(10, make_rng(7))
        with pytest.raises(InvalidInputError):
            embed_in_noise(Y, 2, 1, 1.0, 1.0, make_rng(7))


class TestGaussianMixture:
    def test_tiny_class_variance(self):
        ds = gen_gaussian_mixture(3.0, 1e-12, n_per_class=20, rng=make_rng(8))
        for c in ds.classes:
            member = ds.X[ds.labels == c]
            assert brute_sq_dist(member).max() < 1e-9

    def test_defaults(self):
        ds = gen_gaussian_mixture(3.0, 0.5, rng=make_rng(9))
        assert ds.X.shape == (200, 6)
        assert ds.n_classes == 2
        np.testing.assert_array_equal(np.bincount(ds.labels), [100, 100])

    def test_class_means_near_centers(self):
        sigma_v = 0.5
        rng = make_rng(10)
        centers = rng.normal(0.0, np.sqrt(3.0), size=(2, 6))
        ds = gen_gaussian_mixture(3.0, sigma_v, n_per_class=100, rng=make_rng(10))
        se = np.sqrt(sigma_v) / np.sqrt(100)
        for c in (0, 1):
            observed = ds.X[ds.labels == c].mean(axis=0)
            assert np.all(np.abs(observed - centers[c]) <= 4.0 * se)


class TestSpiral:
    def test_defaults_and_labels(self):
        ds = gen_spiral_classes(rng=make_rng(11))
        assert ds.X.shape == (400, 3)
        np.testing.assert_array_equal(np.bincount(ds.labels), [100] * 4)

    def test_disjoint_arcs_without_noise(self):
        ds, r = gen_spiral_classes(4, 50, gap=0.04, sigma_s=0.0,
                                   rng=make_rng(12), return_params=True)
        for c in range(3):
            hi = r[ds.labels == c].max()
            lo = r[ds.labels == c + 1].min()
            assert lo - hi >= 0.04 - (0.25 - 0.04)  # gap bound: lo >= (c+1)/4, hi <= (c+1)/4 - gap
            assert lo - hi >= 0.0
        for c in range(4):
            seg = r[ds.labels == c]
            assert np.all(seg >= c * 0.25) and np.all(seg <= (c + 1) * 0.25 - 0.04)

    def test_noiseless_radius_identity(self):
        ds, r = gen_spiral_classes(2, 30, gap=0.1, sigma_s=0.0,
                                   rng=make_rng(13), return_params=True)
        np.testing.assert_allclose(ds.X[:, 0] ** 2 + ds.X[:, 1] ** 2,
                                   (6.0 * np.pi * r) ** 2, rtol=1e-12)

    def test_gap_at_least_segment_rejected(self):
        with pytest.raises(InvalidInputError):
            gen_spiral_classes(4, 10, gap=0.25, rng=make_rng(14))


class TestProcrustes:
    def test_identity(self):
        X = make_rng(15).standard_normal((20, 3))
        res = procrustes_align(X, X)
        np.testing.assert_allclose(res.rotation, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(res.translation, 0.0, atol=1e-12)
        assert res.err <= 1e-24

    def test_recovers_rigid_motion(self):
        rng = make_rng(16)
        src = rng.standard_normal((30, 3))
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        shift = rng.standard_normal(3)
        tgt = src @ Q.T + shift
        res = procrustes_align(src, tgt)
        np.testing.assert_allclose(res.rotation, Q, atol=1e-9)
        np.testing.assert_allclose(res.translation, shift, atol=1e-9)
        assert res.err <= 1e-18 * float((src**2).sum())

    def test_beats_random_orthogonal_candidates(self):
        rng = make_rng(17)
        src = rng.standard_normal((25, 2))
        tgt = rng.standard_normal((25, 2))
        res = procrustes_align(src, tgt)
        mu_s, mu_t = src.mean(0), tgt.mean(0)
        for _ in range(100):
            Q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
            cand = (src - mu_s) @ Q.T + mu_t
            assert res.err <= ((cand - tgt) ** 2).sum() + 1e-9

    def test_never_worse_than_identity_alignment(self):
        rng = make_rng(18)
        src = rng.standard_normal((15, 3))
        tgt = rng.standard_normal((15, 3))
        assert procrustes_align(src, tgt).err <= ((src - tgt) ** 2).sum() + 1e-9

    def test_rotation_only_mode(self):
        rng = make_rng(19)
        src = rng.standard_normal((20, 3))
        res = procrustes_align(src, rng.standard_normal((20, 3)),
                               allow_reflection=False)
        assert np.linalg.det(res.rotation) == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_source(self):
        src = np.ones((10, 2))
        tgt = make_rng(20).standard_normal((10, 2))
        res = procrustes_align(src, tgt)
        assert res.flags
        np.testing.assert_allclose(res.rotation, np.eye(2))

    def test_orthogonality_invariant(self):
        rng = make_rng(21)
        res = procrustes_align(rng.standard_normal((12, 3)),
                               rng.standard_normal((12, 3)))
        R = res.rotation
        assert np.linalg.norm(R.T @ R - np.eye(3)) <= 1e-10


class TestEmbeddingMse:
    def test_identical(self):
        X = make_rng(22).standard_normal((10, 2))
        assert embedding_mse(X, X) == 0.0

    def test_uniform_offset(self):
        X = make_rng(23).standard_normal((10, 3))
        c = np.array([1.0, -2.0, 0.5])
        assert embedding_mse(X + c, X) == pytest.approx(float(c @ c), rel=1e-12)

    def test_matches_direct_loop(self):
        rng = make_rng(24)
        a, b = rng.standard_normal((8, 2)), rng.standard_normal((8, 2))
        expect = sum(((a[i] - b[i]) ** 2).sum() for i in range(8)) / 8.0
        assert embedding_mse(a, b) == pytest.approx(expect, abs=1e-12)


class TestKnnClassify:
    def test_exact_training_point(self):
        X = make_rng(25).standard_normal((10, 2))
        y = np.arange(10)
        pred = knn_classify(X, y, X[[3]], k=1)
        assert pred[0] == 3

    def test_separable_blobs(self):
        rng = make_rng(26)
        train = np.vstack([rng.normal(0, 0.1, (20, 2)), rng.normal(5, 0.1, (20, 2))])
        y = np.repeat([0, 1], 20)
        test = np.vstack([rng.normal(0, 0.1, (10, 2)), rng.normal(5, 0.1, (10, 2))])
        pred = knn_classify(train, y, test, k=3)
        np.testing.assert_array_equal(pred, np.repeat([0, 1], 10))

    def test_matches_brute_force_vote(self):
        rng = make_rng(27)
        train = rng.standard_normal((40, 3))
        y = rng.integers(0, 3, 40)
        test = rng.standard_normal((12, 3))
        pred = knn_classify(train, y, test, k=3)
        d = np.sqrt(brute_sq_dist(np.vstack([test, train])))[:12, 12:]
        for i in range(12):
            order = np.argsort(d[i], kind="stable")[:3]
            votes = y[order]
            classes, counts = np.unique(votes, return_counts=True)
            top = classes[counts == counts.max()]
            expect = min((d[i, order[votes == c]].sum(), c) for c in top)[1]
            assert pred[i] == expect

    def test_loo_training_accuracy_distinct_points(self):
        rng = make_rng(28)
        X = rng.standard_normal((30, 2))
        y = rng.integers(0, 2, 30)
        # every distinct training point is its own nearest neighbor at k=1
        pred = knn_classify(X, y, X, k=1)
        np.testing.assert_array_equal(pred, y)
        assert loo_knn_accuracy(X, y, k=1) <= 1.0


class TestCrossValidate:
    def _ideal(self):
        rng = make_rng(29)
        X = np.vstack([rng.normal(0, 0.05, (12, 2)), rng.normal(30, 0.05, (12, 2))])
        return LabeledDataset(X=X, labels=np.repeat([0, 1], 12))

    def test_loo_ideal_perfect(self):
        report = cross_validate(self._ideal(), epsilon=1.0, dim=2, k_neighbors=1)
        assert report.accuracy == 1.0
        assert report.folds == 24

    def test_kfold_leaves_five_percent_out(self):
        rng = make_rng(30)
        ds = LabeledDataset(X=rng.standard_normal((200, 3)),
                            labels=np.tile([0, 1], 100))
        report = cross_validate(ds, k_neighbors=1, protocol="kfold", folds=20,
                                seed=7, ambient=True)
        assert report.folds == 20
        assert len(report.fold_accuracies) == 20
        assert report.accuracy == pytest.approx(np.mean(report.fold_accuracies))

    def test_fold_missing_class_flagged(self):
        rng = make_rng(31)
        X = rng.standard_normal((9, 2))
        labels = np.array([0] * 8 + [1])  # singleton class
        ds = LabeledDataset(X=X, labels=labels)
        report = cross_validate(ds, protocol="loo", k_neighbors=1, ambient=True)
        assert any("dropped" in f for f in report.flags)
        assert len(report.fold_accuracies) == 8

    def test_ambient_mode(self):
        report = cross_validate(self._ideal(), ambient=True, k_neighbors=1)
        assert report.accuracy == 1.0


class TestCsvRoundTrip:
    def test_labeled_two_by_two(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.5,2.5,0\n-3.0,4.0,1\n")
        ds = load_labeled_csv(path, label_column=-1)
        np.testing.assert_allclose(ds.X, [[1.5, 2.5], [-3.0, 4.0]])
        np.testing.assert_array_equal(ds.labels, [0, 1])

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1.0,2.0\n")
        X = load_matrix_csv(path, has_header=True)
        np.testing.assert_allclose(X, [[1.0, 2.0]])

    def test_named_label_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x,y,cls\n1.0,2.0,1\n0.5,0.1,0\n")
        ds = load_labeled_csv(path, label_column="cls", has_header=True)
        np.testing.assert_array_equal(ds.labels, [1, 0])

    def test_comment_lines_ignored(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("# header comment\n1.0,2.0\n# mid comment\n3.0,4.0\n")
        X = load_matrix_csv(path)
        assert X.shape == (2, 2)

    def test_round_trip_exact(self, tmp_path):
        rng = make_rng(32)
        X = rng.standard_normal((20, 4)) * 10.0 ** rng.integers(-8, 8, (20, 4))
        path = tmp_path / "d.csv"
        save_matrix_csv(path, X)
        np.testing.assert_array_equal(load_matrix_csv(path), X)

    def test_ragged_rows_error_with_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(DataError, match="line 2"):
            load_matrix_csv(path)

    def test_non_numeric_error_with_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,2.0\n3.0,oops\n")
        with pytest.raises(DataError, match="line 2"):
            load_matrix_csv(path)

    def test_non_integer_labels_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,0.5\n2.0,1.5\n")
        with pytest.raises(DataError, match="non-integer"):
            load_labeled_csv(path, label_column=-1)


class TestReports:
    def test_schema_field_names(self, tmp_path):
        report = build_report(method="maxmin", grid=[1.0], scores=[0.5],
                              argmax_eps=1.0, accuracy=[0.9], seed=3,
                              config={"c": 2.0})
        assert list(report)[:7] == ["method", "grid", "scores", "argmax_eps",
                                    "accuracy", "seed", "config"]
        path = tmp_path / "r.json"
        save_report(report, path)
        loaded = json.loads(path.read_text())
        assert loaded["method"] == "maxmin"
        assert loaded["argmax_eps"] == 1.0
        assert loaded["seed"] == 3

    def test_serialization_deterministic(self, tmp_path):
        report = build_report(method="ge", grid=[0.1, 0.2], scores=[0.3, 0.4],
                              argmax_eps=0.2, accuracy=[], seed=1, config={})
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_report(report, a)
        save_report(report, b)
        assert a.read_bytes() == b.read_bytes()

    def test_numpy_types_jsonable(self, tmp_path):
        report = build_report(method="rho_p", grid=np.array([1.0]),
                              scores=np.array([np.float64(0.25)]),
                              argmax_eps=np.float64(1.0), accuracy=[],
                              seed=np.int64(2), config={"k": np.int64(5)})
        save_report(report, tmp_path / "r.json")
        loaded = json.loads((tmp_path / "r.json").read_text())
        assert loaded["config"]["k"] == 5
