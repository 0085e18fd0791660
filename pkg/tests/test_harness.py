"""Experiments, binary formats, CSV round trips."""

import math

import numpy as np
import pytest

import oracles
from jlsh import amplify, core, families as fam, harness as hz
from jlsh.core import DistanceKind, FormatError


class TestCollisionCurve:
    def test_distance_zero_exact(self):
        family = fam.MinhashFamily(fam.FeatureHashing(16, 1), 32, 1)
        curve = hz.estimate_collision_curve(family, [0.0, 0.5], 300, 2)
        assert curve.p_hat[0] == 1.0

    def test_hyperplane_one_bit_matches_analytic(self):
        family = fam.MinhashFamily(fam.Hyperplane(1), 64, 3)
        grid = hz.default_grid(DistanceKind.EUCLIDEAN_NORMALIZED, 9)
        curve = hz.estimate_collision_curve(family, grid, 10_000, 4)
        for g, p, se in zip(curve.grid, curve.p_hat, curve.std_err):
            alpha = core.angle_from_distance(float(g), DistanceKind.EUCLIDEAN_NORMALIZED)
            assert abs(p - (1 - alpha / math.pi)) <= 3 * max(se, 1e-4) + 1e-9

    def test_fh_sits_above_hyperplane6_at_mid_distances(self):
        """The sparse argmax family trades false positives for recall."""
        seed, trials = 5, 6000
        grid = np.array([0.4, 0.5, 0.6])
        f_fh = fam.MinhashFamily(fam.FeatureHashing(64, 1), 128, 6)
        f_hp = fam.MinhashFamily(fam.Hyperplane(6), 128, 7)
        c_fh = hz.estimate_collision_curve(f_fh, grid, trials, seed)
        c_hp = hz.estimate_collision_curve(f_hp, grid, trials, seed)
        assert (c_fh.p_hat > c_hp.p_hat).all()

    def test_dfh_curve_tracks_hyperplane(self):
        """Sparse sign bits behave like dense hyperplanes: at d=128 every
        sparse column is a CLT-Gaussian sum, so the curves nearly agree."""
        seed, trials = 6, 8000
        grid = hz.default_grid(DistanceKind.EUCLIDEAN_NORMALIZED, 11)
        f_dfh = fam.MinhashFamily(fam.DirectionalFH(6, 1), 128, 8)
        f_hp = fam.MinhashFamily(fam.Hyperplane(6), 128, 9)
        c_dfh, c_hp = hz.estimate_collision_curves([f_dfh, f_hp], grid, trials, seed)
        sigma = np.sqrt(c_dfh.std_err**2 + c_hp.std_err**2)
        assert (np.abs(c_dfh.p_hat - c_hp.p_hat) <= 3 * sigma + 0.01).all()

    def test_fastcp_curve_matches_crosspolytope(self):
        """The sparse-reduction stage feeds the same rotation construction,
        so fastcp and crosspolytope rates agree within Monte Carlo noise."""
        seed, trials = 7, 8000
        grid = np.array([0.2, 0.4, 0.6, 0.8])
        f_fcp = fam.MinhashFamily(fam.FastCrossPolytope(64, 1), 128, 10)
        f_cp = fam.MinhashFamily(fam.CrossPolytope(64), 128, 11)
        c_fcp, c_cp = hz.estimate_collision_curves([f_fcp, f_cp], grid, trials, seed)
        sigma = np.sqrt(c_fcp.std_err**2 + c_cp.std_err**2)
        assert (np.abs(c_fcp.p_hat - c_cp.p_hat) <= 3 * sigma + 0.01).all()

    def test_reproducible(self):
        family = fam.MinhashFamily(fam.Voronoi(8), 32, 8)
        a = hz.estimate_collision_curve(family, [0.3, 0.7], 500, 9)
        b = hz.estimate_collision_curve(family, [0.3, 0.7], 500, 9)
        assert np.array_equal(a.p_hat, b.p_hat)

    def test_rejects_unsorted_grid(self):
        family = fam.MinhashFamily(fam.Voronoi(8), 32, 8)
        with pytest.raises(core.DomainError):
            hz.estimate_collision_curve(family, [0.5, 0.3], 100, 1)


class TestTable1:
    def test_degenerate_targets_give_one_one(self):
        # targets already met by the base probabilities: no amplification
        config = hz.ExperimentConfig(
            dim=64, family_specs=("hyperplane:bits=6",), d1=0.2, d2=0.6,
            p1_min=0.5, p2_max=0.49, trials=4000, seed=10)
        rows = hz.table1_experiment(config)
        assert rows[0].feasible and (rows[0].r, rows[0].b) == (1, 1)

    def test_hyperplane_analytic_consistency(self):
        config = hz.ExperimentConfig(
            dim=128, family_specs=("hyperplane:bits=6",), trials=20_000, seed=11)
        row = hz.table1_experiment(config)[0]
        a1 = core.angle_from_distance(0.2, DistanceKind.EUCLIDEAN_RAW)
        a2 = core.angle_from_distance(0.6, DistanceKind.EUCLIDEAN_RAW)
        assert abs(row.p1_hat - fam.hyperplane_collision_prob(a1, 6)) < 4 * row.p1_err + 1e-9
        assert abs(row.p2_hat - fam.hyperplane_collision_prob(a2, 6)) < 4 * row.p2_err + 1e-9
        assert row.p1_amp >= 0.95 and row.p2_amp <= 0.05
        s = amplify.solve_parameters(row.p1_hat, row.p2_hat, config.target())
        assert (s.r, s.b) == (row.r, row.b)


class TestCollisionVsK:
    def test_non_increasing_within_noise(self):
        ks, p, se = hz.collision_vs_k(64, 16, [1, 2, 4, 8, 16], 8000, 12)
        fit = oracles.pava_decreasing(p, 1.0 / np.maximum(se, 1e-6) ** 2)
        assert np.sqrt(np.mean((p - fit) ** 2)) < 2 * np.sqrt(np.mean(se**2))

    def test_distance_zero_all_k(self):
        _, p, _ = hz.collision_vs_k(32, 8, [1, 4], 400, 13, dist=0.0)
        assert (p == 1.0).all()

    def test_large_k_approaches_dense_voronoi(self):
        """With many +-1 entries per row the sparse argmax matches the
        dense Gaussian argmax rate (dense-limit oracle)."""
        dim, cols, trials, dist = 64, 8, 8000, 0.5
        _, p, se = hz.collision_vs_k(dim, cols, [64], trials, 14, dist=dist)
        family = fam.MinhashFamily(fam.Voronoi(cols), dim, 15)
        pv, sev = amplify.estimate_base_probability(
            family, dist, DistanceKind.EUCLIDEAN_NORMALIZED, trials, 16)
        assert abs(p[-1] - pv) <= 3 * math.sqrt(se[-1] ** 2 + sev**2)


class TestPrecisionVsTables:
    def test_recall_grows_and_caps(self):
        V, Q = hz.make_planted_dataset(1500, 64, 20, 5, 0.25, DistanceKind.ANGULAR, 17)
        family = fam.MinhashFamily(fam.FeatureHashing(16, 1), 64, 18)
        bs, recalls = hz.precision_vs_tables(V, Q, family, r=3, b_max=10, seed=19, k=5)
        assert recalls[0] == 0.0
        # candidate sets nest, so recall is monotone in b by construction
        assert (np.diff(recalls) >= -1e-12).all()
        assert recalls[-1] > recalls[1] or recalls[1] > 0.99

    def test_normalized_recall_slopes_agree_across_families(self):
        """With per-family solved schemes, recall grows at nearly the same
        normalized rate for every family (all are norm-preserving
        projections); curves stay within a +-0.1 band of the mean."""
        seed = 424242
        kind = DistanceKind.EUCLIDEAN_RAW
        V, Q = hz.make_planted_dataset(3000, 64, 30, 5, 0.25, kind, 1001)
        target = amplify.SensitivityTarget(0.25, 0.7, 0.9, 0.1)
        xfrac = np.array([0.25, 0.5, 0.75, 1.0])
        norm_curves = []
        for i, spec in enumerate(["hyperplane:bits=6", "voronoi:T=64",
                                  "fh:T=64,k=1", "dfh:bits=6,k=1"]):
            family = fam.MinhashFamily(fam.parse_family(spec), 64, 2000 + i)
            p1, _ = amplify.estimate_base_probability(family, 0.25, kind, 10_000, seed)
            p2, _ = amplify.estimate_base_probability(family, 0.7, kind, 10_000, seed + 1)
            s = amplify.solve_parameters(p1, p2, target)
            _, recalls = hz.precision_vs_tables(V, Q, family, s.r, s.b, 3000 + i, k=5)
            bpts = np.maximum(1, np.ceil(xfrac * s.b).astype(int))
            norm_curves.append(recalls[bpts] / recalls[s.b])
        mean = np.mean(norm_curves, axis=0)
        for curve in norm_curves:
            assert np.abs(curve - mean).max() <= 0.1


class TestBinaryFormats:
    def test_fvecs_fixture(self, tmp_path):
        path = tmp_path / "v.fvecs"
        path.write_bytes(bytes([2, 0, 0, 0, 0, 0, 0x80, 0x3F, 0, 0, 0, 0x40]))
        X = hz.read_fvecs(path)
        assert X.shape == (1, 2) and X[0].tolist() == [1.0, 2.0]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.fvecs"
        path.write_bytes(b"")
        assert hz.read_fvecs(path).shape == (0, 0)

    def test_truncated_record_offset(self, tmp_path):
        path = tmp_path / "t.fvecs"
        good = bytes([1, 0, 0, 0, 0, 0, 0x80, 0x3F])
        path.write_bytes(good + bytes([1, 0, 0, 0, 0x11]))
        with pytest.raises(FormatError) as err:
            hz.read_fvecs(path)
        assert err.value.offset == 8

    def test_inconsistent_dim_offset(self, tmp_path):
        path = tmp_path / "d.fvecs"
        rec1 = bytes([2, 0, 0, 0]) + b"\x00" * 8
        rec2 = bytes([3, 0, 0, 0]) + b"\x00" * 8  # same record size, wrong dim
        path.write_bytes(rec1 + rec2)
        with pytest.raises(FormatError) as err:
            hz.read_fvecs(path)
        assert err.value.offset == 12

    def test_fvecs_write_read_roundtrip(self, tmp_path):
        path = tmp_path / "r.fvecs"
        X = core.sample_unit_vectors(16, 7, 20).astype(np.float32).astype(np.float64)
        hz.write_fvecs(path, X)
        assert np.array_equal(hz.read_fvecs(path), X)

    def test_bvecs(self, tmp_path):
        path = tmp_path / "b.bvecs"
        path.write_bytes(bytes([3, 0, 0, 0, 10, 20, 30]))
        X = hz.read_bvecs(path)
        assert X.tolist() == [[10.0, 20.0, 30.0]]


class TestGroundTruthCache:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "gt.bin"
        qids = np.array([4, 9])
        nids = np.array([[1, 2, 3], [7, 8, 6]])
        dists = np.array([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]])
        hz.save_ground_truth(path, qids, nids, dists)
        q2, n2, d2 = hz.load_ground_truth(path)
        assert np.array_equal(q2, qids) and np.array_equal(n2, nids)
        assert np.array_equal(d2, dists)

    def test_truncation(self, tmp_path):
        path = tmp_path / "gt.bin"
        hz.save_ground_truth(path, [0], [[1, 2]], [[0.1, 0.2]])
        blob = path.read_bytes()
        path.write_bytes(blob[:-4])
        with pytest.raises(FormatError):
            hz.load_ground_truth(path)


class TestCsv:
    def test_collision_curve_roundtrip_exact(self, tmp_path):
        family = fam.MinhashFamily(fam.Hyperplane(2), 16, 21)
        curve = hz.estimate_collision_curve(family, [0.1, 0.35, 0.77], 700, 22)
        path = tmp_path / "c.csv"
        hz.write_collision_curve_csv(curve, path)
        back = hz.read_collision_curve_csv(path)
        assert np.array_equal(back.grid, curve.grid)
        assert np.array_equal(back.p_hat, curve.p_hat)
        assert np.array_equal(back.std_err, curve.std_err)

    def test_empty_curve_header_only(self, tmp_path):
        path = tmp_path / "e.csv"
        hz.write_csv(path, ["distance", "p_hat", "std_err"], [])
        assert path.read_text() == "distance,p_hat,std_err\n"

    def test_three_rows(self, tmp_path):
        path = tmp_path / "three.csv"
        hz.write_csv(path, ["a", "b"], [(1, 0.5), (2, 0.25), (3, 0.125)])
        header, rows = hz.read_csv(path)
        assert header == ["a", "b"] and len(rows) == 3


class TestRecallHelpers:
    def test_recall_at_k(self):
        assert hz.recall_at_k([1, 2, 3], [1, 2, 9]) == pytest.approx(2 / 3)
        assert hz.recall_at_k([], [1]) == 0.0

    def test_brute_force_ties_by_id(self):
        V = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        ids, dists = hz.brute_force_knn(V, np.array([[1.0, 0.0]]), 2,
                                        DistanceKind.EUCLIDEAN_RAW)
        assert ids[0].tolist() == [0, 2] and dists[0].tolist() == [0.0, 0.0]
