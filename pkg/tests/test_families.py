"""Minhash families: worked examples, ranges, equivalences, invariance."""

import math

import numpy as np
import pytest

import oracles
from jlsh import core, families as fam, projections as pj
from jlsh.core import DomainError

ALL_KINDS = [
    fam.Hyperplane(6),
    fam.Voronoi(64),
    fam.CrossPolytope(64),
    fam.FeatureHashing(64, 1),
    fam.DirectionalFH(6, 1),
    fam.FastCrossPolytope(64, 1),
]


class TestReductions:
    def test_argmax_worked_examples(self):
        assert fam.argmax_index([3, 2, -5, -1, 2]) == 0
        assert fam.argmax_index([1, 4, -6, 3, 1]) == 1

    def test_argmax_tie_lowest_index(self):
        assert fam.argmax_index([2.0, 2.0, 2.0]) == 0

    def test_cross_polytope_worked_examples(self):
        # both projected vectors sit nearest the vertex -e_2: value 2*2+1
        assert fam.cross_polytope_value([3, 2, -5, -1, 2]) == 5
        assert fam.cross_polytope_value([1, 4, -6, 3, 1]) == 5

    def test_cross_polytope_positive_axis(self):
        assert fam.cross_polytope_value([7, 0, 0]) == 0

    def test_sign_bits_worked_example(self):
        # components (3, 0.5, 0, -1): zero counts as +
        assert fam.sign_bits([3, 0.5, 0, -1]) == 0b0111

    def test_sign_bits_zero_vector_all_ones(self):
        assert fam.sign_bits(np.zeros(6)) == 0b111111

    def test_sign_bits_matches_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            w = rng.standard_normal(10)
            assert fam.sign_bits(w) == oracles.signbits_reference(w)

    def test_sign_antisymmetry(self):
        rng = np.random.default_rng(1)
        w = rng.standard_normal(9)  # no exact zeros
        assert fam.sign_bits(w) ^ fam.sign_bits(-w) == 2**9 - 1


class TestProjectionHashes:
    def test_sign_hash_over_projection(self):
        P = pj.make_sign_dense(16, 8, 3)
        x = core.sample_unit_vector(16, 4)
        assert fam.sign_hash(P, x) == fam.sign_bits(pj.apply(P, x))

    def test_argmax_hash_dimension_check(self):
        P = pj.make_gaussian(16, 8, 3)
        with pytest.raises(core.DimensionError):
            fam.argmax_hash(P, np.zeros(5))


class TestFamilyKinds:
    def test_ranges(self):
        assert fam.family_range(fam.Hyperplane(6)) == 64
        assert fam.family_range(fam.Voronoi(64)) == 64
        assert fam.family_range(fam.CrossPolytope(64)) == 128
        assert fam.family_range(fam.FeatureHashing(32, 2)) == 32
        assert fam.family_range(fam.DirectionalFH(4, 1)) == 16
        assert fam.family_range(fam.FastCrossPolytope(16, 1)) == 32

    def test_validation(self):
        with pytest.raises(DomainError):
            fam.Hyperplane(0)
        with pytest.raises(DomainError):
            fam.Hyperplane(63)
        with pytest.raises(DomainError):
            fam.Voronoi(1)
        with pytest.raises(DomainError):
            fam.FeatureHashing(8, 0)

    def test_fastcp_default_m(self):
        assert fam.resolve_m(fam.FastCrossPolytope(64, 1), 128) == 128
        assert fam.resolve_m(fam.FastCrossPolytope(16, 1), 128) == 64
        assert fam.resolve_m(fam.FastCrossPolytope(16, 1, m=24), 128) == 24

    @pytest.mark.parametrize("text,expect", [
        ("voronoi:T=64", fam.Voronoi(64)),
        ("fh", fam.FeatureHashing(64, 1)),
        ("hyperplane:bits=3", fam.Hyperplane(3)),
        ("fastcp:T=8,k=2,m=32", fam.FastCrossPolytope(8, 2, 32)),
    ])
    def test_parse(self, text, expect):
        assert fam.parse_family(text) == expect

    def test_parse_rejects(self):
        with pytest.raises(DomainError):
            fam.parse_family("nosuch")
        with pytest.raises(DomainError):
            fam.parse_family("hyperplane:bits=0")
        with pytest.raises(DomainError):
            fam.parse_family("voronoi:bits=4")

    def test_format_parse_roundtrip(self):
        for kind in ALL_KINDS:
            assert fam.parse_family(fam.format_family(kind)) == kind


class TestFamilyHash:
    @pytest.mark.parametrize("kind", ALL_KINDS, ids=fam.format_family)
    def test_deterministic_and_in_range(self, kind):
        family = fam.MinhashFamily(kind, 128, 11)
        x = core.sample_unit_vector(128, 1)
        h = fam.family_hash(family, 3, x)
        assert h == fam.family_hash(family, 3, x)
        assert 0 <= h < family.range

    @pytest.mark.parametrize("kind", ALL_KINDS, ids=fam.format_family)
    def test_scale_invariance(self, kind):
        family = fam.MinhashFamily(kind, 128, 12)
        X = core.sample_unit_vectors(128, 64, 2)
        h1 = fam.family_hash_batch(family, 0, X)
        h2 = fam.family_hash_batch(family, 0, 17.5 * X)
        assert np.array_equal(h1, h2)

    @pytest.mark.parametrize("kind", ALL_KINDS, ids=fam.format_family)
    def test_distinct_indices_are_independent(self, kind):
        """h_i vs h_j on the same points collide at the ~1/m background rate."""
        family = fam.MinhashFamily(kind, 128, 13)
        X = core.sample_unit_vectors(128, 8000, 3)
        a = fam.family_hash_batch(family, 0, X)
        b = fam.family_hash_batch(family, 1, X)
        rate = float((a == b).mean())
        m = family.range
        se = math.sqrt((1 / m) * (1 - 1 / m) / X.shape[0])
        assert abs(rate - 1 / m) <= max(3 * se, 0.01)

    def test_batch_matches_single(self):
        family = fam.MinhashFamily(fam.FeatureHashing(16, 2), 32, 14)
        X = core.sample_unit_vectors(32, 10, 4)
        batch = fam.family_hash_batch(family, 5, X)
        singles = [fam.family_hash(family, 5, x) for x in X]
        assert batch.tolist() == singles

    def test_dimension_mismatch(self):
        family = fam.MinhashFamily(fam.Voronoi(4), 16, 1)
        with pytest.raises(core.DimensionError):
            fam.family_hash(family, 0, np.zeros(8))


class TestAnalyticRates:
    def test_hyperplane_collision_prob(self):
        assert fam.hyperplane_collision_prob(0.0, 6) == 1.0
        assert fam.hyperplane_collision_prob(math.pi, 6) == 0.0
        assert fam.hyperplane_collision_prob(math.pi / 2, 6) == pytest.approx(0.015625)

    def test_hyperplane_one_bit_rate(self):
        """Empirical 1-bit rate at pi/4 matches 1 - alpha/pi."""
        family = fam.MinhashFamily(fam.Hyperplane(1), 128, 15)
        U, V = core.sample_pairs_at_angle(128, math.pi / 4, 20_000, 5)
        rate = float((fam.family_hash_batch(family, 0, U)
                      == fam.family_hash_batch(family, 0, V)).mean())
        assert abs(rate - 0.75) < 0.01

    def test_voronoi_two_equals_one_bit_hyperplane(self):
        """T=2 argmax partitions the sphere like a single hyperplane."""
        family = fam.MinhashFamily(fam.Voronoi(2), 128, 16)
        U, V = core.sample_pairs_at_angle(128, math.pi / 2, 20_000, 6)
        rate = float((fam.family_hash_batch(family, 0, U)
                      == fam.family_hash_batch(family, 0, V)).mean())
        assert abs(rate - 0.5) < 0.015


class TestCrossPolytopeEquivalence:
    def test_equals_argmax_over_p_and_minus_p(self):
        """cross_polytope_hash == argmax over the stacked [P | -P] columns."""
        rng = np.random.default_rng(7)
        T = 16
        for trial in range(100):
            P = pj.make_gaussian(32, T, trial)
            x = rng.standard_normal(32)
            w = pj.apply(P, x)
            j = int(np.argmax(np.concatenate([w, -w])))
            expected = 2 * j if j < T else 2 * (j - T) + 1
            assert fam.cross_polytope_value(w) == expected


class TestCollisionMonotonicity:
    @pytest.mark.parametrize("kind", [fam.Hyperplane(4), fam.FeatureHashing(16, 1)],
                             ids=fam.format_family)
    def test_curve_non_increasing_up_to_noise(self, kind):
        family = fam.MinhashFamily(kind, 64, 17)
        trials = 4000
        grid = np.linspace(0.0, math.pi, 9)
        rates, errs = [], []
        for gi, alpha in enumerate(grid):
            U, V = core.sample_pairs_at_angle(64, float(alpha), trials, 100 + gi)
            p = float((fam.family_hash_batch(family, 0, U)
                       == fam.family_hash_batch(family, 0, V)).mean())
            rates.append(p)
            errs.append(math.sqrt(p * (1 - p) / trials))
        rates, errs = np.array(rates), np.array(errs)
        fit = oracles.pava_decreasing(rates, 1.0 / np.maximum(errs, 1e-6) ** 2)
        rms_resid = float(np.sqrt(np.mean((rates - fit) ** 2)))
        rms_sigma = float(np.sqrt(np.mean(errs**2)))
        assert rms_resid < 2 * rms_sigma


class TestDirectionalFhDenseLimit:
    def test_dfh_with_dense_mapping_behaves_like_hyperplane(self):
        """At k=d a directional-FH column is a sum of d signed coordinates,
        matching the dense +-1 hyperplane construction in distribution; the
        collision rates agree at a fixed angle."""
        d, bits, trials = 64, 2, 8000
        alpha = 1.0
        U, V = core.sample_pairs_at_angle(d, alpha, trials, 8)
        dfh = fam.MinhashFamily(fam.DirectionalFH(bits, d), d, 19)
        hp = fam.MinhashFamily(fam.Hyperplane(bits), d, 20)
        r1 = float((fam.family_hash_batch(dfh, 0, U)
                    == fam.family_hash_batch(dfh, 0, V)).mean())
        r2 = float((fam.family_hash_batch(hp, 0, U)
                    == fam.family_hash_batch(hp, 0, V)).mean())
        se = math.sqrt(2 * 0.25 / trials)
        assert abs(r1 - r2) < 4 * se + 0.02
