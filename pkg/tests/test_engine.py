import math

import numpy as np
import pytest

from mbrkit.clustering import ClusterAssignment, assignment_from_labels
from mbrkit.corpus import SynthConfig, generate_synthetic
from mbrkit.engine import (
    MixtureSpec,
    cluster_mbr,
    conditional_mbr,
    cutoff_mbr,
    cutoff_transform,
    demo_continuous,
    embedding_mbr,
    embedding_weighted_matrix,
    expected_utilities,
    mbr_select,
)
from mbrkit.utility import EmbeddingSet, UtilityMatrix, build_utility_matrix
from conftest import naive_argmax, naive_expected_utilities, random_matrix


def matrix_from(values, kind="external:test"):
    values = np.asarray(values, dtype=np.float32)
    return UtilityMatrix(n=values.shape[0], values=values, kind=kind)


class TestExpectedUtilities:
    def test_constant_matrix(self):
        m = matrix_from(np.ones((3, 3)))
        for exclude in (False, True):
            scores = expected_utilities(m, np.ones(3), exclude)
            assert np.allclose(scores, 1.0)

    def test_identity_like_forced_arithmetic(self):
        m = matrix_from(np.eye(4))
        assert np.allclose(expected_utilities(m, np.ones(4), True), 0.0)
        assert np.allclose(expected_utilities(m, np.ones(4), False), 0.25)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(9)
        m = random_matrix(rng, 20, symmetric=False)
        w = rng.uniform(0.1, 2.0, size=20)
        for exclude in (False, True):
            ours = expected_utilities(m, w, exclude)
            ref = naive_expected_utilities(m.values.tolist(), w.tolist(), exclude)
            assert np.allclose(ours, ref, rtol=1e-6)

    def test_weighted_renormalization(self):
        m = matrix_from([[1.0, 0.4, 0.2], [0.4, 1.0, 0.9], [0.2, 0.9, 1.0]])
        w = np.array([3.0, 1.0, 0.0])
        scores = expected_utilities(m, w, exclude_self=True)
        # candidate 0's references: {1 (w=1), 2 (w=0)} -> score = 0.4
        assert scores[0] == pytest.approx(0.4)
        # candidate 2's references: {0 (w=3), 1 (w=1)} -> (3*0.2 + 1*0.9)/4
        assert scores[2] == pytest.approx((3 * 0.2 + 0.9) / 4)

    def test_errors(self):
        m = matrix_from(np.ones((2, 2)))
        with pytest.raises(ValueError, match="all-zero"):
            expected_utilities(m, np.zeros(2), False)
        with pytest.raises(ValueError, match="at least 2"):
            expected_utilities(matrix_from([[1.0]]), np.ones(1), True)
        with pytest.raises(ValueError, match="zero total weight"):
            expected_utilities(m, np.array([1.0, 0.0]), True)


class TestMbrSelect:
    def test_tie_break_lowest_index(self):
        # rows 1 and 2 tie exactly
        m = matrix_from([[0.2, 0.2, 0.2], [0.9, 0.9, 0.9], [0.9, 0.9, 0.9]])
        result = mbr_select(m, exclude_self=False)
        assert result.selected == 1
        assert result.ranking == (1, 2, 0)

    def test_single_candidate(self):
        result = mbr_select(matrix_from([[0.7]]), exclude_self=False)
        assert result.selected == 0 and result.ranking == (0,)

    def test_exhaustive_argmax_50_candidates(self):
        rng = np.random.default_rng(123)
        for _ in range(10):
            m = random_matrix(rng, 50)
            w = rng.uniform(0.2, 1.0, size=50)
            for exclude in (False, True):
                result = mbr_select(m, w, exclude_self=exclude)
                ref = naive_expected_utilities(m.values.tolist(), w.tolist(), exclude)
                assert result.selected == naive_argmax(ref)

    def test_ranking_sorts_scores(self):
        rng = np.random.default_rng(5)
        m = random_matrix(rng, 12)
        result = mbr_select(m)
        s = result.scores
        for a, b in zip(result.ranking, result.ranking[1:]):
            assert s[a] > s[b] or (s[a] == s[b] and a < b)

    def test_scale_covariance(self):
        rng = np.random.default_rng(17)
        m = random_matrix(rng, 15)
        scaled = matrix_from(m.values * np.float32(3.5))
        a = mbr_select(m, exclude_self=True)
        b = mbr_select(scaled, exclude_self=True)
        assert a.selected == b.selected and a.ranking == b.ranking
        assert np.allclose(b.scores, 3.5 * a.scores, rtol=1e-6)


class TestCutoff:
    def test_retains_above_threshold(self):
        m = matrix_from([[1.0, 0.95], [0.95, 1.0]])
        out = cutoff_transform(m, tau=0.918, delta=0.0)
        assert out.values[0, 1] == np.float32(0.95)

    def test_zeroes_below_threshold(self):
        m = matrix_from([[1.0, 0.5], [0.5, 1.0]])
        out = cutoff_transform(m, tau=0.918, delta=0.0)
        assert out.values[0, 1] == 0.0

    def test_diagonal_goes_to_delta(self):
        m = matrix_from(np.ones((3, 3)))
        out = cutoff_transform(m, tau=0.5, delta=-1.0)
        assert np.all(np.diag(out.values) == -1.0)
        assert out.kind.startswith("transformed:cutoff")

    def test_deviation_from_max_mode(self):
        m = matrix_from([[1.0, 0.9, 0.2], [0.9, 1.0, 0.3], [0.2, 0.3, 1.0]])
        # max off-diagonal 0.9; keep entries within 0.61 of it (>= 0.29)
        out = cutoff_transform(m, tau=0.61, delta=0.0, mode="deviation_from_max")
        assert out.values[0, 1] == np.float32(0.9)
        assert out.values[1, 2] == np.float32(0.3)
        assert out.values[0, 2] == 0.0

    def test_tau_below_min_reduces_to_standard(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            m = random_matrix(rng, rng.integers(3, 12))
            out = cutoff_transform(m, tau=float(m.values.min()) - 1.0, delta=0.0)
            base = mbr_select(m, exclude_self=True)
            cut = mbr_select(out, exclude_self=True)
            assert cut.ranking == base.ranking

    def test_drop_mode_renormalizes(self):
        m = matrix_from([[1.0, 0.9, 0.1], [0.9, 1.0, 0.2], [0.1, 0.2, 1.0]])
        result = cutoff_mbr(m, tau=0.5, delta="drop")
        # candidate 0: only reference 1 survives -> plain mean over survivors
        assert result.scores[0] == pytest.approx(0.9)
        # candidate 2: nothing survives -> score 0, reported in diagnostics
        assert result.scores[2] == 0.0
        assert result.diagnostics["empty_reference_rows"] == 1

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown cutoff mode"):
            cutoff_transform(matrix_from(np.ones((2, 2))), tau=0.1, mode="relative")


class TestClusterMbr:
    def test_dominant_cluster_and_submatrix_equivalence(self):
        rng = np.random.default_rng(40)
        m = random_matrix(rng, 10)
        labels = [0] * 6 + [1] * 4
        assignment = ClusterAssignment(labels=tuple(labels), k=2, sizes=(6, 4))
        result = cluster_mbr(m, assignment, exclude_self=True)
        assert result.selected < 6
        sub = UtilityMatrix(n=6, values=m.values[:6, :6], kind=m.kind)
        expected = mbr_select(sub, exclude_self=True)
        assert result.selected == expected.selected
        assert result.ranking[:6] == expected.ranking

    def test_single_cluster_reduces_to_mbr_select(self):
        rng = np.random.default_rng(41)
        m = random_matrix(rng, 8)
        assignment = ClusterAssignment(labels=(0,) * 8, k=1, sizes=(8,))
        for exclude in (False, True):
            a = cluster_mbr(m, assignment, exclude_self=exclude)
            b = mbr_select(m, exclude_self=exclude)
            assert a.selected == b.selected and a.ranking == b.ranking
            assert np.array_equal(a.scores, b.scores)

    def test_constructed_compromise_instance(self):
        # Two 5-candidate clusters plus one compromise straddling both.
        n = 11
        values = np.zeros((n, n), dtype=np.float64)
        in_a = range(0, 5)
        in_b = range(5, 10)
        for group in (in_a, in_b):
            for i in group:
                for j in group:
                    values[i, j] = 0.8 if i != j else 1.0
        values[10, :] = 0.5
        values[:, 10] = 0.5
        values[10, 10] = 1.0
        m = matrix_from(values)
        std = mbr_select(m, exclude_self=True)
        assert std.selected == 10  # compromise: 0.5 beats (4*0.8)/10 = 0.32
        # verified exhaustively
        ref = naive_expected_utilities(values.tolist(), [1.0] * n, True)
        assert naive_argmax(ref) == 10
        labels = ["a"] * 5 + ["b"] * 5 + ["compromise"]
        assignment = assignment_from_labels(labels)
        clustered = cluster_mbr(m, assignment, exclude_self=True)
        assert clustered.selected == 0  # dominant cluster tie -> lowest member index
        cond = conditional_mbr(m, labels, "a", exclude_self=True)
        assert clustered.selected == cond.selected

    def test_cluster_order_by_weight_then_lowest_index(self):
        m = matrix_from(np.ones((5, 5)))
        # clusters {0,3}, {1,4}, {2}; weights make cluster of index 2 heaviest
        labels = (0, 1, 2, 0, 1)
        assignment = ClusterAssignment(labels=labels, k=3, sizes=(2, 2, 1))
        w = np.array([1.0, 1.0, 5.0, 1.0, 1.0])
        result = cluster_mbr(m, assignment, w, exclude_self=False)
        assert result.selected == 2
        assert result.diagnostics["dominant_cluster"] == 2
        # equal-weight tie between clusters 0 and 1 -> cluster 0 (member 0) first
        assert result.ranking == (2, 0, 3, 1, 4)

    def test_assignment_length_mismatch(self):
        m = matrix_from(np.ones((3, 3)))
        assignment = ClusterAssignment(labels=(0, 0), k=1, sizes=(2,))
        with pytest.raises(ValueError, match="covers 2"):
            cluster_mbr(m, assignment)


class TestEmbeddingWeighted:
    def test_identical_embeddings_keep_entries(self, rng):
        m = random_matrix(rng, 4)
        vectors = np.tile(np.array([0.6, 0.8], dtype=np.float32), (4, 1))
        e = EmbeddingSet(n=4, d=2, vectors=vectors)
        out = embedding_weighted_matrix(m, e)
        assert np.allclose(out.values, m.values, atol=1e-6)

    def test_orthogonal_halves_antipodal_zeroes(self):
        m = matrix_from(np.full((3, 3), 0.8))
        vectors = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]], dtype=np.float32)
        e = EmbeddingSet(n=3, d=2, vectors=vectors, normalized=True)
        out = embedding_weighted_matrix(m, e)
        assert out.values[0, 1] == pytest.approx(0.4, abs=1e-7)  # cos 0 -> sim 0.5
        assert out.values[0, 2] == pytest.approx(0.0, abs=1e-7)  # cos -1 -> sim 0
        assert out.values[0, 0] == pytest.approx(0.8, abs=1e-7)  # cos 1 -> sim 1

    def test_threshold_applies_to_rescaled_similarity(self):
        m = matrix_from(np.full((2, 2), 1.0))
        # rescaled sim = 0.90 < 0.918 -> contribution zeroed
        cos = 2 * 0.90 - 1.0
        vectors = np.array([[1.0, 0.0], [cos, math.sqrt(1 - cos * cos)]], dtype=np.float32)
        e = EmbeddingSet(n=2, d=2, vectors=vectors)
        out = embedding_weighted_matrix(m, e, cos_threshold=0.918)
        assert out.values[0, 1] == 0.0
        out2 = embedding_weighted_matrix(m, e, cos_threshold=0.89)
        assert out2.values[0, 1] == pytest.approx(0.90, abs=1e-6)

    def test_identical_embeddings_preserve_ranking(self, rng):
        m = random_matrix(rng, 9)
        vectors = np.tile(rng.normal(size=3).astype(np.float32), (9, 1))
        e = EmbeddingSet(n=9, d=3, vectors=vectors)
        weighted = embedding_mbr(m, e, exclude_self=True)
        base = mbr_select(m, exclude_self=True)
        assert weighted.ranking == base.ranking

    def test_dimension_mismatch(self, rng):
        m = random_matrix(rng, 3)
        e = EmbeddingSet(n=2, d=2, vectors=np.ones((2, 2), dtype=np.float32))
        with pytest.raises(ValueError, match="does not match"):
            embedding_weighted_matrix(m, e)


class TestConditionalMbr:
    def test_all_same_label_reduces_to_mbr_select(self, rng):
        m = random_matrix(rng, 6)
        result = conditional_mbr(m, ["s"] * 6, "s", exclude_self=False)
        base = mbr_select(m, exclude_self=False)
        assert result.selected == base.selected and result.ranking == base.ranking

    def test_pair_cluster_forced_arithmetic(self):
        values = np.array(
            [[1.0, 0.3, 0.0], [0.7, 1.0, 0.0], [0.0, 0.0, 1.0]], dtype=np.float32
        )
        m = matrix_from(values)
        labels = ["s", "s", "t"]
        result = conditional_mbr(m, labels, "s", exclude_self=True)
        # candidate 0 scores 0.3 (vs 1), candidate 1 scores 0.7 (vs 0)
        assert result.selected == 1
        assert result.ranking == (1, 0)
        assert math.isnan(result.scores[2])

    def test_per_cluster_exhaustive_oracle(self):
        corpus = generate_synthetic(
            SynthConfig(n_spaces=4, clusters_per_space=(4, 4), seed=13)
        )
        for space in corpus.spaces:
            m = build_utility_matrix(space, "token_f1")
            labels = space.labels()
            for s in sorted(set(labels)):
                members = [i for i, lab in enumerate(labels) if lab == s]
                result = conditional_mbr(m, labels, s, exclude_self=False)
                sub = [[float(m.values[i, j]) for j in members] for i in members]
                ref = naive_expected_utilities(sub, [1.0] * len(members), False)
                assert result.selected == members[naive_argmax(ref)]

    def test_unknown_label(self, rng):
        with pytest.raises(ValueError, match="unknown label"):
            conditional_mbr(random_matrix(rng, 3), ["a", "a", "b"], "z")

    def test_singleton_with_exclude_self(self, rng):
        with pytest.raises(ValueError, match="single member"):
            conditional_mbr(random_matrix(rng, 3), ["a", "a", "b"], "b", exclude_self=True)


class TestPermutationEquivariance:
    def test_all_methods(self):
        rng = np.random.default_rng(77)
        n = 9
        m = random_matrix(rng, n)
        w = rng.uniform(0.5, 1.5, size=n)
        labels = ["a", "a", "a", "b", "b", "b", "c", "c", "c"]
        vectors = rng.normal(size=(n, 4)).astype(np.float32)
        e = EmbeddingSet(n=n, d=4, vectors=vectors)
        perm = rng.permutation(n)

        # permuted candidate i is original candidate perm[i]
        pm = UtilityMatrix(n=n, values=m.values[np.ix_(perm, perm)], kind=m.kind)
        pw = w[perm]
        plabels = [labels[i] for i in perm]
        pe = EmbeddingSet(n=n, d=4, vectors=vectors[perm])

        def check(a, b):
            assert perm[b.selected] == a.selected
            assert [perm[i] for i in b.ranking] == list(a.ranking)

        check(mbr_select(m, w, True), mbr_select(pm, pw, True))
        check(cutoff_mbr(m, w, tau=0.5), cutoff_mbr(pm, pw, tau=0.5))
        check(
            cluster_mbr(m, assignment_from_labels(labels), w),
            cluster_mbr(pm, assignment_from_labels(plabels), pw),
        )
        check(embedding_mbr(m, e, w), embedding_mbr(pm, pe, pw))
        check(conditional_mbr(m, labels, "b", w), conditional_mbr(pm, plabels, "b", pw))


class TestDemoContinuous:
    def test_neg_squared_error_peaks_at_mixture_mean(self):
        mix = MixtureSpec(weights=(0.6, 0.4), means=(-2.0, 3.0), stds=(1.0, 1.0))
        optimum, curve = demo_continuous(mix, "neg_squared_error", grid=(-8.0, 8.0, 2001))
        step = 16.0 / 2000
        assert abs(optimum - 0.0) <= step
        assert curve.shape == (2001, 2)

    def test_symmetric_rbf_tie_breaks_to_lower_grid_point(self):
        mix = MixtureSpec(weights=(0.5, 0.5), means=(-2.0, 2.0), stds=(0.25, 0.25))
        # power-of-two grid spacing keeps the grid exactly symmetric
        optimum, _ = demo_continuous(mix, "rbf", bandwidth=0.1, grid=(-4.0, 4.0, 1025))
        assert optimum == pytest.approx(-2.0, abs=8.0 / 1024)
        assert optimum < 0

    def test_rbf_shifts_to_dominant_mode(self):
        mix = MixtureSpec(weights=(0.7, 0.3), means=(-2.0, 3.0), stds=(1.0, 1.0))
        optimum, _ = demo_continuous(mix, "rbf", bandwidth=1.0, grid=(-7.0, 8.0, 3001))
        assert abs(optimum - (-2.0)) <= 0.1

    def test_grid_validation(self):
        mix = MixtureSpec(weights=(0.5, 0.5), means=(-2.0, 2.0), stds=(1.0, 1.0))
        with pytest.raises(ValueError, match="degenerate grid"):
            demo_continuous(mix, grid=(-1.0, 1.0, 2001))  # does not cover means +/- 4 stds
        with pytest.raises(ValueError, match="degenerate grid"):
            demo_continuous(mix, grid=(-8.0, 8.0, 100))  # too few steps

    def test_mixture_validation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            MixtureSpec(weights=(0.6, 0.5), means=(0.0, 1.0), stds=(1.0, 1.0))
        with pytest.raises(ValueError, match="positive"):
            MixtureSpec(weights=(0.5, 0.5), means=(0.0, 1.0), stds=(1.0, -1.0))
