"""Label validation and the label-similarity graph."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ckd.errors import UnlabeledSampleError, ValidationError
from ckd.semgraph import SemanticGraph, build_graph, cosine_similarity, validate_labels


def _random_labels(rng, n, c):
    y = np.zeros((n, c))
    for i in range(n):
        k = int(rng.integers(1, c + 1))
        y[i, rng.choice(c, size=k, replace=False)] = 1.0
    return y


class TestValidateLabels:
    def test_accepts_binary(self):
        validate_labels(np.array([[1.0, 0.0], [0.0, 1.0]]))

    def test_rejects_fractional(self):
        with pytest.raises(ValidationError):
            validate_labels(np.array([[0.5, 1.0]]))

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            validate_labels(np.array([[-1.0, 1.0]]))

    def test_unlabeled_row_named(self):
        y = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
        with pytest.raises(UnlabeledSampleError, match="sample 1"):
            validate_labels(y)

    def test_rejects_1d(self):
        with pytest.raises(ValidationError):
            validate_labels(np.array([1.0, 0.0]))


class TestCosineSimilarity:
    def test_known_value(self):
        got = cosine_similarity(np.array([1.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]))
        assert abs(got - 1.0 / np.sqrt(2.0)) < 1e-12

    def test_identical_vectors(self):
        v = np.array([1.0, 0.0, 1.0])
        assert abs(cosine_similarity(v, v) - 1.0) < 1e-12

    def test_disjoint_vectors(self):
        got = cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert abs(got) < 1e-12

    def test_zero_vector_rejected(self):
        with pytest.raises(UnlabeledSampleError):
            cosine_similarity(np.zeros(3), np.array([1.0, 0.0, 0.0]))

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            cosine_similarity(np.ones(2), np.ones(3))


class TestBuildGraph:
    def test_one_hot_identity(self):
        g = build_graph(np.eye(3))
        np.testing.assert_allclose(g.similarities, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(g.laplacian, np.zeros((3, 3)), atol=1e-12)

    def test_multilabel_overlap(self):
        y = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
        g = build_graph(y)
        assert abs(g.similarities[0, 1] - 1.0 / np.sqrt(2.0)) < 1e-12

    def test_shared_class_pair(self):
        y = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        g = build_graph(y)
        assert abs(g.similarities[0, 1] - 1.0) < 1e-12
        assert abs(g.similarities[0, 2]) < 1e-12

    def test_laplacian_row_sums_zero(self):
        rng = np.random.default_rng(0)
        g = build_graph(_random_labels(rng, 12, 4))
        assert np.abs(g.laplacian.sum(axis=1)).max() < 1e-10

    def test_laplacian_psd(self):
        rng = np.random.default_rng(1)
        g = build_graph(_random_labels(rng, 10, 3))
        assert np.linalg.eigvalsh(g.laplacian).min() >= -1e-10

    def test_laplacian_quadratic_form_identity(self):
        # tr(Z^T L Z) must equal the half-sum of weighted squared row gaps.
        rng = np.random.default_rng(2)
        g = build_graph(_random_labels(rng, 9, 4))
        z = rng.standard_normal((9, 3))
        direct = float(np.trace(z.T @ g.laplacian @ z))
        gaps = 0.0
        for i in range(9):
            for j in range(9):
                gaps += g.similarities[i, j] * float(np.sum((z[i] - z[j]) ** 2))
        assert abs(direct - 0.5 * gaps) <= 1e-8 * max(1.0, abs(direct))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_similarity_bounds_and_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 10))
        c = int(rng.integers(1, 5))
        g = build_graph(_random_labels(rng, n, c))
        s = g.similarities
        assert np.linalg.norm(s - s.T) < 1e-10
        assert s.min() >= -1e-12 and s.max() <= 1.0 + 1e-12
        np.testing.assert_allclose(np.diag(s), np.ones(n), atol=1e-12)

    def test_arrays_read_only(self):
        g = build_graph(np.eye(2))
        with pytest.raises(ValueError):
            g.similarities[0, 0] = 5.0
        with pytest.raises(ValueError):
            g.laplacian[0, 0] = 5.0

    def test_is_frozen_dataclass(self):
        g = build_graph(np.eye(2))
        with pytest.raises(AttributeError):
            g.similarities = np.zeros((2, 2))
        assert isinstance(g, SemanticGraph)

    def test_unlabeled_sample_propagates(self):
        with pytest.raises(UnlabeledSampleError):
            build_graph(np.array([[1.0, 0.0], [0.0, 0.0]]))
