import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.fft import dctn, idctn

from cscgi.compressed_sensing import (BlockGrid, MeasurementMatrix,
                                      cs_gi_reconstruct, devectorize,
                                      ista_solve, measure, partition,
                                      reassemble, sample_measurement_matrix,
                                      second_stage_compress, soft_threshold,
                                      vectorize)
from cscgi.ghost_optics import BucketSeries, SceneImage, acquire, \
    generate_patterns


def naive_multiply(matrix, vec):
    m, n = matrix.shape
    out = np.zeros(m)
    for i in range(m):
        acc = 0.0
        for j in range(n):
            acc += matrix[i, j] * vec[j]
        out[i] = acc
    return out


def sparse_scene(shape, sparsity, seed):
    """Scene exactly `sparsity`-sparse in the orthonormal DCT basis.

    The DC atom is kept in the support so the affine rescale to [0, 1]
    does not change the support.
    """
    rng = np.random.default_rng(seed)
    coeff = np.zeros(shape)
    support = [(0, 0)]
    while len(support) < sparsity:
        ij = (int(rng.integers(0, 8)), int(rng.integers(0, 8)))
        if ij not in support:
            support.append(ij)
    for ij in support[1:]:
        coeff[ij] = rng.uniform(-1, 1)
    coeff[0, 0] = 1.0
    img = idctn(coeff, norm="ortho")
    img = (img - img.min()) / (img.max() - img.min())
    return SceneImage(pixels=img)


class TestBlockGrid:
    def test_counts(self):
        grid = BlockGrid(200, 200, 20)
        assert grid.blocks_per_row == 10
        assert grid.block_count == 100

    def test_non_divisible_rejected(self):
        with pytest.raises(ValueError):
            BlockGrid(201, 200, 20)


class TestPartition:
    def test_paper_scale_count(self):
        scene = SceneImage(pixels=np.zeros((200, 200)))
        assert len(partition(scene, 20)) == 100

    def test_identity_partition(self):
        rng = np.random.default_rng(0)
        scene = SceneImage(pixels=rng.uniform(0, 1, (20, 20)))
        blocks = partition(scene, 20)
        assert len(blocks) == 1
        assert np.array_equal(blocks[0], scene.pixels)

    def test_row_major_block_order(self):
        pixels = np.arange(16).reshape(4, 4) / 16.0
        blocks = partition(SceneImage(pixels=pixels), 2)
        assert np.array_equal(blocks[0], pixels[:2, :2])
        assert np.array_equal(blocks[1], pixels[:2, 2:])
        assert np.array_equal(blocks[2], pixels[2:, :2])

    @given(st.sampled_from([1, 2, 4, 5, 10, 20]), st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_round_trip(self, block_size, seed):
        rng = np.random.default_rng(seed)
        scene = SceneImage(pixels=rng.uniform(0, 1, (20, 40)))
        grid = BlockGrid(40, 20, block_size)
        back = reassemble(partition(scene, block_size), grid)
        assert np.array_equal(back.pixels, scene.pixels)

    def test_non_divisible_rejected(self):
        with pytest.raises(ValueError):
            partition(SceneImage(pixels=np.zeros((10, 10))), 3)


class TestVectorize:
    def test_block_to_400_vector(self):
        v = vectorize(np.zeros((20, 20)))
        assert v.shape == (400,)

    def test_row_major_definition(self):
        block = np.array([[1.0, 2.0], [3.0, 4.0]]) / 4.0
        assert np.array_equal(vectorize(block), [0.25, 0.5, 0.75, 1.0])

    def test_round_trip(self):
        block = np.random.default_rng(1).uniform(0, 1, (20, 20))
        assert np.array_equal(devectorize(vectorize(block)), block)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            vectorize(np.zeros((2, 3)))

    def test_devectorize_rejects_non_square_length(self):
        with pytest.raises(ValueError):
            devectorize(np.zeros(10))


class TestMeasurementMatrix:
    def test_paper_dimensions(self):
        phi = sample_measurement_matrix(100, 400, seed=0)
        assert phi.entries.shape == (100, 400)

    def test_seed_determinism(self):
        a = sample_measurement_matrix(50, 200, seed=3)
        b = sample_measurement_matrix(50, 200, seed=3)
        assert np.array_equal(a.entries, b.entries)

    def test_column_norms_near_unit(self):
        # column norm ~ chi_M / sqrt(M): mean 1, std ~ 1/sqrt(2M); the
        # mean over 400 columns concentrates by another 1/sqrt(400)
        phi = sample_measurement_matrix(100, 400, seed=5)
        norms = np.linalg.norm(phi.entries, axis=0)
        tol = 5 * (1 / np.sqrt(2 * 100)) / np.sqrt(400)
        assert abs(norms.mean() - 1.0) < tol

    def test_invalid_shapes(self):
        with pytest.raises(ValueError):
            sample_measurement_matrix(401, 400)
        with pytest.raises(ValueError):
            sample_measurement_matrix(0, 400)


class TestMeasure:
    def test_zero_vector(self):
        phi = sample_measurement_matrix(5, 8, seed=0)
        assert np.array_equal(measure(phi, np.zeros(8)), np.zeros(5))

    def test_linearity(self):
        phi = sample_measurement_matrix(5, 8, seed=1)
        rng = np.random.default_rng(2)
        x1, x2 = rng.standard_normal(8), rng.standard_normal(8)
        lhs = measure(phi, 2.5 * x1 - 1.25 * x2)
        rhs = 2.5 * measure(phi, x1) - 1.25 * measure(phi, x2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_naive_oracle_exact(self):
        phi = sample_measurement_matrix(5, 8, seed=3)
        x = np.random.default_rng(4).standard_normal(8)
        # float dot products can associate differently; demand near-exact
        assert np.max(np.abs(measure(phi, x) - naive_multiply(phi.entries, x))) < 1e-14

    def test_dimension_mismatch(self):
        phi = sample_measurement_matrix(5, 8, seed=0)
        with pytest.raises(ValueError):
            measure(phi, np.zeros(7))


class TestSecondStage:
    def test_dimensions(self):
        phi1 = sample_measurement_matrix(100, 400, seed=0)
        phi2 = sample_measurement_matrix(50, 100, seed=1)
        y = measure(phi1, np.random.default_rng(2).standard_normal(400))
        assert second_stage_compress(y, phi2).shape == (50,)

    def test_zero(self):
        phi2 = sample_measurement_matrix(50, 100, seed=1)
        assert np.array_equal(second_stage_compress(np.zeros(100), phi2),
                              np.zeros(50))

    def test_composition_associativity(self):
        phi1 = sample_measurement_matrix(100, 400, seed=0)
        phi2 = sample_measurement_matrix(50, 100, seed=1)
        x = np.random.default_rng(3).standard_normal(400)
        two_step = second_stage_compress(measure(phi1, x), phi2)
        combined = naive_multiply(phi2.entries @ phi1.entries, x)
        assert np.max(np.abs(two_step - combined)) < 1e-10

    def test_dimension_mismatch(self):
        phi2 = sample_measurement_matrix(50, 100, seed=1)
        with pytest.raises(ValueError):
            second_stage_compress(np.zeros(99), phi2)


class TestSolver:
    def test_zero_buckets_zero_estimate(self):
        pats = generate_patterns(30, 6, 6, seed=0)
        x, _ = ista_solve(pats.patterns.reshape(30, -1), np.zeros(30),
                          (6, 6), 0.1, iterations=100)
        assert np.array_equal(x, np.zeros((6, 6)))

    def test_zero_iterations_returns_zero_init(self):
        pats = generate_patterns(30, 6, 6, seed=0)
        y = np.random.default_rng(1).uniform(0, 10, 30)
        x, hist = ista_solve(pats.patterns.reshape(30, -1), y, (6, 6), 0.1,
                             iterations=0)
        assert np.array_equal(x, np.zeros((6, 6)))
        assert len(hist) == 1

    def test_negative_weight_rejected(self):
        pats = generate_patterns(10, 4, 4, seed=0)
        with pytest.raises(ValueError):
            ista_solve(pats.patterns.reshape(10, -1), np.zeros(10), (4, 4),
                       -0.1)

    def test_lambda_zero_first_step_is_gradient_descent(self):
        # 3x4 system, one step from zero: x1 = (1/L) A^T y elementwise
        a = np.array([[1.0, 2.0, 0.0, 1.0],
                      [0.0, 1.0, 3.0, 0.0],
                      [2.0, 0.0, 1.0, 1.0]])
        y = np.array([1.0, 2.0, 3.0])
        lip = 1.01 * np.linalg.eigvalsh(a.T @ a).max()
        # hand gradient of 0.5||Ax-y||^2 at x=0 is -A^T y
        hand = np.array([
            sum(a[i, j] * y[i] for i in range(3)) for j in range(4)]) / lip
        x, _ = ista_solve(a, y, (2, 2), 0.0, iterations=1)
        assert np.max(np.abs(x.ravel() - hand)) < 1e-6 * np.max(np.abs(hand))

    def test_objective_monotone_on_random_input(self):
        rng = np.random.default_rng(7)
        pats = generate_patterns(50, 8, 8, seed=2)
        y = rng.uniform(0, 20, 50)
        _, hist = ista_solve(pats.patterns.reshape(50, -1), y, (8, 8), 0.5,
                             iterations=500)
        diffs = np.diff(hist)
        assert np.all(diffs <= 0.0)

    def test_sparse_recovery(self):
        scene = sparse_scene((32, 32), 10, seed=42)
        pats = generate_patterns(400, 32, 32, seed=7)
        buckets = acquire(scene, pats)
        out = cs_gi_reconstruct(pats, buckets, sparsity_weight=0.05,
                                iterations=5000)
        rel = np.linalg.norm(out.pixels - scene.pixels) \
            / np.linalg.norm(scene.pixels)
        assert rel < 0.05

    def test_cs_gi_zero_buckets_normalizes_to_half(self):
        pats = generate_patterns(30, 6, 6, seed=0)
        out = cs_gi_reconstruct(pats, BucketSeries(values=np.zeros(30)), 0.1,
                                iterations=50)
        assert np.array_equal(out.pixels, np.full((6, 6), 0.5))

    def test_soft_threshold(self):
        v = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
        assert np.array_equal(soft_threshold(v, 1.0),
                              [-1.0, 0.0, 0.0, 0.0, 1.0])

    def test_length_mismatch(self):
        pats = generate_patterns(5, 4, 4, seed=0)
        with pytest.raises(ValueError):
            cs_gi_reconstruct(pats, BucketSeries(values=np.zeros(4)), 0.1)
