"""Forward pass, reconstruction, and initialization of the autoencoder."""

import numpy as np
import pytest

from spof.da_model import (
    DaParams,
    accuracy,
    decoder_subcolumn,
    encode,
    init_params,
    reconstruct,
    sigmoid,
    z_value,
    z_vector,
)


def _dense_z_oracle(params, user_j, h):
    """Reference z computation with explicit Python loops."""
    l = params.code_width
    out = []
    for i in range(params.num_features):
        acc = 0.0
        for r in range(l):
            acc += params.decoder[user_j * l + r, i] * h[r]
        out.append(acc)
    return np.array(out)


class TestEncode:
    def test_zero_weights(self):
        params = DaParams(np.zeros((2, 3, 2)), np.zeros((4, 3)))
        h = encode(params, 0, [0.2, 0.8, 0.5])
        assert np.allclose(h, 0.5)

    def test_zero_input(self):
        params = init_params(3, 2, 2, seed=0)
        assert np.allclose(encode(params, 1, [0.0, 0.0, 0.0]), 0.5)

    def test_direct_sigmoid_value(self):
        params = DaParams(np.array([[[1.0], [1.0]]]), np.zeros((1, 2)))
        h = encode(params, 0, [1.0, 1.0])
        assert abs(h[0] - 1.0 / (1.0 + np.exp(-2.0))) < 1e-12
        assert abs(h[0] - 0.8808) < 1e-4

    def test_shape_error(self):
        params = init_params(3, 2, 1, seed=0)
        with pytest.raises(ValueError):
            encode(params, 0, [0.1, 0.2])


class TestZAndReconstruct:
    def test_zero_decoder(self):
        params = DaParams(np.zeros((1, 3, 2)), np.zeros((2, 3)))
        assert z_value(params, 0, 1, [0.3, 0.7]) == 0.0
        assert np.allclose(reconstruct(params, 0, [0.3, 0.7]), 0.5)

    def test_scalar_product(self):
        params = DaParams(np.zeros((1, 2, 1)), np.array([[2.0, 0.0]]))
        assert z_value(params, 0, 0, [0.5]) == 1.0

    def test_matches_dense_oracle(self):
        params = init_params(6, 3, 2, seed=5)
        h = np.random.default_rng(2).random(3)
        for j in range(2):
            oracle = _dense_z_oracle(params, j, h)
            fast = z_vector(params, j, h)
            for i in range(6):
                assert abs(z_value(params, j, i, h) - oracle[i]) < 1e-12
            assert np.allclose(fast, oracle, atol=1e-12)

    def test_reconstruct_composes_z_values(self):
        params = init_params(5, 2, 2, seed=7)
        h = np.random.default_rng(3).random(2)
        x_hat = reconstruct(params, 1, h)
        for i in range(5):
            assert x_hat[i] == sigmoid(z_value(params, 1, i, h))

    def test_sigmoid_saturation(self):
        params = DaParams(np.zeros((1, 2, 1)), np.full((1, 2), 100.0))
        x_hat = reconstruct(params, 0, [1.0])
        assert np.all(x_hat > 1.0 - 1e-12)

    def test_index_errors(self):
        params = init_params(3, 2, 1, seed=0)
        with pytest.raises(IndexError):
            z_value(params, 1, 0, [0.1, 0.2])
        with pytest.raises(IndexError):
            decoder_subcolumn(params, 0, 3)


class TestSubColumnPartition:
    def test_blocks_cover_all_rows_disjointly(self):
        params = init_params(4, 2, 3, seed=1)
        for i in range(4):
            rows = []
            for j in range(3):
                col = decoder_subcolumn(params, j, i)
                assert col.size == 2
                rows.extend(params.decoder[j * 2:(j + 1) * 2, i])
            assert np.array_equal(np.array(rows), params.decoder[:, i])


class TestSingleUserReduction:
    def test_m1_matches_standalone_autoencoder(self):
        # With one user, the distributed model is the plain autoencoder.
        params = init_params(4, 2, 1, seed=9)
        x = np.random.default_rng(1).random(4)
        h = encode(params, 0, x)
        assert np.allclose(h, sigmoid(params.encoders[0].T @ x))
        assert np.allclose(z_vector(params, 0, h), params.decoder.T @ h)


class TestAccuracy:
    def test_identity(self):
        x = np.random.default_rng(0).random((3, 4))
        assert accuracy(x, x) == 100.0

    def test_maximal_error(self):
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert accuracy(x, 1.0 - x) == 0.0

    def test_uniform_offset(self):
        x = np.full((2, 5), 0.5)
        assert abs(accuracy(x, np.full((2, 5), 0.75)) - 75.0) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            accuracy(np.zeros((2, 2)), np.zeros((2, 3)))


class TestInit:
    def test_deterministic(self):
        a = init_params(14, 7, 2, seed=11)
        b = init_params(14, 7, 2, seed=11)
        assert np.array_equal(a.encoders, b.encoders)
        assert np.array_equal(a.decoder, b.decoder)

    def test_bounds(self):
        params = init_params(14, 7, 2, seed=3)
        bound = np.sqrt(6.0 / 21.0)
        assert np.all(np.abs(params.encoders) <= bound)
        assert np.all(np.abs(params.decoder) <= bound)

    def test_shapes(self):
        params = init_params(14, 7, 2, seed=3)
        assert params.encoders.shape == (2, 14, 7)
        assert params.decoder.shape == (14, 14)

    def test_width_check(self):
        with pytest.raises(ValueError):
            init_params(3, 4, 1, seed=0)
