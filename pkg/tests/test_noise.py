import numpy as np
import pytest

from rgbdpose.noise import (GridNoiseParams, PerlinParams, derive_seed,
                            grid_gaussian_field, perlin_field, perlin_mask,
                            perlin_vector_field)


class TestPerlinField:
    def test_zero_amplitude_is_zero(self):
        f = perlin_field(32, 24, PerlinParams(frequency=4, amplitude=0, seed=1))
        assert np.array_equal(f, np.zeros((24, 32)))

    def test_deterministic(self):
        p = PerlinParams(frequency=3.0, amplitude=0.5, octaves=3, seed=99)
        assert np.array_equal(perlin_field(64, 48, p), perlin_field(64, 48, p))

    def test_seeds_differ(self):
        a = perlin_field(64, 64, PerlinParams(4, 1, 1, seed=1))
        b = perlin_field(64, 64, PerlinParams(4, 1, 1, seed=2))
        assert not np.array_equal(a, b)

    @pytest.mark.parametrize("seed", [0, 7, 1234])
    def test_bounded_and_smooth(self, seed):
        f = perlin_field(256, 256, PerlinParams(frequency=4, amplitude=1,
                                                seed=seed))
        assert np.abs(f).max() <= 1.0
        x = f.ravel()
        lag1 = np.corrcoef(x[:-1], x[1:])[0, 1]
        assert lag1 > 0.9

    @pytest.mark.parametrize("seed", range(6))
    def test_mean_near_zero(self, seed):
        f = perlin_field(512, 512, PerlinParams(frequency=4, amplitude=0.7,
                                                seed=seed))
        assert abs(f.mean()) <= 0.05 * 0.7

    def test_octaves_change_field(self):
        one = perlin_field(64, 64, PerlinParams(4, 1, 1, seed=5))
        three = perlin_field(64, 64, PerlinParams(4, 1, 3, seed=5))
        assert not np.array_equal(one, three)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            PerlinParams(frequency=0, amplitude=1)
        with pytest.raises(ValueError):
            PerlinParams(frequency=1, amplitude=-1)
        with pytest.raises(ValueError):
            PerlinParams(frequency=1, amplitude=1, octaves=0)


class TestPerlinVectorField:
    def test_norm_bound(self):
        f = perlin_vector_field(64, 64, PerlinParams(4, 2.5, 2, seed=3))
        assert np.linalg.norm(f, axis=-1).max() <= 2.5 + 1e-12

    def test_components_independent(self):
        f = perlin_vector_field(64, 64, PerlinParams(4, 1, 1, seed=3))
        assert not np.array_equal(f[..., 0], f[..., 1])


class TestPerlinMask:
    def test_threshold_above_amplitude(self):
        m = perlin_mask(32, 32, PerlinParams(4, 0.5, seed=1), threshold=0.6)
        assert not m.any()

    def test_threshold_below_negative_amplitude(self):
        m = perlin_mask(32, 32, PerlinParams(4, 0.5, seed=1), threshold=-0.6)
        assert m.all()

    @pytest.mark.parametrize("seed", [0, 3, 11])
    def test_zero_threshold_fraction(self, seed):
        m = perlin_mask(256, 256, PerlinParams(4, 1.0, seed=seed), threshold=0.0)
        assert 0.35 < m.mean() < 0.65


class TestGridGaussianField:
    def test_zero_sigma(self):
        f = grid_gaussian_field(16, 16, GridNoiseParams(3, 3, sigma=0.0, seed=1))
        assert np.array_equal(f, np.zeros((16, 16)))

    def test_corners_equal_nodes(self):
        params = GridNoiseParams(2, 2, sigma=1.0, seed=7)
        f = grid_gaussian_field(10, 8, params)
        nodes = np.random.default_rng(7).normal(0.0, 1.0, (2, 2))
        corners = [f[0, 0], f[0, -1], f[-1, 0], f[-1, -1]]
        expected = [nodes[0, 0], nodes[0, 1], nodes[1, 0], nodes[1, 1]]
        assert np.allclose(corners, expected, atol=1e-6)

    def test_interior_matches_bilinear_oracle(self):
        params = GridNoiseParams(4, 3, sigma=2.0, seed=21)
        width, height = 31, 17
        f = grid_gaussian_field(width, height, params)
        nodes = np.random.default_rng(21).normal(0.0, 2.0, (3, 4))
        for v, u in [(5, 9), (11, 23), (1, 30), (16, 0)]:
            gx = u * (4 - 1) / (width - 1)
            gy = v * (3 - 1) / (height - 1)
            ix, iy = min(int(gx), 2), min(int(gy), 1)
            fx, fy = gx - ix, gy - iy
            oracle = (nodes[iy, ix] * (1 - fx) * (1 - fy)
                      + nodes[iy, ix + 1] * fx * (1 - fy)
                      + nodes[iy + 1, ix] * (1 - fx) * fy
                      + nodes[iy + 1, ix + 1] * fx * fy)
            assert f[v, u] == pytest.approx(oracle, abs=1e-6)

    def test_reproducible(self):
        params = GridNoiseParams(5, 4, sigma=1.0, seed=1010)
        assert np.array_equal(grid_gaussian_field(40, 30, params),
                              grid_gaussian_field(40, 30, params))

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridNoiseParams(1, 3, sigma=1.0)


class TestDeriveSeed:
    def test_stable_and_distinct(self):
        assert derive_seed(1, "a") == derive_seed(1, "a")
        assert derive_seed(1, "a") != derive_seed(1, "b")
        assert derive_seed(1, "a") != derive_seed(2, "a")

    def test_64_bit(self):
        s = derive_seed("frame", 123)
        assert 0 <= s < 2 ** 64
