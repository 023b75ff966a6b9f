import numpy as np
import pytest

from rgbdpose import (BoundingBox2D, CameraIntrinsics, DepthImage, PointCloud)
from rgbdpose.errors import ShapeError
from rgbdpose.geometry import (apply_crop, depth_to_cloud, filter_by_mask,
                               normals_from_depth, resize_nearest,
                               square_crop_spec, subsample)


class TestSquareCropSpec:
    def test_small_box_snaps_to_base(self):
        spec = square_crop_spec(BoundingBox2D(100, 100, 160, 140), base=80,
                                image_dims=(640, 480))
        assert spec.side == 80

    def test_box_just_over_base(self):
        spec = square_crop_spec(BoundingBox2D(0, 0, 100, 90), base=80,
                                image_dims=(640, 480))
        assert spec.side == 160

    def test_exact_base_box(self):
        spec = square_crop_spec(BoundingBox2D(100, 100, 180, 180), base=80,
                                image_dims=(640, 480))
        assert spec.side == 80

    def test_centered_then_shifted_inside(self):
        # box near the left edge: centered crop would start negative
        spec = square_crop_spec(BoundingBox2D(2, 100, 42, 160), base=80,
                                image_dims=(640, 480))
        assert spec.origin[0] == 0
        assert 0 <= spec.origin[1] <= 480 - 80

    def test_crop_larger_than_image_keeps_center(self):
        spec = square_crop_spec(BoundingBox2D(0, 0, 100, 100), base=80,
                                image_dims=(120, 480))
        assert spec.side == 160
        assert spec.origin[0] < 0  # callers zero-pad

    def test_apply_crop_pads_with_zeros(self):
        img = np.arange(12, dtype=np.float32).reshape(3, 4)
        spec = square_crop_spec(BoundingBox2D(0, 0, 3, 3), base=4,
                                image_dims=(4, 3))
        out = apply_crop(img, spec)
        assert out.shape == (4, 4)
        assert (out[3, :] == 0).all() or (out[0, :] == 0).all()


class TestResizeNearest:
    def test_identity(self, rng):
        img = rng.integers(0, 255, (80, 80)).astype(np.uint8)
        assert np.array_equal(resize_nearest(img, 80), img)

    def test_constant(self):
        img = np.full((160, 160), 7, np.uint8)
        assert (resize_nearest(img, 80) == 7).all()

    def test_checkerboard_downsample(self):
        tile = np.array([[0, 0, 1, 1], [0, 0, 1, 1],
                         [1, 1, 0, 0], [1, 1, 0, 0]], np.uint8)
        img = np.tile(tile, (40, 40))  # 2x2 blocks on a 160x160 board
        out = resize_nearest(img, 80)
        expected = np.tile(np.array([[0, 1], [1, 0]], np.uint8), (40, 40))
        assert np.array_equal(out, expected)

    def test_matches_index_oracle(self, rng):
        img = rng.integers(0, 255, (160, 160)).astype(np.uint8)
        out = resize_nearest(img, 80)
        scale = 160 / 80
        for i, j in [(0, 0), (17, 5), (79, 79), (40, 66)]:
            si = int(np.floor((i + 0.5) * scale))
            sj = int(np.floor((j + 0.5) * scale))
            assert out[i, j] == img[si, sj]

    def test_output_values_occur_in_input(self, rng):
        img = rng.integers(0, 255, (96, 96)).astype(np.uint8)
        out = resize_nearest(img, 33)
        assert set(np.unique(out)) <= set(np.unique(img))

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            resize_nearest(np.zeros((4, 5)), 2)

    def test_three_channel_image(self, rng):
        img = rng.integers(0, 255, (160, 160, 3)).astype(np.uint8)
        out = resize_nearest(img, 80)
        assert out.shape == (80, 80, 3)
        scale = 2.0
        si = int(np.floor((11 + 0.5) * scale))
        sj = int(np.floor((42 + 0.5) * scale))
        assert np.array_equal(out[11, 42], img[si, sj])


class TestDepthToCloud:
    intr = CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0)

    def test_principal_point(self):
        data = np.zeros((48, 64), np.float32)
        data[24, 32] = 2.0
        cloud = depth_to_cloud(DepthImage.from_array(data), self.intr)
        assert np.allclose(cloud.points, [[0, 0, 2.0]])

    def test_all_invalid(self):
        cloud = depth_to_cloud(DepthImage.from_array(np.zeros((4, 4), np.float32)),
                               self.intr)
        assert len(cloud) == 0

    def test_pinhole_by_hand(self):
        data = np.zeros((48, 160), np.float32)
        data[24, 132] = 1.0  # u = cx + fx
        cloud = depth_to_cloud(DepthImage.from_array(data), self.intr)
        assert np.allclose(cloud.points, [[1.0, 0.0, 1.0]])

    def test_projection_roundtrip(self, rng):
        data = rng.uniform(0.5, 2.0, (48, 64)).astype(np.float32)
        data[rng.random((48, 64)) < 0.3] = 0.0
        depth = DepthImage.from_array(data)
        cloud = depth_to_cloud(depth, self.intr)
        uv = self.intr.project(cloud.points)
        vs, us = np.nonzero(depth.valid_mask)
        assert np.abs(uv - np.stack([us, vs], axis=1)).max() < 1e-6

    def test_colors_attached(self, rng):
        data = np.full((4, 4), 1.0, np.float32)
        rgb = rng.integers(0, 255, (4, 4, 3)).astype(np.uint8)
        cloud = depth_to_cloud(DepthImage.from_array(data), self.intr, rgb=rgb)
        assert cloud.colors.shape == (16, 3)
        assert np.allclose(cloud.colors, rgb.reshape(-1, 3) / 255.0)


class TestNormalsFromDepth:
    intr = CameraIntrinsics(fx=100.0, fy=100.0, cx=60.0, cy=50.0)

    def test_frontoparallel_plane(self):
        depth = DepthImage.from_array(np.full((100, 120), 1.5, np.float32))
        n = normals_from_depth(depth, self.intr)
        assert np.abs(n - [0.0, 0.0, -1.0]).max() < 1e-6

    def test_tilted_plane(self):
        # plane Y + Z = 1 (45 degrees about the image x-axis)
        v = np.arange(100)[:, None]
        z = 1.0 / (1.0 + (v - self.intr.cy) / self.intr.fy) * np.ones((100, 120))
        depth = DepthImage.from_array(z.astype(np.float32))
        n = normals_from_depth(depth, self.intr).reshape(100, 120, 3)
        analytic = np.array([0.0, -1.0, -1.0]) / np.sqrt(2.0)
        interior = n[2:-2, 2:-2].reshape(-1, 3)
        angles = np.degrees(np.arccos(np.clip(interior @ analytic, -1, 1)))
        assert angles.max() < 0.5

    def test_sphere(self):
        from scipy.ndimage import binary_erosion

        r0, zc = 0.05, 0.4
        h, w = 100, 120
        uu, vv = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
        dx = (uu - self.intr.cx) / self.intr.fx
        dy = (vv - self.intr.cy) / self.intr.fy
        a = dx * dx + dy * dy + 1.0
        disc = 4.0 * zc * zc - 4.0 * a * (zc * zc - r0 * r0)
        z = np.where(disc >= 0, (2 * zc - np.sqrt(np.maximum(disc, 0))) / (2 * a), 0.0)
        depth = DepthImage.from_array(z.astype(np.float32))
        n = normals_from_depth(depth, self.intr)
        cloud = depth_to_cloud(depth, self.intr)
        analytic = cloud.points - [0, 0, zc]
        analytic /= np.linalg.norm(analytic, axis=1, keepdims=True)
        interior = binary_erosion(depth.valid_mask, np.ones((5, 5)))[depth.valid_mask]
        dots = np.abs((n[interior] * analytic[interior]).sum(axis=1))
        angles = np.degrees(np.arccos(np.clip(dots, -1, 1)))
        assert angles.mean() < 2.0

    def test_unit_and_camera_facing(self, rng):
        data = rng.uniform(0.5, 2.0, (40, 50)).astype(np.float32)
        data[rng.random((40, 50)) < 0.25] = 0.0
        depth = DepthImage.from_array(data)
        n = normals_from_depth(depth, self.intr)
        cloud = depth_to_cloud(depth, self.intr)
        assert np.abs(np.linalg.norm(n, axis=1) - 1.0).max() < 1e-6
        assert ((n * cloud.points).sum(axis=1) < 1e-6).all()

    def test_isolated_pixel_fallback(self):
        data = np.zeros((9, 9), np.float32)
        data[4, 4] = 1.0
        depth = DepthImage.from_array(data)
        n = normals_from_depth(depth, self.intr)
        assert np.allclose(n, [[0.0, 0.0, -1.0]])


class TestSubsample:
    def test_small_cloud_unchanged(self, rng):
        cloud = PointCloud(points=rng.normal(size=(5, 3)))
        assert subsample(cloud, 10, seed=0) is cloud

    def test_single_point_exists(self, rng):
        pts = rng.normal(size=(20, 3))
        out = subsample(PointCloud(points=pts), 1, seed=3)
        assert any(np.array_equal(out.points[0], p) for p in pts)

    def test_deterministic_per_seed(self, rng):
        cloud = PointCloud(points=rng.normal(size=(100, 3)))
        a = subsample(cloud, 50, seed=9)
        b = subsample(cloud, 50, seed=9)
        c = subsample(cloud, 50, seed=10)
        assert np.array_equal(a.points, b.points)
        assert not np.array_equal(a.points, c.points)

    def test_attributes_stay_paired(self, rng):
        pts = rng.normal(size=(64, 3))
        colors = pts * 0.1 + 0.5  # colors encode the points
        cloud = PointCloud(points=pts, colors=np.clip(colors, 0, 1))
        out = subsample(cloud, 16, seed=1)
        assert np.allclose(out.colors, np.clip(out.points * 0.1 + 0.5, 0, 1))


class TestFilterByMask:
    def test_all_pass(self, rng):
        cloud = PointCloud(points=rng.normal(size=(8, 3)))
        out = filter_by_mask(cloud, np.ones(8), threshold=0.5)
        assert np.array_equal(out.points, cloud.points)

    def test_all_dropped(self, rng):
        cloud = PointCloud(points=rng.normal(size=(8, 3)))
        assert len(filter_by_mask(cloud, np.zeros(8), threshold=0.5)) == 0

    def test_matches_scan(self, rng):
        pts = rng.normal(size=(30, 3))
        scores = rng.random(30)
        out = filter_by_mask(PointCloud(points=pts), scores, threshold=0.4)
        expected = [p for p, s in zip(pts, scores) if s > 0.4]
        assert np.array_equal(out.points, np.asarray(expected))

    def test_length_mismatch(self, rng):
        with pytest.raises(ShapeError):
            filter_by_mask(PointCloud(points=rng.normal(size=(5, 3))),
                           np.ones(4), 0.5)
