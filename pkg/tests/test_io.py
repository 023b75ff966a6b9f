import json

import numpy as np
import pytest

from rgbdpose import (BoundingBox2D, CameraIntrinsics, DepthImage, PointCloud,
                      PoseSE3, RgbImage, TriangleMesh)
from rgbdpose import io as rio
from rgbdpose.errors import InputError
from rgbdpose.grasp import grasp_poses_for_line
from rgbdpose.pose import KeypointPrediction, KeypointSet

from conftest import random_rotation


class TestDepthPng:
    def test_roundtrip_millimeter_exact(self, rng, tmp_path):
        data = rng.integers(0, 3000, (48, 64)).astype(np.float32) / 1000.0
        data[rng.random((48, 64)) < 0.2] = 0.0
        depth = DepthImage.from_array(data)
        rio.write_depth_png(tmp_path / "d.png", depth)
        back = rio.read_depth_png(tmp_path / "d.png")
        assert np.array_equal(back.data, depth.data)

    def test_invalid_encodes_as_zero(self, tmp_path):
        depth = DepthImage.from_array(np.zeros((4, 4), np.float32))
        rio.write_depth_png(tmp_path / "d.png", depth)
        back = rio.read_depth_png(tmp_path / "d.png")
        assert not back.valid_mask.any()

    def test_sub_millimeter_rounds(self, tmp_path):
        depth = DepthImage.from_array(np.full((2, 2), 1.0004, np.float32))
        rio.write_depth_png(tmp_path / "d.png", depth)
        assert np.allclose(rio.read_depth_png(tmp_path / "d.png").data, 1.0)

    def test_depth_beyond_16bit_clips(self, tmp_path):
        depth = DepthImage.from_array(np.full((2, 2), 99.0, np.float32))
        rio.write_depth_png(tmp_path / "d.png", depth)
        assert np.allclose(rio.read_depth_png(tmp_path / "d.png").data, 65.535)

    def test_rejects_rgb_png(self, rng, tmp_path):
        rio.write_rgb(tmp_path / "x.png",
                      RgbImage.from_array(rng.integers(0, 255, (4, 4, 3),
                                                       dtype=np.uint8)))
        with pytest.raises(InputError):
            rio.read_depth_png(tmp_path / "x.png")


class TestRgbIo:
    def test_png_roundtrip(self, rng, tmp_path):
        img = RgbImage.from_array(rng.integers(0, 256, (32, 40, 3),
                                               dtype=np.uint8))
        rio.write_rgb(tmp_path / "i.png", img)
        assert np.array_equal(rio.read_rgb(tmp_path / "i.png").data, img.data)

    def test_jpeg_reads_back(self, rng, tmp_path):
        img = RgbImage.from_array(np.full((16, 16, 3), 128, np.uint8))
        rio.write_rgb(tmp_path / "i.jpg", img)
        back = rio.read_rgb(tmp_path / "i.jpg")
        assert back.data.shape == (16, 16, 3)


class TestMeshIo:
    def test_obj_roundtrip(self, rng, tmp_path):
        mesh = TriangleMesh(rng.normal(size=(10, 3)),
                            np.array([[0, 1, 2], [3, 4, 5], [6, 7, 8]]))
        mesh = mesh.with_vertex_normals()
        rio.write_obj(tmp_path / "m.obj", mesh)
        back = rio.read_obj(tmp_path / "m.obj")
        assert np.allclose(back.vertices, mesh.vertices, atol=1e-6)
        assert np.array_equal(back.triangles, mesh.triangles)
        assert np.allclose(back.normals, mesh.normals, atol=1e-6)

    def test_obj_quad_triangulation(self, tmp_path):
        (tmp_path / "q.obj").write_text(
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        mesh = rio.read_obj(tmp_path / "q.obj")
        assert len(mesh.triangles) == 2

    def test_obj_slash_formats(self, tmp_path):
        (tmp_path / "s.obj").write_text(
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n")
        mesh = rio.read_obj(tmp_path / "s.obj")
        assert len(mesh.triangles) == 1

    def test_ply_mesh_roundtrip(self, rng, tmp_path):
        mesh = TriangleMesh(rng.normal(size=(12, 3)),
                            np.array([[0, 1, 2], [4, 5, 6]]))
        rio.write_mesh_ply(tmp_path / "m.ply", mesh)
        back = rio.read_mesh_ply(tmp_path / "m.ply")
        assert np.allclose(back.vertices, mesh.vertices, atol=1e-6)
        assert np.array_equal(back.triangles, mesh.triangles)

    def test_read_mesh_dispatches_on_suffix(self, rng, tmp_path):
        mesh = TriangleMesh(rng.normal(size=(6, 3)), np.array([[0, 1, 2]]))
        rio.write_obj(tmp_path / "a.obj", mesh)
        rio.write_mesh_ply(tmp_path / "a.ply", mesh)
        assert len(rio.read_mesh(tmp_path / "a.obj").vertices) == 6
        assert len(rio.read_mesh(tmp_path / "a.ply").vertices) == 6
        with pytest.raises(InputError):
            rio.read_mesh(tmp_path / "a.stl")


class TestCloudPly:
    def test_full_attribute_roundtrip(self, rng, tmp_path):
        normals = rng.normal(size=(20, 3))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        cloud = PointCloud(points=rng.normal(size=(20, 3)), normals=normals,
                           colors=rng.random((20, 3)))
        rio.write_cloud_ply(tmp_path / "c.ply", cloud)
        back = rio.read_cloud_ply(tmp_path / "c.ply")
        assert np.allclose(back.points, cloud.points, atol=1e-6)
        assert np.abs((back.normals * cloud.normals).sum(axis=1) - 1).max() < 1e-5
        assert np.abs(back.colors - cloud.colors).max() <= 0.5 / 255 + 1e-9

    def test_xyz_only(self, rng, tmp_path):
        cloud = PointCloud(points=rng.normal(size=(7, 3)))
        rio.write_cloud_ply(tmp_path / "c.ply", cloud)
        back = rio.read_cloud_ply(tmp_path / "c.ply")
        assert back.normals is None and back.colors is None


class TestLabelJson:
    def test_roundtrip(self, tmp_path, rng):
        intr = CameraIntrinsics(500.0, 505.0, 320.5, 240.5)
        pose = PoseSE3(random_rotation(rng), [0.1, 0.2, 0.9])
        bbox = BoundingBox2D(10, 20, 100, 200)
        rio.write_label_json(tmp_path / "l.json", "duck", intr, pose, bbox)
        object_id, i2, p2, b2 = rio.read_label_json(tmp_path / "l.json")
        assert object_id == "duck"
        assert i2 == intr
        assert np.abs(p2.rotation - pose.rotation).max() < 1e-12
        assert np.allclose(p2.translation, pose.translation)
        assert b2 == bbox

    def test_cam_k_layout(self, tmp_path):
        intr = CameraIntrinsics(100.0, 110.0, 32.0, 24.0)
        rio.write_label_json(tmp_path / "l.json", "x", intr,
                             PoseSE3.identity(), BoundingBox2D(0, 0, 1, 1))
        doc = json.loads((tmp_path / "l.json").read_text())
        assert doc["cam_K"] == [100.0, 0.0, 32.0, 0.0, 110.0, 24.0, 0.0, 0.0, 1.0]

    def test_malformed_raises(self, tmp_path):
        (tmp_path / "bad.json").write_text('{"object_id": "x"}')
        with pytest.raises(InputError):
            rio.read_label_json(tmp_path / "bad.json")


class TestPredictionBlobs:
    def test_roundtrip(self, rng, tmp_path):
        pred = KeypointPrediction(points=rng.normal(size=(50, 3)),
                                  offsets=rng.normal(size=(50, 8, 3)),
                                  scores=rng.random(50))
        rio.write_prediction(tmp_path, "000042", "cat", pred)
        frame_id, object_id, back = rio.read_prediction(tmp_path / "000042.json")
        assert (frame_id, object_id) == ("000042", "cat")
        assert np.allclose(back.points, pred.points, atol=1e-6)
        assert np.allclose(back.offsets, pred.offsets, atol=1e-6)
        assert np.allclose(back.scores, pred.scores, atol=1e-6)

    def test_sidecar_declares_layout(self, rng, tmp_path):
        pred = KeypointPrediction(points=rng.normal(size=(5, 3)),
                                  offsets=rng.normal(size=(5, 4, 3)),
                                  scores=rng.random(5))
        rio.write_prediction(tmp_path, "f", "obj", pred)
        doc = json.loads((tmp_path / "f.json").read_text())
        assert doc["order"] == "row-major"
        assert doc["dtype"] == "float32"
        assert doc["shape"] == [5, 4]
        assert doc["fields"]["offsets"]["shape"] == [5, 4, 3]
        blob_len = (tmp_path / doc["blob"]).stat().st_size
        assert blob_len == 4 * (5 * 3 + 5 * 4 * 3 + 5)

    def test_malformed_blob_raises(self, tmp_path):
        (tmp_path / "bad.json").write_text('{"blob": "missing.bin"}')
        with pytest.raises(InputError):
            rio.read_prediction(tmp_path / "bad.json")


class TestKeypointAndGraspJson:
    def test_keypoints_roundtrip(self, rng, tmp_path):
        kps = KeypointSet(rng.normal(size=(9, 3)))
        rio.write_keypoints_json(tmp_path / "k.json", kps)
        back = rio.read_keypoints_json(tmp_path / "k.json")
        assert np.allclose(back.keypoints, kps.keypoints)

    def test_keypoints_accepts_bare_array(self, tmp_path):
        (tmp_path / "k.json").write_text("[[0,0,0],[1,0,0],[0,1,0]]")
        assert len(rio.read_keypoints_json(tmp_path / "k.json")) == 3

    def test_grasps_roundtrip(self, tmp_path):
        grasps = grasp_poses_for_line([0, 0, 0], [0.03, 0, 0], 6)
        rio.write_grasps_json(tmp_path / "g.json", grasps)
        back = rio.read_grasps_json(tmp_path / "g.json")
        assert len(back) == len(grasps)
        for a, b in zip(grasps, back):
            assert np.allclose(a.pose.rotation, b.pose.rotation)
            assert np.allclose(a.contact_a, b.contact_a)
            assert a.width == pytest.approx(b.width)

    def test_grasp_record_schema(self, tmp_path):
        grasps = grasp_poses_for_line([0, 0, 0], [0.03, 0, 0], 1)
        rio.write_grasps_json(tmp_path / "g.json", grasps)
        rows = json.loads((tmp_path / "g.json").read_text())
        assert set(rows[0]) == {"R", "t", "width", "contacts"}
        assert len(rows[0]["R"]) == 9
        assert len(rows[0]["contacts"]) == 2

    def test_malformed_grasp_raises(self, tmp_path):
        (tmp_path / "g.json").write_text('[{"R": [1,2]}]')
        with pytest.raises(InputError):
            rio.read_grasps_json(tmp_path / "g.json")
