import numpy as np
import pytest

from rgbdpose import TriangleMesh


def random_rotation(rng):
    """Uniform random rotation matrix via a normalized quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def box_mesh(sx, sy, sz, center=(0.0, 0.0, 0.0)):
    """Axis-aligned box with outward-wound triangles."""
    hx, hy, hz = sx / 2, sy / 2, sz / 2
    corners = np.array([[x, y, z] for x in (-hx, hx) for y in (-hy, hy)
                        for z in (-hz, hz)], dtype=float)
    idx = lambda x, y, z: x * 4 + y * 2 + z
    quads = [
        (idx(0, 0, 0), idx(0, 1, 0), idx(0, 1, 1), idx(0, 0, 1)),
        (idx(1, 0, 0), idx(1, 0, 1), idx(1, 1, 1), idx(1, 1, 0)),
        (idx(0, 0, 0), idx(0, 0, 1), idx(1, 0, 1), idx(1, 0, 0)),
        (idx(0, 1, 0), idx(1, 1, 0), idx(1, 1, 1), idx(0, 1, 1)),
        (idx(0, 0, 0), idx(1, 0, 0), idx(1, 1, 0), idx(0, 1, 0)),
        (idx(0, 0, 1), idx(0, 1, 1), idx(1, 1, 1), idx(1, 0, 1)),
    ]
    faces = []
    for a, b, c, d in quads:
        for tri in ([a, b, c], [a, c, d]):
            v0, v1, v2 = corners[tri]
            if np.dot(np.cross(v1 - v0, v2 - v0), (v0 + v1 + v2) / 3) < 0:
                tri = tri[::-1]
            faces.append(tri)
    return TriangleMesh(corners + np.asarray(center), np.array(faces))


def icosphere(subdivisions=2):
    """Unit icosphere: (vertices, faces), vertices on the unit sphere."""
    t = (1 + 5 ** 0.5) / 2
    verts = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
                      [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
                      [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                      [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                      [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                      [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    for _ in range(subdivisions):
        cache = {}
        verts_list = verts.tolist()
        new_faces = []

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = np.asarray(verts_list[a]) + np.asarray(verts_list[b])
                m /= np.linalg.norm(m)
                cache[key] = len(verts_list)
                verts_list.append(m.tolist())
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        verts = np.asarray(verts_list)
        faces = np.asarray(new_faces)
    return verts, faces


def sphere_mesh(radius, center=(0.0, 0.0, 0.0), subdivisions=2):
    v, f = icosphere(subdivisions)
    return TriangleMesh(v * radius + np.asarray(center), f, v.copy())


def ellipsoid_mesh(radii, subdivisions=2):
    """Duck-scale smooth blob with exact analytic normals."""
    v, f = icosphere(subdivisions)
    radii = np.asarray(radii, dtype=float)
    n = v / radii
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    return TriangleMesh(v * radii, f, n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
