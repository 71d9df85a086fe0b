import numpy as np
import pytest

from planvec import errors
from planvec.mask_io import Class
from planvec.reconstruct3d import (
    DEFAULT_SPANS,
    HeightProfile,
    Mesh,
    export_obj,
    extrude,
    load_profile,
    mesh_volume,
    write_obj,
)
from planvec.vectorize import Polygon


def unit_square(cls=Class.WALL):
    return Polygon.make(
        np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), cls
    )


def signed_volume(vertices, faces):
    """Independent tetrahedron-sum volume, written out locally."""
    total = 0.0
    for a, b, c in faces:
        va, vb, vc = vertices[a], vertices[b], vertices[c]
        total += float(np.dot(va, np.cross(vb, vc)))
    return total / 6.0


def shoelace(ring):
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def edge_use_counts(faces):
    counts = {}
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            counts[key] = counts.get(key, 0) + 1
    return counts


class TestExtrude:
    def test_unit_prism_counts(self):
        profile = HeightProfile(pixel_scale=1.0)
        mesh = extrude([unit_square()], profile)
        assert len(mesh.vertices) == 8
        assert len(mesh.faces) == 12

    def test_unit_prism_watertight(self):
        mesh = extrude([unit_square()], HeightProfile(pixel_scale=1.0))
        assert all(n == 2 for n in edge_use_counts(mesh.faces.tolist()).values())

    def test_empty_set(self):
        mesh = extrude([])
        assert len(mesh.vertices) == 0 and len(mesh.faces) == 0

    def test_l_polygon_cap_triangulation(self):
        ring = np.array(
            [[0.0, 0.0], [6.0, 0.0], [6.0, 2.0], [2.0, 2.0], [2.0, 6.0], [0.0, 6.0]]
        )
        mesh = extrude([Polygon.make(ring, Class.WALL)], HeightProfile(pixel_scale=1.0))
        assert len(mesh.vertices) == 12
        # each cap holds n - 2 = 4 triangles, plus 12 side triangles
        assert len(mesh.faces) == 4 + 4 + 12
        assert all(n == 2 for n in edge_use_counts(mesh.faces.tolist()).values())

    @pytest.mark.parametrize("cls", sorted(DEFAULT_SPANS))
    def test_z_range_per_class(self, cls):
        mesh = extrude([unit_square(cls)], HeightProfile(pixel_scale=1.0))
        base, height = DEFAULT_SPANS[cls]
        assert mesh.vertices[:, 2].min() == pytest.approx(base)
        assert mesh.vertices[:, 2].max() == pytest.approx(base + height)

    def test_stairs_default_is_tallest(self):
        stairs = sum(DEFAULT_SPANS[Class.STAIRS])
        for cls, (base, height) in DEFAULT_SPANS.items():
            if cls != Class.STAIRS:
                assert base + height < stairs

    def test_volume_matches_area_times_height(self):
        scale = 0.01
        ring = np.array([[0.0, 0.0], [30.0, 0.0], [30.0, 10.0], [0.0, 10.0]])
        mesh = extrude([Polygon.make(ring, Class.WALL)], HeightProfile(pixel_scale=scale))
        base, height = DEFAULT_SPANS[Class.WALL]
        expected = shoelace(ring) * scale * scale * height
        got = signed_volume(mesh.vertices, mesh.faces.tolist())
        assert got == pytest.approx(expected, rel=1e-9)

    def test_y_axis_flips_into_world_space(self):
        ring = np.array([[0.0, 2.0], [4.0, 2.0], [4.0, 5.0], [0.0, 5.0]])
        mesh = extrude([Polygon.make(ring, Class.WALL)], HeightProfile(pixel_scale=1.0))
        assert mesh.vertices[:, 1].min() == pytest.approx(-5.0)
        assert mesh.vertices[:, 1].max() == pytest.approx(-2.0)

    def test_self_intersecting_skipped_by_default(self, caplog):
        bowtie = Polygon(
            np.array([[0.0, 0.0], [4.0, 4.0], [4.0, 0.0], [0.0, 4.0]]), Class.WALL
        )
        mesh = extrude([bowtie, unit_square()])
        # only the valid square produced a prism
        assert len(mesh.vertices) == 8

    def test_self_intersecting_raises_in_strict_mode(self):
        bowtie = Polygon(
            np.array([[0.0, 0.0], [4.0, 4.0], [4.0, 0.0], [0.0, 4.0]]), Class.WALL
        )
        with pytest.raises(errors.SelfIntersectingPolygon):
            extrude([bowtie], strict=True)

    def test_groups_by_class(self):
        door = Polygon.make(np.array([[3.0, 0.0], [5.0, 0.0], [5.0, 2.0], [3.0, 2.0]]), Class.DOOR)
        mesh = extrude([unit_square(), door])
        assert set(mesh.groups) == {Class.WALL, Class.DOOR}
        covered = sorted(
            (start, stop) for ranges in mesh.groups.values() for start, stop in ranges
        )
        assert covered[0][0] == 0
        assert covered[-1][1] == len(mesh.faces)


class TestExportObj:
    def test_empty_mesh_header_only(self):
        data = export_obj(Mesh.empty())
        assert data.decode().startswith("#")
        assert len(data.decode().strip().splitlines()) == 1

    def test_unit_prism_layout(self):
        mesh = extrude([unit_square()], HeightProfile(pixel_scale=1.0))
        lines = export_obj(mesh).decode().splitlines()
        assert sum(1 for l in lines if l.startswith("v ")) == 8
        assert sum(1 for l in lines if l.startswith("f ")) == 12
        assert "g Wall" in lines

    def test_group_names_have_no_spaces(self):
        poly = Polygon.make(
            np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]), Class.GLASS_WALL
        )
        lines = export_obj(extrude([poly])).decode().splitlines()
        groups = [l for l in lines if l.startswith("g ")]
        assert groups == ["g Glass_wall"]

    def test_deterministic_bytes(self):
        mesh1 = extrude([unit_square()], HeightProfile(pixel_scale=1.0))
        mesh2 = extrude([unit_square()], HeightProfile(pixel_scale=1.0))
        assert export_obj(mesh1) == export_obj(mesh2)

    def test_round_trip_vertices(self, tmp_path):
        rng = np.random.default_rng(11)
        ring = np.array([[0.0, 0.0], [7.3, 0.2], [6.9, 5.1], [0.4, 4.8]])
        mesh = extrude([Polygon.make(ring, Class.WALL)], HeightProfile(pixel_scale=0.01))
        path = tmp_path / "mesh.obj"
        write_obj(path, mesh)
        parsed = []
        for line in path.read_text().splitlines():
            if line.startswith("v "):
                parsed.append([float(t) for t in line.split()[1:]])
        parsed = np.array(parsed)
        assert parsed.shape == mesh.vertices.shape
        assert np.abs(parsed - mesh.vertices).max() <= 1e-4

    def test_faces_are_one_based(self):
        mesh = extrude([unit_square()])
        for line in export_obj(mesh).decode().splitlines():
            if line.startswith("f "):
                assert min(int(t) for t in line.split()[1:]) >= 1


class TestHeightProfile:
    def test_defaults_valid(self):
        profile = HeightProfile()
        assert profile.pixel_scale == 0.01

    def test_rejects_bad_scale(self):
        with pytest.raises(errors.ConfigError):
            HeightProfile(pixel_scale=0.0)

    def test_rejects_negative_height(self):
        with pytest.raises(errors.ConfigError):
            HeightProfile(spans={Class.WALL: (0.0, -1.0)})

    def test_load_profile_overrides(self, tmp_path):
        path = tmp_path / "profile.txt"
        path.write_text("pixel_scale=0.02\nwall.height=3.2\nwindow.base=1.0\n")
        profile = load_profile(path)
        assert profile.pixel_scale == 0.02
        assert profile.spans[Class.WALL] == (0.0, 3.2)
        assert profile.spans[Class.WINDOW][0] == 1.0

    def test_load_profile_rejects_unknown_key(self, tmp_path):
        path = tmp_path / "profile.txt"
        path.write_text("wall.paint=blue\n")
        with pytest.raises(errors.ConfigError):
            load_profile(path)
