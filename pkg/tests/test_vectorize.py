import math

import numpy as np
import pytest

from planvec import errors
from planvec.geometry import fill_polygon, pixel_corner_points, signed_area
from planvec.heatmap import Component, connected_components
from planvec.mask_io import STRUCTURAL_CLASSES, Class, joint_mask
from planvec.vectorize import (
    DEFAULT_COLLINEAR_COS,
    Polygon,
    Thresholds,
    approximate_polygons,
    assign_classes,
    fitting_score,
    min_area_rect,
    read_polygons,
    refine_polygons,
    split_component,
    vectorize_mask,
    write_geojson,
    write_polygons,
)


def brute_force_min_rect_area(points, step_deg=0.5):
    """Oracle: scan rectangle areas over a dense grid of orientations."""
    pts = np.asarray(points, dtype=float)
    best = math.inf
    for deg in np.arange(0.0, 90.0, step_deg):
        th = math.radians(deg)
        c, s = math.cos(th), math.sin(th)
        u = pts @ np.array([c, s])
        v = pts @ np.array([-s, c])
        best = min(best, (u.max() - u.min()) * (v.max() - v.min()))
    return best


def component_of(mask):
    comps = connected_components(mask)
    assert len(comps) == 1
    return comps[0]


class TestMinAreaRect:
    def test_unit_square(self):
        rect = min_area_rect(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
        assert rect.area == pytest.approx(1.0)
        assert rect.size == pytest.approx((1.0, 1.0))
        assert rect.center == pytest.approx((0.5, 0.5))

    def test_collinear_degenerate(self):
        rect = min_area_rect(np.array([[0, 0], [4, 0]], dtype=float))
        assert rect.size[0] == pytest.approx(4.0)
        assert rect.size[1] == 0.0
        assert rect.angle == pytest.approx(0.0)

    def test_rotated_diamond(self):
        pts = np.array([[0, 0], [2, 2], [4, 0], [2, -2]], dtype=float)
        rect = min_area_rect(pts)
        assert rect.area == pytest.approx(8.0)
        assert rect.angle == pytest.approx(math.pi / 4)

    def test_empty(self):
        with pytest.raises(errors.EmptyPointSet):
            min_area_rect(np.zeros((0, 2)))

    def test_single_point(self):
        rect = min_area_rect(np.array([[3.0, 4.0]]))
        assert rect.size == (0.0, 0.0)
        assert rect.center == (3.0, 4.0)

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_rotation_scan(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.normal(0, 10, size=(rng.integers(3, 50), 2))
        rect = min_area_rect(pts)
        oracle = brute_force_min_rect_area(pts)
        assert rect.area <= oracle + 1e-9
        assert (oracle - rect.area) / oracle <= 0.01

    @pytest.mark.parametrize("seed", range(6))
    def test_never_beats_axis_aligned_box(self, seed):
        rng = np.random.default_rng(100 + seed)
        pts = rng.uniform(-5, 5, size=(20, 2))
        rect = min_area_rect(pts)
        aabb = (pts[:, 0].max() - pts[:, 0].min()) * (pts[:, 1].max() - pts[:, 1].min())
        assert rect.area <= aabb + 1e-9

    def test_corners_reconstruct_rect(self):
        pts = np.random.default_rng(0).normal(0, 4, size=(15, 2))
        rect = min_area_rect(pts)
        again = min_area_rect(rect.corners())
        assert again.area == pytest.approx(rect.area, rel=1e-9)
        assert rect.contains(pts).all()


class TestFittingScore:
    def test_full_cover(self):
        mask = np.zeros((10, 10), dtype=np.uint8)
        mask[2:6, 1:8] = 1
        comp = component_of(mask)
        rect = min_area_rect(pixel_corner_points(comp.pixels))
        assert fitting_score(mask, rect) == 1.0

    def test_empty_region(self):
        mask = np.zeros((10, 10), dtype=np.uint8)
        rect = min_area_rect(np.array([[1, 1], [7, 1], [7, 5], [1, 5]], dtype=float))
        assert fitting_score(mask, rect) == 0.0

    def test_l_component_in_axis_aligned_rect(self):
        # a 4x2 window over an L leaves 6 of 8 cells filled
        mask = np.zeros((6, 8), dtype=np.uint8)
        mask[0, 0:4] = 1
        mask[1, 0:2] = 1
        rect = min_area_rect(np.array([[0, 0], [4, 0], [4, 2], [0, 2]], dtype=float))
        assert fitting_score(mask, rect) == pytest.approx(6 / 8)

    def test_zero_area(self):
        mask = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(errors.ZeroAreaRect):
            fitting_score(mask, min_area_rect(np.array([[0.0, 0.0], [3.0, 0.0]])))


class TestApproximatePolygons:
    def test_solid_bar_single_polygon(self):
        mask = np.zeros((10, 16), dtype=np.uint8)
        mask[3:7, 2:12] = 1
        polys = approximate_polygons(mask)
        assert len(polys) == 1
        assert len(polys[0].vertices) == 4
        assert polys[0].area == pytest.approx(40.0)

    def test_l_shape_traced(self):
        # two overlapping 10x4 bars: the minimum rectangle is the 10x10
        # bounding box holding 64 of 100 pixel centers, so a single polygon
        # comes out at fitting score 0.64
        mask = np.zeros((14, 14), dtype=np.uint8)
        mask[0:4, 0:10] = 1
        mask[0:10, 0:4] = 1
        joint_total = int(mask.sum())
        assert joint_total == 64
        polys = approximate_polygons(mask, eps_u=0.5)
        assert len(polys) == 1
        rect = min_area_rect(polys[0].vertices)
        assert rect.area == pytest.approx(100.0)
        assert fitting_score(mask, rect) == pytest.approx(0.64)

    def test_two_disjoint_squares(self):
        mask = np.zeros((20, 20), dtype=np.uint8)
        mask[2:8, 2:8] = 1
        mask[12:18, 12:18] = 1
        assert len(approximate_polygons(mask)) == 2

    def test_empty_mask(self):
        assert approximate_polygons(np.zeros((5, 5), dtype=np.uint8)) == []

    def test_emitted_scores_reach_threshold(self, corpus):
        mask = corpus[0]
        joint = joint_mask(mask, STRUCTURAL_CLASSES)
        for poly in approximate_polygons(joint):
            if poly.fallback:
                continue
            rect = min_area_rect(poly.vertices)
            assert fitting_score(joint, rect) >= 0.5

    def test_covers_all_foreground(self, corpus):
        mask = corpus[1]
        joint = joint_mask(mask, STRUCTURAL_CLASSES)
        h, w = joint.shape
        cover = np.zeros((h, w), dtype=bool)
        for poly in approximate_polygons(joint):
            cover |= fill_polygon(poly.vertices, w, h)
        # full coverage up to half-pixel boundary effects
        missed = (joint > 0) & ~cover
        assert missed.sum() == 0

    def test_tiny_components_are_fallbacks(self):
        mask = np.zeros((6, 6), dtype=np.uint8)
        mask[1, 1] = 1
        mask[4, 4] = 1
        polys = approximate_polygons(mask)
        assert len(polys) == 2
        assert all(p.fallback for p in polys)


class TestSplitComponent:
    def test_symmetric_bisection(self):
        mask = np.zeros((4, 12), dtype=np.uint8)
        mask[1:3, 1:11] = 1
        comp = component_of(mask)
        rect = min_area_rect(pixel_corner_points(comp.pixels))
        a, b = split_component(comp, rect)
        assert len(a) == len(b) == 10
        assert max(p[0] for p in a.pixels) < min(p[0] for p in b.pixels)

    def test_l_shape_split_line(self):
        mask = np.zeros((14, 14), dtype=np.uint8)
        mask[0:4, 0:10] = 1
        mask[0:10, 0:4] = 1
        comp = component_of(mask)
        rect = min_area_rect(pixel_corner_points(comp.pixels))
        a, b = split_component(comp, rect)
        assert len(a) + len(b) == 64
        assert len(a) > 0 and len(b) > 0

    def test_median_fallback_when_half_empty(self):
        # all pixels share the long-axis coordinate band on one side of center
        comp = Component(1, np.array([[0, 0], [1, 0], [2, 0], [3, 0], [4, 0], [5, 0]]))
        from planvec.vectorize import RotatedRect

        rect = RotatedRect((20.0, 0.5), (40.0, 1.0), 0.0)
        a, b = split_component(comp, rect)
        assert len(a) > 0 and len(b) > 0
        assert len(a) + len(b) == 6

    def test_singleton_raises(self):
        comp = Component(1, np.array([[0, 0]]))
        rect = min_area_rect(pixel_corner_points(comp.pixels))
        with pytest.raises(errors.DegenerateSplit):
            split_component(comp, rect)


class TestRefinePolygons:
    def test_merges_nearby_corners_to_midpoint(self):
        a = Polygon.make(np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]))
        b = Polygon.make(np.array([[13.0, 0.0], [23.0, 0.0], [23.0, 10.0], [13.0, 10.0]]))
        out = refine_polygons([a, b], eps_d=4.0, eps_a=DEFAULT_COLLINEAR_COS)
        va = {tuple(v) for v in out[0].vertices}
        vb = {tuple(v) for v in out[1].vertices}
        # (10,0)&(13,0) -> (11.5,0); (10,10)&(13,10) -> (11.5,10), shared exactly
        assert (11.5, 0.0) in va and (11.5, 0.0) in vb
        assert (11.5, 10.0) in va and (11.5, 10.0) in vb

    def test_removes_near_collinear_vertex(self):
        poly = Polygon.make(np.array([[0.0, 0.0], [5.0, 0.1], [10.0, 0.0], [5.0, 5.0]]))
        e1, e2 = np.array([5.0, 0.1]), np.array([5.0, -0.1])
        cos = float(e1 @ e2 / (np.linalg.norm(e1) * np.linalg.norm(e2)))
        assert cos == pytest.approx(24.99 / 25.01, abs=1e-6)
        assert cos >= DEFAULT_COLLINEAR_COS
        out = refine_polygons([poly], eps_d=0.0, eps_a=DEFAULT_COLLINEAR_COS)
        assert len(out) == 1
        assert (5.0, 0.1) not in {tuple(v) for v in out[0].vertices}
        assert len(out[0].vertices) == 3

    def test_right_angle_kept(self):
        poly = Polygon.make(np.array([[0.0, 0.0], [5.0, 0.0], [5.0, 5.0]]))
        out = refine_polygons([poly], eps_d=0.0, eps_a=DEFAULT_COLLINEAR_COS)
        assert len(out[0].vertices) == 3

    def test_spike_removed(self):
        # a fold-back vertex has |cos| near 1 and is dropped too
        poly = Polygon.make(np.array([[0.0, 0.0], [10.0, 0.0], [6.0, 0.05], [10.0, 5.0], [0.0, 5.0]]))
        out = refine_polygons([poly], eps_d=0.0, eps_a=DEFAULT_COLLINEAR_COS)
        assert len(out[0].vertices) == 4

    def test_degenerate_polygon_dropped(self):
        thin = Polygon.make(np.array([[0.0, 0.0], [10.0, 0.001], [20.0, 0.0]]))
        assert refine_polygons([thin]) == []

    def test_idempotent_on_synthetic_plans(self, corpus):
        for mask in corpus[:6]:
            once = vectorize_mask(mask)
            twice = refine_polygons(once)
            assert len(once) == len(twice)
            for p, q in zip(once, twice):
                assert np.array_equal(p.vertices, q.vertices)


class TestAssignClasses:
    def test_unanimous(self):
        mask = np.zeros((10, 10), dtype=np.uint8)
        mask[2:8, 2:8] = Class.WALL
        poly = Polygon.make(np.array([[2.0, 2.0], [8.0, 2.0], [8.0, 8.0], [2.0, 8.0]]))
        out = assign_classes([poly], mask)
        assert out[0].class_id == Class.WALL

    def test_majority(self):
        mask = np.zeros((10, 10), dtype=np.uint8)
        mask[0:6, 0:10] = Class.WALL
        mask[6:10, 0:10] = Class.WINDOW
        poly = Polygon.make(np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]))
        assert assign_classes([poly], mask)[0].class_id == Class.WALL

    def test_tie_goes_to_lower_id(self):
        mask = np.zeros((10, 10), dtype=np.uint8)
        mask[0:5, 0:10] = Class.WINDOW
        mask[5:10, 0:10] = Class.WALL
        poly = Polygon.make(np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]))
        assert assign_classes([poly], mask)[0].class_id == Class.WALL

    def test_no_foreground_dropped(self):
        mask = np.zeros((10, 10), dtype=np.uint8)
        poly = Polygon.make(np.array([[1.0, 1.0], [4.0, 1.0], [4.0, 4.0], [1.0, 4.0]]))
        assert assign_classes([poly], mask) == []


class TestVectorizeMask:
    def test_empty_mask(self):
        assert vectorize_mask(np.zeros((8, 8), dtype=np.uint8)) == []

    def test_single_wall_rect(self):
        mask = np.zeros((12, 20), dtype=np.uint8)
        mask[4:8, 3:17] = Class.WALL
        polys = vectorize_mask(mask)
        assert len(polys) == 1
        assert polys[0].class_id == Class.WALL
        assert len(polys[0].vertices) == 4

    def test_three_walls_and_door_per_class_iou(self):
        mask = np.zeros((64, 64), dtype=np.uint8)
        mask[5:9, 5:59] = Class.WALL
        mask[25:29, 5:40] = Class.WALL
        mask[45:49, 20:59] = Class.WALL
        mask[55:59, 10:22] = Class.DOOR
        polys = vectorize_mask(mask)
        assert len(polys) >= 4
        rebuilt = np.zeros_like(mask)
        for poly in polys:
            cells = fill_polygon(poly.vertices, 64, 64)
            rebuilt[cells] = int(poly.class_id)
        for cls in (Class.WALL, Class.DOOR):
            inter = ((rebuilt == cls) & (mask == cls)).sum()
            union = ((rebuilt == cls) | (mask == cls)).sum()
            assert inter / union >= 0.8

    def test_deterministic(self, corpus):
        mask = corpus[2]
        a = vectorize_mask(mask)
        b = vectorize_mask(mask)
        assert len(a) == len(b)
        for p, q in zip(a, b):
            assert np.array_equal(p.vertices, q.vertices)
            assert p.class_id == q.class_id

    def test_polygons_are_ccw_without_duplicate_neighbors(self, corpus):
        for poly in vectorize_mask(corpus[3]):
            assert signed_area(poly.vertices) > 0
            diffs = np.diff(np.vstack([poly.vertices, poly.vertices[:1]]), axis=0)
            assert (np.abs(diffs).sum(axis=1) > 0).all()


class TestSerialization:
    def test_line_format_round_trip(self, tmp_path, corpus):
        polys = vectorize_mask(corpus[0])
        path = tmp_path / "polygons.txt"
        write_polygons(path, polys)
        back = read_polygons(path)
        assert len(back) == len(polys)
        for p, q in zip(polys, back):
            assert q.class_id == p.class_id
            assert np.allclose(q.vertices, p.vertices, atol=0.005 + 1e-9)

    def test_line_format_shape(self, tmp_path):
        poly = Polygon.make(np.array([[0.0, 0.0], [4.0, 0.0], [4.0, 2.0], [0.0, 2.0]]), Class.WALL)
        path = tmp_path / "one.txt"
        write_polygons(path, [poly])
        line = path.read_text().strip()
        tokens = line.split()
        assert tokens[0] == "1" and tokens[1] == "4"
        assert len(tokens) == 2 + 8
        assert all("." in t for t in tokens[2:])

    def test_bad_record_raises(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 4 0 0 1 0\n")
        with pytest.raises(errors.MalformedDocument):
            read_polygons(path)

    def test_geojson(self, tmp_path):
        import json

        poly = Polygon.make(np.array([[0.0, 0.0], [4.0, 0.0], [4.0, 2.0], [0.0, 2.0]]), Class.DOOR)
        path = tmp_path / "polys.json"
        write_geojson(path, [poly])
        doc = json.loads(path.read_text())
        assert doc["type"] == "FeatureCollection"
        feature = doc["features"][0]
        assert feature["properties"]["class_name"] == "Door"
        ring = feature["geometry"]["coordinates"][0]
        assert ring[0] == ring[-1]
        assert len(ring) == 5
