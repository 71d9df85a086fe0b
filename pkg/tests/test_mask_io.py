import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planvec import errors
from planvec.mask_io import (
    COLOR_TOLERANCE,
    OPENING_CLASSES,
    PALETTE,
    STRUCTURAL_CLASSES,
    Class,
    class_by_name,
    class_palette,
    decode_mask,
    encode_mask,
    joint_mask,
    palette_with_colors,
    read_mask,
    write_mask,
)


def random_mask(seed, shape=(16, 16)):
    return np.random.default_rng(seed).integers(0, 8, size=shape).astype(np.uint8)


class TestPalette:
    def test_has_background_plus_seven_classes(self):
        palette = class_palette()
        assert len(palette) == 8
        assert palette[0].name == "Background"
        assert palette[0].color == (255, 255, 255)

    def test_wall_entry(self):
        wall = class_palette()[1]
        assert wall.name == "Wall"
        assert wall.color == (0, 0, 0)
        assert wall.is_boundary and not wall.is_opening

    def test_window_entry(self):
        window = class_palette()[6]
        assert window.name == "Window"
        assert window.color == (245, 130, 48)
        assert window.is_opening

    def test_expected_colors(self):
        colors = {info.name: info.color for info in PALETTE}
        assert colors["Glass wall"] == (230, 25, 75)
        assert colors["Railing"] == (60, 180, 75)
        assert colors["Door"] == (255, 225, 25)
        assert colors["Sliding door"] == (0, 130, 200)
        assert colors["Stairs"] == (70, 240, 240)

    def test_boundary_and_opening_flags(self):
        assert set(c for c in Class if class_palette()[c].is_boundary) == {
            Class.WALL,
            Class.GLASS_WALL,
            Class.RAILING,
        }
        assert set(OPENING_CLASSES) == {Class.DOOR, Class.SLIDING_DOOR, Class.WINDOW}

    def test_colors_pairwise_separated(self):
        # decoding is unambiguous because every color pair is farther apart
        # than twice the tolerance
        colors = np.array([info.color for info in PALETTE], dtype=np.int16)
        for i in range(len(colors)):
            for j in range(i + 1, len(colors)):
                cheb = np.abs(colors[i] - colors[j]).max()
                assert cheb > 2 * COLOR_TOLERANCE

    def test_class_by_name(self):
        assert class_by_name("glass_wall") == Class.GLASS_WALL
        assert class_by_name("Window") == Class.WINDOW
        with pytest.raises(errors.PlanvecError):
            class_by_name("elevator")


class TestDecode:
    def test_exact_colors(self):
        raster = np.array([[(0, 0, 0), (255, 255, 255)]], dtype=np.uint8)
        assert decode_mask(raster).tolist() == [[Class.WALL, Class.BACKGROUND]]

    def test_within_tolerance(self):
        # exhaustive scan: (3,2,1) is Chebyshev 3 from black and far from the rest
        pixel = np.array([3, 2, 1], dtype=np.int16)
        dists = [np.abs(pixel - np.array(info.color, dtype=np.int16)).max() for info in PALETTE]
        assert dists[int(Class.WALL)] == 3
        assert all(d > COLOR_TOLERANCE for k, d in enumerate(dists) if k != int(Class.WALL))
        raster = np.array([[(3, 2, 1)]], dtype=np.uint8)
        assert decode_mask(raster)[0, 0] == Class.WALL

    def test_unknown_color(self):
        pixel = np.array([128, 128, 128], dtype=np.int16)
        dists = [np.abs(pixel - np.array(info.color, dtype=np.int16)).max() for info in PALETTE]
        assert min(dists) > COLOR_TOLERANCE  # 68 for the railing entry
        with pytest.raises(errors.UnknownColor):
            decode_mask(np.array([[(128, 128, 128)]], dtype=np.uint8))

    def test_ambiguous_color_with_custom_palette(self):
        palette = palette_with_colors({Class.WALL: (10, 10, 10), Class.STAIRS: (14, 14, 14)})
        with pytest.raises(errors.AmbiguousColor):
            decode_mask(np.array([[(12, 12, 12)]], dtype=np.uint8), palette)

    def test_exact_match_beats_tolerated_match(self):
        palette = palette_with_colors({Class.WALL: (10, 10, 10), Class.STAIRS: (14, 14, 14)})
        raster = np.array([[(14, 14, 14)]], dtype=np.uint8)
        assert decode_mask(raster, palette)[0, 0] == Class.STAIRS


class TestEncode:
    def test_wall_is_black(self):
        assert encode_mask(np.array([[1]], dtype=np.uint8))[0, 0].tolist() == [0, 0, 0]

    def test_background_is_white(self):
        assert encode_mask(np.zeros((1, 1), dtype=np.uint8))[0, 0].tolist() == [255, 255, 255]

    @pytest.mark.parametrize("seed", range(5))
    def test_round_trip_random(self, seed):
        mask = random_mask(seed)
        assert np.array_equal(decode_mask(encode_mask(mask)), mask)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_property(self, seed):
        mask = random_mask(seed, shape=(8, 8))
        assert np.array_equal(decode_mask(encode_mask(mask)), mask)


class TestJointMask:
    def test_membership(self):
        mask = np.array([[Class.WALL, Class.DOOR, Class.BACKGROUND]], dtype=np.uint8)
        assert joint_mask(mask, {Class.WALL, Class.DOOR}).tolist() == [[1, 1, 0]]

    def test_all_classes_is_foreground_test(self):
        mask = random_mask(3)
        joint = joint_mask(mask, STRUCTURAL_CLASSES)
        assert np.array_equal(joint, (mask != 0).astype(np.uint8))

    def test_disjoint_class(self):
        mask = np.full((4, 4), Class.WALL, dtype=np.uint8)
        assert not joint_mask(mask, {Class.WINDOW}).any()

    def test_empty_class_set(self):
        with pytest.raises(errors.EmptyClassSet):
            joint_mask(random_mask(0), set())

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_union_distributes(self, seed):
        mask = random_mask(seed, shape=(8, 8))
        a = {Class.WALL, Class.DOOR}
        b = {Class.WINDOW, Class.DOOR}
        lhs = joint_mask(mask, a | b)
        rhs = joint_mask(mask, a) | joint_mask(mask, b)
        assert np.array_equal(lhs, rhs)


class TestFiles:
    def test_color_round_trip(self, tmp_path):
        mask = random_mask(7)
        path = tmp_path / "mask.png"
        write_mask(path, mask)
        assert np.array_equal(read_mask(path), mask)

    def test_id_round_trip(self, tmp_path):
        mask = random_mask(8)
        path = tmp_path / "ids.png"
        write_mask(path, mask, color=False)
        assert np.array_equal(read_mask(path), mask)

    def test_id_file_rejects_out_of_range(self, tmp_path):
        from PIL import Image

        path = tmp_path / "bad.png"
        Image.fromarray(np.full((2, 2), 99, dtype=np.uint8), mode="L").save(path)
        with pytest.raises(errors.PlanvecError):
            read_mask(path)
