"""Pixel-exact native operations against the scalar reference oracle."""

import numpy as np
import pytest

from vpsearch import imaging

from oracles import (
    reference_grayscale_pixel,
    reference_line_pixels,
    reference_overlay_pixel,
)

RED = (255, 0, 0)


class TestParseColor:
    def test_named_hex_rgb_forms(self):
        assert imaging.parse_color("red") == (255, 0, 0)
        assert imaging.parse_color("#00ff7f") == (0, 255, 127)
        assert imaging.parse_color("rgb(10, 20, 30)") == (10, 20, 30)

    def test_out_of_range_component_rejected(self):
        with pytest.raises(ValueError):
            imaging.parse_color("rgb(300,0,0)")

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            imaging.parse_color("sort-of-blue")


class TestCrop:
    def test_dimension_arithmetic(self):
        img = imaging.new_image(10, 10)
        out = imaging.crop(img, (2, 2, 6, 6))
        assert imaging.image_size(out) == (4, 4)

    def test_content_matches_slicing(self):
        rng = np.random.default_rng(7)
        img = rng.integers(0, 256, size=(12, 9, 3), dtype=np.uint8)
        out = imaging.crop(img, (1, 3, 7, 11))
        assert np.array_equal(out, img[3:11, 1:7])

    def test_clips_to_bounds(self):
        img = imaging.new_image(5, 5)
        out = imaging.crop(img, (-3, -3, 4, 4))
        assert imaging.image_size(out) == (4, 4)

    def test_disjoint_box_raises(self):
        img = imaging.new_image(5, 5)
        with pytest.raises(ValueError):
            imaging.crop(img, (10, 10, 20, 20))


class TestGrayscale:
    def test_matches_reference_formula_exactly(self):
        rng = np.random.default_rng(11)
        img = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
        out = imaging.to_grayscale(img)
        for y in range(8):
            for x in range(8):
                expected = reference_grayscale_pixel(*(int(c) for c in img[y, x]))
                assert tuple(out[y, x]) == (expected, expected, expected)


class TestOverlay:
    def test_matches_reference_blend_exactly(self):
        rng = np.random.default_rng(13)
        base = rng.integers(0, 256, size=(6, 6, 3), dtype=np.uint8)
        top = rng.integers(0, 256, size=(4, 3, 3), dtype=np.uint8)
        for opacity in (0.0, 0.25, 0.5, 0.733, 1.0):
            out = imaging.overlay(base, top, position=(2, 1), opacity=opacity)
            for y in range(6):
                for x in range(6):
                    if 1 <= y < 5 and 2 <= x < 5:
                        expected = tuple(
                            reference_overlay_pixel(int(base[y, x, c]), int(top[y - 1, x - 2, c]), opacity)
                            for c in range(3)
                        )
                    else:
                        expected = tuple(int(v) for v in base[y, x])
                    assert tuple(out[y, x]) == expected, (x, y, opacity)

    def test_off_canvas_overlay_is_noop(self):
        base = imaging.new_image(4, 4, (9, 9, 9))
        top = imaging.new_image(2, 2, RED)
        out = imaging.overlay(base, top, position=(10, 10), opacity=1.0)
        assert np.array_equal(out, base)


class TestDrawLine:
    def test_diagonal_width_one_golden(self):
        img = imaging.new_image(4, 4)
        out = imaging.draw_line(img, (0, 0), (3, 3), RED, width=1)
        for y in range(4):
            for x in range(4):
                expected = RED if x == y else (255, 255, 255)
                assert tuple(out[y, x]) == expected

    @pytest.mark.parametrize(
        "start,end,width",
        [
            ((0, 0), (9, 9), 1),
            ((0, 5), (11, 5), 1),
            ((3, 0), (3, 9), 1),
            ((1, 2), (10, 7), 1),
            ((10, 7), (1, 2), 1),
            ((0, 0), (11, 4), 3),
            ((2, 9), (9, 1), 2),
            ((5, 5), (5, 5), 4),
        ],
    )
    def test_matches_reference_rasterizer(self, start, end, width):
        img = imaging.new_image(12, 10)
        out = imaging.draw_line(img, start, end, RED, width=width)
        expected = reference_line_pixels(12, 10, start, end, width)
        for y in range(10):
            for x in range(12):
                painted = tuple(out[y, x]) == RED
                assert painted == ((x, y) in expected), (x, y)

    def test_endpoints_off_canvas_are_clipped(self):
        img = imaging.new_image(4, 4)
        out = imaging.draw_line(img, (-2, -2), (6, 6), RED, width=1)
        assert tuple(out[0, 0]) == RED
        assert tuple(out[3, 3]) == RED


class TestBoxes:
    def test_outline_leaves_interior_untouched(self):
        img = imaging.new_image(8, 8)
        out = imaging.draw_box(img, (1, 1, 7, 7), RED, width=1)
        assert tuple(out[1, 1]) == RED
        assert tuple(out[6, 6]) == RED
        assert tuple(out[3, 3]) == (255, 255, 255)
        # Exclusive right/bottom edge: row/col 7 untouched.
        assert tuple(out[7, 7]) == (255, 255, 255)

    def test_filled_box_covers_region_exactly(self):
        img = imaging.new_image(6, 6)
        out = imaging.draw_filled_box(img, (2, 1, 5, 4), RED)
        for y in range(6):
            for x in range(6):
                inside = 2 <= x < 5 and 1 <= y < 4
                assert (tuple(out[y, x]) == RED) == inside

    def test_degenerate_box_rejected(self):
        img = imaging.new_image(6, 6)
        with pytest.raises(ValueError):
            imaging.draw_box(img, (4, 1, 4, 3), RED)


class TestPngRoundTrip:
    def test_encode_decode_identity(self, tmp_path):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(7, 5, 3), dtype=np.uint8)
        assert np.array_equal(imaging.decode_png(imaging.encode_png(img)), img)
        imaging.save_png(img, tmp_path / "x.png")
        assert np.array_equal(imaging.load_image(tmp_path / "x.png"), img)
