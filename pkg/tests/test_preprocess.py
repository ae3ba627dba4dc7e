import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fishid import synthgen
from fishid.errors import EmptyForeground, ImageTooSmall
from fishid.imageio import RgbImage
from fishid.preprocess import (
    PreprocessConfig,
    foreground_orientation,
    median_filter,
    normalize_rotation,
    unify_background,
)


def rotated_ellipse(angle_deg, a=70, b=30, size=(200, 260)):
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    t = math.radians(angle_deg)
    dx, dy = xx - w / 2, yy - h / 2
    u = dx * math.cos(t) + dy * math.sin(t)
    v = -dx * math.sin(t) + dy * math.cos(t)
    inside = (u / a) ** 2 + (v / b) ** 2 <= 1
    px = np.full((h, w, 3), 255, dtype=np.uint8)
    px[inside] = (180, 40, 40)
    return RgbImage(px)


class TestMedianFilter:
    def test_radius_zero_is_identity(self):
        rng = np.random.default_rng(1)
        img = RgbImage(rng.integers(0, 256, (6, 9, 3), dtype=np.uint8))
        assert median_filter(img, 0) is img

    def test_center_outlier_removed(self):
        px = np.full((3, 3, 3), 100, dtype=np.uint8)
        px[1, 1] = (255, 255, 255)
        out = median_filter(RgbImage(px), 1)
        assert out.pixels[1, 1].tolist() == [100, 100, 100]

    def test_constant_field_unchanged(self):
        img = RgbImage(np.full((5, 4, 3), 7, dtype=np.uint8))
        assert median_filter(img, 1).same_as(img)

    @given(st.integers(0, 255), st.sampled_from([1, 2]))
    def test_idempotent_on_constant_images(self, v, radius):
        img = RgbImage(np.full((6, 6, 3), v, dtype=np.uint8))
        once = median_filter(img, radius)
        twice = median_filter(once, radius)
        assert twice.same_as(once)

    def test_bad_radius(self):
        img = RgbImage(np.zeros((3, 3, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            median_filter(img, 3)


class TestUnifyBackground:
    def test_near_background_pixel_absorbed(self):
        px = np.full((5, 5, 3), 255, dtype=np.uint8)
        px[2, 2] = (250, 250, 250)
        out, bg = unify_background(RgbImage(px), PreprocessConfig(background_tolerance=10))
        assert bg == (255, 255, 255)
        assert out.pixels[2, 2].tolist() == [255, 255, 255]

    def test_zero_tolerance_keeps_distinct_pixels(self):
        px = np.full((5, 5, 3), 255, dtype=np.uint8)
        px[2, 2] = (250, 250, 250)
        out, bg = unify_background(RgbImage(px), PreprocessConfig(background_tolerance=0))
        assert out.pixels[2, 2].tolist() == [250, 250, 250]

    def test_synthetic_fish_on_blue(self):
        cfg = synthgen.SynthConfig(background=(0, 0, 255))
        img = synthgen.render_fish(synthgen.default_families()[0], 4, cfg)
        out, bg = unify_background(RgbImage(img.pixels), PreprocessConfig())
        assert bg == (0, 0, 255)
        fish_before = np.any(img.pixels != (0, 0, 255), axis=2)
        fish_after = np.any(out.pixels != (0, 0, 255), axis=2)
        assert np.array_equal(fish_before, fish_after)
        assert np.array_equal(out.pixels[fish_after], img.pixels[fish_before])

    def test_border_mode_tie_breaks_lexicographically(self):
        # two border colors with equal counts; smallest (r, g, b) must win
        px = np.zeros((4, 4, 3), dtype=np.uint8)
        px[:2, :] = (10, 0, 0)
        px[2:, :] = (0, 10, 0)
        _, bg = unify_background(RgbImage(px), PreprocessConfig(background_tolerance=0))
        assert bg == (0, 10, 0)

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            unify_background(RgbImage(np.zeros((2, 5, 3), dtype=np.uint8)), PreprocessConfig())

    def test_never_touches_far_pixels(self):
        rng = np.random.default_rng(9)
        px = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
        cfg = PreprocessConfig(background_tolerance=60.0)
        out, bg = unify_background(RgbImage(px.copy()), cfg)
        d = np.sqrt(np.sum((px.astype(float) - bg) ** 2, axis=2))
        far = d > cfg.background_tolerance
        assert np.array_equal(out.pixels[far], px[far])


class TestNormalizeRotation:
    def test_axis_aligned_unchanged(self):
        img = rotated_ellipse(0)
        assert normalize_rotation(img, (255, 255, 255)) is img

    def test_thirty_degree_ellipse_straightened(self):
        img = rotated_ellipse(30)
        out = normalize_rotation(img, (255, 255, 255))
        residual = math.degrees(foreground_orientation(out, (255, 255, 255)))
        assert abs(residual) < 2.0

    def test_all_background_raises(self):
        img = RgbImage(np.full((10, 10, 3), 255, dtype=np.uint8))
        with pytest.raises(EmptyForeground):
            normalize_rotation(img, (255, 255, 255))

    @pytest.mark.parametrize("angle", [12, 30, 47])
    def test_foreground_count_preserved_within_5_percent(self, angle):
        img = rotated_ellipse(angle)
        before = int(np.any(img.pixels != (255, 255, 255), axis=2).sum())
        out = normalize_rotation(img, (255, 255, 255))
        after = int(np.any(out.pixels != (255, 255, 255), axis=2).sum())
        assert abs(after - before) <= 0.05 * before
