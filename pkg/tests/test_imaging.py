import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singan import imaging
from singan.imaging import (
    InvalidInputError,
    build_pinned_schedule,
    build_scale_schedule,
    build_pyramid,
    downsample,
    load_image,
    save_image,
    upsample,
)


# --- independent reference resampler (naive loops, same kernel definition) ---

def _ref_cubic(x: float, a: float = -0.5) -> float:
    ax = abs(x)
    if ax <= 1.0:
        return (a + 2.0) * ax**3 - (a + 3.0) * ax**2 + 1.0
    if ax < 2.0:
        return a * ax**3 - 5.0 * a * ax**2 + 8.0 * a * ax - 4.0 * a
    return 0.0


def _ref_resize_axis(arr: np.ndarray, n_out: int) -> np.ndarray:
    n_in = arr.shape[0]
    scale = n_in / n_out
    support = max(scale, 1.0)
    out = np.zeros((n_out,) + arr.shape[1:], dtype=np.float64)
    for i in range(n_out):
        center = (i + 0.5) * scale - 0.5
        lo = math.floor(center - 2 * support)
        hi = math.ceil(center + 2 * support)
        weights, taps = [], []
        for j in range(lo, hi + 1):
            weights.append(_ref_cubic((j - center) / support))
            taps.append(min(max(j, 0), n_in - 1))
        total = sum(weights)
        for wgt, j in zip(weights, taps):
            out[i] += (wgt / total) * arr[j]
    return out


def ref_resize(img: np.ndarray, dims) -> np.ndarray:
    out = img.astype(np.float64)
    if dims[0] != out.shape[0]:
        out = _ref_resize_axis(out, dims[0])
    if dims[1] != out.shape[1]:
        out = np.swapaxes(_ref_resize_axis(np.swapaxes(out, 0, 1), dims[1]), 0, 1)
    return np.clip(out, -1.0, 1.0).astype(np.float32)


def exhaustive_schedule_oracle(min_dim: int, min_coarse: int = 25, target=4.0 / 3.0):
    best = min(
        range(1, 31),
        key=lambda n: (abs((min_dim / min_coarse) ** (1.0 / n) - target), n),
    )
    return best, (min_dim / min_coarse) ** (1.0 / best)


class TestScaleSchedule:
    def test_min_dim_188(self):
        sched = build_scale_schedule((250, 188))
        oracle_n, oracle_r = exhaustive_schedule_oracle(188)
        assert oracle_n == 7
        assert sched.coarsest == oracle_n
        assert sched.num_levels == 8
        assert abs(sched.r - 1.334) < 1e-3
        assert abs(sched.r - oracle_r) < 1e-12

    def test_min_dim_already_coarse(self):
        sched = build_scale_schedule((40, 25))
        assert sched.num_levels == 1
        assert sched.r == 1.0

    def test_min_dim_100(self):
        sched = build_scale_schedule((100, 100))
        oracle_n, oracle_r = exhaustive_schedule_oracle(100)
        assert (sched.coarsest, oracle_n) == (5, 5)
        assert abs(sched.r - 4 ** (1 / 5)) < 1e-6
        assert abs(sched.r - oracle_r) < 1e-12

    def test_invalid_dims(self):
        with pytest.raises(InvalidInputError):
            build_scale_schedule((0, 100))
        with pytest.raises(InvalidInputError):
            build_scale_schedule((100, -3))

    def test_resizes_large_input(self):
        sched = build_scale_schedule((500, 400))
        assert max(sched.levels[0]) == 250
        sched_hr = build_scale_schedule((500, 400), resize_input=False)
        assert sched_hr.levels[0] == (500, 400)

    def test_coarsest_min_dim_is_min_coarse(self):
        for dims in [(250, 188), (100, 130), (33, 66)]:
            sched = build_scale_schedule(dims)
            if sched.num_levels > 1:
                assert min(sched.levels[-1]) == 25

    @given(
        h=st.integers(min_value=30, max_value=400),
        w=st.integers(min_value=30, max_value=400),
    )
    @settings(max_examples=60, deadline=None)
    def test_schedule_properties(self, h, w):
        sched = build_scale_schedule((h, w))
        levels = sched.levels
        for a, b in zip(levels, levels[1:]):
            assert b[0] < a[0] and b[1] < a[1]
            for k in (0, 1):
                ratio = a[k] / b[k]
                assert sched.r - 0.05 <= ratio <= sched.r + 0.05
        # dims come straight from the finest level, not iterated
        for n, (lh, lw) in enumerate(levels):
            assert lh == math.floor(levels[0][0] / sched.r**n + 0.5)
            assert lw == math.floor(levels[0][1] / sched.r**n + 0.5)

    def test_pinned_schedule(self):
        sched = build_pinned_schedule((50, 50), 4 ** (1 / 5))
        assert sched.r == pytest.approx(4 ** (1 / 5))
        assert all(min(d) >= 25 for d in sched.levels)
        assert sched.levels[0] == (50, 50)


class TestResampling:
    def test_downsample_identity_bitwise(self):
        img = np.random.default_rng(0).uniform(-1, 1, (7, 9, 3)).astype(np.float32)
        out = downsample(img, (7, 9))
        assert np.array_equal(out, img)

    def test_upsample_identity_bitwise(self):
        img = np.random.default_rng(1).uniform(-1, 1, (5, 4, 1)).astype(np.float32)
        assert np.array_equal(upsample(img, (5, 4)), img)

    @pytest.mark.parametrize("c", [-1.0, -0.37, 0.0, 0.5, 1.0])
    def test_constant_preserved(self, c):
        img = np.full((12, 17, 3), c, dtype=np.float32)
        for dims in [(5, 9), (12, 17)]:
            assert np.abs(downsample(img, dims) - c).max() <= 1e-6
        for dims in [(20, 30), (12, 17)]:
            assert np.abs(upsample(img, dims) - c).max() <= 1e-6

    def test_checkerboard_matches_reference(self):
        img = np.indices((4, 4)).sum(axis=0) % 2
        img = (img * 2.0 - 1.0)[:, :, None].astype(np.float32)
        out = downsample(img, (2, 2))
        ref = ref_resize(img, (2, 2))
        assert np.allclose(out, ref, atol=1e-6)

    def test_upsample_matches_reference(self):
        img = np.array([[0.1, -0.5], [0.9, 0.3]], dtype=np.float32)[:, :, None]
        out = upsample(img, (4, 4))
        ref = ref_resize(img, (4, 4))
        assert np.allclose(out, ref, atol=1e-6)

    @pytest.mark.parametrize("seed,src,dst", [
        (0, (9, 13), (25, 31)),
        (1, (25, 31), (9, 13)),
        (2, (33, 33), (25, 25)),
        (3, (14, 10), (33, 40)),
    ])
    def test_random_images_match_reference(self, seed, src, dst):
        img = np.random.default_rng(seed).uniform(-1, 1, src + (3,)).astype(np.float32)
        assert np.allclose(imaging.resize(img, dst), ref_resize(img, dst), atol=1e-5)

    def test_direction_guards(self):
        img = np.zeros((10, 10, 3), dtype=np.float32)
        with pytest.raises(InvalidInputError):
            downsample(img, (12, 10))
        with pytest.raises(InvalidInputError):
            upsample(img, (10, 8))

    def test_round_trip_dims(self):
        img = np.random.default_rng(3).uniform(-1, 1, (33, 41, 3)).astype(np.float32)
        down = downsample(img, (15, 19))
        up = upsample(down, (33, 41))
        assert up.shape == (33, 41, 3)

    def test_output_in_range(self):
        img = np.random.default_rng(5).uniform(-1, 1, (21, 21, 3)).astype(np.float32)
        out = downsample(img, (9, 9))
        assert out.min() >= -1.0 and out.max() <= 1.0


class TestImageValues:
    def test_as_image_rejects_bad_channels(self):
        with pytest.raises(InvalidInputError):
            imaging.as_image(np.zeros((4, 4, 2)))

    def test_as_image_rejects_nonfinite(self):
        bad = np.zeros((4, 4, 3), dtype=np.float32)
        bad[0, 0, 0] = np.nan
        with pytest.raises(InvalidInputError):
            imaging.as_image(bad)

    def test_png_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        img = rng.uniform(-1, 1, (16, 12, 3)).astype(np.float32)
        path = tmp_path / "x.png"
        save_image(img, path)
        back = load_image(path)
        assert back.shape == img.shape
        assert np.abs(back - img).max() <= (2.0 / 255.0)

    def test_eight_bit_mapping_linear(self, tmp_path):
        img = np.array([[[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]]], dtype=np.float32)
        path = tmp_path / "ends.png"
        save_image(img, path)
        back = load_image(path)
        assert np.allclose(back[0, 0], -1.0)
        assert np.allclose(back[0, 1], 1.0)

    def test_grayscale_io(self, tmp_path):
        img = np.linspace(-1, 1, 25, dtype=np.float32).reshape(5, 5, 1)
        path = tmp_path / "g.png"
        save_image(img, path)
        back = load_image(path)
        assert back.shape == (5, 5, 1)

    def test_jpeg_io(self, tmp_path):
        img = np.zeros((16, 16, 3), dtype=np.float32)
        path = tmp_path / "x.jpg"
        save_image(img, path)
        back = load_image(path)
        assert back.shape == (16, 16, 3)


class TestPyramid:
    def test_build_pyramid_levels(self):
        img = np.random.default_rng(2).uniform(-1, 1, (33, 33, 3)).astype(np.float32)
        sched = build_scale_schedule((33, 33), min_coarse_dim=19, max_fine_dim=33)
        pyr = build_pyramid(img, sched)
        assert [p.shape[:2] for p in pyr] == list(sched.levels)
        assert np.array_equal(pyr[0], img)

    def test_build_pyramid_dim_mismatch(self):
        sched = build_scale_schedule((33, 33), min_coarse_dim=19, max_fine_dim=33)
        with pytest.raises(InvalidInputError):
            build_pyramid(np.zeros((10, 10, 3), dtype=np.float32), sched)
