import colorsys
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fingertip_hb.color import HsvRange, convert_frame, hsv_to_rgb, mask_frame, rgb_to_hsv

byte = st.integers(0, 255)


@pytest.mark.parametrize(
    "rgb, hsv",
    [
        ((255, 0, 0), (0, 255, 255)),
        ((128, 128, 128), (0, 0, 128)),
        ((0, 255, 0), (85, 255, 255)),  # 120 deg * 255/360 = 85
        ((0, 0, 255), (170, 255, 255)),
        ((0, 0, 0), (0, 0, 0)),
    ],
)
def test_rgb_to_hsv_examples(rgb, hsv):
    assert rgb_to_hsv(rgb) == hsv


def test_hsv_to_rgb_examples():
    assert hsv_to_rgb((0, 255, 255)) == (255, 0, 0)
    assert hsv_to_rgb((85, 255, 255)) == (0, 255, 0)


@given(byte, byte)
def test_achromatic_inverse(h, v):
    assert hsv_to_rgb((h, 0, v)) == (v, v, v)


@given(byte, byte, byte)
def test_zero_saturation_means_zero_hue(r, g, b):
    h, s, v = rgb_to_hsv((r, g, b))
    if s == 0:
        assert h == 0
    assert v == max(r, g, b)


def test_hue_ordering():
    reds, greens, blues = rgb_to_hsv((255, 0, 0)), rgb_to_hsv((0, 255, 0)), rgb_to_hsv((0, 0, 255))
    assert reds[0] < greens[0] < blues[0]


def _half_up(x):
    return math.floor(x + 0.5)


def test_agrees_with_colorsys(rng):
    px = rng.integers(0, 256, size=(20_000, 3))
    ours = rgb_to_hsv(px.astype(np.uint8)).astype(int)
    for (r, g, b), (h, s, v) in zip(px, ours):
        ch, cs, cv = colorsys.rgb_to_hsv(r / 255, g / 255, b / 255)
        exp_h, exp_s = ch * 255, cs * 255
        # floating-point paths differ; allow a 1-step difference only right at a rounding tie
        for got, exp in ((h, exp_h), (s, exp_s)):
            if abs(exp - math.floor(exp) - 0.5) > 1e-9:
                assert got == _half_up(exp) % 256 or (got == 255 and _half_up(exp) == 255)
            else:
                assert abs(got - exp) <= 0.5 + 1e-9
        assert v == round(cv * 255)


def test_axes_round_trip_exactly():
    t = np.arange(256, dtype=np.uint8)
    z = np.zeros_like(t)
    for axis in (np.stack([t, z, z], -1), np.stack([z, t, z], -1), np.stack([z, z, t], -1)):
        assert np.array_equal(hsv_to_rgb(rgb_to_hsv(axis)), axis)


def test_round_trip_within_hue_quantization():
    # 256 hue codes cover 1530 saturated hues, so a channel can move by up
    # to 255 * (180/255) / 60 = 3 steps.
    g, b = np.meshgrid(np.arange(256), np.arange(256), indexing="ij")
    worst = 0
    for r in range(0, 256, 5):
        px = np.stack([np.full_like(g, r), g, b], -1).astype(np.uint8)
        back = hsv_to_rgb(rgb_to_hsv(px)).astype(int)
        worst = max(worst, int(np.abs(back - px).max()))
    assert worst == 3


def test_round_trip_exact_on_greys():
    for v in range(256):
        assert hsv_to_rgb(rgb_to_hsv((v, v, v))) == (v, v, v)


def test_convert_frame_shape_and_pointwise(rng):
    frame = rng.integers(0, 256, size=(5, 7, 3)).astype(np.uint8)
    out = convert_frame(frame)
    assert out.shape == frame.shape
    assert convert_frame(np.array([[[255, 0, 0]]], np.uint8)).tolist() == [[[0, 255, 255]]]
    two = convert_frame(np.array([[[10, 20, 30], [10, 20, 30]]], np.uint8))
    assert np.array_equal(two[0, 0], two[0, 1])


def test_convert_frame_commutes_with_permutation(rng):
    frame = rng.integers(0, 256, size=(6, 6, 3)).astype(np.uint8)
    perm = rng.permutation(36)
    shuffled = frame.reshape(36, 3)[perm].reshape(6, 6, 3)
    assert np.array_equal(convert_frame(shuffled).reshape(36, 3), convert_frame(frame).reshape(36, 3)[perm])


def test_rejects_out_of_range():
    with pytest.raises(ValueError):
        rgb_to_hsv((256, 0, 0))
    with pytest.raises(ValueError):
        rgb_to_hsv((1, 2))


def test_hsv_range_validation():
    with pytest.raises(ValueError):
        HsvRange(10, 5)
    with pytest.raises(ValueError):
        HsvRange(0, 300)
    assert HsvRange.parse("0,3,0,255,0,255") == HsvRange(0, 3)


def test_mask_full_range_blackens_everything(rng):
    hsv = rng.integers(0, 256, size=(4, 5, 3)).astype(np.uint8)
    out, frac = mask_frame(hsv, HsvRange())
    assert frac == 1.0
    assert not out.any()


def test_mask_empty_hit(rng):
    hsv = rng.integers(11, 256, size=(4, 4, 3)).astype(np.uint8)
    out, frac = mask_frame(hsv, HsvRange(10, 10, 10, 10, 10, 10))
    assert frac == 0.0
    assert np.array_equal(out, hsv)


def test_mask_one_of_four():
    hsv = np.array([[[10, 10, 10], [0, 0, 0]], [[50, 60, 70], [10, 10, 11]]], np.uint8)
    out, frac = mask_frame(hsv, HsvRange(10, 10, 10, 10, 10, 10))
    # brute-force count: only pixel (0,0) is inside; (0,1) is already black but outside
    assert frac == 0.25
    assert out[0, 0].tolist() == [0, 0, 0]
    assert np.array_equal(out[1], hsv[1])


@given(st.lists(st.tuples(byte, byte, byte), min_size=4, max_size=4),
       st.tuples(byte, byte).map(sorted), st.tuples(byte, byte).map(sorted))
def test_mask_idempotent(pixels, hr, sr):
    rng_ = HsvRange(hr[0], hr[1], sr[0], sr[1], 0, 255)
    hsv = np.array(pixels, np.uint8).reshape(2, 2, 3)
    once, f1 = mask_frame(hsv, rng_)
    twice, f2 = mask_frame(once, rng_)
    assert np.array_equal(once, twice)
    # second pass can only hit pixels that became black and lie in range
    if rng_.contains((0, 0, 0)):
        assert f2 >= f1
    else:
        assert f2 == 0.0
