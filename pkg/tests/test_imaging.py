import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rightsmark.base import DimensionError, ImageFormatError, check_bits, check_image, to_uint8
from rightsmark.imaging import (
    Rect,
    copy_region,
    decode_png,
    encode_png,
    load_png,
    paste_region,
    resize_area,
    resize_bilinear,
    save_png,
    to_grayscale,
)


def test_check_image_accepts_gray_and_rgb():
    assert check_image(np.zeros((4, 5), np.uint8)).shape == (4, 5)
    assert check_image(np.full((2, 2), 7.0)).dtype == np.uint8
    assert check_image(np.zeros((4, 5, 3), np.uint8)).shape == (4, 5, 3)


@pytest.mark.parametrize("bad", [np.full((4, 4), 0.5), np.full((4, 4), 300), np.zeros((4, 4, 4), np.uint8), np.zeros(5, np.uint8)])
def test_check_image_rejects(bad):
    with pytest.raises((ImageFormatError, DimensionError, TypeError, ValueError)):
        check_image(bad)


def test_check_bits_flattens_and_validates():
    assert check_bits(np.ones((64, 64), int)).shape == (4096,)
    with pytest.raises(ValueError):
        check_bits(np.full(4096, 2))
    with pytest.raises(ValueError):
        check_bits(np.zeros(10))


def test_to_uint8_rounds_half_up_and_clips():
    assert to_uint8(np.array([-3.0, 0.5, 1.49, 254.5, 300.0])).tolist() == [0, 1, 1, 255, 255]


def test_grayscale_bt601():
    px = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255], [10, 20, 30]]], np.uint8)
    expect = [np.floor(0.299 * 255 + 0.5), np.floor(0.587 * 255 + 0.5), np.floor(0.114 * 255 + 0.5),
              np.floor(0.299 * 10 + 0.587 * 20 + 0.114 * 30 + 0.5)]
    assert to_grayscale(px)[0].tolist() == expect


def test_png_roundtrip(tmp_path, astronaut, rng):
    gray = rng.integers(0, 256, (37, 53), dtype=np.uint8)
    for img in (gray, astronaut):
        p = tmp_path / "x.png"
        save_png(img, p)
        assert np.array_equal(load_png(p), img)
        assert np.array_equal(decode_png(encode_png(img)), img)
    assert encode_png(gray) == encode_png(gray.copy())


def test_load_png_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_png(tmp_path / "missing.png")
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"\x89PNG\r\n\x1a\nnot really")
    with pytest.raises(ImageFormatError):
        load_png(bad)


def test_resize_area_block_mean():
    img = np.arange(16, dtype=np.uint8).reshape(4, 4) * 10
    out = resize_area(img, 2, 2)
    # oracle: mean of each 2x2 block, rounded half up
    expect = np.floor(img.reshape(2, 2, 2, 2).mean(axis=(1, 3)) + 0.5)
    assert np.array_equal(out, expect)


def test_resize_identity(camera):
    assert np.array_equal(resize_area(camera, 512, 512), camera)
    assert np.array_equal(resize_bilinear(camera, 512, 512), camera)


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(2, 20), st.integers(2, 20))), st.integers(1, 30), st.integers(1, 30))
def test_resize_stays_in_range(img, w, h):
    for fn in (resize_area, resize_bilinear):
        out = fn(img, w, h)
        assert out.shape == (h, w)
        assert out.min() >= img.min() and out.max() <= img.max()


def test_rect_iou_and_regions(rng):
    a, b = Rect(0, 0, 10, 10), Rect(5, 5, 10, 10)
    assert a.iou(b) == pytest.approx(25 / 175)
    assert a.iou(a) == 1.0
    img = rng.integers(0, 256, (32, 32), dtype=np.uint8)
    before = img.copy()
    patch = copy_region(img, Rect(2, 3, 8, 4))
    assert np.array_equal(patch, img[3:7, 2:10])
    out = paste_region(img, patch, 20, 20)
    assert np.array_equal(out[20:24, 20:28], patch)
    assert np.array_equal(img, before)
    with pytest.raises((DimensionError, ValueError)):
        copy_region(img, Rect(30, 30, 8, 8))
