import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from roadprop.raster import (NON_ROAD, ROAD, UNKNOWN, RasterFormatError, hsv_to_rgb, read_binary_mask,
                             read_f32, read_image, read_labels, read_prob_map, read_tristate, rgb_to_hsv,
                             tile, untile, write_binary_mask, write_f32, write_image, write_labels,
                             write_tristate)


def px(rgb):
    return np.array([[rgb]], dtype=np.uint8)


@pytest.mark.parametrize("rgb,expected", [
    ((255, 0, 0), (0.0, 1.0, 1.0)),
    ((0, 255, 0), (120.0, 1.0, 1.0)),
    ((0, 0, 255), (240.0, 1.0, 1.0)),
    ((128, 128, 128), (0.0, 0.0, 128 / 255)),
    ((0, 0, 0), (0.0, 0.0, 0.0)),
])
def test_hsv_reference_pixels(rgb, expected):
    np.testing.assert_allclose(rgb_to_hsv(px(rgb))[0, 0], expected, atol=1e-12)


def test_hsv_against_colorsys():
    import colorsys
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
    hsv = rgb_to_hsv(img)
    for y, x in [(0, 0), (3, 7), (15, 15), (8, 2)]:
        h, s, v = colorsys.rgb_to_hsv(*(img[y, x] / 255.0))
        np.testing.assert_allclose(hsv[y, x], (h * 360 % 360, s, v), atol=1e-9)


def test_hsv_ranges_and_roundtrip_subsample():
    levels = np.arange(0, 256, 8, dtype=np.uint8)
    r, g, b = np.meshgrid(levels, levels, levels, indexing="ij")
    img = np.stack([r, g, b], -1).reshape(32, -1, 3)
    hsv = rgb_to_hsv(img)
    assert hsv[..., 0].min() >= 0 and hsv[..., 0].max() < 360
    assert 0 <= hsv[..., 1].min() and hsv[..., 1].max() <= 1
    back = hsv_to_rgb(hsv).astype(int)
    assert np.abs(back - img.astype(int)).max() <= 1


def test_tile_exact_divisor():
    img = np.arange(1024 * 1024, dtype=np.int64).reshape(1024, 1024)
    tiles, grid = tile(img, 512)
    assert grid.offsets == ((0, 0), (512, 0), (0, 512), (512, 512))
    assert all(t.shape == (512, 512) for t in tiles)
    np.testing.assert_array_equal(untile(tiles, grid), img)


def test_tile_identity_and_padding():
    img = np.random.default_rng(1).integers(0, 256, (512, 512, 3), dtype=np.uint8)
    tiles, _ = tile(img, 512)
    assert len(tiles) == 1 and np.array_equal(tiles[0], img)

    img = np.random.default_rng(2).integers(0, 256, (600, 600, 3), dtype=np.uint8)
    tiles, grid = tile(img, 512)
    assert len(tiles) == 4
    np.testing.assert_array_equal(untile(tiles, grid), img)
    # replicated edge: pixels past 600 repeat the last row / column
    br = tiles[3]
    np.testing.assert_array_equal(br[:88, 88:], np.repeat(img[512:, 599:600], 512 - 88, axis=1))
    np.testing.assert_array_equal(br[88:, :88], np.repeat(img[599:600, 512:], 512 - 88, axis=0))


@settings(max_examples=40, deadline=None)
@given(h=st.integers(1, 40), w=st.integers(1, 40), size=st.integers(1, 16))
def test_tiling_partitions_parent(h, w, size):
    ids = np.arange(h * w).reshape(h, w)
    tiles, grid = tile(ids, size)
    seen = np.zeros(h * w, dtype=int)
    for t, (x, y) in zip(tiles, grid.offsets):
        inner = t[:max(0, min(size, h - y)), :max(0, min(size, w - x))]
        np.add.at(seen, inner.ravel(), 1)
    assert (seen == 1).all()


def test_tile_rejects_empty():
    with pytest.raises(ValueError):
        tile(np.zeros((0, 5)), 4)


def test_image_roundtrip_and_alpha(tmp_path):
    img = np.random.default_rng(3).integers(0, 256, (9, 7, 3), dtype=np.uint8)
    write_image(tmp_path / "a.png", img)
    np.testing.assert_array_equal(read_image(tmp_path / "a.png"), img)
    rgba = np.dstack([img, np.full((9, 7), 17, np.uint8)])
    Image.fromarray(rgba).save(tmp_path / "b.png")
    np.testing.assert_array_equal(read_image(tmp_path / "b.png"), img)


def test_tristate_roundtrip_and_bytes(tmp_path):
    mask = np.random.default_rng(4).integers(0, 3, (11, 13)).astype(np.uint8)
    write_tristate(tmp_path / "t.png", mask)
    np.testing.assert_array_equal(read_tristate(tmp_path / "t.png"), mask)
    raw = np.array(Image.open(tmp_path / "t.png"))
    assert set(np.unique(raw)) <= {0, 128, 255}
    Image.fromarray(np.array([[0, 128, 255]], np.uint8)).save(tmp_path / "u.png")
    assert read_tristate(tmp_path / "u.png").tolist() == [[NON_ROAD, UNKNOWN, ROAD]]


def test_tristate_rejects_other_values(tmp_path):
    Image.fromarray(np.array([[0, 64]], np.uint8)).save(tmp_path / "bad.png")
    with pytest.raises(RasterFormatError):
        read_tristate(tmp_path / "bad.png")


def test_binary_mask_roundtrip_and_rejects(tmp_path):
    mask = np.random.default_rng(5).random((6, 6)) < 0.5
    write_binary_mask(tmp_path / "m.png", mask)
    np.testing.assert_array_equal(read_binary_mask(tmp_path / "m.png"), mask)
    Image.fromarray(np.array([[0, 128]], np.uint8)).save(tmp_path / "bad.png")
    with pytest.raises(RasterFormatError):
        read_binary_mask(tmp_path / "bad.png")


def test_labels_roundtrip_16bit(tmp_path):
    labels = np.random.default_rng(6).integers(0, 65536, (5, 8)).astype(np.int32)
    write_labels(tmp_path / "l.png", labels)
    np.testing.assert_array_equal(read_labels(tmp_path / "l.png"), labels)


def test_f32_roundtrip_and_layout(tmp_path):
    field = np.random.default_rng(7).random((3, 5)).astype(np.float32)
    write_f32(tmp_path / "f.f32m", field)
    raw = (tmp_path / "f.f32m").read_bytes()
    assert raw[:4] == b"F32M" and struct.unpack("<II", raw[4:12]) == (3, 5)
    assert len(raw) == 12 + 4 * 15
    out = read_f32(tmp_path / "f.f32m")
    assert out.tobytes() == field.tobytes()
    write_f32(tmp_path / "z.f32m", np.zeros((4, 4)))
    assert (read_prob_map(tmp_path / "z.f32m") == 0).all()


def test_f32_errors(tmp_path):
    with pytest.raises(RasterFormatError):
        write_f32(tmp_path / "n.f32m", np.array([[np.nan]]))
    (tmp_path / "bad.f32m").write_bytes(b"F32M" + struct.pack("<II", 2, 2) + b"\0" * 4)
    with pytest.raises(RasterFormatError):
        read_f32(tmp_path / "bad.f32m")
    (tmp_path / "nohdr.f32m").write_bytes(b"XXXX" + b"\0" * 8)
    with pytest.raises(RasterFormatError):
        read_f32(tmp_path / "nohdr.f32m")


def test_prob_map_from_png(tmp_path):
    Image.fromarray(np.array([[0, 255, 51]], np.uint8)).save(tmp_path / "p.png")
    np.testing.assert_allclose(read_prob_map(tmp_path / "p.png"), [[0, 1, 0.2]], atol=1e-7)
