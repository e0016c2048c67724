import numpy as np
import pytest
from PIL import Image

from vesselseg.image import (
    ImageError,
    apply_mask,
    as_mask,
    erode_mask,
    invert,
    load_image,
    merge_channels,
    save_png,
    split_channels,
    to_uint8,
)
from oracles import binary_erosion_loop


def _write(path, arr, mode=None):
    Image.fromarray(arr, mode=mode).save(path)
    return path


def test_load_rgb_png_green(tmp_path):
    arr = np.zeros((2, 2, 3), dtype=np.uint8)
    arr[..., 1] = 255
    img = load_image(_write(tmp_path / "g.png", arr))
    assert img.shape == (2, 2, 3)
    _, g, _ = split_channels(img)
    assert np.all(g == 1.0)


def test_load_gray_png_value(tmp_path):
    img = load_image(_write(tmp_path / "g.png", np.full((3, 4), 128, dtype=np.uint8)))
    assert img.shape == (3, 4)
    assert img[0, 0] == pytest.approx(128 / 255)
    assert img[0, 0] == pytest.approx(0.50196, abs=1e-5)


@pytest.mark.parametrize("ext", [".pgm", ".ppm"])
def test_load_netpbm(tmp_path, ext):
    shape = (5, 7) if ext == ".pgm" else (5, 7, 3)
    arr = np.arange(np.prod(shape), dtype=np.uint8).reshape(shape)
    path = tmp_path / f"x{ext}"
    Image.fromarray(arr).save(path)
    assert np.array_equal(to_uint8(load_image(path)), arr)


def test_truncated_file_raises(tmp_path):
    path = _write(tmp_path / "t.png", np.zeros((64, 64), dtype=np.uint8))
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(ImageError):
        load_image(path)


def test_unsupported_extension(tmp_path):
    p = tmp_path / "x.bmp"
    p.write_bytes(b"BM")
    with pytest.raises(ImageError):
        load_image(p)


def test_split_values():
    rgb = np.array([[[51, 102, 153]]], dtype=np.float64) / 255
    r, g, b = split_channels(rgb)
    assert (r[0, 0], g[0, 0], b[0, 0]) == pytest.approx((0.2, 0.4, 0.6))


def test_split_merge_roundtrip_8bit(rng):
    arr = rng.integers(0, 256, size=(9, 11, 3), dtype=np.uint8)
    img = arr / 255.0
    assert np.array_equal(to_uint8(merge_channels(*split_channels(img))), arr)


def test_png_roundtrip(tmp_path, rng):
    arr = rng.integers(0, 256, size=(6, 5, 3), dtype=np.uint8)
    save_png(tmp_path / "o.png", arr / 255.0)
    assert np.array_equal(to_uint8(load_image(tmp_path / "o.png")), arr)


def test_invert():
    img = np.array([[0.0, 1.0, 0.3]])
    assert np.allclose(invert(img), [[1.0, 0.0, 0.7]])
    assert np.allclose(invert(np.full((2, 2), 0.3)), 0.7)


def test_invert_involution(rng):
    # exact wherever 1 - x is representable (x >= 0.5, dyadic samples)
    upper = 0.5 + rng.random((8, 8)) / 2
    assert np.array_equal(invert(invert(upper)), upper)
    dyadic = rng.integers(0, 1025, (8, 8)) / 1024.0
    assert np.array_equal(invert(invert(dyadic)), dyadic)
    # otherwise within half an ulp of 1.0
    lattice = rng.integers(0, 256, (16, 16)) / 255.0
    assert np.max(np.abs(invert(invert(lattice)) - lattice)) <= np.finfo(float).eps / 2


def test_apply_mask_cases():
    img = np.full((4, 4), 0.8)
    assert np.array_equal(apply_mask(img, np.ones((4, 4), bool)), img)
    assert np.array_equal(apply_mask(img, np.zeros((4, 4), bool)), np.zeros((4, 4)))
    checker = (np.indices((4, 4)).sum(axis=0) % 2).astype(bool)
    out = apply_mask(img, checker)
    assert np.all(out[checker] == 0.8) and np.all(out[~checker] == 0.0)
    assert np.array_equal(apply_mask(out, checker), out)


def test_apply_mask_mismatch():
    with pytest.raises(ValueError):
        apply_mask(np.zeros((3, 3)), np.ones((3, 4), bool))


def test_as_mask_binarizes_at_half():
    assert np.array_equal(as_mask(np.array([[0.0, 1.0]])), [[False, True]])


def test_erode_mask_radius_zero_identity(rng):
    m = rng.random((10, 10)) > 0.5
    assert np.array_equal(erode_mask(m, 0), m)


def test_erode_mask_block():
    m = np.ones((20, 20), dtype=bool)
    out = erode_mask(m, 3)
    expected = binary_erosion_loop(m, 3)
    assert np.array_equal(out, expected)
    assert out.sum() == 14 * 14
    assert out[3:17, 3:17].all()


def test_erode_mask_random_vs_oracle(rng):
    for _ in range(5):
        m = rng.random((15, 13)) > 0.2
        assert np.array_equal(erode_mask(m, 2), binary_erosion_loop(m, 2))


def test_erode_mask_all_false():
    assert not erode_mask(np.zeros((8, 8), bool), 2).any()
