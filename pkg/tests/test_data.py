import gzip
import logging
import struct

import numpy as np
import pytest

from scnn.data import (DataFormatError, add_gaussian_noise, center_rows, corrupt_missing,
                       downsample, extract_patches, load_idx, load_matrix, load_model, load_pgm,
                       patches_from_images, remap_pixels, save_matrix, save_model, save_pgm,
                       write_idx)
from scnn.linalg import make_rng
from scnn.model import ScnnModel

IMAGES_2x2 = (bytes([0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2])
              + bytes([0, 1, 2, 3, 250, 251, 252, 255]))
LABELS_09 = bytes([0, 0, 8, 1, 0, 0, 0, 2, 0, 9])


@pytest.fixture
def idx_pair(tmp_path):
    img, lab = tmp_path / "img.idx3", tmp_path / "lab.idx1"
    img.write_bytes(IMAGES_2x2)
    lab.write_bytes(LABELS_09)
    return img, lab


def test_idx_fixture_parses_exactly(idx_pair):
    ds = load_idx(*idx_pair)
    assert ds.shape == (2, 2)
    assert np.array_equal(ds.x, [[0, 1, 2, 3], [250, 251, 252, 255]])
    assert ds.x.dtype == np.float64
    assert np.array_equal(ds.labels, [0, 9])


def test_idx_gzip_is_transparent(tmp_path):
    img, lab = tmp_path / "i.idx3.gz", tmp_path / "l.idx1.gz"
    img.write_bytes(gzip.compress(IMAGES_2x2))
    lab.write_bytes(gzip.compress(LABELS_09))
    assert np.array_equal(load_idx(img, lab).labels, [0, 9])


@pytest.mark.parametrize("images, labels, pattern", [
    (IMAGES_2x2[:-1], LABELS_09, "byte offset 23"),
    (IMAGES_2x2[:6], LABELS_09, "truncated header"),
    (b"\x00\x00\x08\x01" + IMAGES_2x2[4:], LABELS_09, "expected 0x00000803"),
    (IMAGES_2x2, LABELS_09[:-1] + b"", "truncated"),
    (IMAGES_2x2, bytes([0, 0, 8, 1, 0, 0, 0, 3, 0, 9, 1]), "label file 3"),
    (IMAGES_2x2 + b"\x00", LABELS_09, "trailing"),
    (IMAGES_2x2, bytes([0, 0, 8, 1, 0, 0, 0, 2, 0, 12]), "outside 0..9"),
])
def test_idx_malformed(tmp_path, images, labels, pattern):
    img, lab = tmp_path / "img.idx3", tmp_path / "lab.idx1"
    img.write_bytes(images)
    lab.write_bytes(labels)
    with pytest.raises(DataFormatError, match=pattern):
        load_idx(img, lab)


def test_idx_write_roundtrip(tmp_path, rng):
    images = rng.integers(0, 256, (3, 4, 5)).astype(np.uint8)
    labels = np.array([1, 7, 3])
    write_idx(tmp_path / "a.idx3.gz", tmp_path / "b.idx1.gz", images, labels)
    ds = load_idx(tmp_path / "a.idx3.gz", tmp_path / "b.idx1.gz")
    assert np.array_equal(ds.x, images.reshape(3, -1))
    assert np.array_equal(ds.labels, labels)


def test_pgm_fixture(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_bytes(b"P5 2 2 255\n" + bytes([0, 255, 128, 64]))
    assert np.array_equal(load_pgm(path), [[0.0, 1.0], [128 / 255, 64 / 255]])
    assert np.allclose(load_pgm(path), [[0, 1], [0.50196, 0.25098]], atol=1e-5)


def test_pgm_comments_and_roundtrip(tmp_path, rng):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n3 1\n# max\n255\n" + bytes([10, 20, 30]))
    assert np.array_equal(load_pgm(path), [[10 / 255, 20 / 255, 30 / 255]])
    img = rng.integers(0, 256, (5, 7)).astype(np.uint8)
    save_pgm(tmp_path / "r.pgm", img)
    assert np.array_equal(load_pgm(tmp_path / "r.pgm") * 255, img)


@pytest.mark.parametrize("payload, pattern", [
    (b"P2 2 2 255\n0 1 2 3", "P2"),
    (b"P5 2 2 65535\n" + bytes(8), "maxval"),
    (b"P5 2 2 255\n" + bytes(3), "truncated"),
    (b"P5 2 2", "truncated"),
    (b"P6 2 2 255\n" + bytes(12), "not a binary PGM"),
    (b"P5 2 x 255\n" + bytes(4), "malformed"),
])
def test_pgm_malformed(tmp_path, payload, pattern):
    path = tmp_path / "bad.pgm"
    path.write_bytes(payload)
    with pytest.raises(DataFormatError, match=pattern):
        load_pgm(path)


def test_extract_patches_examples(rng):
    img = rng.random((8, 8))
    whole = extract_patches(img, 8, 3, make_rng(0))
    assert np.array_equal(whole.x, np.tile(img.reshape(1, -1), (3, 1)))
    const = extract_patches(np.full((10, 10), 0.4), 3, 5, make_rng(0))
    assert np.all(const.x == 0.4)
    a = extract_patches(img, 3, 10, make_rng(5))
    b = extract_patches(img, 3, 10, make_rng(5))
    assert np.array_equal(a.x, b.x)
    with pytest.raises(ValueError):
        extract_patches(img, 9, 1, make_rng(0))


def test_patches_are_real_subwindows(rng):
    img = np.arange(100.0).reshape(10, 10)
    ps = extract_patches(img, 3, 20, make_rng(1))
    for row in ps.x:
        r, c = divmod(int(row[0]), 10)
        assert np.array_equal(row, img[r:r + 3, c:c + 3].ravel())


def test_patches_from_images_round_robin(rng):
    imgs = [rng.random((12, 12)) for _ in range(3)]
    ps = patches_from_images(imgs, 4, 10, make_rng(0))
    assert ps.x.shape == (10, 16)
    assert np.array_equal(np.bincount(ps.source_ids), [4, 3, 3])


def test_center_rows():
    x = np.array([[2.0, 2.0, 2.0], [-1.0, 0.0, 1.0]])
    out = center_rows(x)
    assert np.array_equal(out[0], [0, 0, 0])
    assert np.array_equal(out[1], x[1])


def test_remap_examples(caplog):
    assert np.array_equal(remap_pixels(np.array([[0.0, 255.0, 127.5]])), [[-1.0, 1.0, 0.0]])
    with caplog.at_level(logging.WARNING):
        out = remap_pixels(np.full((2, 2), 7.0), in_lo=7.0, in_hi=7.0)
    assert np.array_equal(out, np.zeros((2, 2)))
    assert "degenerate" in caplog.text
    with caplog.at_level(logging.WARNING):
        remap_pixels(np.array([[-0.5, 0.5]]))
    assert "already within" in caplog.text


def test_downsample_block_average():
    x = np.arange(16.0).reshape(1, 16)
    assert np.array_equal(downsample(x, (4, 4)), [[2.5, 4.5, 10.5, 12.5]])
    assert downsample(np.ones((0, 16)), (4, 4)).shape == (0, 4)
    with pytest.raises(ValueError):
        downsample(np.ones((1, 9)), (3, 3))


def test_corrupt_missing_examples(rng):
    x = rng.random((50, 64)) + 0.1
    same, mask = corrupt_missing(x, 0.0, make_rng(0))
    assert np.array_equal(same, x) and not mask.mask.any()
    assert not np.any(corrupt_missing(x, 1.0, make_rng(0))[0])
    out, mask = corrupt_missing(x, 0.3, make_rng(0))
    assert np.all(mask.mask.sum(axis=1) == 19)
    assert np.all(out[mask.mask] == 0) and np.array_equal(out[~mask.mask], x[~mask.mask])
    with pytest.raises(ValueError):
        corrupt_missing(x, 1.5, make_rng(0))


def test_gaussian_noise(rng):
    x = rng.random((200, 100))
    assert np.array_equal(add_gaussian_noise(x, 0.0, make_rng(0)), x)
    noisy = add_gaussian_noise(x, 0.3, make_rng(1))
    assert abs(np.std(noisy - x) / 0.3 - 1) < 0.02
    assert np.array_equal(noisy, add_gaussian_noise(x, 0.3, make_rng(1)))


def _model(rng, p=5, m=3, lam=0.25):
    return ScnnModel(d=rng.standard_normal((p, m)), c=rng.standard_normal((m, p)), lam=lam)


def test_model_roundtrip_bitwise(tmp_path, rng):
    model = _model(rng)
    save_model(tmp_path / "m.bin", model)
    back = load_model(tmp_path / "m.bin")
    assert back.d.tobytes() == model.d.tobytes()
    assert back.c.tobytes() == model.c.tobytes()
    assert back.lam == model.lam
    raw = (tmp_path / "m.bin").read_bytes()
    assert raw[:4] == b"SCNN"
    assert struct.unpack_from("<IIId", raw, 4) == (1, 5, 3, 0.25)


@pytest.mark.parametrize("mutate, pattern", [
    (lambda b: b"XCNN" + b[4:], "bad magic"),
    (lambda b: b[:4] + struct.pack("<I", 999) + b[8:], "version 999"),
    (lambda b: b[:-1], "expected"),
    (lambda b: b[:10], "truncated"),
    (lambda b: b + b"\x00", "expected"),
])
def test_model_malformed(tmp_path, rng, mutate, pattern):
    save_model(tmp_path / "m.bin", _model(rng))
    bad = tmp_path / "bad.bin"
    bad.write_bytes(mutate((tmp_path / "m.bin").read_bytes()))
    with pytest.raises(DataFormatError, match=pattern):
        load_model(bad)


def test_matrix_io_roundtrip(tmp_path, rng):
    x = rng.standard_normal((4, 3))
    for name in ("a.npy", "a.csv"):
        save_matrix(tmp_path / name, x)
        assert np.array_equal(load_matrix(tmp_path / name), x)
    with pytest.raises(DataFormatError):
        load_matrix(tmp_path / "a.txt")
    (tmp_path / "nan.csv").write_text("1,nan\n")
    with pytest.raises(DataFormatError):
        load_matrix(tmp_path / "nan.csv")
