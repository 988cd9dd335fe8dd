import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tnnsim.dataio import (DataError, EncoderConfig, IdxCountMismatch, IdxFormatError, IdxLengthError,
                           box_weights, decode_latency, encode_image, export_weights, load_dataset, read_idx,
                           read_pgm, read_weights_csv, resize_16, write_idx, write_weights_csv)
from tnnsim.temporal import ABSENT


@pytest.fixture
def idx_pair(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, (10, 28, 28), dtype=np.uint8)
    labels = np.arange(10, dtype=np.uint8)
    img, lbl = tmp_path / "img.idx", tmp_path / "lbl.idx"
    write_idx(images, labels, img, lbl)
    return images, labels, img, lbl


def test_idx_roundtrip(idx_pair):
    images, labels, img, lbl = idx_pair
    got_i, got_l = read_idx(img, lbl)
    assert np.array_equal(got_i, images) and np.array_equal(got_l, labels)


def test_idx_gzip(idx_pair, tmp_path):
    images, labels, img, lbl = idx_pair
    gz = tmp_path / "img.idx.gz"
    gz.write_bytes(gzip.compress(img.read_bytes()))
    assert np.array_equal(read_idx(gz, lbl)[0], images)


def test_idx_bad_magic(idx_pair, tmp_path):
    _, _, img, lbl = idx_pair
    bad = tmp_path / "bad"
    bad.write_bytes(struct.pack(">i", 1234) + img.read_bytes()[4:])
    with pytest.raises(IdxFormatError):
        read_idx(bad, lbl)
    with pytest.raises(IdxFormatError):
        read_idx(img, img)


def test_idx_truncated(idx_pair, tmp_path):
    _, _, img, lbl = idx_pair
    cut = tmp_path / "cut"
    cut.write_bytes(img.read_bytes()[:-5])
    with pytest.raises(IdxLengthError):
        read_idx(cut, lbl)
    cut.write_bytes(b"\x00\x00")
    with pytest.raises(IdxLengthError):
        read_idx(img, cut)


def test_idx_count_mismatch(idx_pair, tmp_path):
    images, labels, _, _ = idx_pair
    img, lbl = tmp_path / "a", tmp_path / "b"
    write_idx(images, labels[:9], img, lbl)
    with pytest.raises(IdxCountMismatch):
        read_idx(img, lbl)


def test_box_weights_rows_sum_to_one():
    m = box_weights(28, 16)
    assert np.allclose(m.sum(axis=1), 1)
    assert np.allclose(m.sum(axis=0), 16 / 28)


def test_resize_constants_and_block():
    for v in (0, 255, 100):
        assert np.all(resize_16(np.full((28, 28), v, np.uint8)) == v)
    img = np.zeros((28, 28), np.uint8)
    img[:2, :2] = 255
    # output pixel 0 covers 1.75 source pixels; the block fills 1.75 x 1.75 of it
    out = resize_16(img)
    assert out[:2, :2].tolist() == [[255, 36], [36, 5]]
    assert out[2:].max() == 0 and out[:, 2:].max() == 0


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, (28, 28)))
def test_resize_preserves_mean(img):
    assert abs(resize_16(img).mean() - img.mean()) <= 1


def test_resize_rejects_other_sizes():
    with pytest.raises(ValueError):
        resize_16(np.zeros((16, 16)))


def test_encode_examples():
    img = np.zeros((16, 16), np.uint8)
    img[0, :4] = [255, 128, 127, 0]
    t = encode_image(img, EncoderConfig(cutoff=128))
    assert t[:4].tolist() == [0, 3, ABSENT, ABSENT]
    t = encode_image(img, EncoderConfig(cutoff=0))
    assert t[:4].tolist() == [0, 3, 4, 7]
    assert encode_image(np.zeros((3, 16, 16), np.uint8)).shape == (3, 256)


@given(st.integers(0, 255), st.integers(0, 255))
def test_encode_monotone(a, b):
    lo, hi = sorted((a, b))
    cfg = EncoderConfig(cutoff=0)
    ta = encode_image(np.full((16, 16), lo, np.uint8), cfg)[0]
    tb = encode_image(np.full((16, 16), hi, np.uint8), cfg)[0]
    assert 0 <= tb <= ta <= 7


def test_decode_latency():
    assert decode_latency([0, 7, ABSENT]).tolist() == [1.0, 0.125, 0.0]


def test_export_images_and_csv(tmp_path):
    w = np.zeros((256, 2), np.int16)
    w[:, 1] = 7
    export_weights(w, tmp_path)
    assert np.all(read_pgm(tmp_path / "weights" / "neuron00.pgm") == 0)
    assert np.all(read_pgm(tmp_path / "weights" / "neuron01.pgm") == 255)
    assert np.array_equal(read_weights_csv(tmp_path / "weights.csv"), w)


def test_csv_roundtrip_and_validation(tmp_path):
    w = np.random.default_rng(3).integers(0, 8, (5, 3))
    write_weights_csv(w, tmp_path / "w.csv")
    assert np.array_equal(read_weights_csv(tmp_path / "w.csv"), w)
    (tmp_path / "bad.csv").write_text("input,n0\n0,9\n")
    with pytest.raises(DataError):
        read_weights_csv(tmp_path / "bad.csv")


def test_load_dataset_limit(idx_pair):
    _, labels, img, lbl = idx_pair
    data = load_dataset(img, lbl, limit=4)
    assert len(data) == 4 and data.volleys.shape == (4, 256)
    means = data.class_means(range(10))
    assert means.shape == (256, 10) and np.all(means[:, 5] == 0)
