"""MNIST IDX ingestion, 28->16 box resampling, latency encoding and weight export."""
from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .temporal import ABSENT, SPIKE_DTYPE, W_MAX

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
SIDE = 16


class DataError(ValueError):
    pass


class IdxFormatError(DataError):
    pass


class IdxLengthError(DataError):
    pass


class IdxCountMismatch(DataError):
    pass


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def read_idx_images(path) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise IdxLengthError(f"{path}: header truncated")
    magic, count, rows, cols = struct.unpack(">iiii", raw[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"{path}: image magic {magic}, expected {IMAGE_MAGIC}")
    need = count * rows * cols
    if len(raw) - 16 < need:
        raise IdxLengthError(f"{path}: {len(raw) - 16} pixel bytes, header promises {need}")
    return np.frombuffer(raw, dtype=np.uint8, count=need, offset=16).reshape(count, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise IdxLengthError(f"{path}: header truncated")
    magic, count = struct.unpack(">ii", raw[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"{path}: label magic {magic}, expected {LABEL_MAGIC}")
    if len(raw) - 8 < count:
        raise IdxLengthError(f"{path}: {len(raw) - 8} label bytes, header promises {count}")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=8)


def read_idx(image_path, label_path) -> tuple[np.ndarray, np.ndarray]:
    images = read_idx_images(image_path)
    labels = read_idx_labels(label_path)
    if len(images) != len(labels):
        raise IdxCountMismatch(f"{len(images)} images but {len(labels)} labels")
    return images, labels


def write_idx(images, labels, image_path, label_path):
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    Path(image_path).write_bytes(struct.pack(">iiii", IMAGE_MAGIC, n, rows, cols) + images.tobytes())
    Path(label_path).write_bytes(struct.pack(">ii", LABEL_MAGIC, len(labels)) + labels.tobytes())


def box_weights(n_in: int, n_out: int) -> np.ndarray:
    """n_out x n_in matrix of area overlaps; each row sums to 1."""
    scale = n_in / n_out
    m = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        for j in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            m[i, j] = max(0.0, min(hi, j + 1) - max(lo, j)) / scale
    return m


_BOX_28_16 = box_weights(28, SIDE)


def resize_16(img) -> np.ndarray:
    img = np.asarray(img)
    if img.shape[-2:] != (28, 28):
        raise ValueError(f"expected 28x28 image(s), got {img.shape}")
    out = _BOX_28_16 @ img.astype(np.float64) @ _BOX_28_16.T
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class EncoderConfig:
    cutoff: int = 128
    levels: int = W_MAX + 1

    def __post_init__(self):
        if not 0 <= self.cutoff <= 255:
            raise ValueError("cutoff must lie in 0..255")


def encode_image(img, cfg: EncoderConfig = EncoderConfig()) -> np.ndarray:
    """Brighter pixels spike earlier; pixels below the cutoff stay silent."""
    v = np.asarray(img, dtype=np.int32)
    if v.shape[-2:] != (SIDE, SIDE):
        raise ValueError(f"expected {SIDE}x{SIDE} image(s), got {v.shape}")
    t = np.minimum((255 - v) * cfg.levels // 256, cfg.levels - 1)
    t = np.where(v >= cfg.cutoff, t, ABSENT).astype(SPIKE_DTYPE)
    return t.reshape(*v.shape[:-2], SIDE * SIDE)


def decode_latency(volleys) -> np.ndarray:
    """Map spike times back to an intensity-like map: (8 - t) / 8, 0 when silent."""
    v = np.asarray(volleys)
    return np.where(v == ABSENT, 0.0, (W_MAX + 1 - v) / (W_MAX + 1))


def weights_to_gray(weights) -> np.ndarray:
    return np.rint(np.asarray(weights, dtype=np.float64) * 255 / W_MAX).astype(np.uint8)


def write_pgm(path, pixels):
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, dims, maxval, body = raw.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise DataError(f"{path}: not an 8-bit P5 PGM")
    w, h = map(int, dims.split())
    return np.frombuffer(body, dtype=np.uint8, count=w * h).reshape(h, w)


def export_weights(weights, out_dir, side: int = SIDE):
    """One PGM per neuron under ``out_dir/weights/`` plus ``out_dir/weights.csv``."""
    weights = np.asarray(weights)
    p, q = weights.shape
    out = Path(out_dir)
    try:
        (out / "weights").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot write weights under {out}: {exc}") from exc
    if p == side * side:
        for j in range(q):
            write_pgm(out / "weights" / f"neuron{j:02d}.pgm", weights_to_gray(weights[:, j].reshape(side, side)))
    write_weights_csv(weights, out / "weights.csv")


def write_weights_csv(weights, path):
    weights = np.asarray(weights)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["input"] + [f"n{j}" for j in range(weights.shape[1])])
        for i, row in enumerate(weights):
            writer.writerow([i] + [int(v) for v in row])


def read_weights_csv(path) -> np.ndarray:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][0] != "input":
        raise DataError(f"{path}: not a weights CSV")
    w = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.int16)
    if w.size and (w.min() < 0 or w.max() > W_MAX):
        raise DataError(f"{path}: weights outside 0..{W_MAX}")
    return w


@dataclass
class Dataset:
    volleys: np.ndarray     # n x 256 spike times
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)

    def class_means(self, classes=range(10)) -> np.ndarray:
        """Mean latency-decoded image per class; columns are classes."""
        decoded = decode_latency(self.volleys)
        return np.stack([decoded[self.labels == c].mean(axis=0) if np.any(self.labels == c)
                         else np.zeros(decoded.shape[1]) for c in classes], axis=1)


def load_dataset(image_path, label_path, cfg: EncoderConfig = EncoderConfig(), limit: int | None = None) -> Dataset:
    images, labels = read_idx(image_path, label_path)
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    return Dataset(volleys=encode_image(resize_16(images), cfg), labels=labels.astype(np.int64))
