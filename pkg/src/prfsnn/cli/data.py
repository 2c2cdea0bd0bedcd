"""IDX (MNIST) ingestion and the deterministic pixel permutation for psMNIST."""

from __future__ import annotations

import gzip
import os
from pathlib import Path

import numpy as np

from ..traingrad.trainer import SequenceDataset

DATA_ENV = "PRFSNN_DATA"
IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
GZIP_MAGIC = b"\x1f\x8b"

MASK64 = (1 << 64) - 1


class IdxFormatError(ValueError):
    pass


class SplitMix64:
    """The SplitMix64 generator (Steele, Lea and Flood constants), 64-bit unsigned state."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def fisher_yates_permutation(n: int, seed: int) -> np.ndarray:
    """Permutation of ``range(n)``: for ``i = n-1 .. 1`` swap ``i`` with ``next() % (i + 1)``."""
    perm = list(range(n))
    rng = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = rng.next() % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return np.asarray(perm, dtype=np.int64)


def data_dir(default=None) -> Path:
    """Data root: ``$PRFSNN_DATA`` if set, else ``default``, else ``./data``."""
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env)
    return Path(default) if default is not None else Path("data")


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == GZIP_MAGIC:
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise IdxFormatError(f"{path}: corrupt or truncated gzip stream") from exc
    return raw


def read_idx(path, expected_magic: int) -> np.ndarray:
    """Parse an unsigned-byte IDX file (plain or gzip) into an array."""
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise IdxFormatError(f"{path}: truncated header")
    magic = int.from_bytes(raw[:4], "big")
    if magic != expected_magic:
        raise IdxFormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxFormatError(f"{path}: truncated header")
    dims = [int.from_bytes(raw[4 + 4 * i : 8 + 4 * i], "big") for i in range(ndim)]
    size = int(np.prod(dims)) if dims else 0
    if len(raw) - header < size:
        raise IdxFormatError(f"{path}: truncated body, expected {size} bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def ingest_mnist(image_path, label_path, permute_seed: int | None = None, limit: int | None = None) -> SequenceDataset:
    """Flatten images to length-784 pixel sequences scaled to ``[0, 1]``.

    With ``permute_seed`` every sequence is reordered by the same fixed
    :func:`fisher_yates_permutation`.
    """
    images = read_idx(image_path, IMAGE_MAGIC)
    labels = read_idx(label_path, LABEL_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    if permute_seed is not None:
        x = x[:, fisher_yates_permutation(x.shape[1], permute_seed)]
    return SequenceDataset(x, labels.astype(np.int64))


def write_idx(path, array: np.ndarray, compress: bool | None = None) -> None:
    """Write an unsigned-byte IDX file; gzip when ``compress`` or the name ends in ``.gz``."""
    arr = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | arr.ndim
    payload = magic.to_bytes(4, "big") + b"".join(int(d).to_bytes(4, "big") for d in arr.shape) + arr.tobytes()
    if compress is None:
        compress = str(path).endswith(".gz")
    if compress:
        payload = gzip.compress(payload, mtime=0)
    with open(path, "wb") as fh:
        fh.write(payload)


def find_mnist(root, split: str = "train") -> tuple[Path, Path]:
    """Locate ``{split}-images-idx3-ubyte[.gz]`` and its labels in ``root``,
    ``root/mnist`` or ``root/mnist5k``."""
    root = Path(root)
    stems = (f"{split}-images-idx3-ubyte", f"{split}-labels-idx1-ubyte")
    for folder in (root, root / "mnist", root / "mnist5k"):
        found = []
        for stem in stems:
            hits = [folder / n for n in (stem, stem + ".gz") if (folder / n).exists()]
            if hits:
                found.append(hits[0])
        if len(found) == 2:
            return found[0], found[1]
    raise FileNotFoundError(f"no {stems[0]}[.gz] with labels under {root} (set {DATA_ENV} to override)")
