"""Glyph datasets: a seeded synthetic 26-letter set and an image-folder loader.

On disk a dataset is a directory with ``images/NNNNN.csv`` (one row of 256
values in [0, 1]) and ``labels.csv`` (``file,label,letter``).
"""

from __future__ import annotations

import csv
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from ._io import atomic_write_text

LETTERS = string.ascii_uppercase
SIDE = 16
N_CLASSES = 26


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    X: np.ndarray  # (n, 256) in [0, 1]
    y: np.ndarray  # (n,) class indices

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DatasetError("X must be (n, features) with one label per row")
        if np.any(self.X < 0) or np.any(self.X > 1):
            raise DatasetError("pixel values must lie in [0, 1]")

    def __len__(self) -> int:
        return self.X.shape[0]

    def one_hot(self, n_classes: int = N_CLASSES) -> np.ndarray:
        return np.eye(n_classes)[self.y]


def _render(letter: str, rng: np.random.Generator, noise: float) -> np.ndarray:
    size = int(rng.integers(14, 16))
    font = ImageFont.load_default(size=size)
    big = Image.new("L", (4 * SIDE, 4 * SIDE), 0)
    ImageDraw.Draw(big).text((2 * SIDE, 2 * SIDE), letter, fill=255, font=font, anchor="mm")
    big = big.rotate(float(rng.uniform(-6, 6)), resample=Image.BILINEAR, center=(2 * SIDE, 2 * SIDE))
    dx, dy = rng.integers(-1, 2, size=2)
    left, top = SIDE + SIDE // 2 - int(dx), SIDE + SIDE // 2 - int(dy)
    img = np.asarray(big.crop((left, top, left + SIDE, top + SIDE)), dtype=float) / 255.0
    img = img * rng.uniform(0.7, 1.0)
    img = img + rng.normal(0.0, noise, img.shape)
    return np.clip(img, 0.0, 1.0).ravel()


def synthetic_glyphs(seed: int, n_per_class: int, noise: float = 0.1) -> Dataset:
    """Randomly sized, shifted, rotated and noisy renderings of A-Z on a 16x16 grid."""
    if n_per_class < 1:
        raise DatasetError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    X, y = [], []
    for _ in range(n_per_class):
        for k, letter in enumerate(LETTERS):
            X.append(_render(letter, rng, noise))
            y.append(k)
    return Dataset(np.array(X), np.array(y))


def save_dataset(ds: Dataset, directory) -> list[Path]:
    directory = Path(directory)
    written = []
    rows = ["file,label,letter"]
    for i, (x, label) in enumerate(zip(ds.X, ds.y)):
        name = f"images/{i:05d}.csv"
        written.append(atomic_write_text(directory / name, ",".join(f"{v:.6f}" for v in x) + "\n"))
        rows.append(f"{name},{label},{LETTERS[label] if label < 26 else ''}")
    written.append(atomic_write_text(directory / "labels.csv", "\n".join(rows) + "\n"))
    return written


def gen_synthetic_dataset(seed: int, n_per_class: int, directory, noise: float = 0.1) -> list[Path]:
    return save_dataset(synthetic_glyphs(seed, n_per_class, noise), directory)


def load_dataset(directory) -> Dataset:
    directory = Path(directory)
    labels = directory / "labels.csv"
    if not labels.exists():
        raise DatasetError(f"{labels}: missing label file")
    X, y = [], []
    with open(labels, newline="") as fh:
        for r in csv.DictReader(fh):
            path = directory / r["file"]
            try:
                vec = np.loadtxt(path, delimiter=",", ndmin=1)
            except (OSError, ValueError) as exc:
                raise DatasetError(f"{path}: unreadable ({exc})") from exc
            if vec.size != SIDE * SIDE:
                raise DatasetError(f"{path}: expected {SIDE * SIDE} values, found {vec.size}")
            X.append(vec)
            y.append(int(r["label"]))
    return Dataset(np.array(X), np.array(y))


def resample_area(img: np.ndarray, side: int = SIDE) -> np.ndarray:
    """Area-average a 2-D image onto ``side x side`` pixels."""
    img = np.asarray(img, dtype=np.float32)
    if img.shape == (side, side):
        return img.astype(float)
    return np.asarray(Image.fromarray(img, mode="F").resize((side, side), Image.BOX), dtype=float)


def _label_from_dir(name: str) -> int:
    n = name.strip()
    if len(n) == 1 and n.upper() in LETTERS:
        return LETTERS.index(n.upper())
    if n.lower().startswith("sample") and n[6:].isdigit():
        k = int(n[6:])
        # upper-case letters occupy samples 11-36 in the character benchmark layout
        if 11 <= k <= 36:
            return k - 11
    raise DatasetError(f"cannot infer a letter label from directory {name!r}")


def _read_image(path: Path, fmt: str) -> np.ndarray:
    if fmt == "pgm":
        with Image.open(path) as im:
            mode = im.mode
            arr = np.asarray(im.convert("F") if mode not in ("L", "I", "I;16") else im, dtype=float)
        if arr.ndim != 2:
            raise DatasetError(f"{path}: not a greyscale image")
        maxval = 255.0 if mode == "L" else float(max(arr.max(), 1.0))
        if mode in ("I", "I;16"):
            maxval = 65535.0 if arr.max() > 255 else 255.0
        return arr / maxval
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    return arr / 255.0 if arr.max() > 1.0 else arr


def ingest_images(directory, fmt: str = "pgm") -> Dataset:
    """Load ``<dir>/<label>/<image>`` files, area-resample to 16x16 and flatten.

    Labels come from sub-directory names: a single letter, or ``SampleNNN``
    with NNN in 011-036. Pixel values are scaled to [0, 1] by the format's
    maximum (255 for 8-bit PGM; CSV values above 1 are read as 8-bit).
    """
    if fmt not in ("pgm", "csv"):
        raise DatasetError(f"unsupported format {fmt!r}")
    root = Path(directory)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    suffixes = {".pgm", ".png"} if fmt == "pgm" else {".csv"}
    X, y, errors = [], [], []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        label = _label_from_dir(sub.name)
        for f in sorted(sub.iterdir()):
            if f.suffix.lower() not in suffixes:
                continue
            try:
                img = _read_image(f, fmt)
                if img.ndim != 2 or min(img.shape) < 1:
                    raise DatasetError("ill-sized image")
                X.append(np.clip(resample_area(img), 0.0, 1.0).ravel())
                y.append(label)
            except Exception as exc:  # collect, report all bad paths together
                errors.append(f"{f}: {exc}")
    if errors:
        raise DatasetError("unreadable or ill-sized files:\n" + "\n".join(errors))
    if not X:
        raise DatasetError(f"{root}: no {fmt} images found")
    return Dataset(np.array(X), np.array(y))
