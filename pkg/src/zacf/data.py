"""Seeded synthetic datasets standing in for real recognition data.

* ``ecg_like`` -- 1-D heartbeat-shaped pulses (P, QRS and T waves) with
  jittered timing, width and amplitude.
* ``shapes`` -- 2-D class-specific blobs as training chips, plus test scenes
  with one randomly placed target each.
* ``vehicles_ir_like`` -- bright target chips on textured backgrounds, with
  target-free frames containing distractors for hard-negative mining.

Every generator takes a ``seed`` and uses :func:`numpy.random.default_rng`,
so equal seeds give identical arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import MultiChannelSignal

__all__ = [
    "ecg_like",
    "shape_chip",
    "ShapeScene",
    "ShapesDataset",
    "shapes",
    "SHAPE_CLASSES",
    "VehicleDataset",
    "vehicles_ir_like",
]


def _gauss(t, mu, sigma):
    return np.exp(-0.5 * ((t - mu) / sigma) ** 2)


def ecg_like(count: int, length: int = 301, seed: int = 0, noise: float = 0.001) -> list[MultiChannelSignal]:
    """``count`` single-channel heartbeat-like signals of ``length`` samples."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, length)
    out = []
    for _ in range(count):
        shift = rng.normal(0.0, 0.015)
        scale = 1.0 + rng.normal(0.0, 0.05)
        wave = (
            0.15 * scale * _gauss(t, 0.25 + shift, 0.03 * scale)
            - 0.12 * _gauss(t, 0.40 + shift, 0.010)
            + (1.0 + rng.normal(0.0, 0.1)) * _gauss(t, 0.43 + shift, 0.012)
            - 0.2 * _gauss(t, 0.46 + shift, 0.010)
            + (0.3 + rng.normal(0.0, 0.05)) * _gauss(t, 0.68 + 1.5 * shift, 0.05 * scale)
        )
        wave = wave + noise * rng.normal(size=length)
        out.append(MultiChannelSignal(wave[None, :, None]))
    return out


SHAPE_CLASSES = ("disk", "square", "cross", "ring")


def shape_chip(kind: str, size: int = 16, dy: float = 0.0, dx: float = 0.0, scale: float = 1.0) -> np.ndarray:
    """Noise-free ``size x size`` rendering of one shape class (values in [0, 1])."""
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    y = (yy - c - dy) / scale
    x = (xx - c - dx) / scale
    r = np.hypot(y, x)
    soft = 0.75  # edge softness in pixels
    R = 0.3 * size
    if kind == "disk":
        img = 1.0 / (1.0 + np.exp((r - R) / soft))
    elif kind == "square":
        d = np.maximum(np.abs(y), np.abs(x))
        img = 1.0 / (1.0 + np.exp((d - 0.8 * R) / soft))
    elif kind == "cross":
        arm = 0.12 * size
        d1 = np.maximum(np.abs(y) - R, np.abs(x) - arm)
        d2 = np.maximum(np.abs(x) - R, np.abs(y) - arm)
        img = 1.0 / (1.0 + np.exp(np.minimum(d1, d2) / soft))
    elif kind == "ring":
        img = 1.0 / (1.0 + np.exp((np.abs(r - 0.8 * R) - 0.12 * size) / soft))
    else:
        raise ValueError(f"unknown shape class {kind!r}")
    return img


@dataclass(frozen=True)
class ShapeScene:
    """A test scene holding one target of class ``label`` with its template
    origin at ``location`` (row, col)."""

    image: MultiChannelSignal
    label: int
    location: tuple[int, int]


@dataclass
class ShapesDataset:
    train: dict = field(default_factory=dict)  # class id -> list of chips
    test: list = field(default_factory=list)  # ShapeScene
    chip_size: int = 16
    scene_size: int = 32
    classes: tuple = SHAPE_CLASSES


def _jittered_chip(rng, kind, size, noise):
    dy, dx = rng.uniform(-1.0, 1.0, size=2)
    scale = rng.uniform(0.9, 1.1)
    amp = rng.uniform(0.8, 1.2)
    img = amp * shape_chip(kind, size, dy, dx, scale)
    return img + noise * rng.normal(size=img.shape)


def shapes(
    n_classes: int = 4,
    n_train: int = 10,
    n_test: int = 10,
    seed: int = 0,
    noise: float = 0.1,
    chip_size: int = 16,
    scene_size: int = 32,
) -> ShapesDataset:
    """Training chips and test scenes for ``n_classes`` shape classes."""
    if not 1 <= n_classes <= len(SHAPE_CLASSES):
        raise ValueError(f"n_classes must be in 1..{len(SHAPE_CLASSES)}")
    rng = np.random.default_rng(seed)
    classes = SHAPE_CLASSES[:n_classes]
    ds = ShapesDataset(chip_size=chip_size, scene_size=scene_size, classes=classes)
    for c, kind in enumerate(classes):
        ds.train[c] = [
            MultiChannelSignal(_jittered_chip(rng, kind, chip_size, noise)[None]) for _ in range(n_train)
        ]
    for c, kind in enumerate(classes):
        for _ in range(n_test):
            scene = np.zeros((scene_size, scene_size))
            r, s = (int(v) for v in rng.integers(0, scene_size - chip_size + 1, size=2))
            scene[r : r + chip_size, s : s + chip_size] += _jittered_chip(rng, kind, chip_size, 0.0)
            scene += noise * rng.normal(size=scene.shape)
            ds.test.append(ShapeScene(MultiChannelSignal(scene[None]), c, (r, s)))
    return ds


# ---------------------------------------------------------------------------
# vehicle-like infrared chips with distractors


def _vehicle(size, kind, rng):
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    body = 1.0 / (1.0 + np.exp((np.maximum(np.abs(yy - cy) / (0.3 * h), np.abs(xx - cx) / (0.42 * w)) - 1.0) * 6.0))
    # hot spot whose position distinguishes the vehicle classes
    hx = cx + (0.25 if kind % 2 == 0 else -0.25) * w
    hy = cy + (0.15 if kind < 2 else -0.15) * h
    hot = np.exp(-(((yy - hy) / (0.12 * h)) ** 2 + ((xx - hx) / (0.12 * w)) ** 2))
    img = 0.6 * body + 0.8 * hot
    return img * rng.uniform(0.9, 1.1)


def _distractor(size, rng):
    """A hot decoy: a vehicle-sized bright body without the class hot spot."""
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    cy = (h - 1) / 2.0 + rng.uniform(-1.0, 1.0)
    cx = (w - 1) / 2.0 + rng.uniform(-1.0, 1.0)
    ry = rng.uniform(0.25, 0.4) * h
    rx = rng.uniform(0.3, 0.45) * w
    body = 1.0 / (1.0 + np.exp((np.maximum(np.abs(yy - cy) / ry, np.abs(xx - cx) / rx) - 1.0) * 6.0))
    return rng.uniform(1.0, 1.6) * body


def _texture(shape, rng, level):
    base = rng.normal(size=shape)
    # cheap smoothing by box averaging along both axes
    k = 3
    for axis in (0, 1):
        base = sum(np.roll(base, s, axis=axis) for s in range(-k, k + 1)) / (2 * k + 1)
    return level * base / max(base.std(), 1e-12)


@dataclass
class VehicleDataset:
    """Chips, target scenes and target-free frames for retraining studies.

    ``train_pos[c]`` and ``train_neg`` hold training chips, ``frames`` are
    background frames with distractors only (mining input), ``test`` holds
    :class:`ShapeScene` records with one vehicle each plus distractors.
    """

    train_pos: dict = field(default_factory=dict)
    train_neg: list = field(default_factory=list)
    frames: list = field(default_factory=list)
    test: list = field(default_factory=list)
    chip_size: tuple = (10, 14)
    frame_size: tuple = (40, 48)


def vehicles_ir_like(
    n_classes: int = 2,
    n_train: int = 6,
    n_neg: int = 4,
    n_frames: int = 4,
    n_test: int = 8,
    n_distractors: int = 3,
    seed: int = 0,
    noise: float = 0.05,
    chip_size=(10, 14),
    frame_size=(40, 48),
) -> VehicleDataset:
    rng = np.random.default_rng(seed)
    ch, cw = chip_size
    fh, fw = frame_size
    ds = VehicleDataset(chip_size=tuple(chip_size), frame_size=tuple(frame_size))

    def chip_with_bg(img):
        return img + _texture(img.shape, rng, 0.1) + noise * rng.normal(size=img.shape)

    for c in range(n_classes):
        ds.train_pos[c] = [MultiChannelSignal(chip_with_bg(_vehicle(chip_size, c, rng))[None]) for _ in range(n_train)]
    for _ in range(n_neg):
        ds.train_neg.append(MultiChannelSignal(chip_with_bg(np.zeros(chip_size))[None]))

    def frame(n_dis, occupied=None):
        img = _texture((fh, fw), rng, 0.1)
        mask = np.zeros((fh, fw), dtype=bool)
        if occupied is not None:
            r, s = occupied
            mask[max(0, r - ch) : r + ch, max(0, s - cw) : s + cw] = True
        placed = 0
        for _ in range(50 * max(n_dis, 1)):
            if placed >= n_dis:
                break
            r = int(rng.integers(0, fh - ch + 1))
            s = int(rng.integers(0, fw - cw + 1))
            if mask[r, s]:
                continue
            img[r : r + ch, s : s + cw] += _distractor(chip_size, rng)
            mask[max(0, r - ch) : r + ch, max(0, s - cw) : s + cw] = True
            placed += 1
        return img, mask

    for _ in range(n_frames):
        img, _ = frame(n_distractors)
        img += noise * rng.normal(size=img.shape)
        ds.frames.append(MultiChannelSignal(img[None]))
    for i in range(n_test):
        c = i % n_classes
        r = int(rng.integers(0, fh - ch + 1))
        s = int(rng.integers(0, fw - cw + 1))
        img, _ = frame(n_distractors, occupied=(r, s))
        img[r : r + ch, s : s + cw] += _vehicle(chip_size, c, rng)
        img += noise * rng.normal(size=img.shape)
        ds.test.append(ShapeScene(MultiChannelSignal(img[None]), c, (r, s)))
    return ds
