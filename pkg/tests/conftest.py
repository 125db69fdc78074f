"""Shared synthetic fixtures: person-like patches, clutter, and tiny corpora."""

import numpy as np
import pytest

from pedscan.images import Rect


def person_patch(rng) -> np.ndarray:
    """A 32x64 pedestrian-like silhouette: head, torso, legs on noise."""
    bg = float(rng.uniform(90, 150))
    contrast = float(rng.uniform(60, 105)) * (1 if rng.random() < 0.5 else -1)
    img = np.full((64, 32), bg)

    cx = 16 + float(rng.uniform(-2, 2))
    head_y = 9 + float(rng.uniform(-2, 2))
    head_r = float(rng.uniform(3.5, 5.5))
    yy, xx = np.mgrid[0:64, 0:32]
    img[(xx - cx) ** 2 + (yy - head_y) ** 2 <= head_r ** 2] = bg + contrast

    torso_w = float(rng.uniform(8, 13))
    torso_top = head_y + head_r + 1
    torso_bot = 38 + float(rng.uniform(-2, 2))
    torso = (np.abs(xx - cx) <= torso_w / 2) & (yy >= torso_top) & (yy <= torso_bot)
    img[torso] = bg + contrast

    leg_w = float(rng.uniform(2.5, 4.5))
    gap = float(rng.uniform(2, 4))
    leg_bot = 58 + float(rng.uniform(-2, 2))
    for side in (-1, 1):
        lx = cx + side * (gap / 2 + leg_w / 2)
        leg = (np.abs(xx - lx) <= leg_w / 2) & (yy > torso_bot) & (yy <= leg_bot)
        img[leg] = bg + contrast

    img += rng.normal(0, 8, img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def clutter_patch(rng) -> np.ndarray:
    """A 32x64 non-person patch: noise, gradients, bars, or blobs."""
    kind = int(rng.integers(4))
    if kind == 0:
        img = rng.normal(rng.uniform(40, 210), rng.uniform(5, 40), (64, 32))
    elif kind == 1:
        lo, hi = sorted(rng.uniform(0, 255, size=2))
        axis = np.linspace(lo, hi, 64)[:, None] if rng.random() < 0.5 \
            else np.linspace(lo, hi, 32)[None, :]
        img = np.broadcast_to(axis, (64, 32)) + rng.normal(0, 6, (64, 32))
    elif kind == 2:
        yy, xx = np.mgrid[0:64, 0:32]
        theta = rng.uniform(0, np.pi)
        period = rng.uniform(4, 14)
        wave = np.sin((xx * np.cos(theta) + yy * np.sin(theta)) * 2 * np.pi / period)
        img = 128 + rng.uniform(40, 110) * wave + rng.normal(0, 6, (64, 32))
    else:
        img = np.full((64, 32), rng.uniform(60, 190))
        for _ in range(int(rng.integers(2, 6))):
            w, h = int(rng.integers(4, 16)), int(rng.integers(4, 20))
            x, y = int(rng.integers(0, 32 - w)), int(rng.integers(0, 64 - h))
            img[y:y + h, x:x + w] = rng.uniform(0, 255)
        img += rng.normal(0, 6, (64, 32))
    return np.clip(img, 0, 255).astype(np.uint8)


def patch_classes(n_pos: int, n_neg: int, seed: int = 0):
    """(X, y) stacks of person/clutter patches with labels 1/0."""
    rng = np.random.default_rng(seed)
    pos = np.stack([person_patch(rng) for _ in range(n_pos)])
    neg = np.stack([clutter_patch(rng) for _ in range(n_neg)])
    X = np.concatenate([pos, neg])
    y = np.concatenate([np.ones(n_pos, dtype=int), np.zeros(n_neg, dtype=int)])
    return X, y


def clutter_image(rng, width: int = 192, height: int = 256) -> np.ndarray:
    """A person-free image tiled with oriented gratings and blocks."""
    yy, xx = np.mgrid[0:height, 0:width]
    theta = rng.uniform(0, np.pi)
    period = rng.uniform(6, 16)
    wave = np.sin((xx * np.cos(theta) + yy * np.sin(theta)) * 2 * np.pi / period)
    img = 128 + rng.uniform(50, 100) * wave
    for _ in range(6):
        w, h = int(rng.integers(12, 48)), int(rng.integers(12, 48))
        x, y = int(rng.integers(0, width - w)), int(rng.integers(0, height - h))
        img[y:y + h, x:x + w] = rng.uniform(0, 255)
    img += rng.normal(0, 5, img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def scene_with_patch(patch: np.ndarray, x: int, y: int, width: int = 160,
                     height: int = 224, bg: int = 128) -> tuple[np.ndarray, Rect]:
    """Flat background with one planted window; returns (image, plant rect)."""
    img = np.full((height, width), bg, dtype=np.uint8)
    h, w = patch.shape
    img[y:y + h, x:x + w] = patch
    return img, Rect(x, y, w, h)


@pytest.fixture(scope="session")
def small_training_set():
    return patch_classes(80, 80, seed=7)


def single_feature_fixture(n_per_class=20, seed=0):
    """Patches separable by one batch-LBP neighborhood.

    Positives carry a bright ring around a dark 2x2-batch center at one
    fixed position; elsewhere both classes share the same noise
    distribution, so only neighborhoods overlapping the pattern separate.
    """
    rng = np.random.default_rng(seed)
    fx, fy = 12, 20
    pos, neg = [], []
    for _ in range(n_per_class):
        base = rng.integers(100, 156, size=(64, 32)).astype(np.uint8)
        p = base.copy()
        p[fy:fy + 6, fx:fx + 6] = 220
        p[fy + 2:fy + 4, fx + 2:fx + 4] = 30
        pos.append(p)
        q = base.copy()
        q[fy:fy + 6, fx:fx + 6] = 128
        neg.append(q)
    return np.stack(pos), np.stack(neg), (fx, fy)


VOC_XML = """<annotation>
  <filename>{fname}</filename>
  <size><width>{w}</width><height>{h}</height><depth>1</depth></size>
  {objects}
</annotation>
"""

INRIA_BOX_LINE = ('Bounding box for object {i} "PASperson" (Xmin, Ymin) - '
                  '(Xmax, Ymax) : ({xmin}, {ymin}) - ({xmax}, {ymax})\n')


def build_mini_corpus(root, seed=0, n_train_pos=3, n_train_neg=3, n_test=2):
    """A tiny on-disk corpus in both annotation dialects plus a manifest.

    Returns the manifest path.  Positive images carry one or two planted
    person-like boxes; negative images are clutter with a '-' annotation.
    """
    from PIL import Image

    rng = np.random.default_rng(seed)
    img_dir = root / "images"
    ann_dir = root / "annotations"
    img_dir.mkdir(parents=True, exist_ok=True)
    ann_dir.mkdir(parents=True, exist_ok=True)
    lines = []

    def save_image(name, arr):
        path = img_dir / name
        Image.fromarray(arr, mode="L").save(path)
        return str(path)

    def make_positive(name, use_voc):
        img = clutter_image(rng, width=192, height=256)
        n_boxes = int(rng.integers(1, 3))
        rects = []
        for _ in range(n_boxes):
            w, h = int(rng.integers(36, 56)), int(rng.integers(90, 130))
            x = int(rng.integers(0, 192 - w))
            y = int(rng.integers(0, 256 - h))
            person = person_patch(rng)
            from pedscan.images import resize
            img[y:y + h, x:x + w] = resize(person, w, h)
            rects.append(Rect(x, y, w, h))
        path = save_image(name, img)
        if use_voc:
            objects = "".join(
                f"<object><name>person</name><bndbox>"
                f"<xmin>{r.x + 1}</xmin><ymin>{r.y + 1}</ymin>"
                f"<xmax>{r.x + r.w}</xmax><ymax>{r.y + r.h}</ymax>"
                f"</bndbox></object>" for r in rects)
            ann = ann_dir / (name + ".xml")
            ann.write_text(VOC_XML.format(fname=name, w=192, h=256,
                                          objects=objects))
        else:
            text = f'Image filename : "{name}"\n' + "".join(
                INRIA_BOX_LINE.format(i=i + 1, xmin=r.x, ymin=r.y,
                                      xmax=r.x + r.w - 1, ymax=r.y + r.h - 1)
                for i, r in enumerate(rects))
            ann = ann_dir / (name + ".txt")
            ann.write_text(text)
        return path, str(ann)

    for k in range(n_train_pos):
        path, ann = make_positive(f"train_pos_{k}.png", use_voc=(k % 2 == 0))
        lines.append(f"train\t{path}\t{ann}")
    for k in range(n_train_neg):
        path = save_image(f"train_neg_{k}.png", clutter_image(rng))
        lines.append(f"train\t{path}\t-")
    for k in range(n_test):
        path, ann = make_positive(f"test_{k}.png", use_voc=(k % 2 == 1))
        lines.append(f"test\t{path}\t{ann}")

    manifest = root / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest
