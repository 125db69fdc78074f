"""Annotation parsing, training-patch extraction, and corpus statistics.

Two annotation dialects are supported: VOC 2007/2012 XML (person objects
only, converted from 1-based inclusive corners) and INRIA-style plain text
("Bounding box" lines with 0-based inclusive corner pairs).  A manifest
file lists the corpus, one image per line:

    <split>\t<image-path>\t<annotation-path>

with split in {train, test}; an annotation path of "-" marks a person-free
image.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np

from .errors import InputFormatError
from .images import Rect, as_gray, check_rect_in_bounds, resize

PATCH_W, PATCH_H = 32, 64

# Fraction of a sampled window that may overlap a person box before the
# window is rejected as a negative.
NEGATIVE_OVERLAP_LIMIT = 0.2


@dataclass(frozen=True)
class GroundTruthBox:
    image_id: str
    rect: Rect


@dataclass(frozen=True)
class DatasetStats:
    n_train_images: int
    n_train_labels: int
    n_test_images: int
    n_test_labels: int

    @property
    def n_total(self) -> int:
        return self.n_train_images + self.n_test_images


@dataclass(frozen=True)
class ManifestEntry:
    split: str
    image_path: str
    annotation_path: str | None  # None for person-free images


def parse_voc_annotation(xml_text: str) -> list[GroundTruthBox]:
    """Person boxes from one VOC annotation document.

    VOC stores 1-based inclusive (xmin, ymin, xmax, ymax); the returned
    rects are 0-based with w = xmax - xmin + 1.  Objects of other classes
    are dropped; "difficult" person objects are kept.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise InputFormatError(f"malformed VOC XML: {exc}") from exc
    if root.find("size") is None:
        raise InputFormatError("VOC annotation is missing its <size> element")
    fname = root.findtext("filename", default="")
    boxes = []
    for obj in root.findall("object"):
        if (obj.findtext("name") or "").strip() != "person":
            continue
        bnd = obj.find("bndbox")
        if bnd is None:
            raise InputFormatError("person object without <bndbox>")
        try:
            xmin = int(float(bnd.findtext("xmin")))
            ymin = int(float(bnd.findtext("ymin")))
            xmax = int(float(bnd.findtext("xmax")))
            ymax = int(float(bnd.findtext("ymax")))
        except (TypeError, ValueError) as exc:
            raise InputFormatError(f"bad <bndbox> coordinates: {exc}") from exc
        if xmax <= xmin or ymax <= ymin:
            raise InputFormatError(f"degenerate box ({xmin},{ymin})-({xmax},{ymax})")
        boxes.append(GroundTruthBox(fname, Rect(xmin - 1, ymin - 1,
                                                xmax - xmin + 1, ymax - ymin + 1)))
    return boxes


_INRIA_BOX = re.compile(
    r'Bounding box for object \d+ "(?P<label>[^"]+)".*?:'
    r"\s*\((?P<xmin>-?\d+),\s*(?P<ymin>-?\d+)\)\s*-\s*\((?P<xmax>-?\d+),\s*(?P<ymax>-?\d+)\)"
)
_INRIA_IMAGE = re.compile(r'Image filename\s*:\s*"(?P<path>[^"]+)"')


def parse_inria_annotation(text: str) -> list[GroundTruthBox]:
    """PASperson boxes from one INRIA annotation file, in file order.

    Corners are 0-based inclusive, so w = xmax - xmin + 1.
    """
    m = _INRIA_IMAGE.search(text)
    image_id = m.group("path") if m else ""
    boxes = []
    for line in text.splitlines():
        if "Bounding box" not in line:
            continue
        match = _INRIA_BOX.search(line)
        if match is None:
            raise InputFormatError(f"unparseable bounding-box line: {line.strip()!r}")
        if match.group("label") != "PASperson":
            continue
        xmin, ymin = int(match.group("xmin")), int(match.group("ymin"))
        xmax, ymax = int(match.group("xmax")), int(match.group("ymax"))
        if xmax <= xmin or ymax <= ymin:
            raise InputFormatError(f"degenerate box in line: {line.strip()!r}")
        boxes.append(GroundTruthBox(image_id, Rect(xmin, ymin,
                                                   xmax - xmin + 1, ymax - ymin + 1)))
    return boxes


def extract_positives(img, boxes) -> list[np.ndarray]:
    """Crop each person box and resize to the 32x64 standard patch.

    Aspect ratio is intentionally ignored, so square boxes come out
    distorted.
    """
    src = as_gray(img)
    h, w = src.shape
    patches = []
    for box in boxes:
        r = box.rect if isinstance(box, GroundTruthBox) else box
        check_rect_in_bounds(r, w, h)
        crop = src[r.y:r.y + r.h, r.x:r.x + r.w]
        patches.append(resize(crop, PATCH_W, PATCH_H))
    return patches


def sample_negative_rects(images, boxes_per_image, count: int, seed: int,
                          max_attempts_factor: int = 200) -> list[tuple[int, Rect]]:
    """Positions of random person-free windows as (image index, rect) pairs.

    Windows are drawn uniformly: random image, random scale in [0.5, 2] of
    the 32x64 base size, random position.  A window is rejected when its
    intersection with any person box reaches 20% of the window area.
    Deterministic for a fixed seed.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return []
    srcs = [as_gray(im) for im in images]
    min_w, min_h = round(PATCH_W * 0.5), round(PATCH_H * 0.5)
    usable = [i for i, s in enumerate(srcs)
              if s.shape[1] >= min_w and s.shape[0] >= min_h]
    if not usable:
        raise ValueError("no image is large enough to host a negative window")

    rng = np.random.default_rng(seed)
    out: list[tuple[int, Rect]] = []
    attempts = 0
    budget = max_attempts_factor * count
    while len(out) < count:
        attempts += 1
        if attempts > budget:
            raise RuntimeError(f"could not place {count} negatives within "
                               f"{budget} attempts; too little person-free area")
        idx = usable[int(rng.integers(len(usable)))]
        src = srcs[idx]
        ih, iw = src.shape
        s = float(rng.uniform(0.5, 2.0))
        w, h = round(PATCH_W * s), round(PATCH_H * s)
        if w > iw or h > ih:
            continue
        x = int(rng.integers(iw - w + 1))
        y = int(rng.integers(ih - h + 1))
        win = Rect(x, y, w, h)
        boxes = boxes_per_image[idx] if boxes_per_image else []
        limit = NEGATIVE_OVERLAP_LIMIT * win.area()
        if any(win.intersection_area(b.rect if isinstance(b, GroundTruthBox) else b)
               >= limit for b in boxes):
            continue
        out.append((idx, win))
    return out


def sample_negatives(images, boxes_per_image, count: int, seed: int,
                     max_attempts_factor: int = 200) -> list[np.ndarray]:
    """Random person-free windows, cropped and resized to 32x64 patches."""
    srcs = [as_gray(im) for im in images] if count else []
    rects = sample_negative_rects(images, boxes_per_image, count, seed,
                                  max_attempts_factor)
    return [resize(srcs[i][r.y:r.y + r.h, r.x:r.x + r.w], PATCH_W, PATCH_H)
            for i, r in rects]


def stats(train_boxes_per_image, test_boxes_per_image) -> DatasetStats:
    """Image and label counts for the train/test splits."""
    return DatasetStats(
        n_train_images=len(train_boxes_per_image),
        n_train_labels=sum(len(b) for b in train_boxes_per_image),
        n_test_images=len(test_boxes_per_image),
        n_test_labels=sum(len(b) for b in test_boxes_per_image),
    )


def parse_manifest(text: str) -> list[ManifestEntry]:
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise InputFormatError(f"manifest line {lineno}: expected 3 tab-separated "
                                   f"fields, got {len(parts)}")
        split, image_path, ann_path = parts
        if split not in ("train", "test"):
            raise InputFormatError(f"manifest line {lineno}: unknown split {split!r}")
        entries.append(ManifestEntry(split, image_path,
                                     None if ann_path == "-" else ann_path))
    return entries


def parse_annotation_file(path: str, text: str) -> list[GroundTruthBox]:
    """Dispatch on extension: .xml is VOC, anything else is INRIA text."""
    if path.lower().endswith(".xml"):
        return parse_voc_annotation(text)
    return parse_inria_annotation(text)
