"""Command-line entry point: prepare, train, detect, eval, bench.

Exit codes: 0 success, 2 bad arguments, 3 input-format error, 4 model
format-version mismatch.  All commands are deterministic for fixed flags
and seeds except the wall-clock fields of benchmark and report rows.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import platform
import sys
import time

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import datasets
from ._parallel import parallel_map
from .classify import bootstrap_mine
from .detector import DetectConfig, DetectStats, detect, format_detection_line
from .errors import InputFormatError, ModelVersionError, PedscanError
from .estimators import HogSvmDetector, LbpAdaBoostDetector
from .evaluation import (REPORT_HEADER, evaluate, report_csv_row,
                         speed_quality_point)
from .hog import HogConfig, descriptors_for_patches, get_lut
from .images import to_grayscale
from .modelio import MODEL_HOG_SVM, MODEL_LBP_ADABOOST, load_model, save_model

BENCH_HEADER = "model_type,image_w,image_h,frames,total_ms,fps,window_count,cpu"


def read_image_gray(path: str) -> np.ndarray:
    """Decode an 8-bit image file (PNG/PGM/JPEG...) to a grayscale raster."""
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8)
            rgb = im.convert("RGB")
            return to_grayscale(np.asarray(rgb, dtype=np.uint8))
    except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
        raise InputFormatError(f"cannot decode image {path!r}: {exc}") from exc


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path!r}: {exc}") from exc


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")


def _detect_config(args) -> DetectConfig:
    w, h = args.window
    return DetectConfig(window_w=w, window_h=h, step=args.step,
                        scale_factor=args.scale_factor,
                        max_levels=args.max_levels,
                        score_threshold=args.threshold,
                        nms_overlap=args.nms_overlap)


def _add_detect_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=_parse_size, default=(32, 64),
                   help="detection window as WxH (default 32x64)")
    p.add_argument("--step", type=int, default=8, help="scan stride in pixels")
    p.add_argument("--scale-factor", type=float, default=1.2,
                   help="pyramid downscale factor per level")
    p.add_argument("--max-levels", type=int, default=None,
                   help="cap on pyramid levels (default: until the window no longer fits)")
    p.add_argument("--threshold", type=float, default=0.0,
                   help="keep windows scoring strictly above this")
    p.add_argument("--nms-overlap", type=float, default=0.5,
                   help="IoU above which a lower-scored detection is suppressed")


def _load_manifest(path: str) -> list[datasets.ManifestEntry]:
    return datasets.parse_manifest(_read_text(path))


def _boxes_for_entry(entry: datasets.ManifestEntry):
    if entry.annotation_path is None:
        return []
    return datasets.parse_annotation_file(entry.annotation_path,
                                          _read_text(entry.annotation_path))


# ---------------------------------------------------------------- prepare

def cmd_prepare(args) -> int:
    entries = _load_manifest(args.manifest)
    train = [e for e in entries if e.split == "train"]
    test = [e for e in entries if e.split == "test"]

    train_images, train_boxes = [], []
    for entry in train:
        train_images.append(read_image_gray(entry.image_path))
        train_boxes.append(_boxes_for_entry(entry))
    test_boxes = [_boxes_for_entry(e) for e in test]

    positives = []
    for img, boxes in zip(train_images, train_boxes):
        positives.extend(datasets.extract_positives(img, boxes))
    n_neg = args.negatives if args.negatives is not None else 2 * len(positives)
    negatives = (datasets.sample_negatives(train_images, train_boxes, n_neg,
                                           seed=args.seed)
                 if n_neg > 0 and train_images else [])

    os.makedirs(os.path.join(args.out, "pos"), exist_ok=True)
    os.makedirs(os.path.join(args.out, "neg"), exist_ok=True)
    index_lines = []
    for role, patches in (("pos", positives), ("neg", negatives)):
        for i, patch in enumerate(patches):
            rel = os.path.join(role, f"{i:06d}.png")
            full = os.path.join(args.out, rel)
            Image.fromarray(patch, mode="L").save(full)
            with open(full, "rb") as fh:
                index_lines.append(f"{role}\t{rel}\t{_sha256(fh.read())}")
    index_text = "\n".join(index_lines) + ("\n" if index_lines else "")
    with open(os.path.join(args.out, "index.tsv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(index_text)

    st = datasets.stats(train_boxes, test_boxes)
    print("split\timages\tlabels")
    print(f"train\t{st.n_train_images}\t{st.n_train_labels}")
    print(f"test\t{st.n_test_images}\t{st.n_test_labels}")
    print(f"patches\tpos={len(positives)}\tneg={len(negatives)}")
    print(f"index_digest\t{_sha256(index_text.encode())}")
    return 0


def load_sample_set(samples_dir: str) -> tuple[np.ndarray, np.ndarray]:
    """Read the prepare output back as (patches, labels in {0,1})."""
    index_path = os.path.join(samples_dir, "index.tsv")
    patches, labels = [], []
    for line in _read_text(index_path).splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise InputFormatError(f"bad index line in {index_path!r}")
        role, rel, _digest = parts
        patches.append(read_image_gray(os.path.join(samples_dir, rel)))
        labels.append(1 if role == "pos" else 0)
    if not patches:
        raise InputFormatError(f"no samples listed in {index_path!r}")
    return np.stack(patches), np.asarray(labels)


# ------------------------------------------------------------------ train

def _person_free_images(manifest_path: str | None) -> list[np.ndarray]:
    if manifest_path is None:
        return []
    images = []
    for entry in _load_manifest(manifest_path):
        if entry.split == "train" and not _boxes_for_entry(entry):
            images.append(read_image_gray(entry.image_path))
    return images


def cmd_train(args) -> int:
    patches, labels = load_sample_set(args.samples)
    pos = patches[labels == 1]
    neg = patches[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise InputFormatError("training needs both positive and negative patches")

    w, h = args.window
    if args.model_type == MODEL_HOG_SVM:
        model = HogSvmDetector(lam=args.lam, epochs=args.epochs, seed=args.seed,
                               hog_config=HogConfig(window_w=w, window_h=h))
    else:
        model = LbpAdaBoostDetector(n_rounds=args.rounds, window_w=w, window_h=h)

    mine_images = _person_free_images(args.manifest)
    if args.bootstrap_rounds > 0 and not mine_images:
        raise InputFormatError("--bootstrap-rounds > 0 needs a --manifest with "
                               "person-free train images")
    dcfg = _detect_config(args)
    per_round = args.negatives_per_round or len(neg)

    def _fit(neg_now):
        X = np.concatenate([pos, neg_now])
        y = np.concatenate([np.ones(len(pos), dtype=int),
                            np.zeros(len(neg_now), dtype=int)])
        return model.fit(X, y)

    _fit(neg)
    for rnd in range(args.bootstrap_rounds):
        fp_count = sum(len(detect(img, model, dcfg)) for img in mine_images)
        print(f"bootstrap round {rnd}: fppi={fp_count / max(1, len(mine_images)):.4f} "
              f"({fp_count} false positives on {len(mine_images)} images)")
        mined = bootstrap_mine(model, mine_images, dcfg, cap=per_round)
        if len(mined) == 0:
            print(f"bootstrap round {rnd}: nothing mined, stopping early")
            break
        neg = np.concatenate([neg, mined])
        _fit(neg)
    if args.bootstrap_rounds > 0 and mine_images:
        fp_count = sum(len(detect(img, model, dcfg)) for img in mine_images)
        print(f"bootstrap final: fppi={fp_count / len(mine_images):.4f} "
              f"({fp_count} false positives on {len(mine_images)} images)")

    X = np.concatenate([pos, neg])
    y = np.concatenate([np.ones(len(pos), dtype=int), np.zeros(len(neg), dtype=int)])
    train_error = float(np.mean(model.predict(X) != y))
    print(f"final training error: {train_error:.6f}")

    meta = {"seed": args.seed,
            "manifest_digest": (_sha256(_read_text(args.manifest).encode())
                                if args.manifest else "-")}
    save_model(model, args.out, training_meta=meta)
    print(f"model written to {args.out}")
    return 0


# ----------------------------------------------------------------- detect

def cmd_detect(args) -> int:
    model = load_model(args.model)
    cfg = _detect_config(args)

    def _run(path):
        img = read_image_gray(path)
        t0 = time.perf_counter()
        dets = detect(img, model, cfg)
        return path, dets, (time.perf_counter() - t0) * 1000.0

    for path, dets, ms in parallel_map(_run, args.images):
        for det in dets:
            print(format_detection_line(path, det))
        if args.time:
            print(f"#time\t{path}\t{ms:.3f}")
    return 0


# ------------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    model = load_model(args.model)
    cfg = _detect_config(args)
    entries = [e for e in _load_manifest(args.manifest) if e.split == "test"]
    if not entries:
        raise InputFormatError("manifest has no test-split entries")

    labels_per_image = {}
    for entry in entries:
        labels_per_image[entry.image_path] = [b.rect for b in _boxes_for_entry(entry)]

    def _run(entry):
        img = read_image_gray(entry.image_path)
        t0 = time.perf_counter()
        dets = detect(img, model, cfg)
        ms = (time.perf_counter() - t0) * 1000.0
        return entry.image_path, [(d.rect, d.score) for d in dets], ms

    results = parallel_map(_run, entries)
    detections = {path: dets for path, dets, _ in results}
    timings = [ms for _, _, ms in results]

    report = evaluate(labels_per_image, detections, timings, rule=args.rule)
    model_name = (MODEL_HOG_SVM if isinstance(model, HogSvmDetector)
                  else MODEL_LBP_ADABOOST)
    with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(REPORT_HEADER + "\n")
        fh.write(report_csv_row(model_name, report) + "\n")
    avg_ms, matches = speed_quality_point(report)
    with open(args.series, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("model,avg_time_ms,match_count\n")
        fh.write(f"{model_name},{avg_ms!r},{matches}\n")
    print(f"{model_name} rule={report.rule} images={report.n_images} "
          f"fppi={report.avg_fppi:.4f} miss_rate={report.miss_rate:.4f} "
          f"matches={report.match_count} avg_ms={report.avg_time_ms:.2f}")
    return 0


# ------------------------------------------------------------------ bench

def synth_frames(width: int, height: int, n: int, seed: int = 0) -> list[np.ndarray]:
    """Deterministic synthetic frames: textured background plus blocks."""
    rng = np.random.default_rng(seed)
    frames = []
    for _ in range(n):
        img = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
        for _ in range(12):
            w = int(rng.integers(16, max(17, width // 4)))
            h = int(rng.integers(16, max(17, height // 4)))
            x = int(rng.integers(0, width - w + 1))
            y = int(rng.integers(0, height - h + 1))
            img[y:y + h, x:x + w] = int(rng.integers(0, 256))
        frames.append(img)
    return frames


def cmd_bench(args) -> int:
    model = load_model(args.model)
    cfg = _detect_config(args)
    w, h = args.image_size
    frames = synth_frames(w, h, args.frames, seed=args.seed)

    stats = DetectStats()
    detect(frames[0], model, cfg, stats=DetectStats())  # warm-up, not timed
    t0 = time.perf_counter()
    for frame in frames:
        detect(frame, model, cfg, stats=stats)
    total_ms = (time.perf_counter() - t0) * 1000.0
    fps = args.frames / (total_ms / 1000.0)

    model_name = (MODEL_HOG_SVM if isinstance(model, HogSvmDetector)
                  else MODEL_LBP_ADABOOST)
    row = (f"{model_name},{w},{h},{args.frames},{total_ms!r},{fps!r},"
           f"{stats.windows_evaluated},{platform.processor() or 'unknown'}")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(BENCH_HEADER + "\n")
        fh.write(row + "\n")
    print(row)

    if args.compare_lut:
        ratio = bench_lut_ratio(seed=args.seed)
        print(f"lut_vs_direct: direct/lut time ratio = {ratio:.3f} "
              f"(>1 means the table path is faster)")
    return 0


def bench_lut_ratio(n_windows: int = 1000, seed: int = 0, repeats: int = 3) -> float:
    """Time descriptor extraction with and without the gradient table."""
    cfg = HogConfig()
    rng = np.random.default_rng(seed)
    patches = rng.integers(0, 256, size=(n_windows, cfg.window_h, cfg.window_w),
                           dtype=np.uint8)
    lut = get_lut(cfg)
    descriptors_for_patches(patches[:32], cfg, lut)               # warm-up
    descriptors_for_patches(patches[:32], cfg, use_lut=False)
    t_lut = min(_timed(lambda: descriptors_for_patches(patches, cfg, lut))
                for _ in range(repeats))
    t_direct = min(_timed(lambda: descriptors_for_patches(patches, cfg, use_lut=False))
                   for _ in range(repeats))
    return t_direct / t_lut


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


# ------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pedscan",
                                     description="CPU pedestrian detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="extract 32x64 training patches from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negatives", type=int, default=None,
                   help="negative patch count (default: 2x positives)")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a detector on prepared samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--model-type", required=True,
                   choices=[MODEL_HOG_SVM, MODEL_LBP_ADABOOST])
    p.add_argument("--out", required=True)
    p.add_argument("--rounds", type=int, default=64, help="AdaBoost rounds")
    p.add_argument("--lam", type=float, default=1e-3, help="SVM regularization")
    p.add_argument("--epochs", type=int, default=30, help="SVM epochs")
    p.add_argument("--bootstrap-rounds", type=int, default=0)
    p.add_argument("--negatives-per-round", type=int, default=0,
                   help="mined negatives per bootstrap round (0 = initial negative count)")
    p.add_argument("--manifest", default=None,
                   help="manifest supplying person-free images for bootstrap mining")
    p.add_argument("--seed", type=int, default=0)
    _add_detect_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run the detector, one line per detection")
    p.add_argument("--model", required=True)
    p.add_argument("--time", action="store_true",
                   help="append per-image milliseconds as #time lines")
    _add_detect_flags(p)
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="FPPI / miss-rate report over a manifest test split")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--rule", choices=["paper", "iou"], default="paper")
    p.add_argument("--report", default="report.csv")
    p.add_argument("--series", default="series.csv")
    _add_detect_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time end-to-end detection on synthetic frames")
    p.add_argument("--model", required=True)
    p.add_argument("--image-size", type=_parse_size, default=(640, 480))
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--compare-lut", action="store_true",
                   help="also time the runtime-trig descriptor path and print the ratio")
    _add_detect_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelVersionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (InputFormatError, PedscanError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
