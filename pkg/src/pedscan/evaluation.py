"""FPPI / miss-rate scoring and the speed-versus-quality data series.

The default match rule is asymmetric: a detection matches a label iff the
intersection area strictly exceeds half of the label's area.  A PASCAL
style IoU > 0.5 rule is available as an alternative; reports always name
the rule they were computed under.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputFormatError
from .images import Rect

RULE_PAPER = "paper"
RULE_IOU = "iou"


@dataclass
class MatchResult:
    matches: list[tuple[int, int]] = field(default_factory=list)  # (label idx, det idx)
    false_positives: list[int] = field(default_factory=list)      # det indices
    missed: list[int] = field(default_factory=list)               # label indices


@dataclass(frozen=True)
class EvalReport:
    rule: str
    n_images: int
    total_fp: int
    total_missed: int
    total_labels: int
    match_count: int
    avg_fppi: float
    miss_rate: float
    avg_time_ms: float


def is_match(label: Rect, det: Rect, rule: str = RULE_PAPER) -> bool:
    """Half-of-label overlap rule (strict), or IoU > 0.5 when rule="iou"."""
    inter = label.intersection_area(det)
    if rule == RULE_PAPER:
        return inter * 2 > label.area()
    if rule == RULE_IOU:
        return label.iou(det) > 0.5
    raise ValueError(f"unknown match rule {rule!r}")


def match_one_image(labels, detections, rule: str = RULE_PAPER) -> MatchResult:
    """Greedy one-to-one assignment of detections to labels.

    Detections are visited in descending score order (input order breaks
    ties); each claims the still-unclaimed matching label with the largest
    intersection, lower label index first on equal intersections.
    ``detections`` is a sequence of (Rect, score) pairs.
    """
    order = sorted(range(len(detections)), key=lambda i: (-detections[i][1], i))
    claimed = [False] * len(labels)
    result = MatchResult()
    for di in order:
        rect, _score = detections[di]
        best_li = -1
        best_inter = 0
        for li, label in enumerate(labels):
            if claimed[li] or not is_match(label, rect, rule):
                continue
            inter = label.intersection_area(rect)
            if inter > best_inter:
                best_inter = inter
                best_li = li
        if best_li >= 0:
            claimed[best_li] = True
            result.matches.append((best_li, di))
        else:
            result.false_positives.append(di)
    result.missed = [li for li, c in enumerate(claimed) if not c]
    return result


def evaluate(labels_per_image: dict, detections_per_image: dict,
             timings_ms=None, rule: str = RULE_PAPER) -> EvalReport:
    """Aggregate matching over a corpus keyed by image id.

    ``labels_per_image`` maps id -> list[Rect]; ``detections_per_image``
    maps id -> list[(Rect, score)] and may omit images with no detections,
    but must not name unknown images.
    """
    unknown = set(detections_per_image) - set(labels_per_image)
    if unknown:
        raise InputFormatError(f"detections reference unknown image ids: "
                               f"{sorted(unknown)!r}")
    total_fp = total_missed = total_labels = match_count = 0
    for image_id, labels in labels_per_image.items():
        dets = detections_per_image.get(image_id, [])
        res = match_one_image(labels, dets, rule)
        total_fp += len(res.false_positives)
        total_missed += len(res.missed)
        total_labels += len(labels)
        match_count += len(res.matches)
    n_images = len(labels_per_image)
    avg_time = float(np.mean(timings_ms)) if timings_ms else 0.0
    return EvalReport(
        rule=rule,
        n_images=n_images,
        total_fp=total_fp,
        total_missed=total_missed,
        total_labels=total_labels,
        match_count=match_count,
        avg_fppi=total_fp / n_images if n_images else 0.0,
        miss_rate=total_missed / total_labels if total_labels else 0.0,
        avg_time_ms=avg_time,
    )


def speed_quality_point(report: EvalReport) -> tuple[float, int]:
    """The (average time, match count) pair plotted per model/config."""
    return report.avg_time_ms, report.match_count


REPORT_HEADER = "model,rule,n_images,avg_fppi,miss_rate,match_count,avg_time_ms"


def report_csv_row(model_name: str, report: EvalReport) -> str:
    return ",".join([
        model_name,
        report.rule,
        str(report.n_images),
        repr(report.avg_fppi),
        repr(report.miss_rate),
        str(report.match_count),
        repr(report.avg_time_ms),
    ])


def parse_detection_lines(text: str) -> dict[str, list[tuple[Rect, float]]]:
    """Read the detector's tab-separated output back into per-image lists."""
    out: dict[str, list[tuple[Rect, float]]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise InputFormatError(f"detection line {lineno}: expected 6 fields, "
                                   f"got {len(parts)}")
        image_id, xs, ys, ws, hs, score = parts
        try:
            rect = Rect(int(xs), int(ys), int(ws), int(hs))
            out.setdefault(image_id, []).append((rect, float(score)))
        except ValueError as exc:
            raise InputFormatError(f"detection line {lineno}: {exc}") from exc
    return out
