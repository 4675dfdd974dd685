"""Scoring: IoU, multi-threshold average precision and the oracle protocols.

Predictions are :class:`~dcmeseg.codec.Detection` objects. Matching is
greedy in score order: each prediction takes the unmatched ground-truth
instance of the same class with the highest IoU, if that IoU reaches the
threshold. AP is the area under the all-points interpolated PR curve and is
reported in percent. Matches from several images are pooled before the
curve is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .codec import Detection, cm_pixel, instance_centers
from .core import (BACKGROUND, ClassGrid, Dims, InstanceLabelMap,
                   ValidationError)
from .grid import class_of_instance

DEFAULT_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
DETECTION_THRESHOLDS = (25, 50, 75)


@dataclass(frozen=True)
class ApThresholds:
    values: tuple[float, ...] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValidationError("at least one IoU threshold is required")
        if any(not 0 < v <= 1 for v in vals):
            raise ValidationError(f"IoU thresholds must lie in (0, 1], got {vals}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError(f"IoU thresholds must be strictly increasing, got {vals}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def parse(cls, text: str) -> "ApThresholds":
        """``"0.5:0.95:0.05"`` (inclusive range) or ``"0.5,0.75"``."""
        text = text.strip()
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            n = int(round((stop - start) / step)) + 1
            return cls(tuple(round(start + step * i, 10) for i in range(n)))
        return cls(tuple(float(t) for t in text.split(",") if t.strip()))


class ClassScore(NamedTuple):
    ap: float
    ap50: float


@dataclass
class EvalReport:
    per_class: dict[int, ClassScore]
    mean_ap: float
    mean_ap50: float
    counts: dict[int, int] = field(default_factory=dict)


class ClassAccuracy(NamedTuple):
    instances: int
    correct: int
    accuracy: float


@dataclass
class AccuracyReport:
    per_class: dict[int, ClassAccuracy]
    total_instances: int
    total_correct: int
    total_accuracy: float


def iou(a, b) -> float:
    """Intersection over union of two boolean masks (0 when both are empty)."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union


def _iou_matrix(masks: Sequence[np.ndarray], gt_labels: np.ndarray, gt_ids: Sequence[int]) -> np.ndarray:
    """IoU of each mask against each ground-truth instance id."""
    out = np.zeros((len(masks), len(gt_ids)))
    if not len(masks) or not len(gt_ids):
        return out
    n = int(gt_labels.max()) + 1
    gt_area = np.bincount(gt_labels.ravel(), minlength=n)
    ids = np.asarray(gt_ids)
    for i, m in enumerate(masks):
        inter = np.bincount(gt_labels[m], minlength=n)[ids]
        union = int(m.sum()) + gt_area[ids] - inter
        out[i] = inter / np.maximum(union, 1)
    return out


def _rank(scores: Sequence[float], areas: Sequence[int]) -> list[int]:
    # descending score, then descending area, then insertion order
    return sorted(range(len(scores)), key=lambda i: (-scores[i], -areas[i], i))


def greedy_match(ious: np.ndarray, order: Sequence[int], threshold: float) -> list[int]:
    """Ground-truth column matched by each row of ``ious`` (-1 when unmatched).

    Rows are visited in ``order``; IoU ties go to the lowest column.
    """
    matched = [-1] * ious.shape[0]
    free = np.ones(ious.shape[1], dtype=bool)
    for i in order:
        if not free.any():
            break
        cand = np.where(free, ious[i], -1.0)
        j = int(np.argmax(cand))
        if cand[j] >= threshold:
            matched[i] = j
            free[j] = False
    return matched


def ap_from_ranked(tp: Sequence[bool], n_gt: int) -> float:
    """All-points interpolated AP in percent for a ranked TP/FP sequence."""
    tp = np.asarray(tp, dtype=bool)
    if n_gt == 0:
        return 100.0 if tp.size == 0 else 0.0
    if tp.size == 0:
        return 0.0
    ctp = np.cumsum(tp)
    precision = ctp / np.arange(1, tp.size + 1)
    recall = ctp / n_gt
    mrec = np.concatenate([[0.0], recall])
    mpre = np.concatenate([precision[:1], precision])
    # make precision non-increasing from high recall to low
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(100.0 * np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def average_precision(predictions: Sequence[Detection], gts: Sequence[np.ndarray], threshold: float) -> float:
    """AP (percent) of single-class predictions against ground-truth masks."""
    gts = [np.asarray(g, dtype=bool) for g in gts]
    if not gts:
        return 100.0 if not predictions else 0.0
    ious = np.array([[iou(p.mask, g) for g in gts] for p in predictions]).reshape(len(predictions), len(gts))
    order = _rank([p.score for p in predictions], [p.area for p in predictions])
    matched = greedy_match(ious, order, threshold)
    return ap_from_ranked([matched[i] >= 0 for i in order], len(gts))


class _ImageMatches(NamedTuple):
    scores: list[float]
    areas: list[int]
    tp: np.ndarray  # (n_pred, n_thresholds)
    n_gt: int


def _match_class(preds: list[Detection], gt: InstanceLabelMap, gt_ids: list[int],
                 thresholds: Sequence[float]) -> _ImageMatches:
    ious = _iou_matrix([p.mask for p in preds], gt.labels, gt_ids)
    scores = [p.score for p in preds]
    areas = [p.area for p in preds]
    order = _rank(scores, areas)
    tp = np.zeros((len(preds), len(thresholds)), dtype=bool)
    for k, t in enumerate(thresholds):
        matched = greedy_match(ious, order, t)
        tp[:, k] = [m >= 0 for m in matched]
    return _ImageMatches(scores, areas, tp, len(gt_ids))


def _check_dims(dets: Sequence[Detection], dims: Dims):
    for d in dets:
        if d.mask.shape != tuple(dims):
            raise ValidationError(f"detection mask shape {d.mask.shape} does not match ground truth {tuple(dims)}")


def evaluate_many(pairs: Iterable[tuple[Sequence[Detection], InstanceLabelMap]],
                  thresholds: ApThresholds = ApThresholds()) -> EvalReport:
    """Pooled per-class AP over several ``(predictions, ground truth)`` images.

    Background-class predictions are ignored. Means are unweighted over the
    classes that have at least one ground-truth instance.
    """
    ts = thresholds.values
    # AP50 is always reported, even when 0.5 is not among the AP thresholds
    cols = ts if 0.5 in ts else ts + (0.5,)
    pooled: dict[int, list[_ImageMatches]] = {}
    counts: dict[int, int] = {}
    for preds, gt in pairs:
        _check_dims(preds, gt.dims)
        by_class: dict[int, list[Detection]] = {}
        for p in preds:
            if p.class_id != BACKGROUND:
                by_class.setdefault(p.class_id, []).append(p)
        gt_by_class: dict[int, list[int]] = {}
        for i, c in gt.classes.items():
            gt_by_class.setdefault(c, []).append(i)
        for c in set(by_class) | set(gt_by_class):
            ids = gt_by_class.get(c, [])
            counts[c] = counts.get(c, 0) + len(ids)
            pooled.setdefault(c, []).append(_match_class(by_class.get(c, []), gt, ids, cols))

    per_class = {}
    for c in sorted(pooled):
        scores, areas, tps = [], [], []
        n_gt = 0
        for m in pooled[c]:
            scores += m.scores
            areas += m.areas
            tps.append(m.tp)
            n_gt += m.n_gt
        tp = np.concatenate(tps)
        order = _rank(scores, areas)
        aps = [ap_from_ranked(tp[order, k], n_gt) for k in range(len(ts))]
        ap50 = ap_from_ranked(tp[order, cols.index(0.5)], n_gt)
        per_class[c] = ClassScore(float(np.mean(aps)), ap50)

    scored = [c for c in per_class if counts.get(c, 0) > 0]
    mean_ap = float(np.mean([per_class[c].ap for c in scored])) if scored else 0.0
    mean_ap50 = float(np.mean([per_class[c].ap50 for c in scored])) if scored else 0.0
    return EvalReport(per_class, mean_ap, mean_ap50, {c: counts.get(c, 0) for c in per_class})


def evaluate(predictions: Sequence[Detection], gt: InstanceLabelMap,
             thresholds: ApThresholds = ApThresholds()) -> EvalReport:
    return evaluate_many([(predictions, gt)], thresholds)


def gt_detections(gt: InstanceLabelMap, classes: dict[int, int] | None = None) -> list[Detection]:
    """Ground-truth instances as score-1 detections, in instance id order."""
    centers = instance_centers(gt)
    classes = gt.classes if classes is None else classes
    return [Detection(gt.mask(i), centers[i], 1.0, classes.get(i, BACKGROUND)) for i in gt.instance_ids]


def detection_accuracy(predictions: Sequence[Detection], gt: InstanceLabelMap,
                       threshold: float) -> tuple[int, float]:
    """Class-agnostic count and percentage of ground-truth instances detected.

    ``threshold`` is an IoU percentage such as 25, 50 or 75. Pairs are
    certified greedily by descending IoU; a prediction certifies at most one
    instance.
    """
    _check_dims(predictions, gt.dims)
    ids = gt.instance_ids
    if not ids:
        return 0, 0.0
    ious = _iou_matrix([p.mask for p in predictions], gt.labels, ids)
    t = threshold / 100.0
    pi, gi = np.nonzero(ious >= t)
    order = np.lexsort((gi, pi, -ious[pi, gi]))
    used_p, used_g = set(), set()
    for k in order:
        p, g = int(pi[k]), int(gi[k])
        if p in used_p or g in used_g:
            continue
        used_p.add(p)
        used_g.add(g)
    return len(used_g), 100.0 * len(used_g) / len(ids)


def instance_classes_from_grid(gt: InstanceLabelMap, grid: ClassGrid) -> dict[int, int]:
    """Grid label at the rounded center of mass of every instance."""
    if not grid.fits(gt.dims):
        raise ValidationError(f"class grid {tuple(grid.block_dims)} does not cover a {tuple(gt.dims)} image "
                              f"at grid size {grid.grid.grid_size}")
    return {i: class_of_instance(cm_pixel(cm, gt.dims), grid, gt.dims)
            for i, cm in instance_centers(gt).items()}


def classification_accuracy(gt: InstanceLabelMap, grid: ClassGrid) -> AccuracyReport:
    predicted = instance_classes_from_grid(gt, grid)
    inst: dict[int, int] = {}
    ok: dict[int, int] = {}
    for i, c in gt.classes.items():
        inst[c] = inst.get(c, 0) + 1
        ok[c] = ok.get(c, 0) + int(predicted[i] == c)
    return _accuracy_report(inst, ok)


def _accuracy_report(inst: dict[int, int], ok: dict[int, int]) -> AccuracyReport:
    per_class = {c: ClassAccuracy(inst[c], ok.get(c, 0), 100.0 * ok.get(c, 0) / inst[c])
                 for c in sorted(inst)}
    total = sum(inst.values())
    correct = sum(ok.values())
    return AccuracyReport(per_class, total, correct, 100.0 * correct / total if total else 0.0)


def merge_accuracy(reports: Iterable[AccuracyReport]) -> AccuracyReport:
    inst: dict[int, int] = {}
    ok: dict[int, int] = {}
    for r in reports:
        for c, a in r.per_class.items():
            inst[c] = inst.get(c, 0) + a.instances
            ok[c] = ok.get(c, 0) + a.correct
    return _accuracy_report(inst, ok)


def instance_oracle_predictions(gt: InstanceLabelMap, grid: ClassGrid) -> list[Detection]:
    return gt_detections(gt, instance_classes_from_grid(gt, grid))


def instance_oracle_eval(gt: InstanceLabelMap, grid: ClassGrid,
                         thresholds: ApThresholds = ApThresholds()) -> EvalReport:
    """Perfect masks, classes read from the grid at each center of mass."""
    return evaluate(instance_oracle_predictions(gt, grid), gt, thresholds)


def apply_class_oracle(predictions: Sequence[Detection], gt: InstanceLabelMap) -> list[Detection]:
    """Relabel each prediction with the class of its best-overlapping instance.

    Predictions that overlap no instance are dropped.
    """
    _check_dims(predictions, gt.dims)
    ids = gt.instance_ids
    ious = _iou_matrix([p.mask for p in predictions], gt.labels, ids)
    out = []
    for p, row in zip(predictions, ious):
        if not len(ids) or row.max() <= 0:
            continue
        best = ids[int(np.argmax(row))]
        out.append(Detection(p.mask, p.center, p.score, gt.classes[best]))
    return out


def class_oracle_eval(predictions: Sequence[Detection], gt: InstanceLabelMap,
                      thresholds: ApThresholds = ApThresholds()) -> EvalReport:
    return evaluate(apply_class_oracle(predictions, gt), gt, thresholds)


def halve_and_restore(labels: np.ndarray) -> np.ndarray:
    """Nearest-neighbor downsample by two then pixel-replicating upsample.

    Odd dims are first padded by repeating the last row/column; the result
    is cropped back to the input shape.
    """
    rows, cols = labels.shape
    padded = np.pad(labels, ((0, rows % 2), (0, cols % 2)), mode="edge")
    small = padded[::2, ::2]
    big = np.repeat(np.repeat(small, 2, axis=0), 2, axis=1)
    return big[:rows, :cols]


def halfres_roundtrip_predictions(gt: InstanceLabelMap) -> list[Detection]:
    restored = halve_and_restore(gt.labels)
    present = set(np.unique(restored).tolist()) - {BACKGROUND}
    kept = {i: c for i, c in gt.classes.items() if i in present}
    return gt_detections(InstanceLabelMap(restored, kept))


def halfres_roundtrip_eval(gt: InstanceLabelMap,
                           thresholds: ApThresholds = ApThresholds()) -> EvalReport:
    """Score the ground truth after a half-resolution round trip against itself."""
    return evaluate(halfres_roundtrip_predictions(gt), gt, thresholds)
