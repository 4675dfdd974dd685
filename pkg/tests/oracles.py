"""Brute-force reference computations, kept independent of the library code."""

from fractions import Fraction
from itertools import permutations


def set_iou(a: set, b: set) -> Fraction:
    union = len(a | b)
    return Fraction(len(a & b), union) if union else Fraction(0)


def _injections(n_pred, n_gt):
    """Every partial one-to-one assignment of predictions to ground truths."""
    slots = list(range(n_gt)) + [None] * n_pred
    seen = set()
    for perm in permutations(slots, n_pred):
        if perm not in seen:
            seen.add(perm)
            yield perm


def oracle_ap(preds, gts, threshold) -> Fraction:
    """AP in percent by exhaustive matching.

    ``preds`` is a list of ``(score, pixel_set)``; ``gts`` a list of pixel
    sets. Among all valid assignments, the one whose per-prediction keys are
    lexicographically largest in rank order is the greedy matching.
    """
    t = Fraction(str(threshold))
    if not gts:
        return Fraction(100) if not preds else Fraction(0)
    ranked = sorted(range(len(preds)), key=lambda i: (-preds[i][0], -len(preds[i][1]), i))
    ious = [[set_iou(preds[i][1], g) for g in gts] for i in range(len(preds))]
    best_key, best = None, None
    for assign in _injections(len(preds), len(gts)):
        if any(g is not None and ious[i][g] < t for i, g in enumerate(assign)):
            continue
        key = tuple((1, ious[i][assign[i]], -assign[i]) if assign[i] is not None else (0, 0, 0)
                    for i in ranked)
        if best_key is None or key > best_key:
            best_key, best = key, assign
    tp = [best[i] is not None for i in ranked]
    precisions = []
    hits = 0
    for k, hit in enumerate(tp, start=1):
        hits += hit
        precisions.append(Fraction(hits, k))
    ap = Fraction(0)
    for k, hit in enumerate(tp):
        if hit:
            ap += Fraction(1, len(gts)) * max(precisions[k:])
    return 100 * ap
