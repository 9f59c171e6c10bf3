"""
Optimal one-to-one assignment with a deterministic tie-break, and IoU-based
detection-to-track association.
"""

from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from evtrack.detection.boxes import BBox, iou

Pair = Tuple[int, int]

# Rounding slack, in units of machine epsilon per summed entry, under which
# two assignment totals count as equal.
TIE_ULPS = 8


def _optimum(cost: np.ndarray) -> float:
    if cost.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def hungarian(cost: Sequence[Sequence[float]]) -> List[Pair]:
    """
    Minimum-cost assignment of size min(n, m).

    Among optimal assignments the lexicographically smallest list of
    (row, col) pairs is returned, so equal-cost inputs always resolve the
    same way.

    Raises:
        ValueError: Non-finite entries or a non-2-D matrix
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError(f"cost must be a 2-D matrix, got shape {cost.shape}")
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix has non-finite entries")

    size = min(n, m)
    best = _optimum(cost)
    scale = max(1.0, float(np.abs(cost).max()))
    tolerance = TIE_ULPS * np.finfo(np.float64).eps * size * scale

    result: List[Pair] = []
    fixed = 0.0
    free = list(range(m))
    for r in range(n):
        needed = size - len(result)
        if needed == 0:
            break
        rest = np.arange(r + 1, n)
        for c in free:
            others = [col for col in free if col != c]
            if min(len(rest), len(others)) < needed - 1:
                continue
            total = fixed + cost[r, c] + _optimum(cost[np.ix_(rest, others)])
            if total <= best + tolerance:
                result.append((r, c))
                fixed += cost[r, c]
                free.remove(c)
                break
        # no column kept the optimum: row r stays unassigned
    return result


def iou_matrix(dets: Sequence[BBox], tracks: Sequence[BBox]) -> np.ndarray:
    """Pairwise IoU, rows are detections."""
    out = np.zeros((len(dets), len(tracks)), dtype=np.float64)
    for i, d in enumerate(dets):
        for j, trk in enumerate(tracks):
            out[i, j] = iou(d, trk)
    return out


def associate(dets: Sequence[BBox], tracks: Sequence[BBox], iou_threshold: float
              ) -> Tuple[List[Pair], List[int], List[int]]:
    """
    Match detections to predicted track boxes.

    Solves hungarian on 1 - IoU, then demotes pairs below iou_threshold.

    Returns:
        (matches as (det, track) pairs, unmatched detections, unmatched tracks)
    """
    if not tracks or not dets:
        return [], list(range(len(dets))), list(range(len(tracks)))

    overlap = iou_matrix(dets, tracks)
    matches: List[Pair] = []
    for d, t in hungarian(1.0 - overlap):
        if overlap[d, t] >= iou_threshold:
            matches.append((d, t))

    matched_dets = {d for d, _ in matches}
    matched_tracks = {t for _, t in matches}
    unmatched_dets = [d for d in range(len(dets)) if d not in matched_dets]
    unmatched_tracks = [t for t in range(len(tracks)) if t not in matched_tracks]
    return matches, unmatched_dets, unmatched_tracks
