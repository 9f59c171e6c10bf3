"""
Detection and tracking evaluation: average precision over IoU thresholds,
average tracklet time and CLEAR-style MOTA with identity switches.

Only confirmed track rows are evaluated.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from evtrack.detection.boxes import Detection, iou
from evtrack.exceptions import MetricsError
from evtrack.formats.tracks import GroundTruth
from evtrack.tracking.assignment import hungarian
from evtrack.tracking.kalman import TrackStatus
from evtrack.tracking.sort import TrackedBox

COCO_THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))
MOTA_IOU = 0.5
# Cost bonus for keeping last snapshot's pairing on otherwise equal IoU.
PERSIST_BONUS = 1e-6


def _gt_count(gt: GroundTruth) -> int:
    return sum(len(boxes) for boxes in gt.values())


def average_precision(dets: Mapping[int, Sequence[Detection]], gt: GroundTruth,
                      iou_thresh: float) -> float:
    """
    Area under the all-point interpolated precision-recall curve.

    Detections are ranked by descending score over all timestamps (ties keep
    input order) and greedily matched to the best unmatched GT box of their
    own timestamp.

    Raises:
        MetricsError: No ground-truth boxes
    """
    total = _gt_count(gt)
    if total == 0:
        raise MetricsError("average precision needs at least one ground-truth box")

    ranked = [d for t in sorted(dets) for d in dets[t]]
    ranked.sort(key=lambda d: -d.score)

    taken = {t: [False] * len(boxes) for t, boxes in gt.items()}
    tp = np.zeros(len(ranked))
    for k, d in enumerate(ranked):
        candidates = gt.get(d.t, [])
        best, best_iou = -1, iou_thresh
        for j, g in enumerate(candidates):
            if taken[d.t][j]:
                continue
            overlap = iou(d.box, g.box)
            if overlap >= best_iou and (best < 0 or overlap > best_iou):
                best, best_iou = j, overlap
        if best >= 0:
            taken[d.t][best] = True
            tp[k] = 1.0

    if not ranked:
        return 0.0
    tp_cum = np.cumsum(tp)
    recall = tp_cum / total
    precision = tp_cum / np.arange(1, len(ranked) + 1)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def mean_average_precision(dets: Mapping[int, Sequence[Detection]], gt: GroundTruth,
                           thresholds: Sequence[float] = COCO_THRESHOLDS
                           ) -> Tuple[Dict[float, float], float]:
    """AP at each threshold and their mean (.5:.05:.95 by default)."""
    per_threshold = {thr: average_precision(dets, gt, thr) for thr in thresholds}
    return per_threshold, float(np.mean(list(per_threshold.values())))


def _confirmed(tracks: Iterable[TrackedBox]) -> List[TrackedBox]:
    return [b for b in tracks if b.status is TrackStatus.CONFIRMED]


def avg_tracklet_time(tracks: Iterable[TrackedBox]) -> float:
    """
    Mean over track ids of (last t - first t), in seconds.

    Raises:
        MetricsError: No tracks
    """
    spans: Dict[int, List[int]] = {}
    for b in _confirmed(tracks):
        first_last = spans.setdefault(b.id, [b.t, b.t])
        first_last[0] = min(first_last[0], b.t)
        first_last[1] = max(first_last[1], b.t)
    if not spans:
        raise MetricsError("tracklet time needs at least one confirmed track")
    return float(np.mean([(last - first) / 1e6 for first, last in spans.values()]))


@dataclass
class MotaResult:
    mota: float
    id_switches: int
    fp: int
    fn: int
    matches: int
    gt_count: int


def mota(tracks: Iterable[TrackedBox], gt: GroundTruth, iou_match: float = MOTA_IOU) -> MotaResult:
    """
    CLEAR MOT accounting.

    Per timestamp, track boxes are matched to GT boxes by optimal assignment
    on 1 - IoU among pairs with IoU >= iou_match, preferring last match's
    pairing on ties. An identity switch is a GT agent matched to a different
    track id than at its previous match.

    Raises:
        MetricsError: Empty ground truth
    """
    total = _gt_count(gt)
    if total == 0:
        raise MetricsError("MOTA needs at least one ground-truth box")

    by_t: Dict[int, List[TrackedBox]] = defaultdict(list)
    for b in _confirmed(tracks):
        by_t[b.t].append(b)

    last_match: Dict[int, int] = {}
    fp = fn = switches = matched = 0
    for t in sorted(set(gt) | set(by_t)):
        truth = sorted(gt.get(t, []), key=lambda g: g.agent_id)
        hyps = sorted(by_t.get(t, []), key=lambda b: b.id)
        pairs = []
        if truth and hyps:
            # gated costs lie in [-PERSIST_BONUS, 1]; one blocked pair outweighs
            # every gated pair of the snapshot together
            blocked = float(min(len(truth), len(hyps)) + 1)
            cost = np.full((len(truth), len(hyps)), blocked)
            for i, g in enumerate(truth):
                for j, h in enumerate(hyps):
                    overlap = iou(g.box, h.box)
                    if overlap >= iou_match:
                        cost[i, j] = 1.0 - overlap
                        if last_match.get(g.agent_id) == h.id:
                            cost[i, j] -= PERSIST_BONUS
            pairs = [(i, j) for i, j in hungarian(cost) if cost[i, j] < blocked]

        for i, j in pairs:
            agent, track_id = truth[i].agent_id, hyps[j].id
            if agent in last_match and last_match[agent] != track_id:
                switches += 1
            last_match[agent] = track_id
        matched += len(pairs)
        fp += len(hyps) - len(pairs)
        fn += len(truth) - len(pairs)

    score = 1.0 - (fp + fn + switches) / total
    return MotaResult(score, switches, fp, fn, matched, total)


@dataclass
class EvalReport:
    """Everything eval reports."""
    avg_tracklet_s: float
    mota: float
    id_switches: int
    fp: int
    fn: int
    matches: int
    gt_count: int
    ap_per_threshold: Dict[float, float] = field(default_factory=dict)
    map_coco: Optional[float] = None

    def to_dict(self) -> Dict[str, object]:
        """JSON-ready dictionary."""
        return {
            'map_coco': self.map_coco,
            'ap_per_threshold': {f"{thr:.2f}": ap for thr, ap in self.ap_per_threshold.items()},
            'avg_tracklet_s': self.avg_tracklet_s,
            'mota': self.mota,
            'id_switches': self.id_switches,
            'fp': self.fp,
            'fn': self.fn,
            'matches': self.matches,
            'gt_count': self.gt_count,
        }

    def format_table(self) -> str:
        """Two-column table: mAP and tracklet time first, MOT counts after."""
        map_text = "-" if self.map_coco is None else f"{self.map_coco:.3f}"
        rows = [
            ("mAP_.5:.05:.95", map_text),
            ("Avg. tracklet time [s]", f"{self.avg_tracklet_s:.2f}"),
            ("MOTA", f"{self.mota:.3f}"),
            ("ID switches", str(self.id_switches)),
            ("FP", str(self.fp)),
            ("FN", str(self.fn)),
            ("Matches", str(self.matches)),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value:>8}" for name, value in rows)


def evaluate(tracks: Sequence[TrackedBox], gt: GroundTruth,
             detections: Optional[Mapping[int, Sequence[Detection]]] = None) -> EvalReport:
    """Compute every metric; AP only when detections are given."""
    try:
        tracklet = avg_tracklet_time(tracks)
    except MetricsError:
        logger.warning("no confirmed tracks; tracklet time reported as 0")
        tracklet = 0.0
    clear = mota(tracks, gt)

    report = EvalReport(
        avg_tracklet_s=tracklet,
        mota=clear.mota,
        id_switches=clear.id_switches,
        fp=clear.fp,
        fn=clear.fn,
        matches=clear.matches,
        gt_count=clear.gt_count,
    )
    if detections is not None:
        report.ap_per_threshold, report.map_coco = mean_average_precision(detections, gt)
    logger.info("MOTA {:.3f}, {} id switch(es), tracklet time {:.2f} s",
                report.mota, report.id_switches, report.avg_tracklet_s)
    return report
