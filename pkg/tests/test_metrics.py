"""
Tests for detection and tracking metrics.
"""

import numpy as np
import pytest

from evtrack.detection import BBox, Detection
from evtrack.exceptions import MetricsError
from evtrack.formats.tracks import GroundTruthBox
from evtrack.metrics import (
    COCO_THRESHOLDS,
    EvalReport,
    average_precision,
    avg_tracklet_time,
    evaluate,
    mean_average_precision,
    mota,
)
from evtrack.tracking.kalman import TrackStatus
from evtrack.tracking.sort import TrackedBox

LEFT = BBox(0, 0, 10, 10)
RIGHT = BBox(50, 0, 60, 10)


def confirmed(track_id, box, t):
    return TrackedBox(track_id, box, t, TrackStatus.CONFIRMED)


def two_agents(times):
    return {t: [GroundTruthBox(1, LEFT), GroundTruthBox(2, RIGHT)] for t in times}


class TestAveragePrecision:
    """Test AP with all-point interpolation."""

    def test_thresholds(self):
        assert COCO_THRESHOLDS == (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)

    def test_perfect(self):
        gt = two_agents([0, 10])
        dets = {t: [Detection(g.box, 0.9, t) for g in boxes] for t, boxes in gt.items()}
        per_threshold, mean = mean_average_precision(dets, gt)
        assert mean == pytest.approx(1.0)
        assert all(ap == pytest.approx(1.0) for ap in per_threshold.values())

    def test_no_detections(self):
        assert average_precision({}, two_agents([0]), 0.5) == 0.0

    def test_all_misses(self):
        dets = {0: [Detection(BBox(100, 100, 110, 110), 0.9, 0)]}
        assert average_precision(dets, two_agents([0]), 0.5) == 0.0

    def test_half_recall(self):
        """One of two boxes found with full precision."""
        dets = {0: [Detection(LEFT, 0.9, 0)]}
        assert average_precision(dets, two_agents([0]), 0.5) == pytest.approx(0.5)

    def test_false_positive_ranked_first(self):
        gt = {0: [GroundTruthBox(1, LEFT)]}
        dets = {0: [Detection(RIGHT, 0.9, 0), Detection(LEFT, 0.8, 0)]}
        assert average_precision(dets, gt, 0.5) == pytest.approx(0.5)

    def test_false_positive_ranked_last(self):
        gt = {0: [GroundTruthBox(1, LEFT)]}
        dets = {0: [Detection(RIGHT, 0.7, 0), Detection(LEFT, 0.8, 0)]}
        assert average_precision(dets, gt, 0.5) == pytest.approx(1.0)

    def test_detection_at_other_time_misses(self):
        gt = {0: [GroundTruthBox(1, LEFT)], 10: []}
        dets = {10: [Detection(LEFT, 0.9, 10)]}
        assert average_precision(dets, gt, 0.5) == 0.0

    def test_duplicate_is_false_positive(self):
        gt = {0: [GroundTruthBox(1, LEFT)]}
        dets = {0: [Detection(LEFT, 0.9, 0), Detection(LEFT, 0.8, 0)]}
        assert average_precision(dets, gt, 0.5) == pytest.approx(1.0)
        per_threshold, _ = mean_average_precision(dets, gt, thresholds=(0.5,))
        assert per_threshold == {0.5: pytest.approx(1.0)}

    def test_iou_threshold_sweep(self):
        """A box at IoU exactly 0.6 counts at 0.5, 0.55 and 0.6 only."""
        gt = {0: [GroundTruthBox(1, LEFT)]}
        dets = {0: [Detection(BBox(0, 0, 10, 6), 0.9, 0)]}
        per_threshold, mean = mean_average_precision(dets, gt)
        assert [per_threshold[thr] for thr in COCO_THRESHOLDS] == [1.0, 1.0, 1.0] + [0.0] * 7
        assert mean == pytest.approx(0.3)

    def test_empty_ground_truth(self):
        with pytest.raises(MetricsError):
            average_precision({}, {0: []}, 0.5)


class TestTrackletTime:
    """Test average tracklet time."""

    def test_mean_span(self):
        tracks = [
            confirmed(1, LEFT, 0), confirmed(1, LEFT, 1_000_000), confirmed(1, LEFT, 2_000_000),
            confirmed(2, RIGHT, 1_000_000), confirmed(2, RIGHT, 2_000_000),
        ]
        assert avg_tracklet_time(tracks) == pytest.approx(1.5)

    def test_tentative_ignored(self):
        tracks = [confirmed(1, LEFT, 0), TrackedBox(2, RIGHT, 5_000_000, TrackStatus.TENTATIVE)]
        assert avg_tracklet_time(tracks) == 0.0
        with pytest.raises(MetricsError):
            avg_tracklet_time(tracks[1:])

    def test_no_tracks(self):
        with pytest.raises(MetricsError):
            avg_tracklet_time([])


class TestMota:
    """Test CLEAR MOT accounting."""

    def test_perfect(self):
        gt = two_agents([0, 10, 20])
        tracks = [confirmed(7 + g.agent_id, g.box, t) for t, boxes in gt.items() for g in boxes]
        result = mota(tracks, gt)
        assert result.mota == 1.0
        assert (result.id_switches, result.fp, result.fn) == (0, 0, 0)
        assert result.matches == result.gt_count == 6

    def test_swap_counts_two_switches(self):
        """Tracks 10 and 20 trade agents at t=10 and keep the new pairing."""
        gt = two_agents([0, 10, 20])
        tracks = [
            confirmed(10, LEFT, 0), confirmed(20, RIGHT, 0),
            confirmed(10, RIGHT, 10), confirmed(20, LEFT, 10),
            confirmed(10, RIGHT, 20), confirmed(20, LEFT, 20),
        ]
        result = mota(tracks, gt)
        assert result.id_switches == 2
        assert result.mota == pytest.approx(1.0 - 2 / 6)

    def test_false_positives_and_misses(self):
        gt = two_agents([0])
        tracks = [confirmed(1, LEFT, 0), confirmed(2, BBox(100, 100, 110, 110), 0),
                  confirmed(3, LEFT, 5)]
        result = mota(tracks, gt)
        assert (result.fp, result.fn, result.matches) == (2, 1, 1)
        assert result.mota == pytest.approx(1.0 - 3 / 2)

    def test_low_overlap_not_matched(self):
        """IoU below 0.5 is a miss plus a false positive."""
        gt = {0: [GroundTruthBox(1, LEFT)]}
        result = mota([confirmed(1, BBox(5, 0, 15, 10), 0)], gt)
        assert (result.fp, result.fn, result.matches) == (1, 1, 0)

    def test_reacquired_agent_is_a_switch(self):
        """A gap in matching keeps the last pairing; a new id after it counts."""
        gt = {0: [GroundTruthBox(1, LEFT)], 10: [GroundTruthBox(1, LEFT)], 20: [GroundTruthBox(1, LEFT)]}
        tracks = [confirmed(1, LEFT, 0), confirmed(2, LEFT, 20)]
        result = mota(tracks, gt)
        assert (result.id_switches, result.fn) == (1, 1)

    def test_missed_agent_keeps_tied_pairing(self):
        """An unmatched agent elsewhere does not break the tie toward the previous id."""
        gt = {0: [GroundTruthBox(1, LEFT)], 1: [GroundTruthBox(1, LEFT), GroundTruthBox(2, RIGHT)]}
        tracks = [confirmed(6, LEFT, 0), confirmed(5, LEFT, 1), confirmed(6, LEFT, 1)]
        result = mota(tracks, gt)
        assert result.id_switches == 0
        assert (result.fp, result.fn, result.matches) == (1, 1, 2)
        assert result.mota == pytest.approx(1.0 - 2 / 3)

    def test_most_pairs_matched(self):
        """Two gated pairs win over one better pair."""
        a, b = BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)
        x, y = BBox(0, 0, 10, 10), BBox(-5, 0, 5, 10)
        gt = {0: [GroundTruthBox(1, a), GroundTruthBox(2, b)]}
        result = mota([confirmed(1, x, 0), confirmed(2, y, 0)], gt, iou_match=0.3)
        assert (result.matches, result.fp, result.fn) == (2, 0, 0)

    def test_tentative_rows_ignored(self):
        gt = {0: [GroundTruthBox(1, LEFT)]}
        result = mota([TrackedBox(1, LEFT, 0, TrackStatus.TENTATIVE)], gt)
        assert (result.fn, result.fp, result.mota) == (1, 0, 0.0)

    def test_empty_ground_truth(self):
        with pytest.raises(MetricsError):
            mota([], {})


def random_scene(seed, times=20):
    """Jittered tracks and scored detections around three agents; ids change every 7 steps."""
    rng = np.random.default_rng(seed)
    gt, tracks, dets = {}, [], {}
    for t in range(times):
        gt[t], dets[t] = [], []
        for agent in (1, 2, 3):
            x, y = rng.uniform(0, 100, 2)
            box = BBox(x, y, x + 20, y + 20)
            gt[t].append(GroundTruthBox(agent, box))
            if rng.random() < 0.9:
                jx, jy = rng.normal(scale=3, size=2)
                tracks.append(confirmed(agent + 10 * (t // 7), box.shifted(jx, jy), t))
            jx, jy = rng.normal(scale=3, size=2)
            dets[t].append(Detection(box.shifted(jx, jy), float(rng.random()), t))
        if rng.random() < 0.3:
            x, y = rng.uniform(0, 100, 2)
            dets[t].append(Detection(BBox(x, y, x + 20, y + 20), float(rng.random()), t))
            tracks.append(confirmed(99, BBox(x, y, x + 20, y + 20), t))
    return gt, tracks, dets


def shuffled(rng, items):
    return [items[i] for i in rng.permutation(len(items))]


class TestInputOrder:
    """Metrics do not depend on the order of input rows."""

    def test_shuffled_rows(self):
        gt, tracks, dets = random_scene(12)
        expected_mota = mota(tracks, gt)
        expected_ap, expected_map = mean_average_precision(dets, gt)
        rng = np.random.default_rng(13)
        for _ in range(10):
            gt_s = {t: shuffled(rng, gt[t]) for t in shuffled(rng, list(gt))}
            dets_s = {t: shuffled(rng, dets[t]) for t in shuffled(rng, list(dets))}
            assert mota(shuffled(rng, tracks), gt_s) == expected_mota
            per_threshold, mean = mean_average_precision(dets_s, gt_s)
            assert per_threshold == pytest.approx(expected_ap)
            assert mean == pytest.approx(expected_map)


class TestReport:
    """Test the combined evaluation report."""

    def test_evaluate(self):
        gt = two_agents([0, 1_000_000])
        tracks = [confirmed(g.agent_id, g.box, t) for t, boxes in gt.items() for g in boxes]
        dets = {t: [Detection(g.box, 1.0, t) for g in boxes] for t, boxes in gt.items()}
        report = evaluate(tracks, gt, dets)
        assert report.mota == 1.0
        assert report.avg_tracklet_s == pytest.approx(1.0)
        assert report.map_coco == pytest.approx(1.0)

    def test_evaluate_without_tracks(self):
        report = evaluate([], two_agents([0]))
        assert report.avg_tracklet_s == 0.0
        assert report.mota == 0.0
        assert report.map_coco is None

    def test_to_dict(self):
        report = EvalReport(2.5, 0.9, 1, 2, 3, 40, 45, {0.5: 0.8}, 0.8)
        data = report.to_dict()
        assert data['ap_per_threshold'] == {"0.50": 0.8}
        assert data['id_switches'] == 1
        assert list(data)[:2] == ['map_coco', 'ap_per_threshold']

    def test_format_table(self):
        table = EvalReport(2.5, 0.9, 1, 2, 3, 40, 45).format_table().splitlines()
        assert table[0].startswith("mAP_.5:.05:.95")
        assert table[0].endswith("-")
        assert table[1].split()[-1] == "2.50"
        assert table[2].split() == ["MOTA", "0.900"]
        assert len(table) == 7
