"""
Broken-line analysis
Splits samples of the cut line wrapped into the unit cell into continuous runs and
groups the runs lying on the same transverse fibre s_theta = const (mod 1)
"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.spatial import cKDTree

from media import CutVector, s_theta, sample_broken_line, wrap_unit

logger = logging.getLogger(__name__)


@dataclass
class LineRun:
    """Samples between two consecutive wrap events"""
    offset: float  # s_theta of the run, mod 1
    start_x: float  # line parameter of the first sample
    end_x: float  # line parameter of the last sample
    indices: np.ndarray  # sample indices in the run

    @property
    def n_points(self) -> int:
        return int(self.indices.size)


@dataclass
class SegmentGroup:
    """All runs on one wrapped segment of the torus"""
    offset: float
    runs: List[LineRun]

    @property
    def n_points(self) -> int:
        return sum(run.n_points for run in self.runs)


def split_runs(x: np.ndarray, points: np.ndarray, theta: CutVector) -> List[LineRun]:
    """
    Split samples into continuous runs.

    Both wrapped coordinates grow with x, so a run ends wherever one of them decreases.
    """
    if len(points) == 0:
        return []
    wrapped = np.any(np.diff(points, axis=0) < 0, axis=1)
    cuts = np.flatnonzero(wrapped) + 1
    runs = []
    for idx in np.split(np.arange(len(points)), cuts):
        offset = float(wrap_unit(s_theta(points[idx[0]], theta)))
        runs.append(LineRun(offset=offset, start_x=float(x[idx[0]]), end_x=float(x[idx[-1]]), indices=idx))
    return runs


def detect_segments(x: np.ndarray, points: np.ndarray, theta: CutVector,
                    tol: float = 1e-8) -> Tuple[List[SegmentGroup], List[LineRun]]:
    """
    Group continuous runs by their transverse offset.

    Args:
        tol: offsets closer than tol (on the circle) belong to the same segment

    Returns:
        (groups sorted by offset, runs in sampling order)
    """
    runs = split_runs(x, points, theta)
    segments: List[SegmentGroup] = []
    for run in sorted(runs, key=lambda r: r.offset):
        if segments and run.offset - segments[-1].runs[-1].offset <= tol:
            segments[-1].runs.append(run)
        else:
            segments.append(SegmentGroup(offset=run.offset, runs=[run]))

    # offsets near 1 and near 0 are the same fibre
    if len(segments) > 1 and segments[0].offset + 1.0 - segments[-1].runs[-1].offset <= tol:
        segments[0].runs.extend(segments.pop().runs)
    for group in segments:
        group.runs.sort(key=lambda r: r.start_x)
    logger.info(f"Broken line: {len(runs)} runs on {len(segments)} distinct segments")
    return segments, runs


def count_distinct_segments(theta: CutVector, M: float, step: float, tol: float = 1e-8) -> int:
    x, points = sample_broken_line(theta, M, step)
    segments, _ = detect_segments(x, points, theta, tol)
    return len(segments)


def min_pairwise_distance(points: np.ndarray) -> float:
    """Smallest distance between two distinct samples"""
    if len(points) < 2:
        return float('inf')
    distances, _ = cKDTree(points).query(points, k=2)
    return float(distances[:, 1].min())
