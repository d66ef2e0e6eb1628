"""Dimension estimation and density/excision diagnostics.

Box counting comes in two flavours: isotropic cells of side r (Euclidean) and
anisotropic cells with side r on the first layer and r^2 on the second
(homogeneous).  Measures are approximated by fixed-depth covering sums over the
generated pieces; ratio diagnostics divide those sums by (2r)^s.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InputError
from .group import (
    GroupSpec,
    StrataProfile,
    beta_minus,
    beta_plus,
    bracket_polynomial,
)

__all__ = [
    "ScaleSeries",
    "DimensionEstimate",
    "ExcisionSpec",
    "box_count_euclidean",
    "box_count_homogeneous",
    "fit_dimension",
    "covering_measure",
    "excision_ratio",
    "density_ratio",
    "ball_region",
    "plane_offset",
    "excision_region",
    "halfspace_region",
    "everything",
    "nothing",
    "ComparisonReport",
    "dimension_comparison_report",
]


@dataclass(frozen=True)
class ScaleSeries:
    """(radius, value) pairs at strictly decreasing radii."""

    entries: tuple[tuple[float, float], ...]
    kind: str = "count"  # "count" or "ratio"

    def __post_init__(self):
        radii = [r for r, _ in self.entries]
        if any(b >= a for a, b in zip(radii, radii[1:])):
            raise InputError("radii must be strictly decreasing")
        if not all(np.isfinite(v) for _, v in self.entries):
            raise InputError("series values must be finite")


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    intercept: float
    residual: float  # max absolute log-log deviation
    r_range: tuple[float, float]


@dataclass(frozen=True)
class ExcisionSpec:
    """Neighbourhood width profile w(r): delta*r, M*r^2, or r^(1+eps)."""

    mode: str  # "linear", "quadratic", "power"
    param: float

    def __post_init__(self):
        if self.mode == "linear" and not self.param > 0:
            raise InputError("linear mode needs delta > 0")
        if self.mode == "quadratic" and not self.param > 1:
            raise InputError("quadratic mode needs M > 1")
        if self.mode == "power" and not 0 < self.param < 1:
            raise InputError("power mode needs 0 < eps < 1")
        if self.mode not in ("linear", "quadratic", "power"):
            raise InputError(f"unknown excision mode {self.mode!r}")

    def width(self, r: float) -> float:
        if self.mode == "linear":
            return self.param * r
        if self.mode == "quadratic":
            return self.param * r * r
        return r ** (1.0 + self.param)


def _occupied(cells: np.ndarray) -> int:
    # mixed-radix key per row; much faster than np.unique(axis=0)
    lo = cells.min(axis=0)
    span = cells.max(axis=0) - lo + 1
    key = np.zeros(len(cells), dtype=np.int64)
    for col in range(cells.shape[1]):
        key = key * span[col] + (cells[:, col] - lo[col])
    return len(np.unique(key))


def box_count_euclidean(points: np.ndarray, r: float, anchor: float = 0.0) -> int:
    """Occupied cells of the axis-aligned grid of side r anchored at the origin."""
    if not r > 0:
        raise InputError("r must be positive")
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise InputError("empty point cloud")
    return _occupied(np.floor((points - anchor) / r).astype(np.int64))


def box_count_homogeneous(
    points: np.ndarray, r: float, spec: GroupSpec, anchor: float = 0.0
) -> int:
    """Occupied anisotropic cells: side r on the m1 first-layer axes, r^2 on the rest."""
    if not r > 0:
        raise InputError("r must be positive")
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise InputError("empty point cloud")
    sides = np.concatenate([np.full(spec.m1, r), np.full(spec.m2, r * r)])
    return _occupied(np.floor((points - anchor) / sides).astype(np.int64))


def fit_dimension(series: ScaleSeries) -> DimensionEstimate:
    """Least-squares slope of log N against log(1/r)."""
    if series.kind != "count":
        raise InputError("fit_dimension expects a count series")
    if len(series.entries) < 3:
        raise InputError("need at least 3 scales to fit")
    r = np.array([e[0] for e in series.entries])
    n = np.array([e[1] for e in series.entries])
    if np.any(n <= 0):
        raise InputError("counts must be positive")
    x = np.log(1.0 / r)
    y = np.log(n)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return DimensionEstimate(
        slope=float(slope),
        intercept=float(intercept),
        residual=residual,
        r_range=(float(r.min()), float(r.max())),
    )


# ---------------------------------------------------------------------------
# covering sums over generated pieces

RegionMask = Callable[[np.ndarray], np.ndarray]


def everything() -> RegionMask:
    return lambda boxes: np.ones(len(boxes), dtype=bool)


def nothing() -> RegionMask:
    return lambda boxes: np.zeros(len(boxes), dtype=bool)


def _ball_mask(boxes: np.ndarray, p: np.ndarray, r: float) -> np.ndarray:
    closest = np.clip(p[None, :], boxes[:, :, 0], boxes[:, :, 1])
    return np.linalg.norm(closest - p[None, :], axis=1) <= r


def _corners(boxes: np.ndarray) -> np.ndarray:
    """(K, 2^n, n) array of box corners."""
    K, n, _ = boxes.shape
    idx = np.array(np.meshgrid(*([[0, 1]] * n), indexing="ij")).reshape(n, -1).T
    return boxes[np.arange(K)[:, None, None], np.arange(n)[None, None, :], idx[None, :, :]]


def ball_region(p, r: float) -> RegionMask:
    """Closed Euclidean ball; a box counts if it intersects the ball."""
    p = np.asarray(p, dtype=float)
    return lambda boxes: _ball_mask(boxes, p, r)


def plane_offset(spec: GroupSpec, p, q) -> np.ndarray:
    """|q2 - p2 - P(p1, q1)|: how far q misses the horizontal-plane equation.

    This upper-bounds the Euclidean distance to V(p) (equality when q1 = p1)
    and is the gauge the excision diagnostics use: it is the quantity the
    example constructions control directly.
    """
    p1, p2 = spec.split(np.asarray(p, dtype=float))
    q1, q2 = spec.split(np.asarray(q, dtype=float))
    return np.linalg.norm(q2 - p2 - bracket_polynomial(spec, p1, q1), axis=-1)


def excision_region(spec: GroupSpec, p, r: float, width: float) -> RegionMask:
    """B_E(p, r) minus the width-neighbourhood of V(p) in the plane-offset gauge.

    Outer approximation: a box counts if it meets the ball and some corner lies
    strictly beyond the neighbourhood (the offset is convex in q, so the box
    maximum sits at a corner).
    """
    p = np.asarray(p, dtype=float)

    def mask(boxes: np.ndarray) -> np.ndarray:
        hit = _ball_mask(boxes, p, r)
        if not np.any(hit):
            return hit
        corners = _corners(boxes[hit])
        dmax = plane_offset(spec, p, corners).max(axis=1)
        out = np.zeros(len(boxes), dtype=bool)
        out[np.flatnonzero(hit)] = dmax > width
        return out

    return mask


def halfspace_region(normal, offset: float) -> RegionMask:
    """{x : normal . x <= offset}; a box counts if its minimal value is <= offset."""
    normal = np.asarray(normal, dtype=float)

    def mask(boxes: np.ndarray) -> np.ndarray:
        lo = np.where(normal[None, :] > 0, boxes[:, :, 0], boxes[:, :, 1])
        return lo @ normal <= offset

    return mask


def covering_measure(obj, region: RegionMask, s: float, metric: str = "euclidean") -> float:
    """Sum of covering diameters^s over pieces whose closed box meets the region."""
    boxes = obj.boxes_ambient()
    if len(boxes) == 0:
        raise InputError("empty object")
    diams = obj.cover_diams(metric)
    mask = region(boxes)
    return float(np.sum(diams[mask] ** s))


def excision_ratio(
    obj, p, r: float, s: float, exc: ExcisionSpec, spec: GroupSpec
) -> float:
    """Mass in B_E(p,r) beyond the widened horizontal plane, over (2r)^s."""
    if not r > 0:
        raise InputError("r must be positive")
    p = np.asarray(p, dtype=float)
    region = excision_region(spec, p, r, exc.width(r))
    return covering_measure(obj, region, s, "euclidean") / (2.0 * r) ** s


def density_ratio(
    obj, p, r: float, s: float, metric: str = "euclidean", spec: GroupSpec | None = None
) -> float:
    """Mass of the object inside the metric ball of radius r, over (2r)^s."""
    if not r > 0:
        raise InputError("r must be positive")
    p = np.asarray(p, dtype=float)
    if metric == "euclidean":
        region = ball_region(p, r)
    elif metric == "homogeneous":
        if spec is None:
            raise InputError("homogeneous density needs the group spec")
        region = _homogeneous_ball_region(spec, p, r)
    else:
        raise InputError(f"unknown metric {metric!r}")
    return covering_measure(obj, region, s, metric) / (2.0 * r) ** s


def _homogeneous_ball_region(spec: GroupSpec, p: np.ndarray, r: float) -> RegionMask:
    """Outer test for box intersection with B_inf(p, r) via the plane sandwich."""
    p1, p2 = spec.split(p)

    def mask(boxes: np.ndarray) -> np.ndarray:
        # first-layer ball test
        lo1, hi1 = boxes[:, : spec.m1, 0], boxes[:, : spec.m1, 1]
        closest1 = np.clip(p1[None, :], lo1, hi1)
        horiz_ok = np.linalg.norm(closest1 - p1[None, :], axis=1) <= r
        # vertical: min over corners of |p2 - q2 + P(p1, q1)| (affine in q)
        corners = _corners(boxes)
        q1, q2 = corners[:, :, : spec.m1], corners[:, :, spec.m1 :]
        vert = np.linalg.norm(
            p2[None, None, :] - q2 + bracket_polynomial(spec, p1, q1), axis=-1
        ).min(axis=1)
        return horiz_ok & (vert <= (r / spec.c) ** 2)

    return mask


# ---------------------------------------------------------------------------
# dimension comparison report


@dataclass(frozen=True)
class ComparisonReport:
    dim_euclid: DimensionEstimate
    dim_homog: DimensionEstimate
    beta_lo: float
    beta_hi: float
    tolerance: float
    passed: bool
    series_euclid: ScaleSeries
    series_homog: ScaleSeries


def dimension_comparison_report(
    points: np.ndarray,
    spec: GroupSpec,
    scales: Sequence[float],
    tolerance: float = 0.3,
    min_count: int = 8,
) -> ComparisonReport:
    """Fit both box dimensions and check the beta sandwich at the given tolerance."""
    scales = sorted(set(float(r) for r in scales), reverse=True)
    if len(scales) < 3:
        raise InputError("need at least 3 scales")
    entries_e = tuple((r, float(box_count_euclidean(points, r))) for r in scales)
    entries_g = tuple((r, float(box_count_homogeneous(points, r, spec))) for r in scales)
    series_e = ScaleSeries(entries_e, "count")
    series_g = ScaleSeries(entries_g, "count")

    def fit(entries):
        kept = tuple(e for e in entries if e[1] >= min_count)
        if len(kept) < 3:
            kept = entries
        return fit_dimension(ScaleSeries(kept, "count"))

    est_e = fit(entries_e)
    est_g = fit(entries_g)
    profile = StrataProfile((spec.m1, spec.m2))
    d_e = float(np.clip(est_e.slope, 0.0, profile.n))
    blo = beta_minus(profile, d_e)
    bhi = beta_plus(profile, d_e)
    passed = blo - tolerance <= est_g.slope <= bhi + tolerance
    return ComparisonReport(
        dim_euclid=est_e,
        dim_homog=est_g,
        beta_lo=float(blo),
        beta_hi=float(bhi),
        tolerance=tolerance,
        passed=bool(passed),
        series_euclid=series_e,
        series_homog=series_g,
    )
