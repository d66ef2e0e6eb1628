"""Deterministic reference point clouds in the first Heisenberg group.

Fitted box dimensions on these are known in closed form, which makes them the
calibration targets for the comparison report: horizontal segment (1, 1),
vertical segment (1, 2), unit square inside the horizontal plane of 0 (2, 2).
"""

from __future__ import annotations

import numpy as np

from .errors import InputError

__all__ = ["horizontal_segment", "vertical_segment", "unit_square", "fixture_cloud"]


def horizontal_segment(count: int = 65537) -> tuple[np.ndarray, np.ndarray]:
    """{(u, 0, 0) : u in [0, 1)} sampled on a regular grid."""
    u = np.arange(count) / count
    pts = np.zeros((count, 3))
    pts[:, 0] = u
    return pts, np.full(count, 1.0 / count)


def vertical_segment(count: int = 65537) -> tuple[np.ndarray, np.ndarray]:
    """{(0, 0, t) : t in [0, 1)} sampled on a regular grid."""
    t = np.arange(count) / count
    pts = np.zeros((count, 3))
    pts[:, 2] = t
    return pts, np.full(count, 1.0 / count)


def unit_square(side: int = 513) -> tuple[np.ndarray, np.ndarray]:
    """{(x, y, 0) : x, y in [0, 1)}, the horizontal plane through 0, on a grid."""
    u = np.arange(side) / side
    xx, yy = np.meshgrid(u, u, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel(), np.zeros(side * side)], axis=1)
    return pts, np.full(side * side, 1.0 / (side * side))


def fixture_cloud(name: str) -> tuple[np.ndarray, np.ndarray]:
    builders = {
        "horizontal-segment": horizontal_segment,
        "vertical-segment": vertical_segment,
        "unit-square": unit_square,
    }
    try:
        return builders[name]()
    except KeyError:
        raise InputError(f"unknown fixture {name!r}; choose from {sorted(builders)}")
