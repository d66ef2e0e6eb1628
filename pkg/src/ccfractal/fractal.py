"""Extremal set generators.

Two families:

* checkerboard parallelepiped constructions inside an embedded coordinate
  plane (the ``(x, t)``-slabs), driven by a subdivision schedule;
* the controlled Moran sub-construction built from the contraction family
  ``F_{a1 a2}(p) = [a1, a2] . dilate(1/2, [-a1, -a2] . p)``, enumerated as
  cylinder bounding boxes at finite depth.

Both produce immutable containers that the diagnostics in :mod:`ccfractal.dimlab`
consume: ambient bounding boxes, covering diameters, and weighted samples.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, ConstructionError, InputError
from .group import GroupSpec, dilate, multiply

__all__ = [
    "Slab",
    "Example1Schedule",
    "Example2Schedule",
    "CustomSchedule",
    "subdivide",
    "schedule_params",
    "build_construction",
    "SlabConstruction",
    "moran_branch_sequence",
    "ifs_map_apply",
    "map_symbols",
    "attractor_box",
    "enumerate_cylinders",
    "MoranSet",
    "vertical_factor_set",
    "piece_budget",
]

DEFAULT_BUDGET = 1_000_000


def piece_budget() -> int:
    """Piece/address budget; CC_FRACTAL_BUDGET overrides the default 10^6."""
    raw = os.environ.get("CC_FRACTAL_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


# ---------------------------------------------------------------------------
# slab constructions


@dataclass(frozen=True)
class Slab:
    """An axis-aligned parallelepiped: m equal horizontal sides and one vertical."""

    x_intervals: tuple[tuple[float, float], ...]
    t_interval: tuple[float, float]
    label: str  # "c", "d", or "root"
    level: int = 0

    @property
    def m(self) -> int:
        return len(self.x_intervals)

    @property
    def h(self) -> float:
        return self.x_intervals[0][1] - self.x_intervals[0][0]

    @property
    def v(self) -> float:
        return self.t_interval[1] - self.t_interval[0]

    def diam_euclidean(self) -> float:
        return float(np.sqrt(self.m * self.h**2 + self.v**2))

    def diam_koranyi(self) -> float:
        return float((self.m**2 * self.h**4 + self.v**2) ** 0.25)


def subdivide(slab: Slab, N: int, lam: float) -> list[Slab]:
    """Split into (2N)^m children on a checkerboard of bottom/top sub-slabs.

    The x-face splits into (2N)^m cubes of side L/2N; a child whose grid-index
    sum is even sits at the bottom of the vertical side (c-type), otherwise at
    the top (d-type).  Parity guarantees same-type children never share an
    m-dimensional face and that the first cell is c-type.
    """
    if N < 1:
        raise InputError("N must be >= 1")
    sides = [hi - lo for lo, hi in slab.x_intervals]
    if max(sides) - min(sides) > 1e-12 * max(sides):
        raise InputError("slab horizontal sides must be equal")
    L = slab.h
    c, d = slab.t_interval
    if not (0 < lam <= 0.5) or lam * L > (d - c) / 2 + 1e-15:
        raise ConstructionError(
            f"lambda*L = {lam * L} exceeds half the vertical extent {(d - c) / 2}"
        )
    step = L / (2 * N)
    children = []
    for idx in itertools.product(range(2 * N), repeat=slab.m):
        xs = tuple(
            (lo + i * step, lo + (i + 1) * step)
            for (lo, _), i in zip(slab.x_intervals, idx)
        )
        if sum(idx) % 2 == 0:
            children.append(Slab(xs, (c, c + lam * L), "c", slab.level + 1))
        else:
            children.append(Slab(xs, (d - lam * L, d), "d", slab.level + 1))
    return children


@dataclass(frozen=True)
class Example1Schedule:
    """Doubly exponential schedule: h_k = 2^-2^k, v_k = h_k^2."""

    m: int = 1

    def raw(self, k: int) -> tuple[int, float]:
        return 2 ** (2 ** (k - 1) - 1), 2.0 ** (-3 * 2 ** (k - 1))

    def tag(self) -> dict:
        return {"scheme": "example1", "m": self.m}


@dataclass(frozen=True)
class Example2Schedule:
    """Dyadic schedule with v_k = 34*M*m*4^-k once 2^k > 68*M*m."""

    M: float
    m: int = 1

    def __post_init__(self):
        if not self.M > 1:
            raise InputError("M must be > 1")

    def raw(self, k: int) -> tuple[int, float]:
        if 2**k <= 68 * self.M * self.m:
            return 1, 0.5
        return 1, 68 * self.M * self.m * 2.0 ** (-k - 1)

    def tag(self) -> dict:
        return {"scheme": "example2", "M": self.M, "m": self.m}


@dataclass(frozen=True)
class CustomSchedule:
    steps: tuple[tuple[int, float], ...]
    m: int = 1

    def raw(self, k: int) -> tuple[int, float]:
        if k > len(self.steps):
            raise InputError(f"custom schedule has only {len(self.steps)} levels")
        return self.steps[k - 1]

    def tag(self) -> dict:
        return {"scheme": "custom", "m": self.m, "steps": [list(s) for s in self.steps]}


def schedule_params(scheme, k: int) -> tuple[int, float, float, float]:
    """(N_k, lambda_k, h_k, v_k) for level k >= 1 of a schedule."""
    if k < 1:
        raise InputError("k must be >= 1")
    h, v = 0.5, 0.5
    N, lam = 1, 0.5
    for j in range(1, k + 1):
        N, lam = scheme.raw(j)
        v = lam * h
        h = h / (2 * N)
    return N, lam, h, v


@dataclass(frozen=True)
class SlabConstruction:
    """All depth-level slabs of a schedule, plus per-level side lengths."""

    spec: GroupSpec
    embedding: str  # "heis-xt" or "plane-1-t"
    m: int
    depth: int
    slabs: tuple[Slab, ...]
    h_levels: tuple[float, ...]  # index k = 0..depth
    v_levels: tuple[float, ...]
    scheme_tag: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.spec.n

    def _embed_columns(self) -> tuple[list[int], int]:
        """Ambient column index of each x coordinate and of t."""
        if self.embedding == "heis-xt":
            if self.spec.m1 != 2 * self.m or self.spec.m2 != 1:
                raise InputError("heis-xt embedding requires the Heisenberg spec H^m")
            return list(range(self.m)), 2 * self.m
        if self.embedding == "plane-1-t":
            if self.m != 1:
                raise InputError("plane-1-t embedding requires m = 1")
            return [0], self.spec.m1
        raise InputError(f"unknown embedding {self.embedding!r}")

    def to_ambient(self, pts: np.ndarray) -> np.ndarray:
        """Lift (x, t) coordinates, shape (K, m+1), to ambient R^n."""
        pts = np.asarray(pts, dtype=float)
        xcols, tcol = self._embed_columns()
        out = np.zeros(pts.shape[:-1] + (self.n,))
        out[..., xcols] = pts[..., : self.m]
        out[..., tcol] = pts[..., self.m]
        return out

    def boxes_ambient(self) -> np.ndarray:
        """Per-slab ambient bounding boxes, shape (K, n, 2)."""
        xcols, tcol = self._embed_columns()
        K = len(self.slabs)
        boxes = np.zeros((K, self.n, 2))
        for k, slab in enumerate(self.slabs):
            for col, (lo, hi) in zip(xcols, slab.x_intervals):
                boxes[k, col] = (lo, hi)
            boxes[k, tcol] = slab.t_interval
        return boxes

    def cover_diams(self, metric: str) -> np.ndarray:
        """Per-piece covering diameters used by the measure proxies.

        Euclidean pieces use the x-face diagonal sqrt(m)*h: the vertical side
        is refined away at the next level, and the limit set meets each slab in
        a set of horizontal extent h and vanishing thickness.
        """
        h = np.array([s.h for s in self.slabs])
        v = np.array([s.v for s in self.slabs])
        if metric == "euclidean":
            return np.sqrt(self.m) * h
        if metric == "homogeneous":
            return np.maximum(np.sqrt(self.m) * h, self.spec.c * np.sqrt(v))
        raise InputError(f"unknown metric {metric!r}")

    def total_mass(self, s: float) -> float:
        return float(np.sum(self.cover_diams("euclidean") ** s))

    def sample(self, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
        """Uniform weighted sample: uniform slab, uniform x in its face, uniform t."""
        if count < 1:
            raise InputError("count must be >= 1")
        if not self.slabs:
            raise InputError("empty construction")
        rng = np.random.Generator(np.random.Philox(key=seed))
        idx = rng.integers(0, len(self.slabs), size=count)
        u = rng.random((count, self.m + 1))
        lows = np.array([[iv[0] for iv in s.x_intervals] + [s.t_interval[0]] for s in self.slabs])
        highs = np.array([[iv[1] for iv in s.x_intervals] + [s.t_interval[1]] for s in self.slabs])
        pts = lows[idx] + u * (highs[idx] - lows[idx])
        total_x = sum(s.h**self.m for s in self.slabs)
        weights = np.full(count, total_x / count)
        return self.to_ambient(pts), weights


def build_construction(
    spec: GroupSpec,
    scheme,
    depth: int,
    embedding: str = "heis-xt",
    budget: int | None = None,
) -> SlabConstruction:
    """Iterate the schedule from the unit root box down to ``depth`` levels.

    Level 0 is the root subdivision with N = 1, lambda = 1/2; the returned
    construction holds the (2^m * prod (2 N_k)^m) slabs of the final level.
    """
    if depth < 0:
        raise InputError("depth must be >= 0")
    m = scheme.m
    budget = piece_budget() if budget is None else budget
    root = Slab(tuple((0.0, 1.0) for _ in range(m)), (0.0, 1.0), "root", level=-1)
    current = subdivide(root, 1, 0.5)
    # level-0 sides: h = 1/2 and v = lambda * L = 1/2
    h_levels, v_levels = [0.5], [0.5]
    for k in range(1, depth + 1):
        N, lam = scheme.raw(k)
        if len(current) * (2 * N) ** m > budget:
            raise BudgetError(
                f"level {k} would need {len(current) * (2 * N) ** m} slabs (budget {budget})"
            )
        nxt = []
        for slab in current:
            nxt.extend(subdivide(slab, N, lam))
        current = nxt
        h_levels.append(current[0].h)
        v_levels.append(current[0].v)
    construction = SlabConstruction(
        spec=spec,
        embedding=embedding,
        m=m,
        depth=depth,
        slabs=tuple(current),
        h_levels=tuple(h_levels),
        v_levels=tuple(v_levels),
        scheme_tag=scheme.tag(),
    )
    construction._embed_columns()  # validate embedding against spec now
    return construction


# ---------------------------------------------------------------------------
# Moran sub-construction


def moran_branch_sequence(profile: tuple[int, int], s: float, T: int) -> tuple[int, ...]:
    """Branch factors n_1..n_T: n_1 = 2, then 2 iff prod n_i^(2 m2) < 2^(2t(s-m1))."""
    m1, m2 = profile
    if not m1 <= s <= m1 + m2:
        raise InputError(f"s must lie in [{m1}, {m1 + m2}]")
    seq = [2]
    for t in range(1, T):
        # log2 of prod n_i^(2 m2) is 2*m2*(#twos so far)
        twos = sum(1 for n in seq if n == 2)
        seq.append(2 if 2 * m2 * twos < 2 * t * (s - m1) else 1)
    return tuple(seq[:T])


def map_symbols(m1: int, m2: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """The ordered contraction alphabet: a2 = 0 block first, then lex on (a1, a2)."""
    a1s = list(itertools.product((0, 1), repeat=m1))
    first = [(a1, (0,) * m2) for a1 in a1s]
    rest = [
        (a1, a2)
        for a1 in a1s
        for a2 in itertools.product((0, 1, 2, 3), repeat=m2)
        if any(a2)
    ]
    return first + rest


def ifs_map_apply(spec: GroupSpec, a1, a2, p) -> np.ndarray:
    """F_{a1 a2}(p) = [a1, a2] . dilate(1/2, [-a1, -a2] . p); ratio-1/2 contraction."""
    a1 = np.asarray(a1, dtype=float)
    a2 = np.zeros(spec.m2) if a2 is None else np.asarray(a2, dtype=float)
    if a1.shape != (spec.m1,) or not np.all(np.isin(a1, (0, 1))):
        raise InputError("a1 must lie in {0,1}^m1")
    if a2.shape != (spec.m2,) or not np.all(np.isin(a2, (0, 1, 2, 3))):
        raise InputError("a2 must lie in {0,1,2,3}^m2")
    anchor = np.concatenate([a1, a2])
    return multiply(spec, anchor, dilate(spec, 0.5, multiply(spec, -anchor, p)))


def _map_affine(spec: GroupSpec, a1, a2) -> tuple[np.ndarray, np.ndarray]:
    """F_{a1 a2} as the affine map z -> A z + b (exact; P is bilinear)."""
    m1, m2, n = spec.m1, spec.m2, spec.n
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    A = np.zeros((n, n))
    A[:m1, :m1] = 0.5 * np.eye(m1)
    A[m1:, m1:] = 0.25 * np.eye(m2)
    # second layer picks up P(a1, p1)/4
    A[m1:, :m1] = 0.25 * np.einsum("l,jli->ji", a1, spec._skew)
    b = np.concatenate([0.5 * a1, 0.75 * a2])
    return A, b


def _box_diam_homogeneous(spec: GroupSpec, box: np.ndarray) -> float:
    """Upper bound on the d_inf diameter of an axis-aligned box."""
    lo, hi = box[:, 0], box[:, 1]
    d1 = float(np.linalg.norm(hi[: spec.m1] - lo[: spec.m1]))
    d2 = float(np.linalg.norm(hi[spec.m1 :] - lo[spec.m1 :]))
    r1 = float(np.linalg.norm(np.maximum(np.abs(lo[: spec.m1]), np.abs(hi[: spec.m1]))))
    bmax2 = float(np.max(spec.b**2)) if spec.b.size else 0.0
    kappa = 2.0 * r1 * np.sqrt(spec.m2 * spec.m1 * (spec.m1 - 1) * bmax2)
    return max(d1, spec.c * float(np.sqrt(d2 + kappa * d1)))


def _box_hull_step(spec: GroupSpec, maps, box: np.ndarray) -> np.ndarray:
    """Hull of the images of a box under all contraction maps (exact per map)."""
    center = 0.5 * (box[:, 0] + box[:, 1])
    half = 0.5 * (box[:, 1] - box[:, 0])
    los, his = [], []
    for A, b in maps:
        c = A @ center + b
        w = np.abs(A) @ half
        los.append(c - w)
        his.append(c + w)
    return np.stack([np.min(los, axis=0), np.max(his, axis=0)], axis=1)


def attractor_box(spec: GroupSpec, iterations: int = 30) -> tuple[np.ndarray, float]:
    """Outer bounding box and d_inf-diameter bound for the attractor of the full family.

    Starts from a box verified invariant under the hull map and refines it;
    both the box and the diameter bound are monotone nonincreasing.
    """
    if iterations < 1:
        raise InputError("iterations must be >= 1")
    maps = [_map_affine(spec, a1, a2) for a1, a2 in map_symbols(spec.m1, spec.m2)]
    # initial guess: first layer [0,1]^m1; second layer from the fixed point of
    # the hull recursion hi <- (hi + 9 + Pmax)/4, padded by 1.
    ones = np.ones(spec.m1)
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=spec.m1)))
    pvals = np.einsum("al,jli,bi->abj", corners, spec._skew, corners)
    pmin = np.min(pvals, axis=(0, 1)) if pvals.size else np.zeros(spec.m2)
    pmax = np.max(pvals, axis=(0, 1)) if pvals.size else np.zeros(spec.m2)
    lo = np.concatenate([np.zeros(spec.m1), pmin / 3.0 - 1.0])
    hi = np.concatenate([ones, (9.0 + pmax) / 3.0 + 1.0])
    box = np.stack([lo, hi], axis=1)
    for _ in range(60):
        image = _box_hull_step(spec, maps, box)
        if np.all(image[:, 0] >= box[:, 0] - 1e-12) and np.all(image[:, 1] <= box[:, 1] + 1e-12):
            break
        # grow toward invariance: the hull map is monotone and contracting
        box = np.stack(
            [np.minimum(box[:, 0], image[:, 0]), np.maximum(box[:, 1], image[:, 1])], axis=1
        )
    else:
        raise ConstructionError("no invariant starting box found within the search budget")
    diam = _box_diam_homogeneous(spec, box)
    for _ in range(iterations):
        box = _box_hull_step(spec, maps, box)
        diam = min(diam, _box_diam_homogeneous(spec, box))
    return box, diam


@dataclass(frozen=True)
class MoranSet:
    """Depth-n cylinder boxes of the controlled Moran sub-construction."""

    spec: GroupSpec
    s: float
    depth: int
    branch: tuple[int, ...]
    addresses: np.ndarray  # (K, depth), 1-based symbols
    boxes: np.ndarray  # (K, n, 2)
    diam_bound: float  # common bound diam_inf(E) / 2^depth
    attractor: np.ndarray  # (n, 2)
    attractor_diam: float

    @property
    def n(self) -> int:
        return self.spec.n

    def boxes_ambient(self) -> np.ndarray:
        return self.boxes

    def cover_diams(self, metric: str) -> np.ndarray:
        if metric == "euclidean":
            return np.linalg.norm(self.boxes[:, :, 1] - self.boxes[:, :, 0], axis=1)
        if metric == "homogeneous":
            return np.full(len(self.boxes), self.diam_bound)
        raise InputError(f"unknown metric {metric!r}")

    def centers(self) -> np.ndarray:
        return 0.5 * (self.boxes[:, :, 0] + self.boxes[:, :, 1])

    def total_mass(self) -> float:
        target = 2 * self.s - self.spec.m1
        return float(np.sum(self.cover_diams("homogeneous") ** target))

    def sample(self, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
        """Uniform addresses, box centers, weights normalized to the diam^(2s-m1) sum."""
        if count < 1:
            raise InputError("count must be >= 1")
        rng = np.random.Generator(np.random.Philox(key=seed))
        idx = rng.integers(0, len(self.boxes), size=count)
        weights = np.full(count, self.total_mass() / count)
        return self.centers()[idx], weights


def enumerate_cylinders(
    spec: GroupSpec,
    s: float,
    depth: int,
    budget: int | None = None,
    attractor_iterations: int = 30,
) -> MoranSet:
    """All depth-n cylinders with admissible addresses, as exact affine box images."""
    if depth < 1:
        raise InputError("depth must be >= 1")
    budget = piece_budget() if budget is None else budget
    branch = moran_branch_sequence((spec.m1, spec.m2), s, depth)
    symbols = map_symbols(spec.m1, spec.m2)
    maps = [_map_affine(spec, a1, a2) for a1, a2 in symbols]
    counts = [n ** (2 * spec.m2) * 2**spec.m1 for n in branch]
    total = 1
    for cnt in counts:
        total *= cnt
        if total > budget:
            raise BudgetError(f"{total}+ cylinder addresses exceed budget {budget}")
    box, diam_e = attractor_box(spec, iterations=attractor_iterations)

    n = spec.n
    # composed affine maps per prefix: A (K, n, n), b (K, n)
    A = np.eye(n)[None, :, :]
    b = np.zeros((1, n))
    addresses = np.zeros((1, 0), dtype=int)
    for level, cnt in enumerate(counts):
        As = np.stack([maps[i][0] for i in range(cnt)])
        bs = np.stack([maps[i][1] for i in range(cnt)])
        # extend every prefix by every admissible symbol (prefix-major order)
        A_new = np.einsum("kij,sjl->ksil", A, As).reshape(-1, n, n)
        b_new = (np.einsum("kij,sj->ksi", A, bs) + b[:, None, :]).reshape(-1, n)
        syms = np.tile(np.arange(1, cnt + 1), len(addresses))
        addresses = np.repeat(addresses, cnt, axis=0)
        addresses = np.concatenate([addresses, syms[:, None]], axis=1)
        A, b = A_new, b_new
    center = 0.5 * (box[:, 0] + box[:, 1])
    half = 0.5 * (box[:, 1] - box[:, 0])
    c_img = np.einsum("kij,j->ki", A, center) + b
    w_img = np.einsum("kij,j->ki", np.abs(A), half)
    boxes = np.stack([c_img - w_img, c_img + w_img], axis=2)
    return MoranSet(
        spec=spec,
        s=s,
        depth=depth,
        branch=branch,
        addresses=addresses,
        boxes=boxes,
        diam_bound=diam_e / 2**depth,
        attractor=box,
        attractor_diam=diam_e,
    )


def vertical_factor_set(
    m2: int, s: float, m1: int, depth: int, budget: int | None = None
) -> np.ndarray:
    """Depth-n boxes of the second-layer factor construction, shape (K, m2, 2).

    Maps are h(y) = y/4 + 3a/4 applied to [0, 2]^m2; level j admits the
    lexicographically first n_j^(2 m2) translations a in {0,1,2,3}^m2.
    """
    if not m1 < s:
        raise InputError("requires s > m1")
    budget = piece_budget() if budget is None else budget
    branch = moran_branch_sequence((m1, m2), s, depth)
    all_a = np.array(list(itertools.product((0, 1, 2, 3), repeat=m2)), dtype=float)
    offsets = np.zeros((1, m2))
    scale = 1.0
    total = 1
    for n in branch:
        cnt = n ** (2 * m2)
        total *= cnt
        if total > budget:
            raise BudgetError(f"{total}+ factor boxes exceed budget {budget}")
        a = all_a[:cnt]
        offsets = (offsets[:, None, :] + scale * 0.75 * a[None, :, :]).reshape(-1, m2)
        scale /= 4.0
    lo = offsets
    hi = offsets + 2.0 * scale
    return np.stack([lo, hi], axis=2)
