"""Step-2 Carnot group arithmetic in exponential coordinates.

A group is described by a :class:`GroupSpec`: first/second layer dimensions
``m1``/``m2``, the antisymmetric structure coefficients ``b[j][l][i]`` of the
second-layer polynomial, and the metric constant ``c`` used by the homogeneous
distance.  Points are plain numpy vectors of length ``n = m1 + m2``; every
operation broadcasts over leading axes so batches work transparently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, InputError

__all__ = [
    "GroupSpec",
    "Point",
    "AffinePlane",
    "StrataProfile",
    "bracket_polynomial",
    "multiply",
    "invert",
    "dilate",
    "identity",
    "dist_homogeneous",
    "dist_euclidean",
    "dist_koranyi",
    "heisenberg_spec",
    "horizontal_plane",
    "dist_to_plane",
    "beta_minus",
    "beta_plus",
    "c_r_bound",
    "calibrate_metric_constant",
    "empirical_ball_constant",
    "sample_ball",
    "spec_to_json",
    "spec_from_json",
]


@dataclass
class GroupSpec:
    """One step-2 Carnot group: layer dimensions, structure constants, metric constant.

    ``b`` has shape ``(m2, m1, m1)``; only entries with ``l < i`` are read.
    """

    m1: int
    m2: int
    b: np.ndarray
    c: float = 0.5
    _skew: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.m1 < 1 or self.m2 < 1:
            raise InputError("layer dimensions must be positive")
        if not 0.0 < self.c < 1.0:
            raise InputError(f"metric constant c must lie in (0,1), got {self.c}")
        b = np.asarray(self.b, dtype=float)
        if b.shape != (self.m2, self.m1, self.m1):
            raise InputError(f"b must have shape (m2, m1, m1), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise InputError("structure constants must be finite")
        upper = np.triu(b, k=1)
        if self.m1 < 2 and np.any(upper != 0):
            raise InputError("nonzero structure constants require m1 >= 2")
        self.b = upper
        # antisymmetric form: P_j(a, y) = a @ skew[j] @ y
        self._skew = upper - np.swapaxes(upper, 1, 2)

    @property
    def n(self) -> int:
        return self.m1 + self.m2

    def split(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        coords = np.asarray(coords, dtype=float)
        if coords.shape[-1] != self.n:
            raise InputError(f"expected points of dimension {self.n}, got {coords.shape[-1]}")
        return coords[..., : self.m1], coords[..., self.m1 :]


@dataclass(frozen=True)
class Point:
    """A group element; thin wrapper used where a named type reads better."""

    coords: tuple[float, ...]

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def p1(self, spec: GroupSpec) -> np.ndarray:
        return self.array()[: spec.m1]

    def p2(self, spec: GroupSpec) -> np.ndarray:
        return self.array()[spec.m1 :]


@dataclass(frozen=True)
class StrataProfile:
    """Layer dimensions (m1, ..., mk) of a step-k stratification."""

    dims: tuple[int, ...]

    def __post_init__(self):
        if not self.dims or any(int(m) < 1 for m in self.dims):
            raise InputError("all layer dimensions must be >= 1")

    @property
    def n(self) -> int:
        return int(sum(self.dims))

    @property
    def homogeneous_dimension(self) -> int:
        return int(sum((i + 1) * m for i, m in enumerate(self.dims)))


def identity(spec: GroupSpec) -> np.ndarray:
    return np.zeros(spec.n)


def _as_layer1(spec: GroupSpec, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != spec.m1:
        raise InputError(f"expected first-layer vectors of length {spec.m1}, got {v.shape[-1]}")
    return v


def _concat_layers(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Concatenate layer blocks along the last axis, broadcasting leading axes only."""
    lead = np.broadcast_shapes(x1.shape[:-1], x2.shape[:-1])
    x1 = np.broadcast_to(x1, lead + x1.shape[-1:])
    x2 = np.broadcast_to(x2, lead + x2.shape[-1:])
    return np.concatenate([x1, x2], axis=-1)


def bracket_polynomial(spec: GroupSpec, a, b) -> np.ndarray:
    """P(a, b), the bilinear antisymmetric second-layer polynomial."""
    a = _as_layer1(spec, a)
    b = _as_layer1(spec, b)
    return np.einsum("...l,jli,...i->...j", a, spec._skew, b)


def multiply(spec: GroupSpec, p, q) -> np.ndarray:
    """Group product p . q = [p1 + q1, p2 + q2 + P(p1, q1)]."""
    p1, p2 = spec.split(p)
    q1, q2 = spec.split(q)
    return _concat_layers(p1 + q1, p2 + q2 + bracket_polynomial(spec, p1, q1))


def invert(spec: GroupSpec, p) -> np.ndarray:
    """Group inverse; coordinate negation in step 2."""
    p = np.asarray(p, dtype=float)
    spec.split(p)
    return -p


def dilate(spec: GroupSpec, lam, p) -> np.ndarray:
    """Anisotropic dilation: layer 1 scales by lam, layer 2 by lam**2.

    ``lam`` may be a scalar or an array broadcasting against the leading axes
    of ``p``.
    """
    lam = np.asarray(lam, dtype=float)
    if not np.all(lam > 0):
        raise InputError("dilation factors must be positive")
    p1, p2 = spec.split(p)
    lam = lam[..., None]
    return _concat_layers(lam * p1, lam * lam * p2)


def dist_euclidean(p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.linalg.norm(p - q, axis=-1)


def dist_homogeneous(spec: GroupSpec, p, q) -> np.ndarray:
    """Left-invariant 1-homogeneous distance max{|p1-q1|, c |p2-q2+P(p1,q1)|^(1/2)}."""
    p1, p2 = spec.split(p)
    q1, q2 = spec.split(q)
    horiz = np.linalg.norm(p1 - q1, axis=-1)
    vert = np.linalg.norm(p2 - q2 + bracket_polynomial(spec, p1, q1), axis=-1)
    return np.maximum(horiz, spec.c * np.sqrt(vert))


def dist_koranyi(m: int, p, q) -> np.ndarray:
    """Koranyi distance on the m-th Heisenberg group (points in R^(2m+1))."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != 2 * m + 1 or q.shape[-1] != 2 * m + 1:
        raise InputError(f"expected points in R^{2 * m + 1}")
    x, y, t = p[..., :m], p[..., m : 2 * m], p[..., 2 * m]
    xp, yp, tp = q[..., :m], q[..., m : 2 * m], q[..., 2 * m]
    horiz2 = np.sum((x - xp) ** 2 + (y - yp) ** 2, axis=-1)
    vert = t - tp + 2.0 * (np.sum(xp * y, axis=-1) - np.sum(x * yp, axis=-1))
    return (horiz2**2 + vert**2) ** 0.25


def heisenberg_spec(m: int, c: float = 0.5) -> GroupSpec:
    """The Heisenberg group H^m as a step-2 spec (m1 = 2m, m2 = 1, b[0][i][m+i] = -2)."""
    if m < 1:
        raise InputError("m must be >= 1")
    b = np.zeros((1, 2 * m, 2 * m))
    for i in range(m):
        b[0, i, m + i] = -2.0
    return GroupSpec(m1=2 * m, m2=1, b=b, c=c)


@dataclass(frozen=True)
class AffinePlane:
    """An affine m1-dimensional subspace of R^n with an orthonormal basis.

    ``basis`` has shape (m1, n); rows are orthonormal directions.
    """

    base: np.ndarray
    basis: np.ndarray

    def distance(self, q) -> np.ndarray:
        return dist_to_plane(self, q)


def horizontal_plane(spec: GroupSpec, p) -> AffinePlane:
    """The horizontal plane V(p) = p . {[q1, 0]} through p."""
    p = np.asarray(p, dtype=float)
    p1, _ = spec.split(p)
    if p.ndim != 1:
        raise InputError("horizontal_plane expects a single point")
    span = np.zeros((spec.m1, spec.n))
    span[:, : spec.m1] = np.eye(spec.m1)
    span[:, spec.m1 :] = bracket_polynomial(spec, p1, np.eye(spec.m1))
    q, _ = np.linalg.qr(span.T)
    basis = q.T
    if np.max(np.abs(basis @ basis.T - np.eye(spec.m1))) > 1e-12:
        raise ConstructionError("degenerate spanning set for horizontal plane")
    return AffinePlane(base=p.copy(), basis=basis)


def dist_to_plane(plane: AffinePlane, q) -> np.ndarray:
    """Euclidean distance from q to the affine subspace (orthogonal projection)."""
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != plane.base.shape[-1]:
        raise InputError("plane and point live in different ambient dimensions")
    v = q - plane.base
    proj = np.einsum("...i,ki,kj->...j", v, plane.basis, plane.basis)
    return np.linalg.norm(v - proj, axis=-1)


def _check_s(profile: StrataProfile, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s > profile.n):
        raise InputError(f"s must lie in [0, {profile.n}]")
    return s


def beta_minus(profile: StrataProfile, s):
    """Lower dimension-comparison profile; max{s, 2s - m1} in step 2."""
    s = _check_s(profile, s)
    dims = profile.dims
    k = len(dims)
    pieces = [
        j * s - sum((j - i) * dims[i - 1] for i in range(1, j)) for j in range(1, k + 1)
    ]
    out = np.maximum.reduce(pieces)
    return float(out) if out.ndim == 0 else out


def beta_plus(profile: StrataProfile, s):
    """Upper dimension-comparison profile; min{2s, s + m2} in step 2."""
    s = _check_s(profile, s)
    dims = profile.dims
    k = len(dims)
    pieces = [
        ell * s + sum((i - ell) * dims[i - 1] for i in range(ell + 1, k + 1))
        for ell in range(1, k + 1)
    ]
    out = np.minimum.reduce(pieces)
    return float(out) if out.ndim == 0 else out


def c_r_bound(spec: GroupSpec, R: float) -> float:
    """C_R with |P(p1, q1)| <= C_R |p1 - q1| and <= C_R |q1| on B_E(0, R)."""
    if not R > 0:
        raise InputError("R must be positive")
    bmax2 = float(np.max(spec.b**2)) if spec.b.size else 0.0
    return 2.0 * R * np.sqrt(spec.m2 * spec.m1 * (spec.m1 - 1) * bmax2)


def sample_ball(rng: np.random.Generator, n: int, R: float, count: int) -> np.ndarray:
    """Uniform samples in the closed Euclidean ball B_E(0, R) in R^n."""
    v = rng.standard_normal((count, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    radii = R * rng.random(count) ** (1.0 / n)
    return v * radii[:, None]


def _metric_parts(spec: GroupSpec, p, q):
    p1, p2 = spec.split(p)
    q1, q2 = spec.split(q)
    horiz = np.linalg.norm(p1 - q1, axis=-1)
    vert = np.sqrt(np.linalg.norm(p2 - q2 + bracket_polynomial(spec, p1, q1), axis=-1))
    return horiz, vert


def calibrate_metric_constant(
    spec: GroupSpec, sample_count: int = 100_000, R: float = 5.0, seed: int = 0
) -> float:
    """Largest c (to 1e-3) with no triangle-inequality violation on sampled triples.

    The result is a sample-level certificate only; the admissible constant for
    the true metric may be smaller.
    """
    if sample_count < 1:
        raise InputError("sample_count must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    p = sample_ball(rng, spec.n, R, sample_count)
    w = sample_ball(rng, spec.n, R, sample_count)
    q = sample_ball(rng, spec.n, R, sample_count)
    hpq, vpq = _metric_parts(spec, p, q)
    hpw, vpw = _metric_parts(spec, p, w)
    hwq, vwq = _metric_parts(spec, w, q)

    def feasible(c: float) -> bool:
        lhs = np.maximum(hpq, c * vpq)
        rhs = np.maximum(hpw, c * vpw) + np.maximum(hwq, c * vwq)
        return bool(np.all(lhs <= rhs + 1e-12))

    lo, hi = 1e-3, 1.0 - 1e-3
    if feasible(hi):
        return hi
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    while lo > 1e-3 and not feasible(lo):
        lo -= 1e-3
    return float(lo)


def empirical_ball_constant(
    spec: GroupSpec, R: float, sample_count: int = 100_000, seed: int = 0
) -> float:
    """Empirical c_R with d_E/c_R <= d_inf <= c_R sqrt(d_E) on sampled pairs in B_E(0, R).

    Besides independent uniform pairs, the sample includes pairs at
    geometrically shrinking separations: the ratio d_inf / sqrt(d_E) approaches
    its supremum as the separation goes to zero, which uniform pairs miss.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    half = sample_count // 2
    p = sample_ball(rng, spec.n, R, half)
    q = sample_ball(rng, spec.n, R, half)
    pairs = [(p, q)]
    # scale-stratified close pairs
    scales = 2.0 ** -np.arange(0, 24)
    per_scale = max(1, half // len(scales))
    for t in scales:
        base = sample_ball(rng, spec.n, R, per_scale)
        direc = rng.standard_normal((per_scale, spec.n))
        direc /= np.linalg.norm(direc, axis=1, keepdims=True)
        other = base + t * direc
        inside = np.linalg.norm(other, axis=1) <= R
        pairs.append((base[inside], other[inside]))
        # group-translated pairs q = p . delta_t(u): these probe the second-layer
        # shear P(p1, t u1), which additive perturbations of the coordinates miss
        u = sample_ball(rng, spec.n, 1.0, per_scale)
        other = multiply(spec, base, dilate(spec, t, u))
        inside = np.linalg.norm(other, axis=1) <= R
        pairs.append((base[inside], other[inside]))
    cmax = 1.0
    for a, b in pairs:
        if len(a) == 0:
            continue
        de = dist_euclidean(a, b)
        dinf = dist_homogeneous(spec, a, b)
        ok = de > 0
        ratio1 = np.max(de[ok] / dinf[ok]) if np.any(ok) else 1.0
        ratio2 = np.max(dinf[ok] / np.sqrt(de[ok])) if np.any(ok) else 1.0
        cmax = max(cmax, float(ratio1), float(ratio2))
    return cmax


def spec_to_json(spec: GroupSpec) -> str:
    entries = []
    for j in range(spec.m2):
        for l in range(spec.m1):
            for i in range(l + 1, spec.m1):
                if spec.b[j, l, i] != 0.0:
                    entries.append([j + 1, l + 1, i + 1, spec.b[j, l, i]])
    doc = {"m1": spec.m1, "m2": spec.m2, "c": spec.c, "b": entries}
    return json.dumps(doc, sort_keys=True)


def spec_from_json(doc) -> GroupSpec:
    """Parse a spec document; accepts {"heisenberg": m} shorthand."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    if "heisenberg" in doc:
        return heisenberg_spec(int(doc["heisenberg"]), c=float(doc.get("c", 0.5)))
    try:
        m1, m2 = int(doc["m1"]), int(doc["m2"])
    except KeyError as exc:
        raise InputError(f"spec document missing field {exc}")
    b = np.zeros((m2, m1, m1))
    for j, l, i, value in doc.get("b", []):
        if not (1 <= j <= m2 and 1 <= l < i <= m1):
            raise InputError(f"structure constant index out of range: ({j},{l},{i})")
        b[j - 1, l - 1, i - 1] = float(value)
    return GroupSpec(m1=m1, m2=m2, b=b, c=float(doc.get("c", 0.5)))
