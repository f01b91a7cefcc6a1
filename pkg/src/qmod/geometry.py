"""Hyperbolic and quotient metrics, Dirichlet domains and normal neighborhoods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .mobius import DiscreteGroup, apply, check_in_ball, inverse, make_motion

NORMAL_RADIUS_CAP = 5.0


def hyp_distance(x, y):
    """Hyperbolic distance in the ball, ``log((1+t)/(1-t))``.

    Evaluated as ``arccosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2)))`` via
    ``log1p`` so that nearby points keep full relative accuracy.
    Broadcasts over leading axes.
    """
    x = check_in_ball(x)
    y = check_in_ball(y)
    diff2 = np.sum((x - y) ** 2, axis=-1)
    px = 1.0 - np.sum(x * x, axis=-1)
    py = 1.0 - np.sum(y * y, axis=-1)
    delta = 2.0 * diff2 / (px * py)
    return np.log1p(delta + np.sqrt(delta * (delta + 2.0)))


def euclidean_radius(r):
    """Euclidean radius of the hyperbolic ball ``B_h(0, r)``: ``(e^r - 1)/(e^r + 1)``."""
    return np.tanh(np.asarray(r, dtype=float) / 2.0)


def hyperbolic_radius(rho):
    """Inverse of :func:`euclidean_radius`: ``log((1+rho)/(1-rho))``."""
    return 2.0 * np.arctanh(np.asarray(rho, dtype=float))


def quotient_distance(group, x, y):
    """``min_g min(h(x, g y), h(g x, y))`` over the stored elements of ``group``.

    An upper bound for the distance between orbits; exact when both points
    sit in a common normal neighborhood.
    """
    oy = group.orbit(y)
    ox = group.orbit(x)
    d1 = hyp_distance(np.asarray(x, dtype=float)[None], oy)
    d2 = hyp_distance(ox, np.asarray(y, dtype=float)[None])
    return np.minimum(d1.min(axis=0), d2.min(axis=0))


def normal_radius(group, x0, cap=NORMAL_RADIUS_CAP):
    """Half the distance from ``x0`` to its nearest stored orbit point, capped at ``cap``."""
    x0 = check_in_ball(x0)
    if group.is_trivial:
        return float(cap)
    images = group.orbit(x0)[1:]
    return float(min(cap, 0.5 * np.min(hyp_distance(images, x0[None]))))


def dirichlet_contains(group, x0, x, rtol=1e-12):
    """True iff ``h(x, x0) < h(x, T x0)`` for every stored non-identity ``T``.

    Points within ``rtol`` (relative) of a bisector count as outside, so
    equidistant points fail the strict inequality despite rounding.
    """
    x0 = check_in_ball(x0)
    x = check_in_ball(x)
    if group.is_trivial:
        return np.ones(np.shape(x)[:-1], dtype=bool) if np.ndim(x) > 1 else True
    centers = group.orbit(x0)[1:]                       # (k-1, n)
    d0 = hyp_distance(x, x0)
    dT = hyp_distance(x[..., None, :], centers)          # (..., k-1)
    inside = np.all(d0[..., None] < dT * (1.0 - rtol) - rtol, axis=-1)
    return bool(inside) if np.ndim(inside) == 0 else inside


def hyperbolic_midpoint(x, y):
    """Midpoint of the geodesic segment ``[x, y]``."""
    T = make_motion(np.asarray(x, dtype=float))          # x -> 0
    ty = apply(T, y)
    r = np.linalg.norm(ty)
    if r == 0.0:
        return np.asarray(x, dtype=float).copy()
    mid = ty / r * np.tanh(np.arctanh(r) / 2.0)
    return apply(inverse(T), mid)


def metric_comparison_constant(r0, samples=20000, rng=None, n=2):
    """Empirical ``c1`` with ``c1 h(z1, z2) <= |z1 - z2| <= h(z1, z2)`` on ``B_h(0, r0)``.

    Returns ``(c1_hat, upper_ok)``: ``c1_hat`` is the smallest observed ratio
    ``|z1-z2|/h`` over random pairs, pairs with the origin, and near-boundary
    tangential pairs; ``upper_ok`` records whether ``|z1-z2| <= h`` held on
    every pair.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    rho = float(euclidean_radius(r0))
    z1 = _uniform_ball(rng, samples, n, rho)
    z2 = _uniform_ball(rng, samples, n, rho)
    # pairs anchored at the origin and short tangential pairs near the rim
    z0 = np.zeros_like(z1)
    u = rng.normal(size=(samples, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rim = 0.999999 * rho * u
    v = rng.normal(size=(samples, n))
    v -= np.sum(v * u, axis=1, keepdims=True) * u
    v /= np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)
    rim2 = rim + 1e-4 * rho * v
    rim2 *= np.minimum(1.0, 0.999999 * rho / np.linalg.norm(rim2, axis=1, keepdims=True))
    a = np.concatenate([z1, z0, rim])
    b = np.concatenate([z2, z1, rim2])
    h = hyp_distance(a, b)
    e = np.linalg.norm(a - b, axis=1)
    keep = h > 0
    ratio = e[keep] / h[keep]
    return float(ratio.min()), bool(np.all(e <= h + 1e-15))


def _uniform_ball(rng, m, n, radius):
    u = rng.normal(size=(m, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * radius * rng.uniform(size=(m, 1)) ** (1.0 / n)


def curve_length(group, gamma, segments=16, rtol=1e-4, max_doublings=16):
    """Quotient length of a parametrized curve ``gamma: [0, 1] -> ball``.

    Sums quotient distances between consecutive vertices of an inscribed
    polyline and doubles the vertex count until the relative change drops
    below ``rtol``.  Each sum is a lower bound for the supremum over
    partitions.
    """
    def polyline_length(k):
        t = np.linspace(0.0, 1.0, k + 1)
        pts = np.asarray([gamma(s) for s in t], dtype=float)
        return float(np.sum(quotient_distance(group, pts[:-1], pts[1:])))

    k = segments
    prev = polyline_length(k)
    for _ in range(max_doublings):
        k *= 2
        cur = polyline_length(k)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    return prev


@dataclass(frozen=True, eq=False)
class QuotientPoint:
    """An orbit ``G x`` represented by the ball point ``rep``."""

    rep: np.ndarray
    group: DiscreteGroup

    def __post_init__(self):
        rep = np.array(check_in_ball(self.rep), dtype=float)
        rep.setflags(write=False)
        object.__setattr__(self, "rep", rep)

    def distance(self, other):
        return float(quotient_distance(self.group, self.rep, other.rep))


@dataclass(frozen=True, eq=False)
class ChartedNeighborhood:
    """A quotient ball ``B~(p0, radius)`` with the chart that centers ``p0`` at 0.

    Chart coordinates ``y`` live in ``B(0, tanh(radius/2))``; ``to_ball(y)``
    is the representative in the ball (the rep of ``p0`` is the image of 0).
    The projection restricted to the chart ball is an isometry as long as
    ``radius`` does not exceed the normal radius at the center.
    """

    center: QuotientPoint
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("neighborhood radius must be positive")
        to_zero = make_motion(self.center.rep)
        object.__setattr__(self, "_to_zero", to_zero)
        object.__setattr__(self, "_from_zero", inverse(to_zero))

    @property
    def n(self):
        return self.center.rep.shape[0]

    @property
    def group(self):
        return self.center.group

    @property
    def euclidean_radius(self):
        return float(euclidean_radius(self.radius))

    def to_ball(self, y):
        return apply(self._from_zero, y)

    def from_ball(self, x):
        return apply(self._to_zero, x)

    def isometry_defect(self, samples=200, rng=None):
        """Max ``|quotient_distance - h|`` over random pairs in the chart ball."""
        rng = np.random.default_rng(1) if rng is None else rng
        rho = 0.5 * self.euclidean_radius      # pairs within the half-radius ball
        a = _uniform_ball(rng, samples, self.n, rho)
        b = _uniform_ball(rng, samples, self.n, rho)
        xa, xb = self.to_ball(a), self.to_ball(b)
        dq = quotient_distance(self.group, xa, xb)
        return float(np.max(np.abs(dq - hyp_distance(a, b))))


def make_neighborhood(group, rep, radius=None, cap=NORMAL_RADIUS_CAP):
    """Charted neighborhood around ``rep``; ``radius`` defaults to the normal radius."""
    p0 = QuotientPoint(np.asarray(rep, dtype=float), group)
    r_max = normal_radius(group, p0.rep, cap=cap)
    if radius is None:
        radius = r_max
    elif radius > r_max + 1e-12:
        raise DomainError(f"radius {radius} exceeds the normal radius {r_max}")
    return ChartedNeighborhood(p0, float(radius))
