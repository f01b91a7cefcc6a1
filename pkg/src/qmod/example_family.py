"""A worked family of radial maps on a normal neighborhood.

Each map scales the inner ball ``|y| <= r0'(m-1)/m`` by
``s_m = (m/(m-1)) log(e m/(m-1))`` and applies the logarithmic radial map
``y -> r0' (y/|y|) log(e r0'/|y|)`` on the surrounding annulus.  The two
branches glue continuously, the outer sphere is fixed pointwise and the
outer dilatation never exceeds ``log(e r0'/|y|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .distortion import MapSample, fd_jacobian, outer_dilatation_closed
from .errors import DomainError, ValidationError
from .geometry import (
    euclidean_radius,
    hyp_distance,
    make_neighborhood,
    metric_comparison_constant,
    normal_radius,
)
from .measures import radial_field, sphere_area, sphere_integral
from .mobius import DiscreteGroup, trivial_group


def inner_scale(m):
    """``(m/(m-1)) log(e m/(m-1))``, the scaling factor of the inner branch."""
    a = m / (m - 1.0)
    return a * math.log(math.e * a)


@dataclass(frozen=True)
class ExampleFamilyConfig:
    n: int = 2
    m: int = 2
    r0: float = 1.0
    group: Optional[DiscreteGroup] = None
    r0_prime: Optional[float] = None

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("n must be at least 2")
        if int(self.m) != self.m or self.m < 2:
            raise ValidationError("m must be an integer >= 2")
        g = trivial_group(self.n) if self.group is None else self.group
        if g.n != self.n:
            raise ValidationError("group dimension does not match n")
        object.__setattr__(self, "group", g)
        if not self.r0 > 0:
            raise ValidationError("r0 must be positive")
        rmax = normal_radius(g, np.zeros(self.n))
        if self.r0 > rmax + 1e-12:
            raise DomainError(f"r0 = {self.r0} exceeds the normal radius {rmax} at the base point")
        rp = float(euclidean_radius(self.r0))
        if self.r0_prime is None:
            object.__setattr__(self, "r0_prime", rp)
        elif abs(self.r0_prime - rp) > 1e-12:
            raise ValidationError(f"r0_prime {self.r0_prime} is inconsistent with r0 (expected {rp})")

    @property
    def glue_radius(self):
        return self.r0_prime * (self.m - 1) / self.m

    def with_m(self, m):
        return ExampleFamilyConfig(self.n, m, self.r0, self.group)

    def neighborhood(self):
        return make_neighborhood(self.group, np.zeros(self.n), self.r0)


def radial_profile(cfg, t):
    """``|g_m(y)|`` as a function of ``t = |y|``."""
    t = np.asarray(t, dtype=float)
    rp = cfg.r0_prime
    inner = t <= cfg.glue_radius
    with np.errstate(divide="ignore"):
        outer = rp * np.log(math.e * rp / np.where(inner, 1.0, t))
    return np.where(inner, inner_scale(cfg.m) * t, outer)


def gm_family_eval(cfg, y):
    """Image, closed-form operator norm and closed-form ``|J|`` at chart points ``y``.

    On the inner ball the map is a dilation by ``s_m``, so the norm is
    ``s_m`` and ``|J| = s_m^n``.  On the annulus the tangential stretch
    ``(r0'/t) log(e r0'/t)`` dominates the radial one ``r0'/t``, giving
    norm ``(r0'/t) log(e r0'/t)`` and ``|J| = (r0'/t)^n log^{n-1}(e r0'/t)``.
    """
    y = np.asarray(y, dtype=float)
    t = np.linalg.norm(y, axis=-1)
    rp = cfg.r0_prime
    if np.any(t > rp * (1 + 1e-12)):
        raise DomainError("point outside the chart ball B(0, r0')")
    n = cfg.n
    s = inner_scale(cfg.m)
    inner = t <= cfg.glue_radius
    ts = np.where(inner, 1.0, t)
    L = np.log(math.e * rp / ts)
    img = np.where(inner[..., None], s * y, (rp * L / ts)[..., None] * y)
    norm = np.where(inner, s, rp / ts * L)
    jac = np.where(inner, s ** n, (rp / ts) ** n * L ** (n - 1))
    return img, norm, jac


def gm_map_sample(cfg):
    """The map as a :class:`MapSample` with the closed-form derivative matrix."""
    rp = cfg.r0_prime
    s = inner_scale(cfg.m)

    def f(y):
        return gm_family_eval(cfg, y)[0]

    def df(y):
        t = float(np.linalg.norm(y))
        n = len(y)
        if t <= cfg.glue_radius:
            return s * np.eye(n)
        L = math.log(math.e * rp / t)
        u = y / t
        P = np.outer(u, u)
        # tangential stretch rp L / t, radial derivative d/dt (rp L) = -rp / t
        return rp * L / t * (np.eye(n) - P) - rp / t * P

    return MapSample(f, df, "chart")


def dilatation_bound(cfg, y):
    """``Q(y) = log^{n-1}(e r0'/|y|)``."""
    t = np.linalg.norm(np.asarray(y, dtype=float), axis=-1)
    with np.errstate(divide="ignore"):
        return np.log(math.e * cfg.r0_prime / t) ** (cfg.n - 1)


def branch_mismatch(cfg, directions=64, seed=0):
    """Max distance between the two branch formulas on the gluing sphere."""
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(directions, cfg.n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    y = cfg.glue_radius * u
    inner = inner_scale(cfg.m) * y
    t = cfg.glue_radius
    outer = cfg.r0_prime * math.log(math.e * cfg.r0_prime / t) / t * y
    return float(np.max(np.abs(inner - outer)))


def profile_monotone(cfg, points=4097):
    """Whether the radial profile is strictly increasing on ``[0, r0']`` (needed for a bijection)."""
    t = np.linspace(0.0, cfg.r0_prime, points)
    return bool(np.all(np.diff(radial_profile(cfg, t)) > 0))


def uniform_chart_samples(cfg, count, seed):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(count, cfg.n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * cfg.r0_prime * rng.uniform(size=(count, 1)) ** (1.0 / cfg.n)


@dataclass
class DistortionReport:
    n: int
    m: int
    samples: int
    max_excess: float
    inner_min_q: float
    glue_mismatch: float
    q_le_q1: bool
    c1_star: float
    C: float
    C1: float
    q_profile_ok: bool
    q_profile_max_ratio: float
    fd_max_error: float
    monotone_profile: bool
    offending: list = field(default_factory=list)

    @property
    def passed(self):
        return self.max_excess <= 1e-9 and self.glue_mismatch < 1e-12

    def to_dict(self):
        d = {k: getattr(self, k) for k in (
            "n", "m", "samples", "max_excess", "inner_min_q", "glue_mismatch", "q_le_q1",
            "c1_star", "C", "C1", "q_profile_ok", "q_profile_max_ratio", "fd_max_error",
            "monotone_profile")}
        d["passed"] = self.passed
        d["offending"] = self.offending[:10]
        return d


def charted_bound_field(cfg, C):
    """``Q1(p) = log^{n-1}(C / h(p, p0))`` on the neighborhood."""
    n = cfg.n

    def prof(t):
        with np.errstate(divide="ignore"):
            return np.log(C / np.asarray(t, dtype=float)) ** (n - 1)

    return radial_field(np.zeros(n), prof, f"log^{n - 1}({C:.6g}/h)")


def example_distortion_check(cfg, sample_count=100_000, seed=0, fd_points=200, profile_radii=64):
    """Closed-form ``K_O^{n-1} <= Q`` over uniform samples plus the charted bound ``Q <= Q1``.

    ``c1*`` is the reciprocal of the empirical metric-comparison constant on
    ``B_h(0, r0)``; ``C = e r0' c1*`` and ``C1 = (sinh r0 / r0)^{n-1}`` bound
    the spherical mean of ``Q1``.
    """
    if sample_count < 1:
        raise ValidationError("sample_count must be >= 1")
    n = cfg.n
    y = uniform_chart_samples(cfg, sample_count, seed)
    _, norm, jac = gm_family_eval(cfg, y)
    K = outer_dilatation_closed(norm, jac, n)
    Q = dilatation_bound(cfg, y)
    excess = K ** (n - 1) - Q
    worst = np.argsort(excess)[::-1][:10]
    offending = [{"y": y[i].tolist(), "excess": float(excess[i])} for i in worst if excess[i] > 1e-9]
    inner = np.linalg.norm(y, axis=1) <= cfg.glue_radius
    inner_min_q = float(Q[inner].min()) if inner.any() else math.inf

    c1_hat, _ = metric_comparison_constant(cfg.r0, rng=np.random.default_rng(seed + 1), n=n)
    c1_star = 1.0 / c1_hat
    C = math.e * cfg.r0_prime * c1_star
    h = hyp_distance(y, np.zeros(n))
    with np.errstate(divide="ignore"):
        Q1 = np.log(C / h) ** (n - 1)
    q_le_q1 = bool(np.all(Q <= Q1 * (1 + 1e-12)))

    C1 = (math.sinh(cfg.r0) / cfg.r0) ** (n - 1)
    nbhd = cfg.neighborhood()
    field_q1 = charted_bound_field(cfg, C)
    om = sphere_area(n)
    radii = np.linspace(cfg.r0 / profile_radii, cfg.r0, profile_radii) * (1 - 1e-9)
    ratios = []
    for r in radii:
        qstar = sphere_integral(nbhd, float(r), field_q1) / (om * r ** (n - 1))
        ratios.append(qstar / (C1 * math.log(C / r) ** (n - 1)))
    max_ratio = float(max(ratios))

    ms = gm_map_sample(cfg)
    fd_err = 0.0
    gr = cfg.glue_radius
    for p in y[:fd_points]:
        t = np.linalg.norm(p)
        if abs(t - gr) < 1e-3 * cfg.r0_prime or t < 1e-3:
            continue
        fd_err = max(fd_err, float(np.max(np.abs(fd_jacobian(ms.f, p, 1e-5) - ms.jacobian(p)))))

    return DistortionReport(n, cfg.m, sample_count, float(excess.max()), inner_min_q,
                            branch_mismatch(cfg), q_le_q1, c1_star, C, C1,
                            bool(max_ratio <= 1 + 1e-9), max_ratio, fd_err,
                            profile_monotone(cfg), offending)


@dataclass
class EquicontinuityTable:
    deltas: np.ndarray
    displacement: np.ndarray
    bound: np.ndarray
    monotone: bool
    within_bound: bool
    restricted_radius: float
    image_radius: float
    omitted_continuum: dict

    def rows(self):
        return [(float(d), float(v), float(b)) for d, v, b in zip(self.deltas, self.displacement, self.bound)]


def equicontinuity_profile(cfg, m_list, delta_list, directions=256, radial_points=257, restrict=True):
    """``sup_m sup_{h(x, 0) < delta} |g_m(x) - g_m(0)|`` for each ``delta``.

    The family is restricted to the quotient ball of radius ``r0/2``
    (deltas beyond it are clipped).  The sup is taken over a grid of
    directions and radii including the gluing radius of each map.  The
    bound column is ``2 log(2e) tanh(delta/2)``.  ``omitted_continuum``
    describes a closed hemisphere of the sphere halfway between the image
    ball and the unit sphere, which no restricted map attains.
    """
    m_list = [int(m) for m in m_list]
    if any(m < 2 for m in m_list):
        raise ValidationError("every m must be >= 2")
    deltas = np.asarray(delta_list, dtype=float)
    if np.any(np.diff(deltas) >= 0) or np.any(deltas < 0):
        raise ValidationError("delta_list must be decreasing and nonnegative")
    r_star = cfg.r0 / 2.0 if restrict else cfg.r0
    u = _sphere_directions(cfg.n, directions)
    s_max = 2.0 * math.log(2.0 * math.e)
    disp = np.zeros(len(deltas))
    for i, d in enumerate(deltas):
        rho = float(euclidean_radius(min(d, r_star)))
        if rho == 0.0:
            continue
        best = 0.0
        for m in m_list:
            c = cfg.with_m(m)
            t = np.linspace(0.0, rho, radial_points)
            t = np.unique(np.concatenate([t, [c.glue_radius]] if c.glue_radius < rho else [t]))
            t = t[t < rho] if len(t[t < rho]) else t[:1]
            y = (t[:, None, None] * u[None]).reshape(-1, cfg.n)
            img = gm_family_eval(c, y)[0]
            best = max(best, float(np.max(np.linalg.norm(img, axis=1))))
        disp[i] = best
    bound = s_max * euclidean_radius(np.minimum(deltas, r_star))
    img_r = max(float(np.max(radial_profile(cfg.with_m(m),
                                            np.linspace(0, float(euclidean_radius(r_star)), 2049))))
                for m in m_list)
    if img_r < 1.0:
        R = 0.5 * (1.0 + img_r)
        continuum = {"kind": "hemisphere", "radius": R, "diameter": 2.0 * R, "valid": True}
    else:
        continuum = {"kind": "none", "radius": math.nan, "diameter": 0.0, "valid": False}
    monotone = bool(np.all(np.diff(disp) <= 0))
    within = bool(np.all(disp <= bound + 1e-9))
    return EquicontinuityTable(deltas, disp, bound, monotone, within,
                               float(euclidean_radius(r_star)), img_r, continuum)


def _sphere_directions(n, count):
    from .modulus import directions
    return directions(n, count)
