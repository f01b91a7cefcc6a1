"""Hyperbolic volume and geodesic-sphere integrals through a chart.

All integrals are taken in chart coordinates centered at the neighborhood's
base point.  A geodesic sphere of hyperbolic radius ``t`` is the Euclidean
sphere of radius ``rho = tanh(t/2)``; its hyperbolic area element is
``(2/(1-rho^2))^{n-1}`` times the Euclidean one, and the volume element is
``2^n/(1-|x|^2)^n dm``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import DomainError, ValidationError
from .geometry import euclidean_radius, hyp_distance

DEFAULT_BUDGET = 200_000
DEFAULT_SEED = 20240601


def sphere_area(n):
    """``omega_{n-1}``, the area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def hyperbolic_sphere_area(n, r):
    """Area of a geodesic sphere of radius ``r``: ``omega_{n-1} sinh(r)^{n-1}``."""
    return sphere_area(n) * np.sinh(r) ** (n - 1)


def hyperbolic_ball_volume(n, r):
    """Volume of a hyperbolic ball of radius ``r`` (curvature -1)."""
    return sphere_area(n) * integrate.quad(lambda t: np.sinh(t) ** (n - 1), 0.0, r)[0]


# --------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class ScalarField:
    """A nonnegative density evaluated at ball points.

    ``profile`` is set for fields that depend only on the hyperbolic
    distance to ``center``; integrators use it for exact radial quadrature.
    ``breakpoints`` lists radii where a radial field jumps.
    """

    eval: Callable
    label: str = "Q"
    center: Optional[np.ndarray] = None
    profile: Optional[Callable] = None
    breakpoints: tuple = ()

    def __call__(self, x):
        return np.asarray(self.eval(x), dtype=float)

    @property
    def radial(self):
        return self.profile is not None

    def map(self, fn, label=None):
        prof = None if self.profile is None else (lambda t, p=self.profile: fn(p(t)))
        return ScalarField(lambda x: fn(self(x)), label or self.label,
                           self.center, prof, self.breakpoints)

    def __pow__(self, k):
        return self.map(lambda v: v ** k, f"({self.label})^{k}")

    def __mul__(self, c):
        return self.map(lambda v: c * v, f"{c}*{self.label}")

    __rmul__ = __mul__

    def __add__(self, other):
        prof = None
        if self.profile is not None and other.profile is not None and _same_center(self, other):
            prof = lambda t: self.profile(t) + other.profile(t)
        return ScalarField(lambda x: self(x) + other(x), f"{self.label}+{other.label}",
                           self.center, prof, tuple(sorted(set(self.breakpoints) | set(other.breakpoints))))

    def nonfinite_fraction(self, points):
        v = self(points)
        return float(np.mean(~np.isfinite(v)))


def _same_center(a, b):
    if a.center is None or b.center is None:
        return a.center is None and b.center is None
    return bool(np.allclose(a.center, b.center))


def radial_field(center, profile, label="radial", breakpoints=()):
    """Field ``Q(x) = profile(h(x, center))``."""
    center = np.asarray(center, dtype=float)
    return ScalarField(lambda x: profile(hyp_distance(x, center)), label, center,
                       profile, tuple(breakpoints))


def constant_field(c=1.0, center=None):
    prof = lambda t: np.full(np.shape(t), float(c))
    return ScalarField(lambda x: np.full(np.shape(x)[:-1], float(c)), f"const({c})",
                       None if center is None else np.asarray(center, dtype=float), prof)


def indicator_annulus(center, a, b):
    """Indicator of ``a < h(x, center) < b``."""
    return radial_field(center, lambda t: ((t > a) & (t < b)).astype(float),
                        f"1[{a}<h<{b}]", breakpoints=(a, b))


def log_field(center, C, power=1):
    """``log(C/h)^power``; the standard finite-mean-oscillation exemplar for power 1."""
    def prof(t):
        with np.errstate(divide="ignore"):
            return np.log(C / np.asarray(t, dtype=float)) ** power
    return radial_field(center, prof, f"log({C}/h)^{power}")


def inverse_distance_field(center):
    """``1/h(x, center)``; its mean oscillation blows up at the center."""
    def prof(t):
        with np.errstate(divide="ignore"):
            return 1.0 / np.asarray(t, dtype=float)
    return radial_field(center, prof, "1/h")


def field_from_spec(spec, center, n):
    """Build a field from ``{"kind": ..., <params>}`` as used in experiment configs."""
    kind = spec.get("kind")
    if kind == "constant":
        return constant_field(spec.get("c", 1.0), center)
    if kind == "indicator":
        return indicator_annulus(center, spec["a"], spec["b"])
    if kind == "log_fmo":
        return log_field(center, spec.get("C", 1.0), spec.get("power", 1))
    if kind == "log_power":
        return log_field(center, spec.get("C", 1.0), spec.get("power", n - 1))
    if kind == "inverse_distance":
        return inverse_distance_field(center)
    raise ValidationError(f"unknown field kind {kind!r}")


# --------------------------------------------------------------------------
# sphere quadrature


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes on the unit sphere with positive weights summing to ``omega_{n-1}``."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self):
        return self.nodes.shape[1]


def sphere_quadrature(n, size=None, seed=DEFAULT_SEED):
    """Trapezoid rule on the circle (n=2), Gauss x trapezoid product (n=3), MC otherwise."""
    if n == 2:
        m = size or 256
        th = 2.0 * np.pi * (np.arange(m) + 0.5) / m
        nodes = np.column_stack([np.cos(th), np.sin(th)])
        weights = np.full(m, 2.0 * np.pi / m)
    elif n == 3:
        k = size or 24
        z, wz = special.roots_legendre(k)
        m_phi = 2 * k
        phi = 2.0 * np.pi * (np.arange(m_phi) + 0.5) / m_phi
        Z, P = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1.0 - Z ** 2)
        nodes = np.column_stack([(s * np.cos(P)).ravel(), (s * np.sin(P)).ravel(), Z.ravel()])
        weights = (wz[:, None] * np.full(m_phi, 2.0 * np.pi / m_phi)[None, :]).ravel()
    else:
        m = size or 4096
        rng = np.random.default_rng(seed)
        nodes = rng.normal(size=(m, n))
        nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
        weights = np.full(m, sphere_area(n) / m)
    return SphereQuadrature(nodes, weights)


_QUAD_CACHE = {}


def _default_quadrature(n):
    if n not in _QUAD_CACHE:
        _QUAD_CACHE[n] = sphere_quadrature(n)
    return _QUAD_CACHE[n]


def _check_radius(nbhd, r, strict=True):
    ok = 0 < r < nbhd.radius if strict else 0 < r <= nbhd.radius + 1e-12
    if not ok:
        raise DomainError(f"radius {r} outside (0, {nbhd.radius})")


def sphere_integral(nbhd, r, Q, quad=None, measure="hyperbolic", _check=True):
    """Integral of ``Q`` over the geodesic sphere ``S~(p0, r)``.

    ``measure`` selects hyperbolic (default) or Euclidean chart area.
    """
    if _check:
        _check_radius(nbhd, r, strict=False)
    n = nbhd.n
    rho = float(euclidean_radius(r))
    if Q.radial and _centered(nbhd, Q):
        mean = float(Q.profile(np.array(r)))
        area = sphere_area(n) * rho ** (n - 1)
    else:
        quad = quad or _default_quadrature(n)
        vals = Q(nbhd.to_ball(rho * quad.nodes))
        mean = float(quad.weights @ vals) / sphere_area(n)
        area = sphere_area(n) * rho ** (n - 1)
    if measure == "hyperbolic":
        area *= (2.0 / (1.0 - rho * rho)) ** (n - 1)
    elif measure != "euclidean":
        raise ValidationError(f"unknown measure {measure!r}")
    return mean * area


def _centered(nbhd, Q):
    return Q.center is not None and np.allclose(Q.center, nbhd.center.rep, atol=1e-12)


def shell_integral(nbhd, a, b, Q, measure="hyperbolic", weight=None, quad=None):
    """``int_a^b weight(t) * sphere_integral(t) dt`` by adaptive quadrature in ``t``."""
    if b <= a:
        return 0.0
    pts = [p for p in Q.breakpoints if a < p < b]
    def f(t):
        if t <= 0.0:
            return 0.0
        v = sphere_integral(nbhd, t, Q, quad=quad, measure=measure, _check=False)
        return v * (1.0 if weight is None else float(weight(t)))
    val, _ = integrate.quad(f, a, b, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-11)
    return float(val)


# --------------------------------------------------------------------------
# volume integrals


@dataclass(frozen=True)
class BallIntegral:
    value: float
    stderr: float
    method: str
    seed: Optional[int] = None
    samples: int = 0

    @property
    def rel_err(self):
        return self.stderr / abs(self.value) if self.value else 0.0


class _RadialSampler:
    """Stratified sampler of hyperbolic radius with density proportional to ``sinh^{n-1}``.

    The inverse CDF is piecewise linear on a fine grid, so the density used
    for the importance weights is exactly the piecewise-constant one that
    was sampled.
    """

    def __init__(self, n, r0, grid=4097):
        t = np.linspace(0.0, r0, grid)
        f = np.sinh(t) ** (n - 1)
        F = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))])
        self.total = F[-1]
        self.t = t
        self.F = F / F[-1]
        self.pdf = np.diff(self.F) / np.diff(t)
        self.n = n

    def draw(self, u):
        t = np.interp(u, self.F, self.t)
        k = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.pdf) - 1)
        return t, self.pdf[k]


def _volume_samples(nbhd, r0, budget, rng):
    n = nbhd.n
    sampler = _RadialSampler(n, r0)
    u = (np.arange(budget) + rng.uniform(size=budget)) / budget
    t, pdf = sampler.draw(u)
    d = rng.normal(size=(budget, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    y = np.tanh(t / 2.0)[:, None] * d
    # weight = (area element at t) / (sampling density of t)
    w = sphere_area(n) * np.sinh(t) ** (n - 1) / pdf
    return t, y, w


def ball_integral(nbhd, r0, Q, budget=DEFAULT_BUDGET, seed=DEFAULT_SEED, method="auto"):
    """``int_{B~(p0, r0)} Q dv`` with the hyperbolic volume ``2^n dm / (1-|x|^2)^n``.

    ``method="mc"`` uses radius-stratified Monte Carlo (one draw per stratum,
    standard error from adjacent-stratum pairs); ``"radial"`` integrates
    sphere integrals over the radius, exact up to quadrature error.
    ``"auto"`` picks ``radial`` for radial fields centered at ``p0``.
    """
    if budget is None or budget <= 0:
        raise ValidationError("integration budget must be positive")
    _check_radius(nbhd, r0, strict=False)
    if method == "auto":
        method = "radial" if (Q.radial and _centered(nbhd, Q)) else "mc"
    if method == "radial":
        return BallIntegral(shell_integral(nbhd, 0.0, r0, Q), 0.0, "radial")
    if method != "mc":
        raise ValidationError(f"unknown method {method!r}")
    rng = np.random.default_rng(seed)
    budget = int(budget) + (int(budget) % 2)
    _, y, w = _volume_samples(nbhd, r0, budget, rng)
    X = w * Q(nbhd.to_ball(y))
    value = float(np.mean(X))
    pairs = X.reshape(-1, 2)
    stderr = float(np.sqrt(np.sum((pairs[:, 0] - pairs[:, 1]) ** 2)) / budget)
    return BallIntegral(value, stderr, "mc", seed, budget)


# --------------------------------------------------------------------------
# Fubini sandwich


def fubini_bracket(n, r0):
    """Constant bracket ``[2^{n-1}, 2^n C(r0)]`` for volume over Euclidean-area shells.

    ``C(r0) = 1 / (2 (1 - rho0^2)^{n-1})`` with ``rho0 = tanh(r0/2)``.
    """
    rho0 = float(euclidean_radius(r0))
    C = 1.0 / (2.0 * (1.0 - rho0 ** 2) ** (n - 1))
    return 2.0 ** (n - 1), 2.0 ** n * C


@dataclass(frozen=True)
class FubiniResult:
    volume: BallIntegral
    shell_euclidean: float
    shell_hyperbolic: float
    bracket: tuple

    @property
    def ratio(self):
        return self.volume.value / self.shell_euclidean if self.shell_euclidean else float("nan")

    @property
    def hyperbolic_ratio(self):
        return self.volume.value / self.shell_hyperbolic if self.shell_hyperbolic else float("nan")

    @property
    def inside(self):
        if self.shell_euclidean == 0.0:
            return self.volume.value == 0.0
        lo, hi = self.bracket
        return lo * self.shell_euclidean <= self.volume.value <= hi * self.shell_euclidean

    @property
    def C1_hat(self):
        """Smallest upper constant consistent with this sample: ``V / S``."""
        return self.ratio

    @property
    def C2_hat(self):
        return self.ratio


def fubini_sandwich(nbhd, r0, Q, budget=DEFAULT_BUDGET, seed=DEFAULT_SEED, method="mc"):
    """Volume integral against the radial integral of Euclidean-area sphere integrals.

    The volume side is computed independently of the shell side (Monte
    Carlo by default), so ``V/S`` landing inside :func:`fubini_bracket` is
    a genuine check.  The hyperbolic-area shell integral is also reported;
    by the coarea formula it equals ``V``.
    """
    _check_radius(nbhd, r0, strict=False)
    V = ball_integral(nbhd, r0, Q, budget=budget, seed=seed, method=method)
    S_e = shell_integral(nbhd, 0.0, r0, Q, measure="euclidean")
    S_h = shell_integral(nbhd, 0.0, r0, Q, measure="hyperbolic")
    return FubiniResult(V, S_e, S_h, fubini_bracket(nbhd.n, r0))


@dataclass(frozen=True)
class FubiniConstants:
    """Empirical sandwich constants over a field battery (hyperbolic sphere measure).

    ``lower * S <= V <= upper * S`` held for every battery member, with each
    ``V`` widened by three standard errors.
    """

    lower: float
    upper: float
    results: tuple

    @property
    def M1(self):
        return 1.0 / self.lower

    @property
    def M2(self):
        return self.upper / self.lower ** 2


def fubini_constants(nbhd, r0, battery, budget=DEFAULT_BUDGET, seed=DEFAULT_SEED):
    results = []
    lo, hi = np.inf, 0.0
    for k, Q in enumerate(battery):
        V = ball_integral(nbhd, r0, Q, budget=budget, seed=seed + k, method="mc")
        S = shell_integral(nbhd, 0.0, r0, Q, measure="hyperbolic")
        if S <= 0:
            continue
        lo = min(lo, (V.value - 3 * V.stderr) / S)
        hi = max(hi, (V.value + 3 * V.stderr) / S)
        results.append((Q.label, V, S))
    if not results:
        raise ValidationError("battery has no field with a positive shell integral")
    return FubiniConstants(float(lo), float(hi), tuple(results))


# --------------------------------------------------------------------------
# spherical means


@dataclass(frozen=True)
class QStats:
    q_mean: float
    q_norm: float
    q_tilde: float
    identity_residual: float


def q_stats(nbhd, r, Q):
    """Spherical mean of ``Q`` and the ``L_{n-1}`` norm of ``Q`` on ``S~(p0, r)``.

    ``q_mean = int_S Q / (omega r^{n-1})``, ``q_norm = (int_S Q^{n-1})^{1/(n-1)}``
    and ``q_tilde`` is the mean of ``Q^{n-1}``.  ``identity_residual`` is the
    relative gap in ``1/q_norm = omega^{-1/(n-1)} / (r q_tilde^{1/(n-1)})``.
    """
    _check_radius(nbhd, r)
    n = nbhd.n
    om = sphere_area(n)
    I1 = sphere_integral(nbhd, r, Q)
    Ik = I1 if n == 2 else sphere_integral(nbhd, r, Q ** (n - 1))
    q_mean = I1 / (om * r ** (n - 1))
    q_norm = Ik ** (1.0 / (n - 1))
    q_tilde = Ik / (om * r ** (n - 1))
    if q_norm > 0 and np.isfinite(q_norm):
        lhs = 1.0 / q_norm
        rhs = om ** (-1.0 / (n - 1)) / (r * q_tilde ** (1.0 / (n - 1)))
        resid = abs(lhs - rhs) / abs(lhs)
    else:
        resid = 0.0
    return QStats(q_mean, q_norm, q_tilde, resid)


# --------------------------------------------------------------------------
# mean oscillation


@dataclass(frozen=True)
class FmoProfile:
    eps: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    slope: float
    bounded: bool
    seed: Optional[int] = None

    def rows(self):
        return [(float(e), float(v), float(s)) for e, v, s in zip(self.eps, self.values, self.stderr)]


def _radial_oscillation(n, eps, profile):
    w = lambda t: np.sinh(t) ** (n - 1)
    vol = integrate.quad(w, 0.0, eps)[0]
    mean = integrate.quad(lambda t: w(t) * profile(t), 0.0, eps, limit=400)[0] / vol
    dev = lambda t: w(t) * abs(float(profile(t)) - mean)
    # the deviation has a kink where profile crosses the mean; locate it for quad
    grid = np.linspace(eps * 1e-9, eps, 2001)
    sgn = np.sign(profile(grid) - mean)
    kinks = grid[1:][np.nonzero(np.diff(sgn))[0]].tolist()
    osc = integrate.quad(dev, 0.0, eps, points=kinks or None, limit=400)[0] / vol
    return osc


def fmo_profile(nbhd, Q, eps_list, budget=DEFAULT_BUDGET, seed=DEFAULT_SEED, slope_tol=0.25):
    """Mean oscillation ``(1/v(B_eps)) int_{B_eps} |Q - mean_eps Q| dv`` for each ``eps``.

    The verdict ``bounded`` says the least-squares slope of ``log osc``
    against ``log(1/eps)`` stays below ``slope_tol``; a field with finite
    mean oscillation has slope ~0, a ``1/h`` singularity has slope 1.
    """
    eps = np.asarray(eps_list, dtype=float)
    if np.any(np.diff(eps) >= 0):
        raise ValidationError("eps_list must be strictly decreasing")
    for e in eps:
        _check_radius(nbhd, e)
    vals, errs = [], []
    n = nbhd.n
    for k, e in enumerate(eps):
        if Q.radial and _centered(nbhd, Q):
            vals.append(_radial_oscillation(n, e, Q.profile))
            errs.append(0.0)
            continue
        rng = np.random.default_rng(seed + k)
        m = int(budget) + (int(budget) % 2)
        _, y, w = _volume_samples(nbhd, e, m, rng)
        q = Q(nbhd.to_ball(y))
        mean = np.sum(w * q) / np.sum(w)
        dev = np.abs(q - mean)
        osc = np.sum(w * dev) / np.sum(w)
        vals.append(float(osc))
        errs.append(float(np.std(w * dev / np.mean(w)) / np.sqrt(m)))
    vals = np.asarray(vals)
    errs = np.asarray(errs)
    slope = _log_slope(eps, vals)
    return FmoProfile(eps, vals, errs, slope, bool(slope <= slope_tol), seed)


def _log_slope(eps, vals):
    if len(eps) < 2:
        return 0.0
    x = np.log(1.0 / eps)
    y = np.log(np.maximum(vals, 1e-300))
    if np.all(vals <= 1e-14):
        return 0.0
    return float(np.polyfit(x, y, 1)[0])
