"""Moduli of curve families: analytic baselines, a grid solver, and the
extremal-weight inequalities for ring and lower Q-mappings.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, sparse

from .errors import ConvergenceError, DomainError, ValidationError
from .geometry import euclidean_radius
from .measures import (
    q_stats,
    shell_integral,
    sphere_area,
    sphere_integral,
)

MAX_CELLS = 2 ** 22


def ring_modulus_exact(r1, r2, n):
    """Modulus of the curve family joining the boundary spheres of ``r1 < |x| < r2``."""
    if not 0 < r1 < r2:
        raise DomainError("ring radii must satisfy 0 < r1 < r2")
    return sphere_area(n) * math.log(r2 / r1) ** (1 - n)


# --------------------------------------------------------------------------
# curve families and grids


@dataclass(frozen=True)
class CurveFamily:
    """Polylines in the ball; lengths measured in ``metric`` (hyperbolic or euclidean)."""

    curves: tuple
    metric: str = "hyperbolic"

    def __post_init__(self):
        if self.metric not in ("hyperbolic", "euclidean"):
            raise ValidationError(f"unknown metric {self.metric!r}")
        curves = []
        for c in self.curves:
            c = np.asarray(c, dtype=float)
            if c.ndim != 2 or c.shape[0] < 2:
                raise ValidationError("every curve needs at least two vertices")
            if np.any(np.linalg.norm(c, axis=1) >= 1.0):
                raise DomainError("curve vertices must lie strictly inside the unit ball")
            if not np.sum(np.linalg.norm(np.diff(c, axis=0), axis=1)) > 0:
                raise ValidationError("curve has zero length")
            curves.append(c)
        object.__setattr__(self, "curves", tuple(curves))

    def __len__(self):
        return len(self.curves)

    @property
    def n(self):
        return self.curves[0].shape[1] if self.curves else None

    def lengths(self):
        return np.array([_polyline_length(c, self.metric) for c in self.curves])

    def to_dict(self):
        return {"metric": self.metric, "curves": [c.tolist() for c in self.curves]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(np.asarray(c, dtype=float) for c in d["curves"]), d.get("metric", "hyperbolic"))


def _polyline_length(c, metric):
    p, q = c[:-1], c[1:]
    if metric == "euclidean":
        return float(np.sum(np.linalg.norm(q - p, axis=1)))
    return float(np.sum(_segment_hyp_length(p, q)))


def _segment_hyp_length(p, q):
    # exact integral of 2/(1-|x|^2) along the chord p -> q:
    # 1 - |p + t d|^2 = a (r^2 - (t + b/a)^2) with a = |d|^2, b = p.d
    d = q - p
    a = np.sum(d * d, axis=-1)
    b = np.sum(p * d, axis=-1)
    c = 1.0 - np.sum(p * p, axis=-1)
    out = np.zeros_like(a)
    ok = a > 0
    a, b, c = a[ok], b[ok], c[ok]
    r = np.sqrt(c / a + (b / a) ** 2)
    u0, u1 = b / a, 1.0 + b / a
    out[ok] = 2.0 / (np.sqrt(a) * r) * (np.arctanh(u1 / r) - np.arctanh(u0 / r))
    return out


def directions(n, count):
    """Deterministic, well-spread unit vectors (equal angles / Fibonacci sphere / Halton)."""
    if n == 2:
        th = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(th), np.sin(th)])
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        phi = np.pi * (1.0 + 5.0 ** 0.5) * k
        s = np.sqrt(1.0 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    from scipy.stats import qmc
    from scipy.special import ndtri
    u = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    v = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def radial_family(n, rho1, rho2, count=None, vertices=2, metric="hyperbolic"):
    """Radial segments from ``|x| = rho1`` to ``|x| = rho2`` along ``count`` directions.

    These are geodesics through the center, a sub-family of the curves
    joining the two spheres.
    """
    if count is None:
        count = 512 if n == 2 else 2048
    u = directions(n, count)
    s = np.linspace(rho1, rho2, vertices)
    curves = tuple(s[:, None] * d[None, :] for d in u)
    return CurveFamily(curves, metric)


def coverage_half_width(n, outer, count, cells):
    """Box half-width whose cell edge equals the mean ray spacing on ``|x| = outer``.

    With finer cells, some cells near the outer sphere are missed by every
    ray and the sub-family value drops; with coarser cells the
    piecewise-constant density inflates it.  Matching the two scales
    balances both effects.
    """
    spacing = (sphere_area(n) / count) ** (1.0 / (n - 1)) * outer
    return 0.5 * cells * spacing


def ring_family_and_box(n, ratio, count=None, cells=None, half_width=0.5):
    """Radial family of a ring with radius ratio ``ratio`` laid out in ``[-half_width, half_width]^n``.

    The ring is scaled so the grid obeys :func:`coverage_half_width`; the
    modulus of a ring depends on the ratio alone.
    """
    if not ratio > 1:
        raise DomainError("ring ratio must exceed 1")
    count = (512 if n == 2 else 2048) if count is None else count
    cells = (256 if n == 2 else 128) if cells is None else cells
    outer = half_width * half_width / coverage_half_width(n, half_width, count, cells)
    outer = min(outer, half_width / 1.01)
    fam = radial_family(n, outer / ratio, outer, count=count)
    return fam, GridBox.cube(n, half_width, cells)


@dataclass(frozen=True)
class GridBox:
    lo: np.ndarray
    hi: np.ndarray
    shape: tuple

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        shape = tuple(int(s) for s in np.broadcast_to(self.shape, lo.shape))
        if np.any(hi <= lo):
            raise ValidationError("grid box must have hi > lo")
        if int(np.prod(shape)) > MAX_CELLS:
            raise ValidationError(f"grid of {np.prod(shape)} cells exceeds the cap {MAX_CELLS}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def cube(cls, n, half_width, cells, center=None):
        c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        return cls(c - half_width, c + half_width, (cells,) * n)

    @property
    def n(self):
        return len(self.shape)

    @property
    def h(self):
        return (self.hi - self.lo) / np.asarray(self.shape)

    def centers(self, flat_index):
        idx = np.array(np.unravel_index(flat_index, self.shape)).T
        return self.lo + (idx + 0.5) * self.h

    def cell_volumes(self, flat_index, metric, strict=True):
        """Midpoint-rule volumes; cells centered outside the ball get ``inf`` unless ``strict``."""
        base = float(np.prod(self.h))
        if metric == "euclidean":
            return np.full(len(flat_index), base)
        c = self.centers(flat_index)
        s = 1.0 - np.sum(c * c, axis=1)
        if strict and np.any(s <= 0):
            raise DomainError("a touched grid cell has its center outside the unit ball")
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s > 0, base * (2.0 / np.maximum(s, 1e-300)) ** self.n, np.inf)


@dataclass
class GridField:
    """Nonnegative density on the cells of ``box`` with matching cell volumes."""

    box: GridBox
    rho: np.ndarray
    vol_weights: np.ndarray

    def energy(self, n=None):
        n = self.box.n if n is None else n
        return float(np.sum(self.vol_weights * self.rho ** n))


def traversal_matrix(box, family):
    """Sparse ``(curves x cells)`` matrix of metric lengths of each curve inside each cell."""
    n = box.n
    h = box.h
    seg_p, seg_q, seg_curve = [], [], []
    for ci, c in enumerate(family.curves):
        if c.shape[1] != n:
            raise ValidationError("curve dimension does not match the grid")
        if np.any(c < box.lo) or np.any(c > box.hi):
            raise DomainError("curve leaves the grid box")
        seg_p.append(c[:-1])
        seg_q.append(c[1:])
        seg_curve.append(np.full(len(c) - 1, ci))
    P = np.concatenate(seg_p)
    Qp = np.concatenate(seg_q)
    curve_of = np.concatenate(seg_curve)
    S = len(P)
    cp = (P - box.lo) / h
    cq = (Qp - box.lo) / h

    seg_ids = [np.arange(S), np.arange(S)]
    ts = [np.zeros(S), np.ones(S)]
    for k in range(n):
        a = np.minimum(cp[:, k], cq[:, k])
        b = np.maximum(cp[:, k], cq[:, k])
        jlo = np.floor(a).astype(np.int64) + 1
        jhi = np.ceil(b).astype(np.int64) - 1
        cnt = np.maximum(0, jhi - jlo + 1)
        total = int(cnt.sum())
        if total == 0:
            continue
        sid = np.repeat(np.arange(S), cnt)
        offs = np.repeat(np.cumsum(cnt) - cnt, cnt)
        j = jlo[sid] + (np.arange(total) - offs)
        denom = (cq[:, k] - cp[:, k])[sid]
        seg_ids.append(sid)
        ts.append((j - cp[sid, k]) / denom)
    sid = np.concatenate(seg_ids)
    t = np.concatenate(ts)
    order = np.lexsort((t, sid))
    sid, t = sid[order], t[order]
    same = sid[1:] == sid[:-1]
    s_id = sid[:-1][same]
    t0 = t[:-1][same]
    t1 = t[1:][same]
    keep = t1 > t0
    s_id, t0, t1 = s_id[keep], t0[keep], t1[keep]

    d = Qp[s_id] - P[s_id]
    a_pt = P[s_id] + t0[:, None] * d
    b_pt = P[s_id] + t1[:, None] * d
    mid = 0.5 * (a_pt + b_pt)
    idx = np.floor((mid - box.lo) / h).astype(np.int64)
    idx = np.clip(idx, 0, np.asarray(box.shape) - 1)
    flat = np.ravel_multi_index(idx.T, box.shape)
    if family.metric == "euclidean":
        length = np.linalg.norm(b_pt - a_pt, axis=1)
    else:
        length = _segment_hyp_length(a_pt, b_pt)
    rows = curve_of[s_id]
    cols_used, col_idx = np.unique(flat, return_inverse=True)
    A = sparse.csr_matrix((length, (rows, col_idx)), shape=(len(family), len(cols_used)))
    A.sum_duplicates()
    return A, cols_used


# --------------------------------------------------------------------------
# solver


@dataclass(frozen=True)
class Certificate:
    objective: float
    dual_bound: float
    max_violation: float
    iterations: int

    @property
    def gap(self):
        return (self.objective - self.dual_bound) / max(abs(self.objective), 1e-300)

    def to_dict(self):
        return {"objective": self.objective, "dual_bound": self.dual_bound,
                "max_violation": self.max_violation, "iterations": self.iterations}


@dataclass
class ModulusResult:
    value: float
    field: GridField
    duals: np.ndarray
    certificate: Certificate

    def to_dict(self):
        return {"value": self.value, "duals": self.duals.tolist(),
                "certificate": self.certificate.to_dict()}


class _Dual:
    """Concave dual ``g(lam) = sum lam - (n-1) sum w rho(lam)^n`` of the modulus program."""

    def __init__(self, A, w, n):
        self.A = A
        self.AT = A.T.tocsr()
        self.w = w
        self.n = n

    def rho(self, lam):
        s = self.AT @ lam
        return (np.maximum(s, 0.0) / (self.n * self.w)) ** (1.0 / (self.n - 1))

    def value_grad(self, lam):
        r = self.rho(lam)
        g = lam.sum() - (self.n - 1) * np.dot(self.w, r ** self.n)
        grad = 1.0 - self.A @ r
        return g, grad

    def neg(self, lam):
        g, grad = self.value_grad(lam)
        return -g, -grad


def modulus_solve(box, family, n=None, tol=1e-6, max_iter=20000, chunk=500):
    """Discrete modulus ``min sum w_i rho_i^n`` s.t. ``sum_i rho_i l_{i,gamma} >= 1``.

    Maximizes the concave dual over per-curve multipliers ``lam >= 0``
    (quasi-Newton ascent with line search, L-BFGS-B) and recovers the
    primal density in closed form,
    ``rho_i = (sum_gamma lam_gamma l_{i,gamma} / (n w_i))^{1/(n-1)}``.
    The returned density is that recovery rescaled to be exactly feasible,
    so ``value`` is an upper bound on the discrete optimum and the
    certificate's ``dual_bound`` a lower bound.  Stops when the relative gap
    and the primal violation of the unscaled recovery are both ``<= tol``.
    """
    n = box.n if n is None else n
    if n < 2:
        raise ValidationError("modulus needs n >= 2")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    total_cells = int(np.prod(box.shape))
    if len(family) == 0:
        rho = np.zeros(box.shape)
        w = np.full(box.shape, float(np.prod(box.h)))
        cert = Certificate(0.0, 0.0, 0.0, 0)
        return ModulusResult(0.0, GridField(box, rho, w), np.zeros(0), cert)

    A, cols = traversal_matrix(box, family)
    w = box.cell_volumes(cols, family.metric)
    if np.any(np.asarray(A.sum(axis=1)).ravel() <= 0):
        raise ValidationError("a curve has zero length inside the grid")
    dual = _Dual(A, w, n)

    # solo multipliers: the optimum for each curve on its own, scaled down by overlap
    row_pow = A.power(n / (n - 1.0)) @ (1.0 / (n * w)) ** (1.0 / (n - 1))
    lam_solo = row_pow ** (-(n - 1))
    overlap = float(np.mean(np.asarray((A > 0).sum(axis=0)).ravel()))
    lam = lam_solo / max(overlap, 1.0) ** (n - 1)

    bounds = [(0.0, None)] * len(lam)
    iters = 0
    best = None
    while True:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = optimize.minimize(dual.neg, lam, jac=True, method="L-BFGS-B", bounds=bounds,
                                    options={"maxiter": chunk, "maxcor": 30, "ftol": 1e-16,
                                             "gtol": 1e-13, "maxfun": 4 * chunk})
        lam = res.x
        iters += int(res.nit)
        cert, rho_feas = _certificate(dual, lam, w, n, iters)
        if best is None or cert.gap < best[0].gap:
            best = (cert, rho_feas, lam.copy())
        if cert.gap <= tol and cert.max_violation <= tol:
            break
        if iters >= max_iter or res.nit == 0:
            cert, rho_feas, lam = best
            if cert.gap <= tol and cert.max_violation <= tol:
                break
            raise ConvergenceError(
                f"modulus solver stopped at relative gap {cert.gap:.3e} "
                f"(violation {cert.max_violation:.3e}) after {iters} iterations",
                {**cert.to_dict(), "gap": cert.gap})

    rho_full = np.zeros(total_cells)
    rho_full[cols] = rho_feas
    w_full = box.cell_volumes(np.arange(total_cells), family.metric, strict=False)
    w_full[cols] = w
    gf = GridField(box, rho_full.reshape(box.shape), w_full.reshape(box.shape))
    return ModulusResult(cert.objective, gf, lam, cert)


def _certificate(dual, lam, w, n, iters):
    g, grad = dual.value_grad(lam)
    r = dual.rho(lam)
    line = dual.A @ r
    viol = float(np.max(np.maximum(0.0, 1.0 - line)))
    m = float(line.min())
    if m <= 0:
        return Certificate(np.inf, float(g), viol, iters), r
    r_feas = r / m
    obj = float(np.dot(w, r_feas ** n))
    return Certificate(obj, float(g), viol, iters), r_feas


# --------------------------------------------------------------------------
# weighted infimum over a finite measure space


@dataclass(frozen=True)
class DiscreteMeasureSpace:
    """Atoms with weights ``mu_i > 0`` carrying a positive function ``phi``."""

    mu: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if mu.shape != phi.shape or mu.ndim != 1 or mu.size == 0:
            raise ValidationError("mu and phi must be nonempty 1-d arrays of equal length")
        if np.any(mu <= 0) or not np.isfinite(mu.sum()):
            raise ValidationError("atom weights must be positive and finite")
        if np.any(phi <= 0):
            raise DomainError("phi must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "phi", phi)

    def objective(self, alpha, q):
        return float(np.sum(self.mu * self.phi * np.asarray(alpha) ** q))


def weighted_inf_integral(space, q):
    """``inf { int phi alpha^q dmu : int alpha dmu = 1, alpha >= 0 }`` and its minimizer.

    The value is ``(int phi^{-lam} dmu)^{-1/lam}`` with ``lam = 1/(q-1)``,
    attained at ``alpha = phi^{-lam} / int phi^{-lam} dmu``.
    """
    if not q > 1:
        raise DomainError("q must exceed 1")
    lam = 1.0 / (q - 1.0)
    p = space.phi ** (-lam)
    Z = float(np.sum(space.mu * p))
    return Z ** (-1.0 / lam), p / Z


# --------------------------------------------------------------------------
# extremal weights


@dataclass
class Eta0:
    I: float
    degenerate: bool
    n: int
    r1: float
    r2: float
    q_profile: Callable

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.degenerate:
            return np.zeros_like(r)
        q = np.asarray(self.q_profile(r), dtype=float)
        with np.errstate(divide="ignore"):
            return 1.0 / (self.I * r * q ** (1.0 / (self.n - 1)))

    def normalization(self):
        if self.degenerate:
            return 0.0
        return integrate.quad(lambda r: float(self(r)), self.r1, self.r2, limit=400,
                              epsabs=1e-14, epsrel=1e-12)[0]


def _reciprocal_integrand(q_profile, n):
    def f(r):
        q = float(q_profile(r))
        if r <= 0 or q <= 0:
            return np.inf
        return 1.0 / (r * q ** (1.0 / (n - 1)))
    return f


def eta0_weight(q_profile, r1, r2, n):
    """``I = int_{r1}^{r2} dr / (r q^{1/(n-1)})`` and ``eta0 = 1/(I r q^{1/(n-1)})``.

    An infinite ``I`` (the integrand blows up non-integrably, overflows or
    ``q`` vanishes) returns a degenerate weight ``eta0 == 0``.
    """
    if not 0 <= r1 < r2:
        raise DomainError("need 0 <= r1 < r2")
    f = _reciprocal_integrand(q_profile, n)
    I = _improper_integral(f, r1, r2)
    if I == 0.0:
        raise ValidationError("I = 0: the q profile is infinite on (r1, r2)")
    degenerate = not np.isfinite(I)
    return Eta0(float(I), degenerate, n, r1, r2, q_profile)


def _improper_integral(f, a, b):
    """Integral that reports ``inf`` on divergence instead of a garbage number."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            try:
                probe = np.linspace(a, b, 257)[1:-1]
                if not np.all(np.isfinite([f(x) for x in probe])):
                    return np.inf
                val, err = integrate.quad(f, a, b, limit=400, epsabs=0.0, epsrel=1e-11)
            except (integrate.IntegrationWarning, OverflowError, ZeroDivisionError):
                return np.inf
    if not np.isfinite(val) or val > 1e300:
        return np.inf
    if a == 0.0:
        # confirm convergence at the left end by shrinking the cut-off
        tails = [integrate.quad(f, a + (b - a) * 10.0 ** (-k), b, limit=400)[0] for k in (6, 9, 12)]
        if tails[-1] - tails[-2] > 2 * max(tails[-2] - tails[-3], 1e-12) and tails[-1] - tails[-2] > 1e-6:
            return np.inf
    return float(val)


def q_profile_of(nbhd, Q):
    """``r -> q_{p0}(r)``, the normalized spherical mean of ``Q``."""
    om = sphere_area(nbhd.n)
    n = nbhd.n
    return lambda r: sphere_integral(nbhd, float(r), Q, _check=False) / (om * float(r) ** (n - 1))


# --------------------------------------------------------------------------
# lower-bound integral


@dataclass(frozen=True)
class LowerBound:
    value: float
    equivalent_form: float
    residual: float


def lower_bound_integral(nbhd, Q, eps, eps0):
    """``int_eps^eps0 dr / ||Q||_{n-1}(r)`` and its mean-value form.

    The second form is ``omega^{-1/(n-1)} int dr / (r q~^{1/(n-1)})`` with
    ``q~`` the spherical mean of ``Q^{n-1}``; the two must agree.
    A non-integrable norm profile makes the bound ``+inf``.
    """
    if not 0 < eps < eps0 <= nbhd.radius + 1e-12:
        raise DomainError("need 0 < eps < eps0 <= neighborhood radius")
    n = nbhd.n
    om = sphere_area(n)

    def f_norm(r):
        return 1.0 / q_stats_nocheck(nbhd, r, Q).q_norm

    def f_mean(r):
        return 1.0 / (r * q_stats_nocheck(nbhd, r, Q).q_tilde ** (1.0 / (n - 1)))

    a = _improper_integral(f_norm, eps, eps0)
    b = _improper_integral(f_mean, eps, eps0)
    if not np.isfinite(a) or not np.isfinite(b):
        return LowerBound(np.inf, np.inf, 0.0)
    b *= om ** (-1.0 / (n - 1))
    resid = abs(a - b) / max(abs(a), 1e-300)
    if resid > 1e-6:
        raise ValidationError(f"mean-value form disagrees (relative residual {resid:.2e})")
    return LowerBound(a, b, resid)


def q_stats_nocheck(nbhd, r, Q):
    if r >= nbhd.radius:
        r = nbhd.radius * (1 - 1e-15)
    return q_stats(nbhd, r, Q)


# --------------------------------------------------------------------------
# ring Q-mapping inequality


def eta_integral(eta, r1, r2):
    return integrate.quad(lambda r: float(eta(r)), r1, r2, limit=400, epsabs=1e-14, epsrel=1e-12)[0]


def weighted_annulus_integral(nbhd, Q, eta, r1, r2):
    """``int_{A~(p0, r1, r2)} Q eta^n(h(p, p0)) dv`` by the coarea formula."""
    n = nbhd.n
    return shell_integral(nbhd, r1, r2, Q, weight=lambda t: float(eta(t)) ** n)


@dataclass
class RingReport:
    lhs: float
    rhs: float
    passed: bool
    margin: float
    discretization_tol: float
    certificate: Optional[Certificate]
    eta_integral: float
    sandwich: dict = field(default_factory=dict)

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "passed": self.passed, "margin": self.margin,
                "discretization_tol": self.discretization_tol, "eta_integral": self.eta_integral,
                "certificate": None if self.certificate is None else self.certificate.to_dict(),
                "sandwich": self.sandwich}


def image_family(nbhd, map_sampler, r1, r2, count=None, vertices=33):
    """Images under ``map_sampler`` of radial segments between ``S~(p0, r1)`` and ``S~(p0, r2)``.

    ``map_sampler`` takes chart points (shape ``(m, n)``) to ball points.
    """
    n = nbhd.n
    rho1, rho2 = float(euclidean_radius(r1)), float(euclidean_radius(r2))
    fam = radial_family(n, rho1, rho2, count=count, vertices=vertices)
    pts = np.concatenate(fam.curves)
    img = np.asarray(map_sampler(pts), dtype=float).reshape(len(fam), vertices, n)
    return CurveFamily(tuple(img), "hyperbolic")


def sandwich_margins(nbhd, Q, r1, r2, etas, constants):
    """Both sides of ``omega/I^{n-1} <= M1 int Q eta0^n <= M2 int Q eta^n`` for each ``eta``.

    ``constants`` carries the empirical Fubini constants of the
    neighborhood (``M1 = 1/lower``, ``M2 = upper/lower^2``).
    """
    n = nbhd.n
    qp = q_profile_of(nbhd, Q)
    e0 = eta0_weight(qp, r1, r2, n)
    base = sphere_area(n) / e0.I ** (n - 1) if not e0.degenerate else 0.0
    mid = constants.M1 * weighted_annulus_integral(nbhd, Q, e0, r1, r2)
    rows = {}
    for name, eta in etas.items():
        s = eta_integral(eta, r1, r2)
        if s < 1.0 - 1e-9:
            raise ValidationError(f"eta {name!r} integrates to {s:.6g} < 1")
        right = constants.M2 * weighted_annulus_integral(nbhd, Q, eta, r1, r2)
        rows[name] = {"left": base, "middle": mid, "right": right,
                      "ordered": bool(base <= mid and mid <= right)}
    return {"I": e0.I, "M1": constants.M1, "M2": constants.M2, "rows": rows}


def ring_inequality_check(nbhd, map_sampler, Q, r1, r2, eta, cells=None, count=None,
                          vertices=33, tol=1e-6, discretization_tol=0.05,
                          etas=None, constants=None, box_margin=1.02):
    """Compare the solver modulus of ``f(Gamma(S1, S2))`` with ``int_A Q eta^n dv``.

    The left side is a discretized lower-bound sub-family solved on a grid,
    so it carries a discretization error; the check passes when
    ``lhs <= rhs * (1 + discretization_tol)``.  ``margin`` is ``rhs - lhs``.
    """
    if not 0 < r1 < r2 < nbhd.radius + 1e-12:
        raise DomainError("need 0 < r1 < r2 <= neighborhood radius")
    s = eta_integral(eta, r1, r2)
    if s < 1.0 - 1e-9:
        raise ValidationError(f"eta integrates to {s:.6g} over (r1, r2); need >= 1")
    cells = (256 if nbhd.n == 2 else 128) if cells is None else cells
    fam = image_family(nbhd, map_sampler, r1, r2, count=count, vertices=vertices)
    pts = np.concatenate(fam.curves)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    c = 0.5 * (lo + hi)
    outer = float(np.max(np.linalg.norm(pts - c, axis=1)))
    half = max(0.5 * float(np.max(hi - lo)) * box_margin,
               coverage_half_width(nbhd.n, outer, len(fam), cells))
    box = GridBox(c - half, c + half, (cells,) * nbhd.n)
    res = modulus_solve(box, fam, nbhd.n, tol=tol)
    rhs = weighted_annulus_integral(nbhd, Q, eta, r1, r2)
    lhs = res.value
    sandwich = {}
    if etas is not None and constants is not None:
        sandwich = sandwich_margins(nbhd, Q, r1, r2, etas, constants)
    return RingReport(lhs, rhs, bool(lhs <= rhs * (1.0 + discretization_tol)), rhs - lhs,
                      discretization_tol, res.certificate, s, sandwich)


# --------------------------------------------------------------------------
# divergence criterion


@dataclass(frozen=True)
class DivergenceProfile:
    eps: np.ndarray
    integrals: np.ndarray
    increments_per_halving: np.ndarray
    loglog_slope: float
    verdict: str

    def rows(self):
        return [(float(e), float(v)) for e, v in zip(self.eps, self.integrals)]


def divergence_profile(nbhd, Q, eps0, eps_list, threshold=0.5, q_profile=None, tail=3):
    """``I(eps) = int_eps^eps0 dr / (r q^{1/(n-1)}(r))`` along a decreasing ``eps_list``.

    The verdict is ``"divergent"`` when, over the last ``tail`` entries, ``I``
    grows at least ``threshold`` per unit of ``log log(1/eps)``; this scale
    catches both logarithmic and log-log divergence while a convergent
    ``I`` has slope tending to 0.  Increments per halving of ``eps`` are
    reported as well.
    """
    eps = np.asarray(eps_list, dtype=float)
    if np.any(np.diff(eps) >= 0) or np.any(eps <= 0) or np.any(eps >= eps0):
        raise ValidationError("eps_list must decrease inside (0, eps0)")
    n = nbhd.n
    qp = q_profile or q_profile_of(nbhd, Q)
    f = _reciprocal_integrand(qp, n)
    knots = np.concatenate([[eps0], eps])
    pieces = []
    for a, b in zip(knots[1:], knots[:-1]):
        # split on a log grid so quad sees smooth pieces
        sub = np.geomspace(a, b, 9)
        pieces.append(sum(integrate.quad(f, s0, s1, limit=200, epsabs=0.0, epsrel=1e-11)[0]
                          for s0, s1 in zip(sub[:-1], sub[1:])))
    I = np.cumsum(pieces)
    per_halving = np.diff(I) / np.log2(eps[:-1] / eps[1:]) if len(eps) > 1 else np.zeros(0)
    k = min(tail, len(eps))
    if k >= 2:
        x = np.log(np.log(eps0 * math.e / eps[-k:]))
        slope = float(np.polyfit(x, I[-k:], 1)[0])
    else:
        slope = 0.0
    verdict = "divergent" if slope >= threshold else "convergent"
    return DivergenceProfile(eps, I, per_halving, slope, verdict)
