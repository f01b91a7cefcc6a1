"""Möbius automorphisms of the unit ball and finitely generated groups of them.

Motions are stored as Lorentz matrices acting on the hyperboloid model
``{X in R^{n+1} : X_{n+1}^2 - |X'|^2 = 1, X_{n+1} > 0}``.  Ball points are
moved by lifting them to the hyperboloid, multiplying, and projecting back,
so composition is an exact matrix product.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ValidationError

LORENTZ_TOL = 1e-10
DEDUP_TOL = 1e-9
RENORMALIZE_EVERY = 32


def lorentz_form(n):
    """``J = diag(1, ..., 1, -1)`` of size ``n + 1``."""
    J = np.eye(n + 1)
    J[n, n] = -1.0
    return J


def lorentz_defect(L):
    """Max-norm of ``L^T J L - J`` relative to ``max(1, |L|_max^2)``.

    Entries of long products grow like ``exp(distance)``, so an absolute
    defect is meaningless for them; the relative form is what survives
    floating point.
    """
    L = np.asarray(L, dtype=float)
    J = lorentz_form(L.shape[0] - 1)
    scale = max(1.0, float(np.max(np.abs(L))) ** 2)
    return float(np.max(np.abs(L.T @ J @ L - J))) / scale


def _boost_from_origin(u):
    """Lorentz boost taking the hyperboloid apex to ``(u, sqrt(1 + |u|^2))``."""
    n = u.shape[0]
    t = math.sqrt(1.0 + float(u @ u))
    B = np.eye(n + 1)
    r = float(np.linalg.norm(u))
    if r > 0:
        w = u / r
        B[:n, :n] += (t - 1.0) * np.outer(w, w)
    B[:n, n] = u
    B[n, :n] = u
    B[n, n] = t
    return B


def _renormalize(L):
    # Split L = boost(L e_apex) @ diag(R, 1) and rebuild with a polar-projected R.
    n = L.shape[0] - 1
    J = lorentz_form(n)
    B = _boost_from_origin(L[:n, n])
    K = (J @ B.T @ J) @ L
    U, _, Vt = np.linalg.svd(K[:n, :n])
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U[:, -1] = -U[:, -1]
        R = U @ Vt
    rot = np.eye(n + 1)
    rot[:n, :n] = R
    return B @ rot


def ball_to_hyperboloid(x):
    x = np.asarray(x, dtype=float)
    s = np.sum(x * x, axis=-1, keepdims=True)
    denom = 1.0 - s
    return np.concatenate([2.0 * x / denom, (1.0 + s) / denom], axis=-1)


def hyperboloid_to_ball(X):
    X = np.asarray(X, dtype=float)
    return X[..., :-1] / (1.0 + X[..., -1:])


def check_in_ball(x, what="point"):
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=-1)
    if np.any(~np.isfinite(norms)) or np.any(norms >= 1.0):
        raise DomainError(f"{what} must lie strictly inside the unit ball "
                          f"(max |x| = {np.max(norms):.6g})")
    return x


@dataclass(frozen=True, eq=False)
class MobiusMotion:
    """An orientation-preserving isometry of the ball, stored as a Lorentz matrix.

    ``age`` counts compositions since the last re-orthonormalization.
    """

    L: np.ndarray
    age: int = 0

    def __post_init__(self):
        L = np.array(self.L, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] < 2:
            raise ValidationError("Lorentz matrix must be square of size n+1 >= 2")
        L.setflags(write=False)
        object.__setattr__(self, "L", L)

    @property
    def n(self):
        return self.L.shape[0] - 1

    def __call__(self, x):
        return apply(self, x)

    def __matmul__(self, other):
        return compose(self, other)

    def inverse(self):
        return inverse(self)

    def lorentz_defect(self):
        return lorentz_defect(self.L)


def identity(n):
    return MobiusMotion(np.eye(n + 1))


def _boost_to_origin(a):
    """Lorentz matrix of the ball automorphism with ``a -> 0`` and ``0 -> -a``."""
    n = a.shape[0]
    r = float(np.linalg.norm(a))
    L = np.eye(n + 1)
    if r == 0.0:
        return L
    u = a / r
    d = 2.0 * np.arctanh(r)
    c, s = np.cosh(d), np.sinh(d)
    L[:n, :n] += (c - 1.0) * np.outer(u, u)
    L[:n, n] = -s * u
    L[n, :n] = -s * u
    L[n, n] = c
    return L


def make_motion(a, R=None):
    """Return ``x -> R(sigma_a(x))`` where ``sigma_a`` swaps ``a`` and ``0`` up to sign.

    ``sigma_a`` is the pure hyperbolic translation along the diameter through
    ``a`` carrying ``a`` to the origin (so ``sigma_a(0) = -a``).
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    n = a.shape[0]
    if np.linalg.norm(a) >= 1.0:
        raise DomainError("translation point a must satisfy |a| < 1")
    if R is None:
        R = np.eye(n)
    R = np.asarray(R, dtype=float)
    if R.shape != (n, n):
        raise ValidationError(f"rotation must be {n}x{n}, got {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(n))) > LORENTZ_TOL:
        raise ValidationError("R is not orthogonal to 1e-10")
    if np.linalg.det(R) < 0:
        raise ValidationError("R must be orientation preserving (det R = +1)")
    rot = np.eye(n + 1)
    rot[:n, :n] = R
    return MobiusMotion(rot @ _boost_to_origin(a))


def translation(n, length, axis=0):
    """Hyperbolic translation by ``length`` along coordinate axis ``axis`` (towards +)."""
    a = np.zeros(n)
    a[axis] = -np.tanh(length / 2.0)
    return make_motion(a)


def rotation(n, i, j, angle):
    """Rotation by ``angle`` in the coordinate plane ``(i, j)`` about the origin."""
    R = np.eye(n)
    c, s = np.cos(angle), np.sin(angle)
    R[i, i], R[i, j], R[j, i], R[j, j] = c, -s, s, c
    return make_motion(np.zeros(n), R)


def random_motion(n, rng, max_radius=0.9):
    """A motion with translation point uniform in ``B(0, max_radius)`` and Haar rotation."""
    direction = rng.normal(size=n)
    direction /= np.linalg.norm(direction)
    a = direction * max_radius * rng.uniform() ** (1.0 / n)
    Z = rng.normal(size=(n, n))
    Qm, Rm = np.linalg.qr(Z)
    Qm = Qm * np.sign(np.diag(Rm))
    if np.linalg.det(Qm) < 0:
        Qm[:, 0] = -Qm[:, 0]
    return make_motion(a, Qm)


def apply(T, x):
    """Image of ball point(s) ``x`` (shape ``(..., n)``) under ``T``."""
    x = check_in_ball(x)
    X = ball_to_hyperboloid(x)
    Y = X @ T.L.T
    return hyperboloid_to_ball(Y)


def compose(T1, T2):
    """``T1 o T2``; re-orthonormalizes every ``RENORMALIZE_EVERY`` compositions."""
    if T1.n != T2.n:
        raise ValidationError("cannot compose motions of different dimension")
    L = T1.L @ T2.L
    age = T1.age + T2.age + 1
    if age >= RENORMALIZE_EVERY or lorentz_defect(L) > LORENTZ_TOL:
        L = _renormalize(L)
        age = 0
    return MobiusMotion(L, age)


def inverse(T):
    J = lorentz_form(T.n)
    return MobiusMotion(J @ T.L.T @ J, T.age)


# --------------------------------------------------------------------------
# groups


@dataclass(frozen=True, eq=False)
class DiscreteGroup:
    """Generators plus all distinct elements up to word length ``depth``.

    Words are tuples of nonzero ints: ``k`` is generator ``k-1`` and ``-k``
    its inverse.  Element 0 is always the identity with the empty word.
    """

    n: int
    generators: tuple
    elements: tuple
    depth: int
    dedup_tol: float = DEDUP_TOL
    _stack: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        stack = np.stack([T.L for _, T in self.elements])
        stack.setflags(write=False)
        object.__setattr__(self, "_stack", stack)

    def __len__(self):
        return len(self.elements)

    @property
    def words(self):
        return [w for w, _ in self.elements]

    @property
    def motions(self):
        return [T for _, T in self.elements]

    @property
    def matrices(self):
        return self._stack

    @property
    def is_trivial(self):
        return len(self.elements) == 1

    def orbit(self, x):
        """Images of ``x`` under every stored element: shape ``(len(group), ..., n)``."""
        x = check_in_ball(x)
        X = ball_to_hyperboloid(x)
        Y = np.einsum("kij,...j->k...i", self._stack, X)
        return hyperboloid_to_ball(Y)


def _letter_matrix(generators, inverses, letter):
    return generators[letter - 1].L if letter > 0 else inverses[-letter - 1].L


def generate_group(generators, depth, dedup_tol=DEDUP_TOL, n=None):
    """Enumerate reduced words of length ``<= depth`` over generators and inverses.

    Products closer than ``dedup_tol`` (max-norm, scaled by the larger
    matrix's magnitude when it exceeds 1) to an already stored element are
    dropped.  Breadth-first order keeps the shortest word for each element.
    """
    generators = list(generators)
    if depth < 0:
        raise ValidationError("depth must be >= 0")
    if n is None:
        if not generators:
            raise ValidationError("dimension n is required for an empty generator list")
        n = generators[0].n
    if any(g.n != n for g in generators):
        raise ValidationError("all generators must have the same dimension")

    inverses = [inverse(g) for g in generators]
    letters = [k + 1 for k in range(len(generators))] + [-(k + 1) for k in range(len(generators))]

    elements = [((), identity(n))]
    stored = [np.eye(n + 1)]
    queue = deque([((), identity(n))])

    def is_new(L):
        S = np.asarray(stored)
        scale = np.maximum(1.0, np.maximum(np.max(np.abs(S), axis=(1, 2)), np.max(np.abs(L))))
        diff = np.max(np.abs(S - L), axis=(1, 2)) / scale
        return not np.any(diff <= dedup_tol)

    while queue:
        word, T = queue.popleft()
        if len(word) >= depth:
            continue
        for letter in letters:
            if word and word[-1] == -letter:
                continue
            step = MobiusMotion(_letter_matrix(generators, inverses, letter))
            U = compose(T, step)
            new_word = word + (letter,)
            if is_new(U.L):
                elements.append((new_word, U))
                stored.append(U.L)
                queue.append((new_word, U))
    return DiscreteGroup(n=n, generators=tuple(generators), elements=tuple(elements),
                         depth=depth, dedup_tol=dedup_tol)


def trivial_group(n):
    return generate_group([], 0, n=n)


@dataclass
class GroupActionReport:
    """Per-sample results of the fixed-point and discontinuity heuristics."""

    samples: np.ndarray
    radius: float
    min_displacement: np.ndarray
    fixed_point_free: np.ndarray
    near_counts: np.ndarray

    @property
    def all_fixed_point_free(self):
        return bool(np.all(self.fixed_point_free))

    @property
    def max_near_count(self):
        return int(np.max(self.near_counts)) if self.near_counts.size else 0

    def to_dict(self):
        return {
            "radius": self.radius,
            "all_fixed_point_free": self.all_fixed_point_free,
            "max_near_count": self.max_near_count,
            "min_displacement": self.min_displacement.tolist(),
            "near_counts": self.near_counts.tolist(),
        }


def verify_group_action(group, samples, radius, fixed_tol=1e-9):
    """Heuristic checks that ``group`` acts freely and discontinuously at ``samples``.

    For each sample ``x``: it is flagged as a fixed point if a non-identity
    stored element moves it by less than ``fixed_tol`` (hyperbolic), and the
    number of non-identity stored elements with ``h(x, Tx) < 2 radius`` is
    recorded.  Only the truncated group is inspected.
    """
    from .geometry import hyp_distance

    samples = np.atleast_2d(check_in_ball(samples))
    m = samples.shape[0]
    if group.is_trivial:
        return GroupActionReport(samples, radius, np.full(m, np.inf),
                                 np.ones(m, dtype=bool), np.zeros(m, dtype=int))
    images = group.orbit(samples)[1:]           # (k-1, m, n)
    d = hyp_distance(images, samples[None, :, :])
    min_disp = d.min(axis=0)
    return GroupActionReport(
        samples=samples,
        radius=float(radius),
        min_displacement=min_disp,
        fixed_point_free=min_disp >= fixed_tol,
        near_counts=np.sum(d < 2.0 * radius, axis=0),
    )


# --------------------------------------------------------------------------
# group definition files


def group_from_dict(spec):
    try:
        n = int(spec["n"])
        depth = int(spec.get("depth", 0))
        gens = []
        for g in spec.get("generators", []):
            a = np.asarray(g.get("a", [0.0] * n), dtype=float)
            R = np.asarray(g["R"], dtype=float) if "R" in g else np.eye(n)
            if a.shape != (n,):
                raise ValidationError(f"generator point must have {n} coordinates")
            gens.append(make_motion(a, R))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed group definition: {exc}") from exc
    return generate_group(gens, depth, dedup_tol=float(spec.get("dedup_tol", DEDUP_TOL)), n=n)


def load_group(path):
    """Read a group definition ``{"n", "generators": [{"a", "R"}], "depth"}``."""
    with Path(path).open() as fh:
        return group_from_dict(json.load(fh))
