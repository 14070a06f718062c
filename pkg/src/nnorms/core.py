"""Finite-dimensional inner-product spaces and the standard n-norm.

Everything here is built on one primitive: the volume of the parallelepiped
spanned by a tuple of vectors. Volumes are computed from a column-pivoted QR
factorization of the metric-whitened coordinates, which equals the square
root of the Gram determinant but does not square the condition number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .report import CheckRecord, VerificationReport

__all__ = [
    "InnerProductSpace",
    "Vector",
    "Frame",
    "NormIndex",
    "SubsetTerm",
    "as_index",
    "inner_product",
    "gram_matrix",
    "standard_n_norm",
    "standard_n_inner",
    "subset_family",
    "derived_norm",
    "term_operators",
    "check_frame_independent",
    "frame_conditioning",
    "check_norm_axioms",
    "check_inner_axioms",
    "random_spd_metric",
    "INDEPENDENCE_THRESHOLD",
    "AXIOM_TOLERANCES",
]

SYMMETRY_TOL = 1e-12
MIN_EIGENVALUE = 1e-10
INDEPENDENCE_THRESHOLD = 1e-8


class InnerProductSpace:
    """Real coordinate space of dimension ``dim`` with metric ``<u, v> = u^T M v``."""

    __slots__ = ("dim", "metric", "_whitener")

    def __init__(self, metric):
        m = np.array(metric, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError("metric must be a non-empty square matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("metric has non-finite entries")
        if np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
            raise ValueError("metric not symmetric")
        m = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(m)[0] <= MIN_EIGENVALUE:
            raise ValueError("metric not positive-definite")
        m.setflags(write=False)
        # M = L L^T, so <u, v> = (L^T u) . (L^T v)
        w = np.linalg.cholesky(m).T.copy()
        w.setflags(write=False)
        self.dim = m.shape[0]
        self.metric = m
        self._whitener = w

    @classmethod
    def euclidean(cls, dim: int) -> "InnerProductSpace":
        return cls(np.eye(dim))

    def vector(self, coords) -> "Vector":
        return Vector(coords, self)

    def basis(self, i: int) -> "Vector":
        e = np.zeros(self.dim)
        e[i] = 1.0
        return Vector(e, self)

    def zero(self) -> "Vector":
        return Vector(np.zeros(self.dim), self)

    def whiten(self, coords: np.ndarray) -> np.ndarray:
        """Map coordinates (last axis or columns of a ``dim x m`` array) to an orthonormal frame."""
        return self._whitener @ coords

    @property
    def whitener(self) -> np.ndarray:
        return self._whitener

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, InnerProductSpace):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.metric, other.metric)

    def __hash__(self):
        return hash((self.dim, self.metric.tobytes()))

    def __repr__(self):
        return f"InnerProductSpace(dim={self.dim})"


class Vector:
    """Coordinates tied to the space they live in. Immutable."""

    __slots__ = ("coords", "space")

    def __init__(self, coords, space: InnerProductSpace):
        c = np.array(coords, dtype=float).reshape(-1)
        if c.shape[0] != space.dim:
            raise ValueError(f"expected {space.dim} coordinates, got {c.shape[0]}")
        c.setflags(write=False)
        self.coords = c
        self.space = space

    def _check(self, other: "Vector"):
        if not isinstance(other, Vector):
            return NotImplemented
        if other.space != self.space:
            raise ValueError("space mismatch")
        return None

    def __add__(self, other):
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return Vector(self.coords + other.coords, self.space)

    def __sub__(self, other):
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return Vector(self.coords - other.coords, self.space)

    def __mul__(self, alpha):
        if isinstance(alpha, Vector):
            return NotImplemented
        return Vector(float(alpha) * self.coords, self.space)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return Vector(self.coords / float(alpha), self.space)

    def __neg__(self):
        return Vector(-self.coords, self.space)

    def length(self) -> float:
        """Metric length sqrt(<v, v>)."""
        return float(np.linalg.norm(self.space.whiten(self.coords)))

    def __repr__(self):
        return f"Vector({self.coords.tolist()})"


@dataclass(frozen=True)
class Frame:
    """An ordered tuple of ``n <= dim`` vectors in one space.

    Linear independence is *not* enforced here; see
    :func:`check_frame_independent`.
    """

    vectors: tuple

    def __post_init__(self):
        vs = tuple(self.vectors)
        if not vs:
            raise ValueError("frame must contain at least one vector")
        space = vs[0].space
        for v in vs[1:]:
            if v.space != space:
                raise ValueError("space mismatch")
        if len(vs) > space.dim:
            raise ValueError(f"frame of {len(vs)} vectors exceeds dimension {space.dim}")
        object.__setattr__(self, "vectors", vs)

    @classmethod
    def from_coords(cls, space: InnerProductSpace, rows) -> "Frame":
        return cls(tuple(Vector(r, space) for r in rows))

    @property
    def space(self) -> InnerProductSpace:
        return self.vectors[0].space

    @property
    def n(self) -> int:
        return len(self.vectors)

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, i):
        return self.vectors[i]


@dataclass(frozen=True)
class NormIndex:
    """Index p in [1, inf] with its Hoelder conjugate q."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1.0:
            raise ValueError(f"norm index must lie in [1, inf], got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    @property
    def q(self) -> float:
        if self.p == 1.0:
            return math.inf
        if self.is_inf:
            return 1.0
        return self.p / (self.p - 1.0)

    @property
    def inv_q(self) -> float:
        """1/q, computed without forming q (exactly 0 at p=1, 1 at p=inf)."""
        return 1.0 - 1.0 / self.p

    def __str__(self):
        return "inf" if self.is_inf else repr(self.p)


def as_index(p) -> NormIndex:
    if isinstance(p, NormIndex):
        return p
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "+inf", "∞"):
            return NormIndex(math.inf)
        return NormIndex(float(s))
    return NormIndex(float(p))


class SubsetTerm(NamedTuple):
    """One summand of a derived norm: ``lead`` is j1, ``rest`` the sorted complement (0-based)."""

    lead: int
    rest: tuple


def subset_family(n: int) -> list[SubsetTerm]:
    if n < 1:
        raise ValueError("n must be a positive integer")
    return [SubsetTerm(j, tuple(i for i in range(n) if i != j)) for j in range(n)]


def _same_space(vs: Sequence[Vector]) -> InnerProductSpace:
    if not vs:
        raise ValueError("empty vector list")
    space = vs[0].space
    for v in vs[1:]:
        if v.space != space:
            raise ValueError("space mismatch")
    return space


def inner_product(u: Vector, v: Vector) -> float:
    if u.space != v.space:
        raise ValueError("space mismatch")
    return float(u.coords @ u.space.metric @ v.coords)


def gram_matrix(vs: Sequence[Vector]) -> np.ndarray:
    space = _same_space(vs)
    if len(vs) > space.dim:
        raise ValueError(f"{len(vs)} vectors exceed dimension {space.dim}")
    X = np.column_stack([v.coords for v in vs])
    G = X.T @ space.metric @ X
    return 0.5 * (G + G.T)


def _volume(Z: np.ndarray) -> float:
    """Volume spanned by the columns of an already-whitened ``dim x m`` array."""
    if Z.shape[1] == 0:
        return 1.0
    R = scipy.linalg.qr(Z, mode="r", pivoting=True, check_finite=False)[0]
    return float(abs(np.prod(np.diag(R))))


def standard_n_norm(xs: Sequence[Vector]) -> float:
    """Volume of the parallelepiped spanned by ``xs`` (square root of the Gram determinant)."""
    space = _same_space(xs)
    if len(xs) > space.dim:
        raise ValueError(f"{len(xs)} vectors exceed dimension {space.dim}")
    Z = space.whiten(np.column_stack([v.coords for v in xs]))
    return _volume(Z)


def _residual_basis(space: InnerProductSpace, trail: Sequence[Vector]):
    """Orthonormal basis of the whitened trail span and the trail volume."""
    if not trail:
        return np.zeros((space.dim, 0)), 1.0
    Z = space.whiten(np.column_stack([v.coords for v in trail]))
    Q, R = np.linalg.qr(Z)
    return Q, float(abs(np.prod(np.diag(R))))


def standard_n_inner(x: Vector, y: Vector, trail: Sequence[Vector]) -> float:
    """Bordered Gram determinant ``<x, y | z_2, ..., z_n>``.

    Computed as ``vol(trail)^2 * <P x, P y>`` with ``P`` the projection onto
    the orthogonal complement of the trail, which is the Schur-complement
    expansion of the bordered determinant.
    """
    space = _same_space([x, y, *trail])
    if len(trail) + 1 > space.dim:
        raise ValueError(f"{len(trail) + 1} vectors exceed dimension {space.dim}")
    Q, vol = _residual_basis(space, trail)
    xt = space.whiten(x.coords)
    yt = space.whiten(y.coords)
    xp = xt - Q @ (Q.T @ xt)
    yp = yt - Q @ (Q.T @ yt)
    return vol * vol * float(xp @ yp)


def _term_values(x: Vector, frame: Frame) -> np.ndarray:
    ys = frame.vectors
    return np.array(
        [standard_n_norm([x, *(ys[i] for i in t.rest)]) for t in subset_family(frame.n)]
    )


def _p_combine(t: np.ndarray, p: NormIndex) -> float:
    if p.is_inf:
        return float(np.max(t))
    if p.p == 1.0:
        return float(np.sum(t))
    m = float(np.max(t))
    if m == 0.0:
        return 0.0
    return m * float(np.sum((t / m) ** p.p)) ** (1.0 / p.p)


def derived_norm(x: Vector, frame: Frame, p=1) -> float:
    """``(sum_j ||x, y_rest(j)||^p)^(1/p)`` over the subset family of the frame; max at p=inf."""
    if x.space != frame.space:
        raise ValueError("space mismatch")
    return _p_combine(_term_values(x, frame), as_index(p))


def term_operators(frame: Frame) -> np.ndarray:
    """Stack ``B`` of shape ``(n, dim, dim)`` with ``||x, y_rest(j)|| = |B[j] @ x|``.

    Also ``<x, w | y_rest(j)> = (B[j] @ x) . (B[j] @ w)``. Used by the
    estimators to evaluate many derived norms without refactoring.
    """
    space = frame.space
    ys = frame.vectors
    W = space.whitener
    ops = []
    for t in subset_family(frame.n):
        Q, vol = _residual_basis(space, [ys[i] for i in t.rest])
        P = np.eye(space.dim) - Q @ Q.T
        ops.append(vol * (P @ W))
    return np.array(ops)


def frame_conditioning(frame: Frame) -> float:
    """Frame volume divided by the product of its vector lengths (1 for orthogonal frames)."""
    lengths = np.prod([v.length() for v in frame.vectors])
    if lengths == 0.0:
        return 0.0
    return standard_n_norm(frame.vectors) / lengths


def check_frame_independent(frame: Frame) -> bool:
    return frame_conditioning(frame) > INDEPENDENCE_THRESHOLD


def random_spd_metric(dim: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((dim, dim))
    return A.T @ A + 0.1 * np.eye(dim)


# Default thresholds per check; the N1/N4/Cauchy-Schwarz ones are scaled by the
# product of slot lengths, the rest are relative.
AXIOM_TOLERANCES = {
    "dependence-zero": 1e-8,
    "permutation": 1e-10,
    "homogeneity": 1e-10,
    "triangle": 1e-9,
    "shift-invariance": 1e-8,
    "inner-norm identity": 1e-9,
    "cauchy-schwarz": 1e-9,
    "symmetry": 1e-10,
    "linearity": 1e-9,
    "positivity": 1e-9,
}


def _tol(name, tol):
    return AXIOM_TOLERANCES[name] if tol is None else tol


def _lengths(vs):
    return float(np.prod([v.length() for v in vs]))


def _rand_vec(space, rng):
    return Vector(rng.standard_normal(space.dim), space)


def _rel(a, b):
    den = max(abs(a), abs(b))
    return 0.0 if den == 0.0 else abs(a - b) / den


def check_norm_axioms(
    space: InnerProductSpace, n: int, trials: int = 500, seed: int = 0, tol=None
) -> VerificationReport:
    """Randomized check of the n-norm axioms and shift invariance for the standard n-norm.

    ``tol=None`` uses :data:`AXIOM_TOLERANCES`; a float applies one threshold
    to every check. The degenerate tuple ``(e1, e1, e2, ...)`` is always
    included in the dependence check.
    """
    if n < 1 or n > space.dim:
        raise ValueError(f"need 1 <= n <= dim, got n={n}, dim={space.dim}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(
        ["dependence-zero", "permutation", "homogeneity", "triangle", "shift-invariance"], 0.0
    )

    degenerate = [space.basis(0)] + [space.basis(i) for i in range(n - 1)]
    if n >= 2:
        worst["dependence-zero"] = standard_n_norm(degenerate) / _lengths(degenerate)

    for _ in range(trials):
        xs = [_rand_vec(space, rng) for _ in range(n)]
        base = standard_n_norm(xs)

        coeffs = rng.standard_normal(n - 1)
        combo = space.zero()
        for c, v in zip(coeffs, xs[1:]):
            combo = combo + c * v
        dep = [combo, *xs[1:]]
        scale = _lengths(dep)
        if scale > 0.0:
            worst["dependence-zero"] = max(worst["dependence-zero"], standard_n_norm(dep) / scale)

        perm = rng.permutation(n)
        worst["permutation"] = max(
            worst["permutation"], _rel(standard_n_norm([xs[i] for i in perm]), base)
        )

        alpha = float(rng.standard_normal() * 3.0)
        worst["homogeneity"] = max(
            worst["homogeneity"], _rel(standard_n_norm([alpha * xs[0], *xs[1:]]), abs(alpha) * base)
        )

        x1p = _rand_vec(space, rng)
        lhs = standard_n_norm([xs[0] + x1p, *xs[1:]])
        rhs = base + standard_n_norm([x1p, *xs[1:]])
        scale = (xs[0].length() + x1p.length()) * _lengths(xs[1:])
        worst["triangle"] = max(worst["triangle"], (lhs - rhs) / scale)

        shifted = xs[0]
        for c, v in zip(rng.standard_normal(n - 1), xs[1:]):
            shifted = shifted + c * v
        worst["shift-invariance"] = max(
            worst["shift-invariance"], _rel(standard_n_norm([shifted, *xs[1:]]), base)
        )

    details = [
        CheckRecord(name, v, _tol(name, tol), _tol(name, tol), v < _tol(name, tol))
        for name, v in worst.items()
    ]
    return VerificationReport.from_checks(
        "n-norm axioms", details, notes=[f"dim={space.dim}, n={n}, trials={trials}, seed={seed}"]
    )


def check_inner_axioms(
    space: InnerProductSpace, n: int, trials: int = 500, seed: int = 0, tol=None
) -> VerificationReport:
    """Randomized check of the n-inner-product axioms, the induced-norm identity and Cauchy-Schwarz."""
    if n < 1 or n > space.dim:
        raise ValueError(f"need 1 <= n <= dim, got n={n}, dim={space.dim}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(
        ["positivity", "permutation", "symmetry", "linearity", "inner-norm identity", "cauchy-schwarz"],
        0.0,
    )
    for _ in range(trials):
        x, y, xp = (_rand_vec(space, rng) for _ in range(3))
        zs = [_rand_vec(space, rng) for _ in range(n - 1)]
        xx = standard_n_inner(x, x, zs)
        nrm = standard_n_norm([x, *zs])
        scale2 = _lengths([x, *zs]) ** 2
        worst["positivity"] = max(worst["positivity"], -xx / scale2)
        worst["inner-norm identity"] = max(worst["inner-norm identity"], _rel(xx, nrm * nrm))

        tup = [x, *zs]
        perm = rng.permutation(n)
        pt = [tup[i] for i in perm]
        worst["permutation"] = max(
            worst["permutation"], _rel(standard_n_inner(pt[0], pt[0], pt[1:]), xx)
        )

        xy = standard_n_inner(x, y, zs)
        sc = _lengths([x, *zs]) * _lengths([y, *zs])
        worst["symmetry"] = max(worst["symmetry"], abs(xy - standard_n_inner(y, x, zs)) / sc)

        a, b = rng.standard_normal(2) * 2.0
        lin = standard_n_inner(a * x + b * xp, y, zs)
        expect = a * xy + b * standard_n_inner(xp, y, zs)
        lsc = (abs(a) * x.length() + abs(b) * xp.length()) * _lengths(zs) * _lengths([y, *zs])
        worst["linearity"] = max(worst["linearity"], abs(lin - expect) / lsc)

        bound = standard_n_norm([x, *zs]) * standard_n_norm([y, *zs])
        worst["cauchy-schwarz"] = max(worst["cauchy-schwarz"], (abs(xy) - bound) / sc)

    details = [
        CheckRecord(name, v, _tol(name, tol), _tol(name, tol), v < _tol(name, tol))
        for name, v in worst.items()
    ]
    return VerificationReport.from_checks(
        "n-inner product axioms", details, notes=[f"dim={space.dim}, n={n}, trials={trials}, seed={seed}"]
    )
