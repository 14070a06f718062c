"""k-linear functionals on products of inner-product spaces.

Three representations share one evaluation interface:

* :class:`FrameFunctional`: product over slots of
  ``sum_j <x_i, y_ij | rest of frame i>``, fully determined by the frames;
* :class:`AnchoredFunctional`: the same with ``y_ij`` replaced by a fixed
  anchor ``w_i`` in every term;
* :class:`TensorFunctional`: a dense coefficient array.

The first two have closed-form dual norms and explicit extremal tuples
("witnesses") which are implemented here alongside the norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import (
    Frame,
    Vector,
    as_index,
    check_frame_independent,
    derived_norm,
    standard_n_inner,
    standard_n_norm,
    subset_family,
)
from .report import CheckRecord, VerificationReport

__all__ = [
    "ProductDomain",
    "FrameFunctional",
    "AnchoredFunctional",
    "TensorFunctional",
    "Functional",
    "evaluate",
    "to_tensor",
    "dense_values",
    "scaled",
    "check_multilinearity",
    "closed_form_norm",
    "fact1_witness",
    "fact2_witness",
    "fact3_witness",
    "frame_as_anchored",
    "random_tuple",
]


@dataclass(frozen=True)
class ProductDomain:
    """k spaces, each carrying a linearly independent frame of the same size n."""

    frames: tuple

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a product domain needs at least one slot")
        n = frames[0].n
        for i, fr in enumerate(frames):
            if not isinstance(fr, Frame):
                raise TypeError(f"slot {i}: expected a Frame")
            if fr.n != n:
                raise ValueError(f"slot {i}: frame size {fr.n} differs from {n}")
            if not check_frame_independent(fr):
                raise ValueError(f"slot {i}: frame not linearly independent")
        object.__setattr__(self, "frames", frames)

    @property
    def spaces(self) -> tuple:
        return tuple(fr.space for fr in self.frames)

    @property
    def k(self) -> int:
        return len(self.frames)

    @property
    def n(self) -> int:
        return self.frames[0].n

    @property
    def dims(self) -> tuple:
        return tuple(s.dim for s in self.spaces)

    def check_tuple(self, xs: Sequence[Vector]) -> None:
        if len(xs) != self.k:
            raise ValueError(f"arity mismatch: expected {self.k} vectors, got {len(xs)}")
        for i, (x, s) in enumerate(zip(xs, self.spaces)):
            if x.space != s:
                raise ValueError(f"space mismatch in slot {i}")

    def zero_tuple(self) -> list:
        return [s.zero() for s in self.spaces]


@dataclass(frozen=True)
class FrameFunctional:
    domain: ProductDomain
    kind = "frame-sum"


@dataclass(frozen=True)
class AnchoredFunctional:
    domain: ProductDomain
    anchors: tuple

    kind = "anchored"

    def __post_init__(self):
        anchors = tuple(self.anchors)
        if len(anchors) != self.domain.k:
            raise ValueError(f"expected {self.domain.k} anchors, got {len(anchors)}")
        for i, (w, s) in enumerate(zip(anchors, self.domain.spaces)):
            if w.space != s:
                raise ValueError(f"anchor {i}: space mismatch")
        object.__setattr__(self, "anchors", anchors)


@dataclass(frozen=True, eq=False)
class TensorFunctional:
    domain: ProductDomain
    coefficients: np.ndarray

    kind = "tensor"

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.size == int(np.prod(self.domain.dims)) and c.shape != self.domain.dims:
            if c.ndim != 1:
                raise ValueError(
                    f"coefficient shape {c.shape} does not match domain {self.domain.dims}"
                )
            c = c.reshape(self.domain.dims)
        if c.shape != self.domain.dims:
            raise ValueError(f"coefficient shape {c.shape} does not match domain {self.domain.dims}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zero(cls, domain: ProductDomain) -> "TensorFunctional":
        return cls(domain, np.zeros(domain.dims))


Functional = Union[FrameFunctional, AnchoredFunctional, TensorFunctional]


def _slot_factor(x: Vector, frame: Frame, anchor: Vector | None) -> float:
    ys = frame.vectors
    total = 0.0
    for t in subset_family(frame.n):
        target = ys[t.lead] if anchor is None else anchor
        total += standard_n_inner(x, target, [ys[i] for i in t.rest])
    return total


def evaluate(f: Functional, xs: Sequence[Vector]) -> float:
    """Value of ``f`` at the tuple ``xs``; each bordered determinant is computed afresh."""
    f.domain.check_tuple(xs)
    if isinstance(f, TensorFunctional):
        out = f.coefficients
        for x in xs:
            out = np.tensordot(x.coords, out, axes=(0, 0))
        return float(out)
    anchors = f.anchors if isinstance(f, AnchoredFunctional) else (None,) * f.domain.k
    value = 1.0
    for x, frame, w in zip(xs, f.domain.frames, anchors):
        value *= _slot_factor(x, frame, w)
    return value


def to_tensor(f: Functional) -> TensorFunctional:
    """Dense representation ``T[a1, ..., ak] = f(e_a1, ..., e_ak)``.

    Frame and anchored functionals are products of per-slot linear forms,
    so the basis values factor into per-slot evaluations.
    """
    if isinstance(f, TensorFunctional):
        return f
    anchors = f.anchors if isinstance(f, AnchoredFunctional) else (None,) * f.domain.k
    factors = []
    for frame, w in zip(f.domain.frames, anchors):
        s = frame.space
        factors.append(np.array([_slot_factor(s.basis(a), frame, w) for a in range(s.dim)]))
    T = factors[0]
    for v in factors[1:]:
        T = np.multiply.outer(T, v)
    return TensorFunctional(f.domain, T)


def dense_values(T, Xs):
    """Signed values of the dense form at each row-tuple; rows broadcast across slots."""
    m = max(X.shape[0] for X in Xs)
    V = np.einsum("a...,ma->m...", T, np.broadcast_to(Xs[0], (m, Xs[0].shape[1])))
    for X in Xs[1:]:
        V = np.einsum("mb...,mb->m...", V, np.broadcast_to(X, (m, X.shape[1])))
    return V


def scaled(f: Functional, alpha: float) -> TensorFunctional:
    return TensorFunctional(f.domain, float(alpha) * to_tensor(f).coefficients)


def frame_as_anchored(f: FrameFunctional) -> AnchoredFunctional:
    """The anchored functional with ``w_i = y_i1 + ... + y_in``, which agrees with ``f``."""
    anchors = []
    for frame in f.domain.frames:
        w = frame.space.zero()
        for y in frame.vectors:
            w = w + y
        anchors.append(w)
    return AnchoredFunctional(f.domain, tuple(anchors))


def random_tuple(domain: ProductDomain, rng: np.random.Generator) -> list:
    return [Vector(rng.standard_normal(s.dim), s) for s in domain.spaces]


def check_multilinearity(
    f: Functional, trials: int = 200, seed: int = 0, tol: float = 1e-8
) -> VerificationReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    k = f.domain.k
    tnorm = float(np.linalg.norm(to_tensor(f).coefficients))
    for _ in range(trials):
        xs = random_tuple(f.domain, rng)
        i = int(rng.integers(k))
        xp = Vector(rng.standard_normal(f.domain.dims[i]), f.domain.spaces[i])
        alpha, beta = rng.standard_normal(2) * 2.0
        mixed = list(xs)
        mixed[i] = alpha * xs[i] + beta * xp
        other = list(xs)
        other[i] = xp
        lhs = evaluate(f, mixed)
        rhs = alpha * evaluate(f, xs) + beta * evaluate(f, other)
        # |f(v1..vk)| <= |T|_F prod |v_j|, so this bounds every term involved
        scale = tnorm * (abs(alpha) * np.linalg.norm(xs[i].coords) + abs(beta) * np.linalg.norm(xp.coords))
        for j, x in enumerate(xs):
            if j != i:
                scale *= np.linalg.norm(x.coords)
        if scale > 0.0:
            worst = max(worst, abs(lhs - rhs) / scale)
        elif lhs != rhs:
            worst = math.inf
    rec = CheckRecord("slot linearity", worst, tol, tol, worst <= tol)
    return VerificationReport.from_checks(f"multilinearity ({f.kind})", [rec])


def _frame_volumes(f) -> list:
    return [standard_n_norm(fr.vectors) for fr in f.domain.frames]


def closed_form_norm(f: Functional, p=1) -> float:
    """Exact dual norm for frame functionals (any p) and anchored functionals (p = 2)."""
    p = as_index(p)
    if isinstance(f, FrameFunctional):
        dom = f.domain
        return dom.n ** (dom.k * p.inv_q) * math.prod(_frame_volumes(f))
    if isinstance(f, AnchoredFunctional):
        if p.p != 2.0:
            raise ValueError("closed form known only for p=2")
        return math.prod(
            derived_norm(w, fr, 2) for w, fr in zip(f.anchors, f.domain.frames)
        )
    raise ValueError("no closed form")


def fact1_witness(f: FrameFunctional) -> list:
    """``x_i = y_i1 / vol(Y_i)``: unit derived 1-norm, attains the 1st-index norm."""
    if not isinstance(f, FrameFunctional):
        raise ValueError("witness requires a frame functional")
    return [fr.vectors[0] / vol for fr, vol in zip(f.domain.frames, _frame_volumes(f))]


def fact2_witness(f: FrameFunctional, p=2) -> list:
    """``x_i = n^(-1/p) (y_i1 + ... + y_in) / vol(Y_i)``.

    This scaling makes every subset term equal ``n^(-1/p)``, so the derived
    p-norm of each slot is exactly 1.
    """
    if not isinstance(f, FrameFunctional):
        raise ValueError("witness requires a frame functional")
    p = as_index(p)
    if p.is_inf:
        raise ValueError("witness defined for finite p")
    c = f.domain.n ** (-1.0 / p.p)
    out = []
    for fr, vol in zip(f.domain.frames, _frame_volumes(f)):
        s = fr.space.zero()
        for y in fr.vectors:
            s = s + y
        out.append((c / vol) * s)
    return out


def fact3_witness(f: AnchoredFunctional) -> list:
    """``x_i = w_i / ||w_i||_2`` with the derived 2-norm of the anchor."""
    if not isinstance(f, AnchoredFunctional):
        raise ValueError("witness requires an anchored functional")
    out = []
    for w, fr in zip(f.anchors, f.domain.frames):
        g = derived_norm(w, fr, 2)
        if not g > 0.0:
            raise ValueError("degenerate anchor")
        out.append(w / g)
    return out

