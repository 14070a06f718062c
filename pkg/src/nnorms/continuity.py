"""k-continuity of multilinear functionals measured with derived 1-norms.

For multilinear ``f`` the difference ``f(xs) - f(vs)`` telescopes into k terms
``f(v_1, .., v_{i-1}, x_i - v_i, x_{i+1}, .., x_k)``. Each term is bounded by
``C * R^(k-1) * ||x_i - v_i||_1`` when every slot has derived 1-norm at most
R, which gives the modulus ``L = C k max(R, 1)^(k-1)`` used to pick delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .core import Vector, derived_norm, term_operators
from .functionals import Functional, ProductDomain, dense_values, to_tensor

__all__ = [
    "ContinuityQuery",
    "ContinuityCertificate",
    "product_star_norm",
    "lipschitz_modulus",
    "find_delta",
    "probe_continuity",
    "TELESCOPING_NOTE",
    "STAR_NORM_NOTE",
]

TELESCOPING_NOTE = (
    "modulus from the telescoping identity f(xs)-f(vs) = sum_i f(v_1..v_{i-1}, x_i-v_i, x_{i+1}..x_k); "
    "the shortcut f(xs)-f(vs) = f(xs-vs) holds only for k=1"
)
STAR_NORM_NOTE = "product norm reads component x_i in slot i: sum_i ||x_i||_1 over frame Y_i"

_FLOOR = 1e-300


@dataclass(frozen=True)
class ContinuityQuery:
    point: tuple
    epsilon: float
    trials: int = 1000
    radius_cap: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(self.point))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.radius_cap > 0:
            raise ValueError("radius_cap must be > 0")


@dataclass(frozen=True)
class ContinuityCertificate:
    delta: float
    modulus: float
    empirical_max: float
    epsilon: float
    passed: bool
    trials: int
    notes: tuple = ()

    def __post_init__(self):
        if self.passed and not self.empirical_max < self.epsilon:
            raise ValueError("a passing certificate needs empirical_max < epsilon")

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "modulus": self.modulus,
            "empirical_max": self.empirical_max,
            "epsilon": self.epsilon,
            "trials": self.trials,
            "pass": self.passed,
            "notes": list(self.notes),
        }


def product_star_norm(xs: Sequence[Vector], domain: ProductDomain) -> float:
    """``sum_i ||x_i||_1`` with each slot measured against its own frame."""
    domain.check_tuple(xs)
    return float(sum(derived_norm(x, fr, 1) for x, fr in zip(xs, domain.frames)))


def lipschitz_modulus(f: Functional, C: float, R: float) -> float:
    if C < 0:
        raise ValueError("C must be >= 0")
    if not R > 0:
        raise ValueError("R must be > 0")
    k = f.domain.k
    return C * k * max(R, 1.0) ** (k - 1)


def probe_continuity(
    f: Functional,
    x: Sequence[Vector],
    delta: float,
    epsilon: float,
    trials: int = 1000,
    seed: int = 0,
) -> ContinuityCertificate:
    """Largest ``|f(v) - f(x)|`` over random ``v`` with ``||v_i - x_i||_1 < delta`` in every slot.

    Each trial draws one direction and one radius fraction in (0, 1) per
    slot and probes both ``x + r d`` and ``x - r d``. The draws do not depend
    on delta, so probes for different deltas are rescaled copies of each other.
    """
    if not delta > 0 or not epsilon > 0:
        raise ValueError("delta and epsilon must be > 0")
    dom = f.domain
    dom.check_tuple(x)
    kern = kernels.get_backend()
    rng = np.random.default_rng(seed)
    steps = []
    for fr in dom.frames:
        B = term_operators(fr)
        D = rng.standard_normal((trials, fr.space.dim))
        g = kern.derived_norms(B, D, 1.0)
        bad = g <= 1e-12
        while bad.any():
            D[bad] = rng.standard_normal((int(bad.sum()), fr.space.dim))
            g[bad] = kern.derived_norms(B, D[bad], 1.0)
            bad = g <= 1e-12
        u = rng.uniform(size=trials)
        u[u == 0.0] = 0.5
        steps.append(D * (delta * u / g)[:, None])
    T = to_tensor(f).coefficients
    X = [xi.coords[None, :] for xi in x]
    fx = float(dense_values(T, X)[0])
    plus = dense_values(T, [xi + s for xi, s in zip(X, steps)])
    minus = dense_values(T, [xi - s for xi, s in zip(X, steps)])
    worst = float(max(np.abs(plus - fx).max(), np.abs(minus - fx).max()))
    return ContinuityCertificate(
        delta=float(delta),
        modulus=math.nan,
        empirical_max=worst,
        epsilon=float(epsilon),
        passed=worst < epsilon,
        trials=trials,
    )


def find_delta(f: Functional, C: float, query: ContinuityQuery, seed: int = 0) -> ContinuityCertificate:
    """delta from the worst-case modulus around ``query.point``, checked by probing."""
    dom = f.domain
    dom.check_tuple(query.point)
    radius = max(derived_norm(x, fr, 1) for x, fr in zip(query.point, dom.frames))
    R = 1.0 + radius + query.radius_cap
    L = lipschitz_modulus(f, C, R)
    delta = min(query.epsilon / (L + _FLOOR), query.radius_cap)
    probe = probe_continuity(f, query.point, delta, query.epsilon, query.trials, seed)
    return ContinuityCertificate(
        delta=delta,
        modulus=L,
        empirical_max=probe.empirical_max,
        epsilon=probe.epsilon,
        passed=probe.passed and delta > 0,
        trials=query.trials,
        notes=(TELESCOPING_NOTE, f"R={R!r}, C={C!r}"),
    )
