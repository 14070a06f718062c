import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rel
from nnorms import (
    AnchoredFunctional,
    EstimatorConfig,
    Frame,
    FrameFunctional,
    ProductDomain,
    TensorFunctional,
    closed_form_norm,
    derived_norm,
    equivalence_constant,
    estimate_inf_norm_ratio,
    estimate_sup_norm,
    evaluate,
    fact1_witness,
    fact2_witness,
    fact3_witness,
    scaled,
    slot_maximize,
    verify_corollary,
    verify_fact,
    verify_lemma_equality,
    verify_sandwich,
)
from nnorms.cli import random_instance
from nnorms.kernels import available_backends

FAST = EstimatorConfig(restarts=8)


def _tensor(seed, dims=(3, 4), k=(2, 2), n=(2, 2)):
    return random_instance(np.random.default_rng(seed), dims=dims, n=n, k=k, kind="tensor")


def _feasible(est, f, p):
    return all(derived_norm(x, fr, p) <= 1 + 1e-9 for x, fr in zip(est.argmax, f.domain.frames))


# ---- configuration


@pytest.mark.parametrize(
    "kwargs", [dict(restarts=0), dict(max_iters=0), dict(step_tol=0.0), dict(max_sweeps=0), dict(backend="nope")]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        EstimatorConfig(**kwargs)


# ---- slot maximization


def test_slot_maximize_p1(f1, r3):
    # f(x) = x1 + x2 and every (t, 1 - t, 0), 0 <= t <= 1, is optimal, so only the value is pinned
    x = slot_maximize(f1, [r3.vector([0.3, -0.2, 0.9])], 0, 1)
    assert derived_norm(x, f1.domain.frames[0], 1) == pytest.approx(1.0, rel=1e-12)
    assert abs(evaluate(f1, [x])) == pytest.approx(1.0, rel=1e-9)
    assert abs(x.coords[2]) < 1e-6


def test_slot_maximize_p2(f1, r3):
    x = slot_maximize(f1, [r3.vector([0.3, -0.2, 0.9])], 0, 2)
    np.testing.assert_allclose(np.abs(x.coords), [2**-0.5, 2**-0.5, 0], atol=1e-8)
    assert abs(evaluate(f1, [x])) == pytest.approx(math.sqrt(2), rel=1e-9)


def test_slot_maximize_zero_functional(f2, r3):
    z = TensorFunctional.zero(f2.domain)
    x = slot_maximize(z, [r3.basis(2), r3.basis(0)], 1, 2)
    assert derived_norm(x, f2.domain.frames[1], 2) == pytest.approx(1.0, rel=1e-12)
    assert evaluate(z, [r3.basis(2), x]) == 0.0


def test_slot_maximize_does_not_decrease():
    f = _tensor(3)
    rng = np.random.default_rng(0)
    xs = [fr.vectors[0] / derived_norm(fr.vectors[0], fr, 2) for fr in f.domain.frames]
    for _ in range(5):
        i = int(rng.integers(2))
        before = abs(evaluate(f, xs))
        xs[i] = slot_maximize(f, xs, i, 2)
        assert abs(evaluate(f, xs)) >= before - 1e-10
        assert derived_norm(xs[i], f.domain.frames[i], 2) == pytest.approx(1.0, rel=1e-12)


def test_slot_out_of_range(f1, r3):
    with pytest.raises(ValueError):
        slot_maximize(f1, [r3.basis(0)], 1)


# ---- estimators on known instances


@pytest.mark.parametrize("estimator", [estimate_sup_norm, estimate_inf_norm_ratio])
def test_estimators_on_examples(estimator, f1, f2, r3, plane):
    assert 0.98 <= estimator(f1, 1).value <= 1 + 1e-9
    assert 1.96 <= estimator(f2, 2).value <= 2 + 1e-9
    assert estimator(TensorFunctional.zero(f2.domain), 2).value == 0.0
    a = AnchoredFunctional(ProductDomain((plane,)), (r3.vector([0, 2, 0]),))
    assert 1.96 <= estimator(a, 2).value <= 2 + 1e-9


def test_ill_conditioned_frame_rejected(r3):
    e1, e2 = r3.basis(0), r3.basis(1)
    dom = object.__new__(ProductDomain)  # bypass construction-time validation
    object.__setattr__(dom, "frames", (Frame((e1, e1 + 1e-12 * e2)),))
    with pytest.raises(ValueError, match="ill-conditioned frame"):
        estimate_sup_norm(FrameFunctional(dom), 1)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 1.5, 2, 3, "inf"]))
def test_lower_bound_soundness(seed, p):
    f = random_instance(np.random.default_rng(seed), kind="frame-sum")
    est = estimate_sup_norm(f, p, FAST)
    assert est.value <= closed_form_norm(f, p) * (1 + 1e-9)
    assert _feasible(est, f, p)
    assert est.value == pytest.approx(abs(evaluate(f, est.argmax)), rel=1e-12, abs=0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 1.5, 2, 3]))
def test_witness_seeded_single_sweep(seed, p):
    f = random_instance(np.random.default_rng(seed), kind="frame-sum")
    cfg = EstimatorConfig(restarts=1, max_sweeps=1)
    w = fact1_witness(f) if p == 1 else fact2_witness(f, p)
    est = estimate_sup_norm(f, p, cfg, start=w)
    assert rel(est.value, closed_form_norm(f, p)) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_anchored_witness_seeded_single_sweep(seed):
    f = random_instance(np.random.default_rng(seed), kind="anchored")
    est = estimate_sup_norm(f, 2, EstimatorConfig(restarts=1, max_sweeps=1), start=fact3_witness(f))
    assert rel(est.value, closed_form_norm(f, 2)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 10_000),
    st.sampled_from(["tensor", "frame-sum", "anchored"]),
    st.sampled_from([2.0, -0.5]),
    st.sampled_from([1, 2, 3, "inf"]),
)
def test_scale_equivariance(seed, kind, alpha, p):
    f = random_instance(np.random.default_rng(seed), kind=kind)
    base = estimate_sup_norm(f, p, FAST).value
    assert rel(estimate_sup_norm(scaled(f, alpha), p, FAST).value, abs(alpha) * base) < 1e-10


def test_restart_monotonicity():
    f = _tensor(5, dims=(4, 4))
    vals = [estimate_sup_norm(f, 1.5, EstimatorConfig(restarts=r, seed=3)).value for r in (1, 2, 4, 8, 16)]
    for a, b in zip(vals, vals[1:]):
        assert b >= a


@pytest.mark.parametrize("estimator", [estimate_sup_norm, estimate_inf_norm_ratio])
def test_determinism(estimator):
    f = _tensor(6)
    a, b = estimator(f, 3, FAST), estimator(f, 3, FAST)
    assert a.value == b.value
    for x, y in zip(a.argmax, b.argmax):
        assert np.array_equal(x.coords, y.coords)
    assert (a.restarts_used, a.converged) == (b.restarts_used, b.converged)


@pytest.mark.parametrize("p", [1, 1.5, 2, "inf"])
def test_feasibility_on_tensors(p):
    for seed in range(3):
        f = _tensor(20 + seed, k=(1, 3), n=(2, 3))
        for est in (estimate_sup_norm(f, p, FAST), estimate_inf_norm_ratio(f, p, FAST)):
            assert _feasible(est, f, p)


@pytest.mark.skipif(len(available_backends()) < 2, reason="compiled backend not built")
def test_backends_give_same_estimate():
    f = _tensor(8)
    py = estimate_sup_norm(f, 2, EstimatorConfig(restarts=4, backend="python")).value
    cy = estimate_sup_norm(f, 2, EstimatorConfig(restarts=4, backend="cython")).value
    assert rel(py, cy) < 1e-10


# ---- verification reports


def test_verify_fact_examples(f2, r3, plane):
    r = verify_fact(f2, 1, 1)
    assert r.passed and r.lhs == pytest.approx(1.0, rel=1e-9) and r.rhs == pytest.approx(1.0)
    r = verify_fact(f2, 2, 2)
    assert r.passed and r.rhs == pytest.approx(2.0)
    a = AnchoredFunctional(ProductDomain((plane,)), (r3.basis(0),))
    r = verify_fact(a, 3, 2)
    assert r.passed and r.rhs == pytest.approx(1.0)
    assert {d.name for d in r.details} >= {"witness value", "estimate <= closed"}


def test_verify_fact_pairing_errors(f2, r3, plane):
    a = AnchoredFunctional(ProductDomain((plane,)), (r3.basis(0),))
    with pytest.raises(ValueError):
        verify_fact(a, 1)
    with pytest.raises(ValueError):
        verify_fact(f2, 3)
    with pytest.raises(ValueError):
        verify_fact(a, 3, 1)
    with pytest.raises(ValueError):
        verify_fact(f2, 1, 2)
    with pytest.raises(ValueError):
        verify_fact(f2, 2, "inf")
    with pytest.raises(ValueError):
        verify_fact(f2, 4)


def test_lemma_examples(f1, f2):
    assert verify_lemma_equality(f1, 1, tol=0.02).passed
    assert verify_lemma_equality(_tensor(42), 2, tol=0.05).passed
    r = verify_lemma_equality(TensorFunctional.zero(f2.domain), 2)
    assert r.passed and r.lhs == 0.0 and r.rhs == 0.0


def test_sandwich_examples(f1, f2):
    r = verify_sandwich(f1, 2, slack=0.05)
    assert r.passed
    assert r.lhs == pytest.approx(math.sqrt(2), rel=1e-6)
    assert r.rhs == pytest.approx(math.sqrt(2), rel=1e-6)
    assert verify_sandwich(TensorFunctional.zero(f2.domain), 2).passed
    t = _tensor(7, dims=(3, 3))
    assert verify_sandwich(t, 3, slack=0.05).passed


def test_sandwich_detects_violation(f1):
    # a negative slack demands strict slack on a tight inequality
    assert not verify_sandwich(f1, 2, slack=-0.01).passed


def test_corollary_examples(f1):
    assert verify_corollary(f1, 1, 1).passed
    assert verify_corollary(f1, 2, 3).passed
    assert verify_corollary(_tensor(11), 1.5, "inf").passed


def test_equivalence_constant():
    assert equivalence_constant(2, 2, 1) == 1.0
    assert equivalence_constant(2, 2, 2) == 2.0
    assert equivalence_constant(3, 1, "inf") == 3.0
