import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelverify.dataset import generate_synthetic_protocol
from kernelverify.errors import DegenerateStationaryPoint, DegenerateWithinScatter, ValidationError
from kernelverify.kernel_learning import (
    DINKELBACH,
    FIXED_ALPHA,
    LearnOptions,
    ScatterSummaries,
    class_pair_weight,
    criterion_q,
    learn_kernel,
    scatter_summaries,
    solve_mu,
    solve_mu_from_diagonal,
    trace_ratio,
)
from kernelverify.kernels import KernelSpec, gram_matrix
from kernelverify.spectral import assemble_k_mu, decompose

from oracles import brute_force_summaries, input_space_traces


def small_instance(seed, n_classes=None, extra=4, dim=None):
    """Random training block (n <= 20) followed by unlabeled extra rows."""
    rng = np.random.default_rng(seed)
    c = n_classes or int(rng.integers(2, 5))
    sizes = rng.integers(2, 6, size=c)
    while sizes.sum() > 20:
        sizes[np.argmax(sizes)] -= 1
    labels = np.repeat([f"k{i}" for i in range(c)], sizes)
    dim = dim or int(rng.integers(2, 7))
    centres = rng.standard_normal((c, dim)) * 3
    X_train = centres.repeat(sizes, axis=0) + rng.standard_normal((sizes.sum(), dim))
    X = np.vstack([X_train, rng.standard_normal((extra, dim)) * 3])
    return X, labels


def linear_model(X):
    return decompose(gram_matrix(KernelSpec.linear(), X))


# class_pair_weight

def test_pair_weight_same_class():
    labels = ["a"] * 4 + ["b"] * 2
    assert class_pair_weight(labels, 0, 3, "a") == 0.25


def test_pair_weight_different_classes():
    labels = ["a"] * 4 + ["b"] * 2
    assert class_pair_weight(labels, 0, 4, "a") == 0.0
    assert class_pair_weight(labels, 0, 4, "b") == 0.0


def test_pair_weight_sums_to_class_size():
    labels = ["a"] * 4 + ["b"] * 2 + ["c"] * 3
    for cls, size in (("a", 4), ("b", 2), ("c", 3)):
        total = sum(class_pair_weight(labels, j, k, cls) for j in range(9) for k in range(9))
        assert total == pytest.approx(size)


# scatter summaries

def test_summaries_match_input_space_traces():
    rng = np.random.default_rng(11)
    X_train = rng.standard_normal((6, 3))
    labels = ["a"] * 3 + ["b"] * 3
    m = linear_model(X_train)
    s = scatter_summaries(m, labels)
    mu = m.baseline_mu()
    sb, sw = input_space_traces(X_train, labels)
    assert s.between(mu) == pytest.approx(sb, rel=1e-8)
    assert s.within(mu) == pytest.approx(sw, rel=1e-8)


def test_identical_training_samples_have_no_within_scatter():
    X = np.vstack([np.tile([1.0, 2.0, 0.5], (6, 1)), [[0.0, 1.0, 3.0], [2.0, 0.0, 1.0]]])
    m = linear_model(X)
    s = scatter_summaries(m, ["a"] * 3 + ["b"] * 3, 6)
    np.testing.assert_allclose(s.g, 0.0, atol=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_grouped_sums_match_double_loop(seed):
    X, labels = small_instance(seed)
    m = decompose(gram_matrix(KernelSpec.rbf(3.0), X))
    s = scatter_summaries(m, labels, labels.size)
    f, g = brute_force_summaries(m.eigenvectors[: labels.size], labels)
    np.testing.assert_allclose(s.f, f, atol=1e-10, rtol=0)
    np.testing.assert_allclose(s.g, g, atol=1e-10, rtol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_trace_identity(seed):
    X, labels = small_instance(seed)
    n = labels.size
    m = decompose(gram_matrix(KernelSpec.rbf(2.0), X))
    s = scatter_summaries(m, labels, n)
    mu = np.random.default_rng(seed).standard_normal(m.p)
    Kt = assemble_k_mu(m, mu)[:n, :n]
    total = np.trace(Kt) / n - Kt.sum() / n ** 2
    assert s.between(mu) + s.within(mu) == pytest.approx(total, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_summaries_non_negative(seed):
    X, labels = small_instance(seed)
    s = scatter_summaries(decompose(gram_matrix(KernelSpec.rbf(2.0), X)), labels, labels.size)
    assert np.all(s.g >= -1e-10) and np.all(s.f >= -1e-10)


def test_summaries_need_two_classes():
    m = linear_model(np.random.default_rng(0).standard_normal((5, 3)))
    with pytest.raises(ValidationError):
        scatter_summaries(m, ["a"] * 5)


# criterion and closed-form coefficients

def test_criterion_zero_mu():
    s = ScatterSummaries(np.array([1.0, 2.0]), np.array([0.5, 0.5]))
    assert criterion_q(s, np.zeros(2), 1.3) == 0.0


def test_criterion_vanishes_at_ratio():
    X, labels = small_instance(3)
    m = linear_model(X)
    s = scatter_summaries(m, labels, labels.size)
    mu = np.random.default_rng(3).standard_normal(m.p)
    alpha = s.between(mu) / s.within(mu)
    assert criterion_q(s, mu, alpha) == pytest.approx(0.0, abs=1e-12 * s.between(mu))


def test_criterion_matches_double_loop_traces():
    X, labels = small_instance(5, n_classes=3)
    n = labels.size
    m = decompose(gram_matrix(KernelSpec.rbf(2.5), X))
    s = scatter_summaries(m, labels, n)
    mu = np.random.default_rng(5).standard_normal(m.p)
    f, g = brute_force_summaries(m.eigenvectors[:n], labels)
    alpha = 0.7
    expected = np.sum(mu ** 2 * f) - alpha * np.sum(mu ** 2 * g)
    assert criterion_q(s, mu, alpha) == pytest.approx(expected, rel=1e-9)


def test_criterion_rejects_nonpositive_alpha():
    s = ScatterSummaries(np.ones(2), np.ones(2))
    with pytest.raises(ValidationError):
        criterion_q(s, np.ones(2), 0.0)


def test_solve_mu_hand_case():
    s = ScatterSummaries(np.array([2.0, 1.0]), np.array([1.0, 1.0]))
    mu = solve_mu(s, np.array([4.0, 1.0]), 0.5)
    np.testing.assert_allclose(mu, [0.75, 2.25], rtol=0, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.1, 1.0, 37.0])
def test_solve_mu_single_coefficient(alpha):
    s = ScatterSummaries(np.array([0.3]), np.array([0.2]))
    assert solve_mu(s, np.array([9.0]), alpha) == pytest.approx([3.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False).filter(lambda v: abs(v) > 1e-3),
                min_size=1, max_size=12),
       st.floats(0.1, 100))
def test_solve_mu_sign_flip_invariance_and_constraint(diag, beta):
    diag = np.array(diag)
    try:
        mu = solve_mu_from_diagonal(diag, beta)
    except DegenerateStationaryPoint:
        with pytest.raises(DegenerateStationaryPoint):
            solve_mu_from_diagonal(-diag, beta)
        return
    np.testing.assert_array_equal(solve_mu_from_diagonal(-diag, beta), mu)
    assert np.sum(mu) == pytest.approx(beta, rel=1e-8)


def test_solve_mu_sign_flip_with_exact_zero():
    diag = np.array([2.0, 0.0, -1.0])
    np.testing.assert_array_equal(solve_mu_from_diagonal(-diag, 3.0),
                                  solve_mu_from_diagonal(diag, 3.0))


def test_solve_mu_degenerate():
    with pytest.raises(DegenerateStationaryPoint):
        solve_mu_from_diagonal(np.array([1.0, -1.0]), 1.0)


# learn_kernel

def test_fixed_alpha_is_one_closed_form_call():
    X, labels = small_instance(2)
    m = linear_model(X)
    res = learn_kernel(m, labels, labels.size, LearnOptions(FIXED_ALPHA, alpha=0.8))
    s = scatter_summaries(m, labels, labels.size)
    np.testing.assert_array_equal(res.mu, solve_mu(s, m.eigenvalues, 0.8))
    assert res.iterations == 1 and res.alpha == 0.8


def test_single_base_kernel_converges_immediately():
    X = np.array([[1.0], [2.0], [4.0], [5.0], [3.0]])
    labels = ["a", "a", "b", "b"]
    m = linear_model(X)
    assert m.p == 1
    res = learn_kernel(m, labels, 4)
    s = scatter_summaries(m, labels, 4)
    np.testing.assert_allclose(res.mu, np.sqrt(m.eigenvalues))
    assert res.ratio_trace == pytest.approx(s.f[0] / s.g[0])
    assert res.iterations == 1


def test_best_iterate_never_below_initializer():
    ds = generate_synthetic_protocol(2, 1, 6, 4, 12.0, "none", seed=0)
    m = decompose(gram_matrix(KernelSpec.rbf(4.0), ds))
    res = learn_kernel(m, ds.train_labels, ds.n)
    s = scatter_summaries(m, ds.train_labels, ds.n)
    assert res.ratio_trace >= trace_ratio(s, m.baseline_mu())
    assert res.ratio_trace == pytest.approx(trace_ratio(s, res.mu))
    assert np.sum(res.mu) == pytest.approx(res.beta, rel=1e-8)


def test_degenerate_within_scatter():
    X = np.vstack([np.tile([1.0, 0.0], (3, 1)), np.tile([0.0, 1.0], (3, 1))])
    m = linear_model(X)
    with pytest.raises(DegenerateWithinScatter):
        learn_kernel(m, ["a"] * 3 + ["b"] * 3, 6)


_MC_KERNELS = [
    pytest.param(KernelSpec.linear(), marks=pytest.mark.xfail(
        strict=True, reason="stationary-point iterates stay below random feasible mu")),
    pytest.param(KernelSpec.rbf(5.0), marks=pytest.mark.xfail(
        strict=True, reason="stationary-point iterates stay below random feasible mu")),
    KernelSpec.polynomial(0.0001, 1, 2),
]


@pytest.mark.parametrize("spec", _MC_KERNELS, ids=["linear", "rbf5", "poly"])
def test_dinkelbach_beats_random_feasible_mu(spec):
    ds = generate_synthetic_protocol(3, 2, 4, 5, 10.0, "none", seed=7)
    m = decompose(gram_matrix(spec, ds))
    res = learn_kernel(m, ds.train_labels, ds.n)
    s = scatter_summaries(m, ds.train_labels, ds.n)
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((10_000, m.p)) * np.sqrt(m.eigenvalues).mean()
    Z += (res.beta - Z.sum(axis=1, keepdims=True)) / m.p
    np.testing.assert_allclose(Z.sum(axis=1), res.beta, rtol=1e-8)
    ratios = (Z ** 2 @ s.f) / (Z ** 2 @ s.g)
    assert res.ratio_trace >= ratios.max()


def test_options_roundtrip_and_validation():
    assert LearnOptions.from_dict({"mode": "dinkelbach", "tol": 1e-8, "max_iter": 100}) == LearnOptions()
    assert LearnOptions.from_dict({"mode": "fixed_alpha", "alpha": 1.0}).alpha == 1.0
    assert LearnOptions().to_dict() == {"mode": DINKELBACH, "tol": 1e-8, "max_iter": 100}
    with pytest.raises(ValidationError):
        LearnOptions(FIXED_ALPHA)
    with pytest.raises(ValidationError):
        LearnOptions("gradient")
