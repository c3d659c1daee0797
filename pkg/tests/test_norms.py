import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lipmono import norms
from lipmono.errors import ConfigError
from lipmono.norms import ConstraintPolicy, Scheme
from lipmono.verify import finite_diff_grad, relative_error

A = np.array([[1.0, -2.0], [3.0, 4.0]])

matrices = arrays(
    np.float64,
    st.tuples(st.integers(1, 6), st.integers(1, 6)),
    elements=st.floats(-10, 10, allow_nan=False, allow_infinity=False),
)
lams = st.floats(0.05, 20.0)
depths = st.integers(1, 4)


def loop_one_norm(m):
    rows, cols = m.shape
    return max(sum(abs(m[j, k]) for j in range(rows)) for k in range(cols))


def loop_inf_norm(m):
    rows, cols = m.shape
    return max(sum(abs(m[j, k]) for k in range(cols)) for j in range(rows))


def loop_max_abs(m):
    return max(abs(x) for x in m.ravel())


@pytest.mark.parametrize(
    "fn, m, expected",
    [
        (norms.one_norm, A, 6.0),
        (norms.one_norm, np.eye(3), 1.0),
        (norms.inf_norm, A, 7.0),
        (norms.inf_norm, np.eye(3), 1.0),
        (norms.max_abs, A, 4.0),
        (norms.max_abs, np.zeros((2, 3)), 0.0),
    ],
)
def test_norm_examples(fn, m, expected):
    assert fn(m) == expected


@pytest.mark.parametrize(
    "fn, oracle", [(norms.one_norm, loop_one_norm), (norms.inf_norm, loop_inf_norm), (norms.max_abs, loop_max_abs)]
)
def test_norms_match_loop_oracle(rng, fn, oracle):
    for shape in [(6, 4), (4, 6), (1, 5), (5, 1)]:
        m = rng.standard_normal(shape)
        assert fn(m) == pytest.approx(oracle(m), rel=1e-15)


def policy(scheme, lam=1.0, depth=1, mode="forward"):
    return ConstraintPolicy(scheme, mode, lam, depth)


def test_variant_b_leaves_feasible_matrix_alone():
    W = np.array([[0.25, 0.0], [0.25, 0.1]])
    out = norms.normalize_full(W, policy("one_norm_full_b"))
    np.testing.assert_array_equal(out, W)


@pytest.mark.parametrize("scheme", ["one_norm_full_a", "one_norm_full_b"])
def test_full_variants_divide_by_norm(scheme):
    out = norms.normalize_full([[2.0, 0.0], [0.0, 1.0]], policy(scheme))
    np.testing.assert_array_equal(out, [[1.0, 0.0], [0.0, 0.5]])


# W has 1-norm n; entries are scaled copies of a fixed pattern with column sums (n, n/2).
@pytest.mark.parametrize(
    "n, lam, depth, factor_a, factor_b",
    [
        (0.5, 1.0, 1, 1.0, 1.0),
        (2.0, 1.0, 1, 0.5, 0.5),
        (0.5, 4.0, 2, 2.0, 1.0),  # budget 2: A scales up, B keeps W
        (1.5, 4.0, 2, 4.0 / 3.0, 1.0),
        (3.0, 4.0, 2, 2.0 / 3.0, 2.0 / 3.0),
        (0.5, 0.25, 2, 0.5, 1.0),  # budget 0.5: B leaves a matrix at the budget alone
        (2.0, 0.25, 2, 0.25, 0.25),
    ],
)
def test_full_variant_table(n, lam, depth, factor_a, factor_b):
    W = n * np.array([[0.5, 0.25], [-0.5, 0.25]])
    a = norms.normalize_full(W, policy("one_norm_full_a", lam, depth))
    b = norms.normalize_full(W, policy("one_norm_full_b", lam, depth))
    np.testing.assert_allclose(a, factor_a * W, rtol=1e-15)
    np.testing.assert_allclose(b, factor_b * W, rtol=1e-15)


def test_normalize_full_rejects_other_schemes():
    with pytest.raises(ConfigError):
        norms.normalize_full(A, policy("one_norm_columnwise"))


@pytest.mark.parametrize("lam, depth", [(0.0, 1), (-1.0, 1), (float("nan"), 1), (1.0, 0)])
def test_policy_validation(lam, depth):
    with pytest.raises(ConfigError):
        ConstraintPolicy("one_norm_full_b", "forward", lam, depth)


def test_columnwise_example():
    out = norms.normalize_columnwise([[2.0, 0.0], [2.0, 1.0]], policy("one_norm_columnwise"))
    np.testing.assert_array_equal(out, [[0.5, 0.0], [0.5, 1.0]])


def test_columnwise_zero_matrix():
    np.testing.assert_array_equal(norms.normalize_columnwise(np.zeros((3, 2)), policy("one_norm_columnwise")), 0.0)


def test_columnwise_random_budget_and_untouched_columns(rng):
    W = rng.standard_normal((8, 8))
    W[:, ::2] *= 0.02  # these columns start inside the budget
    pol = policy("one_norm_columnwise", 2.0, 2)
    budget = 2.0 ** 0.5
    out = norms.normalize_columnwise(W, pol)
    sums = np.abs(out).sum(axis=0)
    assert np.all(sums <= budget * (1 + 1e-12))
    feasible = np.abs(W).sum(axis=0) <= budget
    assert feasible.any() and (~feasible).any()
    np.testing.assert_array_equal(out[:, feasible], W[:, feasible])


def test_columnwise_touches_fewer_columns_than_full(rng):
    W = rng.standard_normal((6, 6)) * 0.02
    W[:, 0] *= 500
    pol_c = policy("one_norm_columnwise")
    pol_b = policy("one_norm_full_b")
    col = norms.normalize_columnwise(W, pol_c)
    full = norms.normalize_full(W, pol_b)
    assert norms.one_norm(col) <= 1 + 1e-12 and norms.one_norm(full) <= 1 + 1e-12
    untouched_col = np.sum(np.all(col == W, axis=0))
    untouched_full = np.sum(np.all(full == W, axis=0))
    assert untouched_col > untouched_full


def test_inf_scheme_single_layer():
    out = norms.normalize_inf_scheme([[[3.0, -0.5], [0.2, -7.0]]], 1.0)
    assert norms.max_abs(out[0]) <= 1.0
    np.testing.assert_array_equal(out[0], [[1.0, -0.5], [0.2, -1.0]])


def test_inf_scheme_identity_stack_unchanged():
    out = norms.normalize_inf_scheme([np.eye(3), np.eye(3)], 1.0)
    for m in out:
        np.testing.assert_array_equal(m, np.eye(3))
    assert norms.certificate(out, policy("inf_norm", 1.0, 2)) == 1.0


def test_inf_scheme_random_stack(rng):
    layers = [rng.standard_normal((5, 4)), rng.standard_normal((5, 5)), rng.standard_normal((2, 5))]
    for lam in (0.3, 1.0, 7.0):
        out = norms.normalize_inf_scheme(layers, lam)
        cert = norms.max_abs(out[0]) * norms.inf_norm(out[1]) * norms.inf_norm(out[2])
        assert cert <= lam * (1 + 1e-9)


def test_inf_scheme_empty():
    with pytest.raises(ConfigError):
        norms.normalize_inf_scheme([], 1.0)


def test_certificate_examples():
    a = np.array([[0.25], [0.25]])  # 1-norm 0.5
    b = np.array([[3.0, 0.0]])  # 1-norm 3
    assert norms.certificate([a, b], policy("one_norm_columnwise", 1.0, 2)) == 1.5
    assert norms.certificate([np.eye(4)] * 3, policy("one_norm_full_b", 1.0, 3)) == 1.0


@pytest.mark.parametrize("scheme", list(Scheme))
def test_certificate_after_projection_100_stacks(rng, scheme):
    for _ in range(100):
        depth = int(rng.integers(1, 5))
        widths = rng.integers(1, 7, depth + 1)
        lam = float(np.exp(rng.uniform(-2, 2)))
        pol = policy(scheme, lam, depth)
        raw = [rng.standard_normal((widths[i + 1], widths[i])) * 3 for i in range(depth)]
        out = [norms.project_layer(w, i, pol) for i, w in enumerate(raw)]
        assert norms.certificate(out, pol) <= lam + 1e-9


@settings(max_examples=200, deadline=None)
@given(matrices, lams, depths, st.sampled_from(list(Scheme)), st.integers(0, 1))
def test_normalization_is_idempotent(m, lam, depth, scheme, index):
    pol = policy(scheme, lam, depth)
    # variant A rescales feasible matrices unless the budget is 1, so only its projection is idempotent
    op = norms.project_layer if scheme is Scheme.ONE_NORM_FULL_A else norms.normalize_layer
    once = op(m, index, pol)
    np.testing.assert_array_equal(op(once, index, pol), once)


@settings(max_examples=200, deadline=None)
@given(matrices, lams, depths, st.sampled_from([Scheme.ONE_NORM_FULL_B, Scheme.ONE_NORM_COLUMNWISE, Scheme.INF_NORM]))
def test_feasible_matrices_are_fixed_points(m, lam, depth, scheme):
    pol = policy(scheme, lam, depth)
    shrunk = m / (1.0 + norms.one_norm(m) + norms.inf_norm(m)) * pol.layer_budget
    for index in (0, 1):
        np.testing.assert_array_equal(norms.normalize_layer(shrunk, index, pol), shrunk)


@settings(max_examples=200, deadline=None)
@given(matrices, lams, depths, st.sampled_from(list(Scheme)), st.integers(0, 3))
def test_normalized_layer_within_budget(m, lam, depth, scheme, index):
    pol = policy(scheme, lam, depth)
    out = norms.normalize_layer(m, index, pol)
    assert norms.layer_norm(out, index, scheme) <= pol.layer_budget * (1 + 1e-12)


def test_variant_a_is_not_a_projection_when_budget_differs_from_one():
    W = np.array([[0.1, 0.0], [0.0, 0.1]])
    pol = policy("one_norm_full_a", 4.0, 2)
    assert not np.array_equal(norms.normalize_layer(W, 0, pol), W)
    np.testing.assert_array_equal(norms.project_layer(W, 0, pol), W)


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("index", [0, 1])
@pytest.mark.parametrize("lam", [1.0, 3.0])
def test_normalize_vjp_matches_finite_differences(rng, scheme, index, lam):
    pol = policy(scheme, lam, 2)
    W = rng.standard_normal((4, 3)) * 1.5
    # one column and one row clearly infeasible, everything away from kinks and ties
    W[:, 1] *= 3.0
    W[2] *= 2.0
    G = rng.standard_normal(W.shape)
    analytic = norms.normalize_layer_vjp(W, index, pol, G)
    numeric = finite_diff_grad(lambda w: np.sum(G * norms.normalize_layer(w, index, pol)), W, 1e-6)
    assert relative_error(analytic, numeric) < 1e-7


@pytest.mark.parametrize("scheme", list(Scheme))
def test_vjp_is_identity_on_feasible_interior(rng, scheme):
    pol = policy(scheme, 1.0, 1)
    W = rng.standard_normal((3, 3)) * 0.01
    G = rng.standard_normal((3, 3))
    np.testing.assert_array_equal(norms.normalize_layer_vjp(W, 0, pol, G), G)


def test_vjp_uses_unscaled_branch_at_kink():
    W = np.array([[0.5, 0.1], [0.5, 0.2]])  # first column sum exactly 1
    G = np.array([[1.0, 2.0], [3.0, 4.0]])
    for scheme in ("one_norm_columnwise", "one_norm_full_b"):
        np.testing.assert_array_equal(norms.normalize_layer_vjp(W, 0, policy(scheme), G), G)
