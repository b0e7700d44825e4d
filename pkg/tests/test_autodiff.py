import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from didan import autodiff as ad
from didan.errors import ShapeError


def finite_diff(f, x, h=1e-6):
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f()
        flat[i] = orig - h
        down = f()
        flat[i] = orig
        gf[i] = (up - down) / (2 * h)
    return g


def grad_of(build, x):
    node = ad.parameter(x)
    loss = build(node)
    grads = ad.backward(loss, wrt=[node])
    return grads[id(node)]


class TestForwardExamples:
    def test_softmax_uniform_on_equal_logits(self):
        out = ad.softmax_rows(ad.constant(np.zeros((1, 3)))).value
        np.testing.assert_allclose(out, np.full((1, 3), 1 / 3))

    def test_sigmoid_midpoint(self):
        out = ad.sigmoid(ad.constant(np.array([0.0]))).value
        assert out[0] == 0.5

    def test_cosine_orthonormal_basis(self):
        rows = ad.constant(np.array([[1.0, 0.0]]))
        cols = ad.constant(np.array([[1.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_allclose(
            ad.cosine_matrix(rows, cols).value, [[1.0, 0.0]], atol=1e-12
        )

    def test_cosine_zero_row_is_not_an_error(self):
        rows = ad.constant(np.array([[0.0, 0.0], [1.0, 1.0]]))
        cols = ad.constant(np.array([[1.0, 0.0]]))
        out = ad.cosine_matrix(rows, cols).value
        assert np.isfinite(out).all()
        assert out[0, 0] == 0.0

    def test_mean_rows(self):
        x = ad.constant(np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_allclose(ad.mean_rows(x).value, [2.0, 3.0])

    def test_concat_and_stack(self):
        a = ad.constant(np.array([1.0]))
        b = ad.constant(np.array([2.0, 3.0]))
        np.testing.assert_allclose(ad.concat_last_axis([a, b]).value, [1, 2, 3])
        c = ad.constant(np.array([1.0, 2.0]))
        d = ad.constant(np.array([3.0, 4.0]))
        np.testing.assert_allclose(ad.stack_rows([c, d]).value, [[1, 2], [3, 4]])


class TestShapeErrors:
    def test_matmul_mismatch_names_op(self):
        a = ad.constant(np.zeros((2, 3)))
        b = ad.constant(np.zeros((4, 2)))
        with pytest.raises(ShapeError, match="matmul"):
            ad.matmul(a, b)

    def test_cosine_dim_mismatch(self):
        with pytest.raises(ShapeError, match="cosine_matrix"):
            ad.cosine_matrix(ad.constant(np.zeros((2, 3))), ad.constant(np.zeros((2, 4))))

    def test_backward_requires_scalar(self):
        x = ad.parameter(np.zeros((2, 2)))
        with pytest.raises(ShapeError, match="backward"):
            ad.backward(ad.relu(x))

    def test_batchnorm_batch_of_one_in_training(self):
        x = ad.constant(np.zeros((1, 3)))
        g = ad.parameter(np.ones(3))
        b = ad.parameter(np.zeros(3))
        with pytest.raises(ShapeError, match="batchnorm"):
            ad.batchnorm(x, g, b, np.zeros(3), np.ones(3), training=True)


class TestBackwardExamples:
    def test_sigmoid_grad_at_zero(self):
        x = ad.parameter(np.array([0.0]))
        grads = ad.backward(ad.sigmoid(x), wrt=[x])
        np.testing.assert_allclose(grads[id(x)], [0.25])

    def test_constant_only_graph_empty_gradient_map(self):
        loss = ad.sum_all(ad.relu(ad.constant(np.ones((2, 2)))))
        assert ad.backward(loss) == {}

    def test_mean_rows_matmul_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 2))
        w = np.ones((2, 2))

        def build(node):
            return ad.sum_all(ad.mean_rows(ad.matmul(node, ad.constant(w))))

        analytic = grad_of(build, x.copy())
        xx = x.copy()
        numeric = finite_diff(
            lambda: float(build(ad.parameter(xx)).value[0]), xx, h=1e-4
        )
        np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-8)

    def test_grad_accumulates_over_shared_nodes(self):
        x = ad.parameter(np.array([2.0]))
        loss = ad.sum_all(ad.mul(x, x))
        np.testing.assert_allclose(ad.backward(loss, wrt=[x])[id(x)], [4.0])


@st.composite
def small_graph_case(draw):
    m = draw(st.integers(2, 4))
    k = draw(st.integers(2, 4))
    n = draw(st.integers(2, 4))
    seed = draw(st.integers(0, 10_000))
    op = draw(st.sampled_from(["chain", "cosine", "softmax", "bn"]))
    return m, k, n, seed, op


class TestBackwardProperty:
    @settings(max_examples=40, deadline=None, derandomize=True)
    @given(small_graph_case())
    def test_random_composite_graphs_match_finite_differences(self, case):
        m, k, n, seed, op = case
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((m, k))
        w = rng.standard_normal((k, n))
        extra = rng.standard_normal((3, n))

        def build(node):
            h = ad.matmul(node, ad.constant(w))
            if op == "chain":
                h = ad.sigmoid(ad.relu(h))
            elif op == "cosine":
                h = ad.cosine_matrix(h, ad.constant(extra))
            elif op == "softmax":
                h = ad.softmax_rows(h)
            elif op == "bn":
                h = ad.batchnorm(
                    h,
                    ad.constant(np.ones(n)),
                    ad.constant(np.zeros(n)),
                    np.zeros(n),
                    np.ones(n),
                    training=True,
                    update_stats=False,
                )
            return ad.sum_all(ad.mean_rows(h))

        analytic = grad_of(build, x.copy())
        xx = x.copy()
        numeric = finite_diff(
            lambda: float(build(ad.parameter(xx)).value[0]), xx, h=1e-5
        )
        rel = np.abs(analytic - numeric) / np.maximum(
            np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6
        )
        assert rel.max() < 1e-3


class TestInvariants:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_softmax_rows_sum_to_one_entries_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((4, 5)) * 10
        y = ad.softmax_rows(ad.constant(x)).value
        np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-6)
        assert ((y > 0) & (y < 1)).all()

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.floats(1e-2, 1e2))
    def test_cosine_invariant_to_positive_row_rescaling(self, seed, factor):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((5, 4))
        base = ad.cosine_matrix(ad.constant(a), ad.constant(b)).value
        scaled = ad.cosine_matrix(ad.constant(a * factor), ad.constant(b)).value
        np.testing.assert_allclose(base, scaled, rtol=1e-5, atol=1e-7)
        assert (np.abs(base) <= 1.0 + 1e-9).all()

    def test_mean_rows_permutation_invariant(self, rng):
        x = rng.standard_normal((5, 3))
        perm = rng.permutation(5)
        np.testing.assert_allclose(
            ad.mean_rows(ad.constant(x)).value,
            ad.mean_rows(ad.constant(x[perm])).value,
            atol=1e-12,
        )

    def test_concat_last_axis_order_covariant(self, rng):
        a, b = rng.standard_normal(2), rng.standard_normal(3)
        ab = ad.concat_last_axis([ad.constant(a), ad.constant(b)]).value
        ba = ad.concat_last_axis([ad.constant(b), ad.constant(a)]).value
        np.testing.assert_allclose(ab, np.concatenate([a, b]))
        np.testing.assert_allclose(ba, np.concatenate([b, a]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_primitives_keep_finite_values_finite(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((3, 4)) * 100
        node = ad.constant(x)
        for out in (
            ad.relu(node),
            ad.sigmoid(node),
            ad.softmax_rows(node),
            ad.row_l2_norms(node),
            ad.cosine_matrix(node, node),
        ):
            assert np.isfinite(out.value).all()


class TestTensorOpDispatch:
    def test_dispatch_matches_direct_calls(self, rng):
        a = ad.constant(rng.standard_normal((2, 3)))
        b = ad.constant(rng.standard_normal((3, 2)))
        np.testing.assert_array_equal(
            ad.tensor_op("matmul", [a, b]).value, ad.matmul(a, b).value
        )
        np.testing.assert_array_equal(
            ad.tensor_op("relu", [a]).value, ad.relu(a).value
        )

    def test_unknown_kind(self):
        with pytest.raises(ShapeError, match="unknown op kind"):
            ad.tensor_op("conv2d", [])
