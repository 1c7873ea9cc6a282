import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emojipred.errors import NonFiniteError
from emojipred.numeric import (
    AdamState,
    Parameter,
    RngStreams,
    Tensor,
    adam_step,
    backward,
    cross_entropy,
    derive_seed,
    dropout,
    float64_mode,
    gelu,
    grad_check,
    layer_norm,
    masked_mean,
    masked_softmax,
    matmul,
    no_grad,
    softmax_rows,
    splitmix64,
)


def test_default_dtype_float32_and_float64_switch():
    assert Tensor([1.0]).dtype == np.float32
    with float64_mode():
        assert Tensor([1.0]).dtype == np.float64
    assert Tensor([1.0]).dtype == np.float32


def test_broadcast_add_backward_sums_over_broadcast_axes():
    a = Parameter(np.ones((3, 4)), "a")
    b = Parameter(np.ones(4), "b")
    backward((a + b).sum())
    assert np.array_equal(a.grad, np.ones((3, 4)))
    assert np.array_equal(b.grad, np.full(4, 3.0))


def test_second_backward_on_freed_graph_raises():
    a = Parameter(np.ones(2), "a")
    loss = (a * a).sum()
    backward(loss)
    with pytest.raises(RuntimeError):
        backward(loss)


def test_shared_subexpression_accumulates_gradients():
    with float64_mode():
        a = Parameter(np.array([2.0]), "a")
        y = a * a
        backward((y + y).sum())
    assert a.grad[0] == pytest.approx(8.0)


def test_non_finite_results_surface_as_errors():
    with pytest.raises(NonFiniteError), np.errstate(divide="ignore"):
        Tensor([1.0]) / Tensor([0.0])
    with pytest.raises(NonFiniteError):
        Tensor([np.inf])


def test_no_grad_builds_no_graph():
    a = Parameter(np.ones(2), "a")
    with no_grad():
        y = (a * a).sum()
    assert not y.requires_grad


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(1e-3, 1e4))
def test_softmax_rows_sum_to_one_across_magnitudes(seed, scale):
    x = np.random.default_rng(seed).uniform(-scale, scale, (4, 7))
    p = softmax_rows(Tensor(x)).data
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(-50, 50))
def test_cross_entropy_shift_invariance(seed, c):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(5, 4))
    y = rng.integers(0, 4, 5)
    a = cross_entropy(Tensor(z), y).item()
    b = cross_entropy(Tensor(z + c), y).item()
    assert abs(a - b) < 1e-5


def test_masked_softmax_gives_zero_mass_to_masked_columns():
    x = Tensor(np.random.default_rng(0).normal(size=(3, 6)))
    keep = np.array([True, True, False, True, False, False])
    p = masked_softmax(x, keep).data
    assert np.all(p[:, ~keep] == 0.0)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-6)


def test_masked_softmax_all_masked_row_is_an_error():
    with pytest.raises(ValueError):
        masked_softmax(Tensor(np.zeros((1, 3))), np.zeros(3, dtype=bool))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31))
def test_matmul_backward_matches_finite_differences(m, k, n, seed):
    rng = np.random.default_rng(seed)
    with float64_mode():
        a = Parameter(rng.normal(size=(m, k)), "a")
        b = Parameter(rng.normal(size=(k, n)), "b")
        w = rng.normal(size=(m, n))
        err = grad_check(lambda: (matmul(a, b) * Tensor(w)).sum(), [a, b], seed=seed)
    assert err < 1e-6


def test_grad_check_on_linear_loss_is_exact():
    with float64_mode():
        a = Parameter(np.random.default_rng(0).normal(size=(10,)), "a")
        c = Tensor(np.arange(10.0))
        assert grad_check(lambda: (a * c).sum(), [a]) < 1e-8


def test_grad_check_requires_float64():
    a = Parameter(np.ones(3, dtype=np.float32), "a")
    with pytest.raises(ValueError):
        grad_check(lambda: a.sum(), [a])


@pytest.mark.parametrize("op", ["layer_norm", "gelu", "masked_mean", "cross_entropy"])
def test_fused_op_gradients(op):
    rng = np.random.default_rng(3)
    with float64_mode():
        x = Parameter(rng.normal(size=(2, 5, 6)), "x")
        g = Parameter(rng.normal(size=6), "g")
        b = Parameter(rng.normal(size=6), "b")
        mask = np.array([[1, 1, 1, 0, 0], [1, 1, 1, 1, 1]])
        w = Tensor(rng.normal(size=(2, 5, 6)))
        fns = {
            "layer_norm": (lambda: (layer_norm(x, g, b) * w).sum(), [x, g, b]),
            "gelu": (lambda: (gelu(x) * w).sum(), [x]),
            "masked_mean": (lambda: (masked_mean(x, mask) * Tensor(w.data[:, 0, :])).sum(), [x]),
            "cross_entropy": (lambda: cross_entropy(x.reshape(10, 6), np.arange(10) % 6), [x]),
        }
        fn, params = fns[op]
        assert grad_check(fn, params, n_coords=30) < 1e-6


def test_dropout_is_inverted_and_off_in_eval():
    x = Tensor(np.ones((200, 200)))
    assert dropout(x, 0.5, None, train=False) is x
    y = dropout(x, 0.5, np.random.default_rng(0), train=True).data
    assert set(np.unique(y)) <= {0.0, 2.0}
    assert abs(y.mean() - 1.0) < 0.02


def test_adam_zero_gradient_leaves_parameter_and_increments_t():
    p = Parameter(np.array([1.5]), "p")
    p.grad = np.zeros(1)
    st_ = AdamState()
    adam_step([p], st_)
    assert p.data[0] == np.float32(1.5) and st_.t == 1


def test_adam_first_step_magnitude_is_lr():
    for g in (1e-4, 3.0, -200.0):
        with float64_mode():
            p = Parameter(np.array([0.0]), "p")
        p.grad = np.array([g])
        adam_step([p], AdamState(lr=0.01))
        assert abs(abs(p.data[0]) - 0.01) < 1e-6


def test_adam_quadratic_matches_scalar_simulation():
    # independent scalar simulation of w^2 under bias-corrected Adam
    with float64_mode():
        w = Parameter(np.array([1.0]), "w")
        state = AdamState(lr=0.1)
        mags = []
        m = v = 0.0
        ref = 1.0
        for t in range(1, 51):
            backward((w * w).sum())
            adam_step([w], state)
            g = 2 * ref
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            ref -= 0.1 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
            assert w.data[0] == pytest.approx(ref, abs=1e-12)
            mags.append(abs(w.data[0]))
    # Adam at lr=0.1 overshoots zero around step 12, so |w| shrinks steadily only until then
    assert all(b < a for a, b in zip(mags[:10], mags[1:11]))
    assert max(mags[11:]) < 0.3 and mags[-1] < 0.01


def test_adam_zeroes_grads_and_is_deterministic():
    def run():
        with float64_mode():
            p = Parameter(np.arange(4.0), "p")
        state = AdamState()
        for _ in range(5):
            backward((p * p).sum())
            adam_step([p], state)
            assert p.grad is None or not np.any(p.grad)
        return p.data.copy()

    assert np.array_equal(run(), run())


def test_splitmix64_known_value():
    # first output of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_rng_streams_are_named_and_reproducible():
    a, b = RngStreams(42), RngStreams(42)
    assert np.array_equal(a.get("dropout").random(5), b.get("dropout").random(5))
    assert not np.array_equal(RngStreams(42).get("init").random(5), RngStreams(42).get("dropout").random(5))
    assert derive_seed(42, "init") != derive_seed(43, "init")
    assert a.fresh("x").random() == b.fresh("x").random()
