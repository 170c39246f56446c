import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cufsr import tensor as T


def _fd_grad(f, x, h=1e-6):
    """Central finite differences of scalar f over every element of x."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy(); xp[idx] += h
        xm = x.copy(); xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def _check_op_grad(op, shapes, seed=0, tol=1e-6, h=1e-6):
    """Gradient of sum(op(xs)) wrt each input vs finite differences (f64)."""
    rng = np.random.default_rng(seed)
    datas = [rng.standard_normal(s) for s in shapes]
    for i in range(len(shapes)):
        def f(xi):
            args = [d.copy() for d in datas]
            args[i] = xi
            return float(op(*[T.Tensor(a) for a in args]).data.sum())

        xs = [T.Tensor(d) for d in datas]
        xs[i].requires_grad = True
        with T.Tape() as tape:
            out = op(*xs)
            loss = T.scale(T.reshape(out, (out.data.size,)), 1.0)
            total = T.sum_last(loss)
            tape.backward(total)
        fd = _fd_grad(f, datas[i], h)
        np.testing.assert_allclose(xs[i].grad, fd, rtol=tol, atol=tol)


def test_dense_grad():
    _check_op_grad(lambda x, w, b: T.dense(x, w, b), [(5, 4), (4, 3), (3,)])


def test_conv2d_grad():
    _check_op_grad(lambda x, w, b: T.conv2d(x, w, b),
                   [(4, 5, 2), (3, 2, 3, 3), (3,)], tol=1e-5)


def test_depthwise_grad():
    _check_op_grad(lambda x, w: T.depthwise_conv2d(x, w), [(4, 5, 3), (3, 3, 3)],
                   tol=1e-5)


def test_elementwise_grads():
    _check_op_grad(T.add, [(4, 3), (4, 3)])
    _check_op_grad(T.sub, [(4, 3), (4, 3)])
    _check_op_grad(T.mul, [(4, 3), (4, 3)])
    _check_op_grad(lambda x: T.scale(x, -2.5), [(4, 3)])


def test_structural_op_grads():
    _check_op_grad(lambda x: T.unfold(x, 3), [(4, 5, 2)])
    _check_op_grad(lambda x: T.pixel_shuffle(x, 2), [(3, 4, 8)])
    _check_op_grad(lambda x: T.pixel_unshuffle(x, 2), [(4, 6, 2)])
    _check_op_grad(lambda x: T.nearest_sample(x, 2.5, 1.5), [(3, 4, 2)])
    _check_op_grad(T.transpose_last2, [(3, 4, 5)])
    _check_op_grad(lambda x: T.take_rows(x, np.array([0, 2, 2, 1])), [(3, 4)])
    _check_op_grad(lambda x: T.gather_pixels(x, np.array([0, 2, 2]),
                                             np.array([1, 1])), [(3, 4, 2)])
    _check_op_grad(lambda a, b: T.concat_last([a, b]), [(3, 2), (3, 4)])


def test_relu_grad_away_from_kink():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((6, 6))
    x[np.abs(x) < 0.05] = 0.1    # keep FD away from the nondifferentiable point
    x_t = T.Tensor(x)
    x_t.requires_grad = True
    with T.Tape() as tape:
        out = T.sum_last(T.reshape(T.relu(x_t), (x.size,)))
        tape.backward(out)
    fd = _fd_grad(lambda v: float(np.maximum(v, 0).sum()), x)
    np.testing.assert_allclose(x_t.grad, fd, atol=1e-6)


def test_l1_loss_grad():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((5, 3))
    b = rng.standard_normal((5, 3))
    a_t, b_t = T.Tensor(a), T.Tensor(b)
    a_t.requires_grad = True
    with T.Tape() as tape:
        tape.backward(T.l1_loss(a_t, b_t))
    fd = _fd_grad(lambda v: float(np.mean(np.abs(v - b))), a)
    np.testing.assert_allclose(a_t.grad, fd, atol=1e-6)


def test_backward_requires_scalar_and_nonempty_tape():
    x = T.Tensor(np.ones((2, 2)), requires_grad=True)
    with T.Tape() as tape:
        y = T.relu(x)
        with pytest.raises(T.ShapeError):
            tape.backward(y)
    with T.Tape() as tape:
        with pytest.raises(ValueError):
            tape.backward(T.Tensor(np.ones(1)))


def test_grad_accumulates_over_reuse():
    x = T.Tensor(np.full((3,), 2.0), requires_grad=True)
    with T.Tape() as tape:
        y = T.sum_last(T.mul(x, x))     # d/dx sum(x^2) = 2x
        tape.backward(y)
    np.testing.assert_allclose(x.grad, 4.0 * np.ones(3))


def test_nonfinite_raises():
    x = T.Tensor(np.array([1e30], dtype=np.float32))
    with np.errstate(over="ignore"):
        with pytest.raises(T.NonFiniteError):
            T.mul(x, x)


def test_mult_counter_stages():
    x = T.Tensor(np.ones((4, 4, 2), dtype=np.float32))
    w = T.Tensor(np.ones((3, 2, 3, 3), dtype=np.float32))
    with T.MultCounter() as counter:
        with T.stage("a"):
            T.conv2d(x, w, None)
        with T.stage("b"):
            T.dense(T.Tensor(np.ones((5, 2))), T.Tensor(np.ones((2, 3))), None)
    assert counter.by_stage == {"a": 4 * 4 * 3 * 2 * 9, "b": 5 * 2 * 3}
    assert counter.total == sum(counter.by_stage.values())


def test_adam_matches_reference():
    # One-dimensional quadratic; compare against a hand-stepped Adam.
    rng = np.random.default_rng(3)
    w0 = rng.standard_normal(4)
    params = T.ParameterSet()
    p = params.add("w", T.Tensor(w0.copy()))
    state = T.AdamState(params)
    m = np.zeros_like(w0)
    v = np.zeros_like(w0)
    ref = w0.copy()
    for t in range(1, 6):
        g = 2.0 * ref
        p.value.grad = 2.0 * p.value.data.copy()
        T.adam_step(params, state, lr=0.1)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.1 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        np.testing.assert_allclose(p.value.data, ref, rtol=1e-10)


def test_parameter_set_basics():
    params = T.ParameterSet()
    params.add("a", T.Tensor(np.zeros((2, 3))))
    with pytest.raises(ValueError):
        params.add("a", T.Tensor(np.zeros(1)))
    assert params.num_values() == 6
    p64 = params.astype(np.float64)
    assert p64["a"].value.dtype == np.float64


@settings(max_examples=30, deadline=None)
@given(h=st.integers(1, 5), w=st.integers(1, 5), c=st.integers(1, 4),
       s=st.integers(1, 3), seed=st.integers(0, 100))
def test_pixel_shuffle_bijection(h, w, c, s, seed):
    rng = np.random.default_rng(seed)
    x = T.Tensor(rng.standard_normal((h, w, c * s * s)).astype(np.float32))
    back = T.pixel_unshuffle(T.pixel_shuffle(x, s), s)
    np.testing.assert_array_equal(back.data, x.data)


def test_pixel_shuffle_layout():
    # out(y*s+i, x*s+j, c) == in(y, x, c*s*s + i*s + j)
    s, c = 2, 3
    x = np.arange(2 * 2 * c * s * s, dtype=np.float32).reshape(2, 2, c * s * s)
    y = T.pixel_shuffle(T.Tensor(x), s).data
    for yy in range(2):
        for xx in range(2):
            for i in range(s):
                for j in range(s):
                    for ch in range(c):
                        assert y[yy * s + i, xx * s + j, ch] == \
                            x[yy, xx, ch * s * s + i * s + j]


@settings(max_examples=25, deadline=None)
@given(h=st.integers(1, 6), w=st.integers(1, 6), c=st.integers(1, 3),
       k=st.sampled_from([1, 3]), seed=st.integers(0, 100))
def test_unfold_depthwise_dot_equivalence(h, w, c, k, seed):
    # Dot of unfolded taps with a flat kernel == depthwise convolution.
    rng = np.random.default_rng(seed)
    x = T.Tensor(rng.standard_normal((h, w, c)).astype(np.float32))
    kern = rng.standard_normal((c, k, k)).astype(np.float32)
    unf = T.unfold(x, k).data.reshape(h, w, c, k * k)
    via_unfold = (unf * kern.reshape(c, k * k)).sum(axis=-1)
    direct = T.depthwise_conv2d(x, T.Tensor(kern)).data
    np.testing.assert_allclose(via_unfold, direct, rtol=1e-5, atol=1e-5)
