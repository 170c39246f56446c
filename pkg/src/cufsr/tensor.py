"""Dense float tensors with reverse-mode gradients.

Just enough machinery for this project: channel-last images/features, the
convolution and rearrangement ops used by the encoder and the upsampling
heads, a recording tape for reverse accumulation, and a bias-corrected Adam
step.  Model math is float32; casting a parameter set to float64 gives the
trustworthy mode used for finite-difference gradient checks.

Tensors are immutable once produced by an op.  Every op verifies its output
is finite and raises NonFiniteError otherwise instead of letting NaN/Inf
propagate.
"""

import math

import numpy as np

from . import kernels


class NonFiniteError(ArithmeticError):
    """An op produced NaN or Inf."""


class ShapeError(ValueError):
    """Operand shapes violate an op's contract."""


# ---------------------------------------------------------------------------
# multiply accounting (used by the cost instrumentation in evaluate)

_active_counter = None


class MultCounter:
    """Counts the multiplications ops actually perform, grouped by stage.

    Only multiplies are counted (adds excluded), matching the convention of
    the cost reports.  Zero-padded convolution taps count as multiplies.
    """

    def __init__(self):
        self.by_stage = {}
        self._stage = "other"

    @property
    def total(self):
        return sum(self.by_stage.values())

    def add(self, n):
        self.by_stage[self._stage] = self.by_stage.get(self._stage, 0) + int(n)

    def __enter__(self):
        global _active_counter
        self._prev = _active_counter
        _active_counter = self
        return self

    def __exit__(self, *exc):
        global _active_counter
        _active_counter = self._prev
        return False


class stage:
    """Labels the multiplies recorded while the block runs."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        if _active_counter is not None:
            self._prev = _active_counter._stage
            _active_counter._stage = self.name
        return self

    def __exit__(self, *exc):
        if _active_counter is not None:
            _active_counter._stage = self._prev
        return False


def _count(n):
    if _active_counter is not None:
        _active_counter.add(n)


# ---------------------------------------------------------------------------
# tensor / tape

_tape_stack = []


class Tape:
    """Records op backward closures in execution order.

    ``backward`` replays them in exact reverse order, accumulating d(loss)/dx
    into the ``grad`` slot of every tensor on the path that requires grad.
    """

    def __init__(self):
        self._entries = []

    def __enter__(self):
        _tape_stack.append(self)
        return self

    def __exit__(self, *exc):
        _tape_stack.pop()
        return False

    def __len__(self):
        return len(self._entries)

    def record(self, fn):
        self._entries.append(fn)

    def backward(self, loss):
        if loss.data.size != 1:
            raise ShapeError("backward expects a scalar loss")
        if not self._entries:
            raise ValueError("backward on an empty tape")
        loss._accum(np.ones_like(loss.data))
        for fn in reversed(self._entries):
            fn()


def backward(loss, tape):
    """Reverse accumulation of d(loss)/dx into parameter grads."""
    tape.backward(loss)


def _active_tape():
    return _tape_stack[-1] if _tape_stack else None


class Tensor:
    """Dense N-d float array (row-major) with an optional gradient slot."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, dtype=None, requires_grad=False):
        arr = np.asarray(data)
        if dtype is None:
            dtype = arr.dtype if arr.dtype in (np.float32, np.float64) else np.float32
        arr = arr.astype(dtype, copy=False)
        if not arr.flags["C_CONTIGUOUS"]:
            # ascontiguousarray would also promote 0-d scalars to 1-d
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(-1)[0])

    def detach(self):
        return Tensor(self.data)

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self):
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.data.dtype})"


def _check_finite(arr):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("op produced non-finite values")


def _make(out_data, inputs, bwd):
    """Wrap an op result; record the backward closure if a tape is active."""
    _check_finite(out_data)
    out = Tensor(out_data)
    out.requires_grad = any(t.requires_grad for t in inputs)
    tape = _active_tape()
    if tape is not None and out.requires_grad:
        tape.record(lambda: None if out.grad is None else bwd(out.grad))
    return out


class Parameter:
    """Named trainable tensor with a zero-initialized grad of equal shape."""

    def __init__(self, name, value):
        self.name = name
        self.value = value if isinstance(value, Tensor) else Tensor(value)
        self.value.requires_grad = True
        self.value.grad = np.zeros_like(self.value.data)

    @property
    def grad(self):
        return self.value.grad

    def zero_grad(self):
        self.value.grad = np.zeros_like(self.value.data)


class ParameterSet:
    """Ordered parameter collection with unique names."""

    def __init__(self):
        self._params = {}

    def add(self, name, value):
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        p = Parameter(name, value)
        self._params[name] = p
        return p

    def merge(self, other, prefix=""):
        for p in other:
            self.add(prefix + p.name, p.value)

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def zero_grad(self):
        for p in self:
            p.zero_grad()

    def num_values(self):
        return sum(p.value.data.size for p in self)

    def astype(self, dtype):
        """Parameter set with casted values (fresh tensors, shared names)."""
        out = ParameterSet()
        for p in self:
            out.add(p.name, Tensor(p.value.data.astype(dtype)))
        return out


def uniform_init(rng, shape, fan_in, dtype=np.float32):
    """uniform(-a, a) with a = 1/sqrt(fan_in), from a seeded generator."""
    a = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-a, a, size=shape).astype(dtype)


# ---------------------------------------------------------------------------
# ops

def conv2d(x, w, b, padding=None):
    """Same-size 2D cross-correlation, [H,W,Cin] x [Cout,Cin,K,K] -> [H,W,Cout]."""
    cout, cin, k, k2 = w.shape
    if k != k2 or k % 2 != 1:
        raise ShapeError("conv2d needs square, odd kernels")
    if x.data.ndim != 3 or x.shape[2] != cin:
        raise ShapeError(f"conv2d input channels {x.shape} vs weight Cin {cin}")
    if padding is not None and padding != (k - 1) // 2:
        raise ShapeError("conv2d only supports same-size zero padding")
    h, wd = x.shape[0], x.shape[1]
    y = kernels.conv2d_fwd(x.data, w.data, None if b is None else b.data)
    _count(h * wd * cout * cin * k * k)

    def bwd(gy):
        if x.requires_grad:
            x._accum(kernels.conv2d_bwd_x(gy, w.data))
        if w.requires_grad:
            w._accum(kernels.conv2d_bwd_w(x.data, gy, k))
        if b is not None and b.requires_grad:
            b._accum(gy.sum(axis=(0, 1)))

    return _make(y, [x, w] + ([b] if b is not None else []), bwd)


def depthwise_conv2d(x, w, padding=None):
    """Per-channel same-size conv, [H,W,C] x [C,K,K] -> [H,W,C]."""
    c, k, k2 = w.shape
    if k != k2 or k % 2 != 1:
        raise ShapeError("depthwise_conv2d needs square, odd kernels")
    if x.data.ndim != 3 or x.shape[2] != c:
        raise ShapeError(f"depthwise channel mismatch: input {x.shape}, weight C={c}")
    if padding is not None and padding != (k - 1) // 2:
        raise ShapeError("depthwise_conv2d only supports same-size zero padding")
    y = kernels.depthwise_fwd(x.data, w.data)
    _count(x.shape[0] * x.shape[1] * c * k * k)

    def bwd(gy):
        if x.requires_grad:
            x._accum(kernels.depthwise_bwd_x(gy, w.data))
        if w.requires_grad:
            w._accum(kernels.depthwise_bwd_w(x.data, gy, k))

    return _make(y, [x, w], bwd)


def dense(x, w, b):
    """Affine map along the last axis, broadcasting over leading axes."""
    cin, cout = w.shape
    if x.shape[-1] != cin:
        raise ShapeError(f"dense: last axis {x.shape[-1]} != Cin {cin}")
    y = x.data @ w.data
    if b is not None:
        y = y + b.data
    lead = x.data.size // cin
    _count(lead * cin * cout)

    def bwd(gy):
        gy2 = gy.reshape(-1, cout)
        if x.requires_grad:
            x._accum((gy2 @ w.data.T).reshape(x.shape))
        if w.requires_grad:
            w._accum(x.data.reshape(-1, cin).T @ gy2)
        if b is not None and b.requires_grad:
            b._accum(gy2.sum(axis=0))

    return _make(y, [x, w] + ([b] if b is not None else []), bwd)


def unfold(x, k):
    """[H,W,C] -> [H,W,C*k*k]; tap layout c*k*k + ki*k + kj, zero padded."""
    if k % 2 != 1:
        raise ShapeError("unfold needs odd k")
    h, w, c = x.shape
    p = (k - 1) // 2
    xp = np.pad(x.data, ((p, p), (p, p), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(0, 1))
    y = np.ascontiguousarray(win).reshape(h, w, c * k * k)

    def bwd(gy):
        if x.requires_grad:
            g = gy.reshape(h, w, c, k, k)
            gxp = np.zeros_like(xp)
            for ki in range(k):
                for kj in range(k):
                    gxp[ki:ki + h, kj:kj + w] += g[:, :, :, ki, kj]
            x._accum(gxp[p:p + h, p:p + w])

    return _make(y, [x], bwd)


def nearest_sample(x, s_h, s_w):
    """Nearest-neighbour upsample to [floor(s_h*H), floor(s_w*W), C]."""
    if s_h < 1 or s_w < 1:
        raise ShapeError("nearest_sample expects scales >= 1")
    h, w = x.shape[0], x.shape[1]
    oh, ow = int(math.floor(s_h * h)), int(math.floor(s_w * w))
    sy = np.minimum((np.arange(oh) / s_h).astype(np.int64), h - 1)
    sx = np.minimum((np.arange(ow) / s_w).astype(np.int64), w - 1)
    y = x.data[np.ix_(sy, sx)]

    def bwd(gy):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, np.ix_(sy, sx), gy)
            x._accum(gx)

    return _make(y, [x], bwd)


def pixel_shuffle(x, s):
    """[H,W,C*s*s] -> [sH,sW,C]; out(ys+i, xs+j, c) = in(y, x, c*s*s + i*s + j)."""
    h, w, cs2 = x.shape
    if cs2 % (s * s) != 0:
        raise ShapeError(f"pixel_shuffle: channels {cs2} not divisible by s^2={s * s}")
    c = cs2 // (s * s)
    y = (
        x.data.reshape(h, w, c, s, s)
        .transpose(0, 3, 1, 4, 2)
        .reshape(h * s, w * s, c)
    )

    def bwd(gy):
        if x.requires_grad:
            g = (
                gy.reshape(h, s, w, s, c)
                .transpose(0, 2, 4, 1, 3)
                .reshape(h, w, cs2)
            )
            x._accum(g)

    return _make(y, [x], bwd)


def pixel_unshuffle(x, s):
    """Exact inverse of pixel_shuffle."""
    sh, sw, c = x.shape
    if sh % s != 0 or sw % s != 0:
        raise ShapeError(f"pixel_unshuffle: spatial dims {sh}x{sw} not divisible by s={s}")
    h, w = sh // s, sw // s
    y = (
        x.data.reshape(h, s, w, s, c)
        .transpose(0, 2, 4, 1, 3)
        .reshape(h, w, c * s * s)
    )

    def bwd(gy):
        if x.requires_grad:
            g = (
                gy.reshape(h, w, c, s, s)
                .transpose(0, 3, 1, 4, 2)
                .reshape(sh, sw, c)
            )
            x._accum(g)

    return _make(y, [x], bwd)


def relu(x):
    y = np.maximum(x.data, 0)

    def bwd(gy):
        if x.requires_grad:
            x._accum(gy * (x.data > 0))

    return _make(y, [x], bwd)


def _binary(x, y, fwd, bwd_x, bwd_y, count=0):
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch {x.shape} vs {y.shape}")
    out_data = fwd(x.data, y.data)
    _count(count)

    def bwd(g):
        if x.requires_grad:
            x._accum(bwd_x(g))
        if y.requires_grad:
            y._accum(bwd_y(g))

    return _make(out_data, [x, y], bwd)


def add(x, y):
    return _binary(x, y, np.add, lambda g: g, lambda g: g)


def sub(x, y):
    return _binary(x, y, np.subtract, lambda g: g, lambda g: -g)


def mul(x, y):
    return _binary(
        x, y, np.multiply,
        lambda g: g * y.data, lambda g: g * x.data,
        count=x.data.size,
    )


def l1_loss(pred, target):
    """Mean absolute difference over all elements (scalar tensor)."""
    if pred.shape != target.shape:
        raise ShapeError(f"l1_loss shape mismatch {pred.shape} vs {target.shape}")
    d = pred.data - target.data
    y = np.mean(np.abs(d))

    def bwd(gy):
        g = gy * np.sign(d) / d.size
        if pred.requires_grad:
            pred._accum(g)
        if target.requires_grad:
            target._accum(-g)

    return _make(y, [pred, target], bwd)


def scale(x, c):
    """Multiply by a python scalar (loss averaging; excluded from counts)."""
    c = float(c)
    y = x.data * c

    def bwd(gy):
        if x.requires_grad:
            x._accum(gy * c)

    return _make(y, [x], bwd)


def reshape(x, shape):
    y = x.data.reshape(shape)

    def bwd(gy):
        if x.requires_grad:
            x._accum(gy.reshape(x.shape))

    return _make(y, [x], bwd)


def transpose_last2(x):
    y = np.ascontiguousarray(np.swapaxes(x.data, -1, -2))

    def bwd(gy):
        if x.requires_grad:
            x._accum(np.swapaxes(gy, -1, -2))

    return _make(y, [x], bwd)


def sum_last(x):
    """Sum over the trailing axis."""
    y = x.data.sum(axis=-1)

    def bwd(gy):
        if x.requires_grad:
            x._accum(np.broadcast_to(gy[..., None], x.shape).copy())

    return _make(y, [x], bwd)


def concat_last(tensors):
    """Concatenate along the trailing axis."""
    y = np.concatenate([t.data for t in tensors], axis=-1)
    sizes = [t.shape[-1] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(gy):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                t._accum(np.ascontiguousarray(gy[..., lo:hi]))

    return _make(y, list(tensors), bwd)


def gather_pixels(x, ys, xs):
    """[H,W,C] gathered at integer index arrays -> [len(ys), len(xs), C]."""
    ys = np.asarray(ys, dtype=np.int64)
    xs = np.asarray(xs, dtype=np.int64)
    y = x.data[np.ix_(ys, xs)]

    def bwd(gy):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, np.ix_(ys, xs), gy)
            x._accum(gx)

    return _make(y, [x], bwd)


def take_rows(x, idx):
    """Gather along the first axis with repetition; backward scatter-adds."""
    idx = np.asarray(idx, dtype=np.int64)
    y = x.data[idx]

    def bwd(gy):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, idx, gy)
            x._accum(gx)

    return _make(y, [x], bwd)


# ---------------------------------------------------------------------------
# optimizer

class AdamState:
    """Per-parameter first/second moments plus the shared step counter."""

    def __init__(self, params):
        self.step = 0
        self.m = {p.name: np.zeros_like(p.value.data) for p in params}
        self.v = {p.name: np.zeros_like(p.value.data) for p in params}


def adam_step(params, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Standard bias-corrected Adam update from the grads held on params."""
    for p in params:
        if p.name not in state.m:
            raise KeyError(f"optimizer state missing parameter {p.name!r}")
    state.step += 1
    t = state.step
    for p in params:
        g = p.grad
        m = state.m[p.name]
        v = state.v[p.name]
        m += (1 - beta1) * (g - m)
        v += (1 - beta2) * (g * g - v)
        mhat = m / (1 - beta1 ** t)
        vhat = v / (1 - beta2 ** t)
        p.value.data -= (lr * mhat / (np.sqrt(vhat) + eps)).astype(p.value.data.dtype)
