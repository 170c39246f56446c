import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cufsr import cuf, posenc
from cufsr import tensor as T
from conftest import small_cuf_model, small_field_config

from _oracles import decode_reference, mlp_forward


def test_default_dimensions():
    cfg = cuf.KernelFieldConfig()
    assert cfg.d_in == 59
    assert cfg.widths == [59, 32, 32, 32, 64]
    assert cfg.param_count() == 6144
    head = cuf.CufHeadConfig()
    assert head.dense_param_count() == 4355


def test_normalize_inputs():
    (dy, dx), (ish, isw), (ki, kj) = cuf.normalize_inputs(
        (0.25, 0.75), (2.0, 4.0), (0, 2), kernel=3)
    assert (dy, dx) == (0.25, 0.75)
    assert (ish, isw) == (0.5, 0.25)
    np.testing.assert_allclose([ki, kj], [0.0, 1.0])
    # K = 1 avoids dividing by zero
    _, _, (ki1, kj1) = cuf.normalize_inputs((0, 0), (2, 2), (0, 0), kernel=1)
    np.testing.assert_allclose([ki1, kj1], [0.0, 0.0])


def test_mlp_matches_straight_line_oracle(rng):
    field_cfg = small_field_config()
    field = cuf.KernelField(field_cfg, rng=np.random.default_rng(7))
    q = field.encode_queries([0.3], [0.6], 2.0, 2.0, [1], [2])
    assert q.shape == (1, field_cfg.d_in)
    got = field.mlp(T.Tensor(q)).data[0]
    ws = [field.params[f"field.l{i}.w"].value.data for i in range(4)]
    bs = [field.params[f"field.l{i}.b"].value.data for i in range(4)]
    ref = mlp_forward(q, ws, bs)[0]
    np.testing.assert_allclose(got, ref, rtol=1e-5, atol=1e-6)


def test_kernel_full_tap_order():
    field = cuf.KernelField(small_field_config(), rng=np.random.default_rng(3))
    full = cuf.kernel_full(field, (0.5, 0.5), (2, 2)).data
    assert full.shape == (9, 8)
    for ki in range(3):
        for kj in range(3):
            single = cuf.kernel_at(field, (0.5, 0.5), (2, 2), (ki, kj)).data
            np.testing.assert_allclose(full[ki * 3 + kj], single, rtol=1e-6)


def test_target_axis_unique_offsets():
    src, uniq, inverse = cuf._target_axis(np.arange(8), 2.0, 4)
    np.testing.assert_array_equal(src, [0, 0, 1, 1, 2, 2, 3, 3])
    np.testing.assert_allclose(uniq, [0.0, 0.5])
    np.testing.assert_array_equal(uniq[inverse],
                                  [0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5])


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 10), s=st.floats(1.0, 4.0))
def test_target_axis_properties(n, s):
    targets = np.arange(int(math.floor(s * n)))
    src, uniq, inverse = cuf._target_axis(targets, s, n)
    assert np.all((uniq >= 0.0) & (uniq < 1.0))
    assert np.all((src >= 0) & (src < n))
    # integer scales collapse to exactly s unique offsets
    if s == int(s):
        assert len(uniq) == int(s)


def test_decode_continuous_matches_reference():
    model = small_cuf_model(seed=11)
    rng = np.random.default_rng(4)
    img = rng.random((5, 6, 3)).astype(np.float32)
    for s in [2.0, 2.5]:
        got = model.upscale(img, s)
        ref = decode_reference(model, img, s, s)
        np.testing.assert_allclose(got, ref, rtol=1e-4, atol=1e-4)


def test_decode_anisotropic_shapes():
    model = small_cuf_model()
    img = np.random.default_rng(0).random((6, 5, 3)).astype(np.float32)
    out = model.upscale(img, 2.0, 3.0)
    assert out.shape == (12, 15, 3)


def test_instantiate_bank_shape_and_rows():
    model = small_cuf_model(seed=2)
    bank = cuf.instantiate(model.head, 3)
    assert bank.s == 3
    assert bank.weights.shape == (9, 9, 8)
    # row i*s+j equals the field queried at offset (i/3, j/3)
    for i, j in [(0, 0), (1, 2), (2, 1)]:
        row = cuf.kernel_full(model.head.field, (i / 3, j / 3), (3, 3)).data
        np.testing.assert_allclose(bank.weights[i * 3 + j], row, rtol=1e-6)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_instantiated_equals_continuous(s):
    model = small_cuf_model(seed=s)
    img = np.random.default_rng(s).random((7, 7, 3)).astype(np.float32)
    a = model.upscale(img, s)
    b = model.upscale(img, s, instantiated=True)
    assert np.abs(a - b).max() <= 1e-5


def test_instantiate_rejects_fractional():
    model = small_cuf_model()
    with pytest.raises(ValueError):
        cuf.instantiate(model.head, 2.5)
    img = np.zeros((4, 4, 3), dtype=np.float32)
    with pytest.raises(ValueError):
        model.upscale(img, 2.5, instantiated=True)


def test_train_coords_match_full_grid_slice():
    # Decoding at explicit integer target coordinates equals slicing the
    # full-grid decode (same LR features, same coordinate semantics).
    model = small_cuf_model(seed=5)
    img = np.random.default_rng(6).random((6, 6, 3)).astype(np.float32)
    s = 2.5
    full = model.upscale(img, s)
    feats = model.features(T.Tensor(img))
    ys = np.arange(3, 9)
    xs = np.arange(2, 8)
    patch = cuf.decode_continuous(model.head, feats, s, s, ys, xs).data
    np.testing.assert_allclose(patch, full[3:9, 2:8], rtol=1e-5, atol=1e-6)
