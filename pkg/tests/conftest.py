import numpy as np
import pytest

from cufsr import cuf, encoder, posenc, subpixel
from cufsr.model import SRModel


def small_field_config(channels=8, kernel=3, hidden=8):
    """Reduced encodings keep the hypernetwork cheap in unit tests."""
    return cuf.KernelFieldConfig(
        channels=channels, kernel=kernel, hidden=hidden,
        enc_delta=posenc.EncodingConfig(3, 2.0),
        enc_scale=posenc.EncodingConfig(3, 2.0),
        enc_kidx=posenc.EncodingConfig(2, 1.0))


def small_cuf_model(seed=0, channels=8, blocks=1, kernel=3, hidden=8):
    return SRModel(encoder.EncoderConfig(channels=channels, blocks=blocks),
                   "cuf",
                   cuf.CufHeadConfig(field=small_field_config(channels, kernel, hidden)),
                   seed=seed)


def small_subpixel_model(seed=0, channels=8, blocks=1, scale=2, kernel=3):
    return SRModel(encoder.EncoderConfig(channels=channels, blocks=blocks),
                   "subpixel",
                   subpixel.SubPixelConfig(channels=channels, scale=scale,
                                           kernel=kernel),
                   seed=seed)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def cuf_model():
    return small_cuf_model()


@pytest.fixture
def subpixel_model():
    return small_subpixel_model()
