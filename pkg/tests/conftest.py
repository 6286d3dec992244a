"""Shared fixtures: small bands, bases, seeded generators and run configs"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from core.legendre_basis import build_basis  # noqa: E402
from core.spectral_core import Band, SpectralField, XField  # noqa: E402
from utils.run_config import load_config  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def band():
    return Band(2, 2)


@pytest.fixture(scope="session")
def basis(band):
    return build_basis(band)


@pytest.fixture(scope="session")
def wide_basis():
    return build_basis(Band(2, 3))


@pytest.fixture
def random_field(rng):
    """Factory of random real band-limited kinetic fields"""
    def make(band, scale=1.0):
        return SpectralField.random(band, rng, scale)
    return make


@pytest.fixture
def random_xfield(rng):
    def make(x_radius, scale=1.0):
        return XField.random(x_radius, rng, scale)
    return make


@pytest.fixture
def make_config(tmp_path):
    """RunConfig with outputs under tmp_path plus any dotted overrides"""
    def make(*overrides):
        return load_config(None, [f"outputs.dir={tmp_path}", *overrides])
    return make
