import numpy as np
import pytest

from ddforge import Line, SpectralDensity, SpectrumKind


def env_spectrum(*components):
    return SpectralDensity(tuple(components), SpectrumKind.ENVIRONMENT)


def ctrl_spectrum(*components):
    return SpectralDensity(tuple(components), SpectrumKind.CONTROL)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def line50():
    return ctrl_spectrum(Line(50.0, 1e-6))
