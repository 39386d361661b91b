import numpy as np
import pytest

from lentparticle import rng
from lentparticle.intensity import (PowerLawMeasure, SymmetricPowerLawMeasure,
                                    UniformMeasure, levy_structure)
from lentparticle.point_process import PointConfiguration


@pytest.fixture
def structure():
    return levy_structure(1)


@pytest.fixture
def structure2():
    return levy_structure(2)


@pytest.fixture
def power_law():
    """Truncated one-sided power law with mass exactly 8."""
    return PowerLawMeasure(T=1.0, eps=0.04, beta=0.5, c=1.0)


@pytest.fixture
def symmetric_power_law():
    return SymmetricPowerLawMeasure(T=1.0, eps=0.04, beta=0.5, c=1.0)


@pytest.fixture
def uniform_measure():
    return UniformMeasure(T=1.0, eps=0.0, total=3.0, lo=1.0, hi=2.0)


def synth_gen(index=0, seed=20240811):
    """Deterministic generator reserved for synthetic test data."""
    return rng.stream(seed, rng.SYNTHETIC, index)


def random_config(gen, m, T=1.0, mark_dim=1, lo=-2.0, hi=2.0, positive=False):
    """A configuration with m atoms at distinct uniform times."""
    times = np.sort(gen.random(m)) * T
    while m > 1 and np.any(np.diff(times) == 0.0):
        times = np.sort(gen.random(m)) * T
    marks = lo + (hi - lo) * gen.random((m, mark_dim))
    if positive:
        marks = np.abs(marks) + 1e-3
    return PointConfiguration(times=times, marks=marks, T=T)


def hand_config(atoms, T=1.0):
    """Configuration from a literal list of (t, x) or (t, (x1, x2)) pairs."""
    times = np.array([a[0] for a in atoms], dtype=float)
    marks = np.array([a[1] for a in atoms], dtype=float)
    if marks.ndim == 1:
        marks = marks[:, None]
    return PointConfiguration(times=times, marks=marks, T=T)
