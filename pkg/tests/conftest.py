import numpy as np
import pytest

from delayquant.gains import QuantizerBudget, design_constants
from delayquant.kernels import SeriesTruncation, build_tables
from delayquant.transforms import build_operators

REF_LAM = 11.0
REF_DELAY = 0.1
REF_NX = 200
REF_MODES = 60


@pytest.fixture(scope="session")
def ref_tables():
    return build_tables(REF_NX, REF_LAM, REF_DELAY,
                        SeriesTruncation(REF_MODES, 20 * REF_MODES))


@pytest.fixture(scope="session")
def ref_ops(ref_tables):
    return build_operators(ref_tables)


@pytest.fixture(scope="session")
def ref_budget():
    return QuantizerBudget(range=1.0, error=2e-6, deadzone=1e-6)


@pytest.fixture(scope="session")
def ref_constants(ref_tables, ref_ops, ref_budget):
    return design_constants(ref_tables, ref_ops, ref_budget, margin=0.1)


def random_smooth_pair(rng, x, n_modes=6):
    """A random finite sine sum for u and cosine sum for v."""
    ks = np.arange(1, n_modes + 1)
    au = rng.normal(size=n_modes) / ks
    av = rng.normal(size=n_modes + 1) / np.arange(1, n_modes + 2)
    u = np.sin(np.pi * np.outer(x, ks)) @ au
    v = av[0] + np.cos(np.pi * np.outer(x, ks)) @ av[1:]
    return u, v
