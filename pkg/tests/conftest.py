import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from gsp.core import ConsumerType, GSPModel  # noqa: E402


@st.composite
def consumer_types(draw, n):
    k = draw(st.integers(1, n))
    seq = draw(st.permutations(range(1, n + 1)))[:k]
    pos = draw(st.integers(0, k))
    return ConsumerType(tuple(seq), pos)


@st.composite
def gsp_models(draw, max_n=5, max_atoms=6, rational_only=False):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, max_atoms))
    types = draw(st.lists(consumer_types(n), min_size=k, max_size=k))
    if rational_only:
        types = [ConsumerType(t.sequence, min(t.position, 1)) for t in types]
    raw = draw(st.lists(st.integers(1, 1000), min_size=k, max_size=k))
    total = sum(raw)
    return GSPModel(tuple((t, r / total) for t, r in zip(types, raw)), n)


def random_model(rng, n, atoms, rational_only=False):
    types = []
    for _ in range(atoms):
        k = int(rng.integers(1, n + 1))
        seq = tuple(int(x) for x in rng.permutation(np.arange(1, n + 1))[:k])
        pos = int(rng.integers(0, 2 if rational_only else k + 1))
        types.append(ConsumerType(seq, pos))
    w = rng.dirichlet(np.ones(atoms))
    return GSPModel(tuple(zip(types, w)), n)


def atoms_of(model):
    return [(t.sequence, t.position, w) for t, w in model.atoms]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CAMERA_ATOMS = [((1, 3, 2), 1, 0.22), ((2, 3, 1), 1, 0.29), ((3, 2, 1), 1, 0.21), ((3, 2, 1), 2, 0.28)]


@pytest.fixture
def camera_model():
    return GSPModel.from_pairs(CAMERA_ATOMS, 3)
