import json

import numpy as np
import pytest

from config import restore_settings, settings_snapshot
from states import BipartiteDims, maximally_mixed, monotonicity_counterexample, phi_plus
from state_io import state_to_dict


@pytest.fixture(autouse=True)
def _isolated_settings():
    """Tests may override tolerances or the backend; put them back afterwards."""
    snapshot = settings_snapshot()
    yield
    restore_settings(snapshot)


@pytest.fixture
def phi_plus_state():
    return phi_plus(2).density()


@pytest.fixture
def counterexample():
    return monotonicity_counterexample()


@pytest.fixture
def mixed_2x2():
    return maximally_mixed(BipartiteDims(2, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_hermitian():
    def _make(rng, n, scale=0.5):
        g = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        return 0.5 * (g + g.conj().T)

    return _make


@pytest.fixture
def random_positive_definite():
    def _make(rng, n, floor=0.1):
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return g @ g.conj().T / n + floor * np.eye(n)

    return _make


@pytest.fixture
def write_state(tmp_path):
    """Write a DensityMatrix (or a raw dict) as a state file and return its path."""

    def _write(state, name="state.json"):
        data = state if isinstance(state, dict) else state_to_dict(state)
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return _write
