import json

import numpy as np
import pytest

from errors import CertificateMismatchError, InvalidStateError, StateFormatError
from state_io import dump_state, load_state, matrix_to_rows, state_from_dict, state_to_dict
from states import BipartiteDims, isospectral_werner, make_rng, random_mixed


def test_round_trip_is_exact(tmp_path):
    rho = random_mixed(BipartiteDims(2, 3), None, make_rng(60))
    loaded = load_state(dump_state(rho, tmp_path / "rho.json"))
    assert loaded.dims == rho.dims
    np.testing.assert_array_equal(loaded.mat, rho.mat)


def test_certificate_travels_with_the_state(tmp_path):
    twin, certificate = isospectral_werner(3, 0.4)
    loaded = load_state(dump_state(twin, tmp_path / "twin.json"))
    assert loaded.certificate is not None
    np.testing.assert_array_equal(loaded.certificate.weights, certificate.weights)


def test_matrix_rows_are_re_im_pairs():
    assert matrix_to_rows(np.array([[1 + 2j]])) == [[[1.0, 2.0]]]


def test_dims_mismatch(mixed_2x2):
    data = state_to_dict(mixed_2x2, include_certificate=False)
    data["dims"] = [3, 2]
    with pytest.raises(InvalidStateError) as info:
        state_from_dict(data)
    assert info.value.invariant == "dims mismatch"
    assert "dims mismatch" in str(info.value)


@pytest.mark.parametrize(
    "data",
    [
        {"matrix": [[[1.0, 0.0]]]},
        {"dims": [1, 1], "matrix": "identity"},
        {"dims": [1], "matrix": [[[1.0, 0.0]]]},
        {"dims": [1, 1], "matrix": [[[1.0, 0.0, 0.0]]]},
    ],
)
def test_malformed_state_files(data):
    with pytest.raises(StateFormatError):
        state_from_dict(data)


def test_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(StateFormatError):
        load_state(path)


def test_trace_violation_names_the_invariant():
    data = {"dims": [1, 2], "matrix": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]}
    with pytest.raises(InvalidStateError) as info:
        state_from_dict(data)
    assert info.value.invariant == "trace"


def test_certificate_must_reassemble(mixed_2x2, tmp_path):
    data = state_to_dict(mixed_2x2)
    data["ensemble"]["weights"] = [1.0, 0.0, 0.0, 0.0]
    path = tmp_path / "forged.json"
    path.write_text(json.dumps(data))
    with pytest.raises(CertificateMismatchError):
        load_state(path)
