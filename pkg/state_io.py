"""Reading and writing state files.

A state file is a JSON object:

    {
      "dims": [dA, dB],
      "matrix": [[[re, im], ...], ...],
      "ensemble": {"weights": [...], "factors": [[matA, matB], ...]}   # optional
    }

Matrices are rows of [re, im] pairs; ``ensemble`` is a separability
certificate that is checked against the matrix on load.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from errors import CertificateMismatchError, InvalidStateError, StateFormatError
from models import ComplexRows, EnsembleModel
from states import BipartiteDims, DensityMatrix, SeparableEnsemble, ensemble_distance

logger = logging.getLogger(__name__)

CERTIFICATE_TOLERANCE = 1e-9


class StateFile(BaseModel):
    dims: list
    matrix: ComplexRows
    ensemble: Optional[EnsembleModel] = None


def matrix_to_rows(mat: np.ndarray) -> ComplexRows:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat)]


def rows_to_matrix(rows: ComplexRows) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise StateFormatError(f"matrix is not a rectangular array of [re, im] pairs: {e}") from e
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise StateFormatError(f"matrix must have shape rows x cols x 2, got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def ensemble_to_model(ensemble: SeparableEnsemble) -> EnsembleModel:
    return EnsembleModel(
        weights=[float(w) for w in ensemble.weights],
        factors=[[matrix_to_rows(a), matrix_to_rows(b)] for a, b in ensemble.factors],
    )


def ensemble_from_model(model: EnsembleModel) -> SeparableEnsemble:
    factors = []
    for index, pair in enumerate(model.factors):
        if len(pair) != 2:
            raise StateFormatError(f"ensemble factor {index} must be a [matA, matB] pair")
        factors.append((rows_to_matrix(pair[0]), rows_to_matrix(pair[1])))
    return SeparableEnsemble(np.asarray(model.weights), tuple(factors))


def state_to_dict(rho: DensityMatrix, include_certificate: bool = True) -> Dict[str, Any]:
    data: Dict[str, Any] = {"dims": rho.dims.as_list(), "matrix": matrix_to_rows(rho.mat)}
    if include_certificate and rho.certificate is not None:
        data["ensemble"] = ensemble_to_model(rho.certificate).model_dump()
    return data


def state_from_dict(data: Dict[str, Any]) -> DensityMatrix:
    """Validate a parsed state file and build the density matrix."""
    try:
        parsed = StateFile.model_validate(data)
    except ValidationError as e:
        raise StateFormatError(f"malformed state file: {e.errors()[0]['msg']}") from e
    if len(parsed.dims) != 2 or not all(isinstance(d, int) for d in parsed.dims):
        raise StateFormatError(f"dims must be two integers, got {parsed.dims}")
    dims = BipartiteDims(*parsed.dims)
    mat = rows_to_matrix(parsed.matrix)
    if mat.shape != (dims.total, dims.total):
        raise InvalidStateError(
            "dims mismatch", f"matrix is {mat.shape[0]}x{mat.shape[1]} but dims {dims.as_list()} need {dims.total}x{dims.total}"
        )
    rho = DensityMatrix(dims, mat)
    if parsed.ensemble is None:
        return rho

    certificate = ensemble_from_model(parsed.ensemble)
    distance = ensemble_distance(certificate, rho)
    if distance > CERTIFICATE_TOLERANCE:
        raise CertificateMismatchError(f"ensemble reassembles {distance:.3e} away from the matrix")
    return rho.with_certificate(certificate)


def load_state(path: Union[str, Path]) -> DensityMatrix:
    path = Path(path)
    try:
        with path.open() as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise StateFormatError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(data, dict):
        raise StateFormatError(f"{path}: expected a JSON object")
    rho = state_from_dict(data)
    logger.info(f"loaded {rho.dims.dA}x{rho.dims.dB} state from {path}")
    return rho


def dump_state(rho: DensityMatrix, path: Union[str, Path], include_certificate: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(state_to_dict(rho, include_certificate), f, indent=2)
    logger.debug(f"wrote state to {path}")
    return path
