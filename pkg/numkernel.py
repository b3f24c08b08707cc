"""Dense complex linear algebra for the spectral criteria.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The Hermitian
eigensolver is a cyclic complex Jacobi iteration; everything spectral
(powers, logarithms, exponentials, ranks, majorization) is built on it.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from config import settings
from errors import (
    DimensionMismatchError,
    DomainError,
    NegativeEntryError,
    NoConvergenceError,
    NotHermitianError,
    ParameterRangeError,
    SizeLimitError,
    SpectrumMismatchError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[Sequence[complex]]]


def as_complex_matrix(a: ArrayLike) -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    mat = np.asarray(a, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise DimensionMismatchError(f"expected a non-empty 2-D matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DomainError("matrix contains NaN or Inf entries")
    return mat


def _check_size(rows: int, cols: int) -> None:
    limit = settings.max_dimension
    if rows > limit or cols > limit:
        raise SizeLimitError(f"{rows}x{cols} exceeds the {limit}x{limit} matrix cap")


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitian_defect(h: np.ndarray) -> float:
    """Relative Frobenius distance between h and its adjoint."""
    return frobenius_norm(h - dagger(h)) / max(1.0, frobenius_norm(h))


def is_hermitian(h: ArrayLike, tol: Optional[float] = None) -> bool:
    mat = as_complex_matrix(h)
    if mat.shape[0] != mat.shape[1]:
        return False
    tol = settings.tolerances.hermitian if tol is None else tol
    return hermitian_defect(mat) <= tol


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Real eigenvalues sorted in descending order."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise DomainError("spectrum contains NaN or Inf values")
        if values.size > 1 and np.any(np.diff(values) > 0):
            raise ValueError("spectrum values must be sorted in descending order")
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "Spectrum":
        return cls(np.sort(np.asarray(values, dtype=np.float64).reshape(-1))[::-1])

    def __len__(self) -> int:
        return int(self.values.size)

    def __iter__(self):
        return iter(self.values.tolist())

    @property
    def max(self) -> float:
        return float(self.values[0])

    @property
    def min(self) -> float:
        return float(self.values[-1])

    @property
    def total(self) -> float:
        return float(np.sum(self.values))

    def rank(self, tol: Optional[float] = None) -> int:
        """Number of eigenvalues strictly above the rank threshold."""
        tol = settings.tolerances.rank if tol is None else tol
        return int(np.count_nonzero(self.values > tol))

    def support(self, tol: Optional[float] = None) -> np.ndarray:
        tol = settings.tolerances.rank if tol is None else tol
        return self.values[self.values > tol]

    def padded(self, length: int) -> "Spectrum":
        """Zero-pad to ``length`` entries, keeping the descending order."""
        if length < len(self):
            raise ValueError(f"cannot pad a spectrum of length {len(self)} down to {length}")
        return Spectrum.from_values(np.concatenate([self.values, np.zeros(length - len(self))]))

    def multiplicities(self, tol: float = 1e-9) -> List[Tuple[float, int]]:
        """Cluster eigenvalues closer than ``tol`` into (value, multiplicity) pairs."""
        clusters: List[List[float]] = []
        for value in self.values:
            if clusters and abs(clusters[-1][0] - value) <= tol:
                clusters[-1].append(value)
            else:
                clusters.append([value])
        return [(float(np.mean(c)), len(c)) for c in clusters]

    def to_list(self) -> List[float]:
        return [float(v) for v in self.values]


@dataclass(frozen=True, eq=False)
class HermitianEigen:
    values: Spectrum
    vectors: np.ndarray  # columns are eigenvectors, same order as values

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values.values) @ dagger(self.vectors)


def kron(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    """Kronecker product; block (i, j) equals a[i, j] * b."""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    _check_size(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    return np.kron(a, b)


def _off_diagonal_norm(a: np.ndarray) -> float:
    mask = ~np.eye(a.shape[0], dtype=bool)
    return float(np.linalg.norm(a[mask]))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int, c: float, s: float, phase: complex) -> None:
    """a <- G^dagger a G and v <- v G for G = [[c, s], [-s e, c e]] acting on (p, q)."""
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * phase * col_q
    a[:, q] = s * col_p + c * phase * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * np.conj(phase) * row_q
    a[q, :] = s * row_p + c * np.conj(phase) * row_q
    vec_p = v[:, p].copy()
    vec_q = v[:, q].copy()
    v[:, p] = c * vec_p - s * phase * vec_q
    v[:, q] = s * vec_p + c * phase * vec_q


def _jacobi_eigh(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi rotations on a Hermitian matrix."""
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return np.real(np.diag(a)).copy(), v

    target = settings.jacobi_tol * frobenius_norm(a)
    # pivots this small cannot keep the off-diagonal norm above target
    negligible = target / n
    for sweep in range(settings.jacobi_max_sweeps):
        if _off_diagonal_norm(a) <= target:
            return np.real(np.diag(a)).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= negligible:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                # phase e^{-i phi} turns the pivot real, then a real rotation zeroes it
                diff = aqq - app
                sign = 1.0 if diff >= 0.0 else -1.0
                t = sign * 2.0 * r / (abs(diff) + np.hypot(diff, 2.0 * r))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                _rotate(a, v, p, q, c, s, np.conj(apq / r))
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * r
                a[q, q] = aqq + t * r
    if _off_diagonal_norm(a) <= target:
        return np.real(np.diag(a)).copy(), v
    logger.error(f"Jacobi n={n}: off-diagonal norm {_off_diagonal_norm(a):.3e} after {settings.jacobi_max_sweeps} sweeps")
    raise NoConvergenceError(
        f"Jacobi iteration did not converge within {settings.jacobi_max_sweeps} sweeps"
    )


def eigh(h: ArrayLike, backend: Optional[str] = None) -> HermitianEigen:
    """Hermitian eigendecomposition with eigenvalues in descending order."""
    mat = as_complex_matrix(h)
    if mat.shape[0] != mat.shape[1]:
        raise DimensionMismatchError(f"eigh needs a square matrix, got {mat.shape}")
    _check_size(*mat.shape)
    if hermitian_defect(mat) > settings.tolerances.hermitian:
        raise NotHermitianError(
            f"||H - H^dagger||_F = {frobenius_norm(mat - dagger(mat)):.3e} exceeds tolerance"
        )
    sym = 0.5 * (mat + dagger(mat))

    backend = backend or settings.eigen_backend
    if backend == "lapack":
        values, vectors = np.linalg.eigh(sym)
    elif backend == "jacobi":
        values, vectors = _jacobi_eigh(sym)
    else:
        raise ParameterRangeError(f"unknown eigen backend {backend!r}")

    order = np.argsort(-values, kind="stable")
    return HermitianEigen(Spectrum(values[order]), vectors[:, order])


def eigvalsh(h: ArrayLike) -> Spectrum:
    return eigh(h).values


def min_eigenvalue(h: ArrayLike) -> float:
    return eigvalsh(h).min


# Spectral calculus

@dataclass(frozen=True)
class MatrixFunction:
    name: str                       # power | log | exp
    exponent: Optional[float] = None


def power(alpha: float) -> MatrixFunction:
    if not np.isfinite(alpha):
        raise ParameterRangeError(f"power exponent must be finite, got {alpha}")
    return MatrixFunction("power", float(alpha))


LOG = MatrixFunction("log")
EXP = MatrixFunction("exp")


def _apply_scalar(values: np.ndarray, f: MatrixFunction) -> np.ndarray:
    tol = settings.tolerances
    if f.name == "exp":
        return np.exp(values)
    if f.name == "log":
        if values.min() <= tol.rank:
            raise DomainError(f"log needs a positive definite matrix, min eigenvalue {values.min():.3e}")
        return np.log(values)
    if f.name != "power":
        raise ParameterRangeError(f"unknown matrix function {f.name!r}")

    alpha = f.exponent
    if alpha < 0:
        if values.min() <= tol.rank:
            raise DomainError(
                f"power({alpha}) needs full rank, min eigenvalue {values.min():.3e}"
            )
        return values ** alpha

    integral = float(alpha).is_integer()
    if values.min() < -tol.psd and not (alpha >= 1 and integral):
        raise DomainError(
            f"power({alpha}) needs a positive semidefinite matrix, min eigenvalue {values.min():.3e}"
        )
    clipped = np.where((values < 0) & (values >= -tol.psd), 0.0, values)
    if alpha == 0:
        # 0^0 = 0, so that tr(rho^0) = rank(rho)
        return (clipped > tol.rank).astype(np.float64)
    if alpha < 1:
        clipped = np.where(clipped <= tol.rank, 0.0, clipped)
        return clipped ** alpha
    if integral:
        return clipped ** int(alpha)
    return clipped ** alpha


def matrix_function(h: ArrayLike, f: MatrixFunction) -> np.ndarray:
    """V f(Lambda) V^dagger on the eigenbasis of a Hermitian matrix."""
    eig = eigh(h)
    fvals = _apply_scalar(eig.values.values, f)
    return (eig.vectors * fvals) @ dagger(eig.vectors)


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")


def _real_trace(m: np.ndarray, what: str) -> float:
    value = np.trace(m)
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise DomainError(f"{what} has a non-negligible imaginary part {value.imag:.3e}")
    return float(value.real)


def golden_thompson_gap(a: ArrayLike, b: ArrayLike) -> float:
    """tr(e^a e^b) - tr(e^(a+b)); nonnegative for Hermitian a, b."""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    _same_shape(a, b)
    ea = matrix_function(a, EXP)
    eb = matrix_function(b, EXP)
    eab = matrix_function(a + b, EXP)
    return _real_trace(ea @ eb, "tr(e^A e^B)") - _real_trace(eab, "tr(e^(A+B))")


def trace_exp_gap(a: ArrayLike, p: ArrayLike, eps: float) -> float:
    """tr e^(a + eps p) - tr e^a, which is nonnegative for p >= 0 and eps >= 0."""
    a = as_complex_matrix(a)
    p = as_complex_matrix(p)
    _same_shape(a, p)
    if eps < 0:
        raise ParameterRangeError(f"eps must be nonnegative, got {eps}")
    if min_eigenvalue(p) < -settings.tolerances.psd:
        raise DomainError("perturbation must be positive semidefinite")
    return (
        _real_trace(matrix_function(a + eps * p, EXP), "tr e^B")
        - _real_trace(matrix_function(a, EXP), "tr e^A")
    )


def log_monotonicity_margin(a: ArrayLike, b: ArrayLike) -> float:
    """Smallest eigenvalue of log a - log b; nonnegative whenever a >= b > 0."""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    _same_shape(a, b)
    return min_eigenvalue(matrix_function(a, LOG) - matrix_function(b, LOG))


def power_decreasing_margin(a: ArrayLike, b: ArrayLike, r: float) -> float:
    """Smallest eigenvalue of b^r - a^r; nonnegative whenever a >= b > 0 and -1 <= r <= 0."""
    if not -1.0 <= r <= 0.0:
        raise ParameterRangeError(f"r must lie in [-1, 0], got {r}")
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    _same_shape(a, b)
    return min_eigenvalue(matrix_function(b, power(r)) - matrix_function(a, power(r)))


# Majorization

class MajorizationResult(NamedTuple):
    holds: bool
    margin: float
    failing_k: Optional[int]  # 1-based partial-sum index attaining the margin


def _as_spectrum(x: Union[Spectrum, Sequence[float]]) -> Spectrum:
    return x if isinstance(x, Spectrum) else Spectrum.from_values(x)


def majorizes(x: Union[Spectrum, Sequence[float]], y: Union[Spectrum, Sequence[float]]) -> MajorizationResult:
    """Whether x majorizes y: every leading partial sum of x dominates that of y.

    The shorter spectrum is zero-padded. Partial sums at which both sides
    have already reached their totals are forced equalities and do not
    enter the margin.
    """
    x = _as_spectrum(x)
    y = _as_spectrum(y)
    tol = settings.tolerances
    for name, spec in (("x", x), ("y", y)):
        if len(spec) and spec.min < -tol.psd:
            raise NegativeEntryError(f"{name} has a negative entry {spec.min:.3e}")
    if abs(x.total - y.total) > 1e-8:
        raise SpectrumMismatchError(f"totals differ: {x.total!r} vs {y.total!r}")

    length = max(len(x), len(y))
    xs = np.cumsum(x.padded(length).values)
    ys = np.cumsum(y.padded(length).values)
    diff = xs - ys
    saturated = (xs >= x.total - tol.major) & (ys >= y.total - tol.major)
    active = np.flatnonzero(~saturated)
    if active.size == 0:
        return MajorizationResult(True, 0.0, None)

    worst = int(active[np.argmin(diff[active])])
    margin = float(diff[worst])
    holds = margin >= -tol.major
    return MajorizationResult(holds, margin, None if holds else worst + 1)
