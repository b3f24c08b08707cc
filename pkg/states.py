"""Bipartite states: density matrices, reductions, partial transposes and
the special families (Werner states, the maximally entangled basis, the
separable projectors P_k and the isospectral separable counterparts)."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from config import settings
from errors import (
    BudgetExceededError,
    DimensionMismatchError,
    EvenDimensionError,
    IndexOutOfRangeError,
    InvalidStateError,
    MultiplicityNotDivisibleError,
    NotNormalizedError,
    ParameterRangeError,
    SizeLimitError,
)
from numkernel import Spectrum, as_complex_matrix, dagger, eigh, frobenius_norm, hermitian_defect, kron

logger = logging.getLogger(__name__)

SeedLike = Union[int, Sequence[int], np.random.Generator]


class Side(str, Enum):
    A = "A"
    B = "B"

    @property
    def other(self) -> "Side":
        return Side.B if self is Side.A else Side.A


@dataclass(frozen=True)
class BipartiteDims:
    dA: int
    dB: int

    def __post_init__(self):
        if self.dA < 1 or self.dB < 1:
            raise ParameterRangeError(f"subsystem dimensions must be positive, got {self.dA}x{self.dB}")
        if self.dA * self.dB > settings.max_dimension:
            raise SizeLimitError(f"dA*dB = {self.dA * self.dB} exceeds {settings.max_dimension}")

    @property
    def total(self) -> int:
        return self.dA * self.dB

    def of(self, side: Side) -> int:
        return self.dA if side is Side.A else self.dB

    def as_list(self) -> List[int]:
        return [self.dA, self.dB]


def _single_system_problem(mat: np.ndarray) -> Optional[str]:
    """Name of the first violated single-system density-matrix invariant."""
    tol = settings.tolerances
    if mat.shape[0] != mat.shape[1]:
        return "dims mismatch"
    if hermitian_defect(mat) > tol.hermitian:
        return "hermiticity"
    if abs(np.trace(mat) - 1.0) > tol.trace:
        return "trace"
    if eigh(mat).values.min < -tol.psd:
        return "positivity"
    return None


@dataclass(frozen=True, eq=False)
class SeparableEnsemble:
    """Explicit convex decomposition sum_j p_j rho_j^A (x) rho_j^B."""

    weights: np.ndarray
    factors: Tuple[Tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        factors = tuple((as_complex_matrix(a), as_complex_matrix(b)) for a, b in self.factors)
        if weights.size != len(factors) or not factors:
            raise InvalidStateError("ensemble", f"{weights.size} weights for {len(factors)} factor pairs")
        if np.any(weights < 0):
            raise InvalidStateError("ensemble", "weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidStateError("ensemble", f"weights sum to {weights.sum()!r}")
        shape_a, shape_b = factors[0][0].shape, factors[0][1].shape
        for index, (a, b) in enumerate(factors):
            if a.shape != shape_a or b.shape != shape_b:
                raise InvalidStateError("ensemble", f"factor {index} has inconsistent dimensions")
            for name, mat in (("A", a), ("B", b)):
                problem = _single_system_problem(mat)
                if problem:
                    raise InvalidStateError("ensemble", f"factor {index} side {name} fails {problem}")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'factors', factors)

    @property
    def dims(self) -> BipartiteDims:
        a, b = self.factors[0]
        return BipartiteDims(a.shape[0], b.shape[0])

    def __len__(self) -> int:
        return len(self.factors)

    @classmethod
    def mixture(cls, parts: Sequence[Tuple[float, "SeparableEnsemble"]]) -> "SeparableEnsemble":
        """Convex combination of ensembles."""
        weights: List[float] = []
        factors: List[Tuple[np.ndarray, np.ndarray]] = []
        for weight, ensemble in parts:
            weights.extend(weight * ensemble.weights)
            factors.extend(ensemble.factors)
        return cls(np.asarray(weights), tuple(factors))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dims: BipartiteDims
    mat: np.ndarray
    certificate: Optional[SeparableEnsemble] = field(default=None, repr=False)

    def __post_init__(self):
        try:
            mat = as_complex_matrix(self.mat)
        except ValueError as e:
            raise InvalidStateError("finite", str(e)) from e
        object.__setattr__(self, 'mat', mat)
        self.validate()

    def validate(self) -> None:
        tol = settings.tolerances
        n = self.dims.total
        if self.mat.shape != (n, n):
            raise InvalidStateError(
                "dims mismatch",
                f"matrix is {self.mat.shape[0]}x{self.mat.shape[1]} but dims {self.dims.as_list()} need {n}x{n}",
            )
        if hermitian_defect(self.mat) > tol.hermitian:
            raise InvalidStateError("hermiticity", f"relative defect {hermitian_defect(self.mat):.3e}")
        trace = np.trace(self.mat)
        if abs(trace - 1.0) > tol.trace:
            raise InvalidStateError("trace", f"trace is {trace.real:.12g}{trace.imag:+.3g}j")
        if self.spectrum.min < -tol.psd:
            raise InvalidStateError("positivity", f"min eigenvalue {self.spectrum.min:.3e}")

    @cached_property
    def spectrum(self) -> Spectrum:
        return eigh(self.mat).values

    @cached_property
    def reduced_a(self) -> np.ndarray:
        return partial_trace(self, Side.B)

    @cached_property
    def reduced_b(self) -> np.ndarray:
        return partial_trace(self, Side.A)

    def reduced(self, side: Side) -> np.ndarray:
        """Reduced state of subsystem ``side``."""
        return self.reduced_a if Side(side) is Side.A else self.reduced_b

    @cached_property
    def spectrum_a(self) -> Spectrum:
        return eigh(self.reduced_a).values

    @cached_property
    def spectrum_b(self) -> Spectrum:
        return eigh(self.reduced_b).values

    def reduced_spectrum(self, side: Side) -> Spectrum:
        return self.spectrum_a if Side(side) is Side.A else self.spectrum_b

    def rank(self) -> int:
        return self.spectrum.rank()

    def is_full_rank(self) -> bool:
        return self.spectrum.min > settings.tolerances.rank

    def with_certificate(self, certificate: SeparableEnsemble) -> "DensityMatrix":
        return DensityMatrix(self.dims, self.mat, certificate)


@dataclass(frozen=True, eq=False)
class PureState:
    dims: BipartiteDims
    vec: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vec, dtype=np.complex128).reshape(-1)
        if vec.size != self.dims.total:
            raise InvalidStateError("dims mismatch", f"vector of length {vec.size} for dims {self.dims.as_list()}")
        if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
            raise InvalidStateError("normalization", f"norm is {np.linalg.norm(vec)!r}")
        object.__setattr__(self, 'vec', vec)

    def density(self) -> DensityMatrix:
        return DensityMatrix(self.dims, np.outer(self.vec, self.vec.conj()))

    def coefficients(self) -> np.ndarray:
        """dA x dB coefficient matrix of the state."""
        return self.vec.reshape(self.dims.dA, self.dims.dB)


def _matrix_and_dims(rho, dims: Optional[BipartiteDims]) -> Tuple[np.ndarray, BipartiteDims]:
    if isinstance(rho, DensityMatrix):
        return rho.mat, rho.dims
    if dims is None:
        raise DimensionMismatchError("bipartite dimensions are required for a bare matrix")
    mat = as_complex_matrix(rho)
    if mat.shape != (dims.total, dims.total):
        raise DimensionMismatchError(f"matrix {mat.shape} does not match dims {dims.as_list()}")
    return mat, dims


def partial_trace(rho: Union[DensityMatrix, np.ndarray], traced_out: Side = Side.B,
                  dims: Optional[BipartiteDims] = None) -> np.ndarray:
    """Trace out subsystem ``traced_out``; returns the state of the other one."""
    mat, dims = _matrix_and_dims(rho, dims)
    t = mat.reshape(dims.dA, dims.dB, dims.dA, dims.dB)
    if Side(traced_out) is Side.B:
        return np.einsum('ijkj->ik', t)
    return np.einsum('ijil->jl', t)


def partial_transpose(rho: Union[DensityMatrix, np.ndarray], side: Side = Side.A,
                      dims: Optional[BipartiteDims] = None) -> np.ndarray:
    """<kl|rho^{T_A}|mn> = <ml|rho|kn>, or the analogue on B."""
    mat, dims = _matrix_and_dims(rho, dims)
    t = mat.reshape(dims.dA, dims.dB, dims.dA, dims.dB)
    axes = (2, 1, 0, 3) if Side(side) is Side.A else (0, 3, 2, 1)
    return t.transpose(axes).reshape(dims.total, dims.total).copy()


def schmidt_spectrum(psi: PureState) -> Spectrum:
    """Eigenvalues of tr_B |psi><psi|, descending."""
    c = psi.coefficients()
    values = eigh(c @ dagger(c)).values.values
    tol = settings.tolerances.psd
    return Spectrum(np.where((values < 0) & (values >= -tol), 0.0, values))


# Built-in states

def basis_projector(d: int, n: int) -> np.ndarray:
    proj = np.zeros((d, d), dtype=np.complex128)
    proj[n, n] = 1.0
    return proj


def maximally_mixed(dims: BipartiteDims) -> DensityMatrix:
    n = dims.total
    ensemble = SeparableEnsemble(
        np.full(n, 1.0 / n),
        tuple((basis_projector(dims.dA, a), basis_projector(dims.dB, b))
              for a in range(dims.dA) for b in range(dims.dB)),
    )
    return DensityMatrix(dims, np.eye(n, dtype=np.complex128) / n, ensemble)


def product_state(rho_a: np.ndarray, rho_b: np.ndarray) -> DensityMatrix:
    ensemble = SeparableEnsemble(np.array([1.0]), ((rho_a, rho_b),))
    return assemble(ensemble)


def phi_plus(d: int = 2) -> PureState:
    """(1/sqrt d) sum_n |n, n>."""
    if d < 2:
        raise ParameterRangeError(f"d must be at least 2, got {d}")
    vec = np.zeros(d * d, dtype=np.complex128)
    vec[[n * d + n for n in range(d)]] = 1.0 / np.sqrt(d)
    return PureState(BipartiteDims(d, d), vec)


def monotonicity_counterexample() -> DensityMatrix:
    """rho = (|Phi+><Phi+| + |01><01|) / 2 on two qubits."""
    phi = phi_plus(2).vec
    ket01 = np.zeros(4, dtype=np.complex128)
    ket01[1] = 1.0
    mat = 0.5 * (np.outer(phi, phi.conj()) + np.outer(ket01, ket01.conj()))
    return DensityMatrix(BipartiteDims(2, 2), mat)


# Separable ensembles

def assemble(ensemble: SeparableEnsemble) -> DensityMatrix:
    """sum_j p_j rho_j^A (x) rho_j^B, carrying the ensemble as certificate."""
    dims = ensemble.dims
    mat = np.zeros((dims.total, dims.total), dtype=np.complex128)
    for weight, (a, b) in zip(ensemble.weights, ensemble.factors):
        if weight:
            mat += weight * kron(a, b)
    return DensityMatrix(dims, mat, ensemble)


# Maximally entangled basis and the separable projectors P_k

def _check_label(d: int, label: int, name: str) -> None:
    if d < 2:
        raise ParameterRangeError(f"d must be at least 2, got {d}")
    if not 1 <= label <= d:
        raise IndexOutOfRangeError(f"{name}={label} outside 1..{d}")


def max_entangled_basis(d: int, j: int, k: int) -> PureState:
    """|Psi_jk> = (1/sqrt d) sum_n exp(2 pi i j n / d) |n, n+k mod d>, labels j, k in 1..d."""
    _check_label(d, j, "j")
    _check_label(d, k, "k")
    vec = np.zeros(d * d, dtype=np.complex128)
    for n in range(d):
        vec[n * d + (n + k) % d] = np.exp(2j * np.pi * j * n / d) / np.sqrt(d)
    return PureState(BipartiteDims(d, d), vec)


def separable_projector(d: int, k: int) -> Tuple[np.ndarray, SeparableEnsemble]:
    """P_k = sum_n |n><n| (x) |n+k><n+k| and the certificate of P_k / d."""
    _check_label(d, k, "k")
    proj = np.zeros((d * d, d * d), dtype=np.complex128)
    factors = []
    for n in range(d):
        m = (n + k) % d
        proj[n * d + m, n * d + m] = 1.0
        factors.append((basis_projector(d, n), basis_projector(d, m)))
    return proj, SeparableEnsemble(np.full(d, 1.0 / d), tuple(factors))


# Werner states

def flip_operator(d: int) -> np.ndarray:
    """F|ab> = |ba>."""
    flip = np.zeros((d * d, d * d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            flip[b * d + a, a * d + b] = 1.0
    return flip


def symmetric_projector(d: int) -> np.ndarray:
    return 0.5 * (np.eye(d * d) + flip_operator(d))


def antisymmetric_projector(d: int) -> np.ndarray:
    return 0.5 * (np.eye(d * d) - flip_operator(d))


def _check_werner_args(d: int, p: float) -> None:
    if d < 2:
        raise ParameterRangeError(f"d must be at least 2, got {d}")
    if not 0.0 <= p <= 1.0:
        raise ParameterRangeError(f"p must lie in [0, 1], got {p}")


def werner_dimensions(d: int) -> Tuple[int, int]:
    """(r_+, r_-) = ((d^2 + d)/2, (d^2 - d)/2)."""
    return (d * d + d) // 2, (d * d - d) // 2


def werner_spectrum(d: int, p: float) -> List[Tuple[float, int]]:
    """Closed-form (eigenvalue, multiplicity) pairs of werner(d, p)."""
    _check_werner_args(d, p)
    r_plus, r_minus = werner_dimensions(d)
    return [((1.0 - p) / r_plus, r_plus), (p / r_minus, r_minus)]


def werner(d: int, p: float) -> DensityMatrix:
    """(1 - p) P_+/r_+ + p P_-/r_-."""
    _check_werner_args(d, p)
    r_plus, r_minus = werner_dimensions(d)
    mat = (1.0 - p) * symmetric_projector(d) / r_plus + p * antisymmetric_projector(d) / r_minus
    return DensityMatrix(BipartiteDims(d, d), mat)


def _assemble_blocks(blocks: Sequence[Tuple[float, int]], d: int) -> Tuple[DensityMatrix, SeparableEnsemble]:
    """Fill eigenvalue blocks with consecutive P_k, k = 1, 2, ..."""
    parts = []
    k = 1
    for value, multiplicity in blocks:
        for _ in range(multiplicity // d):
            _, certificate = separable_projector(d, k)
            # value * P_k = (value * d) * (P_k / d)
            parts.append((value * d, certificate))
            k += 1
    ensemble = SeparableEnsemble.mixture(parts)
    return assemble(ensemble), ensemble


def isospectral_separable(spec: Sequence[Tuple[float, int]], d: int) -> Tuple[DensityMatrix, SeparableEnsemble]:
    """Separable state with the given spectrum and maximally mixed reductions.

    Every multiplicity must be a multiple of d; eigenspaces are replaced by
    sums of P_k, blocks in descending eigenvalue order taking k ascending.
    Multiplicity left over up to d^2 is filled with zeros.
    """
    if d < 2:
        raise ParameterRangeError(f"d must be at least 2, got {d}")
    blocks = [(float(value), int(multiplicity)) for value, multiplicity in spec]
    for value, multiplicity in blocks:
        if value < 0:
            raise ParameterRangeError(f"eigenvalue {value} is negative")
        if multiplicity <= 0 or multiplicity % d:
            raise MultiplicityNotDivisibleError(f"multiplicity {multiplicity} is not a positive multiple of {d}")
    total = sum(m for _, m in blocks)
    if total > d * d:
        raise BudgetExceededError(f"total multiplicity {total} exceeds d^2 = {d * d}")
    norm = sum(value * m for value, m in blocks)
    if abs(norm - 1.0) > 1e-10:
        raise NotNormalizedError(f"sum of eigenvalue * multiplicity is {norm!r}")
    # certificate weights must sum to one to 1e-12
    blocks = sorted(((value / norm, m) for value, m in blocks), key=lambda block: -block[0])
    logger.debug(f"isospectral separable state: d={d}, {len(blocks)} blocks, {d * d - total} zero eigenvalues")
    return _assemble_blocks(blocks, d)


def isospectral_werner(d: int, p: float) -> Tuple[DensityMatrix, SeparableEnsemble]:
    """rho'(p) = (1-p)/r_+ sum_{k<=r_+/d} P_k + p/r_- sum_{l<=r_-/d} P_{l + r_+/d}."""
    if d % 2 == 0:
        raise EvenDimensionError(f"d={d}: multiplicities r_+ and r_- are multiples of d only for odd d")
    if d < 3:
        raise ParameterRangeError(f"d must be an odd integer >= 3, got {d}")
    _check_werner_args(d, p)
    return _assemble_blocks(werner_spectrum(d, p), d)


# Random ensembles

def make_rng(seed: SeedLike, *stream: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by (seed, *stream)."""
    if isinstance(seed, np.random.Generator):
        return seed
    key = [int(s) for s in (seed if isinstance(seed, (list, tuple)) else [seed])]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([*key, *map(int, stream)])))


def _gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_pure(dims: BipartiteDims, seed: SeedLike) -> PureState:
    rng = make_rng(seed)
    vec = _gaussian(rng, dims.total)
    return PureState(dims, vec / np.linalg.norm(vec))


def random_mixed(dims: BipartiteDims, rank: Optional[int], seed: SeedLike) -> DensityMatrix:
    """G G^dagger / tr(G G^dagger) with G a complex Gaussian n x rank matrix."""
    n = dims.total
    rank = n if rank is None else rank
    if not 1 <= rank <= n:
        raise ParameterRangeError(f"rank must lie in 1..{n}, got {rank}")
    rng = make_rng(seed)
    g = _gaussian(rng, (n, rank))
    w = g @ dagger(g)
    return DensityMatrix(dims, w / np.trace(w).real)


def _random_ket_projector(d: int, rng: np.random.Generator) -> np.ndarray:
    vec = _gaussian(rng, d)
    vec /= np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


def random_separable(dims: BipartiteDims, terms: int, seed: SeedLike) -> Tuple[DensityMatrix, SeparableEnsemble]:
    """Mixture of ``terms`` random product pure states with Dirichlet(1) weights."""
    if terms < 1:
        raise ParameterRangeError(f"terms must be at least 1, got {terms}")
    rng = make_rng(seed)
    weights = rng.dirichlet(np.ones(terms))
    weights = weights / weights.sum()
    factors = tuple(
        (_random_ket_projector(dims.dA, rng), _random_ket_projector(dims.dB, rng)) for _ in range(terms)
    )
    ensemble = SeparableEnsemble(weights, factors)
    return assemble(ensemble), ensemble


def random_unitary(d: int, seed: SeedLike) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a Ginibre matrix."""
    rng = make_rng(seed)
    q, r = np.linalg.qr(_gaussian(rng, (d, d)))
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def ensemble_distance(ensemble: SeparableEnsemble, rho: DensityMatrix) -> float:
    """Frobenius distance between an assembled certificate and a state."""
    if ensemble.dims != rho.dims:
        return float("inf")
    return frobenius_norm(assemble(ensemble).mat - rho.mat)
