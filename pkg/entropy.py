"""Renyi, Tsallis and von Neumann entropies, their conditional versions
and the sign predicate for conditional entropy positivity.

All logarithms are natural. Every quantity is a function of the spectra
of the state and its reductions, which ``DensityMatrix`` caches.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from config import settings
from errors import EntrocritError, NotFullRankError, ParameterRangeError
from models import EntropyKind, EntropyResult, Marker, Sign, SignResult, SweepRow, SweepTable
from numkernel import EXP, LOG, Spectrum, dagger, eigh, kron, matrix_function
from states import DensityMatrix, Side

logger = logging.getLogger(__name__)

NEAR_ONE = 1e-9


@dataclass(frozen=True)
class AlphaValue:
    """Entropic parameter: any finite real, or +inf."""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if math.isnan(value) or value == -math.inf:
            raise ParameterRangeError(f"alpha must be a finite real or +inf, got {self.value}")
        object.__setattr__(self, 'value', value)

    @classmethod
    def infinity(cls) -> "AlphaValue":
        return cls(math.inf)

    @classmethod
    def parse(cls, token: Union[str, float, "AlphaValue"]) -> "AlphaValue":
        if isinstance(token, AlphaValue):
            return token
        if isinstance(token, str):
            text = token.strip().lower()
            if text in ("inf", "+inf", "infinity", "oo"):
                return cls.infinity()
            try:
                return cls(float(text))
            except ValueError as e:
                raise ParameterRangeError(f"cannot parse alpha {token!r}") from e
        return cls(token)

    @property
    def is_infinite(self) -> bool:
        return self.value == math.inf

    @property
    def is_one(self) -> bool:
        return abs(self.value - 1.0) < NEAR_ONE

    @property
    def label(self) -> str:
        if self.is_infinite:
            return "inf"
        text = repr(self.value)
        return text[:-2] if text.endswith(".0") else text

    def __str__(self) -> str:
        return self.label


def parse_grid(tokens: Union[str, Iterable]) -> List[AlphaValue]:
    """Parse '0,0.5,1,2,inf' or an iterable of tokens."""
    if isinstance(tokens, str):
        tokens = [t for t in tokens.split(",") if t.strip()]
    grid = [AlphaValue.parse(t) for t in tokens]
    if not grid:
        raise ParameterRangeError("alpha grid must not be empty")
    return grid


DEFAULT_ALPHA_GRID = parse_grid("0,0.25,0.5,0.75,1,1.5,2,3,5,10,inf")
NEGATIVE_ALPHA_GRID = parse_grid("-0.5,-1,-2")


def in_proven_range(alpha: AlphaValue) -> bool:
    """Values for which separable states are known to have nonnegative conditional entropy."""
    return alpha.is_infinite or alpha.value == 0 or 1.0 - NEAR_ONE <= alpha.value <= 2.0


# Spectral primitives

def trace_power(spectrum: Spectrum, alpha: AlphaValue) -> float:
    """tr(rho^alpha), eigenvalues at or below the rank threshold counted as zero."""
    tol = settings.tolerances.rank
    a = alpha.value
    if alpha.is_infinite:
        raise ParameterRangeError("tr(rho^inf) is not defined; use the operator norm")
    if a < 0:
        if spectrum.min <= tol:
            raise NotFullRankError(f"alpha={alpha.label} needs full rank, min eigenvalue {spectrum.min:.3e}")
        return float(np.sum(spectrum.values ** a))
    if a == 0:
        return float(spectrum.rank(tol))
    return float(np.sum(spectrum.support(tol) ** a))


def _von_neumann_value(spectrum: Spectrum) -> float:
    support = spectrum.support()
    return float(-np.sum(support * np.log(support)))


def _renyi_value(spectrum: Spectrum, alpha: AlphaValue) -> float:
    if alpha.is_infinite:
        return -math.log(spectrum.max)
    if alpha.is_one:
        return _von_neumann_value(spectrum)
    if alpha.value == 0:
        return math.log(spectrum.rank())
    return math.log(trace_power(spectrum, alpha)) / (1.0 - alpha.value)


def spectrum_of(rho: Union[DensityMatrix, np.ndarray, Spectrum]) -> Spectrum:
    if isinstance(rho, Spectrum):
        return rho
    if isinstance(rho, DensityMatrix):
        return rho.spectrum
    return eigh(rho).values


def _side(side: Union[Side, str]) -> Side:
    return Side(side)


# Unconditional entropies

def von_neumann(rho) -> EntropyResult:
    """-tr(rho ln rho), with 0 ln 0 = 0."""
    return EntropyResult(alpha="1", kind=EntropyKind.von_neumann, value=_von_neumann_value(spectrum_of(rho)))


def renyi(rho, alpha) -> EntropyResult:
    """ln tr(rho^alpha) / (1 - alpha); log-rank at 0, von Neumann at 1, -ln ||rho|| at inf."""
    alpha = AlphaValue.parse(alpha)
    spectrum = spectrum_of(rho)
    kind = EntropyKind.von_neumann if alpha.is_one else EntropyKind.renyi
    return EntropyResult(alpha=alpha.label, kind=kind, value=_renyi_value(spectrum, alpha))


def _tsallis_value(spectrum: Spectrum, alpha: AlphaValue) -> float:
    if alpha.is_one:
        return _von_neumann_value(spectrum)
    return (1.0 - trace_power(spectrum, alpha)) / (alpha.value - 1.0)


def tsallis(rho, alpha) -> EntropyResult:
    """(1 - tr rho^alpha) / (alpha - 1); the limit 0 at alpha = inf is flagged."""
    alpha = AlphaValue.parse(alpha)
    spectrum = spectrum_of(rho)
    if alpha.is_infinite:
        return EntropyResult(alpha=alpha.label, kind=EntropyKind.tsallis, value=0.0, marker=Marker.limit)
    kind = EntropyKind.von_neumann if alpha.is_one else EntropyKind.tsallis
    return EntropyResult(alpha=alpha.label, kind=kind, value=_tsallis_value(spectrum, alpha))


# Conditional entropies

def conditional_von_neumann(rho: DensityMatrix, conditioned_on: Side = Side.A) -> EntropyResult:
    side = _side(conditioned_on)
    value = _von_neumann_value(rho.spectrum) - _von_neumann_value(rho.reduced_spectrum(side))
    return EntropyResult(alpha="1", kind=EntropyKind.von_neumann, conditional=side.value, value=value)


def conditional_renyi(rho: DensityMatrix, alpha, conditioned_on: Side = Side.A) -> EntropyResult:
    """S_alpha(rho) - S_alpha(rho_X) for X the conditioning subsystem."""
    alpha = AlphaValue.parse(alpha)
    side = _side(conditioned_on)
    if alpha.is_one:
        return conditional_von_neumann(rho, side)
    value = _renyi_value(rho.spectrum, alpha) - _renyi_value(rho.reduced_spectrum(side), alpha)
    return EntropyResult(alpha=alpha.label, kind=EntropyKind.renyi, conditional=side.value, value=value)


def conditional_tsallis(rho: DensityMatrix, alpha, conditioned_on: Side = Side.A) -> EntropyResult:
    """(tr rho_X^alpha - tr rho^alpha) / ((alpha - 1) tr rho_X^alpha).

    At alpha = inf the limit is 0 when ||rho_X|| >= ||rho|| and diverges
    to -inf otherwise.
    """
    alpha = AlphaValue.parse(alpha)
    side = _side(conditioned_on)
    if alpha.is_one:
        return conditional_von_neumann(rho, side)
    joint = rho.spectrum
    marginal = rho.reduced_spectrum(side)
    if alpha.is_infinite:
        if marginal.max >= joint.max - settings.tolerances.sign_band:
            return EntropyResult(alpha=alpha.label, kind=EntropyKind.tsallis, conditional=side.value,
                                 value=0.0, marker=Marker.limit)
        return EntropyResult(alpha=alpha.label, kind=EntropyKind.tsallis, conditional=side.value,
                             marker=Marker.negative_infinity)
    t_marginal = trace_power(marginal, alpha)
    t_joint = trace_power(joint, alpha)
    value = (t_marginal - t_joint) / ((alpha.value - 1.0) * t_marginal)
    return EntropyResult(alpha=alpha.label, kind=EntropyKind.tsallis, conditional=side.value, value=value)


def _sign_of(margin: float) -> Sign:
    band = settings.tolerances.sign_band
    if margin > band:
        return Sign.positive
    if margin < -band:
        return Sign.negative
    return Sign.zero


def sign_margin(joint: Spectrum, marginal: Spectrum, alpha: AlphaValue) -> float:
    """Oriented, normalised margin whose sign is the sign of the conditional entropy.

    alpha > 1:      tr rho_X^a - tr rho^a
    0 <= alpha < 1: tr rho^a - tr rho_X^a
    alpha < 0:      tr rho^a - tr rho_X^a   (orientation follows sign(alpha - 1))
    alpha = 1:      conditional von Neumann entropy
    alpha = inf:    ||rho_X|| - ||rho||

    At alpha = inf the sign comes from the norm comparison, so it can be
    positive while the conditional Tsallis value is its limit 0.
    """
    if alpha.is_one:
        return _von_neumann_value(joint) - _von_neumann_value(marginal)
    if alpha.is_infinite:
        a, b = marginal.max, joint.max
        return (a - b) / max(a, b)
    t_marginal = trace_power(marginal, alpha)
    t_joint = trace_power(joint, alpha)
    oriented = math.copysign(1.0, alpha.value - 1.0) * (t_marginal - t_joint)
    return oriented / max(t_marginal, t_joint)


def positivity_sign(rho: DensityMatrix, alpha, conditioned_on: Side = Side.A) -> SignResult:
    alpha = AlphaValue.parse(alpha)
    side = _side(conditioned_on)
    margin = sign_margin(rho.spectrum, rho.reduced_spectrum(side), alpha)
    return SignResult(alpha=alpha.label, side=side.value, sign=_sign_of(margin), margin=margin)


# Sweeps

def _sides(conditioned_on: Union[Side, str]) -> List[Side]:
    if conditioned_on in ("both", None):
        return [Side.A, Side.B]
    return [_side(conditioned_on)]


def sweep_row(rho: DensityMatrix, alpha: AlphaValue, side: Side) -> SweepRow:
    """One alpha/side row; numerical preconditions become markers."""
    row = SweepRow(alpha=alpha.label, side=side.value, proven_range=in_proven_range(alpha))
    try:
        marginal = rho.reduced_spectrum(side)
        row.renyi = _renyi_value(rho.spectrum, alpha)
        row.renyi_reduced = _renyi_value(marginal, alpha)
        row.conditional_renyi = conditional_renyi(rho, alpha, side).value
        if not alpha.is_infinite:
            row.tsallis = _tsallis_value(rho.spectrum, alpha)
            row.tsallis_reduced = _tsallis_value(marginal, alpha)
        tsallis_result = conditional_tsallis(rho, alpha, side)
        row.conditional_tsallis = tsallis_result.value
        row.marker = tsallis_result.marker
        sign = positivity_sign(rho, alpha, side)
        row.sign = sign.sign
        row.margin = sign.margin
    except NotFullRankError:
        row.marker = Marker.not_full_rank
    except (EntrocritError, ValueError, ZeroDivisionError) as e:
        logger.warning(f"alpha={alpha.label} side={side.value}: {e}")
        row.marker = Marker.undefined
    return row


def alpha_sweep(rho: DensityMatrix, grid: Optional[Sequence] = None,
                conditioned_on: Union[Side, str] = "both") -> SweepTable:
    """Entropies and conditional signs for every (alpha, side) pair."""
    grid = DEFAULT_ALPHA_GRID if grid is None else parse_grid(grid)
    rows = [sweep_row(rho, alpha, side) for alpha in grid for side in _sides(conditioned_on)]

    scored = [row for row in rows if row.margin is not None]
    table = SweepTable(rows=rows, detected=any(row.sign is Sign.negative for row in scored))
    if scored:
        worst = min(scored, key=lambda row: row.margin)
        table.min_margin = worst.margin
        table.witness = f"alpha={worst.alpha}, side={worst.side}"
    return table


# Proof-step quantities

class NegativeAlphaChain(NamedTuple):
    reduced: float      # tr rho_X^alpha
    diagonal: float     # sum_{a,i} <a i|rho|a i>^alpha in the eigenbasis of rho_X
    joint: float        # tr rho^alpha


def negative_alpha_chain(rho: DensityMatrix, alpha, conditioned_on: Side = Side.A) -> NegativeAlphaChain:
    """For full-rank rho and alpha < 0: reduced <= diagonal <= joint."""
    alpha = AlphaValue.parse(alpha)
    if alpha.is_infinite or alpha.value >= 0:
        raise ParameterRangeError(f"alpha must be negative, got {alpha.label}")
    if not rho.is_full_rank():
        raise NotFullRankError("negative alpha needs a full-rank state")
    side = _side(conditioned_on)
    eig = eigh(rho.reduced(side))
    identity = np.eye(rho.dims.of(side.other))
    basis = kron(eig.vectors, identity) if side is Side.A else kron(identity, eig.vectors)
    diag = np.real(np.diag(dagger(basis) @ rho.mat @ basis))
    return NegativeAlphaChain(
        reduced=trace_power(eig.values, alpha),
        diagonal=float(np.sum(diag ** alpha.value)),
        joint=trace_power(rho.spectrum, alpha),
    )


class ReductionBoundChain(NamedTuple):
    reduced: float      # tr rho_X^alpha
    golden_thompson: float   # tr exp(ln rho + (alpha - 1) ln(rho_X (x) 1))
    joint: float        # tr rho^alpha


def reduction_bound_chain(rho: DensityMatrix, alpha, conditioned_on: Side = Side.A) -> ReductionBoundChain:
    """For alpha > 1 and full-rank rho satisfying the reduction criterion on X:
    reduced >= golden_thompson >= joint."""
    alpha = AlphaValue.parse(alpha)
    if alpha.is_infinite or alpha.value <= 1:
        raise ParameterRangeError(f"alpha must be a finite value above 1, got {alpha.label}")
    if not rho.is_full_rank():
        raise NotFullRankError("the logarithm of rho needs a full-rank state")
    side = _side(conditioned_on)
    identity = np.eye(rho.dims.of(side.other))
    marginal = rho.reduced(side)
    lifted = kron(marginal, identity) if side is Side.A else kron(identity, marginal)
    exponent = matrix_function(rho.mat, LOG) + (alpha.value - 1.0) * matrix_function(lifted, LOG)
    middle = float(np.trace(matrix_function(exponent, EXP)).real)
    return ReductionBoundChain(
        reduced=trace_power(rho.reduced_spectrum(side), alpha),
        golden_thompson=middle,
        joint=trace_power(rho.spectrum, alpha),
    )
