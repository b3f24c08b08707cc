"""Separability criteria and the consistency check of their implication chain.

    separable => PPT => (undistillable) => reduction => rank

with the conditional-entropy criterion attached below reduction (for every
alpha >= 0), below majorization, and below full rank (for alpha < 0).
"""

import logging
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from config import settings
from entropy import (
    DEFAULT_ALPHA_GRID,
    NEGATIVE_ALPHA_GRID,
    AlphaValue,
    parse_grid,
    positivity_sign,
)
from errors import CertificateMismatchError, ParameterRangeError
from models import ChainReport, CriterionName, CriterionVerdict, SignResult
from numkernel import eigh, frobenius_norm, kron, majorizes
from states import (
    BipartiteDims,
    DensityMatrix,
    SeparableEnsemble,
    Side,
    ensemble_distance,
    make_rng,
    partial_transpose,
    random_mixed,
    werner,
)
from state_io import ensemble_to_model

logger = logging.getLogger(__name__)

UNDISTILLABLE_NOTE = (
    "undistillable: not evaluated; bounded between PPT (above) and the reduction criterion (below)"
)
CERTIFICATE_TOLERANCE = 1e-9


def _eigen_verdict(criterion: CriterionName, operator: np.ndarray, what: str) -> CriterionVerdict:
    tol = settings.tolerances.psd
    spectrum = eigh(operator).values
    margin = spectrum.min
    holds = margin >= -tol
    witness = None if holds else f"eigenvalue {len(spectrum) - 1} of {what} is {margin:.6g}"
    return CriterionVerdict(criterion=criterion, holds=holds, margin=margin, tolerance=tol, witness=witness)


def ppt(rho: DensityMatrix) -> CriterionVerdict:
    """Smallest eigenvalue of the partial transpose on A."""
    return _eigen_verdict(CriterionName.ppt, partial_transpose(rho, Side.A), "rho^{T_A}")


def reduction(rho: DensityMatrix, side: Side = Side.A) -> CriterionVerdict:
    """rho_A (x) 1 - rho >= 0 (side A) or 1 (x) rho_B - rho >= 0 (side B)."""
    side = Side(side)
    if side is Side.A:
        operator = kron(rho.reduced_a, np.eye(rho.dims.dB)) - rho.mat
        name, what = CriterionName.reduction_A, "rho_A (x) 1 - rho"
    else:
        operator = kron(np.eye(rho.dims.dA), rho.reduced_b) - rho.mat
        name, what = CriterionName.reduction_B, "1 (x) rho_B - rho"
    verdict = _eigen_verdict(name, operator, what)
    if not verdict.holds:
        verdict.notes.append(f"reduction criterion violated on side {side.value}: the state is distillable")
    return verdict


def rank_criterion(rho: DensityMatrix) -> CriterionVerdict:
    """max(rank rho_A, rank rho_B) <= rank rho."""
    joint = rho.rank()
    rank_a = rho.spectrum_a.rank()
    rank_b = rho.spectrum_b.rank()
    margin = float(joint - max(rank_a, rank_b))
    holds = margin >= 0
    witness = None if holds else f"rank rho = {joint} < max(rank rho_A = {rank_a}, rank rho_B = {rank_b})"
    return CriterionVerdict(criterion=CriterionName.rank, holds=holds, margin=margin, witness=witness)


def majorization(rho: DensityMatrix, side: Side = Side.A) -> CriterionVerdict:
    """The reduction majorizes the state (reduction spectrum zero-padded)."""
    side = Side(side)
    result = majorizes(rho.reduced_spectrum(side), rho.spectrum)
    name = CriterionName.majorization_A if side is Side.A else CriterionName.majorization_B
    witness = None
    if not result.holds:
        witness = f"partial sum k={result.failing_k} of rho_{side.value} falls short by {-result.margin:.6g}"
    return CriterionVerdict(criterion=name, holds=result.holds, margin=result.margin,
                            tolerance=settings.tolerances.major, witness=witness)


def _nonnegative_grid(grid: Sequence[AlphaValue]) -> List[AlphaValue]:
    return [alpha for alpha in grid if alpha.is_infinite or alpha.value >= 0]


def _negative_grid(grid: Sequence[AlphaValue]) -> List[AlphaValue]:
    return [alpha for alpha in grid if not alpha.is_infinite and alpha.value < 0]


def entropic_signs(rho: DensityMatrix, grid: Sequence[AlphaValue], side: Side) -> List[SignResult]:
    return [positivity_sign(rho, alpha, side) for alpha in grid]


def entropic(rho: DensityMatrix, grid: Optional[Sequence] = None) -> CriterionVerdict:
    """Conditional entropies nonnegative for every grid alpha >= 0, on both sides."""
    grid = DEFAULT_ALPHA_GRID if grid is None else parse_grid(grid)
    tol = settings.tolerances.entropic
    notes = []
    skipped = _negative_grid(grid)
    if skipped:
        notes.append(f"alpha<0 entries {[a.label for a in skipped]} are not part of the entropic criterion")
    signs = [s for side in (Side.A, Side.B) for s in entropic_signs(rho, _nonnegative_grid(grid), side)]
    if not signs:
        raise ParameterRangeError("the entropic criterion needs at least one alpha >= 0")
    worst = min(signs, key=lambda s: s.margin)
    holds = worst.margin >= -tol
    return CriterionVerdict(
        criterion=CriterionName.entropic,
        holds=holds,
        margin=worst.margin,
        tolerance=tol,
        witness=f"alpha={worst.alpha}, side={worst.side}",
        notes=notes,
    )


def spectrally_equivalent(rho: DensityMatrix, sigma: DensityMatrix, tol: float = 1e-10) -> Dict[str, float]:
    """Distances between the spectra and between the reductions of two states.

    Two states whose distances are all within ``tol`` cannot be told apart
    by any criterion using only the spectra of the state and its reductions.
    """
    if rho.dims != sigma.dims:
        raise ParameterRangeError(f"dims differ: {rho.dims.as_list()} vs {sigma.dims.as_list()}")
    return {
        "spectrum": float(np.max(np.abs(rho.spectrum.values - sigma.spectrum.values))),
        "reduction_A": frobenius_norm(rho.reduced_a - sigma.reduced_a),
        "reduction_B": frobenius_norm(rho.reduced_b - sigma.reduced_b),
    }


def _maximally_chaotic_distance(rho: DensityMatrix, side: Side) -> float:
    d = rho.dims.of(side)
    return frobenius_norm(rho.reduced(side) - np.eye(d) / d)


def _comparator_warnings(rho: DensityMatrix, comparator: DensityMatrix) -> List[str]:
    warnings = []
    if comparator.dims != rho.dims:
        return [f"comparator dims {comparator.dims.as_list()} differ from {rho.dims.as_list()}"]
    for side in (Side.A, Side.B):
        distance = _maximally_chaotic_distance(comparator, side)
        if distance > 1e-10:
            warnings.append(f"comparator reduction on {side.value} is not maximally chaotic (distance {distance:.3e})")
    for key, distance in spectrally_equivalent(rho, comparator).items():
        if distance > 1e-10:
            warnings.append(f"comparator {key} differs from the state's (distance {distance:.3e})")
    return warnings


def chain_report(rho: DensityMatrix, certificate: Optional[SeparableEnsemble] = None,
                 grid: Optional[Sequence] = None,
                 comparator: Optional[DensityMatrix] = None) -> ChainReport:
    """Evaluate every criterion and record any implication arrow that fails.

    A non-empty ``consistency_violations`` list indicates a numerical or
    logical defect, never a property of the state.
    """
    grid = list(DEFAULT_ALPHA_GRID) + list(NEGATIVE_ALPHA_GRID) if grid is None else parse_grid(grid)
    certificate = certificate if certificate is not None else rho.certificate
    if certificate is not None:
        distance = ensemble_distance(certificate, rho)
        if distance > CERTIFICATE_TOLERANCE:
            raise CertificateMismatchError(f"certificate reassembles {distance:.3e} away from the state")

    tol = settings.tolerances
    verdicts = {
        CriterionName.ppt: ppt(rho),
        CriterionName.reduction_A: reduction(rho, Side.A),
        CriterionName.reduction_B: reduction(rho, Side.B),
        CriterionName.rank: rank_criterion(rho),
        CriterionName.majorization_A: majorization(rho, Side.A),
        CriterionName.majorization_B: majorization(rho, Side.B),
        CriterionName.entropic: entropic(rho, grid),
    }
    holds = {name: verdict.holds for name, verdict in verdicts.items()}

    nonnegative = _nonnegative_grid(grid)
    side_entropic = {}
    side_rank = {}
    for side in (Side.A, Side.B):
        signs = entropic_signs(rho, nonnegative, side)
        side_entropic[side] = min(s.margin for s in signs) >= -tol.entropic
        side_rank[side] = rho.reduced_spectrum(side).rank() <= rho.rank()

    full_rank = rho.is_full_rank()
    notes = [UNDISTILLABLE_NOTE]
    violations: List[str] = []

    if certificate is not None:
        notes.append("separability certificate supplied and verified")
        violations += [f"certificate=>{name.value}" for name, ok in holds.items() if not ok]

    for side, name in ((Side.A, CriterionName.reduction_A), (Side.B, CriterionName.reduction_B)):
        if holds[CriterionName.ppt] and not holds[name]:
            violations.append(f"ppt=>{name.value}")
        if holds[name] and not side_rank[side]:
            violations.append(f"{name.value}=>rank_{side.value}")
        if holds[name] and not side_entropic[side]:
            violations.append(f"{name.value}=>entropic_{side.value}")
        if not holds[name]:
            notes.extend(verdicts[name].notes)
    if holds[CriterionName.reduction_A] and holds[CriterionName.reduction_B] and not holds[CriterionName.rank]:
        violations.append("reduction=>rank")

    for side, name in ((Side.A, CriterionName.majorization_A), (Side.B, CriterionName.majorization_B)):
        if holds[name] and not side_entropic[side]:
            violations.append(f"{name.value}=>entropic_{side.value}")

    negatives = _negative_grid(grid)
    if negatives and full_rank:
        for side in (Side.A, Side.B):
            signs = entropic_signs(rho, negatives, side)
            if min(s.margin for s in signs) < -tol.entropic:
                violations.append(f"full_rank=>entropic_negative_{side.value}")
    elif negatives:
        notes.append("alpha<0 rows skipped: the state is not of full rank")

    spectral = [CriterionName.reduction_A, CriterionName.reduction_B, CriterionName.rank,
                CriterionName.majorization_A, CriterionName.majorization_B, CriterionName.entropic]
    if not holds[CriterionName.ppt] and all(holds[name] for name in spectral):
        notes.append("spectrally undetectable: PPT fails (entangled) while every spectral criterion holds")

    warnings = _comparator_warnings(rho, comparator) if comparator is not None else []
    for warning in warnings:
        logger.warning(warning)
    if violations:
        logger.error(f"implication chain violated: {violations}")

    return ChainReport(
        verdicts=list(verdicts.values()),
        full_rank=full_rank,
        certificate=ensemble_to_model(certificate) if certificate is not None else None,
        consistency_violations=violations,
        notes=notes,
        warnings=warnings,
    )


# Bisection on a one-parameter family

def ppt_boundary(family: Callable[[float], DensityMatrix], lo: float, hi: float, tol: float = 1e-6) -> float:
    """Parameter at which the PPT margin changes sign, to within ``tol``.

    ``family(lo)`` must pass PPT and ``family(hi)`` must fail it.
    """
    if not ppt(family(lo)).holds or ppt(family(hi)).holds:
        raise ParameterRangeError(f"PPT does not change sign on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ppt(family(mid)).holds:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def werner_ppt_boundary(d: int, tol: float = 1e-6) -> float:
    boundary = ppt_boundary(lambda p: werner(d, p), 0.0, 1.0, tol)
    logger.info(f"werner d={d}: PPT boundary at p={boundary:.9f}")
    return boundary


# Exploratory sampler

class ReductionMajorizationSample(NamedTuple):
    trials: int
    reduction_passing: int
    majorization_failures: List[int]  # trial indices


def explore_reduction_majorization(dims: BipartiteDims, trials: int, seed: int,
                                   rank: Optional[int] = None) -> ReductionMajorizationSample:
    """Record majorization failures among random states passing the reduction criterion.

    Whether reduction implies majorization is open; nothing is asserted here.
    """
    if trials < 1:
        raise ParameterRangeError(f"trials must be at least 1, got {trials}")
    passing = 0
    failures = []
    for trial in range(trials):
        rho = random_mixed(dims, rank, make_rng(seed, trial))
        if reduction(rho, Side.A).holds and reduction(rho, Side.B).holds:
            passing += 1
            if not (majorization(rho, Side.A).holds and majorization(rho, Side.B).holds):
                failures.append(trial)
    return ReductionMajorizationSample(trials, passing, failures)
