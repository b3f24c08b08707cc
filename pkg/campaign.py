import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from config import restore_settings, settings, settings_snapshot
from criteria import chain_report, ppt, spectrally_equivalent, werner_ppt_boundary
from entropy import (
    DEFAULT_ALPHA_GRID,
    NEGATIVE_ALPHA_GRID,
    AlphaValue,
    alpha_sweep,
    conditional_renyi,
    conditional_tsallis,
    parse_grid,
    positivity_sign,
    renyi,
    tsallis,
)
from errors import NotFullRankError, ParameterRangeError
from models import (
    AnalysisReport,
    CampaignReport,
    CriterionName,
    CriterionTally,
    EntropyKind,
    EntropyResult,
    EntropyRow,
    EntropyTableReport,
    IsospectralReport,
    Marker,
    ReportHeader,
    RunConfig,
    Sign,
    TrialViolation,
    WernerRow,
    WernerSweepReport,
)
from state_io import dump_state, ensemble_to_model
from states import (
    BipartiteDims,
    DensityMatrix,
    Side,
    ensemble_distance,
    isospectral_werner,
    make_rng,
    random_mixed,
    random_pure,
    random_separable,
    werner,
)

logger = logging.getLogger(__name__)

ENSEMBLES = ("pure", "mixed", "separable")
BOUNDARY_TOLERANCE = 1e-6


class TrialOutcome(NamedTuple):
    trial: int
    margins: List[Tuple[str, bool, float]]
    violations: List[str]
    full_rank: bool
    pure_exception: bool
    negative_margin: Optional[float]


def _full_grid() -> List[AlphaValue]:
    return list(DEFAULT_ALPHA_GRID) + list(NEGATIVE_ALPHA_GRID)


def _trial_state(ensemble: str, dims: BipartiteDims, seed: int, trial: int,
                 rank: Optional[int], terms: Optional[int]) -> DensityMatrix:
    rng = make_rng(seed, trial)
    if ensemble == "pure":
        return random_pure(dims, rng).density()
    if ensemble == "mixed":
        return random_mixed(dims, rank, rng)
    rho, _ = random_separable(dims, terms or dims.total, rng)
    return rho


def _pure_state_exception(rho: DensityMatrix) -> bool:
    """Entangled (Schmidt rank >= 2) iff the alpha=2 conditional entropy is negative."""
    alpha = AlphaValue(2.0)
    entangled = rho.spectrum_a.rank() >= 2
    return any((positivity_sign(rho, alpha, side).sign is Sign.negative) != entangled for side in (Side.A, Side.B))


def run_trial(ensemble: str, dims: BipartiteDims, seed: int, trial: int,
              rank: Optional[int] = None, terms: Optional[int] = None,
              grid: Optional[Sequence[AlphaValue]] = None) -> TrialOutcome:
    rho = _trial_state(ensemble, dims, seed, trial, rank, terms)
    grid = _full_grid() if grid is None else list(grid)
    report = chain_report(rho, grid=grid)

    negative_margin = None
    negatives = [a for a in grid if not a.is_infinite and a.value < 0]
    if report.full_rank and negatives:
        negative_margin = min(positivity_sign(rho, a, side).margin for a in negatives for side in (Side.A, Side.B))

    return TrialOutcome(
        trial=trial,
        margins=[(v.criterion.value, v.holds, v.margin) for v in report.verdicts],
        violations=report.consistency_violations,
        full_rank=report.full_rank,
        pure_exception=ensemble == "pure" and _pure_state_exception(rho),
        negative_margin=negative_margin,
    )


def _run_trial_packed(args) -> TrialOutcome:
    return run_trial(*args)


def _min_or_none(current: Optional[float], value: Optional[float]) -> Optional[float]:
    if value is None:
        return current
    return value if current is None else min(current, value)


class CampaignService:
    """Builds the reports behind every command."""

    def __init__(self):
        pass

    def run_config(self, seed: Optional[int] = None, grid: Optional[Sequence[AlphaValue]] = None,
                   output_format: str = "json", output_path: Optional[str] = None) -> RunConfig:
        return RunConfig(
            seed=settings.seed if seed is None else seed,
            alpha_grid=[a.label for a in (grid or [])],
            tolerances=settings.tolerances.model_dump(),
            output_format=output_format,
            output_path=output_path,
        )

    def _header(self, command: str, config: Optional[RunConfig], grid=None) -> ReportHeader:
        config = config or self.run_config(grid=grid)
        if grid is not None and not config.alpha_grid:
            config = config.model_copy(update={"alpha_grid": [a.label for a in grid]})
        return ReportHeader(command=command, config=config)

    def analyze(self, rho: DensityMatrix, grid: Optional[Sequence] = None,
                comparator: Optional[DensityMatrix] = None,
                config: Optional[RunConfig] = None) -> AnalysisReport:
        """Full criterion chain and alpha sweep of one state."""
        grid = _full_grid() if grid is None else parse_grid(grid)
        chain = chain_report(rho, grid=grid, comparator=comparator)
        sweep = alpha_sweep(rho, grid)
        return AnalysisReport(
            header=self._header("analyze", config, grid),
            dims=rho.dims.as_list(),
            chain=chain,
            sweep=sweep,
        )

    def werner_sweep(self, d: int, p_start: float, p_end: float, p_step: float,
                     grid: Optional[Sequence] = None,
                     config: Optional[RunConfig] = None) -> WernerSweepReport:
        if p_step <= 0:
            raise ParameterRangeError(f"p-step must be positive, got {p_step}")
        if not 0.0 <= p_start <= p_end <= 1.0:
            raise ParameterRangeError(f"need 0 <= p-start <= p-end <= 1, got [{p_start}, {p_end}]")
        grid = list(DEFAULT_ALPHA_GRID) if grid is None else parse_grid(grid)
        steps = int(math.floor((p_end - p_start) / p_step + 1e-9))
        values = [min(p_start + i * p_step, p_end) for i in range(steps + 1)]

        rows = []
        for p in values:
            report = chain_report(werner(d, p), grid=grid)
            rows.append(WernerRow(
                p=p,
                margins={v.criterion.value: v.margin for v in report.verdicts},
                holds={v.criterion.value: v.holds for v in report.verdicts},
                entropic_min_margin=report.verdict(CriterionName.entropic).margin,
                consistency_violations=report.consistency_violations,
            ))
            logger.debug(f"werner d={d} p={p:.6f}: ppt margin {rows[-1].margins['ppt']:.3e}")

        return WernerSweepReport(
            header=self._header("werner", config, grid),
            d=d,
            rows=rows,
            ppt_boundary=werner_ppt_boundary(d, BOUNDARY_TOLERANCE),
            boundary_tolerance=BOUNDARY_TOLERANCE,
        )

    def isospectral_demo(self, d: int, p: float, emit_dir: Optional[str] = None,
                         config: Optional[RunConfig] = None) -> IsospectralReport:
        """Werner state next to a separable state with the same spectrum and reductions."""
        rho = werner(d, p)
        counterpart, certificate = isospectral_werner(d, p)
        distances = spectrally_equivalent(rho, counterpart)

        emitted = []
        if emit_dir:
            directory = Path(emit_dir)
            emitted.append(str(dump_state(rho, directory / "werner.json")))
            emitted.append(str(dump_state(counterpart, directory / "separable.json")))
            logger.info(f"wrote {len(emitted)} state files to {directory}")

        return IsospectralReport(
            header=self._header("isospectral", config),
            d=d,
            p=p,
            werner_spectrum=rho.spectrum.to_list(),
            counterpart_spectrum=counterpart.spectrum.to_list(),
            spectrum_distance=distances["spectrum"],
            reduction_distances={"A": distances["reduction_A"], "B": distances["reduction_B"]},
            werner_ppt=ppt(rho),
            counterpart_ppt=ppt(counterpart),
            certificate=ensemble_to_model(certificate),
            certificate_distance=ensemble_distance(certificate, counterpart),
            emitted_files=emitted,
        )

    def entropy_table(self, rho: DensityMatrix, grid: Optional[Sequence] = None, source: str = "input",
                      config: Optional[RunConfig] = None) -> EntropyTableReport:
        """Renyi and Tsallis entropies, conditional on A and on B, per alpha."""
        grid = list(DEFAULT_ALPHA_GRID) if grid is None else parse_grid(grid)
        rows = [self._entropy_row(rho, alpha) for alpha in grid]
        return EntropyTableReport(
            header=self._header("entropy", config, grid),
            source=source,
            dims=rho.dims.as_list(),
            rows=rows,
        )

    def _entropy_row(self, rho: DensityMatrix, alpha: AlphaValue) -> EntropyRow:
        def guarded(kind: EntropyKind, side: Optional[Side], compute) -> EntropyResult:
            try:
                return compute()
            except NotFullRankError:
                return EntropyResult(alpha=alpha.label, kind=kind, conditional=side.value if side else None,
                                     marker=Marker.not_full_rank)

        def sign(side: Side):
            try:
                return positivity_sign(rho, alpha, side)
            except NotFullRankError:
                return None

        return EntropyRow(
            alpha=alpha.label,
            renyi=guarded(EntropyKind.renyi, None, lambda: renyi(rho, alpha)),
            tsallis=guarded(EntropyKind.tsallis, None, lambda: tsallis(rho, alpha)),
            conditional_renyi_A=guarded(EntropyKind.renyi, Side.A, lambda: conditional_renyi(rho, alpha, Side.A)),
            conditional_renyi_B=guarded(EntropyKind.renyi, Side.B, lambda: conditional_renyi(rho, alpha, Side.B)),
            conditional_tsallis_A=guarded(EntropyKind.tsallis, Side.A, lambda: conditional_tsallis(rho, alpha, Side.A)),
            conditional_tsallis_B=guarded(EntropyKind.tsallis, Side.B, lambda: conditional_tsallis(rho, alpha, Side.B)),
            sign_A=sign(Side.A),
            sign_B=sign(Side.B),
        )

    def sample(self, ensemble: str, dims: BipartiteDims, trials: int, seed: Optional[int] = None,
               rank: Optional[int] = None, terms: Optional[int] = None, workers: int = 1,
               grid: Optional[Sequence] = None, config: Optional[RunConfig] = None) -> CampaignReport:
        """Run the criterion chain on ``trials`` random states.

        Trial i draws from the stream keyed by (seed, i), so the report does
        not depend on the number of workers.
        """
        if ensemble not in ENSEMBLES:
            raise ParameterRangeError(f"ensemble must be one of {', '.join(ENSEMBLES)}, got {ensemble!r}")
        if trials < 1:
            raise ParameterRangeError(f"trials must be at least 1, got {trials}")
        if workers < 1:
            raise ParameterRangeError(f"workers must be at least 1, got {workers}")
        seed = settings.seed if seed is None else seed
        grid = _full_grid() if grid is None else parse_grid(grid)

        jobs = [(ensemble, dims, seed, trial, rank, terms, grid) for trial in range(trials)]
        logger.info(f"sampling {trials} {ensemble} states on {dims.dA}x{dims.dB} with seed {seed}")
        if workers == 1:
            outcomes = []
            for job in jobs:
                outcomes.append(_run_trial_packed(job))
                self._log_progress(len(outcomes), trials)
        else:
            with ProcessPoolExecutor(max_workers=workers, initializer=restore_settings,
                                     initargs=(settings_snapshot(),)) as executor:
                outcomes = list(executor.map(_run_trial_packed, jobs, chunksize=max(1, trials // (4 * workers))))
        outcomes.sort(key=lambda outcome: outcome.trial)

        report = self._aggregate(outcomes, ensemble, dims, self._header("sample", config, grid))
        if report.consistency_violations:
            logger.error(f"{len(report.consistency_violations)} consistency violations in {trials} trials")
        return report

    def _log_progress(self, done: int, total: int) -> None:
        step = max(1, total // 10)
        if done % step == 0 or done == total:
            logger.info(f"{done}/{total} trials")

    def _aggregate(self, outcomes: List[TrialOutcome], ensemble: str, dims: BipartiteDims,
                   header: ReportHeader) -> CampaignReport:
        tallies: Dict[str, CriterionTally] = {name.value: CriterionTally() for name in CriterionName}
        violations = []
        negative_min = None
        for outcome in outcomes:
            for name, holds, margin in outcome.margins:
                tally = tallies[name]
                if holds:
                    tally.holds += 1
                else:
                    tally.fails += 1
                tally.min_margin = _min_or_none(tally.min_margin, margin)
            violations.extend(TrialViolation(trial=outcome.trial, arrow=arrow) for arrow in outcome.violations)
            negative_min = _min_or_none(negative_min, outcome.negative_margin)

        return CampaignReport(
            header=header,
            ensemble=ensemble,
            dims=dims.as_list(),
            trials=len(outcomes),
            tallies=tallies,
            consistency_violations=violations,
            full_rank_trials=sum(outcome.full_rank for outcome in outcomes),
            pure_state_exceptions=[outcome.trial for outcome in outcomes if outcome.pure_exception],
            negative_alpha_min_margin=negative_min,
        )


campaign_service = CampaignService()
