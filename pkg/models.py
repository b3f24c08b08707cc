"""Serialisable results and reports.

Field names are part of the JSON surface; keep them stable.
"""

import math
from enum import Enum
from typing import Any, ClassVar, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from config import TOOL_NAME, __version__

ComplexRows = List[List[List[float]]]  # rows of [re, im] pairs


class EntropyKind(str, Enum):
    renyi = "renyi"
    tsallis = "tsallis"
    von_neumann = "von_neumann"


class Marker(str, Enum):
    undefined = "undefined"
    not_full_rank = "not_full_rank"
    negative_infinity = "negative_infinity"
    limit = "limit"


class Sign(str, Enum):
    negative = "negative"
    zero = "zero"
    positive = "positive"

    @property
    def nonnegative(self) -> bool:
        return self is not Sign.negative


class EntropyResult(BaseModel):
    alpha: str
    kind: EntropyKind
    conditional: Optional[Literal["A", "B"]] = None
    value: Optional[float] = None
    marker: Optional[Marker] = None

    @model_validator(mode="after")
    def _finite_or_marked(self):
        if self.value is None and self.marker is None:
            raise ValueError("an entropy without a value must carry a marker")
        if self.value is not None and not math.isfinite(self.value):
            raise ValueError("entropy values must be finite; use a marker instead")
        return self

    @property
    def defined(self) -> bool:
        """A direct evaluation: finite value and no marker."""
        return self.value is not None and self.marker is None


class SignResult(BaseModel):
    alpha: str
    side: Literal["A", "B"]
    sign: Sign
    margin: float


class SweepRow(BaseModel):
    alpha: str
    side: Literal["A", "B"]
    renyi: Optional[float] = None
    renyi_reduced: Optional[float] = None
    tsallis: Optional[float] = None
    tsallis_reduced: Optional[float] = None
    conditional_renyi: Optional[float] = None
    conditional_tsallis: Optional[float] = None
    sign: Optional[Sign] = None
    margin: Optional[float] = None
    proven_range: bool = False
    marker: Optional[Marker] = None


class SweepTable(BaseModel):
    rows: List[SweepRow]
    min_margin: Optional[float] = None
    detected: bool = False
    witness: Optional[str] = None


class CriterionName(str, Enum):
    ppt = "ppt"
    reduction_A = "reduction_A"
    reduction_B = "reduction_B"
    rank = "rank"
    majorization_A = "majorization_A"
    majorization_B = "majorization_B"
    entropic = "entropic"


class CriterionVerdict(BaseModel):
    criterion: CriterionName
    holds: bool
    margin: float
    tolerance: float = 0.0
    witness: Optional[str] = None
    notes: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _consistent(self):
        if self.holds != (self.margin >= -self.tolerance):
            raise ValueError(f"{self.criterion.value}: holds={self.holds} disagrees with margin {self.margin!r}")
        if not self.holds and not self.witness:
            raise ValueError(f"{self.criterion.value}: a failing verdict needs a witness")
        return self


class EnsembleModel(BaseModel):
    weights: List[float]
    factors: List[List[ComplexRows]]


class ChainReport(BaseModel):
    verdicts: List[CriterionVerdict]
    full_rank: bool
    certificate: Optional[EnsembleModel] = None
    consistency_violations: List[str] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    def verdict(self, name: CriterionName) -> CriterionVerdict:
        return next(v for v in self.verdicts if v.criterion == CriterionName(name))


class RunConfig(BaseModel):
    seed: int = 0
    alpha_grid: List[str] = Field(default_factory=list)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    output_format: Literal["json", "csv"] = "json"
    output_path: Optional[str] = None

    @field_validator("seed")
    @classmethod
    def _unsigned(cls, value: int) -> int:
        if not 0 <= value < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return value


class ReportHeader(BaseModel):
    tool: str = TOOL_NAME
    version: str = __version__
    log_base: str = "natural"
    command: str
    config: RunConfig


class Report(BaseModel):
    header: ReportHeader

    # fields already flattened into table_rows()
    table_fields: ClassVar[Dict[str, Any]] = {}

    def table_rows(self) -> List[Dict[str, Any]]:
        """Flat rows for CSV output."""
        raise NotImplementedError

    def summary(self) -> Dict[str, Any]:
        """Everything outside the header and the table, for the CSV preamble."""
        return self.model_dump(mode="json", exclude={"header": True, **self.table_fields})


def _verdict_row(verdict: CriterionVerdict, **extra) -> Dict[str, Any]:
    return {
        **extra,
        "criterion": verdict.criterion.value,
        "holds": verdict.holds,
        "margin": verdict.margin,
        "tolerance": verdict.tolerance,
        "witness": verdict.witness,
        "notes": "; ".join(verdict.notes),
    }


class AnalysisReport(Report):
    dims: List[int]
    chain: ChainReport
    sweep: SweepTable

    table_fields: ClassVar[Dict[str, Any]] = {"chain": {"verdicts": True}, "sweep": {"rows": True}}

    def table_rows(self) -> List[Dict[str, Any]]:
        rows = [_verdict_row(v, section="verdict") for v in self.chain.verdicts]
        rows += [{"section": "sweep", **row.model_dump(mode="json")} for row in self.sweep.rows]
        return rows


class WernerRow(BaseModel):
    p: float
    margins: Dict[str, float]
    holds: Dict[str, bool]
    entropic_min_margin: Optional[float] = None
    consistency_violations: List[str] = Field(default_factory=list)


class WernerSweepReport(Report):
    d: int
    rows: List[WernerRow]
    ppt_boundary: float
    boundary_tolerance: float

    table_fields: ClassVar[Dict[str, Any]] = {"rows": True}

    def table_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for row in self.rows:
            flat: Dict[str, Any] = {"p": row.p}
            flat.update({f"{name}_margin": value for name, value in row.margins.items()})
            flat.update({f"{name}_holds": value for name, value in row.holds.items()})
            flat["entropic_min_margin"] = row.entropic_min_margin
            flat["consistency_violations"] = ";".join(row.consistency_violations)
            rows.append(flat)
        return rows


class IsospectralReport(Report):
    d: int
    p: float
    werner_spectrum: List[float]
    counterpart_spectrum: List[float]
    spectrum_distance: float
    reduction_distances: Dict[str, float]
    werner_ppt: CriterionVerdict
    counterpart_ppt: CriterionVerdict
    certificate: EnsembleModel
    certificate_distance: float
    emitted_files: List[str] = Field(default_factory=list)

    table_fields: ClassVar[Dict[str, Any]] = {"werner_spectrum": True, "counterpart_spectrum": True}

    def table_rows(self) -> List[Dict[str, Any]]:
        return [
            {"index": i, "werner": w, "counterpart": c}
            for i, (w, c) in enumerate(zip(self.werner_spectrum, self.counterpart_spectrum))
        ]


class CriterionTally(BaseModel):
    holds: int = 0
    fails: int = 0
    min_margin: Optional[float] = None


class TrialViolation(BaseModel):
    trial: int
    arrow: str


class CampaignReport(Report):
    ensemble: str
    dims: List[int]
    trials: int
    tallies: Dict[str, CriterionTally]
    consistency_violations: List[TrialViolation]
    full_rank_trials: int
    pure_state_exceptions: List[int] = Field(default_factory=list)
    negative_alpha_min_margin: Optional[float] = None

    table_fields: ClassVar[Dict[str, Any]] = {"tallies": True}

    def table_rows(self) -> List[Dict[str, Any]]:
        return [
            {"criterion": name, "holds": t.holds, "fails": t.fails, "min_margin": t.min_margin}
            for name, t in self.tallies.items()
        ]


class EntropyRow(BaseModel):
    alpha: str
    renyi: EntropyResult
    tsallis: EntropyResult
    conditional_renyi_A: EntropyResult
    conditional_renyi_B: EntropyResult
    conditional_tsallis_A: EntropyResult
    conditional_tsallis_B: EntropyResult
    sign_A: Optional[SignResult] = None
    sign_B: Optional[SignResult] = None


class EntropyTableReport(Report):
    source: str
    dims: List[int]
    rows: List[EntropyRow]

    table_fields: ClassVar[Dict[str, Any]] = {"rows": True}

    def table_rows(self) -> List[Dict[str, Any]]:
        flat_rows = []
        for row in self.rows:
            flat: Dict[str, Any] = {"alpha": row.alpha}
            for name in ("renyi", "tsallis", "conditional_renyi_A", "conditional_renyi_B",
                         "conditional_tsallis_A", "conditional_tsallis_B"):
                result: EntropyResult = getattr(row, name)
                flat[name] = result.value
                flat[f"{name}_marker"] = result.marker.value if result.marker else None
            for side in ("A", "B"):
                sign: Optional[SignResult] = getattr(row, f"sign_{side}")
                flat[f"sign_{side}"] = sign.sign.value if sign else None
                flat[f"margin_{side}"] = sign.margin if sign else None
            flat_rows.append(flat)
        return flat_rows
