"""Pydantic report models: the JSON surface of every check and command.

Exact rationals travel as ``"p/q"`` strings; entropies as floats rounded
to the configured number of decimals on serialization.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_serializer

from .config import get_settings


def round_bits(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    return round(value, get_settings().entropy_decimals) + 0.0


class Report(BaseModel):
    """Base class: floats named in ``_bit_fields`` are rounded on dump."""

    def table_rows(self) -> List[List[str]]:
        rows = []
        for name, value in self.model_dump().items():
            if isinstance(value, (list, dict)):
                continue
            rows.append([name, format_value(value)])
        return rows


def format_value(value) -> str:
    if isinstance(value, float):
        return f"{value + 0.0:.{get_settings().entropy_decimals}f}"
    if value is None:
        return "-"
    return str(value)


class EntropyReport(Report):
    kind: str
    subject: str
    bits: float
    witness: str

    @field_serializer("bits")
    def _bits(self, v: float) -> float:
        return round_bits(v)


class ScanWitness(BaseModel):
    kind: str
    point: Dict[str, str]
    measurement_entropy: float
    mixing_entropy: float
    minimizing_test: str
    minimizing_decomposition: str

    @field_serializer("measurement_entropy", "mixing_entropy")
    def _bits(self, v: float) -> float:
        return round_bits(v)


class MonoentropicityReport(Report):
    system: str
    seed: int
    points_evaluated: int
    max_gap: float
    monoentropic_on_sample: bool
    witnesses: List[ScanWitness] = Field(default_factory=list)

    @field_serializer("max_gap")
    def _bits(self, v: float) -> float:
        return round_bits(v)


class SSAReport(Report):
    """Strong subadditivity for (A, B, C), conditioning on C."""

    subsets: Dict[str, List[str]]
    h_a: float
    h_c: float
    h_ac: float
    h_bc: float
    h_abc: float
    form_a: float = Field(description="I(A:BC) - I(A:C)")
    form_b: float = Field(description="H(A|C) - H(A|BC)")
    form_c: float = Field(description="H(ABC) - H(AC) - H(BC) + H(C)")
    form_d: float = Field(description="I(A:B|C)")
    satisfied_a: bool
    satisfied_b: bool
    satisfied_c: bool
    satisfied_d: bool
    forms_agree: bool

    @property
    def satisfied(self) -> bool:
        return self.satisfied_d

    @field_serializer("h_a", "h_c", "h_ac", "h_bc", "h_abc", "form_a", "form_b", "form_c", "form_d")
    def _bits(self, v: float) -> float:
        return round_bits(v)


class HolevoReport(Report):
    chi: float
    mutual_ab: float
    chi_matches_mutual: bool
    max_product_info: float
    attaining_tests: List[str]
    satisfied: bool

    @field_serializer("chi", "mutual_ab", "max_product_info")
    def _bits(self, v: float) -> float:
        return round_bits(v)


class SignalingReport(Report):
    nonsignaling: bool
    violation: Optional[str] = None


class ChshReport(Report):
    settings: List[List[str]]
    correlators: Dict[str, float]
    value: float
    placements: List[float]

    @field_serializer("value")
    def _bits(self, v: float) -> float:
        return round_bits(v)


class VanDamReport(Report):
    table: Dict[str, Dict[str, str]]
    matches_mechanical_execution: bool
    h_e1_f_b: float
    h_e2_f_b: float
    h_f_b: float
    h_e1_e2_f_b: float
    cmi_e1_e2_given_fb: float

    @field_serializer("h_e1_f_b", "h_e2_f_b", "h_f_b", "h_e1_e2_f_b", "cmi_e1_e2_given_fb")
    def _bits(self, v: float) -> float:
        return round_bits(v)


class ICReport(Report):
    protocol: str
    n_bits: int
    m: int
    per_k: List[float]
    per_k_readout: List[float] = Field(description="I(E_k : X_k) before the guess map")
    success_probability: List[str]
    lhs: float
    satisfied: bool

    @field_serializer("lhs")
    def _bits(self, v: float) -> float:
        return round_bits(v)

    @field_serializer("per_k", "per_k_readout")
    def _bit_lists(self, v: List[float]) -> List[float]:
        return [round_bits(x) for x in v]


class WitnessReport(Report):
    applicable: bool
    reason: Optional[str] = None
    rho: Optional[List[str]] = None
    mixture: List[Dict[str, object]] = Field(default_factory=list)
    s_rho: Optional[float] = None
    mixture_avg: Optional[float] = None
    gap: Optional[float] = None
    case: Optional[str] = None
    trace: Dict[str, object] = Field(default_factory=dict)
    verified: Optional[bool] = None

    @field_serializer("s_rho", "mixture_avg", "gap")
    def _bits(self, v: Optional[float]) -> Optional[float]:
        return round_bits(v)


class CheckResult(BaseModel):
    name: str
    expected: str
    actual: str
    passed: bool


class SuiteReport(Report):
    checks: List[CheckResult] = Field(default_factory=list)
    passed: int = 0
    failed: int = 0

    @property
    def ok(self) -> bool:
        return self.failed == 0
