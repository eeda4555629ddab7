"""
This module defines the Pydantic data models for solver reports.

Every verdict, certificate and report that leaves a module is one of these
models, so the CLI can dump it to JSON without further conversion.
"""

import enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field

# ---------------------------------------------------------------- sequences


class CauchyVerdict(BaseModel):
    """Cauchy evidence for a finite prefix of a sequence."""

    eps: float = Field(..., description="Closeness scale")
    cauchy: bool = Field(..., description="True for CauchyAt, False for NotCauchyAt")
    rank: Optional[int] = Field(
        None, description="Least rank j with all recorded pairs beyond j within eps"
    )
    witness: Optional[Tuple[int, int]] = Field(
        None, description="Lexicographically least violating pair (m, n)"
    )
    prefix_length: int = Field(..., description="Number of recorded points")
    prefix_only: bool = Field(
        True, description="The verdict covers the recorded prefix only"
    )


class SemiCauchyVerdict(BaseModel):
    """Semi-Cauchy evidence: consecutive distances fall and stay below eps."""

    eps: float = Field(..., description="Closeness scale")
    semi_cauchy: bool = Field(..., description="Whether the rho tail stays at or below eps")
    rank: Optional[int] = Field(
        None, description="First rank from which every recorded rho is strictly below eps"
    )
    prefix_length: int = Field(..., description="Number of recorded points")
    prefix_only: bool = Field(True, description="Prefix evidence only")


# ---------------------------------------------------------------- wardowski


class AxiomCheck(BaseModel):
    """Outcome of one axiom or lemma check."""

    name: str = Field(..., description="Axiom label, e.g. b01")
    passed: bool = Field(..., description="Whether every tested instance held")
    witness: Optional[List[float]] = Field(
        None, description="Arguments of the first failing instance"
    )
    detail: str = Field("", description="Human-readable explanation")


class AxiomReport(BaseModel):
    """Per-axiom results for one Wardowski function."""

    function: str = Field(..., description="Name of the checked function")
    b01: AxiomCheck
    monotone: AxiomCheck = Field(..., description="b02 (strict) or b04 (non-strict)")
    b03: AxiomCheck
    order_reflection: AxiomCheck = Field(..., description="F(t) < F(s) implies t < s on grid pairs")
    declared_jumps: AxiomCheck = Field(
        ..., description="Measured jumps agree with the declared discontinuities"
    )

    @property
    def semi_wardowski(self) -> bool:
        return self.b01.passed and self.monotone.passed

    @property
    def wardowski(self) -> bool:
        return self.semi_wardowski and self.b03.passed

    @property
    def all_passed(self) -> bool:
        return self.wardowski and self.order_reflection.passed and self.declared_jumps.passed


class RegularityStatus(str, enum.Enum):
    REGULAR = "regular"
    NOT_REGULAR = "not_regular"
    INCONCLUSIVE = "inconclusive"


class RegularityVerdict(BaseModel):
    """Numerical classification of t^k F(t) -> 0 as t -> 0+."""

    k: float = Field(..., description="Regularity exponent in (0, 1)")
    status: RegularityStatus
    evidence: List[Tuple[float, float]] = Field(
        default_factory=list, description="Samples (t, t^k F(t))"
    )


class Lemma2Result(BaseModel):
    """Prefix check of F(t_n) -> -inf implies t_n -> 0."""

    holds: bool = Field(..., description="Whether the implication held")
    premise: bool = Field(..., description="Whether F(t_n) passed every bound")
    witness_eps: Optional[float] = Field(
        None, description="First eps the tail of t_n did not fall below"
    )


# --------------------------------------------------------------- comparison


class ProvenanceKind(str, enum.Enum):
    LINEAR = "linear"
    DERIVED = "derived"
    USER = "user"


class AdmissibilityStatus(str, enum.Enum):
    VERIFIED = "verified"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


class MatkowskiVerdict(BaseModel):
    """Evidence for phi^n(t) -> 0 at one grid point."""

    t: float
    status: AdmissibilityStatus
    steps: Optional[int] = Field(
        None, description="Iterations needed to pass the whole eps ladder"
    )
    last_value: float = Field(..., description="Last computed iterate")
    witness: Optional[float] = Field(
        None, description="Positive s with phi(s) >= s, when refuted"
    )


class SeriesStatus(str, enum.Enum):
    CONVERGED = "converged"
    DIVERGING = "diverging"
    INCONCLUSIVE = "inconclusive"


class SeriesResult(BaseModel):
    """Partial sum of sum_n phi^n(t)."""

    value: float = Field(..., description="Partial sum including the last term")
    truncated_at: int = Field(..., description="Index of the last summed term")
    tail_estimate: float = Field(
        0.0, description="Geometric bound on the omitted terms"
    )
    ratio: Optional[float] = Field(None, description="Detected geometric ratio")
    status: SeriesStatus

    @property
    def bound(self) -> float:
        return self.value + self.tail_estimate


class PhiDerivation(BaseModel):
    """One evaluation of the comparison function derived from (a, F)."""

    t: float
    phi: float
    self_inequality: bool = Field(
        ..., description="Whether a + F(phi(t)) <= F(t) is certified at the sup"
    )
    residual: float = Field(
        ..., description="F(t) - a - F(phi(t)); -inf-safe, inf when phi(t) = 0"
    )


class LadderCheck(BaseModel):
    """Step-wise and cumulative decrease of F along an orbit."""

    checked: int = Field(..., description="Number of consecutive pairs checked")
    step_holds: bool = Field(..., description="a + F(u_{n+1}) <= F(u_n) for all n")
    cumulative_holds: bool = Field(..., description="F(u_n) <= F(u_0) - n a for all n")
    first_violation: Optional[int] = Field(None, description="First failing n")


# ------------------------------------------------------------------- solver


class RunStatus(str, enum.Enum):
    FIXED_POINT_HIT = "fixed_point_hit"
    CONVERGED = "converged"
    BUDGET_EXHAUSTED = "budget_exhausted"
    DIVERGENCE_SUSPECTED = "divergence_suspected"


class HyersUlamCertificate(BaseModel):
    kind: Literal["hyers_ulam"] = "hyers_ulam"
    residual: float = Field(..., description="d(x, Tx)")
    bound: float = Field(..., description="Phi(d(x, Tx)) >= d(x, z)")


class TailBoundCertificate(BaseModel):
    kind: Literal["tail_bound"] = "tail_bound"
    k: float
    beta: float
    a: float
    from_rank: int = Field(..., description="Rank i beyond which the bound is certified")
    checked_until: int = Field(..., description="Last recorded index checked")
    holds_on_prefix: bool = Field(
        ..., description="rho_n <= (beta/(a n))^(1/k) for every recorded n >= i"
    )
    tail_sum_bound: float = Field(
        ..., description="Bound on sum_{n >= i} rho_n by integral comparison"
    )


class TeleSumCertificate(BaseModel):
    kind: Literal["tele_sum"] = "tele_sum"
    partial: float = Field(..., description="Sum of recorded consecutive distances")
    tail_estimate: Optional[float] = Field(
        None, description="Geometric bound on the unrecorded tail"
    )
    ratio: Optional[float] = Field(None, description="Detected ratio bound r < 1")


Certificate = Annotated[
    Union[HyersUlamCertificate, TailBoundCertificate, TeleSumCertificate],
    Field(discriminator="kind"),
]


class RunSummary(BaseModel):
    """JSON form of a Picard run."""

    start: Any
    status: RunStatus
    status_index: Optional[int] = Field(
        None, description="Index i of a fixed-point hit (rho_i = 0)"
    )
    limit: Any = Field(None, description="Last iterate when converged")
    eps: float
    iterations: int
    rho: List[float]
    certificates: List[Certificate] = Field(default_factory=list)


class OperatorVerdict(BaseModel):
    """Desk-scale Picard classification from several starts."""

    picard: bool
    strong: bool
    globally_strong: bool
    tele: bool
    limits: List[Any]
    statuses: List[RunStatus]

    @property
    def label(self) -> str:
        if not self.picard:
            return "no-picard-evidence"
        parts = []
        if self.globally_strong:
            parts.append("globally-strong")
        elif self.strong:
            parts.append("strong")
        parts.append("tele-picard" if self.tele else "picard")
        return "-".join(parts) + "-evidence"


# ----------------------------------------------------------------- verifier


class ConditionKind(str, enum.Enum):
    AF = "aF"
    PHI = "phi"
    STRICT = "strict"
    NONEXPANSIVE = "nonexpansive"


class CheckMode(BaseModel):
    """Exhaustive pair scan, or seeded sampling."""

    kind: Literal["exhaustive", "sampled"] = "exhaustive"
    count: Optional[int] = Field(None, description="Sampled pair count")
    seed: Optional[int] = Field(None, description="Generator seed")
    box: Optional[Tuple[float, float]] = Field(
        None, description="Coordinate box for sampling unbounded spaces"
    )

    @classmethod
    def exhaustive(cls) -> "CheckMode":
        return cls(kind="exhaustive")

    @classmethod
    def sampled(
        cls, count: int, seed: int, box: Optional[Tuple[float, float]] = None
    ) -> "CheckMode":
        return cls(kind="sampled", count=count, seed=seed, box=box)

    @classmethod
    def parse(cls, text: str) -> "CheckMode":
        """Parse `exhaustive` or `sampled:N:seed`."""
        if text == "exhaustive":
            return cls.exhaustive()
        parts = text.split(":")
        if len(parts) == 3 and parts[0] == "sampled":
            return cls.sampled(int(parts[1]), int(parts[2]))
        raise ValueError(f"mode must be 'exhaustive' or 'sampled:N:seed', got {text!r}")


class PairWitness(BaseModel):
    x: Any
    y: Any
    lhs: float
    rhs: float


class ContractionReport(BaseModel):
    condition: ConditionKind
    a: Optional[float] = Field(None, description="Constant of an aF condition")
    mode: CheckMode
    holds: bool
    witness: Optional[PairWitness] = None
    pairs_checked: int


class WitnessExtraction(BaseModel):
    """Rank sequences m(j), n(j) for a semi-Cauchy, non-Cauchy prefix."""

    eta: float
    j_eta: Optional[int] = Field(
        None, description="Least rank with rho_i < eta for every later recorded i"
    )
    m_seq: List[int]
    n_seq: List[int]
    checks: Dict[str, bool] = Field(default_factory=dict)
    trend: Dict[str, float] = Field(
        default_factory=dict, description="Last-quarter deviations from eta"
    )


# ---------------------------------------------------------------------- cli


class ExperimentSummary(BaseModel):
    """Everything a config experiment produced."""

    name: str
    verify: List[ContractionReport] = Field(default_factory=list)
    phi: List[PhiDerivation] = Field(default_factory=list)
    runs: List[RunSummary] = Field(default_factory=list)
    classification: Optional[OperatorVerdict] = None
    classification_label: Optional[str] = None
    error: Optional[str] = None
