from __future__ import annotations

from enum import Enum
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

FORMAT_VERSION = 1


class JunctionKind(str, Enum):
    SLACK = "slack"
    NON_SLACK = "non_slack"


class EdgeKind(str, Enum):
    PIPE = "pipe"
    COMPRESSOR = "compressor"
    PASS_THROUGH = "pass_through"


class PassThroughKind(str, Enum):
    SHORT_PIPE = "short_pipe"
    VALVE = "valve"
    REGULATOR = "regulator"
    RESISTOR = "resistor"
    LOSS_RESISTOR = "loss_resistor"


class EosKind(str, Enum):
    IDEAL = "ideal"
    CNGA = "cnga"


class Classification(str, Enum):
    E1_CONVERGED_IN_DOMAIN = "converged_in_domain"
    E2_CONVERGED_OUT_OF_DOMAIN = "converged_out_of_domain"
    E3_FAILED = "failed"


class Feasibility(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    INDETERMINATE = "indeterminate"


class CertificateReason(str, Enum):
    NEGATIVE_COMPRESSOR_FLOW = "negative_compressor_flow"
    NEGATIVE_POTENTIAL = "negative_potential"


class Units(str, Enum):
    DIMENSIONLESS = "dimensionless"
    PHYSICAL = "physical"


class RunMode(str, Enum):
    SOLVE = "solve"
    BATCH = "batch"
    COMPARE_EOS = "compare-eos"
    COMPARE_SCALING = "compare-scaling"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


# Instance file schema. Unknown keys are rejected everywhere.


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, allow_inf_nan=False)


class NodeDocument(_Strict):
    id: str
    slack_pressure_pa: Optional[float] = Field(default=None, gt=0)
    injection_kg_s: Optional[float] = None


class PipeDocument(_Strict):
    id: str
    from_: str = Field(..., alias="from")
    to: str
    length_m: float = Field(..., gt=0)
    diameter_m: float = Field(..., gt=0)
    friction_factor: float = Field(..., gt=0)


class CompressorDocument(_Strict):
    id: str
    from_: str = Field(..., alias="from")
    to: str
    ratio: Optional[float] = Field(default=None, ge=1)


class PassThroughDocument(_Strict):
    id: str
    from_: str = Field(..., alias="from")
    to: str
    kind: PassThroughKind
    ratio: float = Field(default=1.0, gt=0)
    open: Optional[bool] = None


class EosDocument(_Strict):
    kind: EosKind = EosKind.IDEAL
    temperature_k: float = Field(default=288.706, gt=0)
    specific_gravity: float = Field(default=0.6, gt=0)
    gas_constant_j_per_kg_k: float = Field(default=518.28, gt=0)
    atmospheric_pressure_pa: float = Field(default=101350.0, gt=0)


class InstanceDocument(_Strict):
    units: Literal["si"]
    nodes: List[NodeDocument]
    pipes: List[PipeDocument] = Field(default_factory=list)
    compressors: List[CompressorDocument] = Field(default_factory=list)
    pass_throughs: List[PassThroughDocument] = Field(default_factory=list)
    eos: EosDocument = Field(default_factory=EosDocument)


# Reports and solution files.


class CertificateDocument(BaseModel):
    element_id: str
    reason: CertificateReason


class InstanceReport(BaseModel):
    instance_id: str
    classification: Classification
    feasibility: Feasibility
    certificate: List[CertificateDocument] = Field(default_factory=list)
    iterations: int
    residual_final: Optional[float] = None
    wall_time_s: float
    max_rel_pressure_dev: Optional[float] = None
    max_rel_density_dev: Optional[float] = None
    diagnostic: Optional[str] = None


class NodeResult(BaseModel):
    id: str
    pressure_pa: float
    injection_kg_s: float
    density_kg_m3: float


class EdgeResult(BaseModel):
    id: str
    kind: EdgeKind
    mass_flow_kg_s: float


class SolutionDocument(BaseModel):
    format_version: int = FORMAT_VERSION
    units: Literal["si"] = "si"
    eos: EosKind
    classification: Classification
    feasibility: Feasibility
    nodes: List[NodeResult]
    edges: List[EdgeResult]


class CheckDocument(BaseModel):
    passed: bool
    offenders: List[str] = Field(default_factory=list)


class ValidationReportDocument(BaseModel):
    ok: bool
    checks: Dict[str, CheckDocument]
