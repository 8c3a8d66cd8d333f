from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class CertificateTypeEnum(str, Enum):
    GU1 = "GU1"
    GUV1 = "GUV1"
    GUV2 = "GUV2"


class GeneratorTypeEnum(str, Enum):
    product = "product"
    random = "random"
    mutated = "mutated"
    table = "table"
    inconsistent = "inconsistent"


class AnswerTagEnum(str, Enum):
    UF1 = "UF1"
    UFV1 = "UFV1"
    UFV2 = "UFV2"


class GridSchema(BaseModel):
    blocks: List[List[int]] = Field(..., min_length=1)

    class Config:
        extra = "forbid"


class CertificateSchema(BaseModel):
    type: CertificateTypeEnum
    point: List[int]
    # GUV2 only
    other: Optional[List[int]] = None
    subgrid: Optional[List[List[int]]] = None

    class Config:
        extra = "forbid"


class GeneratorSpecSchema(BaseModel):
    type: GeneratorTypeEnum
    orders: Optional[List[List[int]]] = None
    seed: Optional[int] = None
    base: Optional["GeneratorSpecSchema"] = None
    flipped_edges: Optional[List[List[List[int]]]] = None
    # point key "1,3,5" -> outgoing directions
    table: Optional[Dict[str, List[int]]] = None

    class Config:
        extra = "forbid"


GeneratorSpecSchema.model_rebuild()


class OutmapSchema(BaseModel):
    table: Optional[Dict[str, List[int]]] = None
    generator: Optional[GeneratorSpecSchema] = None

    class Config:
        extra = "forbid"


class InstanceSchema(BaseModel):
    grid: GridSchema
    outmap: OutmapSchema

    class Config:
        extra = "forbid"


class TableInstanceSchema(BaseModel):
    d_bits: int = Field(..., alias="dBits", gt=0, le=24)
    m_bits: int = Field(..., alias="mBits", gt=0)
    # "0b..." strings or plain integers, index = node value
    succ: List[str]
    cost: List[int]

    class Config:
        extra = "forbid"
        populate_by_name = True


class ManifestSchema(BaseModel):
    d_bits: int = Field(..., alias="dBits")
    m_bits: int = Field(..., alias="mBits")
    grid: GridSchema
    outmap: OutmapSchema
    start_mask: str = Field(..., alias="startMask")

    class Config:
        populate_by_name = True


class NodeDumpSchema(BaseModel):
    node: str
    succ: str
    cost: str


class AnswerSchema(BaseModel):
    tag: AnswerTagEnum
    nodes: List[str] = Field(..., min_length=1, max_length=2)
    subtype: Optional[str] = Field(None, pattern="^[ab]$")

    class Config:
        extra = "forbid"


class SolveReport(BaseModel):
    path: str
    certificate: CertificateSchema
    verified: bool
    outmap_calls: int
    answer: Optional[AnswerSchema] = None
    walk_steps: Optional[int] = None


class TraceRecord(BaseModel):
    depth: int
    direction: int
    point: List[int]
    action: str
    frame: List[List[int]]


class SweepRecord(BaseModel):
    index: int
    mask: int
    uso: bool
    sink: Optional[List[int]] = None
    violation: Optional[CertificateSchema] = None
    direct: Optional[CertificateSchema] = None
    via_eopl: Optional[CertificateSchema] = None
    walk_steps: int
    failures: List[str] = []


class SweepSummary(BaseModel):
    blocks: List[List[int]]
    orientations: int
    sampled: bool
    seed: Optional[int] = None
    uso_count: int
    violation_count: int
    failures: Dict[str, int] = {}

    @property
    def ok(self) -> bool:
        return not self.failures
