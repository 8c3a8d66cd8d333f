import json
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from errors import BadSpec, InstanceFormatError
from grid_core import make_grid
from models import GU1, GUV1, GUV2, Certificate, Grid, Outmap, Point, Subgrid
from schemas import (
    AnswerSchema,
    CertificateSchema,
    CertificateTypeEnum,
    GeneratorSpecSchema,
    GeneratorTypeEnum,
    GridSchema,
    InstanceSchema,
    ManifestSchema,
    OutmapSchema,
    TableInstanceSchema,
)
from ufeopl import UF1, UFV1, UFV2, UfeoplAnswer, UfeoplInstance
from uso_lab import (
    ExplicitTable,
    GeneratorSpec,
    InconsistentRandom,
    Mutated,
    ProductUSO,
    RandomOrientation,
    generate,
)

logger = logging.getLogger(__name__)


@dataclass
class LoadedInstance:
    grid: Grid
    sigma: Outmap
    schema: InstanceSchema


def parse_blocks(text: str) -> List[int]:
    """Parse comma-separated block sizes such as "2,2,3"."""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise BadSpec(f"block sizes must be comma-separated integers, got {text!r}")


def point_key(p: Sequence[int]) -> str:
    return ",".join(str(c) for c in p)


def parse_point_key(key: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in key.split(","))
    except ValueError:
        raise BadSpec(f"invalid point key {key!r}")


def _to_canonical(grid: Grid, p: Sequence[int]) -> Point:
    return tuple(grid.canonical_label(c) for c in p)


def _to_original(grid: Grid, p: Sequence[int]) -> List[int]:
    return [grid.original_label(c) for c in p]


def validate_table_entry(grid: Grid, key: str, directions: List[int]) -> Tuple[bool, Optional[str]]:
    """Validate one outmap table row given in the instance's own labels."""
    try:
        p = _to_canonical(grid, parse_point_key(key))
    except BadSpec as e:
        return False, e.detail
    if not grid.is_point(p):
        return False, f"{key} is not a point of the grid"
    for k in directions:
        if not 1 <= k <= grid.n:
            return False, f"direction {k} at {key} is outside 1..{grid.n}"
    return True, None


def table_from_schema(grid: Grid, raw: Dict[str, List[int]]) -> Dict[Point, FrozenSet[int]]:
    errors = []
    table = {}
    for key, directions in sorted(raw.items()):
        ok, error = validate_table_entry(grid, key, directions)
        if not ok:
            errors.append(error)
            continue
        table[_to_canonical(grid, parse_point_key(key))] = frozenset(grid.canonical_label(k) for k in directions)
    missing = [p for p in grid.points() if p not in table]
    if missing:
        errors.append(f"{len(missing)} points have no table entry, first {point_key(_to_original(grid, missing[0]))}")
    if errors:
        raise InstanceFormatError("; ".join(errors))
    return table


def generator_from_schema(grid: Grid, schema: GeneratorSpecSchema) -> GeneratorSpec:
    if schema.type == GeneratorTypeEnum.product:
        if schema.orders is None:
            raise BadSpec("product generator needs orders")
        return ProductUSO(tuple(tuple(grid.canonical_label(k) for k in order) for order in schema.orders))
    if schema.type in (GeneratorTypeEnum.random, GeneratorTypeEnum.inconsistent):
        if schema.seed is None:
            raise BadSpec(f"{schema.type.value} generator needs a seed")
        cls = RandomOrientation if schema.type == GeneratorTypeEnum.random else InconsistentRandom
        return cls(schema.seed)
    if schema.type == GeneratorTypeEnum.mutated:
        if schema.base is None:
            raise BadSpec("mutated generator needs a base")
        edges = []
        for edge in schema.flipped_edges or []:
            if len(edge) != 2:
                raise BadSpec(f"an edge is a pair of points, got {edge}")
            edges.append((_to_canonical(grid, edge[0]), _to_canonical(grid, edge[1])))
        return Mutated(generator_from_schema(grid, schema.base), tuple(edges))
    if schema.type == GeneratorTypeEnum.table:
        if schema.table is None:
            raise BadSpec("table generator needs a table")
        return ExplicitTable.of(table_from_schema(grid, schema.table))
    raise BadSpec(f"unknown generator type {schema.type}")


def generator_to_schema(grid: Grid, spec: GeneratorSpec) -> GeneratorSpecSchema:
    if isinstance(spec, ProductUSO):
        return GeneratorSpecSchema(
            type=GeneratorTypeEnum.product, orders=[_to_original(grid, order) for order in spec.orders]
        )
    if isinstance(spec, RandomOrientation):
        return GeneratorSpecSchema(type=GeneratorTypeEnum.random, seed=spec.seed)
    if isinstance(spec, InconsistentRandom):
        return GeneratorSpecSchema(type=GeneratorTypeEnum.inconsistent, seed=spec.seed)
    if isinstance(spec, Mutated):
        return GeneratorSpecSchema(
            type=GeneratorTypeEnum.mutated,
            base=generator_to_schema(grid, spec.base),
            flipped_edges=[[_to_original(grid, p), _to_original(grid, q)] for p, q in spec.flipped_edges],
        )
    if isinstance(spec, ExplicitTable):
        return GeneratorSpecSchema(type=GeneratorTypeEnum.table, table=table_to_schema(grid, dict(spec.table)))
    raise BadSpec(f"cannot serialize generator {spec!r}")


def table_to_schema(grid: Grid, table: Dict[Point, FrozenSet[int]]) -> Dict[str, List[int]]:
    return {
        point_key(_to_original(grid, p)): sorted(grid.original_label(k) for k in table[p])
        for p in sorted(table)
    }


def grid_to_schema(grid: Grid) -> GridSchema:
    return GridSchema(blocks=[_to_original(grid, block) for block in grid.blocks])


def outmap_to_schema(grid: Grid, sigma: Outmap) -> OutmapSchema:
    if sigma.source is not None and not isinstance(sigma.source, ExplicitTable):
        return OutmapSchema(generator=generator_to_schema(grid, sigma.source))
    return OutmapSchema(table=table_to_schema(grid, sigma.table()))


def instance_to_schema(grid: Grid, sigma: Outmap) -> InstanceSchema:
    return InstanceSchema(grid=grid_to_schema(grid), outmap=outmap_to_schema(grid, sigma))


def instance_from_schema(schema: InstanceSchema) -> LoadedInstance:
    grid = make_grid(schema.grid.blocks)
    if schema.outmap.generator is not None and schema.outmap.table is not None:
        raise InstanceFormatError("outmap must be either a table or a generator, not both")
    if schema.outmap.generator is not None:
        sigma = generate(grid, generator_from_schema(grid, schema.outmap.generator))
    elif schema.outmap.table is not None:
        table = table_from_schema(grid, schema.outmap.table)
        sigma = Outmap.from_table(grid, table, source=ExplicitTable.of(table))
    else:
        raise InstanceFormatError("outmap needs a table or a generator")
    return LoadedInstance(grid, sigma, schema)


def _read_json(path: str) -> str:
    try:
        with open(path) as f:
            return f.read()
    except OSError as e:
        raise InstanceFormatError(f"cannot read {path}: {e.strerror}")


def load_instance(path: str) -> LoadedInstance:
    try:
        schema = InstanceSchema.model_validate_json(_read_json(path))
    except ValidationError as e:
        raise InstanceFormatError(f"{path}: {e.error_count()} validation errors, first: {e.errors()[0]['msg']}")
    return instance_from_schema(schema)


def write_json(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        print(text)
        return
    with open(path, "w") as f:
        f.write(text + "\n")


# Certificates

def certificate_to_schema(grid: Grid, cert: Certificate) -> CertificateSchema:
    if isinstance(cert, GUV2):
        return CertificateSchema(
            type=CertificateTypeEnum.GUV2,
            point=_to_original(grid, cert.p),
            other=_to_original(grid, cert.q),
            subgrid=[_to_original(grid, r) for r in cert.sub.restrictions],
        )
    return CertificateSchema(type=CertificateTypeEnum(cert.type.value), point=_to_original(grid, cert.p))


def certificate_from_schema(grid: Grid, schema: CertificateSchema) -> Certificate:
    p = _to_canonical(grid, schema.point)
    if schema.type == CertificateTypeEnum.GU1:
        return GU1(p)
    if schema.type == CertificateTypeEnum.GUV1:
        return GUV1(p)
    if schema.other is None or schema.subgrid is None:
        raise InstanceFormatError("GUV2 certificates need 'other' and 'subgrid'")
    sub = Subgrid(grid, tuple(tuple(grid.canonical_label(k) for k in r) for r in schema.subgrid))
    return GUV2(sub, p, _to_canonical(grid, schema.other))


def load_certificate(path: str, grid: Grid) -> Certificate:
    try:
        schema = CertificateSchema.model_validate_json(_read_json(path))
    except ValidationError as e:
        raise InstanceFormatError(f"{path}: {e.errors()[0]['msg']}")
    return certificate_from_schema(grid, schema)


# Reduced instances

def _parse_node(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise InstanceFormatError(f"invalid node {text!r}")


def load_table_instance(path: str) -> UfeoplInstance:
    try:
        schema = TableInstanceSchema.model_validate_json(_read_json(path))
    except ValidationError as e:
        raise InstanceFormatError(f"{path}: {e.errors()[0]['msg']}")
    return UfeoplInstance.from_tables(schema.d_bits, schema.m_bits, [_parse_node(s) for s in schema.succ], schema.cost)


def table_instance_to_schema(inst: UfeoplInstance) -> TableInstanceSchema:
    size = 1 << inst.d_bits
    return TableInstanceSchema(
        d_bits=inst.d_bits,
        m_bits=inst.m_bits,
        succ=[format(inst.succ(v), "#0{}b".format(inst.d_bits + 2)) for v in range(size)],
        cost=[inst.cost(v) for v in range(size)],
    )


def manifest_to_schema(grid: Grid, sigma: Outmap, inst: UfeoplInstance) -> ManifestSchema:
    return ManifestSchema(
        d_bits=inst.d_bits,
        m_bits=inst.m_bits,
        grid=grid_to_schema(grid),
        outmap=outmap_to_schema(grid, sigma),
        start_mask=format(inst.start_mask, "#x"),
    )


def answer_to_schema(inst: UfeoplInstance, ans: UfeoplAnswer) -> AnswerSchema:
    if isinstance(ans, UF1):
        return AnswerSchema(tag=ans.tag.value, nodes=[inst.hex(ans.v)])
    if isinstance(ans, UFV1):
        return AnswerSchema(tag=ans.tag.value, nodes=[inst.hex(ans.v), inst.hex(ans.w)], subtype=ans.subtype)
    return AnswerSchema(tag=ans.tag.value, nodes=[inst.hex(ans.v), inst.hex(ans.w)])


def dumps(model) -> str:
    return json.dumps(model.model_dump(mode="json", by_alias=True, exclude_none=True), sort_keys=True)
