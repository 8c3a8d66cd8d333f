"""Brute-force oracles for USO properties and generators of valid and invalid instances.

Everything here is exponential in the grid size on purpose; the vertex guard
(USOLAB_GUARD) keeps accidental calls on large grids from running forever.
"""
import logging
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

from config import settings
from errors import BadSpec, GridTooLarge
from models import GUV1, GUV2, Certificate, Grid, Outmap, Point, Subgrid
from grid_core import index_of

logger = logging.getLogger(__name__)

Edge = Tuple[Point, Point]
Table = Dict[Point, FrozenSet[int]]


# Generator specs

@dataclass(frozen=True)
class ProductUSO:
    # one permutation per block; edges point toward the endpoint that comes first
    orders: Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class RandomOrientation:
    seed: int


@dataclass(frozen=True)
class Mutated:
    base: "GeneratorSpec"
    flipped_edges: Tuple[Edge, ...]


@dataclass(frozen=True)
class ExplicitTable:
    table: Tuple[Tuple[Point, FrozenSet[int]], ...]

    @classmethod
    def of(cls, table: Dict[Point, FrozenSet[int]]) -> "ExplicitTable":
        return cls(tuple(sorted((p, frozenset(out)) for p, out in table.items())))


@dataclass(frozen=True)
class InconsistentRandom:
    seed: int


GeneratorSpec = Union[ProductUSO, RandomOrientation, Mutated, ExplicitTable, InconsistentRandom]


@dataclass(frozen=True)
class OrientationTable:
    """Explicit outmap of every point of a small grid."""

    grid: Grid
    outs: Tuple[Tuple[Point, FrozenSet[int]], ...]

    @classmethod
    def from_dict(cls, grid: Grid, table: Dict[Point, FrozenSet[int]]) -> "OrientationTable":
        return cls(grid, tuple(sorted((p, frozenset(table[p])) for p in grid.points())))

    @classmethod
    def from_mask(cls, grid: Grid, mask: int, edges: Optional[List[Tuple[Point, Point, int]]] = None) -> "OrientationTable":
        """Bit e of mask set means edge e (in grid.edges() order) points from its smaller to its larger endpoint."""
        edges = edges if edges is not None else grid.edges()
        table = {p: set() for p in grid.points()}
        for e, (p, q, j) in enumerate(edges):
            if mask >> e & 1:
                table[p].add(q[j])
            else:
                table[q].add(p[j])
        return cls.from_dict(grid, {p: frozenset(out) for p, out in table.items()})

    def as_dict(self) -> Table:
        return dict(self.outs)

    def is_consistent(self) -> bool:
        table = self.as_dict()
        for p, q, j in self.grid.edges():
            if (q[j] in table[p]) == (p[j] in table[q]):
                return False
        return True

    def has_self_loop(self) -> bool:
        return any(out & set(p) for p, out in self.outs)

    def flip(self, edges: Sequence[Edge]) -> "OrientationTable":
        table = {p: set(out) for p, out in self.outs}
        for p, q in edges:
            j = _edge_dimension(self.grid, p, q)
            table[p] ^= {q[j]}
            table[q] ^= {p[j]}
        return OrientationTable.from_dict(self.grid, {p: frozenset(out) for p, out in table.items()})

    def to_outmap(self, source=None) -> Outmap:
        return Outmap.from_table(self.grid, self.as_dict(), source=source)


def _edge_dimension(grid: Grid, p: Point, q: Point) -> int:
    if not (grid.is_point(p) and grid.is_point(q)):
        raise BadSpec(f"edge ({p}, {q}) has an endpoint outside the grid")
    differing = [j for j in range(grid.d) if p[j] != q[j]]
    if len(differing) != 1:
        raise BadSpec(f"({p}, {q}) is not an edge: points differ in {len(differing)} blocks")
    return differing[0]


def all_orientations(g: Grid) -> Iterator[Tuple[int, OrientationTable]]:
    """Every consistent loop-free orientation as (mask, table); 2^|E| of them."""
    edges = g.edges()
    for mask in range(1 << len(edges)):
        yield mask, OrientationTable.from_mask(g, mask, edges)


def generate(g: Grid, spec: GeneratorSpec) -> Outmap:
    if isinstance(spec, ProductUSO):
        if len(spec.orders) != g.d:
            raise BadSpec(f"product order needs {g.d} permutations, got {len(spec.orders)}")
        ranks = []
        for order, block in zip(spec.orders, g.blocks):
            if sorted(order) != list(block):
                raise BadSpec(f"order {list(order)} is not a permutation of block {list(block)}")
            ranks.append({k: r for r, k in enumerate(order)})

        def product_outmap(p: Point) -> FrozenSet[int]:
            return frozenset(
                k for j, block in enumerate(g.blocks) for k in block if ranks[j][k] < ranks[j][p[j]]
            )

        return Outmap(g, product_outmap, source=spec)

    if isinstance(spec, RandomOrientation):
        rng = random.Random(spec.seed)
        edges = g.edges()
        mask = rng.getrandbits(len(edges))
        return OrientationTable.from_mask(g, mask, edges).to_outmap(source=spec)

    if isinstance(spec, Mutated):
        base = generate(g, spec.base)
        table = OrientationTable.from_dict(g, base.table())
        return table.flip(spec.flipped_edges).to_outmap(source=spec)

    if isinstance(spec, ExplicitTable):
        table = {}
        for p, out in spec.table:
            if not g.is_point(p):
                raise BadSpec(f"table entry {p} is not a point of the grid")
            if not set(out) <= g.directions:
                raise BadSpec(f"table entry {p} lists directions outside 1..{g.n}")
            table[p] = frozenset(out)
        return Outmap.from_table(g, table, source=spec)

    if isinstance(spec, InconsistentRandom):
        rng = random.Random(spec.seed)
        table = {}
        for p in g.points():
            table[p] = frozenset(k for k in range(1, g.n + 1) if rng.getrandbits(1))
        return Outmap.from_table(g, table, source=spec)

    raise BadSpec(f"unknown generator spec {spec!r}")


# Oracles

def _region(region: Union[Grid, Subgrid]) -> Subgrid:
    return Subgrid.whole(region) if isinstance(region, Grid) else region


def _check_guard(region: Subgrid, guard: bool) -> None:
    limit = settings.ORACLE_MAX_VERTICES
    if guard and region.vertex_count > limit:
        raise GridTooLarge(
            f"{region.vertex_count} vertices exceed the oracle guard of {limit} (set USOLAB_GUARD or --unsafe)"
        )


def _materialize(region: Subgrid, sigma: Outmap) -> Table:
    return {p: sigma(p) for p in region.points()}


def _first_collision(sub: Subgrid, table: Table) -> Optional[Tuple[Point, Point]]:
    """Two points of sub with equal refined index, taken from the smallest colliding index."""
    classes = defaultdict(list)
    for p in sub.points():
        classes[index_of(sub, table[p])].append(p)
    colliding = [index for index, members in classes.items() if len(members) > 1]
    if not colliding:
        return None
    members = classes[min(colliding)]
    return members[0], members[1]


def is_uso(g: Grid, sigma: Outmap, guard: bool = True) -> bool:
    """True iff every nonempty induced subgrid has exactly one sink."""
    region = Subgrid.whole(g)
    _check_guard(region, guard)
    table = _materialize(region, sigma)
    if any(out & set(p) for p, out in table.items()):
        return False
    for sub in region.subgrids():
        directions = sub.direction_set
        sinks = 0
        for p in sub.points():
            if not table[p] & directions:
                sinks += 1
                if sinks > 1:
                    break
        if sinks != 1:
            return False
    return True


def refined_index_bijection_check(g: Grid, sigma: Outmap, guard: bool = True) -> Union[bool, Tuple[Point, Point]]:
    region = Subgrid.whole(g)
    _check_guard(region, guard)
    pair = _first_collision(region, _materialize(region, sigma))
    return True if pair is None else pair


def find_violation_bruteforce(
    region: Union[Grid, Subgrid], sigma: Outmap, guard: bool = True
) -> Optional[Certificate]:
    """First self-loop, else the refined-index collision in the smallest induced subgrid, else None."""
    region = _region(region)
    _check_guard(region, guard)
    table = _materialize(region, sigma)
    for p in sorted(table):
        if table[p] & set(p):
            return GUV1(p)
    for sub in region.subgrids():
        if sub.vertex_count < 2:
            continue
        pair = _first_collision(sub, table)
        if pair is not None:
            logger.debug("collision in %s between %s and %s", sub.describe(), *pair)
            return GUV2(sub, pair[0], pair[1])
    return None


def sink_of(region: Union[Grid, Subgrid], sigma: Outmap) -> Optional[Point]:
    """The unique sink of region, or None when there are zero or several."""
    region = _region(region)
    directions = region.direction_set
    sinks = [p for p in region.points() if not sigma(p) & directions]
    return sinks[0] if len(sinks) == 1 else None
