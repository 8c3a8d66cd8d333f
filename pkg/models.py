import itertools
import threading
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, ClassVar, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from errors import BadSpec, InvalidPoint, InvalidSubgrid, PointOutsideSubgrid

# One direction value per dimension
Point = Tuple[int, ...]
RefinedIndex = Tuple[int, ...]


@dataclass(frozen=True)
class Grid:
    """Directions 1..n partitioned into contiguous ascending blocks of size >= 2."""

    blocks: Tuple[Tuple[int, ...], ...]
    # original label -> canonical label, identity when the input was already canonical
    relabeling: Dict[int, int] = field(default_factory=dict, compare=False, hash=False, repr=False)

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def d(self) -> int:
        return len(self.blocks)

    @cached_property
    def vertex_count(self) -> int:
        count = 1
        for block in self.blocks:
            count *= len(block)
        return count

    @cached_property
    def directions(self) -> FrozenSet[int]:
        return frozenset(range(1, self.n + 1))

    @cached_property
    def _dimension_of(self) -> Dict[int, int]:
        return {k: j for j, block in enumerate(self.blocks) for k in block}

    def block_of(self, direction: int) -> int:
        """Dimension index (0-based) of the block holding a direction."""
        return self._dimension_of[direction]

    def is_point(self, p) -> bool:
        return (
            isinstance(p, tuple)
            and len(p) == self.d
            and all(isinstance(c, int) and c in block for c, block in zip(p, self.blocks))
        )

    def require(self, p) -> Point:
        if not self.is_point(p):
            raise InvalidPoint(f"{p!r} is not a point of grid {list(map(list, self.blocks))}")
        return p

    def points(self) -> Iterator[Point]:
        return itertools.product(*self.blocks)

    def bottom_left(self) -> Point:
        return tuple(block[0] for block in self.blocks)

    def edges(self) -> List[Tuple[Point, Point, int]]:
        """Every undirected edge once as (p, q, dimension) with p < q."""
        result = []
        for p in self.points():
            for j, block in enumerate(self.blocks):
                for k in block:
                    if k > p[j]:
                        result.append((p, p[:j] + (k,) + p[j + 1:], j))
        return result

    def original_label(self, direction: int) -> int:
        for original, canonical in self.relabeling.items():
            if canonical == direction:
                return original
        return direction

    def canonical_label(self, direction: int) -> int:
        return self.relabeling.get(direction, direction)


@dataclass(frozen=True)
class Subgrid:
    """Induced subgrid: a nonempty restriction of every block (singletons allowed)."""

    parent: Grid
    restrictions: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.restrictions) != self.parent.d:
            raise InvalidSubgrid(f"expected {self.parent.d} restrictions, got {len(self.restrictions)}")
        normalized = []
        for j, (restriction, block) in enumerate(zip(self.restrictions, self.parent.blocks)):
            values = tuple(sorted(set(restriction)))
            if not values:
                raise InvalidSubgrid(f"restriction {j + 1} is empty")
            if not set(values) <= set(block):
                raise InvalidSubgrid(f"restriction {list(values)} is not a subset of block {list(block)}")
            normalized.append(values)
        object.__setattr__(self, "restrictions", tuple(normalized))

    @classmethod
    def whole(cls, grid: Grid) -> "Subgrid":
        return cls(grid, grid.blocks)

    @cached_property
    def direction_set(self) -> FrozenSet[int]:
        return frozenset(k for restriction in self.restrictions for k in restriction)

    @cached_property
    def vertex_count(self) -> int:
        count = 1
        for restriction in self.restrictions:
            count *= len(restriction)
        return count

    def contains(self, p) -> bool:
        return (
            isinstance(p, tuple)
            and len(p) == len(self.restrictions)
            and all(c in restriction for c, restriction in zip(p, self.restrictions))
        )

    def require(self, p) -> Point:
        if not self.contains(p):
            raise PointOutsideSubgrid(f"{p!r} lies outside subgrid {self.describe()}")
        return p

    def points(self) -> Iterator[Point]:
        return itertools.product(*self.restrictions)

    def bottom_left(self) -> Point:
        return tuple(restriction[0] for restriction in self.restrictions)

    def prefix(self, m: int) -> "Subgrid":
        """Each restriction cut to directions <= m, or to its first direction when the cut is empty."""
        cut = []
        for restriction in self.restrictions:
            kept = tuple(k for k in restriction if k <= m)
            cut.append(kept or restriction[:1])
        return Subgrid(self.parent, tuple(cut))

    def slab(self, j: int, i: int) -> "Subgrid":
        """Recursion frame for trigger direction i in dimension j: prefix(i - 1) with block j fixed to {i}."""
        restrictions = list(self.prefix(i - 1).restrictions)
        restrictions[j] = (i,)
        return Subgrid(self.parent, tuple(restrictions))

    @classmethod
    def spanning(cls, grid: Grid, points: Iterable[Point]) -> "Subgrid":
        """Smallest subgrid containing all given points."""
        columns = list(zip(*points))
        return cls(grid, tuple(tuple(column) for column in columns))

    def subgrids(self) -> List["Subgrid"]:
        """All nonempty induced subgrids, smallest vertex count first, ties by restriction tuple."""
        options = []
        for restriction in self.restrictions:
            subsets = []
            for size in range(1, len(restriction) + 1):
                subsets.extend(itertools.combinations(restriction, size))
            options.append(subsets)
        found = [Subgrid(self.parent, combo) for combo in itertools.product(*options)]
        found.sort(key=lambda s: (s.vertex_count, s.restrictions))
        return found

    def describe(self) -> str:
        return "x".join("{" + ",".join(map(str, r)) + "}" for r in self.restrictions)


class Outmap:
    """Pointwise outmap oracle sigma with a thread-safe evaluation counter."""

    def __init__(
        self,
        grid: Grid,
        fn: Callable[[Point], Iterable[int]],
        source=None,
        domain: Optional[Subgrid] = None,
    ):
        self.grid = grid
        self.source = source
        self.domain = domain
        self._fn = fn
        self._calls = 0
        self._lock = threading.Lock()

    @classmethod
    def from_table(cls, grid: Grid, table: Mapping[Point, Iterable[int]], source=None) -> "Outmap":
        frozen = {p: frozenset(out) for p, out in table.items()}
        missing = [p for p in grid.points() if p not in frozen]
        if missing:
            raise BadSpec(f"outmap table has no entry for {missing[0]}")
        return cls(grid, frozen.__getitem__, source=source)

    def __call__(self, p: Point) -> FrozenSet[int]:
        if self.domain is not None:
            self.domain.require(p)
        with self._lock:
            self._calls += 1
        out = frozenset(self._fn(p))
        if not out <= self.grid.directions:
            raise BadSpec(f"outmap at {p} returned directions outside 1..{self.grid.n}: {sorted(out)}")
        return out

    @property
    def calls(self) -> int:
        return self._calls

    def reset_calls(self) -> None:
        with self._lock:
            self._calls = 0

    def table(self) -> Dict[Point, FrozenSet[int]]:
        """Materialize the whole outmap (one evaluation per point of the domain)."""
        points = self.domain.points() if self.domain is not None else self.grid.points()
        return {p: self(p) for p in points}


# Certificates

class CertificateType(str, Enum):
    GU1 = "GU1"
    GUV1 = "GUV1"
    GUV2 = "GUV2"


@dataclass(frozen=True)
class GU1:
    """p is a sink: sigma(p) is empty."""

    p: Point
    type: ClassVar[CertificateType] = CertificateType.GU1


@dataclass(frozen=True)
class GUV1:
    """p has a self-loop: sigma(p) meets p."""

    p: Point
    type: ClassVar[CertificateType] = CertificateType.GUV1


@dataclass(frozen=True)
class GUV2:
    """Two distinct points of sub share a refined index under the induced outmap."""

    sub: Subgrid
    p: Point
    q: Point
    type: ClassVar[CertificateType] = CertificateType.GUV2


Certificate = Union[GU1, GUV1, GUV2]


# Sink finding

class TraceAction(str, Enum):
    skip = "skip"
    recurse = "recurse"
    merge = "merge"
    violation = "violation"


@dataclass(frozen=True)
class TraceStep:
    depth: int
    direction: int
    point: Point
    action: TraceAction
    frame: Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class Sink:
    point: Point
    trace: Tuple[TraceStep, ...]
    outmap_calls: int


@dataclass(frozen=True)
class Violation:
    certificate: Certificate
    trace: Tuple[TraceStep, ...]
    outmap_calls: int


FindSinkResult = Union[Sink, Violation]


@dataclass(frozen=True)
class Step2Failure:
    """A merge whose child sink y still points into the parent's block at or below the trigger."""

    parent: Point
    child: Point
    trigger: int
    frame: Subgrid


# Reduction states

@dataclass(frozen=True)
class AlgState:
    """Slots 1..n hold working points of the frame stack, slot n+1 holds the result."""

    slots: Tuple[Optional[Point], ...]

    @classmethod
    def start(cls, grid: Grid) -> "AlgState":
        return cls((grid.bottom_left(),) + (None,) * grid.n)

    @property
    def result(self) -> Optional[Point]:
        return self.slots[-1]

    def working(self) -> List[Tuple[int, Point]]:
        """Non-blank working slots as (position, point), deepest frame first."""
        return [(pos, p) for pos, p in enumerate(self.slots[:-1], start=1) if p is not None]

    def with_slots(self, changes: Mapping[int, Optional[Point]]) -> "AlgState":
        slots = list(self.slots)
        for pos, value in changes.items():
            slots[pos - 1] = value
        return AlgState(tuple(slots))


@dataclass(frozen=True)
class SelfLoop:
    point: Point


@dataclass(frozen=True)
class DuplicateSinkEvidence:
    sub: Subgrid
    p: Point
    q: Point


ViolationReason = Union[SelfLoop, Step2Failure, DuplicateSinkEvidence]


@dataclass(frozen=True)
class InvalidEncoding:
    pass


@dataclass(frozen=True)
class ValidStep:
    # (position, point, frame) outermost first; the last entry is the active point
    stack: Tuple[Tuple[int, Point, Subgrid], ...]


@dataclass(frozen=True)
class FinishedState:
    point: Point


@dataclass(frozen=True)
class ViolationState:
    reason: ViolationReason


StateClass = Union[InvalidEncoding, ValidStep, FinishedState, ViolationState]
