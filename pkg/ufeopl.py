"""Unique Forward EOPL: instances over d-bit nodes, answer checking, line walking and enumeration."""
import bisect
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, ClassVar, Dict, Iterable, List, Optional, Sequence, Union

from config import settings
from errors import BudgetExceeded, InstanceTooLarge, PreconditionViolation, WidthMismatch

logger = logging.getLogger(__name__)


@dataclass
class UfeoplInstance:
    d_bits: int
    m_bits: int
    succ: Callable[[int], int]
    cost: Callable[[int], int]
    start_mask: int = 0
    # optional generator of every node (S(v) != v); enumeration prefers it over all 2^d strings
    candidates: Optional[Callable[[], Iterable[int]]] = field(default=None, repr=False)

    @classmethod
    def from_tables(cls, d_bits: int, m_bits: int, succ: Sequence[int], cost: Sequence[int]) -> "UfeoplInstance":
        size = 1 << d_bits
        if len(succ) != size or len(cost) != size:
            raise WidthMismatch(f"tables must have {size} entries, got succ={len(succ)} cost={len(cost)}")
        for v, s in enumerate(succ):
            if not 0 <= s < size:
                raise WidthMismatch(f"succ[{v}] = {s} does not fit in {d_bits} bits")
        for v, c in enumerate(cost):
            if not 0 <= c < 1 << m_bits:
                raise WidthMismatch(f"cost[{v}] = {c} does not fit in {m_bits} bits")
        succ_table, cost_table = list(succ), list(cost)
        return cls(d_bits, m_bits, succ_table.__getitem__, cost_table.__getitem__)

    def require_width(self, v: int) -> int:
        if not isinstance(v, int) or not 0 <= v < 1 << self.d_bits:
            raise WidthMismatch(f"node {v!r} is not a {self.d_bits}-bit string")
        return v

    def check_preconditions(self) -> None:
        if self.m_bits < self.d_bits:
            raise PreconditionViolation(f"cost width {self.m_bits} is smaller than node width {self.d_bits}")
        if self.succ(0) == 0:
            raise PreconditionViolation("the all-zeros node is a fixed point of the successor")
        if self.cost(0) != 0:
            raise PreconditionViolation(f"the all-zeros node has cost {self.cost(0)}, expected 0")

    def hex(self, v: int) -> str:
        return format(v, "0{}x".format(max(1, (self.d_bits + 3) // 4)))


class AnswerTag(str, Enum):
    UF1 = "UF1"
    UFV1 = "UFV1"
    UFV2 = "UFV2"


@dataclass(frozen=True)
class UF1:
    """v is the end of a line."""

    v: int
    tag: ClassVar[AnswerTag] = AnswerTag.UF1


@dataclass(frozen=True)
class UFV1:
    """Potential violation: equal costs (subtype a) or w sandwiched between v and S(v) (subtype b)."""

    v: int
    w: int
    subtype: str
    tag: ClassVar[AnswerTag] = AnswerTag.UFV1


@dataclass(frozen=True)
class UFV2:
    """Line break: w is a node with higher cost than the end of line v."""

    v: int
    w: int
    tag: ClassVar[AnswerTag] = AnswerTag.UFV2


UfeoplAnswer = Union[UF1, UFV1, UFV2]


@dataclass(frozen=True)
class WalkReport:
    end_node: int
    steps: int
    cost_trace: Optional[List[int]] = None


@dataclass
class AnswerSet:
    uf1: List[UF1]
    ufv1: List[UFV1]
    ufv2: List[UFV2]

    @property
    def total(self) -> int:
        return len(self.uf1) + len(self.ufv1) + len(self.ufv2)


def _is_end_of_line(inst: UfeoplInstance, v: int) -> bool:
    s = inst.succ(v)
    return s != v and (inst.succ(s) == s or inst.cost(s) <= inst.cost(v))


def check_answer(inst: UfeoplInstance, ans: UfeoplAnswer) -> bool:
    inst.require_width(ans.v)
    if isinstance(ans, UF1):
        return _is_end_of_line(inst, ans.v)

    inst.require_width(ans.w)
    if ans.v == ans.w or inst.succ(ans.w) == ans.w:
        return False
    if isinstance(ans, UFV1):
        if inst.succ(ans.v) == ans.v:
            return False
        cost_v, cost_w = inst.cost(ans.v), inst.cost(ans.w)
        if ans.subtype == "a":
            return cost_v == cost_w
        if ans.subtype == "b":
            return cost_v < cost_w < inst.cost(inst.succ(ans.v))
        return False
    if isinstance(ans, UFV2):
        return _is_end_of_line(inst, ans.v) and inst.cost(ans.v) < inst.cost(ans.w)
    return False


def walk_line(inst: UfeoplInstance, record_costs: bool = False) -> WalkReport:
    """Follow S from the all-zeros node while costs strictly increase; the last node is a UF1 witness."""
    inst.check_preconditions()
    budget = 1 << inst.m_bits
    v = 0
    cost_v = inst.cost(v)
    costs = [cost_v] if record_costs else None
    steps = 0
    while True:
        s = inst.succ(v)
        if s == v or inst.succ(s) == s:
            break
        cost_s = inst.cost(s)
        if cost_s <= cost_v:
            break
        v, cost_v = s, cost_s
        steps += 1
        if costs is not None:
            costs.append(cost_v)
        if steps >= budget:
            raise BudgetExceeded(f"walk exceeded {budget} steps")
    logger.debug("walk ended at %s after %d steps", inst.hex(v), steps)
    return WalkReport(v, steps, costs)


def enumerate_answers(inst: UfeoplInstance, guard: bool = True) -> AnswerSet:
    """Every UF1 witness and every UFV1/UFV2 pair, by brute force over the nodes."""
    if guard and inst.d_bits > settings.ENUM_MAX_BITS:
        raise InstanceTooLarge(
            f"{inst.d_bits}-bit instance exceeds the enumeration guard of {settings.ENUM_MAX_BITS} bits"
        )
    succ: Dict[int, int] = {}
    cost: Dict[int, int] = {}

    def S(v: int) -> int:
        if v not in succ:
            succ[v] = inst.succ(v)
        return succ[v]

    def c(v: int) -> int:
        if v not in cost:
            cost[v] = inst.cost(v)
        return cost[v]

    source = inst.candidates() if inst.candidates is not None else range(1 << inst.d_bits)
    nodes = sorted(v for v in set(source) if S(v) != v)

    uf1 = [UF1(v) for v in nodes if S(S(v)) == S(v) or c(S(v)) <= c(v)]

    by_cost = sorted(nodes, key=lambda v: (c(v), v))
    costs = [c(v) for v in by_cost]

    ufv1 = []
    groups = defaultdict(list)
    for v in nodes:
        groups[c(v)].append(v)
    for members in groups.values():
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                ufv1.append(UFV1(members[a], members[b], "a"))
    for v in nodes:
        low = bisect.bisect_right(costs, c(v))
        high = bisect.bisect_left(costs, c(S(v)))
        for w in by_cost[low:high]:
            ufv1.append(UFV1(v, w, "b"))

    ufv2 = []
    for end in uf1:
        low = bisect.bisect_right(costs, c(end.v))
        for w in by_cost[low:]:
            ufv2.append(UFV2(end.v, w))

    ufv1.sort(key=lambda a: (a.subtype, a.v, a.w))
    ufv2.sort(key=lambda a: (a.v, a.w))
    return AnswerSet(uf1, ufv1, ufv2)
