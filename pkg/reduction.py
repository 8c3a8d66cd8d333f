"""Reduction from Grid-USO to Unique Forward EOPL and the mapping of answers back to certificates.

A node is an (n+1)-tuple of points-or-blank. Slot i holds the point of one frame of
the sink search "about to process direction i" (or having just merged a child at i);
the deepest frame sits at the lowest non-blank slot, suspended frames above it at their
trigger directions, and slot n+1 holds the final sink.
"""
import logging
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

from errors import NoViolationFound, WidthMismatch
from find_sink import extract_step2_certificate
from grid_core import verify_certificate
from models import (
    GU1,
    GUV1,
    GUV2,
    AlgState,
    Certificate,
    DuplicateSinkEvidence,
    FinishedState,
    Grid,
    InvalidEncoding,
    Outmap,
    Point,
    SelfLoop,
    StateClass,
    Step2Failure,
    Subgrid,
    ValidStep,
    ViolationState,
)
from ufeopl import UF1, UfeoplAnswer, UfeoplInstance
from uso_lab import find_violation_bruteforce

logger = logging.getLogger(__name__)

# successor, cost and is_vertex each evaluate sigma on at most n+1 distinct points
OUTMAP_CALLS_PER_DIRECTION = 2

Lookup = Callable[[Point], FrozenSet[int]]


def _cached(sigma: Outmap) -> Lookup:
    seen: Dict[Point, FrozenSet[int]] = {}

    def out(p: Point) -> FrozenSet[int]:
        if p not in seen:
            seen[p] = sigma(p)
        return seen[p]

    return out


def omega(g: Grid) -> int:
    return g.n + 2


# Encoding

def slot_width(g: Grid) -> int:
    return g.vertex_count.bit_length()


def node_width(g: Grid) -> int:
    return (g.n + 1) * slot_width(g)


def cost_width(g: Grid) -> int:
    # bits for omega^(n*d+2) - 1, one spare, never below the node width
    return max(node_width(g), (omega(g) ** (g.n * g.d + 2) - 1).bit_length() + 1)


def _rank(g: Grid, p: Point) -> int:
    rank, scale = 0, 1
    for c, block in zip(p, g.blocks):
        rank += (c - block[0]) * scale
        scale *= len(block)
    return rank


def _unrank(g: Grid, rank: int) -> Point:
    coords = []
    for block in g.blocks:
        rank, offset = divmod(rank, len(block))
        coords.append(block[0] + offset)
    return tuple(coords)


def _raw(g: Grid, st: AlgState) -> int:
    w = slot_width(g)
    bits = 0
    for s, p in enumerate(st.slots):
        if p is not None:
            bits |= (1 + _rank(g, p)) << (s * w)
    return bits


def start_mask(g: Grid) -> int:
    return _raw(g, AlgState.start(g))


def encode_state(g: Grid, st: AlgState) -> int:
    if len(st.slots) != g.n + 1:
        raise WidthMismatch(f"state has {len(st.slots)} slots, grid needs {g.n + 1}")
    for p in st.slots:
        if p is not None:
            g.require(p)
    return _raw(g, st) ^ start_mask(g)


def _fields(g: Grid, bits: int) -> List[Optional[int]]:
    """Slot fields of a node; None for blank, -1 for a value beyond |V|."""
    if not 0 <= bits < 1 << node_width(g):
        raise WidthMismatch(f"node {bits:#x} does not fit in {node_width(g)} bits")
    raw = bits ^ start_mask(g)
    w = slot_width(g)
    fields = []
    for s in range(g.n + 1):
        value = raw >> (s * w) & ((1 << w) - 1)
        if value == 0:
            fields.append(None)
        elif value > g.vertex_count:
            fields.append(-1)
        else:
            fields.append(value - 1)
    return fields


def decode_state(g: Grid, bits: int) -> Union[AlgState, InvalidEncoding]:
    fields = _fields(g, bits)
    if -1 in fields:
        return InvalidEncoding()
    return AlgState(tuple(None if f is None else _unrank(g, f) for f in fields))


# Classification

def _sink_of(sub: Subgrid, p: Point, out: Lookup) -> bool:
    return sub.contains(p) and not out(p) & sub.direction_set


def _suspended_ok(g: Grid, frame: Subgrid, pos: int, q: Point, out: Lookup) -> bool:
    j = g.block_of(pos)
    if pos not in frame.direction_set or q[j] == pos or pos not in out(q):
        return False
    return _sink_of(frame.prefix(pos - 1), q, out)


def _active_form(g: Grid, frame: Subgrid, pos: int, x: Point, out: Lookup) -> Optional[Subgrid]:
    """Subgrid x is claimed to be the sink of at this position, or None when x does not belong there."""
    before = frame.prefix(pos - 1)
    if _sink_of(before, x, out):
        return before
    if pos in frame.direction_set and x[g.block_of(pos)] == pos:
        merged = frame.prefix(pos)
        if _sink_of(merged, x, out):
            return merged
    return None


def _step2_fails(g: Grid, frame: Subgrid, trigger: int, y: Point, out: Lookup) -> bool:
    j = g.block_of(trigger)
    return any(k <= trigger and k in out(y) for k in frame.restrictions[j])


def _classify(g: Grid, st: AlgState, out: Lookup) -> StateClass:
    if len(st.slots) != g.n + 1 or any(p is not None and not g.is_point(p) for p in st.slots):
        return InvalidEncoding()
    top = Subgrid.whole(g)
    if st == AlgState.start(g):
        return ValidStep(((1, g.bottom_left(), top),))

    for p in st.slots:
        if p is not None and out(p) & set(p):
            return ViolationState(SelfLoop(p))

    working = list(reversed(st.working()))
    result = st.result
    if not working:
        if result is not None and not out(result):
            return FinishedState(result)
        return InvalidEncoding()

    suspended = working if result is not None else working[:-1]
    frame = top
    stack = []
    for pos, q in suspended:
        if not _suspended_ok(g, frame, pos, q, out):
            return InvalidEncoding()
        stack.append((pos, q, frame))
        frame = frame.slab(g.block_of(pos), pos)

    if result is None:
        pos, x = working[-1]
        if _active_form(g, frame, pos, x, out) is None:
            return InvalidEncoding()
        stack.append((pos, x, frame))
        return ValidStep(tuple(stack))

    # failed merge: the child's sink sits in the result slot under its parent
    pos, q, parent_frame = stack[-1]
    if _sink_of(frame, result, out) and _step2_fails(g, parent_frame, pos, result, out):
        return ViolationState(Step2Failure(q, result, pos, parent_frame))
    return InvalidEncoding()


def is_vertex(g: Grid, sigma: Outmap, st: AlgState) -> StateClass:
    return _classify(g, st, _cached(sigma))


def successor(g: Grid, sigma: Outmap, st: AlgState) -> AlgState:
    out = _cached(sigma)
    cls = _classify(g, st, out)
    if not isinstance(cls, ValidStep):
        return st
    pos, x, frame = cls.stack[-1]
    j = g.block_of(pos)

    if pos in frame.direction_set and x[j] != pos and pos in out(x):
        # trigger: open the slab frame at its bottom-left point, keep x suspended at pos
        return st.with_slots({1: frame.slab(j, pos).bottom_left()})

    nxt = pos + 1
    if nxt <= g.n and st.slots[nxt - 1] is not None:
        _, _, parent_frame = cls.stack[-2]
        if _step2_fails(g, parent_frame, nxt, x, out):
            return st.with_slots({pos: None, g.n + 1: x})
    # plain move, merge onto the parent, or the final write into the result slot
    return st.with_slots({pos: None, nxt: x})


# Cost

def _h(p: Optional[Point], i: int, j: int, w: int, out: Lookup) -> int:
    if p is None:
        return 0
    if not any(k <= i for k in out(p)):
        return w - 1
    return p[j - 1]


def help_h(g: Grid, sigma: Outmap, st: AlgState, i: int, j: int) -> int:
    return _h(st.slots[i - 1], i, j, omega(g), _cached(sigma))


def _cost(g: Grid, slots: Sequence[Optional[Point]], out: Lookup) -> int:
    w = omega(g)
    total = 0
    for i in range(1, g.n + 1):
        p = slots[i - 1]
        if p is None:
            continue
        total += w ** (i - 1) * sum(w ** j * _h(p, i, j, w, out) for j in range(1, g.d + 1))
    if slots[g.n] is not None:
        total += w ** (g.n * g.d + 1)
    return total


def cost(g: Grid, sigma: Outmap, st: AlgState) -> int:
    return _cost(g, st.slots, _cached(sigma))


def bit_cost(g: Grid, sigma: Outmap, bits: int) -> int:
    """0 on the all-zeros node, otherwise 1 + cost; out-of-range slots count as blank."""
    fields = _fields(g, bits)
    if bits == 0:
        return 0
    slots = [None if f is None or f < 0 else _unrank(g, f) for f in fields]
    return _cost(g, slots, _cached(sigma)) + 1


# Instance

def iter_valid_states(g: Grid, sigma: Outmap) -> Iterator[AlgState]:
    """Every state is_vertex accepts as a valid step, generated frame by frame."""
    out = _cached(sigma)
    start = AlgState.start(g)
    blank = (None,) * (g.n + 1)
    yield start

    def extend(frame: Subgrid, limit: int, above: Dict[int, Point]) -> Iterator[AlgState]:
        for pos in range(1, limit):
            candidates = list(frame.prefix(pos - 1).points())
            if pos in frame.direction_set:
                candidates += [x for x in frame.prefix(pos).points() if x[g.block_of(pos)] == pos]
            for x in sorted(set(candidates)):
                if _active_form(g, frame, pos, x, out) is not None:
                    st = AlgState(blank).with_slots({**above, pos: x})
                    if st != start:
                        yield st
            for q in frame.prefix(pos - 1).points():
                if _suspended_ok(g, frame, pos, q, out):
                    yield from extend(frame.slab(g.block_of(pos), pos), pos, {**above, pos: q})

    yield from extend(Subgrid.whole(g), g.n + 1, {})


def build_instance(g: Grid, sigma: Outmap) -> UfeoplInstance:
    def succ(bits: int) -> int:
        st = decode_state(g, bits)
        if isinstance(st, InvalidEncoding):
            return bits
        return encode_state(g, successor(g, sigma, st))

    def candidates() -> List[int]:
        return sorted(encode_state(g, st) for st in iter_valid_states(g, sigma))

    return UfeoplInstance(
        d_bits=node_width(g),
        m_bits=cost_width(g),
        succ=succ,
        cost=lambda bits: bit_cost(g, sigma, bits),
        start_mask=start_mask(g),
        candidates=candidates,
    )


# Mapping answers back

def _sink_claims(cls: StateClass) -> List[Tuple[Subgrid, Point]]:
    """(subgrid, point) pairs where a state asserts the point is the subgrid's sink."""
    if not isinstance(cls, ValidStep):
        return []
    claims = []
    for pos, p, frame in cls.stack:
        claims.append((frame.prefix(pos - 1), p))
        claims.append((frame.prefix(pos), p))
    return claims


def _duplicate_sinks(
    g: Grid, classes: Sequence[StateClass], out: Lookup
) -> Optional[DuplicateSinkEvidence]:
    whole = Subgrid.whole(g)
    claims = []
    points = []
    for cls in classes:
        if isinstance(cls, FinishedState):
            claims.append((whole, cls.point))
            points.append(cls.point)
        elif isinstance(cls, ValidStep):
            claims.extend(_sink_claims(cls))
            points.extend(p for _, p, _ in cls.stack)
    for sub, _ in sorted(set(claims), key=lambda c: (c[0].vertex_count, c[0].restrictions, c[1])):
        sinks = sorted({p for p in points if _sink_of(sub, p, out)})
        if len(sinks) >= 2:
            return DuplicateSinkEvidence(sub, sinks[0], sinks[1])
    return None


def _certificate_for(g: Grid, sigma: Outmap, cls: StateClass, guard: bool = True) -> Optional[Certificate]:
    if isinstance(cls, FinishedState):
        return GU1(cls.point)
    if isinstance(cls, ViolationState):
        reason = cls.reason
        if isinstance(reason, SelfLoop):
            return GUV1(reason.point)
        if isinstance(reason, Step2Failure):
            return extract_step2_certificate(reason, sigma, guard=guard)
        if isinstance(reason, DuplicateSinkEvidence):
            return GUV2(reason.sub, reason.p, reason.q)
    return None


def map_solution(g: Grid, sigma: Outmap, answer: UfeoplAnswer, guard: bool = True) -> Certificate:
    """Turn a verified answer of the reduced instance into a verified Grid-USO certificate."""
    out = _cached(sigma)
    nodes = [answer.v] if isinstance(answer, UF1) else [answer.v, answer.w]
    states = [decode_state(g, v) for v in nodes]

    if isinstance(answer, UF1):
        if isinstance(states[0], AlgState):
            after = successor(g, sigma, states[0])
            cert = _certificate_for(g, sigma, _classify(g, after, out), guard)
            if cert is not None and verify_certificate(g, sigma, cert):
                return cert
    else:
        classes = [_classify(g, st, out) if isinstance(st, AlgState) else st for st in states]
        evidence = _duplicate_sinks(g, classes, out)
        if evidence is not None:
            cert = _certificate_for(g, sigma, ViolationState(evidence), guard)
            if verify_certificate(g, sigma, cert):
                return cert

    stored = []
    for v in nodes:
        stored.extend(_unrank(g, f) for f in _fields(g, v) if f is not None and f >= 0)
    if stored:
        cert = find_violation_bruteforce(Subgrid.spanning(g, stored), sigma, guard=guard)
        if cert is not None and verify_certificate(g, sigma, cert):
            logger.info("answer %s mapped through the spanned-subgrid search", answer)
            return cert
    cert = find_violation_bruteforce(g, sigma, guard=guard)
    if cert is not None and verify_certificate(g, sigma, cert):
        logger.info("answer %s mapped through the full brute-force search", answer)
        return cert
    raise NoViolationFound(f"no certificate found for answer {answer}")
