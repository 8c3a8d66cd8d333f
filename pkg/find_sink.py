"""Recursive sink finder over grid frames with step-2 checks and certificate extraction."""
import logging
from typing import Dict, FrozenSet, List, Optional, Union

from errors import BudgetExceeded, NoViolationFound
from grid_core import verify_certificate
from models import (
    GUV1,
    GUV2,
    Certificate,
    FindSinkResult,
    Grid,
    Outmap,
    Point,
    Sink,
    Step2Failure,
    Subgrid,
    TraceAction,
    TraceStep,
    Violation,
)
from uso_lab import find_violation_bruteforce

logger = logging.getLogger(__name__)


class _FrameSearch:
    def __init__(self, sigma: Outmap, budget: int, guard: bool = True):
        self.sigma = sigma
        self.budget = budget
        self.guard = guard
        self.frames = 0
        self.trace: List[TraceStep] = []

    def _log(self, depth: int, frame: Subgrid, direction: int, point: Point, action: TraceAction) -> None:
        self.trace.append(TraceStep(depth, direction, point, action, frame.restrictions))

    def run(self, frame: Subgrid, depth: int) -> Union[Point, Certificate]:
        self.frames += 1
        if self.frames > self.budget:
            raise BudgetExceeded(f"more than {self.budget} frames opened while searching {frame.describe()}")
        grid = frame.parent
        x = frame.bottom_left()
        out = self.sigma(x)
        if out & set(x):
            self._log(depth, frame, min(out & set(x)), x, TraceAction.violation)
            return GUV1(x)

        for i in sorted(frame.direction_set):
            j = grid.block_of(i)
            if i == x[j] or i not in out:
                self._log(depth, frame, i, x, TraceAction.skip)
                continue

            self._log(depth, frame, i, x, TraceAction.recurse)
            found = self.run(frame.slab(j, i), depth + 1)
            if not isinstance(found, tuple):
                return found
            y = found
            out_y = self.sigma(y)
            failing = [k for k in frame.restrictions[j] if k <= i and k in out_y]
            if failing:
                self._log(depth, frame, i, y, TraceAction.violation)
                if i in failing:
                    return GUV1(y)
                return extract_step2_certificate(Step2Failure(x, y, i, frame), self.sigma, guard=self.guard)
            x, out = y, out_y
            self._log(depth, frame, i, x, TraceAction.merge)
        return x


def find_sink(
    frame: Union[Grid, Subgrid], sigma: Outmap, budget: Optional[int] = None, guard: bool = True
) -> FindSinkResult:
    """Follow the frame recursion from the bottom-left point to the sink of frame.

    Returns Sink(p) with p a sink of the searched frame, or Violation(cert) with a
    certificate that passes verify_certificate.
    """
    region = Subgrid.whole(frame) if isinstance(frame, Grid) else frame
    search = _FrameSearch(sigma, budget if budget is not None else region.vertex_count, guard)
    calls_before = sigma.calls
    found = search.run(region, depth=0)
    calls = sigma.calls - calls_before
    if isinstance(found, tuple):
        return Sink(found, tuple(search.trace), calls)
    return Violation(found, tuple(search.trace), calls)


def extract_step2_certificate(failure: Step2Failure, sigma: Outmap, guard: bool = True) -> Certificate:
    """Turn a failed merge into a verified violation certificate.

    Stages: inconsistent edge or self-loop among the consulted points, then a
    collision search in the subgrid spanned by the failing merge, then a brute-force
    search of the frame prefix up to the trigger and finally the whole frame.
    """
    frame = failure.frame
    grid = frame.parent
    p, y, i = failure.parent, failure.child, failure.trigger
    j = grid.block_of(i)
    cache: Dict[Point, FrozenSet[int]] = {}

    def out(point: Point) -> FrozenSet[int]:
        if point not in cache:
            cache[point] = sigma(point)
        return cache[point]

    failing = [k for k in frame.restrictions[j] if k <= i and k in out(y)]
    k = failing[0] if failing else i
    p_moved = p[:j] + (i,) + p[j + 1:]
    y_moved = y[:j] + (k,) + y[j + 1:]

    for point in (p, y, p_moved, y_moved):
        if out(point) & set(point):
            logger.info("step-2 failure at %d: self-loop at %s", i, point)
            return GUV1(point)

    for a, b in ((p, p_moved), (y, y_moved)):
        if a != b and b[j] in out(a) and a[j] in out(b):
            edge = tuple((c,) for c in a[:j]) + ((a[j], b[j]),) + tuple((c,) for c in a[j + 1:])
            cert = GUV2(Subgrid(grid, edge), a, b)
            if verify_certificate(grid, sigma, cert):
                logger.info("step-2 failure at %d: inconsistent edge %s -- %s", i, a, b)
                return cert

    spanned = Subgrid.spanning(grid, [p, y, p_moved, y_moved])
    for stage, region in (("spanned", spanned), ("prefix", frame.prefix(i)), ("frame", frame)):
        cert = find_violation_bruteforce(region, sigma, guard=guard)
        if cert is not None and verify_certificate(grid, sigma, cert):
            logger.info("step-2 failure at %d: %s certificate from the %s search", i, cert.type.value, stage)
            return cert
    raise NoViolationFound(
        f"no violation found for the failed merge of {y} into {p} at direction {i} in {frame.describe()}"
    )
