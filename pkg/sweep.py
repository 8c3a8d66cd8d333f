"""Exhaustive or sampled sweeps over the orientations of a small grid.

Every orientation runs through the brute-force oracles, the direct sink search and
the reduced instance; each invariant that fails is recorded by name on the record.
"""
import dataclasses
import logging
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import List, Optional, Sequence, Tuple

from config import settings
from errors import BudgetExceeded, GridTooLarge, NoViolationFound, PreconditionViolation
from find_sink import find_sink
from grid_core import make_grid, verify_certificate
from instance_io import certificate_to_schema
from models import GU1, Grid, Sink, Subgrid, TraceAction
from reduction import OUTMAP_CALLS_PER_DIRECTION, build_instance, map_solution
from schemas import SweepRecord, SweepSummary
from ufeopl import UF1, enumerate_answers, walk_line
from uso_lab import (
    OrientationTable,
    find_violation_bruteforce,
    is_uso,
    refined_index_bijection_check,
    sink_of,
)

logger = logging.getLogger(__name__)


def _frame_invariant_holds(grid: Grid, table, trace) -> bool:
    # after skipping or merging direction i, the point is the sink of the frame's prefix up to i
    for step in trace:
        if step.action in (TraceAction.skip, TraceAction.merge):
            frame = Subgrid(grid, step.frame).prefix(step.direction)
            if table[step.point] & frame.direction_set:
                return False
    return True


def classify_orientation(blocks: Sequence[int], index: int, mask: int, single_line: bool = False) -> SweepRecord:
    grid = make_grid(list(blocks))
    orientation = OrientationTable.from_mask(grid, mask)
    table = orientation.as_dict()
    sigma = orientation.to_outmap()
    failures = []

    uso = is_uso(grid, sigma)
    violation = find_violation_bruteforce(grid, sigma)
    if uso == (violation is not None):
        failures.append("oracle_exclusive")
    if violation is not None and not verify_certificate(grid, sigma, violation):
        failures.append("oracle_certificate_verified")
    if uso and refined_index_bijection_check(grid, sigma) is not True:
        failures.append("refined_index_bijection")
    sink = sink_of(grid, sigma) if uso else None

    direct_cert = None
    try:
        direct = find_sink(grid, sigma)
    except (BudgetExceeded, NoViolationFound):
        failures.append("direct_integrity")
    else:
        direct_cert = GU1(direct.point) if isinstance(direct, Sink) else direct.certificate
        if not verify_certificate(grid, sigma, direct_cert):
            failures.append("direct_certificate_verified")
        if uso and direct_cert != GU1(sink):
            failures.append("direct_matches_oracle")
        if not _frame_invariant_holds(grid, table, direct.trace):
            failures.append("frame_invariant")
        if direct.outmap_calls > OUTMAP_CALLS_PER_DIRECTION * grid.n * (len(direct.trace) + 1):
            failures.append("direct_call_budget")

    over_budget = []

    def budgeted(fn):
        def wrapped(v):
            before = sigma.calls
            result = fn(v)
            if sigma.calls - before > OUTMAP_CALLS_PER_DIRECTION * grid.n:
                over_budget.append(v)
            return result
        return wrapped

    inst = build_instance(grid, sigma)
    inst = dataclasses.replace(inst, succ=budgeted(inst.succ), cost=budgeted(inst.cost))
    walk_steps = 0
    via_cert = None
    try:
        inst.check_preconditions()
        walk = walk_line(inst, record_costs=True)
        walk_steps = walk.steps
        if any(b <= a for a, b in zip(walk.cost_trace, walk.cost_trace[1:])):
            failures.append("cost_monotone")
        via_cert = map_solution(grid, sigma, UF1(walk.end_node))
        if not verify_certificate(grid, sigma, via_cert):
            failures.append("via_eopl_certificate_verified")
        if uso and via_cert != GU1(sink):
            failures.append("via_eopl_matches_oracle")
        if isinstance(direct_cert, GU1) and isinstance(via_cert, GU1) and direct_cert != via_cert:
            failures.append("paths_agree")
        if single_line and uso:
            answers = enumerate_answers(inst)
            if [a.v for a in answers.uf1] != [walk.end_node] or answers.ufv1 or answers.ufv2:
                failures.append("single_line")
    except PreconditionViolation:
        failures.append("preconditions")
    except NoViolationFound:
        failures.append("map_solution_total")
    if over_budget:
        failures.append("step_call_budget")

    return SweepRecord(
        index=index,
        mask=mask,
        uso=uso,
        sink=list(sink) if sink is not None else None,
        violation=certificate_to_schema(grid, violation) if violation is not None else None,
        direct=certificate_to_schema(grid, direct_cert) if direct_cert is not None else None,
        via_eopl=certificate_to_schema(grid, via_cert) if via_cert is not None else None,
        walk_steps=walk_steps,
        failures=failures,
    )


def select_masks(grid: Grid, sample: Optional[int] = None, seed: Optional[int] = None) -> Tuple[List[int], bool]:
    """All 2^|E| masks, or a seeded sorted sample when asked or above the edge guard."""
    edge_count = len(grid.edges())
    total = 1 << edge_count
    if sample is None and edge_count <= settings.SWEEP_MAX_EDGES:
        return list(range(total)), False
    size = min(sample or settings.SWEEP_SAMPLE_SIZE, total)
    rng = random.Random(seed if seed is not None else 0)
    return sorted(rng.sample(range(total), size)), True


def run_sweep(
    blocks: Sequence[int],
    sample: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    single_line: bool = False,
) -> Tuple[List[SweepRecord], SweepSummary]:
    grid = make_grid(list(blocks))
    if grid.vertex_count > settings.ORACLE_MAX_VERTICES:
        raise GridTooLarge(f"sweep grid has {grid.vertex_count} vertices, above the oracle guard")
    masks, sampled = select_masks(grid, sample, seed)
    workers = workers or settings.SWEEP_WORKERS
    logger.info("sweeping %d orientations of %s with %d workers", len(masks), list(blocks), workers)

    task = partial(classify_orientation, tuple(blocks), single_line=single_line)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(task, range(len(masks)), masks, chunksize=16))
    else:
        records = []
        for index, mask in enumerate(masks):
            records.append(task(index, mask))
            if (index + 1) % 64 == 0:
                logger.info("%d/%d orientations classified", index + 1, len(masks))
    records.sort(key=lambda r: r.index)

    failures = Counter(name for record in records for name in record.failures)
    for name, count in sorted(failures.items()):
        logger.warning("invariant %s failed on %d orientations", name, count)
    summary = SweepSummary(
        blocks=[list(b) for b in grid.blocks],
        orientations=len(records),
        sampled=sampled,
        seed=seed if sampled else None,
        uso_count=sum(1 for r in records if r.uso),
        violation_count=sum(1 for r in records if not r.uso),
        failures=dict(sorted(failures.items())),
    )
    return records, summary
