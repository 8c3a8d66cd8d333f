"""usolab command line: generate instances, solve them directly or through the reduction, sweep, export."""
import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import BaseModel, ValidationError

from config import settings, setup_logging
from dot_export import line_dot, orientation_dot
from errors import BadSpec, InstanceTooLarge, NoViolationFound, UsoLabError
from find_sink import find_sink
from grid_core import make_grid, verify_certificate
from instance_io import (
    answer_to_schema,
    certificate_to_schema,
    dumps,
    generator_from_schema,
    instance_to_schema,
    load_certificate,
    load_instance,
    load_table_instance,
    manifest_to_schema,
    parse_blocks,
    table_instance_to_schema,
    write_json,
)
from models import GU1, Sink
from reduction import build_instance, map_solution
from schemas import GeneratorSpecSchema, GeneratorTypeEnum, NodeDumpSchema, SolveReport, TraceRecord
from sweep import run_sweep
from ufeopl import UF1, enumerate_answers, walk_line
from uso_lab import ExplicitTable, find_violation_bruteforce, generate, is_uso, sink_of

logger = logging.getLogger("usolab")

EXIT_SINK = 0
EXIT_BAD_INPUT = 2
EXIT_VIOLATION = 3
EXIT_SWEEP_FAILURE = 5


class RunConfig(BaseModel):
    command: str
    blocks: Optional[str] = None
    partition: Optional[str] = None
    instance: Optional[str] = None
    certificate: Optional[str] = None
    product: Optional[str] = None
    random: bool = False
    inconsistent: bool = False
    table: Optional[str] = None
    flip: Optional[str] = None
    materialize: bool = False
    seed: Optional[int] = None
    via_eopl: bool = False
    trace: Optional[str] = None
    report: Optional[str] = None
    output: Optional[str] = None
    summary: Optional[str] = None
    dump_nodes: Optional[str] = None
    table_out: Optional[str] = None
    enumerate: bool = False
    sample: Optional[int] = None
    workers: Optional[int] = None
    single_line: bool = False
    line: bool = False
    unsafe: bool = False
    verbose: bool = False

    @property
    def guard(self) -> bool:
        return not self.unsafe


def _grid_from_config(cfg: RunConfig):
    if cfg.partition:
        try:
            return make_grid(json.loads(cfg.partition))
        except json.JSONDecodeError:
            raise BadSpec(f"--partition must be a JSON list of blocks, got {cfg.partition!r}")
    if cfg.blocks:
        return make_grid(parse_blocks(cfg.blocks))
    raise BadSpec("give --blocks or --partition")


def _generator_schema(cfg: RunConfig, grid) -> GeneratorSpecSchema:
    chosen = [name for name, on in (("product", cfg.product), ("random", cfg.random),
                                    ("inconsistent", cfg.inconsistent), ("table", cfg.table)) if on]
    if len(chosen) != 1:
        raise BadSpec("choose exactly one of --product, --random, --inconsistent, --table")
    if cfg.product:
        original = [[grid.original_label(k) for k in block] for block in grid.blocks]
        if cfg.product == "ascending":
            orders = original
        elif cfg.product == "descending":
            orders = [list(reversed(block)) for block in original]
        else:
            try:
                orders = json.loads(cfg.product)
            except json.JSONDecodeError:
                raise BadSpec("--product takes ascending, descending or a JSON list of per-block orders")
        schema = GeneratorSpecSchema(type=GeneratorTypeEnum.product, orders=orders)
    elif cfg.random or cfg.inconsistent:
        if cfg.seed is None:
            raise BadSpec("random generators need --seed")
        kind = GeneratorTypeEnum.random if cfg.random else GeneratorTypeEnum.inconsistent
        schema = GeneratorSpecSchema(type=kind, seed=cfg.seed)
    else:
        try:
            with open(cfg.table) as f:
                schema = GeneratorSpecSchema(type=GeneratorTypeEnum.table, table=json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise BadSpec(f"cannot read table {cfg.table}: {e}")
    if cfg.flip:
        try:
            edges = json.loads(cfg.flip)
        except json.JSONDecodeError:
            raise BadSpec("--flip takes a JSON list of [point, point] edges")
        schema = GeneratorSpecSchema(type=GeneratorTypeEnum.mutated, base=schema, flipped_edges=edges)
    return schema


def cmd_generate(cfg: RunConfig) -> int:
    grid = _grid_from_config(cfg)
    sigma = generate(grid, generator_from_schema(grid, _generator_schema(cfg, grid)))
    if cfg.materialize:
        sigma = generate(grid, ExplicitTable.of(sigma.table()))
    write_json(cfg.output, dumps(instance_to_schema(grid, sigma)))

    stream = sys.stdout if cfg.output not in (None, "-") else sys.stderr
    if grid.vertex_count > settings.ORACLE_MAX_VERTICES and cfg.guard:
        print("classification: skipped (grid above the oracle guard)", file=stream)
    elif is_uso(grid, sigma, guard=cfg.guard):
        print("classification: USO, sink %s" % [grid.original_label(c) for c in sink_of(grid, sigma)], file=stream)
    else:
        cert = find_violation_bruteforce(grid, sigma, guard=cfg.guard)
        print("classification: violation %s" % dumps(certificate_to_schema(grid, cert)), file=stream)
    return EXIT_SINK


def cmd_solve(cfg: RunConfig) -> int:
    loaded = load_instance(cfg.instance)
    grid, sigma = loaded.grid, loaded.sigma
    answer = None
    walk_steps = None
    trace_lines: List[str] = []

    if cfg.via_eopl:
        inst = build_instance(grid, sigma)
        walk = walk_line(inst, record_costs=cfg.trace is not None)
        answer = UF1(walk.end_node)
        walk_steps = walk.steps
        cert = map_solution(grid, sigma, answer, guard=cfg.guard)
        for step, c in enumerate(walk.cost_trace or []):
            trace_lines.append(json.dumps({"step": step, "cost": format(c, "x")}))
        answer = answer_to_schema(inst, answer)
    else:
        result = find_sink(grid, sigma, guard=cfg.guard)
        cert = GU1(result.point) if isinstance(result, Sink) else result.certificate
        for step in result.trace:
            record = TraceRecord(
                depth=step.depth,
                direction=grid.original_label(step.direction),
                point=[grid.original_label(c) for c in step.point],
                action=step.action.value,
                frame=[[grid.original_label(k) for k in r] for r in step.frame],
            )
            trace_lines.append(dumps(record))

    verified = verify_certificate(grid, sigma, cert)
    logger.info("%s path returned %s after %d outmap calls", "via-eopl" if cfg.via_eopl else "direct", cert, sigma.calls)
    if not verified:
        raise NoViolationFound(f"solver produced a certificate that does not verify: {cert}")
    schema = certificate_to_schema(grid, cert)
    write_json(cfg.output, dumps(schema))
    if cfg.trace:
        with open(cfg.trace, "w") as f:
            f.write("".join(line + "\n" for line in trace_lines))
    if cfg.report:
        report = SolveReport(
            path="via-eopl" if cfg.via_eopl else "direct",
            certificate=schema,
            verified=verified,
            outmap_calls=sigma.calls,
            answer=answer,
            walk_steps=walk_steps,
        )
        write_json(cfg.report, dumps(report))
    return EXIT_SINK if isinstance(cert, GU1) else EXIT_VIOLATION


def cmd_verify(cfg: RunConfig) -> int:
    loaded = load_instance(cfg.instance)
    cert = load_certificate(cfg.certificate, loaded.grid)
    ok = verify_certificate(loaded.grid, loaded.sigma, cert)
    print("certificate %s: %s" % (cert.type.value, "valid" if ok else "invalid"))
    return EXIT_SINK if ok else EXIT_VIOLATION


def cmd_reduce(cfg: RunConfig) -> int:
    loaded = load_instance(cfg.instance)
    inst = build_instance(loaded.grid, loaded.sigma)
    inst.check_preconditions()
    write_json(cfg.output, dumps(manifest_to_schema(loaded.grid, loaded.sigma, inst)))
    if cfg.dump_nodes:
        nodes = sorted(inst.candidates())
        with open(cfg.dump_nodes, "w") as f:
            for v in nodes:
                dump = NodeDumpSchema(node=inst.hex(v), succ=inst.hex(inst.succ(v)), cost=format(inst.cost(v), "x"))
                f.write(dumps(dump) + "\n")
    if cfg.table_out:
        if cfg.guard and inst.d_bits > settings.ENUM_MAX_BITS:
            raise InstanceTooLarge(f"{inst.d_bits}-bit nodes exceed the table guard of {settings.ENUM_MAX_BITS} bits")
        write_json(cfg.table_out, dumps(table_instance_to_schema(inst)))
    return EXIT_SINK


def cmd_walk(cfg: RunConfig) -> int:
    inst = load_table_instance(cfg.instance)
    walk = walk_line(inst)
    logger.info("walked %d steps to node %s", walk.steps, inst.hex(walk.end_node))
    lines = [dumps(answer_to_schema(inst, UF1(walk.end_node)))]
    if cfg.enumerate:
        answers = enumerate_answers(inst, guard=cfg.guard)
        lines = [dumps(answer_to_schema(inst, a)) for a in answers.uf1 + answers.ufv1 + answers.ufv2]
    write_json(cfg.output, "\n".join(lines))
    return EXIT_SINK


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.blocks:
        raise BadSpec("sweep needs --blocks")
    records, summary = run_sweep(
        parse_blocks(cfg.blocks),
        sample=cfg.sample,
        seed=cfg.seed,
        workers=cfg.workers,
        single_line=cfg.single_line,
    )
    write_json(cfg.output, "\n".join(dumps(r) for r in records))
    if cfg.summary:
        write_json(cfg.summary, dumps(summary))
    else:
        print(dumps(summary), file=sys.stderr)
    return EXIT_SINK if summary.ok else EXIT_SWEEP_FAILURE


def cmd_export_dot(cfg: RunConfig) -> int:
    loaded = load_instance(cfg.instance)
    if cfg.line:
        text = line_dot(build_instance(loaded.grid, loaded.sigma), guard=cfg.guard)
    else:
        text = orientation_dot(loaded.grid, loaded.sigma, guard=cfg.guard)
    write_json(cfg.output, text)
    return EXIT_SINK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "reduce": cmd_reduce,
    "walk": cmd_walk,
    "sweep": cmd_sweep,
    "export-dot": cmd_export_dot,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="usolab", description="Grid unique sink orientations and their reduction to Unique Forward EOPL")
    parser.add_argument("--unsafe", action="store_true", help="Disable the oracle and enumeration size guards")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Write a grid instance")
    gen.add_argument("--blocks", help="Block sizes, e.g. 2,2,3")
    gen.add_argument("--partition", help="Explicit partition as JSON, e.g. [[1,3],[2,4]]")
    gen.add_argument("--product", help="Product USO: ascending, descending or JSON per-block orders")
    gen.add_argument("--random", action="store_true", help="Uniformly random consistent orientation")
    gen.add_argument("--inconsistent", action="store_true", help="Arbitrary outmap sets per point")
    gen.add_argument("--table", help="JSON file mapping point keys to outgoing directions")
    gen.add_argument("--flip", help="JSON list of edges to flip on top of the generator")
    gen.add_argument("--materialize", action="store_true", help="Write an explicit table instead of the generator")
    gen.add_argument("--seed", type=int)
    gen.add_argument("-o", "--output")

    solve = sub.add_parser("solve", help="Find a sink or a violation certificate")
    solve.add_argument("instance")
    path = solve.add_mutually_exclusive_group()
    path.add_argument("--direct", action="store_true", help="Run the recursive sink search (default)")
    path.add_argument("--via-eopl", action="store_true", help="Walk the reduced instance and map the answer back")
    solve.add_argument("--trace", help="Write the step trace as line-delimited JSON")
    solve.add_argument("--report", help="Write a JSON solve report")
    solve.add_argument("-o", "--output")

    verify = sub.add_parser("verify", help="Check a certificate against an instance")
    verify.add_argument("instance")
    verify.add_argument("certificate")

    reduce = sub.add_parser("reduce", help="Write the reduced instance manifest")
    reduce.add_argument("instance")
    reduce.add_argument("--dump-nodes", help="Write every node with successor and cost as hex")
    reduce.add_argument("--table", dest="table_out", help="Write the full successor and cost tables (small instances only)")
    reduce.add_argument("-o", "--output")

    walk = sub.add_parser("walk", help="Walk a table instance from the all-zeros node")
    walk.add_argument("instance")
    walk.add_argument("--enumerate", action="store_true", help="List every answer instead of the end of the line")
    walk.add_argument("-o", "--output")

    sweep = sub.add_parser("sweep", help="Classify every orientation of a small grid and check all invariants")
    sweep.add_argument("--blocks", required=True)
    sweep.add_argument("--sample", type=int, help="Sample this many orientations instead of all")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--single-line", action="store_true", help="Also enumerate every reduced USO instance")
    sweep.add_argument("--summary", help="Write the summary here instead of stderr")
    sweep.add_argument("-o", "--output", help="Line-delimited records (stdout by default)")

    dot = sub.add_parser("export-dot", help="Render an orientation or its reduced line as dot")
    dot.add_argument("instance")
    dot.add_argument("--line", action="store_true", help="Render the reduced instance's node graph")
    dot.add_argument("-o", "--output")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    options = {k: v for k, v in vars(args).items() if k != "direct" and v is not None}
    cfg = RunConfig(**options)
    setup_logging("DEBUG" if cfg.verbose else None)
    try:
        return COMMANDS[cfg.command](cfg)
    except UsoLabError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: invalid input: {e.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
