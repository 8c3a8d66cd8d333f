"""
Render orientations and reduced lines as graphviz dot text.

    usolab export-dot instance.json -o grid.gv
    dot -Tpng -O grid.gv

Nodes are emitted in sorted order so the output is byte-deterministic.
"""
from typing import List, Optional

from config import settings
from errors import GridTooLarge, InstanceTooLarge
from grid_core import neighbors
from models import Grid, Outmap, Point
from ufeopl import UfeoplInstance


def point_name(grid: Grid, p: Point) -> str:
    labels = [str(grid.original_label(c)) for c in p]
    return "".join(labels) if grid.n < 10 else ",".join(labels)


def orientation_dot(grid: Grid, sigma: Outmap, guard: bool = True) -> str:
    """Directed grid graph; sinks are double circles, self-loops and doubly claimed edges are red."""
    if guard and grid.vertex_count > settings.ORACLE_MAX_VERTICES:
        raise GridTooLarge(f"{grid.vertex_count} vertices exceed the export guard of {settings.ORACLE_MAX_VERTICES}")
    table = sigma.table()
    lines = ["digraph orientation {", "\tgraph [rankdir=LR];", "\tnode [shape=circle];"]
    for p in sorted(table):
        name = point_name(grid, p)
        if not table[p]:
            lines.append('\t"%s" [label="%s", shape=doublecircle];' % (name, name))
        elif table[p] & set(p):
            lines.append('\t"%s" [label="%s", color=red];' % (name, name))
        else:
            lines.append('\t"%s" [label="%s"];' % (name, name))
    for p in sorted(table):
        name = point_name(grid, p)
        for k in sorted(table[p] & set(p)):
            lines.append('\t"%s" -> "%s" [color=red, label="%d"];' % (name, name, grid.original_label(k)))
        for q, k in neighbors(grid, p):
            if k not in table[p]:
                continue
            j = grid.block_of(k)
            style = " [color=red]" if p[j] in table[q] else ""
            lines.append('\t"%s" -> "%s"%s;' % (name, point_name(grid, q), style))
    lines.append("}")
    return "\n".join(lines)


def line_dot(inst: UfeoplInstance, nodes: Optional[List[int]] = None, guard: bool = True) -> str:
    """Node graph of a reduced instance: an edge v -> S(v) whenever the cost strictly increases.

    Fixed points reached from a node (finished or violation states) are drawn as boxes.
    """
    if guard and inst.d_bits > settings.ENUM_MAX_BITS:
        raise InstanceTooLarge(f"{inst.d_bits}-bit instance exceeds the export guard of {settings.ENUM_MAX_BITS} bits")
    if nodes is None:
        source = inst.candidates() if inst.candidates is not None else range(1 << inst.d_bits)
        nodes = sorted(v for v in set(source) if inst.succ(v) != v)
    node_set = set(nodes)
    terminals = sorted({inst.succ(v) for v in nodes} - node_set)

    lines = ["digraph line {", "\tgraph [rankdir=LR];"]
    for v in nodes:
        lines.append('\t"%s" [label="%s\\nc=%d"];' % (inst.hex(v), inst.hex(v), inst.cost(v)))
    for v in terminals:
        lines.append('\t"%s" [label="%s\\nc=%d", shape=box];' % (inst.hex(v), inst.hex(v), inst.cost(v)))
    for v in nodes:
        s = inst.succ(v)
        if inst.cost(s) > inst.cost(v):
            lines.append('\t"%s" -> "%s";' % (inst.hex(v), inst.hex(s)))
    lines.append("}")
    return "\n".join(lines)
