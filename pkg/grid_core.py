import logging
from typing import AbstractSet, List, Sequence, Tuple, Union

from errors import BlockTooSmall, EmptyBlock, NotAPartition, UsoLabError
from models import GU1, GUV1, GUV2, Certificate, Grid, Outmap, Point, RefinedIndex, Subgrid

logger = logging.getLogger(__name__)


def make_grid(blocks: Sequence[Union[int, Sequence[int]]]) -> Grid:
    """Build a canonical grid from block sizes or from an explicit partition of 1..n.

    Explicit partitions keep their block order and the listed order inside each block;
    directions are relabeled consecutively so every block becomes a contiguous ascending range.
    """
    if not blocks:
        raise EmptyBlock("a grid needs at least one block")

    if all(isinstance(b, int) for b in blocks):
        for size in blocks:
            if size <= 0:
                raise EmptyBlock(f"block size must be positive, got {size}")
            if size < 2:
                raise BlockTooSmall(f"every block needs at least 2 directions, got size {size}")
        partition = []
        start = 1
        for size in blocks:
            partition.append(list(range(start, start + size)))
            start += size
    else:
        partition = [list(b) for b in blocks]

    seen = set()
    for block in partition:
        if not block:
            raise EmptyBlock("blocks must be nonempty")
        if len(block) < 2:
            raise BlockTooSmall(f"every block needs at least 2 directions, got {block}")
        for k in block:
            if not isinstance(k, int) or k in seen:
                raise NotAPartition(f"direction {k!r} is repeated or not an integer")
            seen.add(k)
    n = len(seen)
    if seen != set(range(1, n + 1)):
        raise NotAPartition(f"blocks must cover 1..{n} exactly, got {sorted(seen)}")

    relabeling = {}
    canonical = []
    label = 1
    for block in partition:
        canonical_block = []
        for k in block:
            relabeling[k] = label
            canonical_block.append(label)
            label += 1
        canonical.append(tuple(canonical_block))
    return Grid(tuple(canonical), relabeling)


def neighbors(g: Grid, p: Point) -> List[Tuple[Point, int]]:
    """Every point differing from p in exactly one block, labeled by its direction there."""
    g.require(p)
    result = []
    for j, block in enumerate(g.blocks):
        for k in block:
            if k != p[j]:
                result.append((p[:j] + (k,) + p[j + 1:], k))
    return result


def induced_outmap(sub: Subgrid, sigma: Outmap) -> Outmap:
    directions = sub.direction_set
    return Outmap(sub.parent, lambda p: sigma(p) & directions, source=sigma.source, domain=sub)


def index_of(sub: Subgrid, out: AbstractSet[int]) -> RefinedIndex:
    """Refined index of a point in sub given its (unrestricted) outmap value."""
    return tuple(sum(1 for k in restriction if k in out) for restriction in sub.restrictions)


def refined_index(sub: Subgrid, sigma: Outmap, p: Point) -> RefinedIndex:
    sub.require(p)
    return index_of(sub, sigma(p))


def verify_certificate(g: Grid, sigma: Outmap, cert: Certificate) -> bool:
    """Check a certificate's defining condition with at most two outmap calls."""
    try:
        if isinstance(cert, GU1):
            return g.is_point(cert.p) and not sigma(cert.p)
        if isinstance(cert, GUV1):
            return g.is_point(cert.p) and bool(sigma(cert.p) & set(cert.p))
        if isinstance(cert, GUV2):
            sub = cert.sub
            if sub.parent != g or cert.p == cert.q:
                return False
            if not (sub.contains(cert.p) and sub.contains(cert.q)):
                return False
            return refined_index(sub, sigma, cert.p) == refined_index(sub, sigma, cert.q)
    except UsoLabError as e:
        logger.debug("certificate %r rejected: %s", cert, e.detail)
    return False
