import itertools

import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from config import settings
from errors import BudgetExceeded, GridTooLarge
from find_sink import extract_step2_certificate, find_sink
from grid_core import make_grid, verify_certificate
from models import GUV1, GUV2, Outmap, Sink, Step2Failure, Subgrid, TraceAction, Violation
from uso_lab import ProductUSO, RandomOrientation, generate, is_uso, refined_index_bijection_check, sink_of


class TestFindSinkOnUSOs:
    """Sink search on unique sink orientations."""

    def test_figure4(self, figure4_grid, figure4_sigma):
        result = find_sink(figure4_grid, figure4_sigma)
        assert isinstance(result, Sink)
        assert result.point == (1, 4, 7)
        assert figure4_sigma((1, 4, 7)) == frozenset()

    def test_sink_at_bottom_left(self, figure4_grid):
        """Every direction is skipped when the start point is already the sink."""
        sigma = generate(figure4_grid, ProductUSO(figure4_grid.blocks))
        result = find_sink(figure4_grid, sigma)
        assert result.point == (1, 3, 5)
        assert [step.action for step in result.trace] == [TraceAction.skip] * 7
        assert result.outmap_calls == 1

    def test_descending_product(self, figure4_grid):
        sigma = generate(figure4_grid, ProductUSO(tuple(tuple(reversed(b)) for b in figure4_grid.blocks)))
        assert find_sink(figure4_grid, sigma).point == (2, 4, 7)

    def test_trace_records_recursion(self, figure4_grid, figure4_sigma):
        result = find_sink(figure4_grid, figure4_sigma)
        actions = {step.action for step in result.trace}
        assert TraceAction.recurse in actions
        assert TraceAction.merge in actions
        assert TraceAction.violation not in actions
        assert result.trace[0].depth == 0
        assert max(step.depth for step in result.trace) >= 1

    def test_search_inside_subgrid(self, figure4_grid, figure4_sigma):
        """Searching the layer {5} returns the sink of that layer."""
        layer = Subgrid(figure4_grid, ((1, 2), (3, 4), (5,)))
        assert find_sink(layer, figure4_sigma).point == (1, 3, 5)

    def test_calls_are_counted_per_search(self, figure4_grid, figure4_sigma):
        figure4_sigma((2, 4, 6))
        result = find_sink(figure4_grid, figure4_sigma)
        assert result.outmap_calls == figure4_sigma.calls - 1

    def test_product_sink_is_first_in_every_order(self):
        """All 24 order choices on the 2,2,3 grid are USOs whose sink is the first element of each order."""
        grid = make_grid([2, 2, 3])
        choices = list(itertools.product(*(itertools.permutations(block) for block in grid.blocks)))
        assert len(choices) == 24
        for orders in choices:
            sigma = generate(grid, ProductUSO(orders))
            assert is_uso(grid, sigma), orders
            assert refined_index_bijection_check(grid, sigma) is True, orders
            assert find_sink(grid, sigma).point == tuple(o[0] for o in orders)

    @hyp_settings(max_examples=60, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32))
    def test_random_orientations(self, seed):
        """The answer always verifies; on a USO it is the unique sink."""
        grid = make_grid([2, 3])
        sigma = generate(grid, RandomOrientation(seed))
        result = find_sink(grid, sigma)
        if isinstance(result, Sink):
            assert sigma(result.point) == frozenset()
        else:
            assert verify_certificate(grid, sigma, result.certificate)
        if is_uso(grid, sigma):
            assert isinstance(result, Sink)
            assert result.point == sink_of(grid, sigma)


class TestFindSinkOnViolations:
    """Sink search on orientations that are not USOs."""

    def test_two_sinks_finds_one_of_them(self, grid_2x2, two_sinks):
        result = find_sink(grid_2x2, two_sinks)
        assert isinstance(result, Sink)
        assert result.point == (1, 3)

    def test_four_cycle_fails_merge(self, grid_2x2, four_cycle):
        """The merge at direction 4 fails and yields the (0,1) collision of the whole grid."""
        result = find_sink(grid_2x2, four_cycle)
        assert isinstance(result, Violation)
        assert result.certificate == GUV2(Subgrid.whole(grid_2x2), (1, 4), (2, 3))
        assert result.trace[-1].action == TraceAction.violation
        assert result.trace[-1].direction == 4

    def test_inconsistent_edge(self, grid_2x2, inconsistent_edge):
        result = find_sink(grid_2x2, inconsistent_edge)
        assert isinstance(result, Violation)
        assert result.certificate == GUV2(Subgrid(grid_2x2, ((1, 2), (3,))), (1, 3), (2, 3))
        assert result.trace[-1].direction == 2

    def test_self_loop_at_start(self, grid_2x2):
        sigma = Outmap.from_table(grid_2x2, {(1, 3): {3}, (1, 4): set(), (2, 3): set(), (2, 4): set()})
        result = find_sink(grid_2x2, sigma)
        assert result.certificate == GUV1((1, 3))

    def test_self_loop_in_child_frame(self, grid_2x2):
        """A self-loop at the start point of a slab ends the whole search."""
        sigma = Outmap.from_table(grid_2x2, {(1, 3): {2}, (2, 3): {2}, (1, 4): set(), (2, 4): set()})
        result = find_sink(grid_2x2, sigma)
        assert result.certificate == GUV1((2, 3))

    def test_budget(self, figure4_grid, figure4_sigma):
        with pytest.raises(BudgetExceeded):
            find_sink(figure4_grid, figure4_sigma, budget=1)


class TestExtractStep2Certificate:
    """Certificate extraction from failed merges."""

    def test_inconsistent_edge_stage(self, grid_2x2, inconsistent_edge):
        failure = Step2Failure((1, 3), (2, 3), 2, Subgrid.whole(grid_2x2))
        cert = extract_step2_certificate(failure, inconsistent_edge)
        assert cert == GUV2(Subgrid(grid_2x2, ((1, 2), (3,))), (1, 3), (2, 3))

    def test_search_stage(self, grid_2x2, four_cycle):
        failure = Step2Failure((2, 3), (1, 4), 4, Subgrid.whole(grid_2x2))
        cert = extract_step2_certificate(failure, four_cycle)
        assert verify_certificate(grid_2x2, four_cycle, cert)

    def test_fallback_search_respects_guard(self, grid_2x2, four_cycle, monkeypatch):
        """The brute-force stages raise on regions above the oracle guard unless the guard is lifted."""
        monkeypatch.setattr(settings, "ORACLE_MAX_VERTICES", 1)
        failure = Step2Failure((2, 3), (1, 4), 4, Subgrid.whole(grid_2x2))
        with pytest.raises(GridTooLarge):
            extract_step2_certificate(failure, four_cycle)
        with pytest.raises(GridTooLarge):
            find_sink(grid_2x2, four_cycle)
        result = find_sink(grid_2x2, four_cycle, guard=False)
        assert verify_certificate(grid_2x2, four_cycle, result.certificate)
