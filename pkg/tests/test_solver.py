import math
import random
from dataclasses import replace

import pytest

from gccd.model import (
    UP,
    ConstraintGraph,
    Edge,
    Segmentation,
    Signal,
    Vertex,
    evaluate_constraint,
    objective,
    two_state_graph,
)
from gccd.pwq import InfeasibleModel
from gccd.solver import backtrack, best_end, extract_peaks, forward, solve, solve_with_value
from oracles import enumerate_cost, grid_dp_cost, random_graph

SINGLE = ConstraintGraph((Vertex(0, "A"),))


def scaled(graph, gap_factor=1.0, penalty_factor=1.0):
    return ConstraintGraph(
        graph.vertices,
        tuple(replace(e, gap=e.gap * gap_factor, penalty=e.penalty * penalty_factor) for e in graph.edges),
    )


def continuous_graph(rng):
    g = random_graph(rng)
    return ConstraintGraph(
        g.vertices, tuple(replace(e, gap=rng.uniform(0.1, 3.0), penalty=rng.uniform(0.1, 10.0)) for e in g.edges)
    )


def test_constant_signal_single_vertex():
    seg = solve(Signal((4, 4, 4, 4), rate=1), SINGLE)
    assert seg.boundaries == () and seg.segment_means == (4.0,) and seg.total_cost == 0.0


def test_step_with_two_state_graph():
    # brute-force grid oracle gives cost 1 with the change after sample 3
    z = [0, 0, 0, 5, 5, 5]
    g = two_state_graph(1.0, 1.0)
    seg, value = solve_with_value(z, g)
    assert seg.boundaries == (3,)
    assert seg.segment_means == pytest.approx((0.0, 5.0))
    assert seg.segment_states == (0, 1)
    assert seg.total_cost == pytest.approx(1.0) and value == pytest.approx(1.0)
    assert abs(grid_dp_cost(z, g) - 1.0) < 1e-9


def test_huge_penalty_keeps_one_segment():
    z = [0, 0, 0, 5, 5, 5]
    g = two_state_graph(1.0, 1e6)
    seg = solve(z, g)
    assert seg.boundaries == ()
    assert seg.segment_means == pytest.approx((2.5,))
    assert seg.total_cost == pytest.approx(37.5)
    assert grid_dp_cost(z, g) == pytest.approx(37.5, abs=1e-5)


def test_single_sample():
    seg = solve([3.25], two_state_graph(1, 1))
    assert seg.boundaries == () and seg.segment_means == (3.25,)


def test_tie_prefers_latest_changepoint():
    # [0],[2,4] and [0,2],[4] both cost 4.5 with a zero-gap self loop
    g = ConstraintGraph((Vertex(0, "A"),), (Edge(0, 0, 0, UP, 0.0, 2.5),))
    seg = solve([0, 2, 4], g)
    assert seg.boundaries == (2,)
    assert seg.total_cost == 4.5


def test_backtrack_from_explicit_end_choice():
    state = forward([0, 0, 0, 5, 5, 5], two_state_graph(1, 1))
    vid, mu, value = best_end(state)
    seg = backtrack(state, (vid, mu))
    assert seg.boundaries == (3,)
    assert abs(objective(state.samples, seg, state.graph) - value) <= 1e-9 * value


def test_start_and_end_restrictions():
    g = two_state_graph(1.0, 1.0)
    seg = solve([0, 0, 0, 5, 5, 5], g, start_states={1}, end_states={1})
    assert seg.segment_states[0] == 1 and seg.segment_states[-1] == 1


def test_infeasible_start_end():
    # from A the only way to end in R is one up change of >= 50, outside the mean domain
    with pytest.raises(InfeasibleModel):
        solve([0, 1, 0], two_state_graph(50.0, 1.0), start_states={0}, end_states={1})


def test_nan_rejected():
    with pytest.raises(ValueError):
        solve([0.0, math.nan], SINGLE)


def test_invalid_graph_rejected():
    g = two_state_graph(1, 1).replace_edge(0, penalty=-1.0)
    with pytest.raises(ValueError):
        solve([1, 2], g)


@pytest.mark.parametrize(
    "states, expected",
    [
        ([0, 0, 1, 1, 1, 0], [4]),
        ([0, 0, 0, 0], []),
        ([0, 0, 1, 1, 1, 0, 0, 0, 1, 1], [4, 9]),
    ],
)
def test_extract_peaks(states, expected):
    bounds, seg_states = [], [states[0]]
    for i in range(1, len(states)):
        if states[i] != states[i - 1]:
            bounds.append(i)
            seg_states.append(states[i])
    seg = Segmentation(tuple(bounds), (0.0,) * len(seg_states), tuple(seg_states), (0,) * len(bounds), 0.0, len(states))
    assert extract_peaks(seg, 1) == expected


def test_matches_grid_oracle_on_small_instances():
    rng = random.Random(2024)
    for _ in range(150):
        g = random_graph(rng)
        z = [rng.randint(0, 9) for _ in range(rng.randint(1, 12))]
        seg, value = solve_with_value(z, g)
        ref = grid_dp_cost(z, g)
        assert abs(ref - value) <= 3 * len(z) * 1e-3
        assert abs(seg.total_cost - value) <= 1e-9 * (1 + value)
        for k, eid in enumerate(seg.edge_trace):
            e = g.edge(eid)
            assert (seg.segment_states[k], seg.segment_states[k + 1]) == (e.source, e.target)
            assert evaluate_constraint(e, seg.segment_means[k], seg.segment_means[k + 1]) <= 1e-9


def test_matches_exhaustive_enumeration():
    rng = random.Random(99)
    for _ in range(25):
        g = random_graph(rng)
        z = [rng.randint(0, 9) for _ in range(rng.randint(1, 6))]
        _, value = solve_with_value(z, g)
        assert abs(enumerate_cost(z, g) - value) <= 3 * len(z) * 1e-2


def _same_structure(a, b):
    return a.boundaries == b.boundaries and a.segment_states == b.segment_states


def test_offset_equivariance():
    rng = random.Random(5)
    for _ in range(40):
        g = continuous_graph(rng)
        z = [rng.uniform(0, 9) for _ in range(rng.randint(1, 25))]
        k = rng.uniform(-100, 100)
        a, b = solve(z, g), solve([x + k for x in z], g)
        assert _same_structure(a, b)
        assert all(abs(m + k - n) <= 1e-9 * (1 + abs(n)) for m, n in zip(a.segment_means, b.segment_means))


def test_scale_equivariance():
    rng = random.Random(6)
    for _ in range(40):
        g = continuous_graph(rng)
        z = [rng.uniform(0, 9) for _ in range(rng.randint(1, 25))]
        alpha = rng.uniform(0.2, 5.0)
        a = solve(z, g)
        b = solve([x * alpha for x in z], scaled(g, alpha, alpha * alpha), margin=alpha)
        assert _same_structure(a, b)
        assert all(abs(m * alpha - n) <= 1e-9 * (1 + abs(n)) for m, n in zip(a.segment_means, b.segment_means))


def test_penalty_monotonicity_empirical():
    rng = random.Random(8)
    for _ in range(150):
        g = random_graph(rng)
        z = [rng.randint(0, 9) for _ in range(rng.randint(1, 12))]
        factor = rng.choice([1.0, 1.5, 2.0, 10.0])
        assert len(solve(z, scaled(g, penalty_factor=factor)).boundaries) <= len(solve(z, g).boundaries)
