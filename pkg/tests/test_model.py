import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orienteer import (
    FlowAssignment,
    InconsistentFlowError,
    Instance,
    InvalidInputError,
    SubtourError,
    TimeMatrix,
    Trajectory,
    check_feasible,
    flow_to_trajectory,
    tour_score,
    tour_time,
    trajectory_to_flow,
    travel_time_matrix,
)

coord = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_one_km_at_sixty_is_one_minute():
    tm = travel_time_matrix([(0, 0), (1, 0)], 60)
    assert tm.t[0, 1] == 1.0
    assert tm.t[1, 0] == 1.0


def test_single_node_matrix_is_zero():
    tm = travel_time_matrix([(0, 0)], 70)
    assert tm.t.shape == (1, 1)
    assert tm.t[0, 0] == 0.0


def test_diagonal_hop_matches_high_precision():
    mpmath.mp.dps = 40
    expected = float(mpmath.sqrt(mpmath.mpf(2)) / 60 * 60)
    tm = travel_time_matrix([(0, 0), (1, 0), (0, 1)], 60)
    assert tm.t[1, 2] == pytest.approx(expected, abs=1e-12)
    assert tm.t[1, 2] == pytest.approx(1.41421356, abs=1e-8)


def test_squared_metric():
    tm = travel_time_matrix([(0, 0), (2, 0)], 60, metric="squared")
    assert tm.t[0, 1] == 4.0


@pytest.mark.parametrize(
    "coords, v",
    [([(0, 0), (math.nan, 1)], 60), ([(0, 0), (math.inf, 1)], 60), ([(0, 0)], 0), ([(0, 0)], -5)],
)
def test_matrix_rejects_bad_input(coords, v):
    with pytest.raises(InvalidInputError):
        travel_time_matrix(coords, v)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coord, coord), min_size=1, max_size=12), st.floats(1, 200))
def test_matrix_is_a_metric(coords, v):
    t = travel_time_matrix(coords, v).t
    assert np.array_equal(t, t.T)
    assert np.all(np.diag(t) == 0)
    assert np.all(t >= 0)
    # t[i,k] <= t[i,j] + t[j,k]
    slack = t[:, None, :] - (t[:, :, None] + t[None, :, :])
    assert slack.max() <= 1e-9 * (1 + t.max())


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(coords=(), scores=()),
        dict(coords=((0, 0),), scores=(1,), depot=1),
        dict(coords=((0, 0),), scores=(1,), velocity_kmh=0),
        dict(coords=((0, 0),), scores=(1,), budget_min=-1),
        dict(coords=((0, 0),), scores=(-1,)),
        dict(coords=((0, math.nan),), scores=(1,)),
        dict(coords=((0, 0), (1, 1)), scores=(1,)),
    ],
)
def test_instance_invariants(kwargs):
    with pytest.raises(InvalidInputError):
        Instance(**kwargs)


def test_out_and_back_doubles_one_leg(four_node):
    tm = four_node.time_matrix()
    assert tour_time(Trajectory((0, 1, 0)), tm) == 2.0


def test_depot_only_tour_takes_no_time(four_node):
    tm = four_node.time_matrix()
    assert tour_time(Trajectory((0,)), tm) == 0.0
    assert tour_time(Trajectory((0, 0)), tm) == 0.0


def test_triangle_tour_time(four_node):
    tm = four_node.time_matrix()
    assert tour_time(Trajectory((0, 1, 2, 0)), tm) == pytest.approx(2 + math.sqrt(2), abs=1e-12)


def test_tour_time_rejects_bad_ids(four_node):
    with pytest.raises(InvalidInputError):
        tour_time(Trajectory((0, 9, 0)), four_node.time_matrix())


def test_tour_score_examples(four_node):
    assert tour_score(Trajectory((0, 1, 0)), four_node) == 5
    assert tour_score(Trajectory((0,)), four_node) == 0
    assert tour_score(Trajectory((0, 1, 2, 0)), four_node) == 8
    with pytest.raises(InvalidInputError):
        tour_score(Trajectory((0, 7, 0)), four_node)


def test_depot_only_scores_zero_even_with_depot_score():
    inst = Instance(((0, 0), (1, 0)), (3, 1), budget_min=10)
    assert tour_score(Trajectory((0,)), inst) == 0
    assert tour_score(Trajectory((0, 1, 0)), inst) == 4


def test_check_feasible_examples(four_node):
    traj = Trajectory((0, 1, 2, 0))
    assert check_feasible(traj, four_node)
    assert check_feasible(Trajectory((0,)), four_node.with_budget(0))
    out = check_feasible(Trajectory((0, 1, 0)), four_node.with_budget(1.9))
    assert not out and out.reason == "over_budget"


@pytest.mark.parametrize(
    "order, reason",
    [((1, 0, 1), "not_depot_rooted"), ((0, 1, 1, 0), "repeated_node"), ((0, 1, 0, 2, 0), "repeated_node"),
     ((0, 5, 0), "id_out_of_range")],
)
def test_check_feasible_reports_malformed_tours(four_node, order, reason):
    out = check_feasible(Trajectory(order), four_node)
    assert not out
    assert out.reason == reason


def test_budget_tolerance(four_node):
    # 1 + sqrt2 + 1 under a budget a hair below it
    t = 2 + math.sqrt(2)
    assert check_feasible(Trajectory((0, 1, 2, 0)), four_node.with_budget(t - 5e-10))
    assert not check_feasible(Trajectory((0, 1, 2, 0)), four_node.with_budget(t - 5e-9))


def test_two_node_flow():
    f = np.zeros((2, 2), dtype=int)
    f[0, 1] = f[1, 0] = 1
    assert flow_to_trajectory(FlowAssignment(f), 0).order == (0, 1, 0)


def test_zero_flow_is_depot_only():
    assert flow_to_trajectory(FlowAssignment.zeros(4), 2).order == (2,)


def fig1_flow():
    f = np.zeros((7, 7), dtype=int)
    for i, j in [(6, 4), (4, 2), (2, 3), (3, 6)]:
        f[i, j] = 1
    return FlowAssignment(f)


def test_six_area_example_flow_to_tour():
    assert flow_to_trajectory(fig1_flow(), 6).order == (6, 4, 2, 3, 6)


def test_six_area_example_tour_to_flow():
    flow = trajectory_to_flow(Trajectory((6, 4, 2, 3, 6)), 7)
    assert flow.f.sum() == 4
    assert flow == fig1_flow()


def test_simple_tour_flows():
    flow = trajectory_to_flow(Trajectory((0, 1, 0)), 3)
    assert flow.arcs() == [(0, 1), (1, 0)]
    assert trajectory_to_flow(Trajectory((0,)), 3).f.sum() == 0


def test_tour_to_flow_rejects_repeats():
    with pytest.raises(InvalidInputError):
        trajectory_to_flow(Trajectory((0, 1, 2, 1, 0)), 3)


def test_detached_cycle_is_reported():
    f = np.zeros((5, 5), dtype=int)
    f[0, 1] = f[1, 0] = 1
    f[2, 3] = f[3, 2] = 1
    with pytest.raises(SubtourError) as err:
        flow_to_trajectory(FlowAssignment(f), 0)
    assert err.value.component == (2, 3)


def test_isolated_depot_with_active_arcs():
    f = np.zeros((4, 4), dtype=int)
    f[1, 2] = f[2, 1] = 1
    with pytest.raises(InconsistentFlowError):
        flow_to_trajectory(FlowAssignment(f), 0)


def test_unbalanced_flow_is_rejected():
    f = np.zeros((3, 3), dtype=int)
    f[0, 1] = 1
    with pytest.raises(InconsistentFlowError):
        flow_to_trajectory(FlowAssignment(f), 0)


@st.composite
def instance_and_tour(draw):
    n = draw(st.integers(1, 9))
    coords = draw(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=n, max_size=n))
    scores = draw(st.lists(st.floats(0, 10), min_size=n, max_size=n))
    depot = draw(st.integers(0, n - 1))
    others = [v for v in range(n) if v != depot]
    visit = draw(st.permutations(others))[: draw(st.integers(0, len(others)))]
    inst = Instance(tuple(coords), tuple(scores), depot, 70.0, 100.0)
    order = (depot, *visit, depot) if visit else (depot,)
    return inst, Trajectory(order)


@settings(max_examples=150, deadline=None)
@given(instance_and_tour())
def test_flow_round_trip_and_objective_agreement(case):
    inst, traj = case
    tm = inst.time_matrix()
    flow = trajectory_to_flow(traj, inst.n)
    assert flow.is_balanced()
    assert flow_to_trajectory(flow, inst.depot).order == traj.order
    assert tour_score(traj, inst) == flow.objective(inst.scores)
    assert tour_time(traj, tm) == pytest.approx(flow.travel_time(tm), abs=1e-9)


def test_instance_json_round_trip(four_node):
    text = four_node.dumps()
    data = json.loads(text)
    assert set(data) == {"velocity_kmh", "budget_min", "depot", "nodes"}
    assert set(data["nodes"][0]) == {"id", "x_km", "y_km", "score"}
    assert Instance.loads(text) == four_node


def test_instance_json_rejects_sparse_ids():
    data = {"velocity_kmh": 70, "budget_min": 1, "depot": 0,
            "nodes": [{"id": 0, "x_km": 0, "y_km": 0, "score": 0}, {"id": 2, "x_km": 1, "y_km": 0, "score": 1}]}
    with pytest.raises(InvalidInputError):
        Instance.from_dict(data)


def test_trajectory_json(four_node):
    traj = Trajectory.build((0, 1, 2, 0), four_node)
    assert traj.to_dict() == {"order": [0, 1, 2, 0], "time_min": 2 + math.sqrt(2), "score": 8.0}


def test_time_matrix_validation():
    with pytest.raises(InvalidInputError):
        TimeMatrix(np.zeros((2, 3)))
    with pytest.raises(InvalidInputError):
        TimeMatrix(-np.ones((2, 2)))
