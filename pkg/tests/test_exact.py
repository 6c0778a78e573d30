import itertools
import json
import time

import numpy as np
import pytest

from orienteer import (
    CutLimitError,
    FlowAssignment,
    InvalidInputError,
    Instance,
    check_feasible,
    dp_optimal,
    greedy_build,
    lazy_sec_loop,
    trajectory_to_flow,
)
from orienteer.bench import generate_instance, half_reach_budget
from orienteer.exact import (
    SecCut,
    branch_and_bound,
    build_model,
    find_subtours,
    highs_round,
    solve_lp_relaxation,
)
from orienteer.model import Trajectory

BACKENDS = ["builtin", "highs"]

# LP relaxation of the 4-node example at D_max = 3.5 before any cut: 15 - 4*sqrt(2)
FOUR_NODE_ROOT_LP = 9.34314575050762


def two_node(budget):
    return Instance(((0, 0), (1, 0)), (2, 7), 0, 60.0, budget)


def test_model_counts_for_three_nodes():
    inst = generate_instance(3, 0, budget_min=5.0)
    model = build_model(inst)
    tm = inst.time_matrix()
    assert model.num_vars == 6
    assert model.A_eq.shape == (3, 6)
    assert model.A_deg.shape == (7, 6)
    assert model.A_ub.shape == (8, 6)
    assert not model.cuts
    assert model.times.tolist() == [tm.t[i, j] for i, j in model.arcs]


def test_every_arc_in_one_out_cap_and_one_in_cap():
    model = build_model(generate_instance(5, 1, budget_min=3.0))
    n = model.n
    assert np.all(model.A_deg[:n].sum(axis=0) == 1)
    assert np.all(model.A_deg[n : 2 * n].sum(axis=0) == 1)


def test_objective_pays_score_of_the_tail_node(four_node):
    model = build_model(four_node)
    for k, (i, _) in enumerate(model.arcs):
        assert model.c[k] == four_node.scores[i]


def test_single_node_model_is_empty():
    model = build_model(Instance(((0, 0),), (0,), budget_min=1.0))
    assert model.num_vars == 0
    res = branch_and_bound(model)
    assert res.objective == 0 and res.flow.f.sum() == 0


def test_two_nodes_out_of_budget():
    res = branch_and_bound(build_model(two_node(1.9)))
    assert res.objective == 0
    assert res.flow.f.sum() == 0


def test_two_nodes_generous_budget():
    model = build_model(two_node(5.0))
    lp = solve_lp_relaxation(model)
    assert lp.objective == pytest.approx(9.0, abs=1e-9)
    res = branch_and_bound(model)
    assert res.objective == 9.0
    assert res.flow.arcs() == [(0, 1), (1, 0)]


def test_integral_root_needs_one_node():
    res = branch_and_bound(build_model(two_node(5.0)))
    assert res.nodes_explored == 1


def test_prune_does_not_change_the_root_bound(four_node):
    a = solve_lp_relaxation(build_model(four_node, prune=True))
    b = solve_lp_relaxation(build_model(four_node, prune=False))
    assert a.objective >= 8
    assert a.objective == pytest.approx(FOUR_NODE_ROOT_LP, abs=1e-9)
    assert b.objective == pytest.approx(FOUR_NODE_ROOT_LP, abs=1e-9)


def test_root_bound_matches_highs(four_node):
    from scipy.optimize import linprog

    model = build_model(four_node)
    ref = linprog(-model.c, A_ub=model.A_ub, b_ub=model.b_ub, A_eq=model.A_eq, b_eq=model.b_eq,
                  bounds=list(zip(np.zeros(model.num_vars), model.upper)), method="highs")
    assert -ref.fun == pytest.approx(FOUR_NODE_ROOT_LP, abs=1e-9)


def test_four_node_integer_optimum(four_node):
    res = branch_and_bound(build_model(four_node))
    assert res.objective == 8


def test_cut_row_and_validation():
    cut = SecCut((3, 2, 3))
    assert cut.node_set == (2, 3)
    assert cut.rhs == 1
    with pytest.raises(InvalidInputError):
        SecCut((4,))
    model = build_model(generate_instance(5, 0, budget_min=3.0))
    with pytest.raises(InvalidInputError):
        model.add_cut(SecCut((0, 1)))
    assert model.add_cut(cut)
    assert not model.add_cut(SecCut((2, 3)))
    assert len(model.cuts) == 1
    row = model.A_ub[-1]
    assert {tuple(model.arcs[k]) for k in np.flatnonzero(row)} == {(2, 3), (3, 2)}
    assert model.b_ub[-1] == 1


def test_find_subtours_single_tour():
    assert find_subtours(trajectory_to_flow(Trajectory((6, 4, 2, 3, 6)), 7), 6) == []


def test_find_subtours_zero_flow():
    assert find_subtours(FlowAssignment.zeros(5), 0) == []


def test_find_subtours_detached_pair():
    f = np.zeros((4, 4), dtype=int)
    f[0, 1] = f[1, 0] = f[2, 3] = f[3, 2] = 1
    cuts = find_subtours(FlowAssignment(f), 0)
    assert cuts == [SecCut((2, 3))]
    flow = FlowAssignment(f)
    assert cuts[0].lhs(flow) == 2 > cuts[0].rhs


def all_sec_objective(inst):
    model = build_model(inst)
    others = [v for v in inst.nodes if v != inst.depot]
    for k in range(2, len(others) + 1):
        for S in itertools.combinations(others, k):
            model.add_cut(SecCut(S))
    return branch_and_bound(model).objective


def test_seed7_six_nodes_full_sec_set():
    inst = generate_instance(6, 7)
    inst = inst.with_budget(half_reach_budget(inst))
    assert all_sec_objective(inst) == pytest.approx(dp_optimal(inst)[1], abs=1e-9)


@pytest.mark.parametrize("seed", range(12))
def test_lazy_equals_full_sec_model(seed):
    n = 3 + seed % 6
    inst = generate_instance(n, 500 + seed)
    inst = inst.with_budget(half_reach_budget(inst) * (1 + (seed % 3) / 2))
    _, report = lazy_sec_loop(inst)
    assert report.best_objective == pytest.approx(all_sec_objective(inst), abs=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_two_nodes_one_round(backend):
    traj, report = lazy_sec_loop(two_node(5.0), backend=backend)
    assert traj.order == (0, 1, 0)
    assert report.cut_rounds == 1
    assert report.cuts_added == 0


@pytest.mark.parametrize("backend", BACKENDS)
def test_four_node_lazy(four_node, backend):
    traj, report = lazy_sec_loop(four_node, backend=backend)
    assert report.best_objective == 8
    assert set(traj.visited) == {1, 2}
    assert report.cut_rounds >= 1
    assert report.status == "optimal"


def test_two_cluster_needs_exactly_one_cut(two_cluster):
    traj, report = lazy_sec_loop(two_cluster, backend="builtin")
    assert report.cut_rounds == 2
    assert report.rounds[0]["subtours"] == [[1, 2]]
    assert report.bound_history == pytest.approx([22.0, 12.0])
    assert report.best_objective == 12
    assert set(traj.visited) == {1, 2}
    assert dp_optimal(two_cluster)[1] == 12


def test_edge_program_never_closes_two_node_cycles(two_cluster):
    traj, report = lazy_sec_loop(two_cluster, backend="highs")
    assert report.cut_rounds == 1
    assert report.best_objective == 12
    assert set(traj.visited) == {1, 2}


def triangle_cluster():
    # three cheap nodes far east, one heavy node west; the free triangle tempts round one
    return Instance(((0, 0), (1, 0), (1, 0.05), (1.05, 0.02), (-1, 0)), (0, 6, 6, 6, 10), 0, 60.0, 2.2)


def test_triangle_cluster_on_edges_needs_one_cut():
    inst = triangle_cluster()
    _, report = lazy_sec_loop(inst, backend="highs")
    assert report.cut_rounds == 2
    assert report.rounds[0]["subtours"] == [[1, 2, 3]]
    assert report.bound_history == pytest.approx([28.0, 18.0])
    assert report.best_objective == 18 == dp_optimal(inst)[1]


def test_triangle_cluster_on_arcs_also_cuts_each_pair():
    # after the triangle is cut, each 2-cycle inside it (10 + 6 + 6) is found in turn
    inst = triangle_cluster()
    _, report = lazy_sec_loop(inst, backend="builtin")
    assert report.rounds[0]["subtours"] == [[1, 2, 3]]
    assert sorted(tuple(r["subtours"][0]) for r in report.rounds[1:4]) == [(1, 2), (1, 3), (2, 3)]
    assert report.bound_history == pytest.approx([28.0, 22.0, 22.0, 22.0, 18.0])
    assert report.best_objective == 18


def test_asymmetric_times_use_the_arc_program(four_node):
    model = build_model(four_node)
    k = model.arc_index[1, 2]
    model.times[k] += 0.05
    assert highs_round(model).objective == branch_and_bound(model).objective == 8


def test_edge_program_flow_is_a_directed_tour():
    inst = generate_instance(12, 4)
    inst = inst.with_budget(half_reach_budget(inst) * 1.5)
    model = build_model(inst)
    res = highs_round(model)
    assert res.flow.is_balanced()
    assert model.is_feasible_point(model.vector_from_flow(res.flow))
    assert res.objective == pytest.approx(res.flow.objective(inst.scores))


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("seed", range(25))
def test_lazy_matches_oracle(seed, backend):
    n = 2 + seed % 9
    inst = generate_instance(n, 2000 + seed)
    inst = inst.with_budget(half_reach_budget(inst) * (0.7 + (seed % 4) * 0.4))
    traj, report = lazy_sec_loop(inst, backend=backend)
    _, best = dp_optimal(inst)
    assert report.best_objective == pytest.approx(best, abs=1e-6)
    assert traj.total_score == report.best_objective
    assert check_feasible(traj, inst)
    hist = report.bound_history
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))
    assert hist[-1] >= report.best_objective - 1e-6
    assert report.best_objective >= greedy_build(inst)[0].total_score - 1e-9
    seen = [tuple(s) for r in report.rounds for s in r["subtours"]]
    assert len(seen) == len(set(seen))


def test_bland_rule_gives_same_answer():
    inst = generate_instance(7, 3)
    inst = inst.with_budget(half_reach_budget(inst))
    a = lazy_sec_loop(inst, rule="bland")[1].best_objective
    b = lazy_sec_loop(inst, rule="dantzig")[1].best_objective
    assert a == b


def test_round_log_fields(four_node, tmp_path):
    _, report = lazy_sec_loop(four_node)
    path = tmp_path / "log.jsonl"
    with open(path, "w") as fh:
        report.write_log(fh)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(rows) == report.cut_rounds
    assert {"round", "relaxed_objective", "cuts_added", "nodes_explored", "elapsed_s"} <= set(rows[0])


@pytest.mark.parametrize("backend", BACKENDS)
def test_expired_deadline_returns_incumbent(backend):
    inst = generate_instance(30, 1, budget_min=4.0)
    start = time.monotonic()
    traj, report = lazy_sec_loop(inst, time_limit=1e-6, backend=backend)
    assert time.monotonic() - start < 5
    assert report.status == "time_limit"
    assert check_feasible(traj, inst)
    assert traj.total_score == greedy_build(inst)[0].total_score


def test_branch_and_bound_deadline():
    model = build_model(generate_instance(15, 2, budget_min=3.0))
    res = branch_and_bound(model, deadline=time.monotonic() - 1)
    assert res.status == "time_limit"


def test_highs_round_agrees_with_builtin(four_node):
    model = build_model(four_node)
    assert highs_round(model).objective == branch_and_bound(model).objective


def test_fault_injection_keeps_subtour(two_cluster):
    traj, report = lazy_sec_loop(two_cluster, separate=False)
    assert report.status == "unverified"
    assert report.best_objective == 22
    assert report.rounds[0]["subtours"] == [[1, 2]]
    assert check_feasible(traj, two_cluster)


def test_round_limit(two_cluster):
    with pytest.raises(CutLimitError):
        lazy_sec_loop(two_cluster, max_rounds=1)


def test_unknown_backend(four_node):
    with pytest.raises(InvalidInputError):
        lazy_sec_loop(four_node, backend="gurobi")
