"""Randomized equivalence against the exhaustive oracle (dev-scale suite).

The acceptance module runs the full 100-seed version with timing; this keeps
a quick slice in the regular suite so solver regressions surface fast.
"""
import pytest

from treeshift import (KAPPA_PATH, MAX_PATH, MIN_DISTANCE, MIN_PATH,
                       SolverConfig, brute_force_oracle, objectives_close,
                       solve, solve_min_distance, verify_solution)

from helpers import (assert_matches_oracle, make_random_instance,
                     make_weighted_distance_case, per_tree_value_chain)

SEEDS = range(25)


@pytest.mark.parametrize("seed", SEEDS)
def test_max_path_matches_oracle(seed):
    assert_matches_oracle(make_random_instance(seed), MAX_PATH)


@pytest.mark.parametrize("seed", SEEDS)
def test_min_path_matches_oracle(seed):
    assert_matches_oracle(make_random_instance(seed), MIN_PATH)


@pytest.mark.parametrize("seed", SEEDS)
def test_kappa_path_matches_oracle(seed):
    case = make_random_instance(seed)
    assert_matches_oracle(case, KAPPA_PATH, kappa=case.kappa, mu=case.mu)


@pytest.mark.parametrize("seed", SEEDS)
def test_min_distance_matches_oracle(seed):
    assert_matches_oracle(make_random_instance(seed), MIN_DISTANCE)


@pytest.mark.parametrize("seed", range(12))
def test_min_distance_weighted_matches_oracle(seed):
    forest, instance, weights, kind = make_weighted_distance_case(seed)
    config = SolverConfig(objective=MIN_DISTANCE, distance=kind, distance_weights=weights)
    sol = solve_min_distance(forest, instance, config)
    oracle = brute_force_oracle(forest, instance, None, config)
    assert sol.status == oracle.status
    if sol.status == "optimal":
        assert objectives_close(sol.objective, oracle.objective)
        verdict = verify_solution(forest, instance, None, sol, config)
        assert verdict.passed, verdict.failures


@pytest.mark.parametrize("seed", SEEDS)
def test_kappa_one_mu_zero_equals_min_path(seed):
    case = make_random_instance(seed)
    mn = solve(case.forest, case.instance, case.table, SolverConfig(objective=MIN_PATH))
    kp = solve(case.forest, case.instance, case.table,
               SolverConfig(objective=KAPPA_PATH, kappa=1, mu=0.0))
    assert mn.status == kp.status
    if mn.status == "optimal":
        assert mn.objective == kp.objective       # exact, same arithmetic
        assert mn.effort == kp.effort
        assert mn.essential_trees == kp.essential_trees


@pytest.mark.parametrize("seed", range(12))
def test_ordering_chain(seed):
    case = make_random_instance(seed)
    mn = solve(case.forest, case.instance, case.table, SolverConfig(objective=MIN_PATH))
    if mn.status != "optimal":
        return
    kp = solve(case.forest, case.instance, case.table,
               SolverConfig(objective=KAPPA_PATH, kappa=case.kappa_ord, mu=0.0))
    mx = solve(case.forest, case.instance, case.table, SolverConfig(objective=MAX_PATH))
    assert mn.objective <= kp.objective + 1e-12
    assert mn.objective <= mx.objective + 1e-12
    per_tree_value_chain(case, case.kappa_ord)


@pytest.mark.parametrize("seed", range(8))
def test_solves_are_deterministic(seed):
    case = make_random_instance(seed)
    for objective in (MAX_PATH, MIN_PATH, KAPPA_PATH, MIN_DISTANCE):
        kw = {"kappa": case.kappa, "mu": case.mu} if objective == KAPPA_PATH else {}
        a = solve(case.forest, case.instance, case.table, SolverConfig(objective=objective, **kw))
        b = solve(case.forest, case.instance, case.table, SolverConfig(objective=objective, **kw))
        assert (a.status, a.objective, a.effort, a.chosen_leaves, a.essential_trees, a.x) == \
               (b.status, b.objective, b.effort, b.chosen_leaves, b.essential_trees, b.x)


@pytest.mark.parametrize("seed", range(10))
def test_budget_monotonicity(seed):
    case = make_random_instance(seed)
    for objective in (MAX_PATH, MIN_PATH, KAPPA_PATH):
        kw = {"kappa": case.kappa_ord, "mu": 0.0} if objective == KAPPA_PATH else {}
        prev = None
        for eta in range(4):
            inst = type(case.instance)(x0=case.instance.x0,
                                       target_class=case.instance.target_class,
                                       eta=eta, E=case.instance.E)
            sol = solve(case.forest, inst, case.table, SolverConfig(objective=objective, **kw))
            if sol.status != "optimal":
                continue
            if prev is not None:
                assert sol.objective >= prev
            prev = sol.objective
        prev = None
        for E in range(3):
            inst = type(case.instance)(x0=case.instance.x0,
                                       target_class=case.instance.target_class,
                                       eta=case.instance.eta, E=E)
            sol = solve(case.forest, inst, case.table, SolverConfig(objective=objective, **kw))
            if sol.status != "optimal":
                continue
            if prev is not None:
                assert sol.objective >= prev
            prev = sol.objective
