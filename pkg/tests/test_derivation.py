from fractions import Fraction

import pytest

from almterm import (
    AlmtermError,
    LevelMapping,
    Q,
    QPLUS,
    SelectionRule,
    binarize,
    check_length_bound,
    decide,
    explore,
    feasible,
    normalize,
    parse_program,
    run_ground,
    state_from_query,
    step,
)
from almterm.derivation import (
    FAILURE,
    LEFTMOST,
    MAX_STEPS,
    RANDOM,
    compact_store,
    ground_start,
)
from almterm.model import equal, LinearExpr
from almterm.parser import parse_query
from helpers import load


def choose_named(rule_id):
    def chooser(rules):
        for r in rules:
            if r.rule_id == rule_id:
                return r
        raise AssertionError(f"no rule {rule_id} among candidates")

    return chooser


def golden_start():
    program = parse_program(load("example72.clp"))
    pool = program.pool.clone()
    state = ground_start(program, "p", [72], pool)
    return program, pool, state


def test_step_with_recursive_rule():
    program, pool, state = golden_start()
    sel = SelectionRule(LEFTMOST)
    nxt = step(program, state, sel, choose_named("r3"), pool)
    assert not nxt.failed
    assert [a.pred for a in nxt.goal] == ["p"]
    # the store entails y' = 73 for the new goal variable
    y = nxt.goal[0].args[0]
    pinned = normalize(list(nxt.store) + [equal(LinearExpr.of_var(y), 73)])
    assert feasible(pinned)
    off = normalize(list(nxt.store) + [equal(LinearExpr.of_var(y), 74)])
    assert not feasible(off)
    # conjoined store: start pin, one link equation, two rule constraints
    assert len(nxt.store) == len(state.store) + 1 + 2


def test_step_with_unsatisfiable_rule_fails():
    program, pool, state = golden_start()
    sel = SelectionRule(LEFTMOST)
    nxt = step(program, state, sel, choose_named("r2"), pool)
    assert nxt.failed and nxt.goal == ()


def test_step_with_fact_rule_fails_when_inconsistent():
    program, pool, state = golden_start()
    sel = SelectionRule(LEFTMOST)
    nxt = step(program, state, sel, choose_named("r1"), pool)  # 72 = 2
    assert nxt.failed


def test_step_renames_rules_apart():
    program, pool, state = golden_start()
    sel = SelectionRule(LEFTMOST)
    state_vars = {v for c in state.store for v in c.variables()}
    nxt = step(program, state, sel, choose_named("r3"), pool)
    new_vars = {v for c in nxt.store for v in c.variables()} - state_vars
    rule_vars = program.rules[2].all_vars()
    assert new_vars and not (new_vars & rule_vars)


def test_compact_store_preserves_goal_solutions():
    program, pool, state = golden_start()
    sel = SelectionRule(LEFTMOST)
    nxt = step(program, state, sel, choose_named("r3"), pool)
    slim = compact_store(nxt, Q)
    y = slim.goal[0].args[0]
    assert all(c.variables() <= {y} for c in slim.store)
    assert feasible(normalize(list(slim.store) + [equal(LinearExpr.of_var(y), 73)]))


def test_run_ground_examples():
    program = parse_program(load("example72.clp"))
    for seed in range(8):
        trace = run_ground(program, "p", [72], seed=seed)
        assert trace.terminated
        assert trace.steps <= 2
    trace = run_ground(program, "p", [100], seed=0)
    assert trace.steps == 1 and trace.outcome == FAILURE


def test_run_ground_nonterminating_prefix():
    program = parse_program(load("diverge.clp"))
    trace = run_ground(program, "p", [0], max_steps=50, seed=1)
    assert trace.outcome == MAX_STEPS
    assert trace.steps == 50
    assert not trace.terminated


def test_run_ground_flounders_without_rules():
    program = parse_program("p(x) :- x >= 0, q(y), y = x.")
    trace = run_ground(program, "q", [1], seed=0)
    assert trace.outcome == "floundered"


def test_store_stays_satisfiable_unless_failed():
    program = parse_program(load("example4.clp"))
    trace = run_ground(program, "q", [30], seed=4, max_steps=60)
    for state in trace.states:
        if not state.failed:
            assert feasible(normalize(state.store))


def test_exhaustive_exploration_of_golden_program():
    program = parse_program(load("example72.clp"))
    longest, complete = explore(program, "p", [72], depth=10)
    assert complete
    assert longest <= 2


def test_query_seeds_a_state():
    constraints, atoms = parse_query("?- x = 72, p(x).")
    state = state_from_query(constraints, atoms)
    assert [a.pred for a in state.goal] == ["p"]
    assert not state.failed


def test_check_length_bound_golden():
    program = parse_program(load("example72.clp"))
    lm = LevelMapping({"p": (73, -1)})
    report = check_length_bound(program, lm, samples=60, seed=11)
    assert report.passed
    assert report.runs
    # bound examples: level 1 at p(72) gives budget 2; p(73) gives budget 1
    assert lm.bound_for("p", [72]) == 2
    assert lm.bound_for("p", [73]) == 1
    assert lm.bound_for("p", [-100]) == 174


def test_check_length_bound_specific_starts():
    program = parse_program(load("example72.clp"))
    lm = LevelMapping({"p": (73, -1)})
    for args, budget in (([73], 1), ([-100], 174)):
        for seed in range(5):
            trace = run_ground(
                program,
                "p",
                args,
                selection=SelectionRule(RANDOM, seed=seed),
                max_steps=budget + 1,
                seed=seed,
            )
            assert trace.steps <= budget
    # level 0 at p(73): nothing applies, exactly the one failing resolution
    trace = run_ground(program, "p", [73], seed=123)
    assert trace.steps == 1 and trace.outcome == FAILURE


def test_bare_fact_resolves_in_one_step():
    program = parse_program("p(x).")
    trace = run_ground(program, "p", [5], seed=0)
    assert trace.steps == 1 and trace.outcome == "success"


def test_check_length_bound_requires_certificate():
    program = parse_program(load("diverge.clp"))
    with pytest.raises(AlmtermError):
        check_length_bound(program, LevelMapping({"p": (0, 1)}), samples=5)


def test_check_length_bound_respects_step_cap():
    program = parse_program(load("example72.clp"))
    lm = LevelMapping({"p": (73, -1)})
    report = check_length_bound(program, lm, samples=40, seed=3, step_cap=1)
    assert report.passed  # truncated runs are not violations
    assert all(r.steps <= 1 for r in report.runs)


def test_domain_carrier_enforced_on_ground_starts():
    program = parse_program("p(x) :- x >= -5, y = x - 1, p(y).")
    with pytest.raises(AlmtermError):
        run_ground(program, "p", [-1], seed=0, domain=QPLUS)
    from almterm import N

    with pytest.raises(AlmtermError):
        run_ground(program, "p", [Fraction(1, 2)], seed=0, domain=N)


def test_nonneg_domain_restricts_stores():
    # over q+ the rule body y = x - 1 dies at x = 0 (y would go negative)
    program = parse_program("p(x) :- x >= -5, y = x - 1, p(y).")
    trace_q = run_ground(program, "p", [0], seed=0, max_steps=10, domain=Q)
    trace_qp = run_ground(program, "p", [0], seed=0, max_steps=10, domain=QPLUS)
    assert trace_qp.outcome == FAILURE and trace_qp.steps == 1
    assert trace_q.steps > trace_qp.steps


def test_multibody_bound_on_binarized_program():
    program = parse_program(load("multibody.clp"))
    verdict = decide(program, Q)
    report = check_length_bound(binarize(program), verdict.witness, samples=50, seed=9)
    assert report.passed
