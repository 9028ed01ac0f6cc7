import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from almterm import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearExpr,
    LinearSystem,
    deduplicate,
    drop_redundant,
    entails,
    equivalent_systems,
    feasible,
    feasible_point,
    fm_project,
    maximize,
    minimize,
    normalize,
)
from almterm.model import equal, geq

X, Y, Z = 0, 1, 2
var = LinearExpr.of_var
const = LinearExpr.of_const


# --- independent feasibility oracle: textbook variable elimination ----------
# (kept deliberately separate from the library's projection code)


def oracle_feasible(rows):
    """rows: list of (coeff tuple, bound) meaning coeffs . x >= bound."""
    rows = [(list(c), b) for c, b in rows]
    nvars = len(rows[0][0]) if rows else 0
    for v in range(nvars):
        pos = [r for r in rows if r[0][v] > 0]
        neg = [r for r in rows if r[0][v] < 0]
        rest = [r for r in rows if r[0][v] == 0]
        new = list(rest)
        for pc, pb in pos:
            for nc, nb in neg:
                a, b = pc[v], -nc[v]
                combo = [b * p + a * n for p, n in zip(pc, nc)]
                new.append((combo, b * pb + a * nb))
        rows = new
    return all(b <= 0 for _, b in rows)


def to_oracle(sys: LinearSystem):
    return [(row, b) for row, b in zip(sys.rows, sys.rhs)]


# --- normalize ---------------------------------------------------------------


def test_normalize_splits_equalities():
    sys = normalize([equal(var(X), 2)])
    assert sys.rows == ((Fraction(1),), (Fraction(-1),))
    assert sys.rhs == (Fraction(2), Fraction(-2))


def test_normalize_golden_five_rows():
    x0 = 9
    sys = normalize(
        [geq(72, var(X)), equal(var(Y), var(X) + const(1)), equal(var(x0), 1)]
    )
    assert sys.variables == (X, Y, x0)
    expected = [
        ((Fraction(-1), Fraction(0), Fraction(0)), Fraction(-72)),
        ((Fraction(-1), Fraction(1), Fraction(0)), Fraction(1)),
        ((Fraction(1), Fraction(-1), Fraction(0)), Fraction(-1)),
        ((Fraction(0), Fraction(0), Fraction(1)), Fraction(1)),
        ((Fraction(0), Fraction(0), Fraction(-1)), Fraction(-1)),
    ]
    assert list(zip(sys.rows, sys.rhs)) == expected


def test_normalize_nonneg_rows():
    sys = normalize([], extra_nonneg={X})
    assert sys.variables == (X,)
    assert sys.rows == ((Fraction(1),),)
    assert sys.rhs == (Fraction(0),)


def test_normalize_order_hint():
    sys = normalize([geq(var(Y), var(X))], order_hint=(Z, X))
    assert sys.variables == (Z, X, Y)


# --- feasibility -------------------------------------------------------------


def test_feasible_examples():
    assert not feasible(normalize([equal(const(0), 1)]))
    assert feasible(normalize([equal(var(X), 2)]))
    assert not feasible(normalize([geq(72, var(X)), geq(var(X), 100)]))


def test_feasible_point_is_exact():
    point = feasible_point(normalize([equal(var(X), 2)]))
    assert point[X] == 2
    sys = normalize([geq(var(X) + var(Y), 7), geq(var(X) - var(Y), 3)])
    point = feasible_point(sys)
    assert sys.satisfied_by(point)


def test_empty_system_has_zero_point():
    sys = normalize([], order_hint=(X, Y))
    assert feasible_point(sys) == {X: Fraction(0), Y: Fraction(0)}


small_coeff = st.integers(min_value=-4, max_value=4)


@settings(max_examples=120, deadline=None)
@given(
    st.lists(
        st.tuples(st.tuples(small_coeff, small_coeff, small_coeff), small_coeff),
        min_size=0,
        max_size=5,
    )
)
def test_feasible_agrees_with_elimination_oracle(raw_rows):
    rows = [
        (tuple(Fraction(c) for c in coeffs), Fraction(b)) for coeffs, b in raw_rows
    ]
    sys = LinearSystem(
        (X, Y, Z), tuple(r for r, _ in rows), tuple(b for _, b in rows)
    )
    assert feasible(sys) == oracle_feasible(to_oracle(sys))


# --- optimisation ------------------------------------------------------------


def test_minimize_examples():
    out = minimize(normalize([geq(var(X), 3)]), var(X))
    assert out.status == OPTIMAL and out.value == 3 and out.point[X] == 3

    out = minimize(normalize([geq(var(X), 3)]), -var(X))
    assert out.status == UNBOUNDED
    assert out.ray is not None

    out = minimize(normalize([equal(const(0), 1)]), var(X))
    assert out.status == INFEASIBLE


def test_minimize_on_golden_rule_system():
    x0 = 9
    sys = normalize(
        [geq(72, var(X)), equal(var(Y), var(X) + const(1)), equal(var(x0), 1)]
    )
    out = minimize(sys, var(X) - var(Y))
    assert out.status == OPTIMAL and out.value == -1


def test_minimize_includes_objective_constant():
    out = minimize(normalize([geq(var(X), 3)]), var(X) + const(10))
    assert out.value == 13


def test_maximize_examples():
    out = maximize(normalize([geq(var(X), 0), geq(-var(X), -1)]), var(X))
    assert out.status == OPTIMAL and out.value == 1
    out = maximize(normalize([geq(var(X), 0)]), var(X))
    assert out.status == UNBOUNDED


@settings(max_examples=80, deadline=None)
@given(
    st.lists(
        st.tuples(st.tuples(small_coeff, small_coeff), small_coeff),
        min_size=1,
        max_size=4,
    ),
    st.tuples(small_coeff, small_coeff),
)
def test_optimal_points_satisfy_all_rows(raw_rows, obj):
    rows = [
        (tuple(Fraction(c) for c in coeffs), Fraction(b)) for coeffs, b in raw_rows
    ]
    sys = LinearSystem((X, Y), tuple(r for r, _ in rows), tuple(b for _, b in rows))
    out = minimize(sys, LinearExpr({X: Fraction(obj[0]), Y: Fraction(obj[1])}))
    if out.status == OPTIMAL:
        assert sys.satisfied_by(out.point)
        assert (
            sum(Fraction(c) * out.point[v] for c, v in zip(obj, (X, Y))) == out.value
        )
    elif out.status == UNBOUNDED:
        assert sys.satisfied_by(out.point)


# --- duality -----------------------------------------------------------------


def make_bounded_lp(rng: random.Random):
    """A primal min c.x s.t. A x >= b that is feasible and bounded by design:
    box rows plus extra rows anchored at an interior point."""
    n = rng.randint(1, 3)
    anchor = [Fraction(rng.randint(-3, 3)) for _ in range(n)]
    rows = []
    rhs = []
    for i in range(n):
        low = anchor[i] - rng.randint(0, 4)
        high = anchor[i] + rng.randint(0, 4)
        row = [Fraction(0)] * n
        row[i] = Fraction(1)
        rows.append(tuple(row))
        rhs.append(low)
        row = [Fraction(0)] * n
        row[i] = Fraction(-1)
        rows.append(tuple(row))
        rhs.append(-high)
    for _ in range(rng.randint(0, 2)):
        coeffs = [Fraction(rng.randint(-3, 3)) for _ in range(n)]
        slackness = Fraction(rng.randint(0, 5))
        rows.append(tuple(coeffs))
        rhs.append(sum(c * a for c, a in zip(coeffs, anchor)) - slackness)
    cost = {i: Fraction(rng.randint(-4, 4)) for i in range(n)}
    sys = LinearSystem(tuple(range(n)), tuple(rows), tuple(rhs))
    return sys, LinearExpr(cost)


def explicit_dual(sys: LinearSystem, objective: LinearExpr):
    """max b.y  s.t.  A^T y = c, y >= 0, with fresh variables per row."""
    m = sys.num_rows
    ys = tuple(range(100, 100 + m))
    constraints = []
    for j, v in enumerate(sys.variables):
        combo = LinearExpr({ys[i]: sys.rows[i][j] for i in range(m)})
        constraints.append(equal(combo, objective.coeff(v)))
    for y in ys:
        constraints.append(geq(var(y), 0))
    dual_obj = LinearExpr({ys[i]: sys.rhs[i] for i in range(m)})
    return normalize(constraints, order_hint=ys), dual_obj


def test_duality_random_suite_small():
    rng = random.Random(99)
    hits = 0
    while hits < 40:
        sys, cost = make_bounded_lp(rng)
        primal = minimize(sys, cost)
        assert primal.status == OPTIMAL
        dual_sys, dual_obj = explicit_dual(sys, cost)
        dual = maximize(dual_sys, dual_obj)
        assert dual.status == OPTIMAL
        assert dual.value == primal.value
        hits += 1


# --- projection --------------------------------------------------------------


def test_fm_project_eliminates_variable():
    sys = normalize([geq(var(X), 0), geq(var(Y) - var(X), 1)])
    projected = fm_project(sys, {Y})
    assert projected.variables == (Y,)
    assert equivalent_systems(projected, normalize([geq(var(Y), 1)]))


def test_fm_project_identity():
    sys = normalize([geq(var(X), 1)])
    projected = fm_project(sys, {X})
    assert list(zip(projected.rows, projected.rhs)) == [((Fraction(1),), Fraction(1))]


def test_fm_project_infeasible_input():
    sys = normalize([geq(var(X), 1), geq(-var(X), 0)])
    projected = fm_project(sys, set())
    assert not feasible(projected)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(st.tuples(small_coeff, small_coeff, small_coeff), small_coeff),
        min_size=1,
        max_size=4,
    )
)
def test_fm_project_soundness_and_completeness(raw_rows):
    rows = [
        (tuple(Fraction(c) for c in coeffs), Fraction(b)) for coeffs, b in raw_rows
    ]
    sys = LinearSystem((X, Y, Z), tuple(r for r, _ in rows), tuple(b for _, b in rows))
    projected = fm_project(sys, {X, Y}, lp_minimize=False)
    full = feasible_point(sys)
    if full is not None:
        # soundness: restriction of any solution satisfies the projection
        assert projected.satisfied_by(full)
    shadow = feasible_point(projected)
    if shadow is None:
        assert full is None
    else:
        # completeness: projection points extend to full solutions
        pins = [equal(var(v), shadow.get(v, 0)) for v in (X, Y)]
        pinned = normalize(list(sys.constraints()) + pins)
        assert feasible(pinned)


def test_drop_redundant_removes_implied_rows():
    sys = normalize([geq(var(X), 3), geq(var(X), 1), geq(var(X) + var(Y), 0), geq(var(Y), 5)])
    slim = drop_redundant(sys)
    assert slim.num_rows == 2
    assert equivalent_systems(slim, sys)


def test_deduplicate_keeps_strongest_bound():
    sys = normalize([geq(var(X), 1), geq(var(X), 3), geq(var(X).scale(2), 2)])
    slim = deduplicate(sys)
    assert slim.num_rows == 1
    assert equivalent_systems(slim, normalize([geq(var(X), 3)]))


def test_entails_basics():
    sys = normalize([geq(var(X), 2)])
    assert entails(sys, {X: Fraction(1)}, Fraction(1))
    assert not entails(sys, {X: Fraction(-1)}, Fraction(0))
    empty = normalize([equal(const(0), 1)])
    assert entails(empty, {X: Fraction(1)}, Fraction(10))
