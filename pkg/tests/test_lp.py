import itertools

import numpy as np
import pytest

from popspec.lp import LinearProgram, LPStatus, solve

BOX = 10.0


def vertex_enumeration(c, G, h, A, b):
    """Minimum of c.x over all basic feasible points of {Gx<=h, Ax=b, x>=0}.

    Returns None when no vertex is feasible.  Only valid for bounded feasible
    sets, which the generator below guarantees through a sum(x) <= BOX row.
    """
    n = c.size
    ineq = np.vstack([G, -np.eye(n)])
    ineq_rhs = np.concatenate([h, np.zeros(n)])
    best = None
    need = n - A.shape[0]
    for rows in itertools.combinations(range(ineq.shape[0]), need):
        M = np.vstack([A, ineq[list(rows)]])
        rhs = np.concatenate([b, ineq_rhs[list(rows)]])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, rhs)
        if np.all(ineq @ x <= ineq_rhs + 1e-9) and np.allclose(A @ x, b, atol=1e-9):
            val = float(c @ x)
            best = val if best is None else min(best, val)
    return best


def random_lp(r):
    n = int(r.integers(1, 7))
    m_total = int(r.integers(1, 9))
    m_eq = int(r.integers(0, min(2, n - 1, m_total - 1) + 1)) if n > 1 and m_total > 1 else 0
    m_in = m_total - m_eq - 1
    G = np.vstack([r.normal(size=(m_in, n)), np.ones((1, n))])
    h = np.concatenate([r.normal(size=m_in) + 0.5, [BOX]])
    A = r.normal(size=(m_eq, n))
    b = A @ r.uniform(0, 1, n) if r.random() < 0.8 else r.normal(size=m_eq)
    return r.normal(size=n), G, h, A, b


def check_feasible(lp, x, tol=1e-7):
    assert np.all(lp.G @ x <= lp.h + tol)
    assert np.all(np.abs(lp.A @ x - lp.b) <= tol)
    assert np.all(x >= lp.lower - tol)


def test_examples():
    s = solve(LinearProgram([1.0], G=[[-1.0]], h=[-1.0]))
    assert s.status is LPStatus.OPTIMAL and s.x[0] == pytest.approx(1.0) and s.objective_value == pytest.approx(1.0)
    s = solve(LinearProgram([-1.0, -1.0], G=[[1.0, 1.0]], h=[1.0]))
    assert s.ok and s.objective_value == pytest.approx(-1.0)
    s = solve(LinearProgram([0.0], G=[[1.0]], h=[-1.0]))
    assert s.status is LPStatus.INFEASIBLE


def test_unbounded():
    s = solve(LinearProgram([-1.0, 0.0], G=[[0.0, 1.0]], h=[1.0]))
    assert s.status is LPStatus.UNBOUNDED


def test_no_constraints():
    assert solve(LinearProgram([1.0, 2.0])).objective_value == 0.0
    assert solve(LinearProgram([1.0, -2.0])).status is LPStatus.UNBOUNDED


def test_equality_and_free_variables():
    # min x + y  s.t.  x - y = -3,  x free, y >= 0  ->  x = -3, y = 0
    lp = LinearProgram([1.0, 1.0], A=[[1.0, -1.0]], b=[-3.0], lower=[-np.inf, 0.0])
    s = solve(lp)
    assert s.ok and s.x == pytest.approx([-3.0, 0.0]) and s.objective_value == pytest.approx(-3.0)


def test_shifted_lower_bounds():
    lp = LinearProgram([1.0, 1.0], G=[[-1.0, -1.0]], h=[-1.0], lower=[2.0, -5.0])
    s = solve(lp)
    assert s.ok and s.objective_value == pytest.approx(1.0)
    check_feasible(lp, s.x)
    s = solve(LinearProgram([1.0, 1.0], lower=[2.0, -5.0]))
    assert s.ok and s.x == pytest.approx([2.0, -5.0]) and s.objective_value == pytest.approx(-3.0)


def test_redundant_equalities():
    lp = LinearProgram([1.0, 2.0], A=[[1.0, 1.0], [2.0, 2.0]], b=[1.0, 2.0])
    s = solve(lp)
    assert s.ok and s.x == pytest.approx([1.0, 0.0])


def test_beale_cycling_example_terminates():
    c = np.array([-0.75, 20.0, -0.5, 6.0])
    G = np.array([[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]])
    s = solve(LinearProgram(c, G=G, h=[0.0, 0.0, 1.0]))
    assert s.ok and s.objective_value == pytest.approx(-1.25)


def test_iteration_limit():
    r = np.random.default_rng(0)
    c, G, h, A, b = random_lp(r)
    G = np.vstack([-np.eye(6), np.ones((1, 6))])
    s = solve(LinearProgram(-np.ones(6), G=G, h=np.concatenate([-np.ones(6), [100.0]])), max_iter=1)
    assert s.status is LPStatus.ITERATION_LIMIT


def test_validation():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], G=[[1.0]], h=[1.0])
    with pytest.raises(ValueError):
        LinearProgram([1.0], G=[[np.nan]], h=[1.0])
    with pytest.raises(ValueError):
        LinearProgram([1.0], lower=[np.inf])


def test_matches_vertex_enumeration():
    r = np.random.default_rng(2024)
    statuses = set()
    for _ in range(200):
        c, G, h, A, b = random_lp(r)
        lp = LinearProgram(c, G, h, A if A.size else None, b if A.size else None)
        s = solve(lp)
        ref = vertex_enumeration(c, G, h, A.reshape(-1, c.size), b)
        statuses.add(s.status)
        if ref is None:
            assert s.status is LPStatus.INFEASIBLE
        else:
            assert s.ok
            assert s.objective_value == pytest.approx(ref, abs=1e-6)
            check_feasible(lp, s.x)
    assert statuses == {LPStatus.OPTIMAL, LPStatus.INFEASIBLE}


def test_weak_duality_against_sampled_feasible_points():
    r = np.random.default_rng(7)
    checked = 0
    for _ in range(60):
        c, G, h, _, _ = random_lp(r)
        s = solve(LinearProgram(c, G, h))
        if not s.ok:
            continue
        pts = r.uniform(0, BOX, size=(20000, c.size)) * r.uniform(0, 1, size=(20000, 1))
        feas = pts[np.all(pts @ G.T <= h, axis=1)]
        checked += len(feas)
        if len(feas):
            assert (feas @ c).min() >= s.objective_value - 1e-6
    assert checked > 1000


def test_deterministic():
    r = np.random.default_rng(11)
    G, h, c = r.normal(size=(30, 20)), r.uniform(0.5, 1, 30), r.normal(size=20)
    G = np.vstack([G, np.ones((1, 20))])
    h = np.concatenate([h, [5.0]])
    a, b = solve(LinearProgram(c, G, h)), solve(LinearProgram(c, G, h))
    assert a.x.tobytes() == b.x.tobytes() and a.iterations == b.iterations


def test_degenerate_estimator_sized_problem():
    """Many tied ratio-test rows at zero level; Bland must not cycle."""
    r = np.random.default_rng(5)
    n = 40
    X = r.normal(size=(60, n))
    # every row is tight at the origin -> maximal degeneracy
    G = np.vstack([X, np.ones((1, n))])
    h = np.concatenate([np.zeros(60), [1.0]])
    s = solve(LinearProgram(-np.abs(r.normal(size=n)), G, h))
    assert s.status in (LPStatus.OPTIMAL,)
    check_feasible(LinearProgram(-np.ones(n), G, h), s.x)
