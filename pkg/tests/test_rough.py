import numpy as np
import pytest

from moebius_fill.errors import ExactBudgetExceeded, NotAMetric
from moebius_fill.gallery import circle_boundary, random_antipodal, with_entry
from moebius_fill.rough import (
    PointMap,
    ai_distance,
    covering_radius,
    distortion,
    gh_ball_distance,
    identity_map,
    invert_rough_isometry,
    is_eps_isometry,
    net_of_inverse,
    report_for,
)
from moebius_fill.semimetric import covering_radius_of, subspace, validate_semimetric

from oracles import ai_brute, gh_brute, isometric_by_permutation


def inclusion(z, idx):
    return PointMap(subspace(z, idx), z, tuple(idx))


def test_distortion_examples(z4):
    assert distortion(identity_map(z4)) == 0.0
    assert distortion(PointMap(z4, z4, (1, 0, 2, 3))) == 0.0
    changed = with_entry(z4, 0, 2, 0.6)
    assert distortion(PointMap(z4, changed, (0, 1, 2, 3))) == pytest.approx(0.1, abs=1e-15)


def test_covering_radius_examples(z4):
    assert covering_radius(PointMap(z4, z4, (3, 2, 1, 0))) == 0.0
    assert covering_radius(PointMap(z4, z4, (0, 0, 0, 0))) == 1.0
    big = circle_boundary(64)
    idx = list(range(0, 64, 8))
    assert covering_radius(inclusion(big, idx)) == covering_radius_of(big, idx)
    exhaustive = max(min(big.rho[y, k] for k in idx) for y in range(64))
    assert covering_radius(inclusion(big, idx)) == exhaustive


def test_is_eps_isometry_examples(z4):
    ok, rep = is_eps_isometry(identity_map(z4), 1e-9)
    assert ok and rep.epsilon == 0.0
    ok, rep = is_eps_isometry(PointMap(z4, z4, (0, 0, 0, 0)), 0.5)
    assert not ok and rep.covering_radius == 1.0
    big = circle_boundary(64)
    f = inclusion(big, list(range(0, 64, 8)))
    cov = covering_radius(f)
    assert is_eps_isometry(f, cov + 1e-9)[0]
    # strict comparison at the boundary value
    assert not is_eps_isometry(f, cov)[0]


def test_report_epsilon_is_max(z4):
    rep = report_for(PointMap(z4, z4, (0, 0, 2, 2)))
    assert rep.epsilon == max(rep.distortion, rep.covering_radius)


def test_ai_examples(z4):
    res = ai_distance(z4, z4)
    assert res.value == 0.0
    assert res.forward.assignment == (0, 1, 2, 3) or distortion(res.forward) == 0.0
    p = [2, 0, 3, 1]
    perm = validate_semimetric(z4.rho[np.ix_(p, p)])
    assert ai_distance(z4, perm).value == 0.0
    changed = with_entry(z4, 0, 2, 0.6)
    exact = ai_distance(z4, changed, "exact")
    assert exact.value == pytest.approx(ai_brute(z4.rho, changed.rho), abs=1e-15)
    assert ai_distance(z4, changed, "heuristic").value == pytest.approx(exact.value, abs=1e-15)


def test_ai_witnesses_achieve_value(rng):
    a, b = random_antipodal(5, 3), random_antipodal(4, 8)
    res = ai_distance(a, b)
    eps = max(report_for(res.forward).epsilon, report_for(res.backward).epsilon)
    assert eps == res.value


def test_ai_exact_matches_brute_force(rng):
    for k in range(6):
        a = random_antipodal(int(rng.integers(4, 6)), 100 + k)
        b = random_antipodal(int(rng.integers(4, 6)), 200 + k)
        assert ai_distance(a, b).value == pytest.approx(ai_brute(a.rho, b.rho), abs=1e-15)


def test_ai_symmetric(rng):
    for k in range(4):
        a, b = random_antipodal(5, k), random_antipodal(6, 50 + k)
        assert ai_distance(a, b).value == ai_distance(b, a).value


def test_ai_zero_iff_isometric(rng):
    base = random_antipodal(5, 11)
    for k in range(5):
        p = rng.permutation(5)
        other = validate_semimetric(base.rho[np.ix_(p, p)]) if k % 2 == 0 else random_antipodal(5, 70 + k)
        zero = ai_distance(base, other).value == 0.0
        assert zero == isometric_by_permutation(base.rho.tolist(), other.rho.tolist())


def test_ai_exact_size_limit():
    with pytest.raises(ExactBudgetExceeded):
        ai_distance(circle_boundary(10), circle_boundary(4))
    assert ai_distance(circle_boundary(10), circle_boundary(4), "heuristic").value > 0


def test_invert_examples(z4):
    g = invert_rough_isometry(identity_map(z4))
    assert g.assignment == (0, 1, 2, 3)
    p = (2, 3, 0, 1)
    g = invert_rough_isometry(PointMap(z4, z4, p))
    assert g.assignment == tuple(int(k) for k in np.argsort(p))
    assert distortion(g) == 0.0
    big = circle_boundary(32)
    f = inclusion(big, list(range(0, 32, 4)))
    rep = report_for(f)
    g = invert_rough_isometry(f, rep)
    assert distortion(g) <= 3 * rep.epsilon
    net = net_of_inverse(f, rep)
    assert all(g.assignment[f.assignment[x]] == x for x in net)
    assert covering_radius(g) < 2 * rep.epsilon


def test_gh_examples():
    line = np.array([0.0, 1.0, 3.0, 7.0])
    dX = np.abs(line[:, None] - line[None, :])
    dY = dX.copy()
    dY[0, 1] = dY[1, 0] = 1.1
    X, Y = validate_semimetric(dX), validate_semimetric(dY)
    assert gh_ball_distance(X, X, "exact").value == 0.0
    exact = gh_ball_distance(X, Y, "exact").value
    assert exact == pytest.approx(gh_brute(dX, dY), abs=1e-15)
    assert exact == pytest.approx(0.05, abs=1e-12)


def test_gh_heuristic_upper_bounds_exact(rng):
    for _ in range(4):
        n, m = rng.integers(3, 5, 2)
        X, Y = rng.random((n, 2)), rng.random((m, 2))
        dX = np.abs(X[:, None] - X[None]).sum(axis=2)
        dY = np.sqrt(((Y[:, None] - Y[None]) ** 2).sum(axis=2))
        ex = gh_ball_distance(validate_semimetric(dX), validate_semimetric(dY), "exact").value
        assert ex == pytest.approx(gh_brute(dX, dY), abs=1e-12)
        he = gh_ball_distance(validate_semimetric(dX), validate_semimetric(dY), "heuristic").value
        assert he >= ex - 1e-15


def test_gh_and_ai_relate_by_factor_two(rng):
    for _ in range(4):
        X, Y = rng.random((5, 2)), rng.random((5, 2))
        dX = np.sqrt(((X[:, None] - X[None]) ** 2).sum(axis=2))
        dY = np.sqrt(((Y[:, None] - Y[None]) ** 2).sum(axis=2))
        a, b = validate_semimetric(dX), validate_semimetric(dY)
        gh = gh_ball_distance(a, b, "exact").value
        ai = ai_distance(a, b).value
        assert ai <= 2 * gh + 1e-12
        assert gh <= 2 * ai + 1e-12


def test_gh_rejects_non_metric():
    m = np.full((3, 3), 0.3)
    np.fill_diagonal(m, 0)
    m[0, 1] = m[1, 0] = 1.0
    with pytest.raises(NotAMetric):
        gh_ball_distance(validate_semimetric(m), validate_semimetric(m))


def test_gh_on_ball_samples(z4):
    from moebius_fill.moebius import sample_ball
    a, b = sample_ball(z4, 1.0, 5, seed=1), sample_ball(z4, 1.0, 5, seed=1)
    assert gh_ball_distance(a, b, "exact").value == 0.0
