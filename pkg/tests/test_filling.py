import numpy as np
import pytest

from moebius_fill.errors import DimensionMismatch, NotACover
from moebius_fill.filling import (
    FillingReport,
    antipodal_net,
    filling_convergence_experiment,
    filling_map,
    partition_of_unity,
    pullback_tau,
    smoothing_operator,
)
from moebius_fill.gallery import circle_boundary, tree_boundary
from moebius_fill.moebius import (
    TauVector,
    antipodalize,
    base_point,
    is_member,
    retract_ball,
)
from moebius_fill.rough import PointMap, covering_radius, identity_map
from moebius_fill.semimetric import epsilon_net, subspace, validate_antipodal


def test_identity_partition():
    z = circle_boundary(12)
    tiny = 0.5 * float((z.rho + np.eye(12) * 9).min())
    pou = partition_of_unity(z, range(12), tiny)
    assert np.array_equal(pou.weights, np.eye(12))


def test_z4_partition(z4):
    pou = partition_of_unity(z4, [0, 2], 0.6)
    assert np.allclose(pou.weights.sum(axis=0), 1.0, atol=1e-12)
    # rho(2, 1) = 1 is not below 0.6, and P[1][2] is zero: both sides of the iff are false
    assert not z4.rho[1, 0] < 0.6
    assert pou.weights[0, 1] == 0.0
    support = pou.weights > 0
    assert np.all(support <= (z4.rho[[0, 2]] < 0.6))


def test_circle_partition_column_sums():
    z = circle_boundary(64)
    net = epsilon_net(z, 0.3)
    pou = partition_of_unity(z, net, 0.3)
    assert np.abs(pou.weights.sum(axis=0) - 1).max() <= 1e-12
    assert np.all((pou.weights > 0) <= (z.rho[net] < 0.3))


def test_partition_not_a_cover(z4):
    with pytest.raises(NotACover):
        partition_of_unity(z4, [0], 0.3)


def test_partition_whole_ball_shares_weight(z4):
    pou = partition_of_unity(z4, [0, 2], 1.5)
    assert np.allclose(pou.weights, 0.5)


def test_smoothing_examples(z4):
    pou = partition_of_unity(z4, [0, 2], 0.6)
    assert np.allclose(smoothing_operator([2.5, 2.5], pou), 2.5, atol=1e-15)
    assert np.array_equal(smoothing_operator([1.0, 0.0], pou), pou.weights[0])
    with pytest.raises(DimensionMismatch):
        smoothing_operator([1.0, 2.0, 3.0], pou)


def test_smoothing_error_bounded_by_oscillation():
    z = circle_boundary(64)
    theta = 2 * np.pi * np.arange(64) / 64
    tau = np.sin(theta)
    delta = 0.2
    net = epsilon_net(z, delta)
    pou = partition_of_unity(z, net, delta)
    smooth = smoothing_operator(tau[net], pou)
    osc = max(abs(tau[x] - tau[k]) for k in net for x in range(64) if z.rho[x, k] < delta)
    assert np.abs(smooth - tau).max() <= osc
    assert np.abs(smooth).max() <= np.abs(tau[net]).max()


def test_pullback_examples(z4):
    f = identity_map(z4)
    assert np.array_equal(pullback_tau(np.zeros(4), f), np.zeros(4))
    tau = np.array([1.0, -1.0, 0.0, 0.0])
    assert np.array_equal(pullback_tau(tau, f), tau)
    big = circle_boundary(8)
    ext = np.array([1.0, 0.3, -1.0, 0.2, 0.0, -0.4, 0.0, 0.5])
    inc = PointMap(subspace(big, [0, 2, 4, 6]), big, (0, 2, 4, 6))
    assert np.array_equal(pullback_tau(ext, inc), ext[[0, 2, 4, 6]])


def test_filling_map_examples(z4):
    f = identity_map(z4)
    out = filling_map(base_point(z4), f, 2.0, target=z4)
    assert np.array_equal(out.values, np.zeros(4))
    rho = is_member(TauVector(np.array([1.0, -1.0, 0.0, 0.0]), z4))
    out = filling_map(rho, f, 2.0, target=z4)
    assert np.abs(out.values - rho.values).max() <= 1e-6


def test_filling_map_into_coarse_net(rng):
    z = circle_boundary(64)
    idx = antipodal_net(z, 16)
    zn = validate_antipodal(subspace(z, idx))
    inc = PointMap(zn, z, tuple(idx))
    raw = antipodalize(TauVector(rng.uniform(-3, 3, 64), z))
    rho = retract_ball(raw, 1.5) if raw.norm > 1.5 else raw
    assert rho.norm <= 1.5 + 1e-8
    out = filling_map(rho, inc, 2.0, target=zn)
    assert out.membership_residual <= 1e-8
    assert out.norm <= 2.0 + 1e-8


def test_antipodal_net_is_antipodal():
    z = circle_boundary(128)
    for size in (8, 16, 32, 64):
        idx = antipodal_net(z, size)
        assert len(idx) == size
        validate_antipodal(subspace(z, idx))


def test_experiment_identity_nets():
    z = circle_boundary(12)
    rep = filling_convergence_experiment(z, [12, 12], 2.0, sample_count=30, seed=1)
    assert isinstance(rep, FillingReport)
    for row in rep.rows:
        assert row.eps_n == 0.0
        assert row.distortion <= 1e-6
        assert row.sup_discrepancy <= 1e-8


def _trend_ok(values):
    values = list(values)
    inversions = [b / a - 1 for a, b in zip(values, values[1:]) if b > a]
    return len(inversions) <= 1 and all(r <= 0.10 for r in inversions)


def test_tree_experiment_trend():
    rep = filling_convergence_experiment(tree_boundary(2, 6), [4, 8, 16], 3.0, sample_count=100, seed=7)
    for col in ("distortion", "sup_discrepancy"):
        assert _trend_ok(getattr(r, col) for r in rep.rows)
    for row in rep.rows:
        assert min(row.eps_n, row.distortion, row.net_defect, row.sup_discrepancy, row.wallclock_ms) >= 0


def test_experiment_rejects_decreasing_sizes():
    with pytest.raises(ValueError):
        filling_convergence_experiment(circle_boundary(8), [8, 4], 1.0, 5, 0)


def test_default_delta_uses_covering_radius():
    z = circle_boundary(32)
    idx = antipodal_net(z, 8)
    zn = validate_antipodal(subspace(z, idx))
    inc = PointMap(zn, z, tuple(idx))
    from moebius_fill.filling import make_filling_map
    F = make_filling_map(inc, 2.0, target=zn)
    assert F.pou.delta == 2 * covering_radius(inc)
