import itertools
import math

import numpy as np
import pytest

from moebius_fill.errors import (
    AsymmetricMatrix,
    DiameterNotOne,
    DimensionMismatch,
    MissingAntipode,
    NonDistinctPoints,
    NonpositiveOffDiagonal,
    NonzeroDiagonal,
    NotMoebiusEquivalent,
    TooFewPoints,
)
from moebius_fill.gallery import circle_boundary, random_antipodal, tree_boundary, with_entry
from moebius_fill.semimetric import (
    FiniteSemiMetric,
    covering_radius_of,
    cross_ratio,
    cross_ratios,
    epsilon_net,
    equicontinuity_modulus,
    gmvt_apply,
    gmvt_derivative,
    normalize_diameter,
    quasimetric_constant,
    read_space,
    subspace,
    validate_antipodal,
    validate_semimetric,
    write_space,
)

from oracles import quasimetric_loop

Z4_RHO = [[0, 1, .5, .5], [1, 0, .5, .5], [.5, .5, 0, 1], [.5, .5, 1, 0]]


def test_z4_is_valid():
    s = validate_semimetric(Z4_RHO)
    assert s.labels == ("1", "2", "3", "4")
    assert np.array_equal(s.rho, np.array(Z4_RHO, dtype=float))


def test_zero_off_diagonal_rejected():
    m = np.array([[0, 0, 1], [0, 0, 1], [1, 1, 0.]])
    with pytest.raises(NonpositiveOffDiagonal):
        validate_semimetric(m)


def test_asymmetric_rejected():
    m = np.array(Z4_RHO, dtype=float)
    m[0, 1] = 0.9
    with pytest.raises(AsymmetricMatrix):
        validate_semimetric(m)


def test_diagonal_and_size_rejected():
    m = np.array(Z4_RHO, dtype=float)
    m[2, 2] = 0.1
    with pytest.raises(NonzeroDiagonal):
        validate_semimetric(m)
    with pytest.raises(TooFewPoints):
        validate_semimetric([[0.0]])
    with pytest.raises(DimensionMismatch):
        validate_semimetric([[0, 1, 1], [1, 0, 1.]])


def test_validated_space_is_immutable():
    s = validate_semimetric(Z4_RHO)
    with pytest.raises(ValueError):
        s.rho[0, 1] = 3.0


def test_antipodal_examples(z4):
    assert validate_antipodal(validate_semimetric(Z4_RHO)).same_as(z4)
    broken = with_entry(z4, 0, 1, 0.9)
    with pytest.raises(MissingAntipode) as exc:
        validate_antipodal(broken)
    assert exc.value.point == "1"
    with pytest.raises(DiameterNotOne):
        validate_antipodal(validate_semimetric(2 * np.array(Z4_RHO, dtype=float)))


def test_normalize_diameter(z4, rng):
    doubled = validate_semimetric(2 * z4.rho)
    assert np.array_equal(normalize_diameter(doubled).rho, z4.rho)
    assert normalize_diameter(z4.base) is z4.base
    m = rng.uniform(0.1, 3, (5, 5))
    m = m + m.T
    np.fill_diagonal(m, 0)
    s = validate_semimetric(m)
    out = normalize_diameter(s)
    assert out.diameter == 1.0
    off = ~np.eye(5, dtype=bool)
    ratio = out.rho[off] / s.rho[off]
    assert np.allclose(ratio, ratio[0], rtol=1e-14)


def test_cross_ratio_examples(z4):
    # labels 1..4 are indices 0..3
    assert cross_ratio(z4, 0, 2, 1, 3) == pytest.approx(4.0, rel=1e-15)
    assert cross_ratio(z4, 0, 2, 3, 1) == pytest.approx(0.25, rel=1e-15)
    const = np.full((5, 5), 0.7)
    np.fill_diagonal(const, 0)
    assert cross_ratio(validate_semimetric(const), 0, 1, 2, 3) == 1.0
    with pytest.raises(NonDistinctPoints):
        cross_ratio(z4, 0, 0, 1, 2)
    with pytest.raises(TooFewPoints):
        cross_ratio(validate_semimetric([[0, 1, 1], [1, 0, 1], [1, 1, 0]]), 0, 1, 2, 0)


def test_cross_ratio_table_matches_pointwise(z4):
    table = cross_ratios(z4)
    for q in itertools.permutations(range(4), 4):
        assert table[q] == pytest.approx(cross_ratio(z4, *q), rel=1e-15)
    assert np.isnan(table[0, 0, 1, 2])


def test_gmvt_apply_examples(z4):
    assert np.array_equal(gmvt_apply(np.zeros(4), z4).rho, z4.rho)
    tau = np.array([1.0, -1.0, 0.0, 0.0])
    r1 = gmvt_apply(tau, z4)
    assert r1.rho[0, 2] == pytest.approx(math.exp(0.5) * 0.5, rel=1e-15)
    assert r1.rho[0, 2] == pytest.approx(0.8244, abs=1e-4)
    back = gmvt_apply(-tau, r1)
    assert np.allclose(back.rho, z4.rho, rtol=1e-15, atol=0)
    a, b = cross_ratios(z4), cross_ratios(r1)
    m = ~np.isnan(a)
    assert np.allclose(a[m], b[m], rtol=1e-12)
    with pytest.raises(DimensionMismatch):
        gmvt_apply(np.zeros(3), z4)


def test_gmvt_derivative_examples(z4, rng):
    tau = rng.uniform(-2, 2, 4)
    assert np.allclose(gmvt_derivative(gmvt_apply(tau, z4), z4), tau, atol=1e-10)
    assert np.allclose(gmvt_derivative(z4, z4), 0.0, atol=1e-15)
    with pytest.raises(NotMoebiusEquivalent):
        gmvt_derivative(with_entry(z4, 0, 2, 0.6), z4)


def test_quasimetric_constant(z4, rng):
    assert quasimetric_constant(z4) == pytest.approx(quasimetric_loop(z4.rho), rel=1e-15)
    assert quasimetric_constant(z4) == 2.0
    assert quasimetric_constant(tree_boundary(2, 3)) == 1.0
    for n in (6, 10):
        assert quasimetric_constant(circle_boundary(n)) <= 2.0
    r = random_antipodal(6, 1)
    assert quasimetric_constant(r) == pytest.approx(quasimetric_loop(r.rho), rel=1e-15)


def _verify_net(z, net, eps):
    r = z.rho
    assert r[:, net].min(axis=1).max() < eps
    for a, b in itertools.combinations(net, 2):
        assert r[a, b] >= eps


def test_epsilon_net_examples():
    z = circle_boundary(64)
    assert epsilon_net(z, 1.5) == [0]
    assert epsilon_net(z, 1.5, seed=5) == [5]
    tiny = 0.5 * float((z.rho + np.eye(64) * 9).min())
    assert sorted(epsilon_net(z, tiny)) == list(range(64))
    net = epsilon_net(z, 0.3)
    _verify_net(z, net, 0.3)
    assert covering_radius_of(z, net) < 0.3


def test_equicontinuity_examples(z4):
    grid = np.linspace(0.01, 1.0, 40)
    mod = equicontinuity_modulus([circle_boundary(16)], grid)
    assert np.all(mod.omegas <= mod.deltas + 1e-15)
    assert equicontinuity_modulus([z4], [0.4]).omegas[0] == 0.0
    fam = [circle_boundary(n) for n in range(8, 65, 8)]
    mod = equicontinuity_modulus(fam, grid)
    assert np.all(mod.omegas <= 2 * mod.deltas)
    assert np.all(np.diff(mod.omegas) >= 0)


def test_space_json_round_trip(tmp_path, z4):
    p = tmp_path / "z.json"
    write_space(z4, p)
    back = read_space(p)
    assert back.labels == z4.labels and np.array_equal(back.rho, z4.rho)
    p.write_text('{"labels": ["a", "b"], "rho": [[0, 1], [0.5, 0]]}')
    with pytest.raises(AsymmetricMatrix):
        read_space(p)


def test_subspace_keeps_labels(z4):
    s = subspace(z4, [0, 2])
    assert isinstance(s, FiniteSemiMetric)
    assert s.labels == ("1", "3") and s.rho[0, 1] == 0.5
