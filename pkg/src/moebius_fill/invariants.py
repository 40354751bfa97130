"""Seeded battery of the structural invariants across all modules.

Each check returns a ``CheckResult``; sizes are kept small so the whole
battery runs in well under a minute.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import boundary, filling, gallery, moebius, rough, semimetric
from .moebius import TauVector


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _spaces(rng, count, lo=4, hi=12):
    return [gallery.random_antipodal(int(rng.integers(lo, hi + 1)), int(rng.integers(2**31))) for _ in range(count)]


def check_cross_ratio_invariance(rng) -> CheckResult:
    worst = 0.0
    for z in _spaces(rng, 10, 4, 7):
        tau = rng.uniform(-2, 2, z.n)
        a, b = semimetric.cross_ratios(z), semimetric.cross_ratios(semimetric.gmvt_apply(tau, z))
        m = ~np.isnan(a)
        worst = max(worst, float((np.abs(a[m] - b[m]) / np.abs(a[m])).max()))
    return CheckResult("cross-ratio preserved by GMVT", worst <= 1e-12, f"max relative change {worst:.2e}")


def check_gmvt_round_trip(rng) -> CheckResult:
    worst = 0.0
    for z in _spaces(rng, 20):
        tau = rng.uniform(-3, 3, z.n)
        back = semimetric.gmvt_derivative(semimetric.gmvt_apply(tau, z), z)
        worst = max(worst, float(np.abs(back - tau).max()))
    return CheckResult("GMVT derivative inverts GMVT", worst <= 1e-10, f"max error {worst:.2e}")


def check_nets(rng) -> CheckResult:
    ok = True
    for n in (16, 32, 64):
        z = gallery.circle_boundary(n)
        for eps in rng.uniform(0.05, 0.9, 3):
            net = semimetric.epsilon_net(z, eps, seed=int(rng.integers(n)))
            cover = z.rho[:, net].min(axis=1).max() < eps
            sub = z.rho[np.ix_(net, net)] + np.eye(len(net)) * 9
            ok &= bool(cover and sub.min() >= eps)
    return CheckResult("epsilon nets cover and separate", ok, "circles 16/32/64")


def check_equicontinuity(rng) -> CheckResult:
    fam = [gallery.circle_boundary(n) for n in (8, 16, 32)]
    grid = np.linspace(0.01, 1.0, 25)
    mod = semimetric.equicontinuity_modulus(fam, grid)
    ok = bool(np.all(mod.omegas <= mod.deltas + 1e-12) and np.all(np.diff(mod.omegas) >= 0))
    return CheckResult("equicontinuity modulus of metrics below delta", ok, f"max omega {mod.omegas.max():.4f}")


def check_discrepancy_laws(rng) -> CheckResult:
    bad = 0
    for z in _spaces(rng, 100, 4, 16):
        t1, t2 = rng.uniform(-5, 5, (2, z.n))
        d1, d2 = moebius.discrepancy(t1, z), moebius.discrepancy(t2, z)
        lip = 2 * np.abs(t1 - t2).max()
        bad += np.abs(d1 - d2).max() > lip * (1 + 1e-12)
        bad += np.abs(d1).max() > 2 * np.abs(t1).max() * (1 + 1e-12)
    return CheckResult("discrepancy Lipschitz and growth bounds", bad == 0, f"{bad} violations")


def check_flow_estimate(rng) -> CheckResult:
    worst = -math.inf
    for z in _spaces(rng, 10, 4, 10):
        tau0 = TauVector(rng.uniform(-5, 5, z.n), z)
        lim = moebius.antipodalize(tau0, tol=1e-11)
        traj = moebius.flow_trajectory(tau0, h=moebius.DEFAULT_STEP, T=10.0)
        d0 = traj.discrepancy_norms[0]
        gap = np.abs(traj.taus - lim.values).max(axis=1) - 4 * d0 * np.exp(-traj.times / 2)
        worst = max(worst, float(gap.max()))
    return CheckResult("flow within exponential estimate", worst <= 1e-4, f"worst slack {worst:.3e}")


def _members(rng, z, count, scale=3.0):
    return moebius.antipodalize_many(rng.uniform(-scale, scale, (count, z.n)), z)


def check_geodesic_scaling(rng) -> CheckResult:
    worst = 0.0
    z = gallery.circle_boundary(12)
    for p in _members(rng, z, 10):
        for t in np.linspace(0, 1, 11):
            q = moebius.geodesic_point(p, float(t))
            worst = max(worst, abs(q.norm - t * p.norm))
    return CheckResult("geodesic scaling", worst <= 1e-4, f"max error {worst:.2e}")


def check_retraction(rng) -> CheckResult:
    worst = 0.0
    z = gallery.random_antipodal(8, int(rng.integers(2**31)))
    far = [p for p in _members(rng, z, 40, 6.0) if p.norm > 1.0]
    for p in far:
        R = float(rng.uniform(0.2, 0.9)) * p.norm
        q = moebius.retract_ball(p, R)
        worst = max(worst, abs(q.norm - R), abs(p.norm - moebius.moebius_metric(p, q) - R))
    return CheckResult("retraction identities", worst <= 1e-6, f"{len(far)} points, max error {worst:.2e}")


def check_membership_preserved(rng) -> CheckResult:
    z = gallery.circle_boundary(10)
    res = []
    for p in _members(rng, z, 10, 4.0):
        res.append(moebius.retract_ball(p, 1.0).membership_residual)
        res.append(moebius.geodesic_point(p, 0.3).membership_residual)
    res += [p.membership_residual for p in moebius.ray_points(z, 2.0)]
    worst = max(res)
    return CheckResult("membership preserved", worst <= moebius.MEMBER_TOL, f"max residual {worst:.2e}")


def check_gromov_bound(rng) -> CheckResult:
    z = gallery.circle_boundary(8)
    s = moebius.sample_ball(z, 3.0, 40, int(rng.integers(2**31)))
    taus, norms = s.taus, np.array([p.norm for p in s.points])
    G = 0.5 * (norms[:, None] + norms[None, :] - s.gram)
    bad = 0
    for a, b in itertools.combinations(range(len(taus)), 2):
        A, B = moebius.argmax_set(taus[a]), moebius.argmax_set(taus[b])
        if set(A) & set(B):
            continue
        for x in A:
            for y in B:
                bad += G[a, b] > -math.log(z.rho[x, y]) + 1e-9
    return CheckResult("Gromov product below boundary bound", bad == 0, f"{bad} violations")


def check_hyperconvexity(rng) -> CheckResult:
    z = gallery.z4()
    s = moebius.sample_ball(z, 2.0, 30, int(rng.integers(2**31)))
    fails = 0
    for _ in range(20):
        idx = rng.choice(len(s.points), 3, replace=False)
        g = s.gram[np.ix_(idx, idx)]
        r = np.full(3, g.max() / 2) + rng.uniform(0, 0.2, 3)
        res = moebius.hyperconvexity_check(s, list(zip(idx, r)))
        fails += not res.success
    return CheckResult("ball families intersect", fails == 0, f"{fails} failures of 20")


def check_ai_symmetry(rng) -> CheckResult:
    ok = True
    for _ in range(4):
        a, b = _spaces(rng, 2, 4, 5)
        ok &= rough.ai_distance(a, b).value == rough.ai_distance(b, a).value
    return CheckResult("AI distance symmetric", ok, "4 exact pairs")


def check_ai_zero_iff_isometric(rng) -> CheckResult:
    ok = True
    for k in range(4):
        a = gallery.random_antipodal(5, int(rng.integers(2**31)))
        p = rng.permutation(5)
        iso = semimetric.validate_semimetric(a.rho[np.ix_(p, p)])
        ok &= rough.ai_distance(a, iso).value == 0.0
        other = gallery.random_antipodal(5, int(rng.integers(2**31)))
        ok &= rough.ai_distance(a, other).value > 0.0
    return CheckResult("AI distance zero exactly on isometric pairs", ok, "4 isometric, 4 generic")


def check_inverse(rng) -> CheckResult:
    worst = -math.inf
    for n in (16, 32):
        z = gallery.circle_boundary(n)
        for size in (3, 5, 8):
            net = semimetric.farthest_point_order(z, size, seed=int(rng.integers(n)))
            f = rough.PointMap(semimetric.subspace(z, net), z, tuple(net))
            rep = rough.report_for(f)
            g = rough.invert_rough_isometry(f, rep)
            worst = max(worst, rough.distortion(g) - 3 * rep.epsilon)
    return CheckResult("inverse map within 3 eps", worst <= 1e-12, f"worst slack {worst:.3e}")


def check_smoothing(rng) -> CheckResult:
    z = gallery.circle_boundary(32)
    net = semimetric.epsilon_net(z, 0.3)
    pou = filling.partition_of_unity(z, net, 0.3)
    sums = np.abs(pou.weights.sum(axis=0) - 1).max()
    support = bool(np.all((pou.weights > 0) <= (z.rho[net] < 0.3)))
    worst = -math.inf
    for _ in range(20):
        v = rng.uniform(-4, 4, len(net))
        worst = max(worst, np.abs(filling.smoothing_operator(v, pou)).max() - np.abs(v).max())
    ok = sums <= 1e-12 and support and worst <= 1e-12
    return CheckResult("partition of unity and smoothing", bool(ok), f"column sum error {sums:.1e}")


def check_filling_base_point(rng) -> CheckResult:
    z = gallery.circle_boundary(32)
    ok = True
    for size in (4, 8, 16):
        idx = filling.antipodal_net(z, size)
        zn = semimetric.validate_antipodal(semimetric.subspace(z, idx))
        out = filling.filling_map(moebius.base_point(z), rough.PointMap(zn, z, tuple(idx)), 2.0, target=zn)
        ok &= bool(np.all(out.values == 0.0))
    return CheckResult("filling map sends base point to base point", ok, "nets 4/8/16")


def check_circle_doubling(rng) -> CheckResult:
    ok = True
    for n in (4, 6, 8, 16, 32):
        a, b = gallery.circle_boundary(n), gallery.circle_boundary(2 * n)
        f = rough.PointMap(a, b, tuple(range(0, 2 * n, 2)))
        ok &= rough.distortion(f) <= 1e-15
    return CheckResult("circle(n) sits isometrically in circle(2n)", ok, "n = 4..32")


def check_gallery_valid(rng) -> CheckResult:
    for n in (4, 5, 7, 16):
        semimetric.validate_antipodal(gallery.circle_boundary(n))
    for b, d in ((2, 1), (2, 3), (3, 2)):
        semimetric.validate_antipodal(gallery.tree_boundary(b, d))
    for _ in range(5):
        z = gallery.random_antipodal(int(rng.integers(4, 10)), int(rng.integers(2**31)))
        semimetric.validate_antipodal(gallery.perturb_antipodal(z, 0.5 * gallery.min_separation(z) * 0.9,
                                                                int(rng.integers(2**31))))
    return CheckResult("gallery outputs are antipodal", True, "circle, tree, random, perturb")


def check_shadows(rng) -> CheckResult:
    z = gallery.z4()
    rep = boundary.boundary_convergence_experiment(z, [0.05, 0.01], 3.0, seed=int(rng.integers(2**31)),
                                                   extra_count=8)
    ok = rep.partitions_ok and rep.cross_violations == 0
    return CheckResult("shadows partition and cross Gromov bound", ok, f"{rep.cross_violations} violations")


CHECKS: list[Callable] = [
    check_cross_ratio_invariance,
    check_gmvt_round_trip,
    check_nets,
    check_equicontinuity,
    check_discrepancy_laws,
    check_flow_estimate,
    check_geodesic_scaling,
    check_retraction,
    check_membership_preserved,
    check_gromov_bound,
    check_hyperconvexity,
    check_ai_symmetry,
    check_ai_zero_iff_isometric,
    check_inverse,
    check_smoothing,
    check_filling_base_point,
    check_circle_doubling,
    check_gallery_valid,
    check_shadows,
]


def run_invariant_suite(seed: int) -> list[CheckResult]:
    out = []
    for k, check in enumerate(CHECKS):
        rng = np.random.default_rng([seed, k])
        try:
            out.append(check(rng))
        except Exception as exc:  # a crash is a failed invariant, not a suite abort
            out.append(CheckResult(check.__name__.removeprefix("check_"), False, f"{type(exc).__name__}: {exc}"))
    return out
