"""Fillings of finite nets: partitions of unity, smoothing, and the map between balls.

A member of M(Z) is pulled back along a map Z_n -> Z, smoothed on Z_n,
antipodalized over Z_n and retracted to the ball of radius R.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotACover
from .moebius import (
    MEMBER_TOL,
    MoebiusPoint,
    TauVector,
    antipodalize_many,
    as_tau,
    discrepancy,
    gram_matrix,
    retract_many,
    sample_ball,
)
from .rough import PointMap, covering_radius
from .semimetric import AntipodalSpace, as_semimetric, subspace, validate_antipodal


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    net: tuple
    weights: np.ndarray  # weights[k, xi] for net point net[k]
    delta: float


def partition_of_unity(z, net, delta: float) -> PartitionOfUnity:
    """Weights proportional to the separation from the complement of each delta-ball.

    A ball whose complement is empty has infinite weight; such balls share the
    mass equally.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    r = as_semimetric(z).rho
    net = tuple(int(k) for k in net)
    if not net:
        raise NotACover("empty net")
    outside = r[list(net)] >= delta  # outside[k, eta]: eta not in the k-th ball
    w = np.empty((len(net), r.shape[0]))
    for k in range(len(net)):
        if outside[k].any():
            w[k] = r[:, outside[k]].min(axis=1)
        else:
            w[k] = np.inf
    whole = np.isinf(w[:, 0])
    if whole.any():
        w = np.where(whole[:, None], 1.0, 0.0)
    total = w.sum(axis=0)
    if (total <= 0).any():
        bad = int(np.flatnonzero(total <= 0)[0])
        raise NotACover(f"point {bad} lies in no {delta:g}-ball around the net", point=bad)
    P = w / total
    P.setflags(write=False)
    return PartitionOfUnity(net, P, float(delta))


def smoothing_operator(values_on_net, pou: PartitionOfUnity) -> np.ndarray:
    """C(tau)(xi) = sum over net points of tau(zeta) P[zeta](xi)."""
    v = np.asarray(values_on_net, dtype=float)
    if v.shape[-1] != len(pou.net):
        raise DimensionMismatch(f"{v.shape[-1]} values for a net of {len(pou.net)} points")
    return v @ pou.weights


def pullback_tau(tau, f: PointMap) -> np.ndarray:
    """tau composed with f, as values on the source of f."""
    return np.asarray(getattr(tau, "values", tau), dtype=float)[..., f.index]


def default_pou_delta(f: PointMap) -> float:
    return 2.0 * covering_radius(f)


def identity_delta(z) -> float:
    """A delta small enough that every ball is a singleton."""
    r = as_semimetric(z).rho
    return 0.5 * float((r + np.diag(np.full(len(r), np.inf))).min())


@dataclass(frozen=True, eq=False)
class FillingMap:
    """The composite pullback, smoothing, antipodalization and retraction."""

    f: PointMap
    target: AntipodalSpace
    R: float
    pou: PartitionOfUnity
    tol: float = MEMBER_TOL

    def apply_many(self, taus: np.ndarray) -> list[MoebiusPoint]:
        taus = np.atleast_2d(taus)
        smooth = smoothing_operator(pullback_tau(taus, self.f), self.pou)
        return retract_many(antipodalize_many(smooth, self.target, self.tol), self.R, self.tol)

    def __call__(self, p) -> MoebiusPoint:
        return self.apply_many(as_tau(p).values[None, :])[0]


def make_filling_map(f: PointMap, R: float, pou_delta: float | None = None,
                     target: AntipodalSpace | None = None, tol: float = MEMBER_TOL) -> FillingMap:
    target = target if target is not None else validate_antipodal(f.source)
    delta = default_pou_delta(f) if pou_delta is None else pou_delta
    if delta <= 0:
        delta = identity_delta(target)
    pou = partition_of_unity(target, range(target.n), delta)
    return FillingMap(f, target, float(R), pou, tol)


def filling_map(rho_member, f_n: PointMap, R: float, pou_delta: float | None = None,
                target: AntipodalSpace | None = None, tol: float = MEMBER_TOL) -> MoebiusPoint:
    return make_filling_map(f_n, R, pou_delta, target, tol)(rho_member)


def antipodal_net(z: AntipodalSpace, size: int, seed: int = 0) -> list[int]:
    """Farthest-point net closed under taking one antipode per chosen point."""
    r = z.rho
    size = min(size, z.n)
    net = []
    dist = np.full(z.n, np.inf)
    nxt = int(seed)
    while len(net) < size:
        for k in (nxt, int(z.antipodes(nxt)[0])):
            if k not in net and len(net) < size:
                net.append(k)
                dist = np.minimum(dist, r[k])
        nxt = int(dist.argmax())
        if dist[nxt] <= 0:
            break
    return sorted(net)


@dataclass
class FillingRow:
    n: int
    eps_n: float
    distortion: float
    net_defect: float
    sup_discrepancy: float
    wallclock_ms: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class FillingReport:
    R: float
    rows: list = field(default_factory=list)

    COLUMNS = ("n", "eps_n", "distortion", "net_defect", "sup_discrepancy", "wallclock_ms")


def filling_convergence_experiment(z: AntipodalSpace, net_sizes, R: float, sample_count: int = 200,
                                   seed: int = 0, target_count: int | None = None,
                                   tol: float = MEMBER_TOL) -> FillingReport:
    """Measure how well the filling of nested nets approximates the filling of z.

    net_defect is estimated against a sample of the target ball: each target
    sample beta is compared with the image of its preimage candidate (beta
    pulled back to z through the nearest-point map and filled there), and
    with every image of the source sample.
    """
    sizes = list(net_sizes)
    if sizes != sorted(sizes):
        raise ValueError("net sizes must be increasing")
    src = sample_ball(z, R, sample_count, seed, tol=tol)
    src_taus = src.taus
    src_gram = src.gram
    report = FillingReport(float(R))
    for size in sizes:
        t0 = time.perf_counter()
        idx = antipodal_net(z, size)
        zn = validate_antipodal(subspace(z, idx))
        inc = PointMap(zn, z, tuple(idx))
        eps_n = covering_radius(inc)
        F = make_filling_map(inc, R, target=zn, tol=tol)
        img = np.stack([p.values for p in F.apply_many(src_taus)])
        distortion = float(np.abs(gram_matrix(img) - src_gram).max())
        sup_disc = float(np.abs(discrepancy(pullback_tau(src_taus, inc), zn)).max())

        tgt = sample_ball(zn, R, target_count or sample_count, seed + 1, tol=tol)
        nearest = PointMap(z, zn, tuple(int(k) for k in z.rho[:, idx].argmin(axis=1)))
        back = make_filling_map(nearest, R, pou_delta=2.0 * eps_n, target=z, tol=tol)
        pre = np.stack([p.values for p in back.apply_many(tgt.taus)])
        round_trip = np.stack([p.values for p in F.apply_many(pre)])
        via_pre = np.abs(round_trip - tgt.taus).max(axis=1)
        via_img = np.abs(tgt.taus[:, None, :] - img[None, :, :]).max(axis=2).min(axis=1)
        net_defect = float(np.minimum(via_pre, via_img).max())
        ms = 1000.0 * (time.perf_counter() - t0)
        report.rows.append(FillingRow(len(idx), eps_n, distortion, net_defect, sup_disc, ms))
    return report
