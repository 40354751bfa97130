"""Spheres in M(Z), their linkage components and shadows, and boundary maps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import AmbiguousShadow, ComponentCountMismatch, RayPointUnmapped
from .filling import make_filling_map
from .gallery import perturb_antipodal
from .moebius import (
    ARGMAX_TIE,
    MEMBER_TOL,
    MoebiusPoint,
    antipodalize_many,
    argmax_set,
    base_point,
    gram_matrix,
    ray_points,
    retract_many,
)
from .rough import PointMap, report_for
from .semimetric import AntipodalSpace

SPHERE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SphereSample:
    center: MoebiusPoint
    R: float
    points: tuple
    ray_count: int
    gram: np.ndarray = field(repr=False)

    @property
    def base(self) -> AntipodalSpace:
        return self.center.base

    @property
    def taus(self) -> np.ndarray:
        return np.stack([p.values for p in self.points])

    def ray_index(self, zeta: int) -> int:
        """Sample index of the ray point toward boundary point zeta."""
        return zeta

    def default_link(self) -> float:
        g = self.gram[: self.ray_count, : self.ray_count]
        off = g + np.diag(np.full(self.ray_count, np.inf))
        return float(off.min()) / 3.0


def sphere_sample(base: AntipodalSpace, R: float, extra_count: int = 0, seed: int = 0,
                  tol: float = MEMBER_TOL) -> SphereSample:
    """Ray points toward every boundary point, then retracted random far points."""
    if R <= 0:
        raise ValueError("R must be positive")
    pts = ray_points(base, R, tol)
    extras = []
    k = 0
    while len(extras) < extra_count:
        batch = []
        for _ in range(max(extra_count - len(extras), 1)):
            v = np.random.default_rng([seed, k]).uniform(-1.0, 1.0, base.n)
            k += 1
            batch.append(v * (3.0 * R / max(np.abs(v).max(), 1e-300)))
        far = [p for p in antipodalize_many(np.stack(batch), base, tol) if p.norm > R]
        extras.extend(retract_many(far, R, tol)[: extra_count - len(extras)])
        if k > 1000 * (extra_count + 1):
            break
    pts = tuple(pts) + tuple(extras)
    dist = np.array([p.norm for p in pts])
    bad = np.flatnonzero(np.abs(dist - R) > SPHERE_TOL)
    if bad.size:
        raise RayPointUnmapped(f"sample point {int(bad[0])} sits at distance {dist[bad[0]]:.9g}, not {R}")
    return SphereSample(base_point(base), float(R), pts, base.n, gram_matrix(np.stack([p.values for p in pts])))


@dataclass(frozen=True, eq=False)
class ComponentDecomposition:
    sample: SphereSample
    eps_link: float
    components: tuple  # tuples of sample indices
    shadows: tuple  # tuples of boundary indices, aligned with components

    def component_of_point(self, k: int) -> int:
        for c, members in enumerate(self.components):
            if k in members:
                return c
        raise IndexError(k)

    def component_of_boundary(self, zeta: int) -> int:
        for c, sh in enumerate(self.shadows):
            if zeta in sh:
                return c
        raise IndexError(zeta)

    def diameter(self, c: int) -> float:
        m = list(self.components[c])
        return float(self.sample.gram[np.ix_(m, m)].max())


def components(s: SphereSample, eps_link: float | None = None) -> ComponentDecomposition:
    """Components of the graph joining sample points closer than eps_link.

    The shadow of a component is the set of boundary points whose ray point
    lies in it.
    """
    eps_link = s.default_link() if eps_link is None else float(eps_link)
    if eps_link <= 0:
        raise ValueError("eps_link must be positive")
    adj = s.gram < eps_link
    _, labels = connected_components(csr_matrix(adj), directed=False)
    # relabel by first appearance for a deterministic order
    order = {}
    for lab in labels:
        order.setdefault(int(lab), len(order))
    comp = [[] for _ in order]
    for k, lab in enumerate(labels):
        comp[order[int(lab)]].append(k)
    shadows = [[] for _ in comp]
    owner = {}
    for zeta in range(s.ray_count):
        c = order[int(labels[s.ray_index(zeta)])]
        if zeta in owner and owner[zeta] != c:
            raise AmbiguousShadow(f"boundary point {zeta} claimed by two components")
        owner[zeta] = c
        shadows[c].append(zeta)
    return ComponentDecomposition(s, eps_link, tuple(map(tuple, comp)), tuple(map(tuple, shadows)))


def shadows_partition(d: ComponentDecomposition) -> bool:
    flat = [z for sh in d.shadows for z in sh]
    return sorted(flat) == list(range(d.sample.ray_count))


def _gromov_matrix(g: np.ndarray, norms: np.ndarray) -> np.ndarray:
    return 0.5 * (norms[:, None] + norms[None, :] - g)


@dataclass
class GromovBoundsReport:
    cross_rows: list = field(default_factory=list)  # (xi, eta, boundary, sample, bound, ok)
    same_rows: list = field(default_factory=list)  # (xi, eta, boundary, bound, ok)
    max_cross_gromov: float = -math.inf
    min_same_shadow_gromov: float = math.inf
    cross_point_violations: int = 0

    @property
    def ok(self) -> bool:
        return (self.cross_point_violations == 0 and all(r[-1] for r in self.cross_rows)
                and all(r[-1] for r in self.same_rows))


def component_gromov_bounds(d: ComponentDecomposition, tol: float = SPHERE_TOL) -> GromovBoundsReport:
    s = d.sample
    rho = s.base.rho
    norms = np.array([p.norm for p in s.points])
    G = _gromov_matrix(s.gram, norms)
    diam = [d.diameter(c) for c in range(len(d.components))]
    rep = GromovBoundsReport()
    m = s.ray_count
    for xi in range(m):
        for eta in range(xi + 1, m):
            cu, cv = d.component_of_boundary(xi), d.component_of_boundary(eta)
            bnd = 0.0 - math.log(rho[xi, eta])
            if cu != cv:
                smp = float(G[s.ray_index(xi), s.ray_index(eta)])
                lim = diam[cu] + diam[cv] + tol
                rep.cross_rows.append((xi, eta, bnd, smp, lim, abs(bnd - smp) <= lim))
            else:
                lim = s.R - diam[cu] / 2 - tol
                rep.same_rows.append((xi, eta, bnd, lim, bnd >= lim))
                rep.min_same_shadow_gromov = min(rep.min_same_shadow_gromov, bnd)
    comp_of = np.empty(len(s.points), dtype=int)
    for c, members in enumerate(d.components):
        comp_of[list(members)] = c
    cross = comp_of[:, None] != comp_of[None, :]
    if cross.any():
        rep.max_cross_gromov = float(G[cross].max())
        rep.cross_point_violations = int((G[cross] > s.R + tol).sum())
    return rep


@dataclass(frozen=True)
class BoundaryMapReport:
    distortion: float
    covering_radius: float

    @property
    def epsilon(self) -> float:
        return max(self.distortion, self.covering_radius)


def boundary_map(source: AntipodalSpace, target: AntipodalSpace,
                 ball_map: Callable[[MoebiusPoint], MoebiusPoint], R: float,
                 tol: float = MEMBER_TOL) -> tuple[PointMap, BoundaryMapReport]:
    """zeta goes to the argmax of the image of its ray point (lowest index on ties)."""
    assign = []
    for zeta, p in enumerate(ray_points(source, R, tol)):
        try:
            q = ball_map(p)
        except (KeyError, IndexError) as exc:
            raise RayPointUnmapped(f"ray point toward {source.labels[zeta]!r} has no image") from exc
        if q is None:
            raise RayPointUnmapped(f"ray point toward {source.labels[zeta]!r} has no image")
        assign.append(int(argmax_set(q, ARGMAX_TIE)[0]))
    g = PointMap(source, target, tuple(assign))
    rep = report_for(g)
    return g, BoundaryMapReport(rep.distortion, rep.covering_radius)


@dataclass
class BoundaryRow:
    eta: float
    component_count: int
    epsilon_g: float
    max_cross_gromov: float
    min_same_shadow_gromov: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BoundaryReport:
    R: float
    rows: list = field(default_factory=list)
    maps: list = field(default_factory=list)
    partitions_ok: bool = True
    cross_violations: int = 0

    COLUMNS = ("eta", "component_count", "epsilon_g", "max_cross_gromov", "min_same_shadow_gromov")


def default_radius(delta_target: float | None = None) -> float:
    if delta_target is None:
        return 3.0
    return max(3.0, math.log(2.0 / delta_target))


def _match_components(d0: ComponentDecomposition, dn: ComponentDecomposition, F) -> list[int]:
    """For each component of dn, the component of d0 it corresponds to."""
    s0, sn = d0.sample, dn.sample
    reps = [members[0] for members in d0.components]
    images = np.stack([p.values for p in F.apply_many(s0.taus[reps])])
    near = np.abs(images[:, None, :] - sn.taus[None, :, :]).max(axis=2).argmin(axis=1)
    match = {}
    for c0, k in enumerate(near):
        cn = dn.component_of_point(int(k))
        match.setdefault(cn, c0)
    if len(match) != len(dn.components):
        raise ComponentCountMismatch("sphere components do not match one to one")
    return [match[c] for c in range(len(dn.components))]


def boundary_convergence_experiment(limit: AntipodalSpace, etas, R: float | None = None,
                                    seed: int = 0, extra_count: int = 16,
                                    eps_link: float | None = None,
                                    tol: float = MEMBER_TOL) -> BoundaryReport:
    """Perturb the limit boundary, match far sphere components, and measure the induced map."""
    R = default_radius() if R is None else float(R)
    if limit.n > 8:
        raise ValueError("limit boundary must have at most 8 points")
    s0 = sphere_sample(limit, R, extra_count, seed, tol)
    d0 = components(s0, eps_link)
    report = BoundaryReport(R)
    b0 = component_gromov_bounds(d0)
    report.partitions_ok &= shadows_partition(d0)
    report.cross_violations += b0.cross_point_violations
    for eta in etas:
        zn = perturb_antipodal(limit, float(eta), seed)
        sn = sphere_sample(zn, R, extra_count, seed, tol)
        dn = components(sn, eps_link)
        if len(dn.components) != len(d0.components):
            raise ComponentCountMismatch(
                f"eta={eta}: {len(dn.components)} components against {len(d0.components)}",
                eta=float(eta),
            )
        ident = PointMap(zn, limit, tuple(range(limit.n)))
        F = make_filling_map(ident, R, target=zn, tol=tol)
        match = _match_components(d0, dn, F)
        assign = []
        for xi in range(zn.n):
            shadow = d0.shadows[match[dn.component_of_boundary(xi)]]
            if not shadow:
                raise RayPointUnmapped(f"matched component for {zn.labels[xi]!r} has an empty shadow")
            assign.append(min(shadow))
        g = PointMap(zn, limit, tuple(assign))
        bn = component_gromov_bounds(dn)
        report.partitions_ok &= shadows_partition(dn)
        report.cross_violations += bn.cross_point_violations
        report.maps.append(g)
        report.rows.append(BoundaryRow(
            float(eta), len(dn.components), report_for(g).epsilon,
            max(b0.max_cross_gromov, bn.max_cross_gromov),
            min(b0.min_same_shadow_gromov, bn.min_same_shadow_gromov),
        ))
    return report
