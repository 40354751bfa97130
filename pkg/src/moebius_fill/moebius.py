"""The filling M(Z) of a finite antipodal space, in log-derivative coordinates.

A point of M(Z) is stored as the vector ``tau = log(d rho / d rho0)`` over the
base antipodal space. It is a member exactly when its discrepancy vanishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BaseMismatch,
    BudgetExceeded,
    DimensionMismatch,
    NonfiniteState,
    NotAntipodalWithinTol,
    PairwiseConditionViolated,
    RayConstructionFailed,
)
from .semimetric import (
    AntipodalSpace,
    _frozen,
    gmvt_apply,
    validate_antipodal,
    validate_semimetric,
)

MEMBER_TOL = 1e-8
ARGMAX_TIE = 1e-9
DEFAULT_STEP = 0.05
MAX_STEPS = 10**6
_BATCH = 64


@dataclass(frozen=True, eq=False)
class TauVector:
    values: np.ndarray
    base: AntipodalSpace

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.base.n,):
            raise DimensionMismatch(f"tau has shape {v.shape}, base has {self.base.n} points")
        if not np.all(np.isfinite(v)):
            raise NonfiniteState("tau has non-finite entries")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def norm(self) -> float:
        return float(np.abs(self.values).max())

    def __neg__(self):
        return TauVector(-self.values, self.base)

    def scaled(self, t: float) -> "TauVector":
        return TauVector(t * self.values, self.base)


@dataclass(frozen=True, eq=False)
class MoebiusPoint:
    tau: TauVector
    membership_residual: float

    @property
    def values(self) -> np.ndarray:
        return self.tau.values

    @property
    def base(self) -> AntipodalSpace:
        return self.tau.base

    @property
    def norm(self) -> float:
        return self.tau.norm


@dataclass(frozen=True)
class MembershipRejection:
    residual: float
    rows: tuple
    signs: tuple

    def __bool__(self):
        return False


@dataclass(frozen=True, eq=False)
class FlowTrajectory:
    times: np.ndarray
    taus: np.ndarray
    discrepancy_norms: np.ndarray
    base: AntipodalSpace

    def tau_at(self, k: int) -> TauVector:
        return TauVector(self.taus[k], self.base)


def _values(tau) -> np.ndarray:
    return np.asarray(getattr(tau, "values", tau), dtype=float)


def _space(tau, rho):
    if rho is not None:
        return rho
    base = getattr(tau, "base", None)
    if base is None:
        raise TypeError("a raw vector needs an explicit antipodal space")
    return base


def as_tau(tau, base: AntipodalSpace | None = None) -> TauVector:
    if isinstance(tau, MoebiusPoint):
        return tau.tau
    if isinstance(tau, TauVector):
        return tau
    return TauVector(np.asarray(tau, dtype=float), base)


def base_point(base: AntipodalSpace) -> MoebiusPoint:
    """rho0 itself, the zero vector."""
    return MoebiusPoint(TauVector(np.zeros(base.n), base), 0.0)


def _disc(x: np.ndarray, L: np.ndarray) -> np.ndarray:
    # x: (..., n); D_i = max_{j != i} x_i + x_j + L_ij
    return x + (x[..., None, :] + L).max(axis=-1)


def discrepancy(tau, rho: AntipodalSpace | None = None) -> np.ndarray:
    rho = _space(tau, rho)
    x = _values(tau)
    if x.shape[-1] != rho.n:
        raise DimensionMismatch(f"tau has {x.shape[-1]} entries, space has {rho.n} points")
    return _disc(x, rho.log_rho2)


def discrepancy_argmax(tau, rho: AntipodalSpace | None = None) -> np.ndarray:
    """For each i, the lowest index j attaining the discrepancy maximum."""
    rho = _space(tau, rho)
    x = _values(tau)
    return (x[None, :] + rho.log_rho2).argmax(axis=1)


def _check_bases(a, b):
    if not a.base.same_as(b.base):
        raise BaseMismatch("points live over different base spaces")


def moebius_metric(a, b) -> float:
    a, b = as_tau(a), as_tau(b)
    _check_bases(a, b)
    return float(np.abs(a.values - b.values).max())


def is_member(tau, tol: float = MEMBER_TOL):
    t = as_tau(tau)
    d = discrepancy(t)
    res = float(np.abs(d).max())
    if res <= tol:
        return MoebiusPoint(t, res)
    bad = np.flatnonzero(np.abs(d) > tol)
    return MembershipRejection(res, tuple(int(i) for i in bad), tuple(int(np.sign(d[i])) for i in bad))


def flow_trajectory(tau0, rho: AntipodalSpace | None = None, h: float = DEFAULT_STEP,
                    T: float = 20.0) -> FlowTrajectory:
    """Explicit Euler integration of d tau/dt = -D(tau) on [0, T]."""
    if h <= 0 or T <= 0:
        raise ValueError("step and horizon must be positive")
    rho = _space(tau0, rho)
    L = rho.log_rho2
    steps = int(math.ceil(T / h - 1e-9))
    x = _values(tau0).copy()
    taus = np.empty((steps + 1, rho.n))
    norms = np.empty(steps + 1)
    for k in range(steps + 1):
        d = _disc(x, L)
        taus[k] = x
        norms[k] = np.abs(d).max()
        if not np.isfinite(norms[k]):
            raise NonfiniteState(f"flow state blew up at step {k}")
        x = x - h * d
    return FlowTrajectory(h * np.arange(steps + 1), taus, norms, rho)


def _flow_to_member(X: np.ndarray, L: np.ndarray, tol: float, h: float, max_steps: int):
    """Run each row until the a-priori bound gives tol/2 and the residual is <= tol.

    Rows are frozen as soon as they stop, so each row's result is independent
    of what else is in the batch.
    """
    X = np.array(X, dtype=float, copy=True)
    D = _disc(X, L)
    d0 = np.abs(D).max(axis=1)
    with np.errstate(divide="ignore"):
        t_min = np.where(d0 > 0, 2.0 * np.log(np.maximum(8.0 * d0 / tol, 1.0)), 0.0)
    res = d0.copy()
    # the running rows are kept as a compact block, rebuilt only when one stops
    idx = np.arange(len(X))
    x, d, r, tm = X, D, res, t_min
    t = 0.0
    for step in range(max_steps + 1):
        done = (t >= tm - 1e-12) & (r <= tol)
        if done.any():
            X[idx], res[idx] = x, r
            keep = ~done
            idx, x, d, r, tm = idx[keep], x[keep], d[keep], r[keep], tm[keep]
            if len(idx) == 0:
                return X, res
        if step == max_steps:
            break
        x = x - h * d
        t += h
        d = _disc(x, L)
        r = np.abs(d).max(axis=1)
        if not np.isfinite(r.max()):
            raise NonfiniteState("antipodal flow produced non-finite values")
    X[idx], res[idx] = x, r
    raise BudgetExceeded(f"flow did not reach tolerance {tol:g} in {max_steps} steps",
                         residual=float(r.max()))


def antipodalize(tau, rho: AntipodalSpace | None = None, tol: float = MEMBER_TOL,
                 h: float = DEFAULT_STEP, max_steps: int = MAX_STEPS) -> MoebiusPoint:
    """Limit of the antipodal flow started at ``tau``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    rho = _space(tau, rho)
    X, res = _flow_to_member(_values(tau)[None, :], rho.log_rho2, tol, h, max_steps)
    return MoebiusPoint(TauVector(X[0], rho), float(res[0]))


def antipodalize_many(values, rho: AntipodalSpace, tol: float = MEMBER_TOL,
                      h: float = DEFAULT_STEP, max_steps: int = MAX_STEPS) -> list[MoebiusPoint]:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    out = []
    for start in range(0, len(values), _BATCH):
        X, res = _flow_to_member(values[start:start + _BATCH], rho.log_rho2, tol, h, max_steps)
        out.extend(MoebiusPoint(TauVector(x, rho), float(r)) for x, r in zip(X, res))
    return out


def retract_ball(p, R: float, tol: float = MEMBER_TOL) -> MoebiusPoint:
    """Radial retraction onto the closed ball of radius R about the base point."""
    if R <= 0:
        raise ValueError("R must be positive")
    t = as_tau(p)
    if t.norm <= R:
        return p if isinstance(p, MoebiusPoint) else MoebiusPoint(t, float(np.abs(discrepancy(t)).max()))
    return antipodalize(t.scaled(R / t.norm), tol=tol)


def retract_many(points: Sequence[MoebiusPoint], R: float, tol: float = MEMBER_TOL) -> list[MoebiusPoint]:
    out = list(points)
    far = [k for k, p in enumerate(points) if p.norm > R]
    if far:
        base = points[far[0]].base
        starts = np.stack([points[k].values * (R / points[k].norm) for k in far])
        for k, q in zip(far, antipodalize_many(starts, base, tol)):
            out[k] = q
    return out


def geodesic_point(p, t: float, tol: float = MEMBER_TOL) -> MoebiusPoint:
    """Point at fraction ``t`` of the way from the base point to ``p``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    return antipodalize(as_tau(p).scaled(t), tol=tol)


def argmax_set(tau, tie: float = ARGMAX_TIE) -> np.ndarray:
    v = _values(tau)
    return np.flatnonzero(v >= v.max() - tie)


def ray_candidate(base: AntipodalSpace, zeta: int, t: float) -> np.ndarray:
    """t - 2 max(0, t + log rho0(zeta, .)), with value t at zeta itself."""
    with np.errstate(divide="ignore"):
        lr = np.log(base.rho[zeta])
    v = t - 2.0 * np.maximum(0.0, t + lr)
    v[zeta] = t
    return v


def boundary_ray_point(base: AntipodalSpace, zeta: int, t: float, tol: float = MEMBER_TOL,
                       strict: bool = True) -> MoebiusPoint:
    """Point at distance ``t`` from the base point on a ray toward boundary point ``zeta``.

    With ``strict`` the result must sit at distance t (within 1e-6) and have
    ``{zeta}`` as its argmax set; otherwise RayConstructionFailed is raised.
    """
    if not 0 <= zeta < base.n:
        raise IndexError(f"boundary index {zeta} out of range")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return base_point(base)
    p = antipodalize(TauVector(ray_candidate(base, zeta, t), base), tol=tol)
    if strict:
        am = argmax_set(p)
        if abs(p.norm - t) > 1e-6 or list(am) != [zeta]:
            raise RayConstructionFailed(
                f"ray toward {base.labels[zeta]!r} at t={t}: norm {p.norm:.6g}, argmax {am.tolist()}"
            )
    return p


def ray_points(base: AntipodalSpace, t: float, tol: float = MEMBER_TOL, strict: bool = False) -> list[MoebiusPoint]:
    if t == 0:
        return [base_point(base)] * base.n
    starts = np.stack([ray_candidate(base, z, t) for z in range(base.n)])
    pts = antipodalize_many(starts, base, tol)
    if strict:
        for z, p in enumerate(pts):
            if abs(p.norm - t) > 1e-6 or list(argmax_set(p)) != [z]:
                raise RayConstructionFailed(f"ray toward {base.labels[z]!r} at t={t}")
    return pts


def gromov_product(a, b, base=None) -> float:
    """(a|b)_x = (d(a,x) + d(b,x) - d(a,b)) / 2, with x the base point by default."""
    a, b = as_tau(a), as_tau(b)
    x = as_tau(base) if base is not None else TauVector(np.zeros(a.base.n), a.base)
    return 0.5 * (moebius_metric(a, x) + moebius_metric(b, x) - moebius_metric(a, b))


def visual_function_at(p, tol: float = MEMBER_TOL) -> AntipodalSpace:
    t = as_tau(p)
    s = gmvt_apply(t, t.base)
    try:
        return validate_antipodal(s, tol=max(tol, 1e-12))
    except Exception as exc:
        raise NotAntipodalWithinTol(str(exc)) from exc


def boundary_gromov_product(i: int, j: int, at=None, base: AntipodalSpace | None = None) -> float:
    """-log rho_x(i, j) for the visual function at ``at`` (the base point by default).

    Returns ``math.inf`` when i == j.
    """
    if i == j:
        return math.inf
    if at is None:
        r = base.rho
    else:
        t = as_tau(at)
        r = gmvt_apply(t, t.base).rho
    return float(-np.log(r[i, j]))


def gram_matrix(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    g = np.empty((len(values), len(values)))
    for k in range(0, len(values), _BATCH):
        g[k:k + _BATCH] = np.abs(values[k:k + _BATCH, None, :] - values[None, :, :]).max(axis=2)
    return g


@dataclass(frozen=True, eq=False)
class BallSample:
    center: MoebiusPoint
    radius: float
    points: tuple
    gram: np.ndarray = field(repr=False)

    @property
    def base(self) -> AntipodalSpace:
        return self.center.base

    @property
    def taus(self) -> np.ndarray:
        return np.stack([p.values for p in self.points])

    def to_json(self) -> dict:
        return {
            "center_tau": self.center.values.tolist(),
            "R": self.radius,
            "taus": self.taus.tolist(),
            "gram": self.gram.tolist(),
        }


def _farthest_fill(g: np.ndarray, chosen: list[int], count: int) -> list[int]:
    chosen = list(chosen)
    dist = g[:, chosen].min(axis=1) if chosen else np.full(len(g), np.inf)
    while len(chosen) < count:
        k = int(dist.argmax())
        if dist[k] <= 0 and chosen:
            break
        chosen.append(k)
        dist = np.minimum(dist, g[k])
    return chosen


def sample_ball(base: AntipodalSpace, R: float, count: int, seed: int,
                oversample: int = 3, tol: float = MEMBER_TOL) -> BallSample:
    """Finite sample of the closed ball B(rho0, R).

    Always contains rho0 and the ray points at radius R; the remainder is the
    farthest-point thinning of antipodalized, retracted uniform draws.
    """
    if R <= 0 or count < 1:
        raise ValueError("need R > 0 and count >= 1")
    forced = [base_point(base)] + ray_points(base, R, tol)
    n_rand = max(oversample * count, count + 8)
    draws = np.stack([
        np.random.default_rng([seed, k]).uniform(-R, R, base.n) for k in range(n_rand)
    ])
    cands = retract_many(antipodalize_many(draws, base, tol), R, tol)
    pool = forced + cands
    vals = np.stack([p.values for p in pool])
    g = gram_matrix(vals)
    nf = len(forced)
    if count <= nf:
        sub = g[:nf, :nf]
        keep = _farthest_fill(sub, [0], count)
    else:
        keep = _farthest_fill(g, list(range(nf)), count)
    keep_pts = tuple(pool[k] for k in keep)
    return BallSample(pool[0], float(R), keep_pts, g[np.ix_(keep, keep)])


def ball_sample_from_json(data: dict, base: AntipodalSpace) -> BallSample:
    pts = tuple(MoebiusPoint(TauVector(np.asarray(t), base), float(np.abs(discrepancy(np.asarray(t), base)).max()))
                for t in data["taus"])
    center = MoebiusPoint(TauVector(np.asarray(data["center_tau"]), base), 0.0)
    return BallSample(center, float(data["R"]), pts, np.asarray(data["gram"], dtype=float))


@dataclass(frozen=True)
class HyperconvexityResult:
    witness: MoebiusPoint | None
    residual: float
    success: bool
    distances: tuple = ()


def intersect_balls(centers: np.ndarray, radii: np.ndarray, base: AntipodalSpace,
                    tol: float = MEMBER_TOL) -> MoebiusPoint:
    """A member of M(Z) inside every sup-norm ball B(centers[k], radii[k]).

    Starts from the lower corner of the box cut out by the balls, which
    satisfies D <= 0, and raises coordinates one at a time to the largest
    value D allows. A coordinate made tight stays tight, so a single sweep
    lands on a member, and that member is trapped in the box.
    """
    lo = (centers - radii[:, None]).max(axis=0)
    L = base.log_rho2
    x = lo.copy()
    for i in range(base.n):
        x[i] = -(x + L[i]).max()
    return antipodalize(TauVector(x, base), tol=tol)


def hyperconvexity_check(sample: BallSample, balls, tol: float = 1e-4) -> HyperconvexityResult:
    """Search for a point of M(Z) in the intersection of the given closed balls."""
    idx = np.array([int(b[0]) for b in balls])
    radii = np.array([float(b[1]) for b in balls])
    taus = sample.taus[idx]
    d = np.abs(taus[:, None, :] - taus[None, :, :]).max(axis=2)
    slack = radii[:, None] + radii[None, :] - d
    if slack.min() < -tol:
        i, j = np.unravel_index(int(slack.argmin()), slack.shape)
        raise PairwiseConditionViolated(
            f"r[{i}] + r[{j}] < d(x_{i}, x_{j}) by {-slack.min():.3g}", i=int(i), j=int(j)
        )
    y = intersect_balls(taus, radii, sample.base, tol=min(tol, MEMBER_TOL))
    dist = np.abs(taus - y.values).max(axis=1)
    residual = float((dist - radii).max())
    ok = residual <= tol and y.membership_residual <= MEMBER_TOL
    return HyperconvexityResult(y if ok else None, residual, ok, tuple(dist.tolist()))


def hyperbolicity_delta(sample) -> float:
    """Four-point defect: max over quadruples of (largest - middle pair sum) / 2.

    Computed through Gromov products at every base point, which enumerates
    the same quantity as the quadruple scan.
    """
    g = sample.gram if isinstance(sample, BallSample) else np.asarray(sample, dtype=float)
    m = len(g)
    if m < 4:
        return 0.0
    delta = 0.0
    for w in range(m):
        G = 0.5 * (g[:, w][:, None] + g[w, :][None, :] - g)
        for k in range(0, m, 32):
            blk = G[k:k + 32]
            mm = np.minimum(blk[:, :, None], G[None, :, :]).max(axis=1)
            delta = max(delta, float((mm - blk).max()))
    return max(delta, 0.0)


def moebius_point_from_values(values, base: AntipodalSpace, tol: float = MEMBER_TOL) -> MoebiusPoint:
    t = TauVector(np.asarray(values, dtype=float), base)
    m = is_member(t, tol)
    if not m:
        raise NotAntipodalWithinTol(f"residual {m.residual:.3e} exceeds {tol:g}")
    return m


def space_from_visual(p) -> AntipodalSpace:
    """The visual function at ``p`` revalidated from scratch."""
    return validate_antipodal(validate_semimetric(gmvt_apply(p, as_tau(p).base).rho, as_tau(p).base.labels))
