"""Rough isometries between finite semi-metric spaces, AI-distance and GH-distance.

Exact searches binary-search the optimal value over the finite set of
candidate values (every optimum equals one of the pairwise terms) and decide
each threshold by backtracking with forward checking.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ExactBudgetExceeded, NotAMetric
from .semimetric import FiniteSemiMetric, as_semimetric, epsilon_net

AI_EXACT_MAX = 8
GH_EXACT_MAX = 7
METRIC_TOL = 1e-9
DEFAULT_NODE_BUDGET = 5_000_000


@dataclass(frozen=True, eq=False)
class PointMap:
    source: FiniteSemiMetric
    target: FiniteSemiMetric
    assignment: tuple

    def __post_init__(self):
        object.__setattr__(self, "source", as_semimetric(self.source))
        object.__setattr__(self, "target", as_semimetric(self.target))
        a = tuple(int(k) for k in self.assignment)
        if len(a) != self.source.n:
            raise DimensionMismatch(f"map has {len(a)} entries for {self.source.n} source points")
        if any(k < 0 or k >= self.target.n for k in a):
            raise DimensionMismatch("assignment points outside the target")
        object.__setattr__(self, "assignment", a)

    @property
    def index(self) -> np.ndarray:
        return np.asarray(self.assignment, dtype=int)

    def to_json(self) -> list:
        return list(self.assignment)


def identity_map(s) -> PointMap:
    s = as_semimetric(s)
    return PointMap(s, s, tuple(range(s.n)))


def inclusion_map(sub_idx, source, target) -> PointMap:
    return PointMap(source, target, tuple(sub_idx))


@dataclass(frozen=True)
class RoughIsometryReport:
    distortion: float
    covering_radius: float

    @property
    def epsilon(self) -> float:
        return max(self.distortion, self.covering_radius)

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "distortion": self.distortion, "covering_radius": self.covering_radius}


def _dis(dA: np.ndarray, dB: np.ndarray, f: np.ndarray) -> float:
    return float(np.abs(dB[np.ix_(f, f)] - dA).max())


def _cov(dB: np.ndarray, f: np.ndarray) -> float:
    return float(dB[:, np.unique(f)].min(axis=1).max())


def distortion(f: PointMap) -> float:
    return _dis(f.source.rho, f.target.rho, f.index)


def covering_radius(f: PointMap) -> float:
    return _cov(f.target.rho, f.index)


def report_for(f: PointMap) -> RoughIsometryReport:
    return RoughIsometryReport(distortion(f), covering_radius(f))


def is_eps_isometry(f: PointMap, eps: float) -> tuple[bool, RoughIsometryReport]:
    """Strict test: distortion < eps and covering radius < eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    rep = report_for(f)
    return (rep.distortion < eps and rep.covering_radius < eps), rep


@dataclass(frozen=True, eq=False)
class AIResult:
    value: float
    forward: PointMap
    backward: PointMap
    mode: str

    @property
    def forward_report(self) -> RoughIsometryReport:
        return report_for(self.forward)

    @property
    def backward_report(self) -> RoughIsometryReport:
        return report_for(self.backward)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "epsilon": self.value,
            "forward": {"map": self.forward.to_json(), **self.forward_report.to_json()},
            "backward": {"map": self.backward.to_json(), **self.backward_report.to_json()},
        }


# one-direction objective: max(Dis f, covrad f)

def _one_way_cost(dA, dB, f) -> float:
    return max(_dis(dA, dB, f), _cov(dB, f))


def _profiles(dA, dB, F: np.ndarray):
    """Lexicographic keys (worst term, number of worst terms, total) for each row of F."""
    dis = np.abs(dB[F[:, :, None], F[:, None, :]] - dA[None]).reshape(len(F), -1)
    used = np.zeros((len(F), len(dB)), dtype=bool)
    np.put_along_axis(used, F, True, axis=1)
    cov = np.where(used[:, None, :], dB[None], np.inf).min(axis=2)
    terms = np.concatenate([dis, cov], axis=1)
    top = terms.max(axis=1)
    count = (terms >= top[:, None] - 1e-12).sum(axis=1)
    return top, count, terms.sum(axis=1)


def _best_row(keys):
    top, count, total = keys
    k = int(np.lexsort((total, count, top))[0])
    return k, (float(top[k]), int(count[k]), float(total[k]))


def _profile(dA, dB, f):
    return _best_row(_profiles(dA, dB, f[None, :]))[1]


def _signature_order(d: np.ndarray) -> np.ndarray:
    prof = -np.sort(d, axis=1)[:, ::-1]
    return np.lexsort(prof.T[::-1])


def _greedy_start(dA, dB) -> np.ndarray:
    oa, ob = _signature_order(dA), _signature_order(dB)
    f = np.zeros(len(dA), dtype=int)
    done = []
    for k, a in enumerate(oa):
        if k < len(ob):
            f[a] = ob[k]
        else:
            best, arg = np.inf, 0
            for b in range(len(dB)):
                c = np.abs(dB[b, f[done]] - dA[a, done]).max() if done else 0.0
                if c < best:
                    best, arg = c, b
            f[a] = arg
        done.append(a)
    return f


def _single_moves(dA, dB, f, key):
    nb = len(dB)
    for a in range(len(dA)):
        F = np.repeat(f[None, :], nb, axis=0)
        F[:, a] = np.arange(nb)
        k, cand = _best_row(_profiles(dA, dB, F))
        if cand < key:
            f[a] = k
            return cand, True
    return key, False


def _pair_moves(dA, dB, f, key):
    """Best simultaneous reassignment of two source points, if it improves."""
    na, nb = len(dA), len(dB)
    b1, b2 = np.divmod(np.arange(nb * nb), nb)
    for a1 in range(na):
        for a2 in range(a1 + 1, na):
            F = np.repeat(f[None, :], nb * nb, axis=0)
            F[:, a1], F[:, a2] = b1, b2
            k, cand = _best_row(_profiles(dA, dB, F))
            if cand < key:
                f[a1], f[a2] = b1[k], b2[k]
                return cand, True
    return key, False


def _hill_climb(dA, dB, f, max_rounds: int = 10000):
    """Single-point reassignment to a local optimum, escaping with pair moves."""
    f = f.copy()
    key = _profile(dA, dB, f)
    for _ in range(max_rounds):
        key, improved = _single_moves(dA, dB, f, key)
        if not improved:
            key, improved = _pair_moves(dA, dB, f, key)
        if not improved:
            break
    return f, key


def _heuristic_one_way(dA, dB, restarts: int, seed: int, kicks: int = 8):
    """Restarted hill climbing; each restart also tries a few random kicks."""
    rng = np.random.default_rng(seed)
    na, nb = len(dA), len(dB)
    best_f, best_key = None, None
    for r in range(max(restarts, 1)):
        start = _greedy_start(dA, dB) if r == 0 else rng.integers(0, nb, na)
        f, key = _hill_climb(dA, dB, start)
        for _ in range(kicks):
            if key[0] == 0.0:
                break
            g = f.copy()
            moved = rng.choice(na, size=min(3, na), replace=False)
            g[moved] = rng.integers(0, nb, len(moved))
            g, gkey = _hill_climb(dA, dB, g)
            if gkey < key:
                f, key = g, gkey
        if best_key is None or key < best_key:
            best_f, best_key = f, key
        if best_key[0] == 0.0:
            break
    return best_f, _one_way_cost(dA, dB, best_f)


class _Budget:
    def __init__(self, limit):
        self.left = limit

    def tick(self):
        self.left -= 1
        if self.left < 0:
            raise ExactBudgetExceeded("exact search ran out of node budget")


def _ai_feasible(dA, dB, t, budget: _Budget):
    na, nb = len(dA), len(dB)
    # ok[a, b, a', b'] : assigning a->b and a'->b' is within t
    ok = np.abs(dB[None, :, None, :] - dA[:, None, :, None]) <= t
    near = dB <= t
    f = np.full(na, -1)

    def rec(domains):
        budget.tick()
        free = np.flatnonzero(f < 0)
        if free.size == 0:
            return near[:, f].any(axis=1).all()
        sizes = domains[free].sum(axis=1)
        a = int(free[sizes.argmin()])
        for b in np.flatnonzero(domains[a]):
            f[a] = b
            nd = domains & ok[a, b]
            rest = f < 0
            if rest.any() and not nd[rest].any(axis=1).all():
                f[a] = -1
                continue
            used = f[f >= 0]
            reach = near[:, used].any(axis=1)
            if rest.any():
                reach |= near[:, nd[rest].any(axis=0)].any(axis=1)
            if reach.all() and rec(nd):
                return True
            f[a] = -1
        return False

    dom = np.ones((na, nb), dtype=bool)
    return (f.copy() if rec(dom) else None)


def _exact_one_way(dA, dB, upper: float, f_upper, budget: _Budget):
    cands = np.unique(np.concatenate([np.abs(dB[:, None, :, None] - dA[None, :, None, :]).ravel(), dB.ravel()]))
    cands = cands[cands <= upper]
    lo, hi = 0, len(cands) - 1
    best, best_f = upper, f_upper
    while lo <= hi:
        mid = (lo + hi) // 2
        f = _ai_feasible(dA, dB, cands[mid], budget)
        if f is not None:
            best, best_f = _one_way_cost(dA, dB, f), f
            hi = mid - 1
        else:
            lo = mid + 1
    return best_f, best


def ai_distance(a, b, mode: str = "exact", restarts: int = 32, seed: int = 0,
                budget: int = DEFAULT_NODE_BUDGET) -> AIResult:
    """Least eps admitting eps-isometries both ways, as min over map pairs.

    The two directions decouple, so each is minimised on its own.
    """
    a, b = as_semimetric(a), as_semimetric(b)
    dA, dB = a.rho, b.rho
    if mode == "exact":
        if max(a.n, b.n) > AI_EXACT_MAX:
            raise ExactBudgetExceeded(f"exact AI search limited to {AI_EXACT_MAX} points", n=max(a.n, b.n))
        # a cheap upper bound is enough to seed the exact search
        fwd, fc = _heuristic_one_way(dA, dB, min(restarts, 4), seed, kicks=1)
        bwd, bc = _heuristic_one_way(dB, dA, min(restarts, 4), seed, kicks=1)
        bud = _Budget(budget)
        if fc > 0:
            fwd, fc = _exact_one_way(dA, dB, fc, fwd, bud)
        if bc > 0:
            bwd, bc = _exact_one_way(dB, dA, bc, bwd, bud)
    elif mode == "heuristic":
        fwd, fc = _heuristic_one_way(dA, dB, restarts, seed)
        bwd, bc = _heuristic_one_way(dB, dA, restarts, seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return AIResult(max(fc, bc), PointMap(a, b, fwd), PointMap(b, a, bwd), mode)


def invert_rough_isometry(f: PointMap, report: RoughIsometryReport | None = None) -> PointMap:
    """Nearest-preimage inverse that restricts to a left inverse on a 2eps-net of the source."""
    report = report or report_for(f)
    eps = report.epsilon
    src, tgt = f.source, f.target
    net = set(epsilon_net(src, 2 * eps)) if eps > 0 else set(range(src.n))
    img = f.index
    d = tgt.rho[:, img]  # d[y, x] = rho_T(y, f(x))
    # ties: net points first, then lowest index
    order = sorted(range(src.n), key=lambda x: (x not in net, x))
    d_ord = d[:, order]
    g = [order[int(k)] for k in d_ord.argmin(axis=1)]
    return PointMap(tgt, src, tuple(g))


def net_of_inverse(f: PointMap, report: RoughIsometryReport | None = None) -> list[int]:
    eps = (report or report_for(f)).epsilon
    return epsilon_net(f.source, 2 * eps) if eps > 0 else list(range(f.source.n))


# Gromov-Hausdorff

def check_metric(d: np.ndarray, tol: float = METRIC_TOL) -> None:
    excess = d[:, None, :] - d[:, :, None] - d[None, :, :].transpose(0, 2, 1)
    # excess[i, j, k] = d[i, k] - d[i, j] - d[j, k]
    worst = float(excess.max())
    if worst > tol:
        raise NotAMetric(f"triangle inequality fails by {worst:.3g}", excess=worst)


def _as_gram(x) -> np.ndarray:
    if hasattr(x, "gram"):
        return np.asarray(x.gram, dtype=float)
    return as_semimetric(x).rho


def correspondence_distortion(dX, dY, f, g) -> float:
    """dis of graph(f) united with the transpose of graph(g)."""
    xs = np.concatenate([np.arange(len(dX)), g])
    ys = np.concatenate([f, np.arange(len(dY))])
    return float(np.abs(dX[np.ix_(xs, xs)] - dY[np.ix_(ys, ys)]).max())


def _gh_feasible(dX, dY, t, budget: _Budget):
    nx, ny = len(dX), len(dY)
    # couple (x, y) flattened to x * ny + y
    ok = (np.abs(dX[:, None, :, None] - dY[None, :, None, :]) <= t).reshape(nx * ny, nx * ny)
    chosen = []

    def rec(allowed, cov_x, cov_y):
        budget.tick()
        if cov_x.all() and cov_y.all():
            return True
        A = allowed.reshape(nx, ny)
        opts_x = np.where(cov_x, np.inf, A.sum(axis=1))
        opts_y = np.where(cov_y, np.inf, A.sum(axis=0))
        if opts_x.min() == 0 or opts_y.min() == 0:
            return False
        if opts_x.min() <= opts_y.min():
            x = int(opts_x.argmin())
            branch = [x * ny + y for y in np.flatnonzero(A[x])]
        else:
            y = int(opts_y.argmin())
            branch = [x * ny + y for x in np.flatnonzero(A[:, y])]
        for c in branch:
            chosen.append(c)
            cx, cy = cov_x.copy(), cov_y.copy()
            cx[c // ny] = True
            cy[c % ny] = True
            if rec(allowed & ok[c], cx, cy):
                return True
            chosen.pop()
        return False

    diag_ok = ok[np.arange(nx * ny), np.arange(nx * ny)]
    if rec(diag_ok.copy(), np.zeros(nx, bool), np.zeros(ny, bool)):
        f = np.full(nx, -1)
        g = np.full(ny, -1)
        for c in chosen:
            x, y = divmod(c, ny)
            if f[x] < 0:
                f[x] = y
            if g[y] < 0:
                g[y] = x
        return f, g
    return None


@dataclass(frozen=True)
class GHResult:
    value: float
    f: tuple
    g: tuple
    mode: str

    def to_json(self) -> dict:
        return {"mode": self.mode, "gh_distance": self.value, "f": list(self.f), "g": list(self.g)}


def _gh_anneal(dX, dY, seed: int, steps: int):
    rng = np.random.default_rng(seed)
    nx, ny = len(dX), len(dY)
    f = _greedy_start(dX, dY)
    g = _greedy_start(dY, dX)
    cur = correspondence_distortion(dX, dY, f, g)
    best = (cur, f.copy(), g.copy())
    temp0 = max(cur, 1e-12) * 0.1
    for k in range(steps):
        temp = temp0 * (1.0 - k / steps) + 1e-15
        nf, ng = f.copy(), g.copy()
        if rng.random() < nx / (nx + ny):
            nf[rng.integers(nx)] = rng.integers(ny)
        else:
            ng[rng.integers(ny)] = rng.integers(nx)
        new = correspondence_distortion(dX, dY, nf, ng)
        if new <= cur or rng.random() < np.exp((cur - new) / temp):
            f, g, cur = nf, ng, new
            if cur < best[0]:
                best = (cur, f.copy(), g.copy())
    return best


def gh_ball_distance(a, b, mode: str = "exact", seed: int = 0, steps: int = 4000,
                     budget: int = DEFAULT_NODE_BUDGET) -> GHResult:
    """Half the least distortion of a correspondence between two finite metric spaces."""
    dX, dY = _as_gram(a), _as_gram(b)
    check_metric(dX)
    check_metric(dY)
    dis, f, g = _gh_anneal(dX, dY, seed, steps)
    if mode == "exact":
        if max(len(dX), len(dY)) > GH_EXACT_MAX:
            raise ExactBudgetExceeded(f"exact GH search limited to {GH_EXACT_MAX} points")
        bud = _Budget(budget)
        cands = np.unique(np.abs(dX[:, None, :, None] - dY[None, :, None, :]).ravel())
        cands = cands[cands <= dis]
        lo, hi = 0, len(cands) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            found = _gh_feasible(dX, dY, cands[mid], bud)
            if found is not None:
                f, g = found
                dis = correspondence_distortion(dX, dY, f, g)
                hi = mid - 1
            else:
                lo = mid + 1
    elif mode != "heuristic":
        raise ValueError(f"unknown mode {mode!r}")
    return GHResult(0.5 * dis, tuple(int(v) for v in f), tuple(int(v) for v in g), mode)
