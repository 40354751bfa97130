"""Finite semi-metric and antipodal spaces.

A semi-metric here is a symmetric matrix with zero diagonal and strictly
positive off-diagonal entries; no triangle inequality is assumed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
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

STRUCT_TOL = 1e-12
EQUIV_TOL = 1e-8


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteSemiMetric:
    labels: tuple
    rho: np.ndarray

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def diameter(self) -> float:
        return float(self.rho.max())

    def same_as(self, other) -> bool:
        other = as_semimetric(other)
        return self is other or (
            self.labels == other.labels and np.array_equal(self.rho, other.rho)
        )

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "rho": self.rho.tolist()}


@dataclass(frozen=True, eq=False)
class AntipodalSpace:
    """A semi-metric of diameter one in which every point has an antipode."""

    base: FiniteSemiMetric
    _log_rho2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        with np.errstate(divide="ignore"):
            L = 2.0 * np.log(self.base.rho)
        np.fill_diagonal(L, -np.inf)
        L.setflags(write=False)
        object.__setattr__(self, "_log_rho2", L)

    @property
    def rho(self) -> np.ndarray:
        return self.base.rho

    @property
    def labels(self) -> tuple:
        return self.base.labels

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def log_rho2(self) -> np.ndarray:
        """``2 log rho`` with ``-inf`` on the diagonal."""
        return self._log_rho2

    def antipodes(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.rho[i] >= 1.0 - STRUCT_TOL)

    def same_as(self, other) -> bool:
        return self is other or self.base.same_as(other)

    def to_json(self) -> dict:
        return self.base.to_json()


def as_semimetric(s) -> FiniteSemiMetric:
    if isinstance(s, AntipodalSpace):
        return s.base
    if isinstance(s, FiniteSemiMetric):
        return s
    raise TypeError(f"expected a FiniteSemiMetric, got {type(s).__name__}")


def validate_semimetric(m, labels: Sequence | None = None, tol: float = STRUCT_TOL) -> FiniteSemiMetric:
    """Check symmetry, zero diagonal and positivity; return the validated space.

    Symmetry is tested relative to the largest entry and the returned matrix
    is exactly symmetrised.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got shape {m.shape}")
    n = m.shape[0]
    if labels is None:
        labels = tuple(str(i + 1) for i in range(n))
    labels = tuple(labels)
    if len(labels) != n:
        raise DimensionMismatch(f"{len(labels)} labels for a {n}x{n} matrix")
    if len(set(labels)) != n:
        raise DimensionMismatch("labels must be unique")
    if n < 2:
        raise TooFewPoints(f"need at least 2 points, got {n}")
    if not np.all(np.isfinite(m)):
        raise NonpositiveOffDiagonal("matrix has non-finite entries")
    scale = max(float(np.abs(m).max()), 1.0)
    asym = np.abs(m - m.T)
    if asym.max() > tol * scale:
        i, j = np.unravel_index(int(asym.argmax()), asym.shape)
        raise AsymmetricMatrix(f"m[{i}][{j}] != m[{j}][{i}]", i=int(i), j=int(j))
    diag = np.abs(np.diag(m))
    if diag.max() > tol * scale:
        i = int(diag.argmax())
        raise NonzeroDiagonal(f"m[{i}][{i}] = {m[i, i]!r}", i=i)
    off = m + np.diag(np.full(n, np.inf))
    if off.min() <= 0.0:
        i, j = np.unravel_index(int(off.argmin()), off.shape)
        raise NonpositiveOffDiagonal(
            f"m[{i}][{j}] = {m[i, j]!r} is not positive", i=int(i), j=int(j)
        )
    sym = 0.5 * (m + m.T)
    np.fill_diagonal(sym, 0.0)
    return FiniteSemiMetric(labels, _frozen(sym))


def validate_antipodal(s, tol: float = STRUCT_TOL) -> AntipodalSpace:
    s = as_semimetric(s)
    diam = s.diameter
    if abs(diam - 1.0) > tol:
        raise DiameterNotOne(f"diameter is {diam!r}", diameter=diam)
    row_max = s.rho.max(axis=1)
    for i in range(s.n):
        if row_max[i] < 1.0 - tol:
            raise MissingAntipode(s.labels[i])
    return AntipodalSpace(s)


def normalize_diameter(s) -> FiniteSemiMetric:
    s = as_semimetric(s)
    d = s.diameter
    if d == 1.0:
        return s
    return FiniteSemiMetric(s.labels, _frozen(s.rho / d))


def _distinct(*idx):
    if len(set(idx)) != len(idx):
        raise NonDistinctPoints(f"indices {idx} are not distinct")


def cross_ratio(s, xi: int, xi2: int, eta: int, eta2: int) -> float:
    """rho(xi,eta) rho(xi',eta') / (rho(xi,eta') rho(xi',eta))."""
    s = as_semimetric(s)
    if s.n < 4:
        raise TooFewPoints("cross-ratios need at least four points")
    _distinct(xi, xi2, eta, eta2)
    r = s.rho
    return float(r[xi, eta] * r[xi2, eta2] / (r[xi, eta2] * r[xi2, eta]))


def cross_ratios(s) -> np.ndarray:
    """All cross-ratios as an n^4 array (nan where indices repeat)."""
    r = as_semimetric(s).rho
    with np.errstate(divide="ignore", invalid="ignore"):
        cr = (r[:, None, :, None] * r[None, :, None, :]) / (
            r[:, None, None, :] * r[None, :, :, None]
        )
    n = r.shape[0]
    i, j, k, l = np.indices((n, n, n, n))
    distinct = (i != j) & (i != k) & (i != l) & (j != k) & (j != l) & (k != l)
    return np.where(distinct, cr, np.nan)


def _tau_values(tau) -> np.ndarray:
    return np.asarray(getattr(tau, "values", tau), dtype=float)


def gmvt_apply(tau, base) -> FiniteSemiMetric:
    """Moebius-equivalent separation with log-derivative ``tau`` relative to ``base``."""
    s = as_semimetric(base)
    t = _tau_values(tau)
    if t.shape != (s.n,):
        raise DimensionMismatch(f"tau has shape {t.shape}, space has {s.n} points")
    w = np.exp(0.5 * t)
    return FiniteSemiMetric(s.labels, _frozen(w[:, None] * w[None, :] * s.rho))


def gmvt_derivative(rho1, rho0, tol: float = EQUIV_TOL) -> np.ndarray:
    """Recover tau with ``rho1^2 = e^tau_i e^tau_j rho0^2`` by least squares in log space.

    Raises NotMoebiusEquivalent when the max log-residual exceeds ``tol``.
    """
    a, b = as_semimetric(rho1), as_semimetric(rho0)
    if a.n != b.n:
        raise DimensionMismatch(f"{a.n} vs {b.n} points")
    n = a.n
    iu, ju = np.triu_indices(n, 1)
    rhs = np.log(a.rho[iu, ju]) - np.log(b.rho[iu, ju])
    A = np.zeros((len(iu), n))
    A[np.arange(len(iu)), iu] = 0.5
    A[np.arange(len(iu)), ju] = 0.5
    tau, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = float(np.abs(A @ tau - rhs).max()) if len(iu) else 0.0
    if resid > tol:
        raise NotMoebiusEquivalent(f"log residual {resid:.3e} exceeds {tol:.1e}", residual=resid)
    return tau


def quasimetric_constant(s) -> float:
    """Smallest K with rho(i,k) <= K max(rho(i,j), rho(j,k)) over distinct triples."""
    r = as_semimetric(s).rho
    n = r.shape[0]
    if n < 3:
        return 1.0
    best = 1.0
    for j in range(n):
        denom = np.maximum(r[:, j][:, None], r[j, :][None, :])
        ratio = r / np.where(denom > 0, denom, np.inf)
        ratio[j, :] = 0.0
        ratio[:, j] = 0.0
        best = max(best, float(ratio.max()))
    return best


def epsilon_net(s, eps: float, seed: int = 0) -> list[int]:
    """Farthest-point greedy net: strictly eps-covering and eps-separated.

    The walk starts at point ``seed % n``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    r = as_semimetric(s).rho
    start = int(seed) % r.shape[0]
    net = [start]
    dist = r[start].copy()
    while True:
        far = int(dist.argmax())
        if dist[far] < eps:
            return net
        net.append(far)
        dist = np.minimum(dist, r[far])


def farthest_point_order(s, count: int, seed: int = 0) -> list[int]:
    """First ``count`` points of the greedy farthest-point ordering."""
    r = as_semimetric(s).rho
    count = min(count, r.shape[0])
    start = int(seed) % r.shape[0]
    order = [start]
    dist = r[start].copy()
    while len(order) < count:
        far = int(dist.argmax())
        order.append(far)
        dist = np.minimum(dist, r[far])
    return order


def covering_radius_of(s, subset: Iterable[int]) -> float:
    r = as_semimetric(s).rho
    return float(r[:, list(subset)].min(axis=1).max())


def subspace(s, idx: Sequence[int]) -> FiniteSemiMetric:
    s = as_semimetric(s)
    idx = list(idx)
    return FiniteSemiMetric(tuple(s.labels[i] for i in idx), _frozen(s.rho[np.ix_(idx, idx)]))


@dataclass(frozen=True)
class EquicontinuityModulus:
    deltas: np.ndarray
    omegas: np.ndarray


def equicontinuity_modulus(family, delta_grid) -> EquicontinuityModulus:
    """omega(delta): worst |rho(xi,zeta) - rho(eta,zeta)| over pairs with rho(xi,eta) < delta."""
    family = [as_semimetric(s) for s in family]
    if not family:
        raise ValueError("family must be nonempty")
    deltas = np.sort(np.asarray(delta_grid, dtype=float))
    omegas = np.zeros_like(deltas)
    for s in family:
        r = s.rho
        # drift[i, j] = sup_k |r[i,k] - r[j,k]|
        drift = np.abs(r[:, None, :] - r[None, :, :]).max(axis=2)
        close = r + np.diag(np.full(s.n, np.inf))
        for k, d in enumerate(deltas):
            mask = close < d
            if mask.any():
                omegas[k] = max(omegas[k], float(drift[mask].max()))
    return EquicontinuityModulus(deltas, omegas)


def read_space(path) -> FiniteSemiMetric:
    data = json.loads(Path(path).read_text())
    return validate_semimetric(data["rho"], data.get("labels"))


def write_space(s, path) -> None:
    Path(path).write_text(json.dumps(as_semimetric(s).to_json(), indent=1) + "\n")
