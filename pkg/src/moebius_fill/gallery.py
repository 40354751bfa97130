"""Model antipodal spaces: circle nets, tree ends, random spaces and perturbations."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import EtaTooLarge, OddNRequiresRepair
from .semimetric import AntipodalSpace, FiniteSemiMetric, as_semimetric, validate_antipodal, validate_semimetric


@dataclass(frozen=True)
class GallerySpec:
    kind: str
    params: dict = field(default_factory=dict)

    KINDS = ("circle", "tree", "random", "perturb")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown gallery kind {self.kind!r}")

    def build(self, source: AntipodalSpace | None = None) -> AntipodalSpace:
        p = self.params
        if self.kind == "circle":
            return circle_boundary(int(p["n"]))
        if self.kind == "tree":
            return tree_boundary(int(p.get("branching", 2)), int(p["depth"]))
        if self.kind == "random":
            return random_antipodal(int(p["n"]), int(p["seed"]))
        if source is None:
            raise ValueError("perturb needs a source space")
        return perturb_antipodal(source, float(p["eta"]), int(p["seed"]))


def repair_antipodes(rho: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Raise each deficient row's largest entry (lowest index on ties) to 1, symmetrically."""
    rho = rho / rho.max()
    for i in range(len(rho)):
        row = rho[i].copy()
        if row.max() < 1.0 - tol:
            j = int(row.argmax())
            rho[i, j] = rho[j, i] = 1.0
    return rho


def circle_boundary(n: int, repair: bool = True) -> AntipodalSpace:
    """n equally spaced points on the unit circle with rho = |sin(angle / 2)|."""
    if n < 4:
        raise ValueError("circle needs n >= 4")
    theta = 2 * np.pi * np.arange(n) / n
    rho = np.abs(np.sin((theta[:, None] - theta[None, :]) / 2))
    np.fill_diagonal(rho, 0.0)
    if n % 2:
        if not repair:
            raise OddNRequiresRepair(f"n = {n} has no exact antipodes")
        rho = repair_antipodes(rho)
    else:
        # sin(pi/2) is exact but the angle difference is not always
        k = np.arange(n)
        rho[k, (k + n // 2) % n] = 1.0
    return validate_antipodal(validate_semimetric(rho, [str(k) for k in range(n)]))


def tree_boundary(branching: int, depth: int) -> AntipodalSpace:
    """Leaves of a rooted tree; two leaves splitting at depth k sit at e^-k."""
    if branching < 2 or depth < 1:
        raise ValueError("need branching >= 2 and depth >= 1")
    leaves = list(itertools.product(range(branching), repeat=depth))
    codes = np.array(leaves)
    same = codes[:, None, :] == codes[None, :, :]
    # length of common prefix = split depth
    split = np.cumprod(same, axis=2).sum(axis=2)
    rho = np.exp(-split.astype(float))
    np.fill_diagonal(rho, 0.0)
    labels = ["".join(map(str, c)) for c in leaves]
    return validate_antipodal(validate_semimetric(rho, labels))


def min_separation(z) -> float:
    r = as_semimetric(z).rho
    return float((r + np.diag(np.full(len(r), np.inf))).min())


def perturb_antipodal(z: AntipodalSpace, eta: float, seed: int) -> AntipodalSpace:
    """Symmetric uniform noise of size eta, then renormalise and repair antipodes."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    sep = min_separation(z)
    if eta >= sep / 2:
        raise EtaTooLarge(f"eta = {eta} must stay below half the minimum separation {sep:.6g}", eta=eta)
    if eta == 0:
        return z
    n = z.n
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    noise = np.zeros((n, n))
    noise[iu] = rng.uniform(-eta, eta, len(iu[0]))
    noise = noise + noise.T
    rho = np.clip(z.rho + noise, 1e-12, None)
    np.fill_diagonal(rho, 0.0)
    rho = repair_antipodes(rho)
    np.fill_diagonal(rho, 0.0)
    return validate_antipodal(validate_semimetric(rho, z.labels))


def random_antipodal(n: int, seed: int) -> AntipodalSpace:
    """Uniform entries in (0, 1] with points 2k and 2k+1 made antipodal."""
    if n < 4:
        raise ValueError("need n >= 4")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    rho = np.zeros((n, n))
    # 1 - U[0,1) lies in (0, 1]
    rho[iu] = 1.0 - rng.random(len(iu[0]))
    rho = rho + rho.T
    for k in range(0, n - 1, 2):
        rho[k, k + 1] = rho[k + 1, k] = 1.0
    if n % 2:
        rho[n - 1, 0] = rho[0, n - 1] = 1.0
    return validate_antipodal(validate_semimetric(rho))


def z4() -> AntipodalSpace:
    """Four points in two antipodal pairs, every cross separation 1/2."""
    rho = np.full((4, 4), 0.5)
    np.fill_diagonal(rho, 0.0)
    rho[0, 1] = rho[1, 0] = rho[2, 3] = rho[3, 2] = 1.0
    return validate_antipodal(validate_semimetric(rho))


def with_entry(z, i: int, j: int, value: float) -> FiniteSemiMetric:
    """Copy of z with one symmetric pair of entries replaced."""
    r = np.array(as_semimetric(z).rho)
    r[i, j] = r[j, i] = value
    return validate_semimetric(r, as_semimetric(z).labels)
