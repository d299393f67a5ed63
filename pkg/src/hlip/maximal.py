"""Local maximal functions, superlevel sets, and covering arguments.

Two maximal operators act on cell measures over W: one over group-
translated disks D_r(x) = x * D_r normalized by kappa_n r^{2n+1}, and one
over graph-distance balls U_phi(x, r) normalized by their own discrete
measure.  The continuum sup over radii is replaced by a geometric ladder
with ratio 1.1 starting at one cell width; the lemma checks carry 5%
slack for that discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .graph import (
    GridFunction,
    GridSpec,
    _graph_distance_from_point,
    intrinsic_gradient,
    lipschitz_estimate,
    phi_ball,
)

__all__ = [
    "LADDER_RATIO",
    "cell_diameter",
    "DiscreteMeasure",
    "MaximalField",
    "PhiMaximalField",
    "DiskLemmaReport",
    "BallConstants",
    "radius_ladder",
    "disk_maximal",
    "superlevel",
    "check_disk_lemma",
    "vitali_5r",
    "measure_from_gradient",
    "phi_maximal",
    "check_phi_lemma",
    "check_poincare",
    "estimate_ball_constants",
]

LADDER_RATIO = 1.1


def cell_diameter(spec: GridSpec) -> float:
    """Homogeneous diameter of one grid cell, ignoring the group twist.

    The t side of length h alone spans sqrt(h) in the box quasi-norm, so
    for h < 1 this dominates the spatial diagonal; radii below this value
    cannot be resolved by cell counting.
    """
    return max(math.sqrt(2 * spec.n - 1) * spec.h, math.sqrt(spec.h))


@dataclass
class DiscreteMeasure:
    """Nonnegative mass per grid cell of W."""

    spec: GridSpec
    masses: np.ndarray

    def __post_init__(self) -> None:
        self.masses = np.asarray(self.masses, dtype=float)
        if self.masses.shape == (self.spec.size,):
            self.masses = self.masses.reshape(self.spec.counts)
        if self.masses.shape != self.spec.counts:
            raise ValueError("masses must have one entry per cell")
        if not np.all(np.isfinite(self.masses)) or np.any(self.masses < 0):
            raise ValueError("masses must be finite and nonnegative")

    @classmethod
    def from_density(cls, spec: GridSpec, density) -> "DiscreteMeasure":
        vals = np.asarray(density(spec.nodes()), dtype=float).reshape(spec.counts)
        return cls(spec, vals * spec.cell_volume)

    @classmethod
    def from_deposits(cls, spec: GridSpec, points: np.ndarray, masses: np.ndarray):
        """Accumulate point masses into their covering cells.

        Mass landing outside the grid is dropped; the dropped total is
        returned alongside the measure.
        """
        flat, inside = spec.locate(np.asarray(points, dtype=float))
        masses = np.asarray(masses, dtype=float)
        acc = np.zeros(spec.size)
        np.add.at(acc, flat[inside], masses[inside])
        return cls(spec, acc.reshape(spec.counts)), float(np.sum(masses[~inside]))

    @property
    def flat(self) -> np.ndarray:
        return self.masses.ravel()

    def total(self) -> float:
        return float(np.sum(self.masses))

    def restrict(self, mask: np.ndarray) -> "DiscreteMeasure":
        kept = np.where(np.asarray(mask, dtype=bool).reshape(self.spec.counts),
                        self.masses, 0.0)
        return DiscreteMeasure(self.spec, kept)

    def ball_mass(self, center: np.ndarray, r: float) -> float:
        d = core.w_dinf(np.asarray(center, dtype=float), self.spec.nodes())
        return float(np.sum(self.flat[d < r]))

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.spec, c * self.masses)


def radius_ladder(r_min: float, r_max: float, ratio: float = LADDER_RATIO) -> np.ndarray:
    """Geometric rungs r_min * ratio^k strictly below r_max."""
    if r_min <= 0 or ratio <= 1:
        raise ValueError("need r_min > 0 and ratio > 1")
    if r_max <= r_min:
        return np.empty(0)
    k = int(math.floor(math.log(r_max / r_min) / math.log(ratio))) + 1
    rungs = r_min * ratio ** np.arange(k + 1)
    return rungs[rungs < r_max]


@dataclass
class MaximalField:
    """Disk maximal function M mu on cell centers, sup over the ladder."""

    spec: GridSpec
    values: np.ndarray
    s: float
    evaluated: np.ndarray
    ladder: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.values < 0):
            raise ValueError("maximal field must be nonnegative")


@dataclass
class PhiMaximalField:
    spec: GridSpec
    values: np.ndarray
    s: float
    evaluated: np.ndarray
    constants: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if np.any(self.values < 0):
            raise ValueError("maximal field must be nonnegative")


def _ladder_masses(
    dist: np.ndarray, masses: np.ndarray, rungs: np.ndarray
) -> np.ndarray:
    """Cumulative mass per rung: out[i, k] = sum of masses within rungs[k].

    dist is (centers, support); membership is strict (d < r).
    """
    nc, nr = dist.shape[0], len(rungs)
    # searchsorted('right') counts rungs <= d, i.e. indexes the first rung
    # strictly containing the point; nr is the overflow bin (never inside)
    first = np.searchsorted(rungs, dist.ravel(), side="right").reshape(dist.shape)
    acc = np.zeros((nc, nr + 1))
    np.add.at(acc, (np.repeat(np.arange(nc), dist.shape[1]), first.ravel()),
              np.broadcast_to(masses, dist.shape).ravel())
    return np.cumsum(acc[:, :nr], axis=1)


def disk_maximal(
    mu: DiscreteMeasure,
    s: float,
    centers: np.ndarray | None = None,
    r_min: float | None = None,
    chunk: int = 512,
) -> MaximalField:
    """Local maximal function sup_{0 < r < 4s - |x|} mu(D_r(x)) / (k r^Q).

    Disks are group translates x * D_r; the measure must be supported in
    D_{4s}.  Cells with no admissible radius get value 0.
    """
    if s <= 0:
        raise ValueError(f"scale must be positive, got {s}")
    spec = mu.spec
    nodes = spec.nodes()
    supp = np.flatnonzero(mu.flat > 0)
    if supp.size and np.max(core.w_box(nodes[supp])) >= 4 * s:
        raise ValueError("measure must be supported in D_{4s}")
    kappa = core.constants(spec.n)[0]
    hom = 2 * spec.n + 1
    rungs = radius_ladder(r_min if r_min is not None else cell_diameter(spec), 4 * s)
    eval_idx = np.arange(spec.size) if centers is None else np.asarray(centers)
    values = np.zeros(spec.size)
    evaluated = np.zeros(spec.size, dtype=bool)
    evaluated[eval_idx] = True
    if supp.size and rungs.size:
        norm = kappa * rungs**hom
        sup_nodes = nodes[supp]
        sup_mass = mu.flat[supp]
        for lo in range(0, eval_idx.size, chunk):
            idx = eval_idx[lo : lo + chunk]
            x = nodes[idx]
            dist = core.w_dinf(x[:, None, :], sup_nodes[None, :, :])
            cum = _ladder_masses(dist, sup_mass, rungs)
            cap = 4 * s - core.w_box(x)
            admissible = rungs[None, :] < cap[:, None]
            ratios = np.where(admissible, cum / norm, 0.0)
            values[idx] = np.max(ratios, axis=1, initial=0.0)
    return MaximalField(spec, values, float(s), evaluated, rungs)


def superlevel(fld: MaximalField | PhiMaximalField, theta: float) -> tuple[np.ndarray, float]:
    """Evaluated cells with field value > theta, and their measure."""
    mask = fld.evaluated & (fld.values > theta)
    return mask, float(np.count_nonzero(mask)) * fld.spec.cell_volume


@dataclass(frozen=True)
class DiskLemmaReport:
    lhs: float
    rhs: float
    theta: float
    r: float
    s: float
    slack: float
    hypothesis_ok: bool
    passed: bool


def check_disk_lemma(
    mu: DiscreteMeasure,
    s: float,
    theta: float,
    r: float,
    slack: float = 0.05,
    fld: MaximalField | None = None,
) -> DiskLemmaReport:
    """Superlevel-measure bound for the disk maximal function.

    lhs = L^{2n}(J_theta cap D_r), rhs = (5^Q/theta) mu(J_{theta/2^Q} cap
    D_{r+s/5}); requires r <= 3s and the smallness hypothesis
    mu(D_{4s}) <= (theta/5^Q) kappa s^Q, reported separately when it fails.
    """
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if r > 3 * s:
        raise ValueError(f"need r <= 3s, got r={r}, s={s}")
    spec = mu.spec
    hom = 2 * spec.n + 1
    kappa = core.constants(spec.n)[0]
    hypothesis_ok = bool(mu.total() <= (theta / 5**hom) * kappa * s**hom)
    if fld is None:
        fld = disk_maximal(mu, s)
    box = core.w_box(spec.nodes())
    j_theta, _ = superlevel(fld, theta)
    lhs = float(np.count_nonzero(j_theta & (box < r))) * spec.cell_volume
    j_small, _ = superlevel(fld, theta / 2**hom)
    rhs = (5**hom / theta) * float(np.sum(mu.flat[j_small & (box < r + s / 5)]))
    passed = bool(hypothesis_ok and lhs <= rhs * (1 + slack))
    return DiskLemmaReport(lhs, rhs, theta, r, s, slack, hypothesis_ok, passed)


def vitali_5r(
    centers: np.ndarray, radii: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy 5r covering selection on d_inf balls in W.

    Returns (selected indices, assignment) where assignment[i] names the
    selected ball whose 5-times enlargement contains ball i.  Selection is
    by descending radius, ties by input order; disjointness of open balls
    means center distance >= r_i + r_j.
    """
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if len(centers) != len(radii) or len(radii) == 0:
        raise ValueError("need matching nonempty centers and radii")
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    order = np.argsort(-radii, kind="stable")
    selected: list[int] = []
    assignment = np.full(len(radii), -1, dtype=int)
    for i in order:
        if selected:
            d = core.w_dinf(centers[i], centers[selected])
            hit = d < radii[i] + radii[selected]
            if np.any(hit):
                # the blocking ball is at least as large, so its
                # 5-enlargement contains this one
                assignment[i] = selected[int(np.argmax(hit))]
                continue
        selected.append(int(i))
        assignment[i] = i
    return np.asarray(selected, dtype=int), assignment


def measure_from_gradient(f: GridFunction) -> DiscreteMeasure:
    """d mu_phi = |grad^phi phi| dL^{2n} as a cell measure."""
    return DiscreteMeasure(f.spec, intrinsic_gradient(f).norm() * f.spec.cell_volume)


def phi_maximal(
    f: GridFunction,
    mu_phi: DiscreteMeasure,
    s: float,
    gamma2: float = 1.0,
    c_hat_l: float | None = None,
    lip_threshold: float = 0.2,
    centers: np.ndarray | None = None,
    r_min: float | None = None,
) -> PhiMaximalField:
    """Maximal function of mu_phi over graph-distance balls.

    Radii run over the ladder below r_phi(x, s) = (rho / c_L) s - d_phi(x, 0)
    with rho = 64 gamma2 + 2; c_L is estimated from the graph when not
    given (floored at 1).  The small-slope regime is enforced through a
    configurable Lipschitz threshold; the continuous theory fixes no
    numeric value for it.
    """
    if s <= 0:
        raise ValueError(f"scale must be positive, got {s}")
    if mu_phi.spec != f.spec:
        raise ValueError("measure and graph must share a grid")
    lip = lipschitz_estimate(f)
    if lip > lip_threshold:
        raise ValueError(
            f"graph too steep for the small-slope regime: {lip:.3g} > {lip_threshold:.3g}"
        )
    if c_hat_l is None:
        c_hat_l = estimate_ball_constants(f).c_l
    rho = 64.0 * gamma2 + 2.0
    spec = f.spec
    rungs = radius_ladder(
        r_min if r_min is not None else cell_diameter(spec), (rho / c_hat_l) * s
    )
    eval_idx = np.arange(spec.size) if centers is None else np.asarray(centers)
    pall = f.graph()
    d_origin = _graph_distance_from_point(f, np.zeros(2 * spec.n), pall)
    values = np.zeros(spec.size)
    evaluated = np.zeros(spec.size, dtype=bool)
    evaluated[eval_idx] = True
    mflat = mu_phi.flat
    ones = np.ones(spec.size)
    chunk = max(1, int(2e6 // max(spec.size, 1)))
    if rungs.size:
        for lo in range(0, eval_idx.size, chunk):
            idx = eval_idx[lo : lo + chunk]
            pc = pall[idx]
            dist = 0.5 * (
                core.pi_rel_norm(pc[:, None, :], pall[None, :, :])
                + core.pi_rel_norm(pall[None, :, :], pc[:, None, :])
            )
            caps = (rho / c_hat_l) * s - d_origin[idx]
            mass = _ladder_masses(dist, mflat, rungs)
            count = _ladder_masses(dist, ones, rungs)
            admissible = (rungs[None, :] < caps[:, None]) & (count > 0)
            ratios = np.where(
                admissible, mass / np.maximum(count, 1.0) / spec.cell_volume, 0.0
            )
            values[idx] = np.max(ratios, axis=1, initial=0.0)
    return PhiMaximalField(
        spec,
        values,
        float(s),
        evaluated,
        constants={
            "c_hat_l": float(c_hat_l),
            "rho": rho,
            "gamma2": float(gamma2),
            "lip_estimate": lip,
        },
    )


def check_phi_lemma(
    f: GridFunction,
    s: float,
    theta: float,
    gamma2: float = 1.0,
    pair_budget: int = 20000,
    seed: int = 0,
    c_hat_l: float | None = None,
) -> dict:
    """Empirical constant in the off-superlevel Lipschitz bound.

    Over pairs outside J_theta = {[mu_phi] > theta} within U_phi(0, s),
    returns max |phi(x) - phi(y)| / (theta d_phi(x, y)).  Pass c_hat_l
    to pin the quasi-ball constant on grids too coarse to estimate it.
    """
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    in_ball, _, _ = phi_ball(f, np.zeros(2 * f.spec.n), s)
    fld = phi_maximal(
        f,
        measure_from_gradient(f),
        s,
        gamma2=gamma2,
        c_hat_l=c_hat_l,
        centers=np.flatnonzero(in_ball),
    )
    good = np.flatnonzero(in_ball & ~(fld.values > theta))
    if good.size < 2:
        raise ValueError("no pairs available off the superlevel set")
    nodes = f.spec.nodes()[good]
    vals = f.flat[good]
    rng = np.random.default_rng(seed)
    i = rng.integers(0, good.size, size=pair_budget)
    j = rng.integers(0, good.size, size=pair_budget)
    keep = i != j
    i, j = i[keep], j[keep]
    pi_ = core.graph_points(nodes[i], vals[i])
    pj = core.graph_points(nodes[j], vals[j])
    d = 0.5 * (core.pi_rel_norm(pi_, pj) + core.pi_rel_norm(pj, pi_))
    ok = d > 1e-15
    ratio = float(np.max(np.abs(vals[i[ok]] - vals[j[ok]]) / (theta * d[ok]), initial=0.0))
    return {
        "ratio": ratio,
        "theta": theta,
        "s": s,
        "pairs": int(np.count_nonzero(ok)),
        "off_level_cells": int(good.size),
    }


def check_poincare(
    f: GridFunction,
    x: np.ndarray,
    r: float,
    p: float = 1.0,
    gamma2: float = 1.0,
) -> dict:
    """Empirical ratio of the phi-ball Poincare inequality at (x, r).

    ratio = int_{U(x,r)} |phi - mean|^p / (r^p int_{U(x, C2 r)} |grad|^p)
    with C2 = 2 gamma2.  Both balls must stay inside the grid.
    """
    c2 = 2.0 * gamma2
    x = np.asarray(x, dtype=float)
    inner, _, exits_inner = phi_ball(f, x, r)
    outer, _, exits_outer = phi_ball(f, x, c2 * r)
    if exits_inner or exits_outer:
        raise ValueError("phi-ball leaves the grid; shrink r or recentre")
    if not np.any(inner):
        raise ValueError("empty inner ball")
    V = f.spec.cell_volume
    vals = f.flat[inner]
    num = float(np.sum(np.abs(vals - np.mean(vals)) ** p)) * V
    grad = intrinsic_gradient(f).norm().ravel()
    den = r**p * float(np.sum(grad[outer] ** p)) * V
    violation = den == 0.0 and num > 1e-14
    return {
        "ratio": 0.0 if num <= 1e-14 else (math.inf if den == 0.0 else num / den),
        "numerator": num,
        "denominator": den,
        "c2": c2,
        "r": r,
        "violation_candidate": violation,
    }


@dataclass(frozen=True)
class BallConstants:
    c1: float
    c2: float
    c_l: float
    samples: int


def estimate_ball_constants(
    f: GridFunction,
    samples: int = 50,
    seed: int = 0,
    r_bounds: tuple[float, float] | None = None,
) -> BallConstants:
    """Sampled bounds c1 <= L^{2n}(U_phi(x,r))/r^{2n+1} <= c2 and the
    quasi-triangle constant of d_phi, floored at 1.

    Balls that leave the grid are skipped; raises if every sample does.
    """
    spec = f.spec
    hom = 2 * spec.n + 1
    nodes = spec.nodes()
    if r_bounds is None:
        spatial = min(c * spec.h for c in spec.counts[:-1]) / 2.0
        r_hi = 0.5 * min(spatial, math.sqrt(spec.counts[-1] * spec.h / 2.0))
        r_bounds = (2 * spec.h, max(2.5 * spec.h, r_hi))
    rng = np.random.default_rng(seed)
    interior = np.flatnonzero(~spec.boundary_mask(1).ravel())
    # bias centers toward the middle so balls of the requested size fit
    interior = interior[np.argsort(core.w_box(nodes[interior]), kind="stable")]
    interior = interior[: max(1, interior.size // 3)]
    c1, c2, used = math.inf, 0.0, 0
    for _ in range(20 * samples):
        if used >= samples:
            break
        ci = rng.choice(interior)
        r = math.exp(rng.uniform(math.log(r_bounds[0]), math.log(r_bounds[1])))
        mask, meas, exits = phi_ball(f, nodes[ci], r)
        if exits or not np.any(mask):
            continue
        ratio = meas / r**hom
        c1, c2 = min(c1, ratio), max(c2, ratio)
        used += 1
    if used == 0:
        raise ValueError("every sampled ball left the grid; shrink r_bounds")
    trip = rng.integers(0, spec.size, size=(samples, 3))
    px = f.graph()
    d = lambda a, b: 0.5 * (core.pi_rel_norm(px[a], px[b]) + core.pi_rel_norm(px[b], px[a]))
    dxy, dxz, dzy = d(trip[:, 0], trip[:, 1]), d(trip[:, 0], trip[:, 2]), d(trip[:, 2], trip[:, 1])
    ok = dxz + dzy > 1e-15
    c_l = float(np.max(dxy[ok] / (dxz + dzy)[ok], initial=1.0))
    return BallConstants(c1, c2, max(c_l, 1.0), used)
