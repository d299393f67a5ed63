"""Intrinsic graphs over the vertical hyperplane on uniform grids.

Grid nodes are cell centers; quadrature is the midpoint rule, so a grid
function carries a measure h^{2n} per node.  Derivatives use centered
second-order stencils with one-sided second-order stencils at the grid
boundary.  The intrinsic gradient couples the horizontal fields with the
Burgers operator B(phi) = d(phi)/dy_1 - 4 phi d(phi)/dt.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import core

__all__ = [
    "GridSpec",
    "GridFunction",
    "IntrinsicGradient",
    "ConeViolationError",
    "ExtensionConvergenceError",
    "grid_nodes",
    "graph_map",
    "intrinsic_gradient",
    "graph_distance",
    "phi_ball",
    "lipschitz_estimate",
    "extension_constant",
    "extend_lipschitz",
    "dilate_graph",
]


class ConeViolationError(ValueError):
    """Partial data is not intrinsic Lipschitz with the requested constant."""


class ExtensionConvergenceError(RuntimeError):
    """Cone-infimum fixed point did not reach tolerance within the cap."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"extension fixed point stalled: residual {residual:.3e} after {iterations} iterations"
        )


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on W: axes ordered (x_2..x_n, y_1..y_n, t).

    `origin` is the coordinate of node (0,...,0); node k sits at
    origin + k*h and owns a cell of volume h^{2n} centered on it.
    """

    n: int
    origin: tuple[float, ...]
    h: float
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need n >= 2, got n={self.n}")
        if self.h <= 0:
            raise ValueError(f"spacing must be positive, got {self.h}")
        if len(self.origin) != 2 * self.n or len(self.counts) != 2 * self.n:
            raise ValueError("origin/counts must have 2n entries")
        if any(c < 1 for c in self.counts):
            raise ValueError("all axis counts must be >= 1")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @classmethod
    def centered(cls, n: int, half: float | tuple[float, ...], h: float) -> "GridSpec":
        """Grid of cells tiling [-half, half] per axis, centered on 0.

        Halfwidths snap to integer multiples of h, which keeps cell
        centers at half-integer multiples of h on every axis; grids built
        this way share cell centers regardless of extent.
        """
        if np.isscalar(half):
            half = (float(half),) * (2 * n)
        counts = tuple(max(2, 2 * round(hw / h)) for hw in half)
        origin = tuple(-(c - 1) * h / 2.0 for c in counts)
        return cls(n, origin, float(h), counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def cell_volume(self) -> float:
        return self.h ** (2 * self.n)

    def axis_values(self, k: int) -> np.ndarray:
        return self.origin[k] + self.h * np.arange(self.counts[k])

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (size, 2n), C-order of the index grid."""
        return grid_nodes(self)

    def locate(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Flat index of the cell containing each point, plus an inside mask."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        idx = np.floor((w - np.array(self.origin)) / self.h + 0.5).astype(int)
        inside = np.all((idx >= 0) & (idx < np.array(self.counts)), axis=-1)
        idx_clipped = np.clip(idx, 0, np.array(self.counts) - 1)
        flat = np.ravel_multi_index(tuple(idx_clipped.T), self.counts)
        return flat, inside

    def boundary_mask(self, layers: int = 1) -> np.ndarray:
        """Mask (shape counts) of nodes within `layers` of the grid edge."""
        m = np.zeros(self.counts, dtype=bool)
        for ax in range(2 * self.n):
            sl = [slice(None)] * (2 * self.n)
            sl[ax] = slice(0, layers)
            m[tuple(sl)] = True
            sl[ax] = slice(self.counts[ax] - layers, self.counts[ax])
            m[tuple(sl)] = True
        return m

    def coordinate_field(self, k: int) -> np.ndarray:
        """Axis-k coordinate broadcast over the full grid shape."""
        shape = [1] * (2 * self.n)
        shape[k] = self.counts[k]
        return self.axis_values(k).reshape(shape)


@functools.lru_cache(maxsize=32)
def grid_nodes(spec: GridSpec) -> np.ndarray:
    axes = [spec.axis_values(k) for k in range(2 * spec.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    out = np.stack([m.ravel() for m in mesh], axis=-1)
    out.setflags(write=False)
    return out


@dataclass
class GridFunction:
    """Real-valued function phi on the nodes of a GridSpec."""

    spec: GridSpec
    values: np.ndarray
    dirichlet_mask: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.spec.counts:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.spec.counts}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        if self.dirichlet_mask is not None and self.dirichlet_mask.shape != self.spec.counts:
            raise ValueError("dirichlet mask shape does not match grid")

    @classmethod
    def from_callable(cls, spec: GridSpec, fn) -> "GridFunction":
        w = spec.nodes()
        return cls(spec, np.asarray(fn(w), dtype=float).reshape(spec.counts))

    @classmethod
    def constant(cls, spec: GridSpec, c: float) -> "GridFunction":
        return cls(spec, np.full(spec.counts, float(c)))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def interp(self, w: np.ndarray, clamp_tol: float = 1e-9) -> np.ndarray:
        """Multilinear interpolation; raises off the grid beyond clamp_tol."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        u = (w - np.array(self.spec.origin)) / self.spec.h
        hi = np.array(self.spec.counts, dtype=float) - 1.0
        if np.any(u < -clamp_tol) or np.any(u > hi + clamp_tol):
            raise ValueError("interpolation point outside grid domain")
        u = np.clip(u, 0.0, hi)
        i0 = np.minimum(np.floor(u).astype(int), np.maximum(np.array(self.spec.counts) - 2, 0))
        frac = u - i0
        d = 2 * self.spec.n
        out = np.zeros(w.shape[0])
        for corner in range(1 << d):
            offs = np.array([(corner >> k) & 1 for k in range(d)])
            idx = np.minimum(i0 + offs, np.array(self.spec.counts) - 1)
            wgt = np.prod(np.where(offs == 1, frac, 1.0 - frac), axis=-1)
            out += wgt * self.values[tuple(idx.T)]
        return out

    def graph(self) -> np.ndarray:
        """Graph points Phi(node) for every node, shape (size, 2n+1)."""
        return core.graph_points(self.spec.nodes(), self.flat)


@dataclass
class IntrinsicGradient:
    """Components (X_2 phi .. X_n phi, B phi, Y_2 phi .. Y_n phi) on the grid."""

    spec: GridSpec
    components: np.ndarray  # shape (2n-1,) + counts

    @property
    def names(self) -> list[str]:
        n = self.spec.n
        return (
            [f"X{i}" for i in range(2, n + 1)]
            + ["B"]
            + [f"Y{i}" for i in range(2, n + 1)]
        )

    def norm_sq(self) -> np.ndarray:
        return np.sum(self.components**2, axis=0)

    def norm(self) -> np.ndarray:
        return np.sqrt(self.norm_sq())

    def at_flat(self) -> np.ndarray:
        """Components flattened to (size, 2n-1)."""
        return self.components.reshape(2 * self.spec.n - 1, -1).T


def graph_map(f: GridFunction, w: np.ndarray | core.WPoint) -> np.ndarray | core.HPoint:
    """Graph point Phi(w) = w * (phi(w) e_1), interpolating phi off-node."""
    if isinstance(w, core.WPoint):
        val = f.interp(w.coords[None, :])[0]
        return core.HPoint.from_coords(core.graph_points(w.coords, val))
    w = np.asarray(w, dtype=float)
    return core.graph_points(w, f.interp(w))


def _partials(f: GridFunction) -> list[np.ndarray]:
    return [
        np.gradient(f.values, f.spec.h, axis=ax, edge_order=2)
        for ax in range(2 * f.spec.n)
    ]


def intrinsic_gradient(f: GridFunction) -> IntrinsicGradient:
    """Finite-difference intrinsic gradient of a graph function.

    X_i phi = d/dx_i + 2 y_i d/dt, Y_i phi = d/dy_i - 2 x_i d/dt for
    i = 2..n, and the Burgers component B phi = d/dy_1 - 4 phi d/dt.
    """
    n = f.spec.n
    parts = _partials(f)
    dt = parts[2 * n - 1]
    comps = np.empty((2 * n - 1,) + f.spec.counts)
    for i in range(2, n + 1):
        y_i = f.spec.coordinate_field(n + i - 2)
        comps[i - 2] = parts[i - 2] + 2.0 * y_i * dt
    comps[n - 1] = parts[n - 1] - 4.0 * f.values * dt
    for i in range(2, n + 1):
        x_i = f.spec.coordinate_field(i - 2)
        comps[n + i - 2] = parts[n + i - 2] - 2.0 * x_i * dt
    return IntrinsicGradient(f.spec, comps)


def graph_distance(f: GridFunction, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """Symmetrized graph quasi-distance between points of W.

    d(w, w') = (||proj(Phi(w)^-1 Phi(w'))|| + ||proj(Phi(w')^-1 Phi(w))||) / 2.
    """
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    p1 = core.graph_points(w1, f.interp(w1.reshape(-1, w1.shape[-1])).reshape(w1.shape[:-1]))
    p2 = core.graph_points(w2, f.interp(w2.reshape(-1, w2.shape[-1])).reshape(w2.shape[:-1]))
    return 0.5 * (core.pi_rel_norm(p1, p2) + core.pi_rel_norm(p2, p1))


def _graph_distance_from_point(f: GridFunction, x: np.ndarray, pts: np.ndarray | None = None):
    px = core.graph_points(x, f.interp(x[None, :])[0])
    pall = f.graph() if pts is None else pts
    return 0.5 * (core.pi_rel_norm(px, pall) + core.pi_rel_norm(pall, px))


def phi_ball(
    f: GridFunction, x: np.ndarray | core.WPoint, r: float
) -> tuple[np.ndarray, float, bool]:
    """Cells of the grid inside the graph-distance ball U(x, r).

    Returns (flat mask, discrete measure = count * cell volume, exits flag);
    the flag is set when the ball touches the outermost node layer, meaning
    the true ball is not fully covered by the grid.
    """
    if r <= 0:
        raise ValueError(f"ball radius must be positive, got {r}")
    if isinstance(x, core.WPoint):
        x = x.coords
    d = _graph_distance_from_point(f, np.asarray(x, dtype=float))
    mask = d < r
    exits = bool(np.any(mask & f.spec.boundary_mask().ravel()))
    return mask, float(np.count_nonzero(mask)) * f.spec.cell_volume, exits


def _pair_stream(m: int, budget: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic pair sample; a larger budget extends a smaller one."""
    # fixed-size chunks with derived seeds so budgets share a common prefix
    chunks_i, chunks_j, got = [], [], 0
    k = 0
    while got < budget:
        rng = np.random.default_rng((seed, k))
        take = min(4096, budget - got)
        block = rng.integers(0, m, size=(2, 4096))
        chunks_i.append(block[0, :take])
        chunks_j.append(block[1, :take])
        got += take
        k += 1
    return np.concatenate(chunks_i), np.concatenate(chunks_j)


def lipschitz_estimate(
    f: GridFunction,
    pair_budget: int = 20000,
    seed: int = 0,
    subset: np.ndarray | None = None,
) -> float:
    """Sampled lower bound for the intrinsic Lipschitz constant of f.

    Ratios |phi(w) - phi(w')| / ||proj(Phi(w')^-1 Phi(w))|| over random node
    pairs, both orderings.  A pair at zero graph distance with differing
    values is not a graph and raises.
    """
    nodes = f.spec.nodes()
    vals = f.flat
    if subset is not None:
        nodes = nodes[subset]
        vals = vals[subset]
    m = len(vals)
    if m < 2:
        return 0.0
    i, j = _pair_stream(m, pair_budget, seed)
    keep = i != j
    i, j = i[keep], j[keep]
    pi_ = core.graph_points(nodes[i], vals[i])
    pj = core.graph_points(nodes[j], vals[j])
    num = np.abs(vals[i] - vals[j])
    den = np.minimum(core.pi_rel_norm(pj, pi_), core.pi_rel_norm(pi_, pj))
    bad = (den < 1e-15) & (num > 1e-12)
    if np.any(bad):
        raise ValueError("distinct values at zero graph distance: not an intrinsic graph")
    ok = den >= 1e-15
    if not np.any(ok):
        return 0.0
    return float(np.max(num[ok] / den[ok]))


def extension_constant(L: float) -> float:
    """Cone opening M(L) = (sqrt(1 + 1/(L + 2L^2)) - 1)^-2 used to extend.

    Satisfies M(L) <= 2L for L <= 0.07 and M -> 0 as L -> 0.
    """
    if L <= 0:
        raise ValueError(f"Lipschitz constant must be positive, got {L}")
    return (math.sqrt(1.0 + 1.0 / (L + 2.0 * L * L)) - 1.0) ** -2


def _verify_cone(nodes, vals, L, chunk=512):
    """Exact pairwise cone check on the partial data; raises on violation."""
    pts = core.graph_points(nodes, vals)
    m = len(vals)
    worst = (0.0, -1, -1)
    for a in range(0, m, chunk):
        pa = pts[a : a + chunk]
        va = vals[a : a + chunk]
        num = np.abs(va[:, None] - vals[None, :])
        den = np.minimum(
            core.pi_rel_norm(pts[None, :, :], pa[:, None, :]),
            core.pi_rel_norm(pa[:, None, :], pts[None, :, :]),
        )
        np.fill_diagonal(num[:, a : a + chunk], 0.0)
        bad = (den < 1e-15) & (num > 1e-12)
        if np.any(bad):
            raise ConeViolationError("distinct values at zero graph distance in partial data")
        ratio = np.where(den >= 1e-15, num / np.maximum(den, 1e-300), 0.0)
        k = int(np.argmax(ratio))
        if ratio.ravel()[k] > worst[0]:
            worst = (float(ratio.ravel()[k]), a + k // m, k % m)
    if worst[0] > L * (1.0 + 1e-9):
        raise ConeViolationError(
            f"partial data has cone ratio {worst[0]:.6g} > L = {L:.6g} "
            f"(pair {worst[1]}, {worst[2]})"
        )


@dataclass
class ExtensionReport:
    iterations: int
    residual: float
    m_const: float
    lip_estimate: float
    lip_bound_ok: bool


def extend_lipschitz(
    spec: GridSpec,
    indices: np.ndarray,
    values: np.ndarray,
    L: float,
    sup_bound: float | None = None,
    m_const: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 100,
    verify: bool = True,
    chunk: int = 512,
) -> tuple[GridFunction, ExtensionReport]:
    """Extend partial graph data to the whole grid by iterated cone infima.

    The data on node subset K must satisfy the cone condition with
    constant L (verified exactly first).  Off K the value is the fixed
    point of psi(w) = min_q [phi(q) + M ||proj(Phi(q)^-1 (w * psi(w) e_1))||]
    with M = extension_constant(L), seeded from nearest-sample values.
    With sup_bound given, iterates are clamped so the sup norm is preserved.
    """
    indices = np.asarray(indices, dtype=int)
    values = np.asarray(values, dtype=float)
    if len(indices) == 0:
        raise ValueError("empty partial data")
    if len(np.unique(indices)) != len(indices):
        raise ValueError("duplicate node indices in partial data")
    nodes = spec.nodes()
    kn = nodes[indices]
    if sup_bound is not None and np.max(np.abs(values)) > sup_bound * (1 + 1e-12):
        raise ValueError("partial data exceeds the requested sup bound")
    if verify:
        _verify_cone(kn, values, L)
    M = extension_constant(L) if m_const is None else float(m_const)

    out = np.empty(spec.size)
    out[indices] = values
    mask = np.zeros(spec.size, dtype=bool)
    mask[indices] = True
    fill = np.nonzero(~mask)[0]
    report_iters, residual = 0, 0.0
    if len(fill) > 0:
        pk = core.graph_points(kn, values)
        wf = nodes[fill]
        # seed from the nearest sample in the W metric
        psi = np.empty(len(fill))
        for a in range(0, len(fill), chunk):
            d = core.w_dinf(wf[a : a + chunk, None, :], kn[None, :, :])
            psi[a : a + chunk] = values[np.argmin(d, axis=1)]
        for it in range(1, max_iter + 1):
            new = np.empty_like(psi)
            for a in range(0, len(fill), chunk):
                pw = core.graph_points(wf[a : a + chunk], psi[a : a + chunk])
                cand = values[None, :] + M * core.pi_rel_norm(pk[None, :, :], pw[:, None, :])
                new[a : a + chunk] = np.min(cand, axis=1)
            if sup_bound is not None:
                np.clip(new, -sup_bound, sup_bound, out=new)
            residual = float(np.max(np.abs(new - psi)))
            psi = new
            report_iters = it
            if residual <= tol:
                break
        else:
            raise ExtensionConvergenceError(residual, max_iter)
        out[fill] = psi

    result = GridFunction(spec, out.reshape(spec.counts))
    lip = lipschitz_estimate(result, pair_budget=20000, seed=1)
    return result, ExtensionReport(
        iterations=report_iters,
        residual=residual,
        m_const=M,
        lip_estimate=lip,
        lip_bound_ok=bool(lip <= M * 1.1 + 1e-12),
    )


def dilate_graph(lam: float, f: GridFunction) -> GridFunction:
    """Dilated graph function phi_lam(delta_lam w) = lam * phi(w).

    The output grid scales spacing by lam on every axis; the t axis extent
    scales by lam^2, so its node count grows accordingly and values are
    resampled by multilinear interpolation.
    """
    if lam <= 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    spec = f.spec
    d = 2 * spec.n
    new_h = lam * spec.h
    counts = list(spec.counts)
    origin = [lam * o for o in spec.origin]
    tax = d - 1
    # t extent scales by lam^2; stay inside the source node hull so the
    # resampling below never extrapolates
    t_lo = lam * lam * spec.origin[tax]
    t_hi = lam * lam * (spec.origin[tax] + (spec.counts[tax] - 1) * spec.h)
    counts[tax] = max(2, int(np.floor((t_hi - t_lo) / new_h)) + 1)
    origin[tax] = (t_lo + t_hi) / 2 - (counts[tax] - 1) * new_h / 2
    new_spec = GridSpec(spec.n, tuple(origin), new_h, tuple(counts))
    w = new_spec.nodes()
    w_src = w / lam
    w_src[:, tax] = w[:, tax] / (lam * lam)
    vals = lam * f.interp(w_src, clamp_tol=1e-6 * max(1.0, lam * lam))
    return GridFunction(new_spec, vals.reshape(new_spec.counts))
