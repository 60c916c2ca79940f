"""1-D geometric realization, cylinder integration, and Lloyd refinement.

Each vertex i gets a unit root template J_i = [2(i-1), 2(i-1)+1]; spacing 2
keeps distinct templates at distance >= 1, which is at least any cylinder
diameter.  Inside a template the children J_ij are laid out left to right in
ascending j, flush to both template ends, with equal gaps

    g_i = (1 - sum_j c_ij) / (deg_i - 1),

so sibling cylinders of J_sigma are separated by at least g_i * |J_sigma| at
every depth.  The per-level separation constant is min_i g_i / max_j c_ij.

The measure is integrated deterministically against a refinement antichain:
every cylinder of the level-K antichain contributes its midpoint, half-width
and mass, giving rigorous two-sided bounds for any codebook alpha:

    lower = sum m * max(0, d(mid, alpha) - half)^r
    upper = sum m * (d(mid, alpha) + half)^r.

Lloyd refinement alternates nearest-point assignment with per-cell center
updates on the discretized measure (mean for r=2, weighted median for r=1,
ternary search on the convex cell objective otherwise).  A step is accepted
only if the sandwich upper bound does not increase, so the reported bound is
non-increasing by construction.  A seeded Monte Carlo sampler is included as
a validation sidecar only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import antichain as antichain_mod
from . import spectral
from .antichain import DEFAULT_CAPACITY, Antichain
from .graphs import CriticalStructure
from .model import MarkovSystem, as_fraction, validate_word


class InfeasibleLayoutError(ValueError):
    """Raised when a row's child ratios cannot fit disjointly in a template."""


class UnsupportedOrderError(ValueError):
    """Raised for Lloyd refinement with order r < 1."""


@dataclass(frozen=True, eq=False)
class Realization:
    """Concrete interval layout of the graph-directed construction."""

    system: MarkovSystem
    root_left: tuple[Fraction, ...]  # template left endpoints, by vertex
    placement: dict[tuple[int, int], tuple[Fraction, Fraction]]  # (i,j) -> (offset, ratio)
    row_gaps: tuple[Fraction, ...]
    row_seps: tuple[Fraction, ...]  # gap / max child ratio, rows with >= 2 children
    sep_t: Fraction

    def layout_floats(self):
        """(root_left, placement) in floats, for the streaming scanner."""
        roots = {v: float(self.root_left[v - 1]) for v in self.system.vertices}
        place = {e: (float(o), float(rt)) for e, (o, rt) in self.placement.items()}
        return roots, place


def realize(sys: MarkovSystem) -> Realization:
    """Lay out the templates and their children; fails if a row overflows."""
    placement: dict[tuple[int, int], tuple[Fraction, Fraction]] = {}
    gaps: list[Fraction] = []
    seps: list[Fraction] = []
    for i in sys.vertices:
        succ = sys.successors(i)
        ratios = [sys.edge_c(i, j) for j in succ]
        total = sum(ratios)
        if total >= 1:
            raise InfeasibleLayoutError(
                f"row {i}: child ratios sum to {float(total):.6g} >= 1"
            )
        deg = len(succ)
        gap = (1 - total) / (deg - 1) if deg >= 2 else Fraction(0)
        off = Fraction(0)
        for j, ratio in zip(succ, ratios):
            placement[(i, j)] = (off, ratio)
            off += ratio + gap
        gaps.append(gap)
        if deg >= 2:
            seps.append(gap / max(ratios))
    if not seps:
        raise InfeasibleLayoutError("no row has two children; nothing to separate")
    return Realization(
        system=sys,
        root_left=tuple(Fraction(2 * (i - 1)) for i in sys.vertices),
        placement=placement,
        row_gaps=tuple(gaps),
        row_seps=tuple(seps),
        sep_t=min(seps),
    )


def cylinder_interval(rz: Realization, word: Sequence[int]) -> tuple[Fraction, Fraction]:
    """(left endpoint, length) of J_word, exact; length equals c_word."""
    w = validate_word(rz.system, word)
    if not w:
        raise ValueError("cylinder_interval requires a non-empty word")
    left = rz.root_left[w[0] - 1]
    length = Fraction(1)
    for i, j in zip(w, w[1:]):
        off, ratio = rz.placement[(i, j)]
        left += off * length
        length *= ratio
    return left, length


@dataclass(frozen=True)
class CylinderGrid:
    """Midpoint discretization of a refinement antichain."""

    k: int
    r: float
    mids: np.ndarray
    halves: np.ndarray
    masses: np.ndarray

    @property
    def size(self) -> int:
        return int(self.mids.size)


def level_grid(
    rz: Realization, r, k: int, capacity: int = DEFAULT_CAPACITY
) -> CylinderGrid:
    """Stream the level-k antichain into (midpoint, half-width, mass) arrays.

    Arrays are sorted by midpoint so Lloyd cells become contiguous slices.
    """
    res = antichain_mod.scan(rz.system, r, k, layout=rz.layout_floats(), capacity=capacity)
    mids = np.frombuffer(res.grid[0], dtype=np.float64)
    halves = np.frombuffer(res.grid[1], dtype=np.float64)
    masses = np.frombuffer(res.grid[2], dtype=np.float64)
    order = np.argsort(mids, kind="stable")
    return CylinderGrid(
        k=k, r=float(as_fraction(r)),
        mids=np.ascontiguousarray(mids[order]),
        halves=np.ascontiguousarray(halves[order]),
        masses=np.ascontiguousarray(masses[order]),
    )


@dataclass(frozen=True)
class Codebook:
    """A finite candidate support set; points are kept sorted and distinct."""

    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(sorted(set(float(x) for x in self.points)))
        if not pts:
            raise ValueError("codebook must contain at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return len(self.points)

    def array(self) -> np.ndarray:
        return np.asarray(self.points)


@dataclass(frozen=True)
class ErrorEstimate:
    """Rigorous two-sided bounds on the r-th power quantization error."""

    n: int
    r: float
    lower: float
    upper: float
    method: str
    integration_depth: int

    @property
    def width(self) -> float:
        return self.upper - self.lower


def antichain_codebook(rz: Realization, ac: Antichain) -> Codebook:
    """Midpoints of the antichain's cylinders (needs materialized words)."""
    if ac.words is None:
        raise ValueError(
            "antichain has no materialized words; enumerate with store_words=True "
            "or build the codebook from level_grid"
        )
    pts = []
    for w in ac.words:
        left, length = cylinder_interval(rz, w)
        pts.append(float(left) + float(length) / 2.0)
    return Codebook(points=tuple(pts))


def grid_codebook(grid: CylinderGrid) -> Codebook:
    """Codebook of all cylinder midpoints of a grid."""
    return Codebook(points=tuple(grid.mids.tolist()))


def _nearest_distance(points: np.ndarray, xs: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(points, xs)
    left = np.where(idx > 0, xs - points[np.maximum(idx - 1, 0)], np.inf)
    right = np.where(idx < points.size, points[np.minimum(idx, points.size - 1)] - xs, np.inf)
    return np.minimum(left, right)


def _sandwich(grid: CylinderGrid, points: np.ndarray, r: float) -> tuple[float, float]:
    d = _nearest_distance(points, grid.mids)
    lower = float(grid.masses @ np.maximum(d - grid.halves, 0.0) ** r)
    upper = float(grid.masses @ (d + grid.halves) ** r)
    return lower, upper


def integrate_error(
    rz: Realization,
    codebook: Codebook,
    r,
    depth: int,
    *,
    grid: CylinderGrid | None = None,
    capacity: int = DEFAULT_CAPACITY,
) -> ErrorEstimate:
    """Sandwich the integral of d(x, codebook)^r over the depth-K antichain."""
    rf = float(as_fraction(r))
    if rf <= 0:
        raise ValueError(f"order r must be positive, got {r}")
    if grid is None:
        grid = level_grid(rz, r, depth, capacity=capacity)
    lower, upper = _sandwich(grid, codebook.array(), rf)
    return ErrorEstimate(
        n=codebook.size, r=rf, lower=lower, upper=upper,
        method="antichain", integration_depth=grid.k,
    )


def _cell_center(mids, masses, lo: int, hi: int, r: float) -> float:
    """Best single point for one contiguous cell of the sorted grid."""
    x = mids[lo:hi]
    m = masses[lo:hi]
    if x.size == 1:
        return float(x[0])
    if r == 2.0:
        return float((m @ x) / m.sum())
    if r == 1.0:
        cum = np.cumsum(m)
        half = 0.5 * cum[-1]
        pos = int(np.searchsorted(cum, half))
        return float(x[min(pos, x.size - 1)])
    a, b_ = float(x[0]), float(x[-1])

    def cost(t: float) -> float:
        return float(m @ np.abs(x - t) ** r)

    # objective is convex for r >= 1
    while b_ - a > 1e-12:
        t1 = a + (b_ - a) / 3.0
        t2 = b_ - (b_ - a) / 3.0
        if cost(t1) <= cost(t2):
            b_ = t2
        else:
            a = t1
    return 0.5 * (a + b_)


def _respawn_order(grid: CylinderGrid) -> np.ndarray:
    # heaviest first, leftmost on ties
    return np.lexsort((grid.mids, -grid.masses))


def lloyd_refine(
    rz: Realization,
    initial: Codebook,
    r,
    depth: int,
    max_iter: int = 100,
    rel_tol: float = 1e-9,
    *,
    grid: CylinderGrid | None = None,
    capacity: int = DEFAULT_CAPACITY,
) -> tuple[Codebook, list[ErrorEstimate]]:
    """Refine a codebook by Lloyd iteration on the discretized measure.

    Assignment maps each cylinder midpoint to its nearest code point (ties to
    the lower index); the update recenters each cell for the L_r objective.
    Empty cells are respawned at the heaviest midpoint not already used.  A
    step is kept only when the sandwich upper bound does not increase, and
    iteration stops at relative improvement < rel_tol or max_iter; the trace
    of accepted estimates is therefore non-increasing in `upper`.
    """
    rf = float(as_fraction(r))
    if rf < 1.0:
        raise UnsupportedOrderError(f"Lloyd refinement needs r >= 1, got {r}")
    if grid is None:
        grid = level_grid(rz, r, depth, capacity=capacity)
    mids, masses = grid.mids, grid.masses
    target_n = initial.size
    respawn = None

    best = initial.array()
    lo0, up0 = _sandwich(grid, best, rf)
    trace = [
        ErrorEstimate(n=initial.size, r=rf, lower=lo0, upper=up0,
                      method="lloyd", integration_depth=grid.k)
    ]
    for _ in range(max_iter):
        # assignment: boundaries halfway between consecutive points; a midpoint
        # exactly on a boundary joins the lower cell
        bounds = 0.5 * (best[1:] + best[:-1])
        starts = np.concatenate(([0], np.searchsorted(mids, bounds, side="right")))
        ends = np.concatenate((starts[1:], [mids.size]))
        new_pts = []
        for ci in range(best.size):
            lo_i, hi_i = int(starts[ci]), int(ends[ci])
            if hi_i <= lo_i:
                continue  # empty cell; refill below
            new_pts.append(_cell_center(mids, masses, lo_i, hi_i, rf))
        while len(new_pts) < target_n:
            if respawn is None:
                respawn = _respawn_order(grid)
            used = set(new_pts)
            for gi in respawn:
                cand = float(mids[gi])
                if cand not in used:
                    new_pts.append(cand)
                    break
            else:
                break  # fewer distinct midpoints than code points
        cand_arr = np.array(sorted(set(new_pts)))
        if cand_arr.size == best.size and np.array_equal(cand_arr, best):
            break  # fixed point
        lo_c, up_c = _sandwich(grid, cand_arr, rf)
        if up_c > trace[-1].upper:
            break  # step would loosen the certified bound; keep best-so-far
        best = cand_arr
        trace.append(
            ErrorEstimate(n=int(cand_arr.size), r=rf, lower=lo_c, upper=up_c,
                          method="lloyd", integration_depth=grid.k)
        )
        if trace[-2].upper - up_c <= rel_tol * max(up_c, 1e-300):
            break
    return Codebook(points=tuple(best.tolist())), trace


def quantile_codebook(grid: CylinderGrid, n: int, r: float = 2.0) -> Codebook:
    """Deterministic n-point warm start: r-centers of equal-mass quantile cells."""
    if n < 1:
        raise ValueError("need n >= 1 code points")
    cum = np.cumsum(grid.masses)
    total = cum[-1]
    cuts = [int(np.searchsorted(cum, total * q / n, side="left")) for q in range(n + 1)]
    cuts[0], cuts[-1] = 0, grid.size
    pts = []
    for lo, hi in zip(cuts, cuts[1:]):
        if hi > lo:
            pts.append(_cell_center(grid.mids, grid.masses, lo, hi, float(r)))
    return Codebook(points=tuple(pts))


def discrete_cost(grid: CylinderGrid, codebook: Codebook, r) -> float:
    """Plain discretized objective sum m * d(mid, alpha)^r (no cylinder radii)."""
    d = _nearest_distance(codebook.array(), grid.mids)
    return float(grid.masses @ d ** float(as_fraction(r)))


def optimal_two_point(grid: CylinderGrid, r) -> tuple[Codebook, float]:
    """Exact 2-point optimum of the discretized measure by split enumeration.

    In one dimension the cells of an optimal quantizer are intervals, so it
    suffices to try every split of the sorted midpoints into a prefix and a
    suffix and recenter both sides.
    """
    rf = float(as_fraction(r))
    best_cost = math.inf
    best_pts: tuple[float, float] | None = None
    mids, masses = grid.mids, grid.masses
    for cut in range(1, grid.size):
        a = _cell_center(mids, masses, 0, cut, rf)
        b = _cell_center(mids, masses, cut, grid.size, rf)
        cost = float(
            masses[:cut] @ np.abs(mids[:cut] - a) ** rf
            + masses[cut:] @ np.abs(mids[cut:] - b) ** rf
        )
        if cost < best_cost:
            best_cost = cost
            best_pts = (a, b)
    return Codebook(points=best_pts), best_cost


@dataclass(frozen=True)
class CurveRow:
    """One point of the quantization error curve at n = phi_k."""

    k: int
    n: int
    lower: float
    upper: float
    corrected: float
    uncorrected: float
    iterations: int


def error_curve(
    sys: MarkovSystem,
    r,
    k_range,
    refine: bool = False,
    depth_offset: int = 6,
    *,
    cs: CriticalStructure | None = None,
    capacity: int = DEFAULT_CAPACITY,
    max_iter: int = 50,
) -> list[CurveRow]:
    """Two-sided error bounds at the antichain codebook sizes n = phi_k.

    Codebooks are the level-k cylinder midpoints (optionally Lloyd refined);
    integration runs at depth k + depth_offset.  Normalized columns report
    upper * n^{r/s_r}, with and without the predicted logarithmic correction.
    """
    if cs is None:
        cs = spectral.critical_analysis(sys, r)
    rz = realize(sys)
    rf = float(as_fraction(r))
    power = rf / cs.s_r
    log_expo = (cs.t_r - 1) * (1.0 + power)
    rows: list[CurveRow] = []
    for k in k_range:
        code_grid = level_grid(rz, r, k, capacity=capacity)
        codebook = grid_codebook(code_grid)
        depth = k + depth_offset
        grid = level_grid(rz, r, depth, capacity=capacity) if depth_offset > 0 else code_grid
        iterations = 0
        if refine:
            codebook, trace = lloyd_refine(
                rz, codebook, r, depth, max_iter=max_iter, grid=grid
            )
            est = trace[-1]
            iterations = len(trace) - 1
        else:
            est = integrate_error(rz, codebook, r, depth, grid=grid)
        n = codebook.size
        norm = n**power
        logc = math.log(n) ** log_expo if n > 1 else 1.0
        rows.append(
            CurveRow(
                k=k, n=n, lower=est.lower, upper=est.upper,
                corrected=est.upper * norm / logc,
                uncorrected=est.upper * norm,
                iterations=iterations,
            )
        )
    return rows


def sample_support_points(
    rz: Realization, n_samples: int, seed: int, resolution: float = 1e-12
) -> np.ndarray:
    """Seeded i.i.d. sample of the measure, to cylinder resolution.

    Walks the chain vectorized until every cylinder is shorter than
    `resolution`, then returns the cylinder midpoints.
    """
    sysm = rz.system
    rng = np.random.default_rng(seed)
    roots, place = rz.layout_floats()
    chi = sysm.chi_float()
    verts = np.array(sysm.vertices)
    cur = rng.choice(verts, size=n_samples, p=chi)
    left = np.array([roots[v] for v in cur])
    length = np.ones(n_samples)
    succ_arr = {i: np.array(sysm.successors(i)) for i in sysm.vertices}
    prob_arr = {
        i: np.array([float(sysm.edge_p(i, j)) for j in sysm.successors(i)])
        for i in sysm.vertices
    }
    off_arr = {
        i: np.array([place[(i, j)][0] for j in sysm.successors(i)]) for i in sysm.vertices
    }
    rat_arr = {
        i: np.array([place[(i, j)][1] for j in sysm.successors(i)]) for i in sysm.vertices
    }
    for _ in range(10_000):
        if float(length.max()) < resolution:
            break
        nxt = np.empty_like(cur)
        offs = np.empty(n_samples)
        rats = np.empty(n_samples)
        for i in sysm.vertices:
            mask = cur == i
            cnt = int(mask.sum())
            if cnt == 0:
                continue
            pick = rng.choice(len(succ_arr[i]), size=cnt, p=prob_arr[i])
            nxt[mask] = succ_arr[i][pick]
            offs[mask] = off_arr[i][pick]
            rats[mask] = rat_arr[i][pick]
        left = left + offs * length
        length = length * rats
        cur = nxt
    return left + 0.5 * length


def monte_carlo_error(
    rz: Realization, codebook: Codebook, r, n_samples: int, seed: int
) -> tuple[float, float]:
    """(estimate, standard error) of the r-th power error by Monte Carlo."""
    xs = sample_support_points(rz, n_samples, seed)
    d = _nearest_distance(codebook.array(), xs) ** float(as_fraction(r))
    mean = float(d.mean())
    stderr = float(d.std(ddof=1) / math.sqrt(n_samples))
    return mean, stderr
