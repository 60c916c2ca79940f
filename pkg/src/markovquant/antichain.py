"""Maximal antichains of the word space under the one-step weight threshold.

For level k and order r, the antichain holds exactly the words sigma whose
weight w_sigma = p_sigma * c_sigma^r first drops strictly below eta_lo^k,
where eta_lo = p_min * c_min^r over edges:

    w_parent >= eta_lo^k > w_sigma.

Ties (w == eta_lo^k exactly) stay internal, so a tied word lands in a later
antichain.  Every vertex has out-degree >= 2 and every edge weight is < 1, so
depth-first expansion from all roots terminates and emits a finite maximal
antichain partitioning the measure.

The scanner streams: no words are stored (the word count phi grows like
e^{ck}).  Emitted weights are folded into a histogram keyed by (chain, w)
where `chain` is the ordered tuple of critical components visited (the
condensation is a DAG, so first-visit order is well defined) and w the word
weight; counts are exact, so all downstream sums are reproducible and
mergeable.  Threshold comparisons run on float weights inside a relative
1e-9 guard band; anything inside the band is resolved exactly, comparing
p^b * c^a against p_min^{kb} * c_min^{ka} for r = a/b in lowest terms (the
word is reconstructed through parent pointers, and the verdict is memoized
per distinct float weight -- distinct rational weight classes this close
together cannot share a double at desk-scale depths).

An exact mode (Fractions end to end, optional word storage) exists for small
levels; it is what the unit oracles diff against.
"""

from __future__ import annotations

import array
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from . import spectral
from .graphs import CriticalStructure
from .model import MarkovSystem, Word, as_fraction, edge_extremes

DEFAULT_CAPACITY = 10**8
_GUARD = 1e-9

Chain = tuple[int, ...]


class CapacityError(RuntimeError):
    """Raised when an enumeration would exceed the configured word cap."""


@dataclass(frozen=True)
class ScanResult:
    """Raw streaming output of one antichain traversal."""

    k: int
    r: Fraction
    phi: int
    depth_min: int
    depth_max: int
    hist: dict  # float mode: (chain, w) -> count; exact mode: (chain, chi, p, c) -> count
    exact: bool
    words: tuple[Word, ...] | None
    grid: tuple | None  # (mids, halves, masses) array.array('d') triples


def _critical_map(sys: MarkovSystem, cs: CriticalStructure | None) -> list[int]:
    """vertex (1-based index) -> critical component index, -1 outside."""
    cmap = [-1] * (sys.n + 1)
    if cs is not None:
        vmap = cs.condensation.vertex_map()
        for v in sys.vertices:
            idx = vmap[v]
            if cs.critical[idx]:
                cmap[v] = idx
    return cmap


def _edge_weight_float(p: Fraction, c: Fraction, rq: Fraction) -> float:
    if rq.denominator == 1:
        return float(p * c**rq.numerator)
    return float(p) * float(c) ** float(rq)


def scan(
    sys: MarkovSystem,
    r,
    k: int,
    *,
    cs: CriticalStructure | None = None,
    layout: tuple[Mapping[int, float], Mapping[tuple[int, int], tuple[float, float]]] | None = None,
    exact: bool = False,
    store_words: bool = False,
    capacity: int = DEFAULT_CAPACITY,
) -> ScanResult:
    """Stream one antichain, folding weights into a histogram.

    layout, when given, is (root_left, child_placement) from the geometric
    realization; the scan then also emits cylinder midpoint / half-width /
    mass triples.  store_words implies exact.
    """
    if k < 1:
        raise ValueError(f"level k must be >= 1, got {k}")
    rq = as_fraction(r)
    if rq <= 0:
        raise ValueError(f"order r must be positive, got {r}")
    if store_words:
        exact = True
    cmap = _critical_map(sys, cs)
    p_lo, c_lo, _, _ = edge_extremes(sys)
    a, b = rq.numerator, rq.denominator
    thr_pow = p_lo ** (k * b) * c_lo ** (k * a)  # eta_lo^k raised to the b-th power

    if exact:
        return _scan_exact(sys, rq, k, cmap, thr_pow, store_words, capacity)

    if rq.denominator == 1:
        thr_f = float((p_lo * c_lo**a) ** k)
    else:
        thr_f = math.exp(k * (math.log(float(p_lo)) + float(rq) * math.log(float(c_lo))))
    if thr_f <= 0.0:  # float underflow; unreachable below any sane capacity cap
        raise ValueError(f"threshold underflows at level k={k}; reduce k")
    tlo = thr_f * (1.0 - _GUARD)
    thi = thr_f * (1.0 + _GUARD)

    chi_f = [0.0] + [float(x) for x in sys.chi]
    # per-vertex successor tables: (j, w_edge, p_edge, offset, ratio, crit_j)
    succ_tab: list[list[tuple]] = [[]]
    for i in sys.vertices:
        row = []
        for j in sys.successors(i):
            pe, ce = sys.edge_p(i, j), sys.edge_c(i, j)
            off, rat = (0.0, float(ce))
            if layout is not None:
                off, rat = layout[1][(i, j)]
            row.append((j, _edge_weight_float(pe, ce, rq), float(pe), off, rat, cmap[j]))
        succ_tab.append(row)

    memo: dict[float, bool] = {}

    def below_exact(fr, j: int) -> bool:
        # reconstruct the word through parent pointers; verdict cached per float
        path = [j]
        node = fr
        while node is not None:
            path.append(node[0])
            node = node[7]
        path.reverse()
        p = Fraction(1)
        c = Fraction(1)
        for u, v in zip(path, path[1:]):
            p *= sys.edge_p(u, v)
            c *= sys.edge_c(u, v)
        return p**b * c**a < thr_pow

    hist: dict = {}
    grid_mids = grid_halves = grid_masses = None
    want_grid = layout is not None
    if want_grid:
        grid_mids = array.array("d")
        grid_halves = array.array("d")
        grid_masses = array.array("d")

    phi = 0
    l1 = 1 << 60
    l2 = 0
    empty_chain: Chain = ()
    # frame: (v, w, mass, left, length, chain, depth, parent_frame)
    stack = []
    for root in sys.vertices:
        left0 = layout[0][root] if want_grid else 0.0
        stack.append((root, 1.0, chi_f[root], left0, 1.0,
                      (cmap[root],) if cmap[root] >= 0 else empty_chain, 1, None))
    hist_get = hist.get
    while stack:
        fr = stack.pop()
        v, w, mass, left, length, chain, depth, _ = fr
        for j, wf, pf, off, rat, cj in succ_tab[v]:
            w2 = w * wf
            if w2 < tlo:
                is_below = True
            elif w2 > thi:
                is_below = False
            else:
                is_below = memo.get(w2)
                if is_below is None:
                    is_below = below_exact(fr, j)
                    memo[w2] = is_below
            # a path cannot re-enter a component it left (condensation is a
            # DAG), so comparing against the last entry suffices
            ch2 = chain if cj < 0 or (chain and chain[-1] == cj) else chain + (cj,)
            if is_below:
                key = (ch2, w2)
                cnt = hist_get(key)
                hist[key] = 1 if cnt is None else cnt + 1
                phi += 1
                d2 = depth + 1
                if d2 < l1:
                    l1 = d2
                if d2 > l2:
                    l2 = d2
                if want_grid:
                    len2 = rat * length
                    grid_mids.append(left + off * length + 0.5 * len2)
                    grid_halves.append(0.5 * len2)
                    grid_masses.append(mass * pf)
            else:
                stack.append(
                    (j, w2, mass * pf, left + off * length, rat * length, ch2, depth + 1, fr)
                )
        if phi > capacity:
            raise CapacityError(
                f"antichain at k={k} exceeds capacity cap {capacity} words"
            )
    grid = (grid_mids, grid_halves, grid_masses) if want_grid else None
    return ScanResult(
        k=k, r=rq, phi=phi, depth_min=l1, depth_max=l2, hist=hist,
        exact=False, words=None, grid=grid,
    )


def _scan_exact(sys, rq, k, cmap, thr_pow, store_words, capacity):
    """Fraction-arithmetic traversal for small levels; optional word storage."""
    a, b = rq.numerator, rq.denominator
    hist: dict = {}
    words: list[Word] = [] if store_words else None
    phi = 0
    l1 = 1 << 60
    l2 = 0
    one = Fraction(1)
    for root in sys.vertices:
        chain0: Chain = (cmap[root],) if cmap[root] >= 0 else ()
        stack = [((root,), one, one, chain0)]
        while stack:
            word, p, c, chain = stack.pop()
            v = word[-1]
            for j in sys.successors(v):
                p2 = p * sys.edge_p(v, j)
                c2 = c * sys.edge_c(v, j)
                cj = cmap[j]
                ch2 = chain if cj < 0 or (chain and chain[-1] == cj) else chain + (cj,)
                w2 = word + (j,)
                if p2**b * c2**a < thr_pow:
                    key = (ch2, sys.chi[root - 1], p2, c2)
                    hist[key] = hist.get(key, 0) + 1
                    phi += 1
                    if phi > capacity:
                        raise CapacityError(
                            f"antichain at k={k} exceeds capacity cap {capacity} words"
                        )
                    d2 = len(word) + 1
                    l1 = min(l1, d2)
                    l2 = max(l2, d2)
                    if store_words:
                        words.append(w2)
                else:
                    stack.append((w2, p2, c2, ch2))
    return ScanResult(
        k=k, r=rq, phi=phi, depth_min=l1, depth_max=l2, hist=hist,
        exact=True, words=tuple(words) if store_words else None, grid=None,
    )


def _weight_items(res: ScanResult) -> list[tuple[Chain, float, int]]:
    """(chain, float weight, count) triples in a canonical order."""
    out: list[tuple[Chain, float, int]] = []
    if res.exact:
        for (chain, _chi, p, c), cnt in res.hist.items():
            out.append((chain, _edge_weight_float(p, c, res.r), cnt))
    else:
        for (chain, w), cnt in res.hist.items():
            out.append((chain, w, cnt))
    out.sort(key=lambda t: (t[0], t[1]))
    return out


@dataclass(frozen=True)
class Antichain:
    """One maximal antichain with its streamed statistics.

    sum_energy is Sum p*c^r over members (exact Fraction in exact mode with
    integer r, float otherwise); sum_dim is Sum (p*c^r)^{s/(s+r)} at the
    dimension exponent s = s_dim.  class_sums splits sum_dim by the visited
    chain of critical components (all mass under () when no critical
    structure was supplied).
    """

    k: int
    r: Fraction
    s_dim: float
    phi: int
    depth_min: int
    depth_max: int
    sum_energy: Fraction | float
    sum_dim: float
    class_sums: dict[Chain, float]
    classified: bool
    exact: bool
    hist: dict = field(repr=False)
    words: tuple[Word, ...] | None = field(default=None, repr=False)

    def weight_counts(self) -> list[tuple[float, int]]:
        """(float weight, count) pairs, ascending by weight."""
        agg: dict[float, int] = {}
        for _chain, w, cnt in _weight_items(self):
            agg[w] = agg.get(w, 0) + cnt
        return sorted(agg.items())


def _build_antichain(res: ScanResult, s_dim: float, classified: bool) -> Antichain:
    rq = res.r
    expo = s_dim / (s_dim + float(rq))
    items = _weight_items(res)
    sum_dim = 0.0
    class_sums: dict[Chain, float] = {}
    for chain, w, cnt in items:
        term = cnt * w**expo
        sum_dim += term
        class_sums[chain] = class_sums.get(chain, 0.0) + term
    if res.exact and rq.denominator == 1:
        a = rq.numerator
        sum_energy: Fraction | float = sum(
            cnt * p * c**a for (_ch, _chi, p, c), cnt in res.hist.items()
        )
    else:
        sum_energy = math.fsum(cnt * w for _ch, w, cnt in items)
    return Antichain(
        k=res.k, r=rq, s_dim=s_dim, phi=res.phi,
        depth_min=res.depth_min, depth_max=res.depth_max,
        sum_energy=sum_energy, sum_dim=sum_dim,
        class_sums=class_sums, classified=classified,
        exact=res.exact, hist=res.hist, words=res.words,
    )


def enumerate_antichain(
    sys: MarkovSystem,
    r,
    k: int,
    *,
    critical: CriticalStructure | None = None,
    exact: bool = False,
    store_words: bool = False,
    capacity: int = DEFAULT_CAPACITY,
) -> Antichain:
    """Enumerate the level-k antichain and its statistics.

    When `critical` is given, members are classified by the chain of critical
    components they visit and the dimension exponent is taken from it;
    otherwise the global root is solved on the spot.
    """
    if critical is not None:
        s_dim = critical.s_r
    else:
        s_dim = spectral.solve_sr(sys, "full", r).root
    res = scan(
        sys, r, k, cs=critical, exact=exact, store_words=store_words, capacity=capacity
    )
    return _build_antichain(res, s_dim, classified=critical is not None)


def measure_partition_sum(ac: Antichain) -> Fraction:
    """Exact Sum of chi_{sigma_1} p_sigma over members (exact mode only).

    Equals 1 for every maximal antichain: the cylinders partition the measure.
    """
    if not ac.exact:
        raise ValueError("partition sum requires an exact-mode antichain")
    total = Fraction(0)
    for (_chain, chi, p, _c), cnt in ac.hist.items():
        total += cnt * chi * p
    return total


def implicit_exponent(ac: Antichain, tol: float = 1e-10) -> float:
    """Solve Sum_{members} w^{t/(t+r)} = 1 for t by bisection.

    The left side decreases strictly in t from phi (at t -> 0) toward
    Sum w < 1, so the root is unique.  Requires at least two members.
    """
    if ac.phi < 2:
        raise ValueError("implicit exponent needs an antichain with >= 2 words")
    rf = float(ac.r)
    weights = ac.weight_counts()

    def f(t: float) -> float:
        e = t / (t + rf)
        return math.fsum(cnt * w**e for w, cnt in weights) - 1.0

    lo = 0.0
    hi = 1.0
    while f(hi) > 0.0:
        lo = hi
        hi *= 2.0
        if hi > 1e9:
            raise ValueError("no positive root: sum of weights is >= 1 at all orders")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ChainSum:
    """Dimension-exponent mass of one chain class inside an antichain."""

    chain: Chain
    value: float
    k: int
    r: float


@dataclass(frozen=True)
class ChainDecomposition:
    """Per-chain split of sum_dim, plus the transient (l = 0) residual."""

    chain_sums: tuple[ChainSum, ...]  # classes with l >= 1, sorted by chain
    residual_l0: float
    total: float

    def value(self, chain: Chain) -> float:
        for cs_ in self.chain_sums:
            if cs_.chain == chain:
                return cs_.value
        return 0.0


def chain_decomposition(
    sys: MarkovSystem,
    r,
    ac: Antichain,
    cs: CriticalStructure,
    capacity: int = DEFAULT_CAPACITY,
) -> ChainDecomposition:
    """Split the antichain's dimension sum by visited critical-component chain.

    Re-scans with classification if the antichain was enumerated without a
    critical structure.
    """
    if not ac.classified:
        res = scan(sys, r, ac.k, cs=cs, exact=ac.exact, capacity=capacity)
        ac = _build_antichain(res, cs.s_r, classified=True)
    sums = [
        ChainSum(chain=ch, value=val, k=ac.k, r=float(ac.r))
        for ch, val in sorted(ac.class_sums.items())
        if ch
    ]
    return ChainDecomposition(
        chain_sums=tuple(sums),
        residual_l0=ac.class_sums.get((), 0.0),
        total=ac.sum_dim,
    )


@dataclass(frozen=True)
class SeriesRow:
    """One level of the normalized ratio table."""

    k: int
    phi: int
    depth_min: int
    depth_max: int
    sum_energy: float
    sum_dim: float
    t_k: float
    corrected: float  # phi^{r/s_r} * sum_energy / (log phi)^{(t_r-1)(1+r/s_r)}
    uncorrected: float  # phi^{r/s_r} * sum_energy
    class_sums: dict[Chain, float]


def theorem_ratio_series(
    sys: MarkovSystem,
    r,
    k_range: Iterable[int],
    *,
    cs: CriticalStructure | None = None,
    exact: bool = False,
    capacity: int = DEFAULT_CAPACITY,
) -> list[SeriesRow]:
    """Normalized antichain sums over a range of levels.

    `uncorrected` tracks the plain power law; `corrected` divides out the
    logarithmic factor predicted for t_r comparable critical components.
    With t_r = 1 the two columns coincide.
    """
    if cs is None:
        cs = spectral.critical_analysis(sys, r)
    rf = float(as_fraction(r))
    power = rf / cs.s_r
    log_expo = (cs.t_r - 1) * (1.0 + power)
    rows: list[SeriesRow] = []
    for k in k_range:
        ac = enumerate_antichain(sys, r, k, critical=cs, exact=exact, capacity=capacity)
        u = ac.phi**power * float(ac.sum_energy)
        corrected = u / math.log(ac.phi) ** log_expo
        rows.append(
            SeriesRow(
                k=k, phi=ac.phi, depth_min=ac.depth_min, depth_max=ac.depth_max,
                sum_energy=float(ac.sum_energy), sum_dim=ac.sum_dim,
                t_k=implicit_exponent(ac),
                corrected=corrected, uncorrected=u,
                class_sums=dict(ac.class_sums),
            )
        )
    return rows
