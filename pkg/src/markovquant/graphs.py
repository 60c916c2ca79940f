"""Strongly connected structure of the model digraph.

Decomposes the digraph into SCCs, builds the condensation DAG with its
reachability order, and derives the critical structure for a given order r:
which components attain the global pressure root, how many a single
admissible path can traverse (t_r), the chains of critical components, and
the transient vertex set F outside all critical components.

Pressure roots per component are supplied by the spectral module; this module
is purely combinatorial apart from transient_sum, which accumulates weighted
matrix powers over the F-restricted graph.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from math import comb
from typing import Callable, Mapping, Sequence

import numpy as np

from .model import MarkovSystem, as_fraction, validate_word


def strongly_connected_components(
    n: int, successors: Callable[[int], Sequence[int]]
) -> list[list[int]]:
    """Tarjan's algorithm over vertices 0..n-1, iterative.

    Returns components as sorted vertex lists, ordered by smallest vertex.
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    comps.sort(key=lambda c: c[0])
    return comps


@dataclass(frozen=True)
class Condensation:
    """SCC partition with the induced DAG.

    components are ordered by their smallest vertex (1-based vertices);
    dag_edges are direct inter-component edges (a, b) meaning a precedes b;
    topo_order is a topological order of component indices; acyclic[i] is
    True for a single-vertex component without a self-loop.
    """

    components: tuple[tuple[int, ...], ...]
    dag_edges: tuple[tuple[int, int], ...]
    topo_order: tuple[int, ...]
    acyclic: tuple[bool, ...]

    @property
    def n_components(self) -> int:
        return len(self.components)

    def component_of(self, vertex: int) -> int:
        for idx, comp in enumerate(self.components):
            if vertex in comp:
                return idx
        raise IndexError(f"vertex {vertex} not in any component")

    def vertex_map(self) -> dict[int, int]:
        """vertex -> component index."""
        return {v: i for i, comp in enumerate(self.components) for v in comp}

    def reachable(self) -> tuple[frozenset[int], ...]:
        """reachable[i] = set of component indices j != i reachable from i."""
        succ: list[set[int]] = [set() for _ in self.components]
        for a, b in self.dag_edges:
            succ[a].add(b)
        reach: list[frozenset[int]] = [frozenset()] * len(self.components)
        for i in reversed(self.topo_order):
            acc: set[int] = set()
            for j in succ[i]:
                acc.add(j)
                acc |= reach[j]
            reach[i] = frozenset(acc)
        return tuple(reach)


def scc_condensation(sys: MarkovSystem) -> Condensation:
    """Strongly connected components of the model digraph and their DAG.

    Component numbering is deterministic (ascending smallest vertex); the
    topological order is the lexicographically smallest one (Kahn with a
    min-heap on component index).
    """
    comps0 = strongly_connected_components(sys.n, lambda v: [j - 1 for j in sys.successors(v + 1)])
    components = tuple(tuple(v + 1 for v in comp) for comp in comps0)
    vmap = {v: i for i, comp in enumerate(components) for v in comp}
    dag = sorted(
        {
            (vmap[i], vmap[j])
            for i, j in sys.edges
            if vmap[i] != vmap[j]
        }
    )
    acyclic = tuple(
        len(comp) == 1 and not sys.is_edge(comp[0], comp[0]) for comp in components
    )
    # Kahn's algorithm; pick smallest ready index for determinism
    m = len(components)
    indeg = [0] * m
    succ: list[list[int]] = [[] for _ in range(m)]
    for a, b in dag:
        indeg[b] += 1
        succ[a].append(b)
    ready = [i for i in range(m) if indeg[i] == 0]
    heapq.heapify(ready)
    topo: list[int] = []
    while ready:
        i = heapq.heappop(ready)
        topo.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    if len(topo) != m:
        raise AssertionError("condensation has a cycle; SCC decomposition is broken")
    return Condensation(
        components=components,
        dag_edges=tuple(dag),
        topo_order=tuple(topo),
        acyclic=acyclic,
    )


#: component is critical iff its root is within this much of the global root
CRITICAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CriticalStructure:
    """Critical components at order r and the quantities driven by them."""

    system: MarkovSystem
    condensation: Condensation
    r: float
    s_r: float
    per_component: tuple[float, ...]
    critical: tuple[bool, ...]
    m_r: int
    t_r: int
    transient_set: frozenset[int]

    @property
    def critical_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.critical) if f)

    def critical_component_of(self, vertex: int) -> int | None:
        """Index (within critical_indices) of the critical component holding vertex."""
        idx = self.condensation.vertex_map().get(vertex)
        if idx is None or not self.critical[idx]:
            return None
        return idx


def critical_structure(
    sys: MarkovSystem,
    r,
    per_component_s: Mapping[int, float],
    cond: Condensation | None = None,
    tol: float = CRITICAL_TOL,
) -> CriticalStructure:
    """Assemble the critical structure from per-component pressure roots.

    per_component_s maps component index -> root s_r(H) (0 for acyclic or
    subcritical components).  t_r is the longest path in the condensation
    DAG counting critical components only, which equals the maximum of
    t_r_of_path over all admissible words because components are strongly
    connected.
    """
    if cond is None:
        cond = scc_condensation(sys)
    m = cond.n_components
    per = tuple(float(per_component_s[i]) for i in range(m))
    s_global = max(per)
    critical = tuple(per[i] >= s_global - tol and not cond.acyclic[i] for i in range(m))
    crit_count = sum(critical)
    # longest weighted path over the DAG, weight 1 on critical components
    succ: list[list[int]] = [[] for _ in range(m)]
    for a, b in cond.dag_edges:
        succ[a].append(b)
    best = [0] * m
    for i in reversed(cond.topo_order):
        tail = max((best[j] for j in succ[i]), default=0)
        best[i] = (1 if critical[i] else 0) + tail
    t_r = max(best) if m else 0
    transient = frozenset(
        v for i, comp in enumerate(cond.components) if not critical[i] for v in comp
    )
    return CriticalStructure(
        system=sys,
        condensation=cond,
        r=float(as_fraction(r)),
        s_r=s_global,
        per_component=per,
        critical=critical,
        m_r=crit_count,
        t_r=t_r,
        transient_set=transient,
    )


def enumerate_chains(cs: CriticalStructure, length: int) -> tuple[tuple[int, ...], ...]:
    """All strictly ordered chains of `length` critical components.

    A chain (H_1, ..., H_l) requires a condensation path from each H_i to
    H_{i+1}.  Reachability between distinct components is a strict partial
    order, so each l-subset of critical components supports at most one
    chain: cardinality is bounded by C(m_r, length).  When all critical
    components are mutually comparable (t_r = m_r) this is C(t_r, length).
    """
    if not 1 <= length <= max(cs.m_r, 1):
        raise ValueError(f"chain length {length} outside 1..{cs.m_r}")
    crit = cs.critical_indices
    reach = cs.condensation.reachable()
    chains = [
        tup
        for tup in itertools.permutations(crit, length)
        if all(tup[i + 1] in reach[tup[i]] for i in range(length - 1))
    ]
    chains.sort()
    result = tuple(chains)
    if len(result) > comb(cs.m_r, length):
        raise AssertionError(
            f"card(H_{length}) = {len(result)} exceeds C({cs.m_r},{length})"
        )
    return result


def t_r_of_path(cs: CriticalStructure, word: Sequence[int]) -> int:
    """Number of distinct critical components met by the word."""
    w = validate_word(cs.system, word)
    vmap = cs.condensation.vertex_map()
    seen = {vmap[v] for v in w if cs.critical[vmap[v]]}
    return len(seen)


def visited_chain(cs: CriticalStructure, word: Sequence[int]) -> tuple[int, ...]:
    """Ordered tuple of distinct critical components visited, first-visit order.

    The condensation is a DAG, so a path can never re-enter a component it
    left; first-visit order is therefore the chain order.
    """
    vmap = cs.condensation.vertex_map()
    chain: list[int] = []
    for v in word:
        idx = vmap[v]
        if cs.critical[idx] and (not chain or chain[-1] != idx):
            chain.append(idx)
    return tuple(chain)


def transient_sum(sys: MarkovSystem, cs: CriticalStructure, r, s, n: int) -> float:
    """Sum of (p_sigma c_sigma^r)^{s/(s+r)} over length-n words inside F.

    F is the complement of the critical components; a word qualifies only if
    every entry lies in F.  Computed by accumulating powers of the
    F-restricted weight matrix, so no words are materialized.  Returns 0.0
    when F is empty; length-1 words have unit weight by convention, so
    transient_sum(..., 1) = |F|.
    """
    if n < 1:
        raise ValueError(f"depth must be >= 1, got {n}")
    fset = sorted(cs.transient_set)
    if not fset:
        return 0.0
    if n == 1:
        return float(len(fset))
    rf = float(as_fraction(r))
    sf = float(s)
    expo = sf / (sf + rf)
    idx = {v: i for i, v in enumerate(fset)}
    m = len(fset)
    b = np.zeros((m, m))
    for i, j in sys.edges:
        if i in idx and j in idx:
            w = float(sys.edge_p(i, j)) * float(sys.edge_c(i, j)) ** rf
            b[idx[i], idx[j]] = w**expo
    vec = np.ones(m)
    for _ in range(n - 1):
        vec = b @ vec
    return float(vec.sum())
