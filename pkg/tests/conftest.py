"""Shared fixtures and independent oracles.

The three reference models:
  A ("cantor"): N=2, complete graph, all p=1/2, c=1/3.  One critical SCC,
    closed-form root ln2/ln3 for every order.
  B ("chain"): N=7.  Two critical SCCs {1,2} and {3,4} joined through the
    transient vertex 5; the subcritical sink {6,7} has ratios 1/9.
  C ("incomparable"): N=5.  Two critical SCCs {1,2}, {3,4}, both reachable
    from root 5 but not from each other.

Oracle values below were recomputed independently (200-step bisection at
50 decimal digits) before anything in src/ existed; tests freeze them.
"""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest

from markovquant import MarkovSystem, load_model, path_weight

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"

# frozen oracle values (independent high-precision bisection / closed forms)
S_R_A = 0.6309297535714574  # ln2/ln3, any order
S1_H1_B = 0.36718377023594174  # root of golden_ratio * (1/6)^{s/(s+1)} = 1
S1_K_B = 0.31546487678572872  # x/(1-x), x = ln2/ln18
DECAY_LIMIT_B = 0.9202422538857508  # 2*(1/18)^{s/(s+1)} at s = S1_H1_B
T11_A = 1.3825362618551106  # y/(1-y), y = ln8/ln36


@pytest.fixture(scope="session")
def sys_a() -> MarkovSystem:
    return load_model(FIXTURE_DIR / "fixture_a.json")


@pytest.fixture(scope="session")
def sys_b() -> MarkovSystem:
    return load_model(FIXTURE_DIR / "fixture_b.json")


@pytest.fixture(scope="session")
def sys_c() -> MarkovSystem:
    return load_model(FIXTURE_DIR / "fixture_c.json")


def all_words(sys: MarkovSystem, length: int) -> list[tuple[int, ...]]:
    """Every admissible word of exactly this length, by breadth-first growth."""
    words = [(i,) for i in sys.vertices]
    for _ in range(length - 1):
        words = [w + (j,) for w in words for j in sys.successors(w[-1])]
    return words


def oracle_antichain(sys: MarkovSystem, r: int, k: int) -> list[tuple[int, ...]]:
    """Brute-force maximal antichain straight from the defining inequalities.

    Grows words breadth-first and tests membership per word with fresh exact
    products (no incremental state shared with the production scanner).
    Integer r only.
    """
    eta_lo = min(sys.edge_p(i, j) * sys.edge_c(i, j) ** r for i, j in sys.edges)
    thr = eta_lo**k
    members: list[tuple[int, ...]] = []
    frontier = [(i,) for i in sys.vertices]
    while frontier:
        nxt = []
        for w in frontier:
            pw = path_weight(sys, w)
            weight = pw.p_weight * pw.c_weight**r
            parent = path_weight(sys, w[:-1])
            par_weight = parent.p_weight * parent.c_weight**r
            if par_weight >= thr > weight:
                members.append(w)
            elif weight >= thr:
                nxt.extend(w + (j,) for j in sys.successors(w[-1]))
            # else: an ancestor was already emitted; cannot happen in BFS from roots
        frontier = nxt
    return sorted(members)


def random_rational_system(rng: random.Random, n_min: int = 2, n_max: int = 6) -> MarkovSystem:
    """Random small model with exact rational weights, all invariants satisfied."""
    n = rng.randint(n_min, n_max)
    p = [[Fraction(0)] * n for _ in range(n)]
    c = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        deg = rng.randint(2, n) if n >= 2 else 2
        targets = rng.sample(range(n), deg)
        weights = [rng.randint(1, 9) for _ in targets]
        total = sum(weights)
        for j, wgt in zip(targets, weights):
            p[i][j] = Fraction(wgt, total)
            c[i][j] = Fraction(rng.randint(1, 8), rng.randint(9, 20))
    chi_w = [rng.randint(1, 5) for _ in range(n)]
    chi = [Fraction(w, sum(chi_w)) for w in chi_w]
    return MarkovSystem(p, c, chi)
