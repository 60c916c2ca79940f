"""Markov-type measure models on a finite digraph.

A model is a row-stochastic transition matrix P = (p_ij), a contraction-ratio
matrix C = (c_ij) sharing P's support, and a positive initial distribution chi.
Every vertex must have at least two outgoing edges; ratios satisfy
0 < c_ij < 1 on edges.  Vertices are 1-based throughout the public API.

Finite admissible words sigma = (v_1, ..., v_k) carry multiplicative weights

    p_sigma = prod p_{v_h v_{h+1}},   c_sigma = prod c_{v_h v_{h+1}},

with the convention p = c = 1 for words of length <= 1, and the cylinder
measure mu(J_sigma) = chi_{v_1} * p_sigma.

All probabilities and ratios are stored as exact `fractions.Fraction` values
(decimal strings such as "0.25" and rationals such as "1/3" are both exact);
float views are provided for numerics.  Instances are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

Word = tuple[int, ...]

#: absolute tolerance for stochasticity / normalization checks on exact inputs
NORMALIZATION_TOL = Fraction(1, 10**12)


class ModelFormatError(ValueError):
    """Raised when a model config cannot be parsed into a MarkovSystem."""


class InvalidWordError(ValueError):
    """Raised when a word contains a pair (i, j) that is not an edge."""


def as_fraction(value) -> Fraction:
    """Convert an int, Fraction, decimal/rational string, or float to an exact Fraction.

    Floats go through repr(), so 0.1 means 1/10, not the binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ModelFormatError(f"boolean is not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelFormatError(f"cannot parse number {value!r}") from exc
    raise ModelFormatError(f"cannot parse number {value!r}")


class MarkovSystem:
    """A Markov-type measure model (P, C, chi) on vertices 1..N.

    Parameters
    ----------
    p, c : N x N nested sequences
        Transition probabilities and contraction ratios.  Entries may be
        ints, Fractions, floats, or strings ("1/3", "0.25").
    chi : length-N sequence
        Initial distribution.

    The constructor only enforces shape; use :func:`validate_system` to check
    the measure-theoretic invariants (row sums, out-degrees, support match).
    """

    __slots__ = ("n", "p", "c", "chi", "_succ", "_edges", "_float_cache")

    def __init__(self, p: Sequence[Sequence], c: Sequence[Sequence], chi: Sequence):
        chi_t = tuple(as_fraction(x) for x in chi)
        n = len(chi_t)
        if n < 1:
            raise ModelFormatError("empty chi vector")
        p_t = tuple(tuple(as_fraction(x) for x in row) for row in p)
        c_t = tuple(tuple(as_fraction(x) for x in row) for row in c)
        for name, mat in (("p", p_t), ("c", c_t)):
            if len(mat) != n or any(len(row) != n for row in mat):
                raise ModelFormatError(f"{name} is not an {n}x{n} matrix")
        self.n = n
        self.p = p_t
        self.c = c_t
        self.chi = chi_t
        self._succ = tuple(
            tuple(j + 1 for j in range(n) if p_t[i][j] > 0) for i in range(n)
        )
        self._edges = tuple(
            (i + 1, j + 1) for i in range(n) for j in range(n) if p_t[i][j] > 0
        )
        self._float_cache: dict[str, np.ndarray] = {}

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple], chi: Sequence) -> "MarkovSystem":
        """Build from an edge list of (from, to, p, c) with 1-based vertices."""
        p = [[Fraction(0)] * n for _ in range(n)]
        c = [[Fraction(0)] * n for _ in range(n)]
        for i, j, pij, cij in edges:
            if not (1 <= i <= n and 1 <= j <= n):
                raise ModelFormatError(f"edge ({i},{j}) out of range 1..{n}")
            if p[i - 1][j - 1] != 0:
                raise ModelFormatError(f"duplicate edge ({i},{j})")
            p[i - 1][j - 1] = as_fraction(pij)
            c[i - 1][j - 1] = as_fraction(cij)
        return cls(p, c, chi)

    @classmethod
    def from_config(cls, cfg: dict) -> "MarkovSystem":
        """Build from the JSON config schema.

        Schema: {"n": int, "edges": [{"from": i, "to": j, "p": "...", "c": "..."}],
        "chi": [...]}. Vertices are 1-based.
        """
        try:
            n = int(cfg["n"])
            edges = [(e["from"], e["to"], e["p"], e["c"]) for e in cfg["edges"]]
            chi = cfg["chi"]
        except (KeyError, TypeError) as exc:
            raise ModelFormatError(f"malformed model config: {exc}") from exc
        if len(chi) != n:
            raise ModelFormatError(f"chi has length {len(chi)}, expected n={n}")
        return cls.from_edges(n, edges, chi)

    @classmethod
    def from_json_file(cls, path) -> "MarkovSystem":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_config(cfg)

    # -- accessors -------------------------------------------------------

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """All edges (i, j) with p_ij > 0, lexicographic order."""
        return self._edges

    def successors(self, i: int) -> tuple[int, ...]:
        """Vertices j with p_ij > 0, ascending.  1-based."""
        if not 1 <= i <= self.n:
            raise IndexError(f"vertex {i} out of range 1..{self.n}")
        return self._succ[i - 1]

    def edge_p(self, i: int, j: int) -> Fraction:
        return self.p[i - 1][j - 1]

    def edge_c(self, i: int, j: int) -> Fraction:
        return self.c[i - 1][j - 1]

    def is_edge(self, i: int, j: int) -> bool:
        return 1 <= i <= self.n and 1 <= j <= self.n and self.p[i - 1][j - 1] > 0

    def _float(self, key: str, build) -> np.ndarray:
        arr = self._float_cache.get(key)
        if arr is None:
            arr = build()
            arr.setflags(write=False)
            self._float_cache[key] = arr
        return arr

    def p_float(self) -> np.ndarray:
        return self._float("p", lambda: np.array(self.p, dtype=float))

    def c_float(self) -> np.ndarray:
        return self._float("c", lambda: np.array(self.c, dtype=float))

    def chi_float(self) -> np.ndarray:
        return self._float("chi", lambda: np.array(self.chi, dtype=float))

    def __repr__(self) -> str:
        return f"MarkovSystem(n={self.n}, edges={len(self._edges)})"


class PathWeight(NamedTuple):
    """Multiplicative weights of a word: p_sigma, c_sigma, and mu(J_sigma)."""

    p_weight: Fraction
    c_weight: Fraction
    measure_weight: Fraction


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate_system(sys: MarkovSystem) -> ValidationReport:
    """Check all model invariants; violations are reported, not raised.

    Checks per row i: sum_j p_ij = 1 (within 1e-12), out-degree >= 2,
    c_ij > 0 iff p_ij > 0, c_ij < 1; and chi > 0 with sum 1 (within 1e-12).
    """
    bad: list[str] = []
    n = sys.n
    for i in range(1, n + 1):
        row = sys.p[i - 1]
        s = sum(row)
        if any(x < 0 or x > 1 for x in row):
            bad.append(f"row {i} has a probability outside [0, 1]")
        if abs(s - 1) > NORMALIZATION_TOL:
            bad.append(f"row {i} sums to {float(s):.12g}")
        deg = len(sys.successors(i))
        if deg < 2:
            bad.append(f"row {i} has out-degree {deg} < 2")
        for j in range(1, n + 1):
            pij, cij = sys.p[i - 1][j - 1], sys.c[i - 1][j - 1]
            if (pij > 0) != (cij > 0):
                bad.append(f"entry ({i},{j}): c and p support mismatch")
            if cij >= 1 or cij < 0:
                bad.append(f"entry ({i},{j}): ratio {float(cij):.12g} outside [0, 1)")
    if any(x <= 0 for x in sys.chi):
        bad.append("chi has a non-positive entry")
    if abs(sum(sys.chi) - 1) > NORMALIZATION_TOL:
        bad.append(f"chi sums to {float(sum(sys.chi)):.12g}")
    return ValidationReport(ok=not bad, violations=tuple(bad))


def successors(sys: MarkovSystem, i: int) -> tuple[int, ...]:
    """Ordered successor list of vertex i (ascending)."""
    return sys.successors(i)


def validate_word(sys: MarkovSystem, word: Sequence[int]) -> Word:
    """Return the word as a tuple, raising InvalidWordError on a non-edge pair."""
    w = tuple(int(v) for v in word)
    for v in w:
        if not 1 <= v <= sys.n:
            raise InvalidWordError(f"vertex {v} out of range 1..{sys.n}")
    for a, b in zip(w, w[1:]):
        if not sys.is_edge(a, b):
            raise InvalidWordError(f"({a},{b}) is not an edge")
    return w


def path_weight(sys: MarkovSystem, word: Sequence[int]) -> PathWeight:
    """Exact weights of a word; the empty word gets unit weights.

    measure_weight is chi_{v_1} * p_sigma, the mu-mass of the cylinder
    J_sigma; for the empty word it is 1 (mass of the whole space).
    """
    w = validate_word(sys, word)
    p = Fraction(1)
    c = Fraction(1)
    for a, b in zip(w, w[1:]):
        p *= sys.edge_p(a, b)
        c *= sys.edge_c(a, b)
    mass = sys.chi[w[0] - 1] * p if w else Fraction(1)
    return PathWeight(p_weight=p, c_weight=c, measure_weight=mass)


def eta_bounds(sys: MarkovSystem, r) -> tuple:
    """One-step weight bounds (eta_lo, eta_hi) = (p_min*c_min^r, p_max*c_max^r).

    Minima and maxima run over edges only.  Exact Fractions when r is an
    integer, floats otherwise.
    """
    rq = as_fraction(r)
    if rq <= 0:
        raise ValueError(f"order r must be positive, got {r}")
    p_lo, c_lo, p_hi, c_hi = edge_extremes(sys)
    if rq.denominator == 1:
        k = rq.numerator
        return p_lo * c_lo**k, p_hi * c_hi**k
    rf = float(rq)
    return float(p_lo) * float(c_lo) ** rf, float(p_hi) * float(c_hi) ** rf


def edge_extremes(sys: MarkovSystem) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """(p_min, c_min, p_max, c_max) over edges, exact."""
    ps = [sys.edge_p(i, j) for i, j in sys.edges]
    cs = [sys.edge_c(i, j) for i, j in sys.edges]
    return min(ps), min(cs), max(ps), max(cs)


def load_model(path) -> MarkovSystem:
    """Load a model config JSON file."""
    return MarkovSystem.from_json_file(path)
