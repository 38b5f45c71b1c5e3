"""Weak (entropy) typicality for sequences and tensor-power eigenbases.

Masses and cardinalities are summed over type classes, so the classical
quantities stay cheap for n in the thousands; only the projector itself is
materialized, and only below the dimension cap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_CAP,
    DEFAULT_TOL,
    ProbabilityVector,
    ToleranceConfig,
    check_cap,
    hermitian_eig,
    hermitize,
    op_leq,
    shannon_entropy,
)

ENUMERATION_CAP = 4096
COMPOSITION_CAP = 2_000_000


def merge_symbols(probs, tol: float = DEFAULT_TOL.eig):
    """Group probabilities that agree within ``tol``.

    Returns ``(values, multiplicities, representative)`` where ``values`` are
    the distinct nonzero probabilities, ``multiplicities`` how many symbols
    share each, and ``representative[i]`` the merged value for symbol ``i``
    (0.0 for null symbols).
    """
    p = np.asarray(probs, dtype=float)
    order = np.argsort(p, kind="stable")
    rep = np.zeros_like(p)
    values, mults = [], []
    group: list[int] = []

    def flush():
        if group:
            v = float(np.mean(p[group]))
            if v > tol:
                rep[group] = v
                values.append(v)
                mults.append(len(group))

    for i in order:
        if group and p[i] - p[group[0]] > tol:
            flush()
            group = []
        group.append(int(i))
    flush()
    return np.array(values), np.array(mults, dtype=int), rep


@dataclass
class TypicalIndexSet:
    n: int
    delta: float
    base_probs: ProbabilityVector
    entropy: float
    symbol_probs: np.ndarray = field(repr=False)
    total_mass: float
    cardinality: int
    sequences: list | None = field(default=None, repr=False)

    @property
    def lower(self) -> float:
        """Smallest admissible value of -log2 p(x^n)."""
        return self.n * (self.entropy - self.delta)

    @property
    def upper(self) -> float:
        return self.n * (self.entropy + self.delta)

    def contains(self, sequence) -> bool:
        q = self.symbol_probs[np.asarray(sequence, dtype=int)]
        if len(q) != self.n or np.any(q <= 0):
            return False
        return _in_window(-float(np.sum(np.log2(q))), self.lower, self.upper)

    @property
    def cardinality_bound_log2(self) -> float:
        return self.upper

    @property
    def cardinality_bound_holds(self) -> bool:
        return self.cardinality == 0 or math.log2(self.cardinality) <= self.upper + 1e-9


def _in_window(neg_log_p, lower, upper) -> bool:
    slack = 1e-12 * max(1.0, abs(upper))
    return lower - slack <= neg_log_p <= upper + slack


def _compositions(n: int, m: int):
    if m == 1:
        yield (n,)
        return
    for k in range(n + 1):
        for rest in _compositions(n - k, m - 1):
            yield (k,) + rest


def _log_multinomial(n: int, ks) -> float:
    return math.lgamma(n + 1) - sum(math.lgamma(k + 1) for k in ks)


def typical_set(p, n: int, delta: float, tol: ToleranceConfig = DEFAULT_TOL,
                enumeration_cap: int = ENUMERATION_CAP) -> TypicalIndexSet:
    """The delta-typical set of length-n sequences drawn i.i.d. from ``p``.

    Mass and cardinality are exact sums over type classes of the merged
    alphabet; the explicit member list is filled in only when
    ``len(p) ** n <= enumeration_cap``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not delta > 0:
        raise ValueError("delta must be > 0")
    pv = p if isinstance(p, ProbabilityVector) else ProbabilityVector(p, tol.tr)
    probs = pv.as_array()
    values, mults, symbol_probs = merge_symbols(probs, tol.eig)
    h = shannon_entropy(probs)
    lower, upper = n * (h - delta), n * (h + delta)
    m = len(values)
    if math.comb(n + m - 1, m - 1) > COMPOSITION_CAP:
        raise ValueError(f"too many type classes for n={n} over {m} symbols")
    logq = np.log2(values)
    lnq = np.log(values)
    lnmult = np.log(mults)
    mass = 0.0
    card = 0
    for ks in _compositions(n, m):
        nlp = -float(np.dot(ks, logq))
        if not _in_window(nlp, lower, upper):
            continue
        count, remaining = 1, n
        for k, mu in zip(ks, mults):
            count *= math.comb(remaining, k) * int(mu) ** k
            remaining -= k
        card += count
        mass += math.exp(_log_multinomial(n, ks) + float(np.dot(ks, lnmult + lnq)))
    seqs = None
    if len(probs) ** n <= enumeration_cap:
        seqs = []
        logp_sym = np.where(symbol_probs > 0, np.log2(np.where(symbol_probs > 0, symbol_probs, 1.0)), -np.inf)
        for seq in itertools.product(range(len(probs)), repeat=n):
            nlp = -float(np.sum(logp_sym[list(seq)]))
            if np.isfinite(nlp) and _in_window(nlp, lower, upper):
                seqs.append(seq)
    return TypicalIndexSet(n, delta, pv, h, symbol_probs, min(mass, 1.0), card, seqs)


def min_copies_for_mass(p, delta: float, eps: float, n_max: int = 10_000, start: int = 1) -> int | None:
    """Smallest n in [start, n_max] whose typical mass reaches ``1 - eps``."""
    for n in range(start, n_max + 1):
        if typical_set(p, n, delta, enumeration_cap=0).total_mass >= 1 - eps:
            return n
    return None


@dataclass
class TypicalProjector:
    source: np.ndarray = field(repr=False)
    n: int
    delta: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    index_set: TypicalIndexSet
    mask: np.ndarray | None = field(default=None, repr=False)
    matrix: np.ndarray | None = field(default=None, repr=False)
    basis: np.ndarray | None = field(default=None, repr=False)

    @property
    def rank(self) -> int:
        return self.index_set.cardinality


def typical_mask(symbol_probs: np.ndarray, n: int, lower: float, upper: float) -> np.ndarray:
    """Boolean vector over product indices (first copy most significant) marking typical ones."""
    logp = np.where(symbol_probs > 0, np.log2(np.where(symbol_probs > 0, symbol_probs, 1.0)), -np.inf)
    total = np.zeros(1)
    for _ in range(n):
        total = np.add.outer(total, logp).reshape(-1)
    nlp = -total
    slack = 1e-12 * max(1.0, abs(upper))
    return np.isfinite(nlp) & (nlp >= lower - slack) & (nlp <= upper + slack)


def typical_projector(rho, n: int, delta: float, cap: int = DEFAULT_CAP, materialize: bool = True,
                      tol: ToleranceConfig = DEFAULT_TOL) -> TypicalProjector:
    """Projector onto the span of typical tensor products of rho's eigenvectors."""
    r = hermitize(rho, tol.herm)
    w, v = hermitian_eig(r, tol=tol)
    p = np.clip(w, 0.0, None)
    p = p / p.sum()
    index_set = typical_set(p, n, delta, tol, enumeration_cap=0)
    proj = TypicalProjector(r, n, delta, w, v, index_set)
    if materialize:
        check_cap(r.shape[0] ** n, cap)
        mask = typical_mask(index_set.symbol_probs, n, index_set.lower, index_set.upper)
        basis = product_columns(v, np.flatnonzero(mask), n)
        proj.mask = mask
        proj.basis = basis
        proj.matrix = basis @ basis.conj().T
    return proj


def product_columns(v: np.ndarray, indices: np.ndarray, n: int) -> np.ndarray:
    """Columns ``indices`` of ``v^{(x) n}`` without forming the full tensor power."""
    d = v.shape[0]
    if len(indices) == 0:
        return np.zeros((d ** n, 0), dtype=v.dtype)
    digits = (indices[:, None] // d ** np.arange(n - 1, -1, -1)[None, :]) % d
    cols = v[:, digits[:, 0]]
    for k in range(1, n):
        cols = np.einsum("ar,br->abr", cols, v[:, digits[:, k]]).reshape(-1, len(indices))
    return cols


def typical_operator_bound_holds(proj: TypicalProjector, entropy: float | None = None,
                                 tol: float = DEFAULT_TOL.eig) -> bool:
    """Check ``2^{n(S - delta)} P rho^n P <= P`` in the Loewner order."""
    if proj.matrix is None:
        raise ValueError("projector was not materialized")
    s = proj.index_set.entropy if entropy is None else entropy
    # both sides live on the range of P, so compare them in its orthonormal basis
    b = proj.basis
    if b.shape[1] == 0:
        return True
    restricted = b.conj().T @ _apply_power(proj.source, b, proj.n)
    lhs = 2.0 ** (proj.n * (s - proj.delta)) * restricted
    return op_leq(lhs, np.eye(b.shape[1]), tol)


def _apply_power(a: np.ndarray, x: np.ndarray, n: int) -> np.ndarray:
    """``a^{(x) n} @ x`` by contracting one tensor factor at a time."""
    d, r = a.shape[0], x.shape[1]
    t = x.reshape((d,) * n + (r,))
    for k in range(n):
        t = np.moveaxis(np.tensordot(a, t, axes=([1], [k])), 0, k)
    return t.reshape(d ** n, r)
