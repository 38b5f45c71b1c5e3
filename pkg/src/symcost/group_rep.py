"""Finite groups, unitary representations and twirling channels."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .core import (
    DEFAULT_CAP,
    DEFAULT_TOL,
    ToleranceConfig,
    apply_local,
    as_matrix,
    check_cap,
    trace_distance,
    trace_norm,
)
from .errors import (
    ClosureViolation,
    DimensionMismatch,
    HomomorphismViolation,
    NonUnitaryElement,
    NonUnitaryInput,
)

EXHAUSTIVE_ORDER = 64


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """A finite group given by its multiplication table.

    ``mult_table[a, b]`` is the index of the product ``a * b``.
    """

    mult_table: np.ndarray
    identity: int
    inverse: np.ndarray

    @property
    def order(self) -> int:
        return self.mult_table.shape[0]

    def mul(self, a: int, b: int) -> int:
        return int(self.mult_table[a, b])

    @classmethod
    def from_table(cls, table, seed: int = 0) -> "FiniteGroup":
        t = np.asarray(table)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
            raise ClosureViolation(f"multiplication table must be square, got shape {t.shape}")
        if not np.issubdtype(t.dtype, np.integer):
            if not np.all(np.equal(np.mod(t, 1), 0)):
                raise ClosureViolation("multiplication table entries must be integers")
            t = t.astype(int)
        order = t.shape[0]
        if t.min() < 0 or t.max() >= order:
            raise ClosureViolation("multiplication table has entries outside the element range")
        ar = np.arange(order)
        ids = [e for e in range(order) if np.array_equal(t[e], ar) and np.array_equal(t[:, e], ar)]
        if not ids:
            raise ClosureViolation("no two-sided identity element")
        e = ids[0]
        inverse = np.empty(order, dtype=int)
        for a in range(order):
            right = np.flatnonzero(t[a] == e)
            if right.size != 1 or t[right[0], a] != e:
                raise ClosureViolation(f"element {a} has no two-sided inverse")
            inverse[a] = right[0]
        if order <= EXHAUSTIVE_ORDER:
            lhs = t[t[:, :, None], ar[None, None, :]]  # (ab)c
            rhs = t[ar[:, None, None], t[None, :, :]]  # a(bc)
            bad = np.argwhere(lhs != rhs)
            if bad.size:
                a, b, c = bad[0]
                raise ClosureViolation(f"associativity fails for ({a}, {b}, {c})")
        else:
            rng = np.random.default_rng(seed)
            abc = rng.integers(0, order, size=(10 * order * order, 3))
            a, b, c = abc.T
            bad = np.flatnonzero(t[t[a, b], c] != t[a, t[b, c]])
            if bad.size:
                i = bad[0]
                raise ClosureViolation(f"associativity fails for ({a[i]}, {b[i]}, {c[i]})")
        t = t.copy()
        t.setflags(write=False)
        inverse.setflags(write=False)
        return cls(t, e, inverse)

    @classmethod
    def cyclic(cls, order: int) -> "FiniteGroup":
        ar = np.arange(order)
        return cls.from_table((ar[:, None] + ar[None, :]) % order)


@dataclass(frozen=True, eq=False)
class GroupRep:
    """A verified unitary representation ``g -> unitaries[g]``.

    Build through :func:`make_cyclic_rep`, :func:`make_explicit_rep` or
    :func:`product_rep`; the bare constructor performs no checks.
    """

    group: FiniteGroup
    unitaries: np.ndarray

    @property
    def dim(self) -> int:
        return self.unitaries.shape[1]

    @property
    def order(self) -> int:
        return self.group.order

    @cached_property
    def is_diagonal(self) -> bool:
        off = self.unitaries * (1 - np.eye(self.dim))[None]
        return bool(np.max(np.abs(off), initial=0.0) == 0.0)

    @cached_property
    def diagonals(self) -> np.ndarray:
        """``(order, dim)`` array of diagonal entries (meaningful only when diagonal)."""
        return np.einsum("gii->gi", self.unitaries)

    @cached_property
    def superop(self) -> np.ndarray:
        """Twirl as a tensor ``S[p, q, a, b]``: ``T(tau)[p, q] = sum S[p,q,a,b] tau[a,b]``."""
        u = self.unitaries
        return np.einsum("gpa,gqb->pqab", u, u.conj()) / self.order

    @cached_property
    def dephasing_mask(self) -> np.ndarray:
        """For diagonal reps the twirl is entrywise multiplication by this matrix."""
        u = self.diagonals
        return (u.T @ u.conj()) / self.order

    def copies_for(self, dim: int) -> int:
        """Number of tensor copies ``n`` such that ``self.dim ** n == dim``."""
        n = round(math.log(dim) / math.log(self.dim)) if self.dim > 1 else 1
        if n < 1 or self.dim ** n != dim:
            raise DimensionMismatch(f"dimension {dim} is not a power of the representation dimension {self.dim}")
        return n


def _check_unitaries(unitaries: np.ndarray, tol: float):
    d = unitaries.shape[1]
    eye = np.eye(d)
    for g, u in enumerate(unitaries):
        dev = float(np.max(np.abs(u.conj().T @ u - eye)))
        if dev > tol * d:
            raise NonUnitaryElement(f"U[{g}] is not unitary (max |U^dag U - I| = {dev:.3g})")


def _validate_rep(group: FiniteGroup, unitaries: np.ndarray, tol: ToleranceConfig, seed: int = 0) -> GroupRep:
    u = np.asarray(unitaries, dtype=complex)
    if u.ndim != 3 or u.shape[1] != u.shape[2]:
        raise DimensionMismatch(f"unitaries must have shape (order, d, d), got {u.shape}")
    if u.shape[0] != group.order:
        raise DimensionMismatch(f"{u.shape[0]} unitaries for a group of order {group.order}")
    _check_unitaries(u, tol.eig)
    d = u.shape[1]
    scale = tol.eig * d
    id_dev = float(np.max(np.abs(u[group.identity] - np.eye(d))))
    if id_dev > scale:
        raise HomomorphismViolation(
            f"identity law fails: U[identity={group.identity}] differs from I by {id_dev:.3g}",
            worst_pair=(group.identity, group.identity), deviation=id_dev)
    order = group.order
    if order <= EXHAUSTIVE_ORDER:
        pairs = np.array(list(itertools.product(range(order), repeat=2)))
    else:
        pairs = np.random.default_rng(seed).integers(0, order, size=(10 * order * order, 2))
    a, b = pairs.T
    prod = np.matmul(u[a], u[b])
    devs = np.max(np.abs(prod - u[group.mult_table[a, b]]), axis=(1, 2))
    worst = int(np.argmax(devs))
    if devs[worst] > scale:
        pair = (int(a[worst]), int(b[worst]))
        raise HomomorphismViolation(
            f"U[{pair[0]}] U[{pair[1]}] != U[{group.mult_table[pair]}] (deviation {devs[worst]:.3g}); "
            "projective representations are not supported",
            worst_pair=pair, deviation=float(devs[worst]))
    u = u.copy()
    u.setflags(write=False)
    return GroupRep(group, u)


def make_cyclic_rep(d: int, charges: Sequence[int], tol: ToleranceConfig = DEFAULT_TOL) -> GroupRep:
    """Z_d acting as ``U_g = diag(exp(2 pi i charge_j g / d))``.

    The representation dimension is ``len(charges)``; usually ``len(charges) == d``.
    """
    if d < 2:
        raise ValueError("cyclic group order must be >= 2")
    q = np.asarray(charges, dtype=int).reshape(-1)
    if q.size == 0:
        raise ValueError("charges must be non-empty")
    g = np.arange(d)
    phases = np.exp(2j * np.pi * (np.outer(g, q) % d) / d)
    unitaries = np.zeros((d, q.size, q.size), dtype=complex)
    idx = np.arange(q.size)
    unitaries[:, idx, idx] = phases
    return _validate_rep(FiniteGroup.cyclic(d), unitaries, tol)


def make_explicit_rep(mult_table, unitaries, tol: ToleranceConfig = DEFAULT_TOL) -> GroupRep:
    """Validate a user-supplied group table and its unitary images."""
    group = FiniteGroup.from_table(mult_table)
    u = np.asarray(unitaries, dtype=complex)
    if u.ndim != 3 or u.shape[0] != group.order:
        raise DimensionMismatch(
            f"expected {group.order} square unitaries, got array of shape {u.shape}")
    return _validate_rep(group, u, tol)


def product_rep(rep: GroupRep, n: int, cap: int = DEFAULT_CAP) -> GroupRep:
    """Representation of the direct product G x ... x G on the n-fold tensor power.

    Elements are indexed in mixed radix, first copy most significant.
    """
    order = rep.order ** n
    check_cap(order, cap, "product group order")
    check_cap(rep.dim ** n, cap)
    tuples = np.array(list(itertools.product(range(rep.order), repeat=n)), dtype=int).reshape(order, n)
    radix = rep.order ** np.arange(n - 1, -1, -1)
    table = rep.group.mult_table
    prod = table[tuples[:, None, :], tuples[None, :, :]]
    mult = prod @ radix
    unitaries = np.array([_kron_all([rep.unitaries[g] for g in t]) for t in tuples])
    mult.setflags(write=False)
    group = FiniteGroup(mult, int(np.full(n, rep.group.identity) @ radix),
                        rep.group.inverse[tuples] @ radix)
    return GroupRep(group, unitaries)


def _kron_all(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def tuple_unitary(rep: GroupRep, elements: Sequence[int]) -> np.ndarray:
    """U_{g1} (x) ... (x) U_{gn} as a dense matrix."""
    return _kron_all([rep.unitaries[g] for g in elements])


# ---------------------------------------------------------------------------
# Twirling


@dataclass(frozen=True)
class TwirlChannel:
    """Twirl over the product group G^{x n}, acting on dimension ``rep.dim ** n``."""

    rep: GroupRep
    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("number of copies must be >= 1")

    @property
    def dim(self) -> int:
        return self.rep.dim ** self.n

    def __call__(self, tau) -> np.ndarray:
        return twirl(self, tau)


def twirl(channel: TwirlChannel | GroupRep, tau) -> np.ndarray:
    """Apply the group-average twirl (factor-wise on tensor powers).

    Passing a :class:`GroupRep` twirls a single copy, or infers ``n`` from
    the shape of ``tau``.
    """
    if isinstance(channel, GroupRep):
        t = as_matrix(tau)
        channel = TwirlChannel(channel, channel.copies_for(t.shape[0]))
    rep, n = channel.rep, channel.n
    t = as_matrix(tau)
    if t.shape[0] != channel.dim:
        raise DimensionMismatch(f"operator of dimension {t.shape[0]} for a twirl on dimension {channel.dim}")
    if rep.is_diagonal:
        mask = rep.dephasing_mask
        full = mask
        for _ in range(n - 1):
            full = np.kron(full, mask)
        return t * full
    d = rep.dim
    s = rep.superop
    for i in range(n):
        left, right = d ** i, d ** (n - i - 1)
        t = t.reshape(left, d, right, left, d, right)
        t = np.einsum("pqab,lamkbn->lpmkqn", s, t)
    return t.reshape(d ** n, d ** n)


def twirl_bruteforce(rep: GroupRep, tau, n: int = 1) -> np.ndarray:
    """Average over all |G|^n tuples; exponential cost, meant as a cross-check."""
    t = as_matrix(tau)
    out = np.zeros_like(t)
    for elems in itertools.product(range(rep.order), repeat=n):
        out += apply_local(t, [rep.unitaries[g] for g in elems], rep.dim)
    return out / rep.order ** n


def collective_twirl(rep: GroupRep, tau, n: int | None = None) -> np.ndarray:
    """Average of ``U_g^{(x) n} tau U_g^{dag (x) n}`` over the diagonal subgroup only."""
    t = as_matrix(tau)
    if n is None:
        n = rep.copies_for(t.shape[0])
    if rep.is_diagonal:
        phases = rep.diagonals
        full = np.ones((rep.order, 1), dtype=complex)
        for _ in range(n):
            full = (full[:, :, None] * phases[:, None, :]).reshape(rep.order, -1)
        return t * ((full.T @ full.conj()) / rep.order)
    out = np.zeros_like(t)
    for u in rep.unitaries:
        out += apply_local(t, [u] * n, rep.dim)
    return out / rep.order


class SymmetryWitness(NamedTuple):
    symmetric: bool
    twirl_distance: float
    worst_element: tuple
    worst_deviation: float


def is_symmetric(rep: GroupRep, rho, tol: float = DEFAULT_TOL.test,
                 tols: ToleranceConfig = DEFAULT_TOL) -> SymmetryWitness:
    """Decide symmetry through ``||T(rho) - rho||_1 <= tol``.

    The witness reports the single-site group element ``(site, g)`` with the
    largest ``||U rho U^dag - rho||_1``; single-site elements generate the
    product group, so this is zero exactly when the state is symmetric.
    """
    r = as_matrix(rho)
    n = rep.copies_for(r.shape[0])
    dist = trace_distance(twirl(TwirlChannel(rep, n), r), r, tols)
    eye = np.eye(rep.dim)
    worst, worst_dev = (0, rep.group.identity), 0.0
    for site in range(n):
        for g in range(rep.order):
            if g == rep.group.identity:
                continue
            ops = [eye] * n
            ops[site] = rep.unitaries[g]
            dev = trace_norm(apply_local(r, ops, rep.dim) - r, tols)
            if dev > worst_dev:
                worst, worst_dev = (site, g), dev
    return SymmetryWitness(dist <= tol, dist, worst, worst_dev)


@dataclass(frozen=True, eq=False)
class SymmetricBasis:
    """Hilbert-Schmidt orthonormal Hermitian basis of the twirl's fixed-point space."""

    rep: GroupRep
    n: int
    basis: np.ndarray = field(repr=False)

    def __len__(self):
        return self.basis.shape[0]

    def coefficients(self, x) -> np.ndarray:
        """Real coordinates <B_j, X> of the projection of Hermitian ``x``."""
        return np.real(np.einsum("kij,ji->k", self.basis, as_matrix(x)))

    def combine(self, coeffs) -> np.ndarray:
        return np.einsum("k,kij->ij", np.asarray(coeffs, dtype=float), self.basis)


def _single_copy_basis(rep: GroupRep, tol: ToleranceConfig) -> np.ndarray:
    d = rep.dim
    candidates = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1
        candidates.append(e)
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1
            candidates.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j], e[j, i] = 1j, -1j
            candidates.append(e)
    ch = TwirlChannel(rep, 1)
    basis: list[np.ndarray] = []
    threshold = tol.eig * d
    for c in candidates:
        v = twirl(ch, c)
        v = 0.5 * (v + v.conj().T)
        for _ in range(2):
            for b in basis:
                v = v - np.real(np.vdot(b, v)) * b
        nrm = float(np.linalg.norm(v))
        if nrm >= threshold:
            basis.append(v / nrm)
    return np.array(basis)


def symmetric_basis(rep: GroupRep, n: int = 1, tol: ToleranceConfig = DEFAULT_TOL,
                    cap: int = DEFAULT_CAP) -> SymmetricBasis:
    """Orthonormal spanning set of operators fixed by the twirl.

    For ``n > 1`` the fixed space of the factor-wise twirl is the tensor
    product of single-copy fixed spaces, so products of single-copy basis
    elements form the basis.
    """
    single = _single_copy_basis(rep, tol)
    k = single.shape[0]
    check_cap(k ** n * rep.dim ** (2 * n), cap * cap, "symmetric basis size")
    basis = single
    for _ in range(n - 1):
        basis = np.einsum("aij,bkl->abikjl", basis, single).reshape(
            basis.shape[0] * k, basis.shape[1] * rep.dim, basis.shape[2] * rep.dim)
    basis = np.ascontiguousarray(basis)
    basis.setflags(write=False)
    return SymmetricBasis(rep, n, basis)


def is_symmetry_preserving(rep: GroupRep, v, tol: float = DEFAULT_TOL.test,
                           tols: ToleranceConfig = DEFAULT_TOL,
                           basis: SymmetricBasis | None = None) -> SymmetryWitness:
    """Check that ``V`` maps every symmetric operator to a symmetric operator.

    By linearity it suffices to check a spanning set. The witness reports the
    basis index with the largest ``||T(V B V^dag) - V B V^dag||_1``.
    """
    u = as_matrix(v)
    dev = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if dev > tols.eig * u.shape[0]:
        raise NonUnitaryInput(f"V is not unitary (max |V^dag V - I| = {dev:.3g})")
    n = rep.copies_for(u.shape[0])
    if basis is None:
        basis = symmetric_basis(rep, n, tols)
    ch = TwirlChannel(rep, n)
    worst, worst_dev = -1, 0.0
    for k, b in enumerate(basis.basis):
        img = u @ b @ u.conj().T
        dk = trace_norm(twirl(ch, img) - img, tols)
        if dk > worst_dev:
            worst, worst_dev = k, dk
    return SymmetryWitness(worst_dev <= tol, worst_dev, (worst,), worst_dev)
