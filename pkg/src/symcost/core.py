"""Dense complex linear algebra, distances and entropies.

Everything here works on plain ``numpy`` arrays of shape ``(d, d)``; the
:class:`DensityOperator` wrapper is only a validated carrier used at API
boundaries. All entropies are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionCapExceeded,
    DimensionMismatch,
    NegativeInput,
    NoConvergence,
    NonHermitianInput,
    NormalizationError,
    NotPositiveSemidefinite,
    PreconditionViolated,
)

DEFAULT_CAP = 4096


@dataclass(frozen=True)
class ToleranceConfig:
    herm: float = 1e-10
    psd: float = 1e-10
    tr: float = 1e-9
    eig: float = 1e-10
    test: float = 1e-7

    def __post_init__(self):
        for name in ("herm", "psd", "tr", "eig", "test"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be strictly positive")


DEFAULT_TOL = ToleranceConfig()


class _PlusInfinity:
    """Divergent relative entropy marker.

    Deliberately supports no arithmetic so it cannot silently propagate
    through sums the way ``float('inf')`` would.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "PLUS_INFINITY"

    def __str__(self):
        return "+inf"

    def __reduce__(self):
        return (_PlusInfinity, ())


PLUS_INFINITY = _PlusInfinity()


def is_infinite(value) -> bool:
    return value is PLUS_INFINITY


def check_cap(dim: int, cap: int | None = DEFAULT_CAP, what: str = "dimension"):
    if cap is not None and dim > cap:
        raise DimensionCapExceeded(f"{what} {dim} exceeds cap {cap}")


def as_matrix(x) -> np.ndarray:
    """Return ``x`` as a square complex array (unwrapping DensityOperator)."""
    if isinstance(x, DensityOperator):
        return x.matrix
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _same_dim(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL.herm) -> bool:
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return float(np.max(np.abs(m - m.conj().T), initial=0.0)) <= tol * scale


def hermitize(m, tol: float = DEFAULT_TOL.herm) -> np.ndarray:
    m = as_matrix(m)
    if not is_hermitian(m, tol):
        dev = float(np.max(np.abs(m - m.conj().T)))
        raise NonHermitianInput(f"matrix is not Hermitian (max |M - M^dag| = {dev:.3g})")
    return 0.5 * (m + m.conj().T)


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


# ---------------------------------------------------------------------------
# Eigendecomposition


def jacobi_eigh(m, tol: float = 1e-14, max_rotations: int | None = None):
    """Cyclic complex Jacobi diagonalization of a Hermitian matrix.

    Each rotation first removes the phase of the pivot ``a[p, q]`` and then
    applies a real Givens rotation in the ``(p, q)`` plane.

    Returns ascending eigenvalues and the unitary whose columns are the
    eigenvectors. Raises :class:`NoConvergence` once more than
    ``max_rotations`` (default ``100 * d**2``) rotations have been applied.
    """
    a = np.array(hermitize(m), dtype=complex)
    d = a.shape[0]
    v = np.eye(d, dtype=complex)
    if max_rotations is None:
        max_rotations = 100 * d * d
    scale = max(float(np.linalg.norm(a)), np.finfo(float).tiny)
    rotations = 0
    offdiag = ~np.eye(d, dtype=bool)
    while d > 1:
        off = float(np.linalg.norm(a[offdiag]))
        if off <= tol * scale:
            break
        before = rotations
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= tol * scale * 1e-3:
                    continue
                if rotations >= max_rotations:
                    raise NoConvergence(f"Jacobi exceeded {max_rotations} rotations (off-norm {off:.3g})")
                phase = apq / mag
                alpha, beta = a[p, p].real, a[q, q].real
                theta = 0.5 * math.atan2(2.0 * mag, alpha - beta)
                c, s = math.cos(theta), math.sin(theta)
                # columns of j are the eigenvectors of the 2x2 Hermitian block
                j = np.array([[c, -s], [s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j
                a[idx, :] = j.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ j
                rotations += 1
        if rotations == before:
            break
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hermitian_eig(m, method: str = "lapack", tol: ToleranceConfig = DEFAULT_TOL):
    """Eigen-decompose a Hermitian matrix.

    Parameters
    ----------
    m : array_like
        Hermitian ``(d, d)`` matrix; checked to within ``tol.herm``.
    method : {"lapack", "jacobi"}
        ``"lapack"`` delegates to :func:`numpy.linalg.eigh`; ``"jacobi"``
        uses :func:`jacobi_eigh`.

    Returns
    -------
    (eigenvalues, eigenvectors)
        Ascending real eigenvalues and a unitary with eigenvectors as columns.
    """
    h = hermitize(m, tol.herm)
    if method == "jacobi":
        return jacobi_eigh(h)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return w, v


def hermitian_eigvals(m, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    h = hermitize(m, tol.herm)
    if not np.any(h.imag):
        return np.linalg.eigvalsh(h.real)
    return np.linalg.eigvalsh(h)


# ---------------------------------------------------------------------------
# States


class DensityOperator:
    """Validated density matrix.

    Hermiticity is checked to ``tol.herm``; eigenvalues in ``[-tol.psd, 0)``
    are clamped to zero and a trace within ``tol.tr`` of one is renormalized.
    Anything worse raises.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix, tol: ToleranceConfig = DEFAULT_TOL):
        if isinstance(matrix, DensityOperator):
            matrix = matrix.matrix
        h = hermitize(matrix, tol.herm)
        w, v = np.linalg.eigh(h)
        if w.size and w[0] < -tol.psd:
            raise NotPositiveSemidefinite(f"eigenvalue {w[0]:.3g} below -{tol.psd:g}")
        if np.any(w < 0):
            w = np.clip(w, 0.0, None)
            h = (v * w) @ v.conj().T
        tr = float(np.sum(w))
        if abs(tr - 1.0) > tol.tr:
            raise NormalizationError(f"trace {tr:.12g} differs from 1 by more than {tol.tr:g}")
        h = h / tr
        h.setflags(write=False)
        self.matrix = h

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, amplitudes, tol: ToleranceConfig = DEFAULT_TOL) -> "DensityOperator":
        return cls(pure_state(amplitudes, tol), tol)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"DensityOperator(dim={self.dim})"


def pure_state(amplitudes, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Projector onto a normalized amplitude vector."""
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > tol.tr:
        raise NormalizationError(f"amplitudes have squared norm {norm2:.12g}, not 1")
    psi = psi / math.sqrt(norm2)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class ProbabilityVector:
    probs: tuple

    def __init__(self, probs: Sequence[float], tol: float = DEFAULT_TOL.tr):
        p = np.asarray(probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise ValueError("empty probability vector")
        if np.any(p < -tol) or np.any(p > 1 + tol):
            raise ValueError("probabilities must lie in [0, 1]")
        s = float(p.sum())
        if abs(s - 1.0) > tol:
            raise NormalizationError(f"probabilities sum to {s:.12g}")
        p = np.clip(p, 0.0, 1.0) / s
        object.__setattr__(self, "probs", tuple(float(x) for x in p))

    def as_array(self) -> np.ndarray:
        return np.array(self.probs)

    def __len__(self):
        return len(self.probs)


# ---------------------------------------------------------------------------
# Entropies and distances


def shannon_entropy(probs) -> float:
    p = np.asarray(probs, dtype=float).reshape(-1)
    p = p[p > 0]
    return max(float(-np.sum(p * np.log2(p))), 0.0)


def spectrum(rho, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Eigenvalues of a density matrix with roundoff negatives clamped."""
    w = hermitian_eigvals(as_matrix(rho), tol)
    if w.size and w[0] < -tol.psd:
        raise NotPositiveSemidefinite(f"eigenvalue {w[0]:.3g} below -{tol.psd:g}")
    return np.clip(w, 0.0, None)


def von_neumann_entropy(rho, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """S(rho) = -Tr[rho log2 rho], with 0 log 0 = 0."""
    return shannon_entropy(spectrum(rho, tol))


def relative_entropy(rho, sigma, tol: ToleranceConfig = DEFAULT_TOL):
    """D(rho||sigma) in bits, or :data:`PLUS_INFINITY` on a support violation.

    ``Tr[rho log sigma]`` is evaluated in sigma's eigenbasis; an eigenvalue of
    sigma below ``tol.psd`` carrying rho-weight above ``tol.test`` means
    rho's support is not contained in sigma's.
    """
    r, s = as_matrix(rho), as_matrix(sigma)
    _same_dim(r, s)
    ws, vs = hermitian_eig(s, tol=tol)
    weights = np.real(np.einsum("ij,jk,ki->i", vs.conj().T, hermitize(r, tol.herm), vs))
    null = ws < tol.psd
    if np.any(weights[null] > tol.test):
        return PLUS_INFINITY
    cross = float(np.sum(weights[~null] * np.log2(ws[~null])))
    return max(-von_neumann_entropy(r, tol) - cross, 0.0)


def trace_norm(a, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Trace norm of a Hermitian operator (sum of absolute eigenvalues)."""
    return float(np.sum(np.abs(hermitian_eigvals(a, tol))))


def trace_distance(rho, sigma, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """||rho - sigma||_1 without the conventional factor 1/2."""
    r, s = as_matrix(rho), as_matrix(sigma)
    _same_dim(r, s)
    return trace_norm(r - s, tol)


def fannes_eta(x: float) -> float:
    """Envelope function of the continuity bound.

    ``x - x ln x`` up to ``1/e`` and ``x + 1/e`` beyond, so both branches
    meet at ``2/e``.
    """
    if x < 0:
        raise NegativeInput(f"eta is defined for x >= 0, got {x}")
    if x == 0:
        return 0.0
    if x <= 1 / math.e:
        return x - x * math.log(x)
    return x + 1 / math.e


def fannes_bound(eps: float, dim: int) -> float:
    """Upper bound eta(eps) * log2(dim) on |S(rho) - S(sigma)|."""
    return fannes_eta(eps) * math.log2(dim)


def sqrtm_psd(a, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    w, v = hermitian_eig(a, tol=tol)
    if w.size and w[0] < -tol.psd:
        raise NotPositiveSemidefinite(f"eigenvalue {w[0]:.3g} below -{tol.psd:g}")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def op_leq(a, b, tol: float = DEFAULT_TOL.eig) -> bool:
    """True iff ``a <= b`` in the Loewner order (min eigenvalue of b - a >= -tol)."""
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return bool(hermitian_eigvals(b - a)[0] >= -tol)


class BoundCheck(NamedTuple):
    lhs: float
    bound: float
    holds: bool


def gentle_measurement_check(rho, x, eps: float, tol: ToleranceConfig = DEFAULT_TOL) -> BoundCheck:
    """Evaluate ||rho - sqrt(X) rho sqrt(X)||_1 against 2 sqrt(2 eps)."""
    r, x = as_matrix(rho), hermitize(x, tol.herm)
    _same_dim(r, x)
    if eps < 0:
        raise NegativeInput("eps must be >= 0")
    if not (op_leq(np.zeros_like(x), x, tol.eig) and op_leq(x, np.eye(x.shape[0]), tol.eig)):
        raise PreconditionViolated("X must satisfy 0 <= X <= I")
    weight = float(np.real(np.trace(r @ x)))
    if weight < 1 - eps - tol.test:
        raise PreconditionViolated(f"Tr[rho X] = {weight:.6g} < 1 - eps = {1 - eps:.6g}")
    sx = sqrtm_psd(x, tol)
    lhs = trace_distance(r, sx @ r @ sx, tol)
    bound = 2 * math.sqrt(2 * eps)
    return BoundCheck(lhs, bound, lhs <= bound + tol.test)


def corollary_distance_check(rho, sigma, proj, eps1: float, eps2: float,
                             tol: ToleranceConfig = DEFAULT_TOL) -> BoundCheck:
    """Evaluate ||rho - sigma||_1 against 6 sqrt(2 (eps1 + eps2)).

    Preconditions: ``Tr[P rho P] >= 1 - eps1`` and
    ``||P rho P - P sigma P||_1 <= eps2`` for the projector ``P``.
    """
    r, s, p = as_matrix(rho), as_matrix(sigma), hermitize(proj, tol.herm)
    _same_dim(r, s)
    _same_dim(r, p)
    if np.max(np.abs(p @ p - p)) > tol.eig * max(1, p.shape[0]):
        raise PreconditionViolated("proj is not a projector")
    prp, psp = p @ r @ p, p @ s @ p
    if float(np.real(np.trace(prp))) < 1 - eps1 - tol.test:
        raise PreconditionViolated("Tr[P rho P] < 1 - eps1")
    if trace_distance(prp, psp, tol) > eps2 + tol.test:
        raise PreconditionViolated("||P rho P - P sigma P||_1 > eps2")
    lhs = trace_distance(r, s, tol)
    bound = 6 * math.sqrt(2 * (eps1 + eps2))
    return BoundCheck(lhs, bound, lhs <= bound + tol.test)


# ---------------------------------------------------------------------------
# Tensor products


def kron(a, b) -> np.ndarray:
    """Tensor product; row index of (i1, i2) is i1 * d2 + i2."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_power(a, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, a)
    return out


def apply_local(tau: np.ndarray, ops: Sequence[np.ndarray], d: int) -> np.ndarray:
    """Conjugate ``tau`` by ``ops[0] (x) ... (x) ops[n-1]`` without forming the product."""
    n = len(ops)
    t = tau.reshape((d,) * (2 * n))
    for i, u in enumerate(ops):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [i])), 0, i)
        t = np.moveaxis(np.tensordot(u.conj(), t, axes=([1], [n + i])), 0, n + i)
    return t.reshape(d ** n, d ** n)


# ---------------------------------------------------------------------------
# Random instances


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank (full rank by default)."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (g + g.conj().T)
