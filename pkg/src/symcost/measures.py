"""Relative entropy of frameness: closed form, variational oracle, collective series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    DEFAULT_CAP,
    DEFAULT_TOL,
    ToleranceConfig,
    as_matrix,
    check_cap,
    hermitize,
    kron_power,
    trace_distance,
    von_neumann_entropy,
)
from .errors import DimensionMismatch, NotSymmetryPreserving
from .group_rep import (
    GroupRep,
    SymmetricBasis,
    TwirlChannel,
    collective_twirl,
    is_symmetry_preserving,
    symmetric_basis,
    twirl,
)

LN2 = math.log(2)


def ref_closed_form(rep: GroupRep, rho, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """S(T(rho)) - S(rho) in bits; ``rho`` may live on any tensor power of the rep."""
    r = hermitize(rho, tol.herm)
    return von_neumann_entropy(twirl(rep, r), tol) - von_neumann_entropy(r, tol)


@dataclass
class RefResult:
    closed_form: float
    variational: float
    minimizer: np.ndarray = field(repr=False)
    gap: float
    iterations: int
    converged: bool
    minimizer_twirl_distance: float


def _gibbs(h: np.ndarray):
    """Return (sigma, eigenvalues of log sigma, eigenvectors) for sigma = exp(h) / Tr exp(h)."""
    w, v = np.linalg.eigh(h)
    w = w - w.max()
    logz = math.log(float(np.sum(np.exp(w))))
    logs = w - logz
    sigma = (v * np.exp(logs)) @ v.conj().T
    return sigma, logs, v


def _objective_nats(rho: np.ndarray, s_rho_nats: float, logs: np.ndarray, v: np.ndarray) -> float:
    weights = np.real(np.einsum("ij,jk,ki->i", v.conj().T, rho, v))
    return -s_rho_nats - float(np.dot(weights, logs))


def _log_derivative(rho: np.ndarray, logs: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Frechet derivative of ``X -> Tr[rho log X]`` at sigma, as an operator."""
    s = np.exp(logs)
    ds = s[:, None] - s[None, :]
    dl = logs[:, None] - logs[None, :]
    close = np.abs(ds) <= 1e-12 * np.maximum(s[:, None], s[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(close, 1.0 / np.maximum(s[:, None], s[None, :]), dl / np.where(close, 1.0, ds))
    rt = v.conj().T @ rho @ v
    return v @ (rt * gamma) @ v.conj().T


def ref_variational(rep: GroupRep, rho, max_iter: int = 500, tol: float = 1e-4,
                    basis: SymmetricBasis | None = None,
                    tols: ToleranceConfig = DEFAULT_TOL) -> RefResult:
    """Minimize D(rho || sigma) over symmetric states without using the closed form.

    The iterate is ``sigma = exp(H) / Tr exp(H)`` with ``H`` in the span of
    the symmetric basis, which keeps sigma strictly positive and symmetric.
    Each step moves ``H`` along the basis projection of the gradient of
    ``Tr[rho log sigma]`` with respect to sigma (a mirror-descent step in the
    entropic geometry), with a backtracking step size halved from 1.0.
    Iteration stops once the objective improves by less than ``tol / 10``.
    """
    r = hermitize(rho, tols.herm)
    n = rep.copies_for(r.shape[0])
    if basis is None:
        basis = symmetric_basis(rep, n, tols)
    elif basis.basis.shape[1] != r.shape[0]:
        raise DimensionMismatch("symmetric basis does not match the state dimension")
    s_rho = von_neumann_entropy(r, tols) * LN2
    coeffs = np.zeros(len(basis))
    sigma, logs, v = _gibbs(basis.combine(coeffs))
    f = _objective_nats(r, s_rho, logs, v)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        direction = basis.coefficients(_log_derivative(r, logs, v))
        step = 1.0
        while step >= 1e-12:
            trial = coeffs + step * direction
            t_sigma, t_logs, t_v = _gibbs(basis.combine(trial))
            t_f = _objective_nats(r, s_rho, t_logs, t_v)
            if t_f < f:
                break
            step *= 0.5
        else:
            converged = True
            break
        improvement = (f - t_f) / LN2
        coeffs, sigma, logs, v, f = trial, t_sigma, t_logs, t_v, t_f
        if improvement < tol / 10:
            converged = True
            break
    closed = ref_closed_form(rep, r, tols)
    variational = max(f / LN2, 0.0)
    sigma = 0.5 * (sigma + sigma.conj().T)
    return RefResult(
        closed_form=closed,
        variational=variational,
        minimizer=sigma,
        gap=abs(closed - variational),
        iterations=it,
        converged=converged,
        minimizer_twirl_distance=trace_distance(sigma, twirl(rep, r), tols),
    )


class LemmaCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def lemma_entropy_invariance_check(rep: GroupRep, rho, v, tol: ToleranceConfig = DEFAULT_TOL,
                                   basis: SymmetricBasis | None = None) -> LemmaCheck:
    """Compare S(T(V rho V^dag)) with S(T(rho)) for a symmetry-preserving V."""
    r, u = as_matrix(rho), as_matrix(v)
    if r.shape != u.shape:
        raise DimensionMismatch("state and unitary dimensions differ")
    witness = is_symmetry_preserving(rep, u, tol.test, tol, basis=basis)
    if not witness.symmetric:
        raise NotSymmetryPreserving(
            f"V maps basis element {witness.worst_element[0]} off the symmetric set "
            f"(deviation {witness.worst_deviation:.3g})")
    lhs = von_neumann_entropy(twirl(rep, u @ r @ u.conj().T), tol)
    rhs = von_neumann_entropy(twirl(rep, r), tol)
    return LemmaCheck(lhs, rhs, abs(lhs - rhs) <= tol.test)


@dataclass
class CollectiveRefSeries:
    n_values: list
    per_copy_values: list
    product_values: list
    single_copy_ref: float


def collective_ref_series(rep: GroupRep, rho, n_max: int, cap: int = DEFAULT_CAP,
                          tol: ToleranceConfig = DEFAULT_TOL) -> CollectiveRefSeries:
    """Per-copy asymmetry of rho^{(x) n} under collective and product symmetry.

    ``per_copy_values[k]`` is ``(1/n)[S(Tc(rho^n)) - S(rho^n)]`` where ``Tc``
    averages only over ``U_g^{(x) n}``; ``product_values[k]`` uses the
    factor-wise twirl instead and stays at the single-copy value.
    """
    r = hermitize(rho, tol.herm)
    if r.shape[0] != rep.dim:
        raise DimensionMismatch("rho must be a single-copy state")
    check_cap(rep.dim ** n_max, cap)
    ns, coll, prod = [], [], []
    for n in range(1, n_max + 1):
        rn = kron_power(r, n)
        s_in = von_neumann_entropy(rn, tol)
        ns.append(n)
        coll.append((von_neumann_entropy(collective_twirl(rep, rn, n), tol) - s_in) / n)
        prod.append((von_neumann_entropy(twirl(TwirlChannel(rep, n), rn), tol) - s_in) / n)
    return CollectiveRefSeries(ns, coll, prod, ref_closed_form(rep, r, tol))
