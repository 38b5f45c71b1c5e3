"""Random symmetry-preserving unitary ensembles and the symmetrization task.

Ensemble members are tuples of group elements ``(g_1, ..., g_n)`` standing
for ``U_{g_1} (x) ... (x) U_{g_n}``; they are never materialized as dense
matrices unless a caller asks for one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    DEFAULT_CAP,
    DEFAULT_TOL,
    ToleranceConfig,
    apply_local,
    as_matrix,
    check_cap,
    fannes_eta,
    hermitize,
    kron_power,
    op_leq,
    trace_norm,
    von_neumann_entropy,
)
from .errors import DimensionMismatch, NotSymmetryPreserving
from .group_rep import (
    GroupRep,
    TwirlChannel,
    is_symmetry_preserving,
    symmetric_basis,
    tuple_unitary,
    twirl,
)
from .typicality import typical_projector


def ensemble_size(n: int, rate: float) -> int:
    """K = ceil(2^{nR}), snapping nR to an integer when it is one up to roundoff."""
    if rate < 0:
        raise ValueError("rate must be >= 0")
    x = n * rate
    if abs(x - round(x)) < 1e-9:
        x = round(x)
    return max(1, math.ceil(2.0 ** x))


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic child seed for an independent stream identified by ``keys``."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class UnitaryEnsemble:
    rep: GroupRep
    n: int
    members: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.members.shape[0]

    @property
    def dim(self) -> int:
        return self.rep.dim ** self.n

    def unitary(self, k: int) -> np.ndarray:
        return tuple_unitary(self.rep, self.members[k])

    def distinct(self):
        """Distinct member tuples with their multiplicities."""
        return np.unique(self.members, axis=0, return_counts=True)


def sample_ensemble(rep: GroupRep, n: int, rate: float, rng_seed=None, cap: int = DEFAULT_CAP) -> UnitaryEnsemble:
    """Draw ceil(2^{nR}) i.i.d. uniform tuples from G^n (repeats allowed)."""
    check_cap(rep.dim ** n, cap)
    return _sample_k(rep, n, ensemble_size(n, rate), rng_seed)


def exhaustive_ensemble(rep: GroupRep, n: int, cap: int = DEFAULT_CAP) -> UnitaryEnsemble:
    """Every tuple of G^n exactly once; its channel is the factor-wise twirl."""
    check_cap(rep.dim ** n, cap)
    grids = np.indices((rep.order,) * n).reshape(n, -1).T
    grids = np.ascontiguousarray(grids)
    grids.setflags(write=False)
    return UnitaryEnsemble(rep, n, grids)


def _diagonal_phases(rep: GroupRep, members: np.ndarray) -> np.ndarray:
    diag = rep.diagonals
    phases = np.ones((members.shape[0], 1), dtype=complex)
    for i in range(members.shape[1]):
        phases = (phases[:, :, None] * diag[members[:, i]][:, None, :]).reshape(members.shape[0], -1)
    return phases


def apply_ensemble(ensemble: UnitaryEnsemble, tau) -> np.ndarray:
    """Uniform mixture (1/K) sum_k V_k tau V_k^dag."""
    t = as_matrix(tau)
    if t.shape[0] != ensemble.dim:
        raise DimensionMismatch(f"operator of dimension {t.shape[0]} for an ensemble on dimension {ensemble.dim}")
    rep = ensemble.rep
    if rep.is_diagonal:
        p = _diagonal_phases(rep, ensemble.members)
        return t * ((p.T @ p.conj()) / ensemble.K)
    tuples, counts = ensemble.distinct()
    out = np.zeros_like(t)
    for elems, c in zip(tuples, counts):
        out += c * apply_local(t, [rep.unitaries[g] for g in elems], rep.dim)
    return out / ensemble.K


def apply_unitaries(unitaries: Sequence[np.ndarray], tau) -> np.ndarray:
    t = as_matrix(tau)
    out = np.zeros_like(t)
    for u in unitaries:
        out += u @ t @ u.conj().T
    return out / len(unitaries)


def residual_asymmetry(rep: GroupRep, tau, n: int | None = None, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """||tau - T(tau)||_1 with T the factor-wise twirl on n copies."""
    t = as_matrix(tau)
    if n is None:
        n = rep.copies_for(t.shape[0])
    ch = TwirlChannel(rep, n)
    if t.shape[0] != ch.dim:
        raise DimensionMismatch(f"operator of dimension {t.shape[0]}, expected {ch.dim}")
    return trace_norm(t - twirl(ch, t), tol)


@dataclass
class ProtocolReport:
    n: int
    R: float
    K: int
    trials: int
    residuals: list
    trial_seeds: list
    seed: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.residuals)) if self.residuals else math.nan

    @property
    def median(self) -> float:
        return float(np.median(self.residuals)) if self.residuals else math.nan

    @property
    def max(self) -> float:
        return float(np.max(self.residuals)) if self.residuals else math.nan


def _map_ordered(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def rate_sweep(rep: GroupRep, rho, n: int, rate_grid: Sequence[float], trials: int, seed: int = 0,
               cap: int = DEFAULT_CAP, jobs: int = 1, tol: ToleranceConfig = DEFAULT_TOL) -> list[ProtocolReport]:
    """Residual asymmetry of random ensembles applied to rho^{(x) n}, per rate.

    Trial ``t`` at the ``i``-th rate (after sorting) uses the seed
    ``derive_seed(seed, i, t)``, so results do not depend on ``jobs``.
    """
    check_cap(rep.dim ** n, cap)
    r = hermitize(rho, tol.herm)
    if r.shape[0] != rep.dim:
        raise DimensionMismatch("rho must be a single-copy state")
    rn = kron_power(r, n)
    ch = TwirlChannel(rep, n)
    grid = sorted(float(x) for x in rate_grid)

    def run(task):
        i, t = task
        s = derive_seed(seed, i, t)
        out = apply_ensemble(sample_ensemble(rep, n, grid[i], s, cap), rn)
        return s, trace_norm(out - twirl(ch, out), tol)

    tasks = [(i, t) for i in range(len(grid)) for t in range(trials)]
    results = _map_ordered(run, tasks, jobs)
    reports = []
    for i, rate in enumerate(grid):
        chunk = results[i * trials:(i + 1) * trials]
        reports.append(ProtocolReport(
            n=n, R=rate, K=ensemble_size(n, rate), trials=trials,
            residuals=[x[1] for x in chunk], trial_seeds=[x[0] for x in chunk], seed=seed))
    return reports


@dataclass
class ConverseAudit:
    n: int
    K: int
    S_out: float
    S_twirl_out: float
    S_in: float
    eps_achieved: float
    rate_lower_bound: float
    rate: float
    concavity_rhs: float
    n_S_twirl: float

    @property
    def concavity_holds(self) -> bool:
        return self.S_twirl_out >= self.concavity_rhs - DEFAULT_TOL.test

    @property
    def term_identity_holds(self) -> bool:
        return abs(self.concavity_rhs - self.n_S_twirl) <= DEFAULT_TOL.test

    @property
    def entropy_gain_holds(self) -> bool:
        """log2 K >= S(V(rho^n)) - n S(rho): the randomness must pay for the entropy gained."""
        return math.log2(self.K) >= self.S_out - self.S_in - DEFAULT_TOL.test

    @property
    def converse_holds(self) -> bool:
        return self.rate >= self.rate_lower_bound - DEFAULT_TOL.test


def converse_audit(rep: GroupRep, rho, ensemble, cap: int = DEFAULT_CAP, check_sp: bool = True,
                   tol: ToleranceConfig = DEFAULT_TOL) -> ConverseAudit:
    """Evaluate the entropy quantities of the converse chain for a concrete ensemble.

    ``ensemble`` is a :class:`UnitaryEnsemble` or a sequence of dense
    unitaries on the n-copy space; the latter are checked to be symmetry
    preserving unless ``check_sp`` is false.
    """
    r = hermitize(rho, tol.herm)
    if r.shape[0] != rep.dim:
        raise DimensionMismatch("rho must be a single-copy state")
    if isinstance(ensemble, UnitaryEnsemble):
        n, k = ensemble.n, ensemble.K
        check_cap(rep.dim ** n, cap)
        rn = kron_power(r, n)
        out = apply_ensemble(ensemble, rn)
        tuples, counts = ensemble.distinct()
        terms = [(c, apply_local(rn, [rep.unitaries[g] for g in t], rep.dim)) for t, c in zip(tuples, counts)]
    else:
        mats = [as_matrix(u) for u in ensemble]
        k = len(mats)
        n = rep.copies_for(mats[0].shape[0])
        check_cap(rep.dim ** n, cap)
        if check_sp:
            basis = symmetric_basis(rep, n, tol)
            for idx, u in enumerate(mats):
                if not is_symmetry_preserving(rep, u, tol.test, tol, basis=basis).symmetric:
                    raise NotSymmetryPreserving(f"ensemble member {idx} is not symmetry preserving")
        rn = kron_power(r, n)
        out = apply_unitaries(mats, rn)
        terms = [(1, u @ rn @ u.conj().T) for u in mats]
    ch = TwirlChannel(rep, n)
    twirled = twirl(ch, out)
    s_out = von_neumann_entropy(out, tol)
    s_twirl_out = von_neumann_entropy(twirled, tol)
    s_in = n * von_neumann_entropy(r, tol)
    eps = trace_norm(out - twirled, tol)
    term_mean = sum(c * von_neumann_entropy(twirl(ch, x), tol) for c, x in terms) / k
    d = rep.dim
    bound = (s_twirl_out - s_in) / n - fannes_eta(2 * eps) * math.log2(d)
    return ConverseAudit(
        n=n, K=k, S_out=s_out, S_twirl_out=s_twirl_out, S_in=s_in, eps_achieved=eps,
        rate_lower_bound=bound, rate=math.log2(k) / n, concavity_rhs=float(term_mean),
        n_S_twirl=n * von_neumann_entropy(twirl(rep, r), tol))


@dataclass
class ChernoffTrialReport:
    n: int
    delta: float
    eps: float
    K: int
    num_batches: int
    failures: int
    bound: float
    lambda_min: float
    lambda_lower_bound: float
    trace_X: float
    trace_Y: float
    typical_mass: float
    twirled_typical_mass: float
    typical_rank: int
    twirled_typical_rank: int
    retained_rank: int
    ref: float
    seed: int

    @property
    def empirical_failure_rate(self) -> float:
        return self.failures / self.num_batches if self.num_batches else 0.0

    @property
    def binomial_sigma(self) -> float:
        b = min(self.bound, 1.0)
        return math.sqrt(b * (1 - b) / self.num_batches) if self.num_batches else 0.0

    @property
    def within_envelope(self) -> bool:
        """Empirical failure rate at most the bound plus three binomial standard deviations."""
        return self.empirical_failure_rate <= min(self.bound, 1.0) + 3 * self.binomial_sigma + 1e-12

    @property
    def lambda_bound_holds(self) -> bool:
        return self.lambda_min >= self.lambda_lower_bound * (1 - 1e-9)

    @property
    def trace_bounds_hold(self) -> bool:
        return self.trace_X >= 1 - 2 * self.eps and self.trace_Y >= 1 - 3 * self.eps

    @property
    def typicality_premise_holds(self) -> bool:
        """Both typical masses reach 1 - eps, the regime where the trace bounds are guaranteed."""
        return self.typical_mass >= 1 - self.eps and self.twirled_typical_mass >= 1 - self.eps

    @property
    def trace_X_lower_bound(self) -> float:
        """Lower bound on Tr[X] from the measured typical masses instead of eps."""
        return self.twirled_typical_mass - (1 - self.typical_mass)


def chernoff_ensemble_size(ref: float, n: int, delta: float) -> int:
    return math.ceil(2.0 ** (n * (ref + 3 * delta)))


def chernoff_bound_trial(rep: GroupRep, rho, n: int, delta: float, K: int, num_batches: int,
                         eps: float, seed: int = 0, cap: int = DEFAULT_CAP, jobs: int = 1,
                         tol: ToleranceConfig = DEFAULT_TOL) -> ChernoffTrialReport:
    """Monte Carlo check of the operator Chernoff step of the achievability argument.

    Builds the typical projectors of rho and T(rho), the subnormalized
    operators ``X = P^ T(P rho^n P) P^`` and ``Y = P~ X P~`` (``P~`` keeps
    eigenvalues of X at least ``eps / rank(P^)``), then for each batch draws
    ``K`` tuples and tests whether the average of
    ``Z(g) = P~ U_g P rho^n P U_g^dag P~`` lies in ``[(1-eps) Y, (1+eps) Y]``.
    Each ``Z`` is sandwiched by ``P~``, so the comparison is made on the range
    of ``P~``, which is the support of ``Y``.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    r = hermitize(rho, tol.herm)
    d = rep.dim
    check_cap(d ** n, cap)
    t1 = twirl(rep, r)
    s_rho = von_neumann_entropy(r, tol)
    ref = von_neumann_entropy(t1, tol) - s_rho
    proj = typical_projector(r, n, delta, cap, tol=tol)
    hat = typical_projector(t1, n, delta, cap, tol=tol)
    p, ph = proj.matrix, hat.matrix
    rn = kron_power(r, n)
    a = p @ rn @ p
    ch = TwirlChannel(rep, n)
    x = ph @ twirl(ch, a) @ ph
    x = 0.5 * (x + x.conj().T)
    d_hat = hat.rank
    w, v = np.linalg.eigh(x)
    keep = w >= (eps / d_hat if d_hat else np.inf)
    basis = v[:, keep]
    y_vals = w[keep]
    y_diag = np.diag(y_vals).astype(complex)
    lam = 2.0 ** (n * (s_rho - delta)) * float(y_vals.min()) if y_vals.size else math.nan

    def batch(b):
        s = derive_seed(seed, b)
        avg = apply_ensemble(_sample_k(rep, n, K, s), a)
        avg_s = basis.conj().T @ avg @ basis
        avg_s = 0.5 * (avg_s + avg_s.conj().T)
        inside = op_leq((1 - eps) * y_diag, avg_s, tol.eig) and op_leq(avg_s, (1 + eps) * y_diag, tol.eig)
        return not inside

    failures = sum(_map_ordered(batch, range(num_batches), jobs)) if y_vals.size else 0
    bound = 2 * d ** n * math.exp(-K * eps ** 2 * lam / 2) if y_vals.size else math.nan
    return ChernoffTrialReport(
        n=n, delta=delta, eps=eps, K=K, num_batches=num_batches, failures=int(failures),
        bound=bound, lambda_min=lam, lambda_lower_bound=eps * 2.0 ** (-n * (ref + 2 * delta)),
        trace_X=float(np.real(np.trace(x))), trace_Y=float(np.sum(y_vals)),
        typical_mass=float(np.real(np.trace(a))),
        twirled_typical_mass=float(np.real(np.trace(ph @ kron_power(t1, n)))),
        typical_rank=proj.rank, twirled_typical_rank=d_hat, retained_rank=int(keep.sum()),
        ref=ref, seed=seed)


def _sample_k(rep: GroupRep, n: int, k: int, seed) -> UnitaryEnsemble:
    members = make_rng(seed).integers(0, rep.order, size=(k, n))
    members.setflags(write=False)
    return UnitaryEnsemble(rep, n, members)
