"""Diagonalizability checks and near-Laplacian perturbations that decouple a topology.

Any Laplacian ``L`` (rows summing to zero) can be moved by less than ``epsilon``
in squared Frobenius distance to a Laplacian-like ``L + U E U^H`` with distinct
eigenvalues, where ``U`` is a Schur basis of ``L`` whose first column is the
all-ones direction and ``E`` is upper triangular. The perturbed matrix then
has an eigenbasis that splits the networked dynamics into independent
per-eigenvalue blocks ``A - lambda_i F``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    InconsistentSystemError,
    min_pairwise_gap,
    schur_decompose,
    schur_with_leading_eigvec,
    solve_min_norm,
    triangular_eigvecs,
)

__all__ = [
    "DiagonalizabilityReport",
    "PerturbationResult",
    "DecoupledSystem",
    "PerturbationError",
    "NotDecouplableError",
    "default_gap_tol",
    "assess_diagonalizability",
    "construct_perturbation",
    "decouple",
]

DEFAULT_COND_CAP = 1e8
MAX_ATTEMPTS = 50
SHRINK = 0.5


class PerturbationError(RuntimeError):
    """No admissible perturbation found; ``best`` holds the closest attempt's metrics."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best or {}


class NotDecouplableError(np.linalg.LinAlgError):
    pass


def default_gap_tol(mat):
    return 1e-8 * (1.0 + float(np.linalg.norm(mat)))


def _rank_tol(mat):
    return 1e-8 * (1.0 + float(np.linalg.norm(mat)))


def _row_sum_tol(mat):
    return 1e-9 * (1.0 + float(np.linalg.norm(mat)))


def _eigvec_condition(u, t):
    v = u @ triangular_eigvecs(t)
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(v))
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        return math.inf, v
    return cond, v


def _clusters(values, tol):
    """Single-linkage groups of indices whose values lie within ``tol``."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


@dataclass(frozen=True)
class DiagonalizabilityReport:
    distinct_eigenvalues: bool
    min_gap: float
    eigvec_condition: float
    verdict: str
    eigenvalues: np.ndarray = field(repr=False)
    gap_tol: float = 0.0
    cond_cap: float = DEFAULT_COND_CAP


def assess_diagonalizability(l, gap_tol=None, cond_cap=DEFAULT_COND_CAP):
    """Classify a square matrix as ``diagonalizable``, ``defective`` or ``borderline``.

    Eigenvalues closer than ``gap_tol`` are grouped; a group of size ``m`` is
    defective when fewer than ``m`` singular values of ``L - mean * I`` fall
    below ``1e-8 * (1 + ||L||_F)``. A gap test alone is not trusted: a
    backward-stable Schur factorization splits a Jordan block of size ``k``
    by roughly ``eps**(1/k)``, so distinctness also requires the eigenvector
    matrix condition to stay within ``cond_cap``.

    ``borderline`` means repeated eigenvalues with a full eigenbasis whose
    condition lies in ``(sqrt(cond_cap), cond_cap]``.
    """
    l = np.asarray(l)
    if gap_tol is None:
        gap_tol = default_gap_tol(l)
    schur = schur_decompose(l)
    lam = schur.eigenvalues
    gap = min_pairwise_gap(lam)
    cond, _ = _eigvec_condition(schur.u, schur.t)

    rank_deficient = False
    if gap <= gap_tol:
        thr = _rank_tol(l)
        eye = np.eye(l.shape[0])
        for group in _clusters(lam, gap_tol):
            if len(group) < 2:
                continue
            centre = lam[group].mean()
            sv = np.linalg.svd(l - centre * eye, compute_uv=False)
            if np.count_nonzero(sv <= thr) < len(group):
                rank_deficient = True
                break
    if rank_deficient:
        cond = math.inf

    distinct = bool(gap > gap_tol and cond <= cond_cap)
    if rank_deficient or cond > cond_cap:
        verdict = "defective"
    elif distinct or cond <= math.sqrt(cond_cap):
        verdict = "diagonalizable"
    else:
        verdict = "borderline"
    return DiagonalizabilityReport(
        distinct_eigenvalues=distinct,
        min_gap=gap,
        eigvec_condition=cond,
        verdict=verdict,
        eigenvalues=lam,
        gap_tol=float(gap_tol),
        cond_cap=float(cond_cap),
    )


@dataclass(frozen=True)
class PerturbationResult:
    """Upper-triangular ``e_matrix`` and the perturbed ``L + U E U^H``.

    ``spectrum_after`` is the diagonal of ``T + E``, i.e. the exact spectrum of
    ``perturbed`` in the computed Schur basis; ``min_gap_after`` is measured on it.
    """

    e_matrix: np.ndarray
    perturbed: np.ndarray
    epsilon_budget: float
    achieved_sq_distance: float
    min_gap_after: float
    imag_residual: float
    row_sum_residual: float
    entry_bound: float
    gap_tol: float
    spectrum_after: np.ndarray = field(repr=False)
    schur_basis: np.ndarray = field(repr=False)
    realify: bool = False
    attempts: int = 0
    negative_weights: bool = False

    def invariant_violations(self, laplacian_norm=None):
        if laplacian_norm is None:
            laplacian_norm = float(np.linalg.norm(self.perturbed - self.delta))
        out = []
        if not self.achieved_sq_distance < self.epsilon_budget:
            out.append(f"squared distance {self.achieved_sq_distance:.3e} >= {self.epsilon_budget:.3e}")
        emax = float(np.max(np.abs(self.e_matrix))) if self.e_matrix.size else 0.0
        if not emax < self.entry_bound:
            out.append(f"max |e_ij| {emax:.3e} >= bound {self.entry_bound:.3e}")
        if self.row_sum_residual > 1e-9 * (1.0 + laplacian_norm):
            out.append(f"row-sum residual {self.row_sum_residual:.3e}")
        if not self.min_gap_after > self.gap_tol:
            out.append(f"eigenvalue gap {self.min_gap_after:.3e} <= gap_tol {self.gap_tol:.3e}")
        return out

    @property
    def delta(self):
        u = self.schur_basis
        return u @ self.e_matrix @ u.conj().T


def _upper_pairs(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def _constraint_system(u, realify):
    """Real-valued constraint rows acting on ``[Re e_p, Im e_p]`` for upper-triangular ``p``.

    Rows: the row-sum condition ``U E U^H 1 = 0`` (real and imaginary parts),
    optionally ``Im(U E U^H) = 0`` entrywise, then the diagonal of ``E``.
    """
    n = u.shape[0]
    pairs = _upper_pairs(n)
    m = len(pairs)
    w = u.conj().T @ np.ones(n)
    rows_sum = np.zeros((n, m), dtype=complex)
    rows_real = np.zeros((n * n, m), dtype=complex)
    for p, (i, j) in enumerate(pairs):
        rows_sum[:, p] = u[:, i] * w[j]
        rows_real[:, p] = np.outer(u[:, i], u[:, j].conj()).ravel()
    # unknown z = [x, y] with e = x + i y; a complex row r maps to r*x + (i r)*y
    blocks = [np.hstack([rows_sum.real, -rows_sum.imag]),
              np.hstack([rows_sum.imag, rows_sum.real])]
    if realify:
        blocks.append(np.hstack([rows_real.imag, rows_real.real]))
    head = np.vstack(blocks)
    diag = np.zeros((2 * n, 2 * m))
    for k in range(n):
        p = pairs.index((k, k))
        diag[k, p] = 1.0
        diag[n + k, m + p] = 1.0
    return np.vstack([head, diag]), head.shape[0], pairs


def _conjugate_partners(lam, tol):
    """Map each index to a partner index with conjugate eigenvalue (or itself)."""
    n = len(lam)
    partner = list(range(n))
    used = set()
    for k in range(1, n):
        if k in used or abs(lam[k].imag) <= tol:
            continue
        cands = [j for j in range(1, n) if j != k and j not in used
                 and abs(lam[j] - lam[k].conjugate()) <= max(tol, 1e-6 * (1 + abs(lam[k])))]
        if cands:
            j = min(cands, key=lambda j: abs(lam[j] - lam[k].conjugate()))
            partner[k], partner[j] = j, k
            used.update((k, j))
    return partner


def _diagonal_targets(n, delta, attempt, rng, partner, zero_cluster=False):
    d = np.zeros(n)
    if n < 2:
        return d
    if attempt == 0:
        if n > 2 and not zero_cluster:
            # even grid on [-delta, delta]: twice the spacing of a one-sided grid
            d[1:] = delta * np.linspace(-1.0, 1.0, n - 1)
        else:
            # one-sided, so no target lands on 0 next to the pinned zero eigenvalue
            d[1:] = delta * np.arange(1, n) / (n - 1)
    else:
        d[1:] = delta * rng.uniform(-1.0, 1.0, n - 1)
    for k in range(1, n):
        if partner[k] < k:
            d[k] = d[partner[k]]
    return d


def construct_perturbation(l, epsilon, gap_tol=None, realify=False, seed=0,
                           cond_cap=DEFAULT_COND_CAP, max_attempts=MAX_ATTEMPTS):
    """Smallest-effort decoupling perturbation of a Laplacian.

    Parameters
    ----------
    l : array_like, shape (n, n)
        Real matrix with zero row sums.
    epsilon : float
        Budget on the squared Frobenius distance to ``l``.
    gap_tol : float, optional
        Required pairwise separation of the perturbed spectrum; defaults to
        ``1e-8 * (1 + ||l||_F)``.
    realify : bool
        Additionally require ``U E U^H`` to be real. This consumes degrees of
        freedom and may be infeasible, in which case an error is raised.
    seed : int
        Seed for the randomized retry targets.

    Returns
    -------
    PerturbationResult

    Raises
    ------
    PerturbationError
        No attempt satisfied all bounds; ``.best`` holds the closest one's metrics.

    Notes
    -----
    If ``l`` is already numerically diagonalizable, ``E = 0`` is returned.
    Otherwise the zero eigenvalue is pinned (``e_11 = 0``) and the other
    diagonal entries receive evenly spread shifts in ``[-delta, delta]`` with
    ``delta`` just inside the per-entry bound ``sqrt(2 eps / (n (n + 1)))``;
    the minimum-norm ``E`` meeting those diagonal targets and the row-sum
    condition is solved for. Failed attempts retry with seeded random
    targets while ``delta`` halves.
    """
    l = np.asarray(l)
    if l.ndim != 2 or l.shape[0] != l.shape[1]:
        raise ValueError(f"Laplacian must be square, got shape {l.shape}")
    if np.iscomplexobj(l) or not np.all(np.isfinite(l)):
        raise ValueError("Laplacian must be real and finite")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    lnorm = float(np.linalg.norm(l))
    rs = float(np.max(np.abs(l.sum(axis=1))))
    if rs > _row_sum_tol(l):
        raise ValueError(f"input is not a Laplacian: max |row sum| = {rs:.3e}")
    if gap_tol is None:
        gap_tol = default_gap_tol(l)

    n = l.shape[0]
    phi = np.ones(n)
    bound = math.sqrt(2.0 * epsilon / (n * (n + 1)))
    schur = schur_with_leading_eigvec(l, phi)
    u, t = schur.u, schur.t
    lam = np.diag(t)

    def finish(e, attempts):
        delta = u @ e @ u.conj().T
        perturbed = l + delta
        imag = float(np.max(np.abs(perturbed.imag)))
        if realify or imag <= 1e-14 * (1.0 + lnorm):
            perturbed = perturbed.real.copy()
        spectrum = lam + np.diag(e)
        offdiag = perturbed.real[~np.eye(n, dtype=bool)]
        return PerturbationResult(
            e_matrix=e,
            perturbed=perturbed,
            epsilon_budget=float(epsilon),
            achieved_sq_distance=float(np.sum(np.abs(delta) ** 2)),
            min_gap_after=min_pairwise_gap(spectrum),
            imag_residual=imag,
            row_sum_residual=float(np.linalg.norm(perturbed @ phi)),
            entry_bound=bound,
            gap_tol=float(gap_tol),
            spectrum_after=spectrum,
            schur_basis=u,
            realify=bool(realify),
            attempts=attempts,
            negative_weights=bool(np.any(offdiag > _row_sum_tol(l))),
        )

    report = assess_diagonalizability(l, gap_tol=gap_tol, cond_cap=cond_cap)
    if report.verdict == "diagonalizable" and min_pairwise_gap(lam) > gap_tol:
        return finish(np.zeros((n, n), dtype=complex), 0)

    system, n_head, pairs = _constraint_system(u, realify)
    m = len(pairs)
    rng = np.random.default_rng(seed)
    partner = _conjugate_partners(lam, gap_tol) if realify else list(range(n))
    zero_cluster = bool(np.any(np.abs(lam[1:]) <= max(gap_tol, 1e-8 * (1.0 + lnorm))))
    delta = 0.9 * bound
    best = None
    for attempt in range(max_attempts):
        d = _diagonal_targets(n, delta, attempt, rng, partner, zero_cluster)
        rhs = np.concatenate([np.zeros(n_head), d, np.zeros(n)])
        try:
            z = solve_min_norm(system, rhs)
        except InconsistentSystemError as exc:
            best = best or {"attempt": attempt, "reason": str(exc)}
            delta *= SHRINK
            continue
        e = np.zeros((n, n), dtype=complex)
        for p, (i, j) in enumerate(pairs):
            e[i, j] = z[p] + 1j * z[m + p]
        res = finish(e, attempt + 1)
        if realify and res.imag_residual > _row_sum_tol(l):
            problems = [f"imaginary residual {res.imag_residual:.3e}"]
        else:
            problems = res.invariant_violations(lnorm)
        if not problems:
            return res
        if best is None or "achieved_sq_distance" not in best:
            best = {"attempt": attempt, "achieved_sq_distance": res.achieved_sq_distance,
                    "min_gap_after": res.min_gap_after, "max_abs_e": float(np.max(np.abs(e))),
                    "problems": problems}
        delta *= SHRINK
    raise PerturbationError(
        f"no admissible perturbation after {max_attempts} attempts (epsilon={epsilon})", best
    )


@dataclass(frozen=True)
class DecoupledSystem:
    """Eigenbasis ``transform`` with ``transform @ L @ inverse == diag(eigenvalues)``."""

    transform: np.ndarray
    inverse: np.ndarray
    eigenvalues: np.ndarray
    subsystems: tuple
    transform_condition: float

    def residual(self, l):
        lam = np.diag(self.eigenvalues)
        return float(np.linalg.norm(self.transform @ l @ self.inverse - lam))


def decouple(l, a, f, gap_tol=None, cond_cap=DEFAULT_COND_CAP):
    """Eigenbasis of a diagonalizable ``l`` and the per-eigenvalue blocks ``a - lambda_i f``.

    For zero-row-sum input the zero eigenvalue comes first; otherwise the
    smallest-modulus eigenvalue does.

    Raises
    ------
    NotDecouplableError
        ``l`` is defective, or its eigenvector matrix is worse conditioned
        than ``cond_cap``. Run :func:`construct_perturbation` first.
    """
    l = np.asarray(l)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    f = np.atleast_2d(np.asarray(f, dtype=float))
    if a.shape != f.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"A and F must be square and equal-sized, got {a.shape}, {f.shape}")
    report = assess_diagonalizability(l, gap_tol=gap_tol, cond_cap=cond_cap)
    if report.verdict == "defective":
        raise NotDecouplableError(
            f"matrix is defective (min gap {report.min_gap:.3e}, "
            f"eigenvector condition {report.eigvec_condition:.3e})"
        )
    n = l.shape[0]
    phi = np.ones(n)
    if np.linalg.norm(l @ phi) <= _row_sum_tol(l):
        schur = schur_with_leading_eigvec(l, phi)
        order = np.arange(n)
    else:
        schur = schur_decompose(l)
        order = np.argsort(np.abs(schur.eigenvalues), kind="stable")
    cond, v = _eigvec_condition(schur.u, schur.t)
    if cond > cond_cap:
        raise NotDecouplableError(f"eigenvector matrix condition {cond:.3e} exceeds {cond_cap:.3e}")
    v = v[:, order]
    lam = schur.eigenvalues[order]
    transform = np.linalg.inv(v)
    dec = DecoupledSystem(
        transform=transform,
        inverse=v,
        eigenvalues=lam,
        subsystems=tuple(a - x * f for x in lam),
        transform_condition=cond,
    )
    resid = dec.residual(l)
    if resid > 1e-7 * max(1.0, float(np.linalg.norm(l))):
        raise NotDecouplableError(f"diagonalization residual {resid:.3e} too large")
    return dec
