"""Complex dense linear algebra used by the decoupling and consensus code.

Everything here works over complex numbers, even for real input, since
asymmetric Laplacians have complex spectra in general.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr as _pivoted_qr
from scipy.linalg import solve_triangular

__all__ = [
    "SchurConvergenceError",
    "InconsistentSystemError",
    "SchurForm",
    "Polynomial",
    "schur_decompose",
    "schur_with_leading_eigvec",
    "eigenvalues",
    "triangular_eigvecs",
    "char_poly",
    "resultant",
    "sylvester_matrix",
    "discriminant",
    "frobenius_distance",
    "solve_min_norm",
    "min_pairwise_gap",
]

_EPS = np.finfo(float).eps
CHAR_POLY_MAX_N = 20


class SchurConvergenceError(np.linalg.LinAlgError):
    """Shifted QR iteration hit its iteration cap.

    ``residual`` is the largest remaining subdiagonal modulus.
    """

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class InconsistentSystemError(np.linalg.LinAlgError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _as_square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


@dataclass(frozen=True)
class SchurForm:
    """Unitary ``u`` and upper-triangular ``t`` with ``u @ t @ u^H == source``."""

    u: np.ndarray
    t: np.ndarray
    source_norm: float

    @property
    def eigenvalues(self):
        return np.diag(self.t).copy()

    def reconstruct(self):
        return self.u @ self.t @ self.u.conj().T


def _givens(a, b):
    # G = [[c*, s*], [-s, c]] maps (a, b) to (r, 0)
    r = (abs(a) ** 2 + abs(b) ** 2) ** 0.5
    if r == 0.0:
        return 1.0 + 0j, 0j
    return a / r, b / r


def _wilkinson_shift(a, b, c, d):
    half = (a - d) / 2
    root = cmath.sqrt(half * half + b * c)
    mid = (a + d) / 2
    mu1, mu2 = mid + root, mid - root
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def _hessenberg(h, z):
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        if not np.any(x[1:]):
            continue
        alpha = np.linalg.norm(x)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        z[:, k + 1:] -= 2.0 * np.outer(z[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0


def _shifted_qr(h, z, max_iter):
    # Plain-Python rows: for the small dense matrices handled here this beats
    # per-rotation numpy dispatch by a wide margin.
    n = h.shape[0]
    norm = float(np.linalg.norm(h))
    H = h.tolist()
    Z = z.tolist()
    hi = n - 1
    its = 0
    total = 0
    while hi > 0:
        lo = hi
        while lo > 0:
            scale = abs(H[lo - 1][lo - 1]) + abs(H[lo][lo])
            if scale == 0.0:
                scale = norm
            if abs(H[lo][lo - 1]) <= _EPS * scale:
                H[lo][lo - 1] = 0j
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            its = 0
            continue
        if total >= max_iter:
            h[:] = H
            residual = max(abs(H[k][k - 1]) for k in range(1, n))
            raise SchurConvergenceError(
                f"QR iteration did not converge in {max_iter} sweeps", residual
            )
        its += 1
        total += 1
        if its % 10 == 0:
            # exceptional shift breaks symmetric stalls, e.g. permutation blocks
            mu = H[hi][hi] + 0.75 * abs(H[hi][hi - 1])
        else:
            mu = _wilkinson_shift(H[hi - 1][hi - 1], H[hi - 1][hi], H[hi][hi - 1], H[hi][hi])
        for k in range(lo, hi + 1):
            H[k][k] -= mu
        rots = []
        for k in range(lo, hi):
            c, s = _givens(H[k][k], H[k + 1][k])
            cc, sc = c.conjugate(), s.conjugate()
            r0, r1 = H[k], H[k + 1]
            for j in range(k, n):
                x, y = r0[j], r1[j]
                r0[j] = cc * x + sc * y
                r1[j] = c * y - s * x
            r1[k] = 0j
            rots.append((k, c, s, cc, sc))
        # right-multiply by G^H = [[c, -s*], [s, c*]]
        for k, c, s, cc, sc in rots:
            for row in H[:k + 2]:
                x, y = row[k], row[k + 1]
                row[k] = c * x + s * y
                row[k + 1] = cc * y - sc * x
            for row in Z:
                x, y = row[k], row[k + 1]
                row[k] = c * x + s * y
                row[k + 1] = cc * y - sc * x
        for k in range(lo, hi + 1):
            H[k][k] += mu
    h[:] = H
    z[:] = Z


def schur_decompose(a, max_iter=None):
    """Complex Schur factorization ``a = u t u^H``.

    Householder reduction to upper Hessenberg form followed by shifted QR
    sweeps (Wilkinson shift, exceptional shift every tenth stalled sweep)
    with deflation from the bottom.

    Parameters
    ----------
    a : array_like, shape (n, n)
    max_iter : int, optional
        Total sweep cap; defaults to ``100 * n**2``.

    Returns
    -------
    SchurForm

    Raises
    ------
    SchurConvergenceError
        The sweep cap was reached; carries the remaining subdiagonal residual.
    """
    a = _as_square(a)
    n = a.shape[0]
    h = np.array(a, dtype=complex)
    z = np.eye(n, dtype=complex)
    if max_iter is None:
        max_iter = 100 * n * n
    if n > 1:
        _hessenberg(h, z)
        _shifted_qr(h, z, max_iter)
    return SchurForm(u=z, t=np.triu(h), source_norm=float(np.linalg.norm(a)))


def schur_with_leading_eigvec(a, v, max_iter=None):
    """Schur form whose first Schur vector is the known eigenvector ``v``.

    ``a @ v`` must be (numerically) parallel to ``v``. The remaining
    columns come from a Schur factorization of the deflated block, so the
    eigenvalue belonging to ``v`` sits at ``t[0, 0]``.
    """
    a = _as_square(a)
    n = a.shape[0]
    v = np.asarray(v, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    # Householder-type reflector P (Hermitian, unitary) with P e1 = v
    e1 = np.zeros(n, dtype=complex)
    e1[0] = 1.0
    phase = v[0] / abs(v[0]) if v[0] != 0 else 1.0
    w = e1 - v / phase
    p = np.eye(n, dtype=complex)
    wn = np.linalg.norm(w)
    if wn > 0:
        w /= wn
        p -= 2.0 * np.outer(w, w.conj())
    p[:, 0] *= phase
    b = p.conj().T @ a @ p
    inner = schur_decompose(b[1:, 1:], max_iter=max_iter) if n > 1 else None
    u = p.copy()
    t = np.zeros((n, n), dtype=complex)
    t[0, 0] = b[0, 0]
    if inner is not None:
        u[:, 1:] = p[:, 1:] @ inner.u
        t[0, 1:] = b[0, 1:] @ inner.u
        t[1:, 1:] = inner.t
    return SchurForm(u=u, t=t, source_norm=float(np.linalg.norm(a)))


def eigenvalues(a):
    """Eigenvalues of a square matrix with multiplicity (Schur diagonal order)."""
    return schur_decompose(a).eigenvalues


def triangular_eigvecs(t):
    """Unit-norm eigenvectors of an upper-triangular matrix, one per column.

    Back substitution; near-zero pivots (repeated diagonal entries) are
    replaced by a tiny value, so defective input produces nearly parallel
    columns rather than a crash.
    """
    t = np.asarray(t, dtype=complex)
    n = t.shape[0]
    smin = max(_EPS * np.linalg.norm(t), np.finfo(float).tiny)
    y = np.zeros((n, n), dtype=complex)
    for k in range(n):
        lam = t[k, k]
        y[k, k] = 1.0
        for j in range(k - 1, -1, -1):
            num = t[j, j + 1:k + 1] @ y[j + 1:k + 1, k]
            if num == 0:
                continue
            piv = t[j, j] - lam
            if abs(piv) < smin:
                piv = smin
            y[j, k] = -num / piv
        y[:, k] /= np.linalg.norm(y[:, k])
    return y


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with coefficients stored leading-first."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        if c[0] == 0:
            raise ValueError("leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return self.coeffs.size - 1

    def __call__(self, x):
        return np.polyval(self.coeffs, x)

    def derivative(self):
        n = self.degree
        if n == 0:
            raise ValueError("derivative of a constant")
        return Polynomial(self.coeffs[:-1] * np.arange(n, 0, -1))


def char_poly(a):
    """Monic characteristic polynomial ``det(xI - a)`` (Faddeev-LeVerrier)."""
    a = _as_square(a)
    n = a.shape[0]
    if n > CHAR_POLY_MAX_N:
        raise ValueError(f"char_poly is limited to n <= {CHAR_POLY_MAX_N}, got {n}")
    dtype = complex if np.iscomplexobj(a) else float
    a = a.astype(dtype)
    coeffs = np.zeros(n + 1, dtype=dtype)
    coeffs[0] = 1.0
    m = np.zeros((n, n), dtype=dtype)
    eye = np.eye(n, dtype=dtype)
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(a @ m) / k
    return Polynomial(coeffs)


def sylvester_matrix(f, g):
    m, n = f.degree, g.degree
    dtype = np.result_type(f.coeffs, g.coeffs, float)
    s = np.zeros((m + n, m + n), dtype=dtype)
    for i in range(n):
        s[i, i:i + m + 1] = f.coeffs
    for i in range(m):
        s[n + i, i:i + n + 1] = g.coeffs
    return s


def resultant(f, g):
    """Resultant as the determinant of the Sylvester matrix of ``f`` and ``g``.

    Equals ``a0**n * b0**m * prod(alpha_i - beta_j)`` over the roots.
    """
    if f.degree < 1 or g.degree < 1:
        raise ValueError("resultant needs polynomials of degree >= 1")
    det = np.linalg.det(sylvester_matrix(f, g))
    return det.item()


def discriminant(p):
    """Raw ``resultant(p, p')``; zero iff ``p`` has a repeated root.

    No normalization is applied: for degree ``n`` with leading coefficient
    ``a0`` this is ``(-1)**(n*(n-1)/2) * a0 * disc(p)`` in the classical
    convention, e.g. ``-(b**2 - 4ac)`` for a monic quadratic.
    """
    if p.degree < 2:
        raise ValueError("discriminant needs degree >= 2")
    return resultant(p, p.derivative())


def frobenius_distance(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2)))


def solve_min_norm(coeffs, rhs, rank_tol=1e-10, residual_tol=1e-9):
    """Minimum-norm solution of a consistent (under)determined system.

    Column-pivoted QR of ``coeffs^H`` picks a maximal independent set of
    rows; the min-norm solution lies in their span. Redundant rows (even
    more rows than unknowns) are allowed as long as the right-hand side is
    consistent with them.

    Raises
    ------
    InconsistentSystemError
        The residual exceeds ``residual_tol * max(1, ||rhs||)``.
    """
    c = np.asarray(coeffs)
    b = np.asarray(rhs).ravel()
    if c.ndim != 2 or c.shape[0] != b.size:
        raise ValueError(f"shape mismatch: coeffs {c.shape}, rhs {b.shape}")
    dtype = np.result_type(c, b, float)
    c = c.astype(dtype)
    b = b.astype(dtype)
    cnorm = np.linalg.norm(c)
    if cnorm == 0:
        x = np.zeros(c.shape[1], dtype=dtype)
    else:
        q, r, perm = _pivoted_qr(c.conj().T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        rank = int(np.sum(diag > rank_tol * cnorm))
        rr = r[:rank, :rank]
        y = solve_triangular(rr.conj().T, b[perm[:rank]], lower=True)
        x = q[:, :rank] @ y
    resid = float(np.linalg.norm(c @ x - b))
    if resid > residual_tol * max(1.0, float(np.linalg.norm(b))):
        raise InconsistentSystemError("rank-deficient system with inconsistent rhs", resid)
    return x


def min_pairwise_gap(values):
    v = np.asarray(values).ravel()
    if v.size < 2:
        return np.inf
    d = np.abs(v[:, None] - v[None, :])
    d[np.diag_indices(v.size)] = np.inf
    return float(d.min())
