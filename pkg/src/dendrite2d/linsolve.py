"""Iterative Krylov solvers with diagonal preconditioning.

Conjugate gradients for the SPD potential/concentration systems and
BiCGSTAB for the nonsymmetric phase system.  Convergence is declared on the
true residual ||b - A x|| <= tol * max(||b||, floor); a NaN anywhere is a
hard error, BiCGSTAB restarts once on inner-product breakdown.

The per-iteration kernels are compiled with numba when it is available
(single-threaded, no fastmath, so iterates are bitwise reproducible); a
pure-numpy fallback implements the identical recurrences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

RESIDUAL_FLOOR = 1e-300
_BREAKDOWN = 1e-300

_STATUS_OK = 0
_STATUS_BREAKDOWN = 1
_STATUS_NAN = 2

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


class LinearSolveError(RuntimeError):
    pass


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool


def jacobi_precondition(A) -> np.ndarray:
    """Inverse diagonal of A, used as a symmetric scaling by the solvers."""
    diag = np.asarray(A.diagonal(), dtype=float)
    if np.any(diag == 0.0):
        raise LinearSolveError("zero diagonal entry; Jacobi preconditioning undefined")
    return 1.0 / diag


def _as_csr_parts(A) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    A = A.tocsr() if not sp.issparse(A) or A.format != "csr" else A
    return A.indptr, A.indices, np.asarray(A.data, dtype=float), A.shape[0]


# ---------------------------------------------------------------------------
# compiled kernels (mutate x in place, return (iterations, status))


def _cg_body(indptr, indices, data, b, x, minv, target, max_iter):
    n = b.shape[0]
    r = np.empty(n)
    for i in range(n):
        acc = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            acc += data[jj] * x[indices[jj]]
        r[i] = b[i] - acc
    z = minv * r
    p = z.copy()
    rz = 0.0
    rr = 0.0
    for i in range(n):
        rz += r[i] * z[i]
        rr += r[i] * r[i]
    Ap = np.empty(n)
    target_sq = target * target
    it = 0
    while it < max_iter and rr > target_sq:
        pAp = 0.0
        for i in range(n):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc += data[jj] * p[indices[jj]]
            Ap[i] = acc
            pAp += p[i] * acc
        if not (pAp > 0.0) or not np.isfinite(pAp):
            return it, _STATUS_BREAKDOWN
        alpha = rz / pAp
        rz_new = 0.0
        rr = 0.0
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * Ap[i]
            zi = minv[i] * r[i]
            z[i] = zi
            rz_new += r[i] * zi
            rr += r[i] * r[i]
        if not np.isfinite(rr):
            return it, _STATUS_NAN
        beta = rz_new / rz
        for i in range(n):
            p[i] = z[i] + beta * p[i]
        rz = rz_new
        it += 1
    return it, _STATUS_OK


def _bicgstab_body(indptr, indices, data, b, x, minv, target, max_iter):
    n = b.shape[0]
    r = np.empty(n)
    for i in range(n):
        acc = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            acc += data[jj] * x[indices[jj]]
        r[i] = b[i] - acc
    r0 = r.copy()
    rho = 1.0
    alpha = 1.0
    omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    phat = np.empty(n)
    s = np.empty(n)
    shat = np.empty(n)
    t = np.empty(n)
    it = 0
    while it < max_iter:
        rr = 0.0
        for i in range(n):
            rr += r[i] * r[i]
        if not np.isfinite(rr):
            return it, _STATUS_NAN
        if rr <= target * target:
            return it, _STATUS_OK
        rho_new = 0.0
        for i in range(n):
            rho_new += r0[i] * r[i]
        if abs(rho_new) < _BREAKDOWN or abs(omega) < _BREAKDOWN:
            return it, _STATUS_BREAKDOWN
        beta = (rho_new / rho) * (alpha / omega)
        for i in range(n):
            p[i] = r[i] + beta * (p[i] - omega * v[i])
            phat[i] = minv[i] * p[i]
        r0v = 0.0
        for i in range(n):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc += data[jj] * phat[indices[jj]]
            v[i] = acc
            r0v += r0[i] * acc
        if abs(r0v) < _BREAKDOWN:
            return it, _STATUS_BREAKDOWN
        alpha = rho_new / r0v
        ss = 0.0
        for i in range(n):
            s[i] = r[i] - alpha * v[i]
            ss += s[i] * s[i]
        if ss <= target * target:
            for i in range(n):
                x[i] += alpha * phat[i]
                r[i] = s[i]
            it += 1
            continue
        tt = 0.0
        ts = 0.0
        for i in range(n):
            shat[i] = minv[i] * s[i]
        for i in range(n):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc += data[jj] * shat[indices[jj]]
            t[i] = acc
            tt += acc * acc
            ts += acc * s[i]
        if tt < _BREAKDOWN:
            return it, _STATUS_BREAKDOWN
        omega = ts / tt
        for i in range(n):
            x[i] += alpha * phat[i] + omega * shat[i]
            r[i] = s[i] - omega * t[i]
        rho = rho_new
        it += 1
    return it, _STATUS_OK


if _HAVE_NUMBA:
    _cg_kernel = numba.njit(cache=True, fastmath=False)(_cg_body)
    _bicgstab_kernel = numba.njit(cache=True, fastmath=False)(_bicgstab_body)
else:  # pragma: no cover
    _cg_kernel = _cg_body
    _bicgstab_kernel = _bicgstab_body


# ---------------------------------------------------------------------------
# public drivers


def _run(kernel, A, b, x0, tol, max_iter, precond, breakdown_msg) -> tuple[np.ndarray, SolveReport]:
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)
    target = tol * max(bnorm, RESIDUAL_FLOOR)
    indptr, indices, data, _ = _as_csr_parts(A)
    minv = np.ones(n) if precond is None else np.asarray(precond, dtype=float)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)

    total = 0
    breakdowns = 0
    # a fresh kernel call restarts from the current iterate; this both
    # implements restart-on-breakdown and guards the recurrence residual
    # against drift from the true one
    while True:
        it, status = kernel(indptr, indices, data, b, x, minv, target, max_iter - total)
        total += it
        if status == _STATUS_NAN:
            raise LinearSolveError(f"non-finite values encountered in {breakdown_msg}")
        if status == _STATUS_BREAKDOWN:
            breakdowns += 1
            if breakdowns > 1:
                raise LinearSolveError(f"{breakdown_msg} breakdown after restart")
            continue
        final = float(np.linalg.norm(b - A @ x))
        if final <= target or total >= max_iter or it == 0:
            break
    return x, SolveReport(total, final, final <= target)


def cg(
    A,
    b: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int | None = None,
    precond: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Preconditioned conjugate gradients for symmetric positive definite A."""
    return _run(_cg_kernel, A, b, x0, tol, max_iter, precond, "CG")


def bicgstab(
    A,
    b: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int | None = None,
    precond: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Stabilized bi-conjugate gradients for general nonsingular A."""
    return _run(_bicgstab_kernel, A, b, x0, tol, max_iter, precond, "BiCGSTAB")
