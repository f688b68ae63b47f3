"""Preconditioned conjugate gradients shared by the elliptic and implicit solves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SolverError(RuntimeError):
    """Raised when an iterative solve fails; carries the partial report."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class SolverReport:
    iterations: int = 0
    final_residual: float = 0.0
    initial_residual: float = 0.0
    compatibility_defect: float = 0.0
    mean_zero_defect: float = 0.0
    converged: bool = True


def pcg(apply_a, b, x0=None, precond=None, rel_tol=1e-10, max_iter=2000,
        project_mean=False, abs_tol=0.0):
    """Solve ``A x = b`` for symmetric positive (semi)definite ``A``.

    With ``project_mean`` every iterate, residual and search direction is kept
    mean-zero, which is how the singular pure-Neumann operators are handled.
    Returns ``(x, SolverReport)``; raises :class:`SolverError` on
    non-convergence.
    """
    b = np.asarray(b, dtype=float)
    if project_mean:
        b = b - b.mean()
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if project_mean:
        x -= x.mean()
    r = b - apply_a(x)
    if project_mean:
        r -= r.mean()
    bnorm = float(np.linalg.norm(b))
    r0 = float(np.linalg.norm(r))
    target = max(rel_tol * max(bnorm, r0), abs_tol)
    report = SolverReport(initial_residual=r0, final_residual=r0)
    if r0 <= target or bnorm == 0.0 and r0 == 0.0:
        return x, report
    z = precond(r) if precond is not None else r.copy()
    if project_mean:
        z -= z.mean()
    p = z.copy()
    rz = float(r @ z)
    for k in range(1, max_iter + 1):
        ap = apply_a(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        if project_mean:
            r -= r.mean()
        rn = float(np.linalg.norm(r))
        report.iterations = k
        report.final_residual = rn
        if rn <= target:
            return x, report
        z = precond(r) if precond is not None else r.copy()
        if project_mean:
            z -= z.mean()
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    report.converged = False
    raise SolverError(
        f"CG did not converge in {report.iterations} iterations "
        f"(residual {report.final_residual:.3e}, target {target:.3e})", report)


def jacobi(diag: np.ndarray):
    inv = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)
    return lambda r: inv * r
