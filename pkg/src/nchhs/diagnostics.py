"""Functionals and identity residuals evaluated along trajectories."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .grid import FaceField, Grid
from .kernels import KernelOperator
from .laws import MaterialLaws
from .linalg import jacobi, pcg
from .stepper import b_secant, mu_form_coefficients


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    entropy: float
    diss_mu: float
    diss_u: float
    diss_grad_u: float
    linf_phi: float
    u_l4: float
    budget_residual: float
    phi_functional: float
    clamp_count: int
    iterations: int
    defect: float = 0.0
    holder_alpha: float = float("nan")

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return list(asdict(self).values())


def _closed(phi, laws: MaterialLaws):
    return np.clip(phi, -1.0, 1.0) if laws.eps == 0 else phi


def free_energy(phi: np.ndarray, kernel: KernelOperator, laws: MaterialLaws) -> float:
    """``-1/2 (phi, J*phi) + int F(phi)``."""
    g = kernel.grid
    return -0.5 * g.inner(phi, kernel.convolve(phi)) + g.integrate(laws.potential(_closed(phi, laws)))


def entropy(grid: Grid, phi: np.ndarray, laws: MaterialLaws) -> float:
    s = laws.safe(phi) if laws.eps == 0 else phi
    return grid.integrate(laws.entropy(s))


def bound_violation(phi: np.ndarray) -> float:
    return max(float(np.max(np.abs(phi))) - 1.0, 0.0)


def mobility_dissipation(grid: Grid, phi: np.ndarray, mu: np.ndarray, laws: MaterialLaws) -> float:
    """``sum m_f |D mu|^2`` with the face mobility of the mu-form step."""
    mob, _ = mu_form_coefficients(grid, phi, laws)
    dmu = grid.face_gradient(mu)
    return grid.face_inner(mob * dmu, dmu)


def velocity_l4(grid: Grid, u: FaceField) -> float:
    ux, uy = grid.cell_average(u)
    return grid.lp_norm(np.hypot(ux, uy), 4)


def step_defect(grid: Grid, kernel: KernelOperator, laws: MaterialLaws, phi0: np.ndarray,
                phi1: np.ndarray, mu0: np.ndarray, tau: float, conv_flux: FaceField,
                flow_dissipation: float) -> dict:
    """Terms by which one mu-form step departs from the exact energy balance.

    With ``D_n = m|D mu|^2 + nu |grad u|^2 + eta |u|^2`` the step satisfies
    ``E1 - E0 + tau D_n = sum of the returned terms`` up to solver round-off:
    Taylor remainders of the potential and kernel parts, the implicit lag of
    the frozen-coefficient flux and the mismatch between the convective and
    Korteweg work.
    """
    delta = phi1 - phi0
    mob, k = mu_form_coefficients(grid, phi0, laws)
    dmu = grid.face_gradient(mu0)
    lag = -tau * grid.face_inner(mob * k * dmu, grid.face_gradient(delta))
    kern = -0.5 * grid.inner(delta, kernel.convolve(delta))
    p0, p1 = _closed(phi0, laws), _closed(phi1, laws)
    s0 = laws.safe(phi0) if laws.eps == 0 else phi0
    taylor = grid.integrate(laws.potential(p1) - laws.potential(p0) - laws.potential_d1(s0) * delta)
    conv = tau * (grid.face_inner(conv_flux, dmu) + flow_dissipation)
    return {"lag": lag, "kernel": kern, "taylor": taylor, "convection": conv,
            "total": lag + kern + taylor + conv}


def energy_budget(records: list[DiagnosticsRecord], taus) -> dict:
    """Residual series ``r_n = E_n - E_0 + sum_k tau_k D_k`` and the cumulative defect.

    ``taus[k]`` is the step that produced record ``k + 1``.  The dissipation of
    record ``k`` is the one of the step leaving it.
    """
    e = np.array([r.energy for r in records])
    d = np.array([r.diss_mu + r.diss_u + r.diss_grad_u for r in records])
    taus = np.asarray(taus, dtype=float)
    work = np.concatenate([[0.0], np.cumsum(taus * d[:-1])])
    residual = e - e[0] + work
    defect = np.concatenate([[0.0], np.cumsum([r.defect for r in records[1:]])])
    return {"residual": residual, "defect": defect, "net": residual - defect}


# -- Phi functional ----------------------------------------------------------
def phi_functional(grid: Grid, phi: np.ndarray, kernel: KernelOperator, laws: MaterialLaws) -> float:
    """``|grad B(phi)|^2 - 2 (m(phi) (grad J * phi), lambda(phi) grad phi)`` on faces."""
    s = np.clip(phi, -1, 1) if laws.eps == 0 else phi
    db = b_secant(grid, phi, laws) * grid.face_gradient(phi)
    mob = grid.face_average(laws.mobility(s))
    v = kernel.convolve_grad_faces(phi)
    return grid.face_inner(db, db) - 2.0 * grid.face_inner(mob * v, db)


def phi_bounds(grid: Grid, phi: np.ndarray, kernel: KernelOperator, laws: MaterialLaws) -> tuple[float, float]:
    """Lower and upper bounds of the Phi functional in terms of ``|grad phi|^2``.

    lower = (alpha0^2 / 2) X - 2 m^2 lambda^2 b^2 |Omega| / alpha0^2,
    upper = K2 (X + 1), K2 = max(lambda^2 + m lambda, m lambda b^2 |Omega|),
    with ``X = |grad phi|^2`` and sup-norm constants of the laws.
    """
    c = laws.constants
    x = grid.h1_seminorm(phi) ** 2
    b, area = kernel.b_const, grid.measure
    a0, m, lam = c.alpha0, c.m_inf, c.lambda_inf
    lower = 0.5 * a0 ** 2 * x - 2.0 * m ** 2 * lam ** 2 * b ** 2 * area / a0 ** 2
    k2 = max(lam ** 2 + m * lam, m * lam * b ** 2 * area)
    return lower, k2 * (x + 1.0)


def scheme_phi_functional(grid: Grid, phi: np.ndarray, q: FaceField, laws: MaterialLaws) -> float:
    """Phi with the B-form nonlocal flux ``q`` in place of ``m (grad J * phi)``."""
    db = grid.face_gradient(laws.b_primitive(_closed(phi, laws)))
    return grid.face_inner(db, db) - 2.0 * grid.face_inner(q, db)


def diffid_residual(grid: Grid, laws: MaterialLaws, phi0, phi1, q0: FaceField, q1: FaceField,
                    conv: FaceField, tau: float) -> dict:
    """Residual of the discrete balance for Phi over one B-form step.

    lhs = dPhi/2 + (phi_t, lambda phi_t) + (u . grad phi, lambda phi_t)
    rhs = -(d_t [m (grad J * phi)], grad B(phi))
    with time derivatives replaced by difference quotients.
    """
    b0, b1 = laws.b_primitive(_closed(phi0, laws)), laws.b_primitive(_closed(phi1, laws))
    bt = (b1 - b0) / tau
    phit = (phi1 - phi0) / tau
    dphi = scheme_phi_functional(grid, phi1, q1, laws) - scheme_phi_functional(grid, phi0, q0, laws)
    lhs = 0.5 * dphi / tau + grid.inner(phit, bt) + grid.inner(grid.divergence(conv), bt)
    rhs = -grid.face_inner(q1 - q0, grid.face_gradient(b1)) / tau
    scale = abs(0.5 * dphi / tau) + abs(grid.inner(phit, bt)) + abs(rhs)
    return {"lhs": lhs, "rhs": rhs, "residual": lhs - rhs, "scale": scale}


# -- stability ---------------------------------------------------------------
def neumann_inverse(grid: Grid, f: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Mean-zero ``w`` with ``-Lap w = f - mean(f)``."""
    d = grid.gradient_matrix()
    a = (d.T @ d).tocsr()
    b = (f - f.mean()).ravel()
    w, _ = pcg(lambda v: a @ v, b, precond=jacobi(np.maximum(a.diagonal(), 1e-300)),
               rel_tol=tol, project_mean=True)
    return (w - w.mean()).reshape(grid.shape)


def vprime_norm(grid: Grid, f: np.ndarray, tol: float = 1e-10) -> float:
    """Dual norm ``(|grad N(f - fbar)|^2 + |fbar|^2)^(1/2)``."""
    fbar = grid.mean(f)
    w = neumann_inverse(grid, f, tol)
    return float(np.sqrt(max(grid.inner(f - fbar, w), 0.0) + fbar ** 2))


@dataclass
class StabilityGap:
    t: np.ndarray
    phi_l2: np.ndarray
    u_l2: np.ndarray
    pi_h1: np.ndarray
    phi_vprime: np.ndarray


def stability_gap(grid: Grid, run_a, run_b) -> StabilityGap:
    """Per-snapshot distances between two runs sampled at the same times."""
    sa, sb = run_a.snapshots, run_b.snapshots
    if len(sa) != len(sb) or any(abs(x.t - y.t) > 1e-12 for x, y in zip(sa, sb)):
        raise ValueError("trajectories are not sampled at the same times")
    rows = []
    for x, y in zip(sa, sb):
        dphi = y.phi - x.phi
        rows.append((x.t, grid.l2_norm(dphi), grid.face_norm(y.u - x.u),
                     grid.h1_seminorm(y.pi - x.pi), vprime_norm(grid, dphi)))
    arr = np.array(rows)
    return StabilityGap(*arr.T)
