"""Pressure/velocity solves: the Darcy elliptic problem and its Brinkman regularization.

Darcy: given face forcing ``g`` and cell viscosity ``eta`` find mean-zero
``pi`` with

    sum_faces (1/eta_f) (D pi - g) . D psi = 0   for all psi,

then ``u = (g - D pi) / eta_f`` on interior faces and ``u . n = 0`` on walls.
Face viscosities are arithmetic means of the cell values, i.e. the face
coefficient ``1/eta_f`` is the harmonic mean of the cell values of ``1/eta``.

Brinkman: MAC discretization of ``-nu Lap u + eta u + grad pi = f``,
``div u = 0``, ``u = 0`` on walls, solved on the pressure Schur complement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import FaceField, Grid
from .kernels import KernelOperator
from .laws import MaterialLaws
from .linalg import SolverError, SolverReport, jacobi, pcg

PHI_OVERSHOOT = 1e-6


@dataclass
class PressureProblem:
    phi: np.ndarray
    kernel: KernelOperator
    laws: MaterialLaws
    rel_tol: float = 1e-10
    max_iter: int = 5000

    def __post_init__(self):
        if not 1e-14 <= self.rel_tol <= 1e-4:
            raise ValueError("rel_tol must lie in [1e-14, 1e-4]")
        # regularized laws are defined on the whole line; only eps = 0 needs the bound
        if self.laws.eps == 0 and np.max(np.abs(self.phi)) > 1 + PHI_OVERSHOOT:
            raise ValueError("|phi| exceeds 1 beyond the tolerated overshoot")


def cell_viscosity(phi: np.ndarray, laws: MaterialLaws) -> np.ndarray:
    """eta(phi) with overshoot up to PHI_OVERSHOOT folded back into [-1, 1]."""
    if laws.eps == 0:
        phi = np.clip(phi, -1.0, 1.0)
    return laws.viscosity(phi)


def face_viscosity(grid: Grid, eta: np.ndarray) -> FaceField:
    return grid.face_average(eta)


def _interior_mask(grid: Grid) -> np.ndarray:
    mx = np.ones(grid.xface_shape, bool)
    my = np.ones(grid.yface_shape, bool)
    if not grid.periodic:
        mx[0] = mx[-1] = False
        my[:, 0] = my[:, -1] = False
    return np.concatenate([mx.ravel(), my.ravel()])


class DarcyOperator:
    """The weighted Neumann operator ``D^T W D`` for fixed face weights."""

    def __init__(self, grid: Grid, weights: FaceField):
        self.grid = grid
        self.d = grid.gradient_matrix()
        self.w = weights.flat() * _interior_mask(grid)
        self.matrix = (self.d.T @ sp.diags(self.w) @ self.d).tocsr()
        self._diag = self.matrix.diagonal()
        self._lu = None

    def apply(self, x):
        return self.matrix @ x

    def rhs(self, forcing: FaceField) -> np.ndarray:
        return self.d.T @ (self.w * forcing.flat())

    def solve(self, b, x0=None, rel_tol=1e-10, max_iter=5000):
        return pcg(self.apply, b, x0=x0, precond=jacobi(self._diag), rel_tol=rel_tol,
                   max_iter=max_iter, project_mean=True)

    def solve_direct(self, b):
        """Mean-zero solution by sparse LU with one pinned cell (compatible b)."""
        if self._lu is None:
            a = self.matrix.tolil()
            a[0, :] = 0.0
            a[0, 0] = 1.0
            self._lu = splu(a.tocsc())
        b = np.array(b, dtype=float)
        b -= b.mean()
        b[0] = 0.0
        x = self._lu.solve(b)
        return x - x.mean()


def solve_darcy(grid: Grid, eta: np.ndarray, forcing: FaceField, rel_tol=1e-10,
                max_iter=5000, x0=None):
    """Generic Darcy solve for cell viscosity and face forcing.

    Returns ``(pi, u, report)``.
    """
    eta_f = face_viscosity(grid, eta)
    w = FaceField(1.0 / eta_f.x, 1.0 / eta_f.y)
    op = DarcyOperator(grid, w)
    b = op.rhs(forcing)
    total = float(np.sum(np.abs(b)))
    compat = abs(float(np.sum(b))) / total if total > 0 else 0.0
    x0 = None if x0 is None else np.ravel(x0)
    try:
        x, rep = op.solve(b, x0=x0, rel_tol=rel_tol, max_iter=max_iter)
    except SolverError as err:
        raise SolverError(f"pressure solve failed: {err}", err.report) from err
    x -= x.mean()
    pi = x.reshape(grid.shape)
    rep.compatibility_defect = compat
    rep.mean_zero_defect = abs(grid.integrate(pi)) / np.sqrt(grid.measure)
    u = darcy_velocity(grid, pi, eta_f, forcing)
    return pi, u, rep


def darcy_velocity(grid: Grid, pi: np.ndarray, eta_f: FaceField, forcing: FaceField) -> FaceField:
    dp = grid.face_gradient(pi)
    u = FaceField((forcing.x - dp.x) / eta_f.x, (forcing.y - dp.y) / eta_f.y)
    if not grid.periodic:
        u.x[0] = u.x[-1] = 0.0
        u.y[:, 0] = u.y[:, -1] = 0.0
    return u


def nonlocal_forcing(phi: np.ndarray, kernel: KernelOperator) -> FaceField:
    """Face values of (grad J * phi) phi; zero on wall faces."""
    g = kernel.grid
    gx, gy = kernel.convolve_grad(phi)
    f = FaceField(g.face_average(gx * phi).x, g.face_average(gy * phi).y)
    if not g.periodic:
        f.x[0] = f.x[-1] = 0.0
        f.y[:, 0] = f.y[:, -1] = 0.0
    return f


def korteweg_forcing(grid: Grid, phi: np.ndarray, mu: np.ndarray) -> FaceField:
    """mu grad phi with face-averaged mu and two-point face gradient of phi."""
    return grid.face_average(mu) * grid.face_gradient(phi)


def _check_eta(eta, laws: MaterialLaws):
    eta1 = laws.constants.eta1
    if np.min(eta) < 0.5 * eta1:
        raise SolverError(f"viscosity {np.min(eta):.3e} below eta1/2 = {0.5 * eta1:.3e}")


def solve_pressure(pb: PressureProblem, x0=None):
    """Solve the equivalent elliptic pressure problem; returns ``(pi, report)``."""
    g = pb.kernel.grid
    g.check(pb.phi)
    eta = cell_viscosity(pb.phi, pb.laws)
    _check_eta(eta, pb.laws)
    forcing = nonlocal_forcing(pb.phi, pb.kernel)
    pi, _, rep = solve_darcy(g, eta, forcing, pb.rel_tol, pb.max_iter, x0)
    return pi, rep


def recover_velocity(pi: np.ndarray, phi: np.ndarray, kernel: KernelOperator,
                     laws: MaterialLaws) -> FaceField:
    g = kernel.grid
    eta_f = face_viscosity(g, cell_viscosity(phi, laws))
    return darcy_velocity(g, pi, eta_f, nonlocal_forcing(phi, kernel))


# -- Brinkman ---------------------------------------------------------------
def _second_diff_1d(n: int, h: float, kind: str) -> sp.csr_matrix:
    """1-D second difference: 'dirichlet' (faces with zero ends), 'wall' (cell
    values with antisymmetric ghosts), 'periodic'."""
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    if kind == "wall":
        main[0] = main[-1] = -3.0
    m = sp.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil")
    if kind == "periodic":
        m[0, n - 1] = 1.0
        m[n - 1, 0] = 1.0
    return sp.csr_matrix(m) / (h * h)


class BrinkmanSystem:
    """MAC Brinkman operator for a fixed viscosity field."""

    def __init__(self, grid: Grid, eta: np.ndarray, nu: float):
        if not nu > 0:
            raise ValueError("Brinkman viscosity nu must be positive")
        self.grid, self.nu = grid, nu
        nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
        per = grid.periodic
        self.mask = _interior_mask(grid)
        d = grid.gradient_matrix()
        self.g = d[self.mask]  # pressure gradient on velocity unknowns
        if per:
            lu = sp.kron(_second_diff_1d(nx, hx, "periodic"), sp.identity(ny)) + \
                sp.kron(sp.identity(nx), _second_diff_1d(ny, hy, "periodic"))
            lv = lu
        else:
            lu = sp.kron(_second_diff_1d(nx - 1, hx, "dirichlet"), sp.identity(ny)) + \
                sp.kron(sp.identity(nx - 1), _second_diff_1d(ny, hy, "wall"))
            lv = sp.kron(_second_diff_1d(nx, hx, "wall"), sp.identity(ny - 1)) + \
                sp.kron(sp.identity(nx), _second_diff_1d(ny - 1, hy, "dirichlet"))
        self.lap = sp.block_diag([lu, lv]).tocsr()
        eta_f = grid.face_average(eta).flat()[self.mask]
        self.eta_f = eta_f
        self.a = (-nu * self.lap + sp.diags(eta_f)).tocsc()
        self._lu = splu(self.a)
        # Schur preconditioner: nu I + (G^T eta_f^-1 G)^-1
        w = np.zeros(self.mask.size)
        w[self.mask] = 1.0 / eta_f
        self._darcy = DarcyOperator(grid, grid.split_faces(w))

    def velocity_faces(self, uvec: np.ndarray) -> FaceField:
        full = np.zeros(self.mask.size)
        full[self.mask] = uvec
        return self.grid.split_faces(full)

    def faces_to_unknowns(self, v: FaceField) -> np.ndarray:
        return v.flat()[self.mask]

    def grad_energy(self, uvec: np.ndarray) -> float:
        """||grad u||^2 in the discrete MAC sense, (u, -Lap u)."""
        return float(uvec @ (-(self.lap @ uvec))) * self.grid.area

    def drag_energy(self, uvec: np.ndarray) -> float:
        return float(np.sum(self.eta_f * uvec * uvec)) * self.grid.area

    def divergence(self, uvec: np.ndarray) -> np.ndarray:
        return -(self.g.T @ uvec)

    def schur(self, p):
        return self.g.T @ self._lu.solve(self.g @ p)

    def precond(self, r):
        return self.nu * r + self._darcy.solve_direct(r)

    def solve(self, forcing: FaceField, tol=1e-10, max_iter=500, x0=None):
        f = self.faces_to_unknowns(forcing)
        a_inv_f = self._lu.solve(f)
        b = self.g.T @ a_inv_f
        try:
            p, rep = pcg(self.schur, b, x0=x0, precond=self.precond, rel_tol=tol,
                         max_iter=max_iter, project_mean=True, abs_tol=1e-300)
        except SolverError as err:
            raise SolverError(f"Brinkman Uzawa iteration failed ({err}); "
                              "try a looser tolerance or coarser nu sweep", err.report) from err
        p -= p.mean()
        uvec = self._lu.solve(f - self.g @ p)
        div = self.divergence(uvec)
        mom = self.a @ uvec + self.g @ p - f
        rep.final_residual = float(max(np.linalg.norm(div), np.linalg.norm(mom)))
        rep.mean_zero_defect = abs(float(p.sum())) * self.grid.area
        return uvec, p.reshape(self.grid.shape), rep


def solve_brinkman(grid: Grid, phi: np.ndarray, mu: np.ndarray, nu: float, laws: MaterialLaws,
                   tol=1e-10, forcing: FaceField | None = None):
    """Brinkman velocity and pressure for the Korteweg force ``mu grad phi``.

    Returns ``(u, pi, report, system)``; ``system`` exposes the discrete
    dissipation functionals of the solve.
    """
    eta = cell_viscosity(phi, laws)
    _check_eta(eta, laws)
    system = BrinkmanSystem(grid, eta, nu)
    if forcing is None:
        forcing = korteweg_forcing(grid, phi, mu)
    uvec, pi, rep = system.solve(forcing, tol=tol)
    return system.velocity_faces(uvec), pi, rep, system


# -- Hoelder diagnostic -----------------------------------------------------
def restrict(f: np.ndarray) -> np.ndarray:
    """2x2 block average onto the half-resolution grid."""
    nx, ny = (f.shape[0] // 2) * 2, (f.shape[1] // 2) * 2
    f = f[:nx, :ny]
    return 0.25 * (f[0::2, 0::2] + f[1::2, 0::2] + f[0::2, 1::2] + f[1::2, 1::2])


def _oscillation(f: np.ndarray) -> float:
    """Largest difference between edge- or corner-adjacent cells."""
    return float(max(np.abs(np.diff(f, axis=0)).max(), np.abs(np.diff(f, axis=1)).max(),
                     np.abs(f[1:, 1:] - f[:-1, :-1]).max(), np.abs(f[1:, :-1] - f[:-1, 1:]).max()))


def holder_exponent(grid: Grid, pi: np.ndarray, alphas) -> tuple[float, float]:
    """Empirical Hoelder exponent of a sampled field.

    The field is restricted by 2x2 averaging down to 8 cells per side; on each
    level the neighbour oscillation ``w(H)`` is measured and the exponent is
    the least-squares slope of ``log w`` against ``log H``.  Returns the
    largest trial exponent not above the slope (max(alphas) for constant or
    Lipschitz fields) and the matching quotient ``max_H w(H) / H^alpha``.
    A heuristic diagnostic; it is not used inside any solver.
    """
    alphas = np.sort(np.asarray(list(alphas), dtype=float))
    levels, f, h = [], np.asarray(pi, dtype=float), min(grid.hx, grid.hy)
    while min(f.shape) >= 8:
        levels.append((h, _oscillation(f)))
        f, h = restrict(f), 2 * h
    hs = np.array([lv[0] for lv in levels])
    ws = np.array([lv[1] for lv in levels])
    scale = max(float(np.max(np.abs(pi))), 1e-300)
    if np.all(ws <= 1e-13 * scale):
        return float(alphas[-1]), 0.0
    keep = ws > 1e-13 * scale
    slope = float(np.polyfit(np.log(hs[keep]), np.log(ws[keep]), 1)[0])
    ok = alphas[alphas <= slope + 0.02]
    alpha = float(ok[-1]) if ok.size else float(alphas[0])
    return alpha, float(np.max(ws / hs ** alpha))
