"""Time steps for the convective nonlocal Cahn-Hilliard equation.

Two discretizations of the same equation are provided:

* ``mu_form``: ``phi_t + div(u phi) = div(m grad mu)`` with
  ``mu = -J*phi + F'(phi)``.  The diffusive flux ``m F'' grad phi`` is implicit
  with coefficients frozen at the old level, the nonlocal part explicit.
* ``b_form``: ``phi_t + div(u phi) = Lap B(phi) - div(m (grad J * phi))``,
  implicit in ``B``.  Only ``m``, ``lambda`` and ``B`` are evaluated, so the
  degenerate laws (eps = 0) are usable directly.

Every flux lives on faces and vanishes on walls, so the total mass changes
only by solver round-off, which is removed after each implicit solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import FaceField, Grid
from .kernels import KernelOperator
from .laws import MaterialLaws
from .linalg import SolverError, jacobi, pcg

BOUND_SLACK = 1e-6
TINY_SPEED = 1e-300


@dataclass
class StepParams:
    tau: float
    form: Literal["mu_form", "b_form"] = "mu_form"
    convection: Literal["upwind", "centered"] = "upwind"
    cfl_safety: float = 0.5
    tau_max: float | None = None
    solver_tol: float = 1e-12
    max_iter: int = 5000
    picard_max: int = 5
    picard_tol: float = 1e-10

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.form not in ("mu_form", "b_form"):
            raise ValueError(f"unknown form {self.form!r}")
        if self.convection not in ("upwind", "centered"):
            raise ValueError(f"unknown convection {self.convection!r}")


@dataclass
class StepInfo:
    iterations: int = 0
    sweeps: int = 0
    clamped: int = 0
    picard_update: float = 0.0
    conv_flux: FaceField | None = None
    nonlocal_flux: FaceField | None = None


@dataclass
class SimState:
    phi: np.ndarray
    u: FaceField
    pi: np.ndarray
    mu: np.ndarray
    t: float = 0.0
    step_index: int = 0
    clamp_count: int = 0
    info: StepInfo = field(default_factory=StepInfo)

    @classmethod
    def initial(cls, grid: Grid, phi0: np.ndarray) -> SimState:
        grid.check(phi0)
        return cls(np.array(phi0, dtype=float), grid.zero_faces(), grid.zeros(), grid.zeros())


# -- face helpers -----------------------------------------------------------
def _interior(grid: Grid, v: np.ndarray, axis: int) -> np.ndarray:
    if grid.periodic:
        return v
    return v[1:-1] if axis == 0 else v[:, 1:-1]


def _faces(grid: Grid, fn, *cells, vel: FaceField | None = None) -> FaceField:
    """Build a face field from ``fn(left_values..., right_values..., velocity)``."""
    out = []
    for axis, comp in ((0, "x"), (1, "y")):
        pairs = [grid._face_pairs(c, axis) for c in cells]
        w = None if vel is None else _interior(grid, getattr(vel, comp), axis)
        val = fn(*[p[0] for p in pairs], *[p[1] for p in pairs], w)
        out.append(grid._embed(val, axis, (0.0, 0.0)))
    return FaceField(*out)


def convective_flux(grid: Grid, u: FaceField, phi: np.ndarray, scheme: str = "upwind") -> FaceField:
    if scheme == "upwind":
        return _faces(grid, lambda a, b, w: w * np.where(w > 0, a, b), phi, vel=u)
    return _faces(grid, lambda a, b, w: w * 0.5 * (a + b), phi, vel=u)


def nonlocal_flux(grid: Grid, phi: np.ndarray, v: FaceField, laws: MaterialLaws) -> FaceField:
    """Face flux ``m(phi) v`` with the mobility upwinded along ``v``.

    For ``m = (1 - s)(1 + s)`` the factor ``1 + s`` is taken from the cell
    the flux leaves and ``1 - s`` from the cell it enters, so nothing is
    transported out of a ``-1`` cell or into a ``+1`` cell.
    """
    if laws.reference:
        c = np.clip(phi, -(1 - laws.eps), 1 - laws.eps)
        return _faces(grid, lambda a, b, w: w * np.where(w > 0, (1 + a) * (1 - b), (1 + b) * (1 - a)),
                      c, vel=v)
    m = laws.mobility(np.clip(phi, -1, 1))
    return _faces(grid, lambda a, b, w: w * np.where(w > 0, a, b), m, vel=v)


def chemical_potential(phi: np.ndarray, kernel: KernelOperator, laws: MaterialLaws) -> np.ndarray:
    """``-J*phi + F'(phi)``; eps = 0 evaluates F' at the safe margin."""
    return -kernel.convolve(phi) + laws.potential_d1(laws.safe(phi))


def mu_form_coefficients(grid: Grid, phi: np.ndarray, laws: MaterialLaws) -> tuple[FaceField, FaceField]:
    """Face mobility (harmonic mean) and secant of F' on faces."""
    s = laws.safe(phi) if laws.eps == 0 else phi
    mob = grid.face_harmonic(laws.mobility(np.clip(s, -1, 1)))
    k = grid.face_secant(s, laws.potential_d1(s), laws.potential_d2(s))
    return mob, k


def b_secant(grid: Grid, phi: np.ndarray, laws: MaterialLaws) -> FaceField:
    s = np.clip(phi, -1, 1) if laws.eps == 0 else phi
    return grid.face_secant(s, laws.b_primitive(s), laws.lam(s))


def cfl_timestep(u: FaceField, grid: Grid, params: StepParams, extra_speed: float = 0.0) -> float:
    """``cfl_safety * h / speed``, capped at ``tau_max`` (default: ``tau``)."""
    cap = params.tau_max if params.tau_max is not None else params.tau
    speed = u.max_abs() + extra_speed
    if speed <= TINY_SPEED:
        return cap
    return min(cap, params.cfl_safety * min(grid.hx, grid.hy) / speed)


# -- implicit solves ----------------------------------------------------------
class _Implicit:
    """``(I + tau D^T C D) x = b`` with the mass defect of the solve removed."""

    _lu_cache: dict = {}

    def __init__(self, grid: Grid):
        self.grid = grid
        self.d = grid.gradient_matrix()

    def matrix(self, tau: float, coef: FaceField):
        n = self.grid.nx * self.grid.ny
        return (sp.identity(n) + tau * (self.d.T @ sp.diags(coef.flat()) @ self.d)).tocsr()

    def solve(self, a, b, x0, params: StepParams):
        x, rep = pcg(lambda v: a @ v, b, x0=x0, precond=jacobi(a.diagonal()),
                     rel_tol=params.solver_tol, max_iter=params.max_iter)
        x += np.mean(b - a @ x)
        return x, rep.iterations

    def solve_constant(self, tau: float, diff: float, b):
        key = (self.grid, tau, diff)
        lu = self._lu_cache.get(key)
        if lu is None:
            coef = self.grid.zero_faces()
            coef.x[:] = diff
            coef.y[:] = diff
            if len(self._lu_cache) > 16:
                self._lu_cache.clear()
            a = self.matrix(tau, coef)
            lu = self._lu_cache[key] = (splu(a.tocsc()), a)
        x = lu[0].solve(b)
        x += np.mean(b - lu[1] @ x)
        return x


_implicit_cache: dict = {}


def _implicit(grid: Grid) -> _Implicit:
    if grid not in _implicit_cache:
        _implicit_cache[grid] = _Implicit(grid)
    return _implicit_cache[grid]


def _clamp(phi: np.ndarray) -> tuple[np.ndarray, int]:
    lim = 1.0 + BOUND_SLACK
    n = int(np.count_nonzero(np.abs(phi) > lim))
    if n:
        phi = np.clip(phi, -lim, lim)
    return phi, n


# -- steps ------------------------------------------------------------------
def step_mu_form(state: SimState, params: StepParams, kernel: KernelOperator,
                 laws: MaterialLaws, tau: float | None = None) -> SimState:
    g = kernel.grid
    tau = params.tau if tau is None else tau
    phi = state.phi
    conv = convective_flux(g, state.u, phi, params.convection)
    mob, k = mu_form_coefficients(g, phi, laws)
    explicit = mob * g.face_gradient(kernel.convolve(phi))
    rhs = (phi - tau * g.divergence(conv) - tau * g.divergence(explicit)).ravel()
    imp = _implicit(g)
    a = imp.matrix(tau, mob * k)
    x, its = imp.solve(a, rhs, phi.ravel(), params)
    info = StepInfo(iterations=its, conv_flux=conv, nonlocal_flux=explicit)
    return replace(state, phi=x.reshape(g.shape), t=state.t + tau, step_index=state.step_index + 1,
                   info=info)


def step_b_form(state: SimState, params: StepParams, kernel: KernelOperator,
                laws: MaterialLaws, tau: float | None = None) -> SimState:
    g = kernel.grid
    tau = params.tau if tau is None else tau
    phi = state.phi
    conv = convective_flux(g, state.u, phi, params.convection)
    q = nonlocal_flux(g, phi, kernel.convolve_grad_faces(phi), laws)
    rhs = (phi - tau * g.divergence(conv) - tau * g.divergence(q)).ravel()
    imp = _implicit(g)
    its = sweeps = 0
    unconverged = 0.0
    lam_const = laws.constants.lambda_const
    if lam_const is not None:
        x = imp.solve_constant(tau, lam_const, rhs)
        sweeps = 1
    else:
        x = phi.ravel().copy()
        for sweeps in range(1, params.picard_max + 1):
            a = imp.matrix(tau, b_secant(g, x.reshape(g.shape), laws))
            new, k = imp.solve(a, rhs, x, params)
            its += k
            delta = float(np.max(np.abs(new - x)))
            x = new
            if delta <= params.picard_tol:
                break
        else:
            # slow linear contraction is tolerated up to the bound slack
            if delta > BOUND_SLACK:
                raise SolverError(f"Picard iteration did not converge in {params.picard_max} sweeps "
                                  f"(last update {delta:.3e})")
            unconverged = delta
    new, n = _clamp(x.reshape(g.shape))
    info = StepInfo(iterations=its, sweeps=sweeps, clamped=n, conv_flux=conv, nonlocal_flux=q,
                    picard_update=unconverged)
    return replace(state, phi=new, t=state.t + tau, step_index=state.step_index + 1,
                   clamp_count=state.clamp_count + n, info=info)


def b_form_speed(kernel: KernelOperator, phi: np.ndarray) -> float:
    """Extra CFL speed of the explicit nonlocal transport."""
    return 4.0 * kernel.convolve_grad_faces(phi).max_abs()
