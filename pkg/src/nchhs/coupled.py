"""Coupled flow/phase-field runs driven by a :class:`SimConfig`."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as dg
from .config import SimConfig
from .darcy import (PressureProblem, cell_viscosity, recover_velocity, solve_brinkman,
                    solve_pressure)
from .fieldio import read_field
from .grid import FaceField, Grid
from .kernels import KernelOperator
from .laws import MaterialLaws
from .linalg import SolverError
from .rng import symmetric_noise
from .stepper import (SimState, b_form_speed, cfl_timestep, chemical_potential, step_b_form,
                      step_mu_form)

log = logging.getLogger(__name__)


@dataclass
class Snapshot:
    step: int
    t: float
    phi: np.ndarray
    u: FaceField
    pi: np.ndarray
    mu: np.ndarray


@dataclass
class Trajectory:
    grid: Grid
    records: list[dg.DiagnosticsRecord] = field(default_factory=list)
    taus: list[float] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)
    final: SimState | None = None
    status: str = "ok"
    error: str | None = None
    defects: list[dict] = field(default_factory=list)

    def budget(self) -> dict:
        return dg.energy_budget(self.records, self.taus)


def initial_field(cfg: SimConfig) -> np.ndarray:
    g, ic = cfg.grid, cfg.initial
    if ic.kind == "uniform":
        return np.full(g.shape, ic.value)
    if ic.kind == "spinodal":
        return ic.value + symmetric_noise(cfg.seed, g.shape, ic.amplitude)
    if ic.kind == "bubble":
        x, y = g.coords()
        r = np.hypot(x - ic.center[0] * g.lx, y - ic.center[1] * g.ly)
        return ic.amplitude * np.tanh((ic.radius - r) / ic.smoothing)
    snap = read_field(ic.path)
    if snap.shape != g.shape:
        raise ValueError(f"initial field {snap.shape} does not match grid {g.shape}")
    return snap.values


@dataclass
class Problem:
    """Grid, laws and kernel built once from a config."""

    cfg: SimConfig
    laws: MaterialLaws = None
    kernel: KernelOperator = None

    def __post_init__(self):
        self.laws = self.laws or MaterialLaws(self.cfg.material)
        self.kernel = self.kernel or KernelOperator(self.cfg.kernel, self.cfg.grid)

    @property
    def grid(self) -> Grid:
        return self.cfg.grid


def _flow(prob: Problem, state: SimState, mu: np.ndarray):
    """Velocity and pressure for the current phase field plus flow dissipation."""
    g, laws, so = prob.grid, prob.laws, prob.cfg.solver
    if so.brinkman_nu > 0:
        u, pi, rep, system = solve_brinkman(g, state.phi, mu, so.brinkman_nu, laws, tol=so.brinkman_tol)
        uvec = system.faces_to_unknowns(u)
        return u, pi, rep.iterations, system.drag_energy(uvec), so.brinkman_nu * system.grad_energy(uvec)
    pb = PressureProblem(state.phi, prob.kernel, laws, rel_tol=so.rel_tol, max_iter=so.max_iter)
    pi, rep = solve_pressure(pb, x0=state.pi)
    u = recover_velocity(pi, state.phi, prob.kernel, laws)
    eta_f = g.face_average(cell_viscosity(state.phi, laws))
    return u, pi, rep.iterations, g.face_inner(eta_f * u, u), 0.0


def run_coupled(cfg: SimConfig, phi0: np.ndarray | None = None, problem: Problem | None = None,
                max_steps: int | None = None) -> Trajectory:
    """Integrate to ``cfg.t_end``; each step: mu, flow solve, phase step, diagnostics.

    Solver failures stop the run and return the partial trajectory with
    ``status = "solver_failure"``.
    """
    prob = problem or Problem(cfg)
    g, laws, kernel, params = prob.grid, prob.laws, prob.kernel, cfg.step
    phi0 = initial_field(cfg) if phi0 is None else np.array(phi0, dtype=float)
    if np.max(np.abs(phi0)) > 1:
        raise ValueError("initial field leaves [-1, 1]")
    e0 = dg.free_energy(phi0, kernel, laws)
    if not (np.isfinite(e0) and np.isfinite(dg.entropy(g, phi0, laws))):
        raise ValueError("initial energy or entropy is not finite")

    traj = Trajectory(grid=g)
    state = SimState.initial(g, phi0)
    step = step_mu_form if params.form == "mu_form" else step_b_form
    work = 0.0
    last_defect = 0.0
    n = 0
    while True:
        mu = chemical_potential(state.phi, kernel, laws)
        try:
            u, pi, its, diss_u, diss_gu = _flow(prob, state, mu)
        except SolverError as err:
            traj.status, traj.error = "solver_failure", str(err)
            log.error("flow solve failed at step %d: %s", n, err)
            break
        state.u, state.pi, state.mu = u, pi, mu
        diss_mu = dg.mobility_dissipation(g, state.phi, mu, laws)
        energy = dg.free_energy(state.phi, kernel, laws)
        rec = dg.DiagnosticsRecord(
            t=state.t, mass=g.integrate(state.phi), energy=energy, entropy=dg.entropy(g, state.phi, laws),
            diss_mu=diss_mu, diss_u=diss_u, diss_grad_u=diss_gu, linf_phi=g.linf_norm(state.phi),
            u_l4=dg.velocity_l4(g, u), budget_residual=energy - e0 + work,
            phi_functional=dg.phi_functional(g, state.phi, kernel, laws),
            clamp_count=state.clamp_count + laws.clamp_count,
            iterations=its + state.info.iterations, defect=last_defect)
        traj.records.append(rec)
        if cfg.snapshot_every and n % cfg.snapshot_every == 0 or n == 0:
            traj.snapshots.append(Snapshot(n, state.t, state.phi.copy(), u.copy(), pi.copy(), mu.copy()))
        remaining = cfg.t_end - state.t
        if remaining <= 1e-12 * max(cfg.t_end, 1.0) or (max_steps is not None and n >= max_steps):
            break
        extra = b_form_speed(kernel, state.phi) if params.form == "b_form" else 0.0
        tau = min(cfl_timestep(u, g, params, extra), remaining)
        try:
            new = step(state, params, kernel, laws, tau=tau)
        except SolverError as err:
            traj.status, traj.error = "solver_failure", str(err)
            log.error("phase step failed at step %d: %s", n, err)
            break
        if params.form == "mu_form":
            d = dg.step_defect(g, kernel, laws, state.phi, new.phi, mu, tau, new.info.conv_flux,
                               diss_u + diss_gu)
            traj.defects.append(d)
            last_defect = d["total"]
        work += tau * (diss_mu + diss_u + diss_gu)
        traj.taus.append(tau)
        state = new
        n += 1
    if not traj.snapshots or traj.snapshots[-1].step != n:
        traj.snapshots.append(Snapshot(n, state.t, state.phi.copy(), state.u.copy(), state.pi.copy(),
                                       state.mu.copy()))
    traj.final = state
    return traj
