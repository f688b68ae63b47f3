"""Acceptance criteria, one test each, run at their stated tolerances.

Each test prints one ``criterion N PASS|FAIL`` line; the terminal summary
collects them.  Scenarios are desk scale (at most 128^2, at most 2000 steps).
"""

import numpy as np
import pytest

from nchhs import diagnostics as dg
from nchhs import experiments as ex
from nchhs.config import parse_config
from nchhs.coupled import run_coupled
from nchhs.darcy import (PressureProblem, holder_exponent, korteweg_forcing, recover_velocity,
                         solve_brinkman, solve_darcy, solve_pressure)
from nchhs.grid import FaceField, Grid
from nchhs.kernels import KernelOperator, KernelSpec
from nchhs.laws import MaterialLaws, MaterialParams
from nchhs.stepper import SimState, StepParams, nonlocal_flux, step_b_form, step_mu_form

ALPHAS = ex.HOLDER_ALPHAS


def config(**sections):
    text = "".join(f"[{sec}]\n" + "".join(f"{k} = {v}\n" for k, v in kv.items())
                   for sec, kv in sections.items())
    return parse_config(text)


def random_phase(g, seed):
    rng = np.random.default_rng(seed)
    x, y = g.coords()
    smooth = sum(rng.uniform(-1, 1) * np.cos(k * np.pi * x) * np.cos(l * np.pi * y)
                 for k in range(3) for l in range(3))
    f = smooth + 0.5 * rng.uniform(-1, 1, g.shape)
    return f / np.abs(f).max()


# 1 ---------------------------------------------------------------------------
@pytest.mark.parametrize("form,eps", [("b_form", 0.0), ("mu_form", 0.05)])
def test_mass_conservation(criterion, form, eps):
    cfg = config(domain=dict(nx=64, ny=64), material=dict(eps=eps, nu2=2.0),
                 kernel=dict(strength=4.0), stepper=dict(form=form, tau=1e-4, t_end=1.0),
                 initial=dict(kind="spinodal", amplitude=0.3))
    traj = run_coupled(cfg, max_steps=2000)
    mass = np.array([r.mass for r in traj.records])
    drift = float(np.abs(mass - mass[0]).max())
    ok = traj.status == "ok" and len(traj.taus) == 2000 and drift <= 1e-12 * cfg.grid.measure
    criterion(1, f"mass conservation ({form})", ok, f"max drift {drift:.2e} over {len(traj.taus)} steps")
    assert ok


# 2 ---------------------------------------------------------------------------
def test_phase_bound(criterion):
    worst, clamps, top = 0.0, 0, 0.0
    for seed in range(10):
        cfg = config(run=dict(seed=seed), domain=dict(nx=32, ny=32), material=dict(nu2=3.0),
                     kernel=dict(strength=100.0), stepper=dict(form="b_form", tau=1e-3, t_end=1.0),
                     initial=dict(kind="spinodal", amplitude=0.5))
        traj = run_coupled(cfg, max_steps=500)
        assert traj.status == "ok"
        worst = max(worst, max(dg.bound_violation(np.array([r.linf_phi])) for r in traj.records))
        top = max(top, max(r.linf_phi for r in traj.records))
        clamps += traj.records[-1].clamp_count
    ok = worst <= 1e-8
    criterion(2, "phase bound, B-form eps=0, 10 seeds", ok,
              f"max violation {worst:.2e}, max |phi| {top:.6f}, clamps {clamps}")
    assert ok


# 3 ---------------------------------------------------------------------------
def test_energy_inequality(criterion):
    defects, nets = [], []
    for tau in (1e-3, 5e-4, 2.5e-4):
        cfg = config(domain=dict(nx=32, ny=32), material=dict(eps=0.05, nu1=1.0, nu2=2.0),
                     kernel=dict(strength=8.0, width=0.1),
                     stepper=dict(form="mu_form", convection="centered", tau=tau, t_end=0.02),
                     solver=dict(brinkman_nu=1e-2),
                     initial=dict(kind="bubble", amplitude=0.9, radius=0.25, smoothing=0.05))
        traj = run_coupled(cfg)
        assert traj.status == "ok"
        b = traj.budget()
        e0 = traj.records[0].energy
        nets.append(float(np.max(b["net"])) / (1 + abs(e0)))
        defects.append(abs(float(b["defect"][-1])))
    ratios = [defects[k + 1] / defects[k] for k in range(2)]
    ok = max(nets) <= 1e-9 and all(0.35 <= r <= 0.65 for r in ratios)
    criterion(3, "energy inequality (Brinkman nu=1e-2, eps=0.05)", ok,
              f"max (residual - defect) {max(nets):.2e}, defect ratios "
              f"{ratios[0]:.3f}, {ratios[1]:.3f}")
    assert ok


# 4, 8 ------------------------------------------------------------------------
def phase_scenario(eps):
    return config(domain=dict(nx=32, ny=32), material=dict(eps=eps, nu2=2.0),
                  kernel=dict(strength=40.0), stepper=dict(form="mu_form", tau=1e-4, t_end=0.02),
                  initial=dict(kind="bubble", amplitude=0.99, radius=0.25, smoothing=0.05))


def test_entropy_bound(criterion):
    details, ok = [], True
    for eps in (0.1, 0.05, 0.025):
        traj = run_coupled(phase_scenario(eps))
        s = np.array([r.entropy for r in traj.records])
        excess = float(s.max() - s[0])
        good = traj.status == "ok" and excess <= 0.1 * abs(s[0])
        ok &= good
        details.append(f"eps={eps}: max rise {excess:.2e} vs {0.1 * abs(s[0]):.2e}")
    criterion(4, "entropy bound", ok, "; ".join(details))
    assert ok


def test_eps_cauchy(criterion):
    epss = [0.2, 0.1, 0.05, 0.025, 0.0125]
    finals = [run_coupled(phase_scenario(e)).final.phi for e in epss]
    g = phase_scenario(0.1).grid
    diffs = [g.l2_norm(finals[k] - finals[k + 1]) for k in range(len(epss) - 1)]
    ok = all(diffs[k + 1] < diffs[k] for k in range(len(diffs) - 1))
    criterion(8, "eps -> 0 Cauchy behaviour", ok, "differences " + ", ".join(f"{d:.3e}" for d in diffs))
    assert ok


# 5 ---------------------------------------------------------------------------
def test_darcy_manufactured(criterion):
    errs = []
    for n in (32, 64, 128):
        g = Grid(1.0, 1.0, n, n)
        xf, yf = g.xface_coords()
        xg, yg = g.yface_coords()
        forcing = FaceField(-np.pi * np.sin(np.pi * xf) * np.cos(np.pi * yf),
                            -np.pi * np.cos(np.pi * xg) * np.sin(np.pi * yg))
        pi, _, _ = solve_darcy(g, np.ones(g.shape), forcing, rel_tol=1e-12)
        x, y = g.coords()
        errs.append(float(np.abs(pi - np.cos(np.pi * x) * np.cos(np.pi * y)).max()))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    ok = np.all(orders >= 1.9) and errs[-1] <= 1e-3
    criterion(5, "Darcy manufactured solution", ok,
              f"orders {orders[0]:.3f}, {orders[1]:.3f}; error at 128^2 {errs[-1]:.2e}")
    assert ok


# 6 ---------------------------------------------------------------------------
def test_apriori_bounds(criterion):
    g = Grid(1.0, 1.0, 32, 32)
    K = KernelOperator(KernelSpec("gaussian", 1.0, 0.1), g)
    laws = MaterialLaws(MaterialParams(nu1=1.0, nu2=3.0))
    c, b = laws.constants, K.b_const
    worst_p = worst_u = 0.0
    for seed in range(20):
        phi = random_phase(g, seed)
        pi, _ = solve_pressure(PressureProblem(phi, K, laws))
        u = recover_velocity(pi, phi, K, laws)
        norm = g.l2_norm(phi)
        worst_p = max(worst_p, g.face_norm(g.face_gradient(pi)) / (1.05 * c.eta_inf / c.eta1 * b * norm))
        worst_u = max(worst_u, g.face_norm(u) / (b / c.eta1 * (1 + c.eta_inf / c.eta1) * norm))
    ok = worst_p <= 1 and worst_u <= 1
    criterion(6, "a-priori velocity/pressure bounds", ok,
              f"max |grad pi|/bound {worst_p:.3f}, max |u|/bound {worst_u:.3f}")
    assert ok


# 7 ---------------------------------------------------------------------------
def test_brinkman_limit(criterion):
    g = Grid(1.0, 1.0, 64, 64)
    laws = MaterialLaws(MaterialParams(nu1=1.0, nu2=2.0, eps=0.05))
    K = KernelOperator(KernelSpec("gaussian", 1.0, 0.1), g)
    x, y = g.coords()
    phi = 0.8 * np.tanh((0.3 - np.hypot(x - 0.5, (y - 0.5) * 1.5)) / 0.05)
    mu = laws.potential_d1(phi) - K.convolve(phi)
    _, ud, _ = solve_darcy(g, laws.viscosity(phi), korteweg_forcing(g, phi, mu))
    nus = (1e-1, 1e-2, 1e-3, 1e-4)
    diffs, scaled = [], []
    for nu in nus:
        u, _, _, system = solve_brinkman(g, phi, mu, nu, laws)
        diffs.append(g.face_norm(u - ud))
        scaled.append(np.sqrt(nu * system.grad_energy(system.faces_to_unknowns(u))))
    decreasing = all(diffs[k + 1] < diffs[k] for k in range(3))
    spread = max(scaled) / min(scaled)
    ok = decreasing and spread <= 2.0
    criterion(7, "nu -> 0 Brinkman limit", ok,
              f"|u_nu - u_darcy| {', '.join(f'{d:.3e}' for d in diffs)} "
              f"({'decreasing' if decreasing else 'not decreasing'}); "
              f"sqrt(nu)|grad u| spread {spread:.2f}x")
    assert ok


# 9 ---------------------------------------------------------------------------
def test_weak_strong_stability(criterion):
    details, ok = [], True
    for nu2, norm in ((3.0, "l2"), (1.0, "vprime")):
        cfg = config(domain=dict(nx=32, ny=32), material=dict(nu1=1.0, nu2=nu2),
                     kernel=dict(strength=40.0), stepper=dict(tau=2e-4, t_end=0.02, snapshot_every=5),
                     initial=dict(kind="spinodal", amplitude=0.3))
        res = ex.stability(cfg, [1e-2, 1e-3, 1e-4])
        assert res.norm == norm
        ok &= res.spread <= 2.0
        details.append(f"{norm}: gap/delta " + ", ".join(f"{r:.4f}" for r in res.ratios)
                       + f" (spread {res.spread:.3f})")
    criterion(9, "weak-strong stability", ok, "; ".join(details))
    assert ok


# 10 --------------------------------------------------------------------------
def test_kernel_operator(criterion):
    worst_adj = worst_direct = 0.0
    rng = np.random.default_rng(0)
    for mode in ("neumann", "periodic"):
        g = Grid(1.0, 1.0, 64, 64, mode)
        for spec in (KernelSpec("gaussian", 1.0, 0.1), KernelSpec("newtonian2d", 1.0)):
            K = KernelOperator(spec, g)
            f, h = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
            a, b = g.inner(K.convolve(f), h), g.inner(f, K.convolve(h))
            worst_adj = max(worst_adj, abs(a - b) / max(abs(a), 1e-300))
            fast, direct = K.convolve(f), K.convolve_direct(f)
            worst_direct = max(worst_direct, float(np.abs(fast - direct).max() / np.abs(direct).max()))
    ok = worst_adj <= 1e-12 and worst_direct <= 1e-10
    criterion(10, "kernel operator", ok,
              f"self-adjointness defect {worst_adj:.2e}, fast vs direct {worst_direct:.2e} at 64^2")
    assert ok


# 11 --------------------------------------------------------------------------
def test_cross_scheme_consistency(criterion):
    diffs = []
    for n, tau in ((32, 4e-5), (64, 2e-5), (128, 1e-5)):
        g = Grid(1.0, 1.0, n, n)
        laws = MaterialLaws(MaterialParams(eps=0.1))
        K = KernelOperator(KernelSpec("gaussian", 1.0, 0.1), g)
        x, y = g.coords()
        s = SimState.initial(g, 0.5 * np.cos(2 * np.pi * x) * np.cos(2 * np.pi * y)
                             + 0.2 * np.sin(2 * np.pi * y))
        a = step_mu_form(s, StepParams(tau=tau), K, laws)
        b = step_b_form(s, StepParams(tau=tau, form="b_form"), K, laws)
        diffs.append(g.l2_norm(a.phi - b.phi))
    orders = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
    ok = bool(np.all(orders >= 1.8))
    criterion(11, "mu-form vs B-form single step", ok,
              "differences " + ", ".join(f"{d:.3e}" for d in diffs)
              + f"; joint orders {orders[0]:.2f}, {orders[1]:.2f}")
    assert ok


# 12 --------------------------------------------------------------------------
def test_diffid_residual_order(criterion):
    g = Grid(1.0, 1.0, 32, 32)
    laws = MaterialLaws(MaterialParams())
    K = KernelOperator(KernelSpec("gaussian", 8.0, 0.1), g)
    x, y = g.coords()
    # relax the initial layer with a fine step so the measured window is smooth in time
    start = SimState.initial(g, 0.5 * np.cos(np.pi * x) * np.cos(np.pi * y))
    fine = StepParams(tau=1e-5, form="b_form")
    for _ in range(1000):
        start = step_b_form(start, fine, K, laws)
    peaks = []
    for tau in (1e-3, 5e-4, 2.5e-4):
        p = StepParams(tau=tau, form="b_form")
        s, worst = start, 0.0
        for _ in range(int(round(0.04 / tau))):
            new = step_b_form(s, p, K, laws)
            q1 = nonlocal_flux(g, new.phi, K.convolve_grad_faces(new.phi), laws)
            r = dg.diffid_residual(g, laws, s.phi, new.phi, new.info.nonlocal_flux, q1,
                                   new.info.conv_flux, tau)
            worst = max(worst, abs(r["residual"]))
            s = new
        peaks.append(worst)
    orders = np.log2(np.array(peaks[:-1]) / np.array(peaks[1:]))
    ok = bool(np.all(orders >= 1.0))
    criterion(12, "diffid residual", ok,
              "max residual " + ", ".join(f"{v:.3e}" for v in peaks)
              + f"; orders {orders[0]:.2f}, {orders[1]:.2f}")
    assert ok


# 13 --------------------------------------------------------------------------
def test_holder_diagnostic(criterion):
    known = []
    rough = []
    laws = MaterialLaws(MaterialParams(nu1=1.0, nu2=3.0))
    for n in (64, 128):
        g = Grid(1.0, 1.0, n, n)
        x, y = g.coords()
        known.append(holder_exponent(g, np.sqrt(np.abs(x - 0.5)), ALPHAS)[0])
        phi = 0.9 * np.sqrt(np.abs(np.sin(3 * np.pi * x))) * np.cos(2 * np.pi * y)
        K = KernelOperator(KernelSpec("gaussian", 1.0, 0.1), g)
        pi, _ = solve_pressure(PressureProblem(phi, K, laws))
        rough.append(holder_exponent(g, pi, ALPHAS)[0])
    change = abs(rough[1] - rough[0]) / rough[0]
    ok = all(0.4 <= a <= 0.6 for a in known) and change <= 0.2
    criterion(13, "Hoelder diagnostic", ok,
              f"sqrt field alpha {known[0]:.2f}/{known[1]:.2f}; rough-phi pressure alpha "
              f"{rough[0]:.2f} -> {rough[1]:.2f} ({100 * change:.0f}% change)")
    assert ok
