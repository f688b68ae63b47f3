"""Sweeps, stability experiments, offline diagnosis and trajectory output."""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import SimConfig
from .coupled import Problem, Trajectory, initial_field, run_coupled
from .darcy import holder_exponent, restrict
from .fieldio import read_field, write_field, write_pgm
from .grid import Grid
from .kernels import KernelOperator
from .laws import MaterialLaws

log = logging.getLogger(__name__)

AXES = ("eps", "nu", "tau", "grid")
HOLDER_ALPHAS = np.round(np.arange(0.05, 1.0001, 0.05), 2)


def default_threads() -> int:
    env = os.environ.get("NCHHS_THREADS", "")
    try:
        return max(int(env), 1)
    except ValueError:
        return 1


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- trajectory output --------------------------------------------------------
def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def diagnostics_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(dg.DiagnosticsRecord.columns())
    for rec in traj.records:
        w.writerow([_fmt(v) for v in rec.row()])
    return buf.getvalue()


def summary_lines(cfg: SimConfig, traj: Trajectory) -> list[str]:
    """Flat ``key=value`` report of a finished run."""
    if not traj.records:
        return [f"status={traj.status}", f"error={(traj.error or '').replace(chr(10), ' ')}"]
    first, last = traj.records[0], traj.records[-1]
    budget = traj.budget()
    laws = MaterialLaws(cfg.material)
    phi = traj.final.phi
    local = cfg.grid.integrate(laws.local_potential(laws.safe(phi) if laws.eps == 0 else phi))
    items = {
        "status": traj.status,
        "steps": len(traj.taus),
        "t_end": last.t,
        "mass_drift": abs(last.mass - first.mass),
        "energy_initial": first.energy,
        "energy_final": last.energy,
        "entropy_initial": first.entropy,
        "entropy_final": last.entropy,
        "max_budget_net": float(np.max(budget["net"])),
        "max_bound_violation": max(max(r.linf_phi for r in traj.records) - 1.0, 0.0),
        "clamp_count": last.clamp_count,
        "local_energy_final": local,
    }
    if traj.error:
        items["error"] = traj.error.replace("\n", " ")
    return [f"{k}={_fmt(v)}" for k, v in items.items()]


def _write_text(path: Path, text: str, final: bool) -> Path:
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text)
    if final:
        os.replace(tmp, path)
        return path
    return tmp


def fill_holder(traj: Trajectory) -> None:
    """Hoelder exponent of the pressure on every snapshot row."""
    by_t = {s.step: s for s in traj.snapshots}
    for k, rec in enumerate(traj.records):
        snap = by_t.get(k)
        if snap is not None:
            rec.holder_alpha = holder_exponent(traj.grid, snap.pi, HOLDER_ALPHAS)[0]


def write_trajectory(cfg: SimConfig, traj: Trajectory, out: Path, pgm: bool = True) -> list[Path]:
    """Write diagnostics CSV, summary and snapshots below ``out``.

    After a failed run the CSV and summary keep their ``.partial`` suffix.
    """
    out.mkdir(parents=True, exist_ok=True)
    ok = traj.status == "ok"
    g = traj.grid
    written = []
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)
    for s in traj.snapshots:
        for name, values in (("phi", s.phi), ("pi", s.pi), ("mu", s.mu)):
            written.append(write_field(snaps / f"{name}_{s.step:06d}.fld", values, g.lx, g.ly, s.t))
        if pgm:
            written.append(write_pgm(snaps / f"phi_{s.step:06d}.pgm", s.phi))
    written.append(_write_text(out / "diagnostics.csv", diagnostics_csv(traj), ok))
    written.append(_write_text(out / "summary.txt", "\n".join(summary_lines(cfg, traj)) + "\n", ok))
    return written


# -- sweeps -------------------------------------------------------------------
def with_axis(cfg: SimConfig, axis: str, value) -> SimConfig:
    """Copy of ``cfg`` with one swept parameter replaced."""
    if axis == "eps":
        return replace(cfg, material=replace(cfg.material, eps=float(value)))
    if axis == "nu":
        return replace(cfg, solver=replace(cfg.solver, brinkman_nu=float(value)))
    if axis == "tau":
        return replace(cfg, step=replace(cfg.step, tau=float(value), tau_max=float(value)))
    if axis == "grid":
        n = int(value)
        g = cfg.grid
        return replace(cfg, grid=Grid(g.lx, g.ly, n, n, g.boundary_mode))
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {AXES}")


def _common_level(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    while a.shape[0] > b.shape[0]:
        a = restrict(a)
    while b.shape[0] > a.shape[0]:
        b = restrict(b)
    if a.shape != b.shape:
        raise ValueError(f"fields {a.shape} and {b.shape} have no common resolution")
    return a, b


@dataclass
class SweepRow:
    value: float
    status: str
    steps: int
    l2_diff: float      # against the next value
    order: float        # from this and the next difference


@dataclass
class SweepResult:
    axis: str
    rows: list[SweepRow]
    trajectories: list[Trajectory]

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["axis", "value", "status", "steps", "l2_diff_next", "observed_order"])
        for r in self.rows:
            w.writerow([self.axis, _fmt(r.value), r.status, r.steps, _fmt(r.l2_diff), _fmt(r.order)])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"sweep over {self.axis}: {len(self.rows)} runs"]
        for r in self.rows:
            lines.append(f"  {self.axis}={r.value:<10g} status={r.status:<14} "
                         f"diff_next={r.l2_diff:.4e} order={r.order:.3f}")
        return "\n".join(lines)

    @property
    def diffs(self) -> np.ndarray:
        return np.array([r.l2_diff for r in self.rows[:-1]])

    @property
    def orders(self) -> np.ndarray:
        return np.array([r.order for r in self.rows[:-2]])


def sweep(cfg: SimConfig, axis: str, values, threads: int = 1, phi0: np.ndarray | None = None) -> SweepResult:
    """Run the scenario once per value and tabulate consecutive differences at t_end.

    ``l2_diff`` of row k compares runs k and k+1 (on the coarser grid for the
    grid axis); ``order`` of row k is ``log(d_k / d_{k+1}) / log(v_k / v_{k+1})``.
    """
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {AXES}")
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ValueError("a sweep needs at least two values")
    cfgs = [with_axis(cfg, axis, v) for v in values]
    start = None if axis == "grid" else phi0

    trajs = _map(lambda c: run_coupled(c, phi0=start), cfgs, threads)
    finals = [t.final.phi for t in trajs]
    diffs = []
    for k in range(len(values) - 1):
        a, b = _common_level(finals[k], finals[k + 1])
        coarse = cfgs[k] if finals[k].size <= finals[k + 1].size else cfgs[k + 1]
        diffs.append(coarse.grid.l2_norm(a - b))
    rows = []
    for k, v in enumerate(values):
        d = diffs[k] if k < len(diffs) else float("nan")
        order = float("nan")
        if k + 1 < len(diffs) and diffs[k + 1] > 0 and d > 0:
            order = float(np.log(d / diffs[k + 1]) / abs(np.log(values[k] / values[k + 1])))
        rows.append(SweepRow(v, trajs[k].status, len(trajs[k].taus), d, order))
    return SweepResult(axis, rows, trajs)


# -- stability ----------------------------------------------------------------
def default_perturbation(grid: Grid) -> np.ndarray:
    x, y = grid.coords()
    return np.cos(np.pi * x / grid.lx) * np.cos(2 * np.pi * y / grid.ly)


@dataclass
class StabilityResult:
    norm: str
    deltas: list[float]
    ratios: list[float]          # sup_t gap / delta in the selected norm
    gaps: list[dg.StabilityGap]

    @property
    def spread(self) -> float:
        r = np.array(self.ratios)
        return float(r.max() / r.min()) if r.min() > 0 else float("inf")

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "norm", "sup_gap_over_delta", "sup_u_l2", "sup_pi_h1"])
        for d, r, gap in zip(self.deltas, self.ratios, self.gaps):
            w.writerow([_fmt(d), self.norm, _fmt(r), _fmt(float(gap.u_l2.max())),
                        _fmt(float(gap.pi_h1.max()))])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"stability in the {self.norm} norm, spread {self.spread:.4f}"]
        for d, r in zip(self.deltas, self.ratios):
            lines.append(f"  delta={d:<8g} sup gap/delta={r:.6f}")
        return "\n".join(lines)


def stability(cfg: SimConfig, deltas, perturbation: np.ndarray | None = None, threads: int = 1,
              norm: str | None = None) -> StabilityResult:
    """Base run plus runs from ``phi0 + delta * perturbation``.

    The V' norm is used when the viscosity is constant (nu1 == nu2), the
    L2 norm otherwise, unless ``norm`` forces one of them.
    """
    if cfg.snapshot_every <= 0:
        raise ValueError("stability runs need snapshot_every > 0")
    norm = norm or ("vprime" if cfg.material.nu1 == cfg.material.nu2 else "l2")
    if norm not in ("l2", "vprime"):
        raise ValueError(f"unknown norm {norm!r}")
    kernel = KernelOperator(cfg.kernel, cfg.grid)
    phi0 = initial_field(cfg)
    p = default_perturbation(cfg.grid) if perturbation is None else np.asarray(perturbation, float)
    deltas = [float(d) for d in deltas]
    starts = [phi0] + [phi0 + d * p for d in deltas]
    for d, s in zip(deltas, starts[1:]):
        if np.max(np.abs(s)) > 1:
            raise ValueError(f"perturbed initial field leaves [-1, 1] for delta={d}")
    # the CFL step depends on the flow, so pin the step to keep sample times aligned
    fixed = replace(cfg, step=replace(cfg.step, cfl_safety=1.0, tau_max=cfg.step.tau))
    # laws carry a clamp counter, so only the kernel table is shared
    runs = _map(lambda s: run_coupled(fixed, phi0=s, problem=Problem(fixed, kernel=kernel)),
                starts, threads)
    for r in runs:
        if r.status != "ok":
            raise RuntimeError(f"stability run failed: {r.error}")
    gaps = [dg.stability_gap(cfg.grid, runs[0], r) for r in runs[1:]]
    ratios = [float((gp.phi_vprime if norm == "vprime" else gp.phi_l2).max() / d)
              for gp, d in zip(gaps, deltas)]
    return StabilityResult(norm, deltas, ratios, gaps)


# -- offline diagnosis ----------------------------------------------------------
def diagnose(paths, cfg: SimConfig | None = None) -> list[dict]:
    """Recompute field statistics, the Hoelder exponent and, given a config,
    the energy functionals of saved snapshots."""
    out = []
    for path in paths:
        snap = read_field(path)
        nx, ny = snap.shape
        g = Grid(snap.lx, snap.ly, nx, ny)
        f = snap.values
        alpha, quotient = holder_exponent(g, f, HOLDER_ALPHAS)
        row = {"file": str(path), "nx": nx, "ny": ny, "t": snap.t, "min": float(f.min()),
               "max": float(f.max()), "mean": g.mean(f), "l2": g.l2_norm(f),
               "bound_violation": dg.bound_violation(f), "holder_alpha": alpha,
               "holder_quotient": quotient}
        if cfg is not None and np.max(np.abs(f)) <= 1 + 1e-6:
            laws = MaterialLaws(cfg.material)
            kernel = KernelOperator(cfg.kernel, g)
            row["energy"] = dg.free_energy(f, kernel, laws)
            row["entropy"] = dg.entropy(g, f, laws)
            row["phi_functional"] = dg.phi_functional(g, f, kernel, laws)
        out.append(row)
    return out


def diagnose_text(rows: list[dict]) -> str:
    return "".join(" ".join(f"{k}={_fmt(v)}" for k, v in r.items()) + "\n" for r in rows)
