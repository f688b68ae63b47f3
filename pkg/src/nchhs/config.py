"""INI-style run configuration.

Every key has a default (listed in ``DEFAULTS`` and the README), so an empty
text is a valid configuration.  ``parse_config`` reports all problems at
once, each tagged with its section and line.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import Grid
from .kernels import KernelSpec
from .laws import MaterialParams
from .stepper import StepParams

DEFAULTS: dict[str, dict[str, object]] = {
    "run": {"seed": 0, "output_dir": "out"},
    "domain": {"lx": 1.0, "ly": 1.0, "nx": 64, "ny": 64, "boundary_mode": "neumann"},
    "material": {"theta": 1.0, "theta0": 1.5, "nu1": 1.0, "nu2": 1.0, "eps": 0.0},
    "kernel": {"family": "gaussian", "strength": 1.0, "width": 0.1},
    "stepper": {"tau": 1e-3, "form": "b_form", "convection": "upwind", "cfl_safety": 0.5,
                "tau_max": 0.0, "t_end": 0.1, "snapshot_every": 0, "picard_max": 5,
                "picard_tol": 1e-10, "solver_tol": 1e-12},
    "solver": {"rel_tol": 1e-10, "max_iter": 5000, "brinkman_nu": 0.0, "brinkman_tol": 1e-10},
    "initial": {"kind": "spinodal", "value": 0.0, "amplitude": 0.05, "center_x": 0.5,
                "center_y": 0.5, "radius": 0.25, "smoothing": 0.05, "path": ""},
}

CHOICES = {
    ("domain", "boundary_mode"): ("neumann", "periodic"),
    ("kernel", "family"): ("gaussian", "newtonian2d"),
    ("stepper", "form"): ("mu_form", "b_form"),
    ("stepper", "convection"): ("upwind", "centered"),
    ("initial", "kind"): ("uniform", "spinodal", "bubble", "file"),
}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class SolverSettings:
    rel_tol: float = 1e-10
    max_iter: int = 5000
    brinkman_nu: float = 0.0
    brinkman_tol: float = 1e-10


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "spinodal"
    value: float = 0.0
    amplitude: float = 0.05
    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.25
    smoothing: float = 0.05
    path: str = ""


@dataclass
class SimConfig:
    grid: Grid = field(default_factory=lambda: Grid(1.0, 1.0, 64, 64))
    material: MaterialParams = field(default_factory=MaterialParams)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    step: StepParams = field(default_factory=lambda: StepParams(tau=1e-3, form="b_form"))
    t_end: float = 0.1
    snapshot_every: int = 0
    solver: SolverSettings = field(default_factory=SolverSettings)
    initial: InitialCondition = field(default_factory=InitialCondition)
    output_dir: str = "out"
    seed: int = 0


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    lines, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            lines.setdefault((section, ""), no)
        elif section and "=" in s:
            lines.setdefault((section, s.split("=", 1)[0].strip().lower()), no)
    return lines


def _convert(raw: str, default):
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        v = float(raw)
        if not np.isfinite(v):
            raise ValueError("not finite")
        return v
    return raw


def parse_config(text: str, base_dir: str | Path | None = None) -> SimConfig:
    """Parse and validate; raises :class:`ConfigError` listing every violation."""
    lines = _line_numbers(text)
    errors: list[str] = []

    def where(section, key=""):
        no = lines.get((section, key)) or lines.get((section, ""))
        return f"[{section}]{' ' + key if key else ''} (line {no})" if no else f"[{section}] {key}"

    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                   comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError([f"syntax: {err}"]) from None

    vals = {s: dict(d) for s, d in DEFAULTS.items()}
    for section in cp.sections():
        sec = section.lower()
        if sec not in DEFAULTS:
            errors.append(f"{where(sec)}: unknown section")
            continue
        for key, raw in cp.items(section):
            if key not in DEFAULTS[sec]:
                errors.append(f"{where(sec, key)}: unknown key {key!r}")
                continue
            default = DEFAULTS[sec][key]
            try:
                v = _convert(raw.strip(), default)
            except ValueError:
                errors.append(f"{where(sec, key)}: expected {type(default).__name__}, got {raw!r}")
                continue
            if (sec, key) in CHOICES and v not in CHOICES[(sec, key)]:
                errors.append(f"{where(sec, key)}: {v!r} not in {CHOICES[(sec, key)]}")
                continue
            vals[sec][key] = v

    d, m, k, st, so, ic = (vals[s] for s in ("domain", "material", "kernel", "stepper", "solver", "initial"))
    if d["nx"] < 8 or d["ny"] < 8:
        errors.append(f"{where('domain', 'nx' if d['nx'] < 8 else 'ny')}: nx, ny >= 8 required")
    if not (d["lx"] > 0 and d["ly"] > 0):
        errors.append(f"{where('domain', 'lx')}: lx, ly > 0 required")

    try:
        MaterialParams(**m)
    except ValueError as err:
        for msg in str(err).split("; "):
            key = next((kk for kk in ("theta0", "theta", "nu1", "eps") if msg.startswith(kk)), "")
            errors.append(f"{where('material', key)}: {msg}")

    if not k["strength"] > 0:
        errors.append(f"{where('kernel', 'strength')}: strength > 0 required")
    if k["family"] == "gaussian" and not k["width"] > 0:
        errors.append(f"{where('kernel', 'width')}: width > 0 required")

    if not st["tau"] > 0:
        errors.append(f"{where('stepper', 'tau')}: tau > 0 required")
    if not st["t_end"] > 0:
        errors.append(f"{where('stepper', 't_end')}: t_end > 0 required")
    if not 0 < st["cfl_safety"] <= 1:
        errors.append(f"{where('stepper', 'cfl_safety')}: cfl_safety in (0, 1] required")
    if st["snapshot_every"] < 0 or st["picard_max"] < 1:
        errors.append(f"{where('stepper', 'snapshot_every')}: snapshot_every >= 0 and picard_max >= 1 required")
    if not 1e-14 <= so["rel_tol"] <= 1e-4:
        errors.append(f"{where('solver', 'rel_tol')}: rel_tol in [1e-14, 1e-4] required")
    if so["max_iter"] < 1:
        errors.append(f"{where('solver', 'max_iter')}: max_iter >= 1 required")
    if so["brinkman_nu"] < 0:
        errors.append(f"{where('solver', 'brinkman_nu')}: brinkman_nu >= 0 required")

    if ic["amplitude"] < 0 or ic["amplitude"] > 1 - 1e-3:
        errors.append(f"{where('initial', 'amplitude')}: amplitude in [0, 1 - 1e-3] required")
    if ic["kind"] in ("uniform", "spinodal") and abs(ic["value"]) + (ic["kind"] == "spinodal") * ic["amplitude"] > 1:
        errors.append(f"{where('initial', 'value')}: initial values must stay in [-1, 1]")
    if ic["kind"] == "bubble" and not (ic["radius"] > 0 and ic["smoothing"] > 0):
        errors.append(f"{where('initial', 'radius')}: radius, smoothing > 0 required")
    path = ic["path"]
    if ic["kind"] == "file":
        p = Path(path) if Path(path).is_absolute() or base_dir is None else Path(base_dir) / path
        if not path or not p.is_file():
            errors.append(f"{where('initial', 'path')}: file {path!r} not found")
        path = str(p)

    if errors:
        raise ConfigError(errors)

    tau_max = st["tau_max"] if st["tau_max"] > 0 else None
    return SimConfig(
        grid=Grid(d["lx"], d["ly"], d["nx"], d["ny"], d["boundary_mode"]),
        material=MaterialParams(**m),
        kernel=KernelSpec(k["family"], k["strength"], k["width"]),
        step=StepParams(tau=st["tau"], form=st["form"], convection=st["convection"],
                        cfl_safety=st["cfl_safety"], tau_max=tau_max, solver_tol=st["solver_tol"],
                        picard_max=st["picard_max"], picard_tol=st["picard_tol"]),
        t_end=st["t_end"], snapshot_every=st["snapshot_every"],
        solver=SolverSettings(so["rel_tol"], so["max_iter"], so["brinkman_nu"], so["brinkman_tol"]),
        initial=InitialCondition(ic["kind"], ic["value"], ic["amplitude"],
                                 (ic["center_x"], ic["center_y"]), ic["radius"], ic["smoothing"], path),
        output_dir=vals["run"]["output_dir"], seed=vals["run"]["seed"],
    )


def load_config(path) -> SimConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ConfigError([f"cannot read {path}: {err.strerror}"]) from None
    return parse_config(text, base_dir=p.parent)
