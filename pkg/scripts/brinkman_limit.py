"""Brinkman-to-Darcy study: distance to the Darcy velocity and sqrt(nu)|grad u| per nu and grid.

    python3 scripts/brinkman_limit.py [--grids 32,64,128] [--nus 1e-1,1e-2,1e-3,1e-4]
"""

import argparse

import numpy as np

from nchhs.darcy import korteweg_forcing, solve_brinkman, solve_darcy
from nchhs.grid import Grid
from nchhs.kernels import KernelOperator, KernelSpec
from nchhs.laws import MaterialLaws, MaterialParams


def study(n, nus, amp):
    g = Grid(1.0, 1.0, n, n)
    laws = MaterialLaws(MaterialParams(nu1=1.0, nu2=2.0, eps=0.05))
    K = KernelOperator(KernelSpec("gaussian", 1.0, 0.1), g)
    x, y = g.coords()
    phi = amp * np.tanh((0.3 - np.hypot(x - 0.5, (y - 0.5) * 1.5)) / 0.05)
    mu = laws.potential_d1(phi) - K.convolve(phi)
    _, ud, _ = solve_darcy(g, laws.viscosity(phi), korteweg_forcing(g, phi, mu))
    rows = []
    for nu in nus:
        u, _, rep, system = solve_brinkman(g, phi, mu, nu, laws)
        grad = np.sqrt(nu * system.grad_energy(system.faces_to_unknowns(u)))
        rows.append((nu, g.face_norm(u - ud), grad, rep.iterations))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", default="32,64,128")
    ap.add_argument("--nus", default="1e-1,1e-2,1e-3,1e-4")
    ap.add_argument("--amplitude", type=float, default=0.8)
    args = ap.parse_args()
    nus = [float(v) for v in args.nus.split(",")]
    for n in (int(v) for v in args.grids.split(",")):
        rows = study(n, nus, args.amplitude)
        scaled = [r[2] for r in rows]
        print(f"grid {n}^2  spread of sqrt(nu)|grad u|: {max(scaled) / min(scaled):.2f}x")
        for nu, diff, grad, its in rows:
            print(f"  nu={nu:<8g} |u - u_darcy|={diff:.4e}  sqrt(nu)|grad u|={grad:.4e}  cg={its}")


if __name__ == "__main__":
    main()
