"""Observed order in tau of the Phi-balance residual of the B-form step.

A fine-step pre-run removes the initial layer; the residual is then measured
over a fixed window for tau, tau/2, ... in several time norms.

    python3 scripts/diffid_order.py [--levels 4] [--t0 0.01]
"""

import argparse

import numpy as np

from nchhs import diagnostics as dg
from nchhs.grid import Grid
from nchhs.kernels import KernelOperator, KernelSpec
from nchhs.laws import MaterialLaws, MaterialParams
from nchhs.stepper import SimState, StepParams, nonlocal_flux, step_b_form


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--t0", type=float, default=0.01)
    ap.add_argument("--window", type=float, default=0.04)
    ap.add_argument("--tau", type=float, default=1e-3)
    args = ap.parse_args()

    g = Grid(1.0, 1.0, 32, 32)
    laws = MaterialLaws(MaterialParams())
    K = KernelOperator(KernelSpec("gaussian", 8.0, 0.1), g)
    x, y = g.coords()
    start = SimState.initial(g, 0.5 * np.cos(np.pi * x) * np.cos(np.pi * y))
    fine = StepParams(tau=1e-5, form="b_form")
    for _ in range(int(round(args.t0 / fine.tau))):
        start = step_b_form(start, fine, K, laws)

    table = []
    for level in range(args.levels):
        tau = args.tau / 2 ** level
        p = StepParams(tau=tau, form="b_form")
        s, res = start, []
        for _ in range(int(round(args.window / tau))):
            new = step_b_form(s, p, K, laws)
            q1 = nonlocal_flux(g, new.phi, K.convolve_grad_faces(new.phi), laws)
            r = dg.diffid_residual(g, laws, s.phi, new.phi, new.info.nonlocal_flux, q1, new.info.conv_flux, tau)
            res.append(abs(r["residual"]))
            s = new
        res = np.array(res)
        table.append((tau, res.max(), res.sum() * tau, res[-1]))
    print(f"{'tau':>10} {'max':>11} {'order':>6} {'L1':>11} {'order':>6} {'final':>11} {'order':>6}")
    for k, row in enumerate(table):
        cells = [f"{row[0]:10.3e}"]
        for j in (1, 2, 3):
            order = np.log2(table[k - 1][j] / row[j]) if k else float("nan")
            cells.append(f"{row[j]:11.4e} {order:6.3f}")
        print(" ".join(cells))


if __name__ == "__main__":
    main()
