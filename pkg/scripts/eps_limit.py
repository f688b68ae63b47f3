"""Cauchy table for eps -> 0 and the entropy envelope of each run.

    python3 scripts/eps_limit.py [--eps 0.2,0.1,0.05,0.025,0.0125] [--threads N]
"""

import argparse

import numpy as np

from nchhs import experiments as ex
from nchhs.config import parse_config

SCENARIO = """
[domain]
nx = 32
ny = 32
[material]
nu2 = 2.0
[kernel]
strength = 40.0
[stepper]
form = mu_form
tau = 1e-4
t_end = 0.02
[initial]
kind = bubble
amplitude = 0.99
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", default="0.2,0.1,0.05,0.025,0.0125")
    ap.add_argument("--threads", type=int, default=ex.default_threads())
    args = ap.parse_args()
    res = ex.sweep(parse_config(SCENARIO), "eps", [float(v) for v in args.eps.split(",")],
                   threads=args.threads)
    print(res.summary())
    for row, traj in zip(res.rows, res.trajectories):
        s = np.array([r.entropy for r in traj.records])
        print(f"  eps={row.value:<8g} entropy {s[0]:.5f} -> max {s.max():.5f}, final {s[-1]:.5f}")


if __name__ == "__main__":
    main()
