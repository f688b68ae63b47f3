"""Perturbed-initial-data gaps for variable (L2) and constant (V') viscosity.

    python3 scripts/stability_study.py [--deltas 1e-2,1e-3,1e-4]
"""

import argparse

from nchhs import experiments as ex
from nchhs.config import parse_config

SCENARIO = """
[domain]
nx = 32
ny = 32
[material]
nu1 = 1.0
nu2 = {nu2}
[kernel]
strength = 40.0
[stepper]
tau = 2e-4
t_end = 0.02
snapshot_every = 5
[initial]
amplitude = 0.3
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--deltas", default="1e-2,1e-3,1e-4")
    ap.add_argument("--threads", type=int, default=ex.default_threads())
    args = ap.parse_args()
    deltas = [float(v) for v in args.deltas.split(",")]
    for nu2 in (3.0, 1.0):
        res = ex.stability(parse_config(SCENARIO.format(nu2=nu2)), deltas, threads=args.threads)
        print(f"nu2={nu2}: " + res.summary())


if __name__ == "__main__":
    main()
