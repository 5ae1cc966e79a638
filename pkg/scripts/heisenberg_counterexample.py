"""Probe the McShane extension of sqrt|t| on the Heisenberg group at the origin.

Every horizontal directional derivative vanishes, yet the vertical Pansu
ratio stays at 1, and difference quotients along translated lines do not
settle. Prints the three pieces of evidence.
"""

import argparse

import numpy as np

from carnot.analysis import corpus, directional_derivative, pansu_quotient, regularity_defect


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--directions", type=int, default=8)
    args = ap.parse_args()
    f = corpus("heis-sqrt")
    print(f"Lipschitz constant {f.lipschitz}")
    origin = np.zeros(3)
    for k in range(args.directions):
        a = k * np.pi / (args.directions / 2)
        d = directional_derivative(f, origin, [np.cos(a), np.sin(a)])
        print(f"angle {a:6.3f}  Ef(0) = {d.value: .3e}  converged={d.converged}")
    scales = (1e-1, 1e-2, 1e-3)
    p = pansu_quotient(f, origin, scales=scales, directions=[[0.0, 0.0, 1.0]])
    for r, q in zip(scales, p.defects):
        print(f"Pansu ratio at h = (0, 0, {r:g}^2): {q:.6f}")
    reg = regularity_defect(f, origin, [1.0, 0.0], extra_u=[[0.0, 0.0, 1.0]])
    print("regularity defects:", ", ".join(f"{d:.4f}" for d in reg.defects), reg.verdict)


if __name__ == "__main__":
    main()
