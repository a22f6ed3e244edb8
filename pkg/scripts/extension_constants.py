#!/usr/bin/env python3
"""Empirical constants of the level-extension theorem.

Extends a step-2 path to levels 3..5 across several grid refinements of the
same underlying piecewise-linear data and prints the p-variation growth
ratio per level (the constant the theorem bounds by C_{n,p}), plus the
one-level completion norm ratios.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from cocycle.extension import extend_to_level, lift_norm_ratio
from cocycle.paths import p_variation, signature_piecewise_linear


def refine(pts, ts, k):
    newp, newt = [pts[0]], [ts[0]]
    for i in range(len(pts) - 1):
        for j in range(1, k + 1):
            frac = j / k
            newp.append(pts[i] + frac * (pts[i + 1] - pts[i]))
            newt.append(ts[i] + frac * (ts[i + 1] - ts[i]))
    return np.array(newp), np.array(newt)


def main():
    rng = np.random.default_rng(2)
    base_pts = rng.normal(size=(17, 2)).cumsum(axis=0) * 0.4
    base_ts = np.linspace(0.0, 1.0, 17)
    p = 1.5
    print(f"p = {p}")
    print(f"{'refine':>6} {'level':>5} {'|g^n|_pvar / |g|_pvar':>22}")
    for k in (1, 2, 4):
        pts, ts = refine(base_pts, base_ts, k)
        g2 = signature_piecewise_linear(pts, 2, times=ts)
        base_norm = p_variation(g2, p)
        g5, report = extend_to_level(g2, 5, p=p)
        for level, ratio in zip(report.levels, report.pvar_ratios):
            print(f"{k:6d} {level:5d} {ratio:22.6f}")
    sample = signature_piecewise_linear(base_pts, 2, times=base_ts).values[-1]
    print(f"one-level completion norm ratio at the endpoint: {lift_norm_ratio(sample):.4f}")


if __name__ == "__main__":
    main()
