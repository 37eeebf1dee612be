#!/usr/bin/env python3
"""Grid-refinement study for the three main residual families.

Prints one table per family: flat-connection zero-curvature residuals,
rational spectral-parameter residuals, and the plane-wave Lax commutation
defect.  Second-order families should show ratios near 4; the composite
Lax evolution should beat 8 per halving.
"""

import argparse

import numpy as np

from solgeo import cases, solitons, zerocurv
from solgeo import grid as sg


def flat_connection_study(levels, n0):
    print("flat-connection zero-curvature residual")
    print(f"{'n':>6} {'max residual':>14} {'ratio':>8}")
    prev = None
    for lv in range(levels):
        n = n0 * 2**lv + 1
        conn = cases.pure_gauge_connection(cases.default_grid_gauge(n))
        res = zerocurv.zc_residual("mlxii", conn)
        worst = max(float(np.abs(r).max()) for r in res.values())
        ratio = f"{prev / worst:8.2f}" if prev else "       -"
        print(f"{n:>6} {worst:>14.3e} {ratio}")
        prev = worst
    print()


def lambda_study(levels, n0):
    params = {"n1": 1.0, "n3": 0.0, "m1": 0.0, "n4": 1.0}
    print(f"spectral-parameter residual, params {params}")
    print(f"{'n':>6} {'masked max':>14} {'ratio':>8}")
    prev = None
    for lv in range(levels):
        n = n0 * 2**lv
        h = 0.35 / (n - 1)
        g = sg.GridSpec.make(*(sg.Axis(f"xi{i}", n, h) for i in (1, 2, 3, 4)))
        f = zerocurv.lambda_field("sdym_xi", params, g)
        res = zerocurv.lambda_residual(f)
        mask = res.pop("mask")
        worst = max(zerocurv.masked_norms(r, mask)["max"]
                    for r in res.values())
        ratio = f"{prev / worst:8.2f}" if prev else "       -"
        print(f"{n:>6} {worst:>14.3e} {ratio}")
        prev = worst
    print()


def lax_study(levels):
    pw = cases.planewave("zi")
    rep = solitons.lax_refinement_report("zi", pw["callables"], {"lam": 0.3},
                                         levels=levels)
    print("plane-wave Lax commutation defect")
    print(f"{'level':>6} {'defect':>14} {'ratio':>8}")
    for i, d in enumerate(rep["defects"]):
        ratio = f"{rep['ratios'][i-1]:8.2f}" if i else "       -"
        print(f"{i:>6} {d:>14.3e} {ratio}")
    print()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--n0", type=int, default=8)
    args = ap.parse_args()
    flat_connection_study(args.levels, args.n0)
    lambda_study(args.levels, max(args.n0 - 2, 6))
    lax_study(args.levels)


if __name__ == "__main__":
    main()
