"""How close is the optimal stopping region to a single threshold on the no-change posterior?

Solves the dynamic program on small quantized instances for decreasing onset
probabilities and reports the best-threshold misclassification rate of the
first-slot stopping region.
"""

import argparse

from radialqd.dp import DPInstance, backward_induction, threshold_diagnostic
from radialqd.observation import QuantizedModel
from radialqd.state_model import PriorParams

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cost", type=float, default=0.02)
    ap.add_argument("--horizon", type=int, default=20)
    ap.add_argument("--resolution", type=int, default=120)
    ap.add_argument("--rho1", type=float, default=0.5)
    args = ap.parse_args()
    model = QuantizedModel((0.7, 0.3), (0.3, 0.7))
    # sensor placements chosen so exposure depends on the radius level or on the origin
    cases = (([[0.0, 0.0]], [[0.5, 0.0]], 1), ([[0.0, 0.0]], [[1.5, 0.0]], 2),
             ([[0.0, 0.0], [3.0, 0.0]], [[0.5, 0.0]], 1))
    for origins, sensors, rmax in cases:
        tables = {rho: backward_induction(DPInstance(origins, sensors, rmax, PriorParams(rho, args.rho1),
                                                     model), args.cost, args.horizon, args.resolution)
                  for rho in (0.1, 0.01, 0.001)}
        print(f"M={len(origins)} R={rmax}")
        for r in threshold_diagnostic(tables):
            print(f"  rho={r.rho:<6g} misclassification={r.misclassification:.4f} "
                  f"threshold={r.best_threshold:.4f} max|psi|/rho={r.psi_over_rho_max:.3f}")
