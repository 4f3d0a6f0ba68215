"""Finite-length LP thresholds of a graph cover and a code cut from it.

Both ensembles are bisected for the noise level where half the trials fail.
On a short chain the cut code's open boundary helps it a lot; on a long thin
one the gap shrinks to sampling noise (a few hundredths at this trial count).
Numbers are finite-n estimates, not asymptotic thresholds.
"""

from lpsc.experiments import Ensemble, estimate_threshold
from lpsc.graphs import CodeParams

for p in (CodeParams(3, 2, 2, 8), CodeParams(3, 2, 7, 4)):
    row = []
    for ens in (Ensemble("GC", params=p), Ensemble("DerivedSC", params=p, cut=0)):
        th = estimate_threshold(ens, 60, tol=0.02, master_seed=1, certify=False)
        row.append(f"{ens.kind} {th.estimate:.3f} [{th.lo:.3f}, {th.hi:.3f}]")
    print(f"L={p.L} M={p.M} n={(2 * p.L + 1) * p.M}: " + "   ".join(row))
